#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dopc/types.hpp"

namespace dopc::slang {

struct Loc {
    int line = 0;
    int col = 0;
};

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
    enum class Kind { Var, Const, Index, Deref, Unary, Binary, Call, SignedCast };
    Kind kind;
    Loc loc;
    TypeTag type;  // resolved by the checker

    std::string name;          // Var, Index (array), Call (proc)
    uint64_t value = 0;        // Const
    TypeTag elem;              // Index / Deref element type
    ExprPtr a, b;              // operands; Index/Deref use a as the index/address
    char unop = 0;             // '-' or '!'
    std::string binop;         // + - * == != >= < & |
    std::vector<ExprPtr> args; // Call
};

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;

struct VarDecl {
    TypeTag type;
    std::string name;
    bool input = false;
    bool is_array = false;
    uint64_t array_len = 0;              // may come from the initializer
    std::optional<uint64_t> init;
    std::vector<uint8_t> array_init;     // raw little-endian element bytes
    bool const_initialized = false;      // drives the automatic <name>_len constant
    Loc loc;
};

struct Stmt {
    enum class Kind {
        Decl, Assign, If, While, For, RepeatUntil, Loop, Break, Continue,
        CallStmt, Return, InlineAsm
    };
    Kind kind;
    Loc loc;

    VarDecl decl;                       // Decl
    ExprPtr decl_init;                  // Decl: non-constant local initializer
    ExprPtr lhs, rhs;                   // Assign
    ExprPtr cond;                       // If / While / For / RepeatUntil
    StmtPtr init, step;                 // For
    std::vector<StmtPtr> body;          // If-then / loop bodies
    std::vector<StmtPtr> else_body;     // If
    uint64_t maxiter = 0;               // loop annotation; 0 = none
    ExprPtr expr;                       // CallStmt / Return (may be null)
    std::string asm_text;               // InlineAsm
};

struct ProcDecl {
    std::string name;
    std::optional<TypeTag> return_type;
    std::vector<std::pair<TypeTag, std::string>> params;
    std::vector<StmtPtr> body;
    Loc loc;
};

struct PayloadAst {
    std::vector<VarDecl> globals;
    std::vector<ProcDecl> procedures;
    std::string entry = "main";
};

}  // namespace dopc::slang
