#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dopc/types.hpp"

namespace dopc::ir {

// Operand of one IR instruction. Variable and label names may carry the `%`
// macro sigil; `name + offset` addresses a cell inside an array or table.
struct Operand {
    enum class Kind { Var, Imm, Label, AddrOf, MacroExpr, Leak };

    Kind kind = Kind::Var;
    std::string name;     // Var / Label / AddrOf
    int64_t offset = 0;   // Var / AddrOf: byte offset against the symbol
    uint64_t imm = 0;     // Imm
    std::string expr;     // MacroExpr: body of an unexpanded $( ... )

    static Operand var(std::string n, int64_t off = 0) { return {Kind::Var, std::move(n), off, 0, {}}; }
    static Operand imm_(uint64_t v) { return {Kind::Imm, {}, 0, v, {}}; }
    static Operand label(std::string n) { return {Kind::Label, std::move(n), 0, 0, {}}; }
    static Operand addr_of(std::string n, int64_t off = 0) { return {Kind::AddrOf, std::move(n), off, 0, {}}; }
    static Operand leak(std::string n, int64_t off = 0) { return {Kind::Leak, std::move(n), off, 0, {}}; }

    bool operator==(const Operand&) const = default;
    std::string to_string() const;
};

struct Instruction {
    std::string opcode;   // base name without width suffix, e.g. "mov"
    TypeTag width;        // from the mandatory suffix; widthless ops use int32
    bool widthless = false;
    std::vector<Operand> operands;
    int line = 0;

    std::string mnemonic() const;  // "mov32", "goto", ...
    std::string to_string() const;
};

struct LabelDef {
    std::string name;
    int line = 0;
};

struct VarDecl {
    TypeTag type;
    std::string name;
    uint64_t array_len = 0;              // 0 = scalar
    std::optional<uint64_t> init;        // scalar initial value
    std::optional<std::string> init_sym;   // `= &name`: seeded with that symbol's address
    std::vector<uint8_t> array_init;     // raw little-endian bytes, may be shorter than the array
    std::optional<std::string> init_expr;  // unexpanded $( ... ) initializer
    bool once = false;                   // %once: emitted once per recipe
    bool input = false;                  // value bound at concretization (leak)
    int line = 0;

    std::string to_string() const;
};

// Lookup table materialized by a named generator (dectab256, negtab256, ...).
struct TableDecl {
    std::string name;       // symbol, usually %-sigiled
    std::string generator;
    int line = 0;
};

// External symbol resolved against the target descriptor's anchors.
struct ExternDecl {
    std::string name;
    int line = 0;
};

// Compiler directive; opaque to the interpreter, consumed by the data-view
// switch. Only .advance_pc and .packet_grow exist.
struct Directive {
    std::string name;
    uint64_t value = 0;
    int line = 0;
};

// Loop-bound hint for the protocol generator: the label names the loop header.
struct MaxIterAnnot {
    std::string label;
    uint64_t bound = 0;
    int line = 0;
};

using Item = std::variant<Instruction, LabelDef, VarDecl, TableDecl, ExternDecl, Directive, MaxIterAnnot>;

struct AsmProgram {
    std::vector<Item> items;

    const VarDecl* find_decl(const std::string& name) const;
    bool defines_label(const std::string& name) const;
    std::string to_string() const;
};

// ---- opcode signature table ------------------------------------------------

enum class OperandSlot {
    Cell,        // variable only
    CellOrImm,   // variable, immediate or &symbol
    Label,
};

struct OpSignature {
    std::string base;
    bool widthless = false;
    bool goto_class = false;  // weight-10 class for plan selection
    std::vector<OperandSlot> slots;
};

// Core table; returns nullptr for unknown opcodes.
const OpSignature* find_signature(const std::string& base);

// Targets may register extra raw opcodes (from gadget definitions). These live
// in a registry object so concurrent compilations do not share state.
class SignatureRegistry {
  public:
    const OpSignature* find(const std::string& base) const;
    void add(OpSignature sig);

  private:
    std::map<std::string, OpSignature> extra_;
};

// Splits "mov32" into ("mov", width). Widthless ops ("goto") keep int32.
// Returns false for unknown opcode or bad width suffix.
bool split_opcode(const std::string& mnemonic, const SignatureRegistry* reg,
                  std::string& base, TypeTag& width, const OpSignature** sig);

}  // namespace dopc::ir
