#pragma once

// Direct tree-walking evaluation of a payload AST. This is the oracle the
// compiler's output is checked against; it shares no code with the IR
// interpreter or any compilation path.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dopc/slang/ast.hpp"

namespace testsupport {

using dopc::TypeKind;
using dopc::TypeTag;
using dopc::mask_width;
namespace slang = dopc::slang;

struct AstEnv {
    int addr_width = 4;
    std::map<std::string, uint64_t> scalars;
    std::map<std::string, std::vector<uint64_t>> arrays;
    std::map<uint64_t, uint8_t> memory;  // byte map for mem<T> accesses
    uint64_t fuel = 10000000;

    uint64_t mem_read(uint64_t addr, int width) const {
        uint64_t v = 0;
        for (int i = width - 1; i >= 0; i--) {
            auto it = memory.find(addr + i);
            v = (v << 8) | (it == memory.end() ? 0 : it->second);
        }
        return v;
    }
    void mem_write(uint64_t addr, int width, uint64_t v) {
        for (int i = 0; i < width; i++) memory[addr + i] = static_cast<uint8_t>(v >> (8 * i));
    }
};

class AstEval {
  public:
    AstEval(const slang::PayloadAst& ast, AstEnv& env) : ast_(ast), env_(env) {
        for (const auto& p : ast.procedures) procs_[p.name] = &p;
        for (const auto& g : ast.globals) declare(g);
        env_.scalars["addr_size"] = static_cast<uint64_t>(env_.addr_width);
    }

    void run() {
        Frame f;
        exec_block(procs_.at(ast_.entry)->body, f);
    }

  private:
    struct Frame {
        std::map<std::string, uint64_t> locals;
        std::map<std::string, std::vector<uint64_t>> local_arrays;
        bool returned = false;
        uint64_t ret = 0;
    };
    enum class Flow { Normal, Break, Continue };

    int width(const TypeTag& t) const {
        return t.kind == TypeKind::Addr ? env_.addr_width : t.width_bytes;
    }

    void declare(const slang::VarDecl& d) {
        if (d.is_array) {
            std::vector<uint64_t> vals(d.array_len, 0);
            int w = width(d.type);
            for (uint64_t i = 0; i < d.array_len && i * w < d.array_init.size(); i++) {
                uint64_t v = 0;
                for (int b = w - 1; b >= 0; b--) {
                    size_t k = i * w + b;
                    v = (v << 8) | (k < d.array_init.size() ? d.array_init[k] : 0);
                }
                vals[i] = v;
            }
            env_.arrays[d.name] = vals;
            if (d.const_initialized) env_.scalars[d.name + "_len"] = d.array_len;
        } else {
            // inputs are pre-seeded by the fixture; keep their value
            if (!d.input || !env_.scalars.count(d.name))
                env_.scalars[d.name] = d.init.value_or(0);
        }
    }

    uint64_t* scalar_slot(const std::string& n, Frame& f) {
        if (auto it = f.locals.find(n); it != f.locals.end()) return &it->second;
        if (auto it = env_.scalars.find(n); it != env_.scalars.end()) return &it->second;
        return nullptr;
    }
    std::vector<uint64_t>* array_slot(const std::string& n, Frame& f) {
        if (auto it = f.local_arrays.find(n); it != f.local_arrays.end()) return &it->second;
        if (auto it = env_.arrays.find(n); it != env_.arrays.end()) return &it->second;
        return nullptr;
    }

    uint64_t eval(const slang::Expr& e, Frame& f) {
        using K = slang::Expr::Kind;
        int w = width(e.type);
        switch (e.kind) {
            case K::Const:
                return e.value;
            case K::Var: {
                auto* s = scalar_slot(e.name, f);
                if (!s) throw std::runtime_error("oracle: unknown scalar " + e.name);
                return *s;
            }
            case K::Index: {
                auto* a = array_slot(e.name, f);
                if (!a) throw std::runtime_error("oracle: unknown array " + e.name);
                uint64_t i = eval(*e.a, f);
                if (i >= a->size()) throw std::runtime_error("oracle: index out of range");
                return (*a)[i];
            }
            case K::Deref:
                return env_.mem_read(eval(*e.a, f), width(e.elem));
            case K::Unary: {
                uint64_t v = eval(*e.a, f);
                return mask_width(e.unop == '-' ? ~v + 1 : (v == 0 ? 1 : 0), w);
            }
            case K::SignedCast: {
                uint64_t v = eval(*e.a, f);
                return mask_width(v + (uint64_t{1} << (8 * w - 1)), w);
            }
            case K::Binary: {
                uint64_t a = mask_width(eval(*e.a, f), width(e.a->type));
                uint64_t b = mask_width(eval(*e.b, f), width(e.b->type));
                const std::string& op = e.binop;
                if (op == "+") return mask_width(a + b, w);
                if (op == "-") return mask_width(a - b, w);
                if (op == "*") return mask_width(a * b, w);
                if (op == "&") return a & b;
                if (op == "|") return a | b;
                if (op == "==") return a == b;
                if (op == "!=") return a != b;
                if (op == ">=") return a >= b;
                if (op == "<") return a < b;
                throw std::runtime_error("oracle: bad binop");
            }
            case K::Call:
                return call(e, f);
        }
        return 0;
    }

    uint64_t call(const slang::Expr& e, Frame& caller) {
        const auto* p = procs_.at(e.name);
        Frame f;
        for (size_t i = 0; i < p->params.size(); i++)
            f.locals[p->params[i].second] =
                mask_width(eval(*e.args[i], caller), width(p->params[i].first));
        exec_block(p->body, f);
        return f.ret;
    }

    Flow exec_block(const std::vector<slang::StmtPtr>& body, Frame& f) {
        for (const auto& s : body) {
            Flow fl = exec(*s, f);
            if (f.returned) return Flow::Normal;
            if (fl != Flow::Normal) return fl;
        }
        return Flow::Normal;
    }

    Flow exec(const slang::Stmt& s, Frame& f) {
        using K = slang::Stmt::Kind;
        if (env_.fuel-- == 0) throw std::runtime_error("oracle: fuel exhausted");
        switch (s.kind) {
            case K::Decl:
                if (s.decl.is_array) {
                    slang::VarDecl d = s.decl;
                    std::vector<uint64_t> vals(d.array_len, 0);
                    int w = width(d.type);
                    for (uint64_t i = 0; i < d.array_len && i * w < d.array_init.size(); i++) {
                        uint64_t v = 0;
                        for (int b = w - 1; b >= 0; b--) {
                            size_t k = i * w + b;
                            v = (v << 8) | (k < d.array_init.size() ? d.array_init[k] : 0);
                        }
                        vals[i] = v;
                    }
                    f.local_arrays[s.decl.name] = vals;
                    if (s.decl.const_initialized)
                        f.locals[s.decl.name + "_len"] = s.decl.array_len;
                } else {
                    f.locals[s.decl.name] = s.decl.init.value_or(0);
                }
                return Flow::Normal;
            case K::Assign: {
                uint64_t v = eval(*s.rhs, f);
                assign(*s.lhs, v, f);
                return Flow::Normal;
            }
            case K::If: {
                if (mask_width(eval(*s.cond, f), width(s.cond->type)))
                    return exec_block(s.body, f);
                return exec_block(s.else_body, f);
            }
            case K::While:
                while (mask_width(eval(*s.cond, f), width(s.cond->type))) {
                    if (env_.fuel-- == 0) throw std::runtime_error("oracle: fuel exhausted");
                    Flow fl = exec_block(s.body, f);
                    if (f.returned) return Flow::Normal;
                    if (fl == Flow::Break) break;
                }
                return Flow::Normal;
            case K::For: {
                if (s.init) exec(*s.init, f);
                while (!s.cond || mask_width(eval(*s.cond, f), width(s.cond->type))) {
                    if (env_.fuel-- == 0) throw std::runtime_error("oracle: fuel exhausted");
                    Flow fl = exec_block(s.body, f);
                    if (f.returned) return Flow::Normal;
                    if (fl == Flow::Break) break;
                    if (s.step) exec(*s.step, f);
                }
                return Flow::Normal;
            }
            case K::RepeatUntil:
                for (;;) {
                    if (env_.fuel-- == 0) throw std::runtime_error("oracle: fuel exhausted");
                    Flow fl = exec_block(s.body, f);
                    if (f.returned) return Flow::Normal;
                    if (fl == Flow::Break) break;
                    if (mask_width(eval(*s.cond, f), width(s.cond->type))) break;
                }
                return Flow::Normal;
            case K::Loop:
                for (;;) {
                    if (env_.fuel-- == 0) throw std::runtime_error("oracle: fuel exhausted");
                    Flow fl = exec_block(s.body, f);
                    if (f.returned) return Flow::Normal;
                    if (fl == Flow::Break) break;
                }
                return Flow::Normal;
            case K::Break:
                return Flow::Break;
            case K::Continue:
                return Flow::Continue;
            case K::CallStmt:
                eval(*s.expr, f);
                return Flow::Normal;
            case K::Return:
                if (s.expr) f.ret = eval(*s.expr, f);
                f.returned = true;
                return Flow::Normal;
            case K::InlineAsm:
                throw std::runtime_error("oracle: inline asm not supported");
        }
        return Flow::Normal;
    }

    void assign(const slang::Expr& lhs, uint64_t v, Frame& f) {
        using K = slang::Expr::Kind;
        if (lhs.kind == K::Var) {
            auto* s = scalar_slot(lhs.name, f);
            if (!s) throw std::runtime_error("oracle: unknown scalar " + lhs.name);
            *s = mask_width(v, width(lhs.type));
            return;
        }
        if (lhs.kind == K::Index) {
            auto* a = array_slot(lhs.name, f);
            if (!a) throw std::runtime_error("oracle: unknown array " + lhs.name);
            uint64_t i = eval(*lhs.a, f);
            if (i >= a->size()) throw std::runtime_error("oracle: index out of range");
            (*a)[i] = mask_width(v, width(lhs.elem));
            return;
        }
        env_.mem_write(eval(*lhs.a, f), width(lhs.elem), v);
    }

    const slang::PayloadAst& ast_;
    AstEnv& env_;
    std::map<std::string, const slang::ProcDecl*> procs_;
};

inline void eval_payload(const slang::PayloadAst& ast, AstEnv& env) {
    AstEval(ast, env).run();
}

}  // namespace testsupport
