#include "dopc/slang/compile.hpp"

#include <functional>
#include <map>
#include <set>

#include "dopc/ir/parse.hpp"

namespace dopc::slang {

using ir::AsmProgram;
using ir::Instruction;
using ir::Operand;

namespace {

struct Compiler {
    const PayloadAst& ast;
    TypeTag addr;
    AsmProgram out;
    std::map<std::string, const ProcDecl*> procs;

    // name mapping for the current inlining context: source name -> IR symbol
    std::map<std::string, std::string> rename;
    std::string scope_prefix;  // "" for the entry, "min3.1." for inlined calls
    int inline_count = 0;
    int label_count = 0;
    int temp_count = 0;
    std::set<std::string> declared_temps;
    // per-statement temp pool: width -> temps already reused this statement
    std::map<int, std::vector<std::string>> pool;
    std::map<int, size_t> pool_used;

    std::set<std::string> used_names;

    struct LoopCtx {
        std::string break_label;
        std::string continue_label;
    };
    std::vector<LoopCtx> loops;

    explicit Compiler(const PayloadAst& a, TypeTag w) : ast(a), addr(w) {
        for (const auto& p : a.procedures) procs[p.name] = &p;
    }

    [[noreturn]] void fail(Loc loc, const std::string& m) {
        throw Error(Stage::Compile, m, loc.line, loc.col);
    }

    TypeTag resolve(TypeTag t) const {
        if (t.kind == TypeKind::Addr) return TypeTag{TypeKind::Addr, addr.width_bytes};
        return t;
    }

    std::string fresh_label(const std::string& hint) {
        return hint + "." + std::to_string(label_count++);
    }

    void emit(Instruction ins) { out.items.push_back(std::move(ins)); }
    void emit_label(const std::string& l) { out.items.push_back(ir::LabelDef{l, 0}); }

    void op2(const std::string& opcode, TypeTag w, Operand a, Operand b) {
        emit(Instruction{opcode, resolve(w), false, {std::move(a), std::move(b)}, 0});
    }
    void op1(const std::string& opcode, TypeTag w, Operand a) {
        emit(Instruction{opcode, resolve(w), false, {std::move(a)}, 0});
    }

    // ---- declarations ----

    void emit_decl(const VarDecl& d, const std::string& ir_name) {
        ir::VarDecl v;
        v.type = resolve(d.type);
        v.name = ir_name;
        v.array_len = d.is_array ? d.array_len : 0;
        v.init = d.init;
        v.array_init = d.array_init;
        v.input = d.input;
        out.items.push_back(v);
        if (d.const_initialized) {
            ir::VarDecl len;
            len.type = TypeTag::int32_();
            len.name = ir_name + "_len";
            len.init = d.array_len;
            out.items.push_back(len);
        }
    }

    // ---- temporaries (single-assignment pool, reset per statement) ----

    std::map<int, size_t> pool_floor;

    void reset_pool() { pool_used = pool_floor; }

    Operand temp(TypeTag t) {
        t = resolve(t);
        int w = t.width_bytes;
        size_t used = pool_used[w]++;
        auto& names = pool[w];
        if (used < names.size()) return Operand::var(names[used]);
        std::string name = "%t" + std::to_string(temp_count++);
        names.push_back(name);
        ir::VarDecl d;
        d.type = t;
        d.name = name;
        out.items.push_back(d);
        return Operand::var(name);
    }

    // ---- expressions ----

    std::string sym(const std::string& source_name) const {
        auto it = rename.find(source_name);
        return it != rename.end() ? it->second : source_name;
    }

    bool references(const Expr& e, const std::string& ir_name) const {
        if ((e.kind == Expr::Kind::Var || e.kind == Expr::Kind::Index) && sym(e.name) == ir_name)
            return true;
        if (e.a && references(*e.a, ir_name)) return true;
        if (e.b && references(*e.b, ir_name)) return true;
        for (const auto& a : e.args)
            if (references(*a, ir_name)) return true;
        return false;
    }

    static const char* binop_opcode(const std::string& op) {
        if (op == "+") return "add";
        if (op == "-") return "sub";
        if (op == "*") return "mul";
        if (op == "&") return "and";
        if (op == "|") return "or";
        if (op == "==") return "eq";
        if (op == "!=") return "neq";
        if (op == ">=") return "gte";
        if (op == "<") return "lt";
        return nullptr;
    }

    // loads `src` (width from) into `dst` (width to), zero-extending upward
    void emit_widen(Operand dst, TypeTag to, Operand src, TypeTag from) {
        to = resolve(to);
        from = resolve(from);
        if (src.kind == Operand::Kind::Imm || from.width_bytes >= to.width_bytes) {
            op2("mov", to, std::move(dst), std::move(src));
            return;
        }
        std::string conv = "mov" + std::to_string(from.width_bytes * 8) + "to" +
                           std::to_string(to.width_bytes * 8);
        emit(Instruction{conv, TypeTag::int32_(), true, {std::move(dst), std::move(src)}, 0});
    }

    // evaluates e as an operand of the given width, materializing at most one op
    Operand eval_operand(const Expr& e, TypeTag want) {
        if (e.kind == Expr::Kind::Const) return Operand::imm_(mask_width(e.value, resolve(want).width_bytes));
        if (e.kind == Expr::Kind::Var && resolve(e.type).width_bytes >= resolve(want).width_bytes)
            return Operand::var(sym(e.name));
        // constant-indexed array cells address directly as symbol+offset
        if (e.kind == Expr::Kind::Index && e.a->kind == Expr::Kind::Const &&
            resolve(e.elem).width_bytes >= resolve(want).width_bytes)
            return Operand::var(sym(e.name),
                                static_cast<int64_t>(e.a->value) * resolve(e.elem).width_bytes);
        Operand t = temp(want);
        eval_into(t, want, e);
        return t;
    }

    // computes e into dst at width `want`
    void eval_into(const Operand& dst, TypeTag want, const Expr& e) {
        want = resolve(want);
        switch (e.kind) {
            case Expr::Kind::Const:
                op2("mov", want, dst, Operand::imm_(mask_width(e.value, want.width_bytes)));
                return;
            case Expr::Kind::Var: {
                Operand src = Operand::var(sym(e.name));
                if (src == dst) return;
                emit_widen(dst, want, src, e.type);
                return;
            }
            case Expr::Kind::Index:
            case Expr::Kind::Deref: {
                TypeTag elem = resolve(e.elem);
                if (e.kind == Expr::Kind::Index && e.a->kind == Expr::Kind::Const) {
                    Operand cell = Operand::var(
                        sym(e.name), static_cast<int64_t>(e.a->value) * elem.width_bytes);
                    emit_widen(dst, want, cell, elem);
                    return;
                }
                Operand p = address_of(e);
                if (elem.width_bytes == want.width_bytes) {
                    op2("load", elem, dst, p);
                } else {
                    Operand v = temp(elem);
                    op2("load", elem, v, p);
                    emit_widen(dst, want, v, elem);
                }
                return;
            }
            case Expr::Kind::Unary: {
                eval_into(dst, want, *e.a);
                op1(e.unop == '-' ? "neg" : "not", want, dst);
                return;
            }
            case Expr::Kind::SignedCast: {
                // bias flip: unsigned comparisons on biased values order signed
                eval_into(dst, want, *e.a);
                uint64_t bias = uint64_t{1} << (8 * want.width_bytes - 1);
                op2("add", want, dst, Operand::imm_(bias));
                return;
            }
            case Expr::Kind::Binary: {
                const char* opc = binop_opcode(e.binop);
                TypeTag opw = resolve(e.type);
                bool cmp = e.binop == "==" || e.binop == "!=" || e.binop == ">=" || e.binop == "<";
                if (cmp) opw = resolve(e.a->type.width_bytes >= e.b->type.width_bytes ? e.a->type
                                                                                      : e.b->type);
                Operand acc = dst;
                bool via_temp = references(*e.b, dst.name) || dst.name.empty() ||
                                (cmp && opw.width_bytes != want.width_bytes);
                if (dst.kind != Operand::Kind::Var) via_temp = true;
                if (via_temp) acc = temp(opw);
                // evaluate a compound right operand first: its temporary is
                // settled before the accumulator is touched
                bool rhs_first = e.b->kind == Expr::Kind::Binary ||
                                 e.b->kind == Expr::Kind::Call ||
                                 e.b->kind == Expr::Kind::Unary;
                Operand rhs;
                if (rhs_first) rhs = eval_operand(*e.b, opw);
                eval_into(acc, opw, *e.a);
                if (!rhs_first) rhs = eval_operand(*e.b, opw);
                op2(opc, opw, acc, rhs);
                if (via_temp) emit_widen(dst, want, acc, opw);
                return;
            }
            case Expr::Kind::Call: {
                if (!procs.at(e.name)->return_type)
                    fail(e.loc, "'" + e.name + "' has no return value");
                Operand r = inline_call(e);
                emit_widen(dst, want, r, e.type);
                return;
            }
        }
    }

    // address of an array element or mem<T>[...] cell, in an addr-width temp
    Operand address_of(const Expr& e) {
        TypeTag aw = resolve(TypeTag::addr_());
        Operand p = temp(aw);
        if (e.kind == Expr::Kind::Index) {
            op2("mov", aw, p, Operand::addr_of(sym(e.name)));
            int elemw = resolve(e.elem).width_bytes;
            Operand idx = eval_operand(*e.a, aw);
            if (elemw == 1) {
                // byte arrays never multiply the index by one
                op2("add", aw, p, idx);
            } else {
                Operand scaled = temp(aw);
                if (!(idx == scaled)) op2("mov", aw, scaled, idx);
                op2("mul", aw, scaled, Operand::imm_(elemw));
                op2("add", aw, p, scaled);
            }
            return p;
        }
        // Deref: evaluate the byte address
        eval_into(p, aw, *e.a);
        return p;
    }

    // ---- calls (inlined; the IR has no call/ret) ----

    Operand inline_call(const Expr& e) {
        const ProcDecl* p = procs.at(e.name);
        int instance = ++inline_count;
        std::string prefix = p->name + "." + std::to_string(instance) + ".";

        // parameters become fresh locals assigned at the call site
        std::vector<std::pair<std::string, TypeTag>> params;
        for (size_t i = 0; i < p->params.size(); i++) {
            auto [t, n] = p->params[i];
            std::string ir_name = prefix + n;
            ir::VarDecl d;
            d.type = resolve(t);
            d.name = ir_name;
            out.items.push_back(d);
            eval_into(Operand::var(ir_name), t, *e.args[i]);
            params.emplace_back(n, t);
        }
        std::string ret_name = prefix + "ret";
        if (p->return_type) {
            ir::VarDecl d;
            d.type = resolve(*p->return_type);
            d.name = ret_name;
            out.items.push_back(d);
        }

        auto saved_rename = rename;
        auto saved_prefix = scope_prefix;
        auto saved_loops = std::move(loops);
        auto saved_floor = pool_floor;
        auto saved_used = pool_used;
        pool_floor = pool_used;  // outer temporaries stay live across the body
        loops.clear();
        scope_prefix = prefix;
        for (const auto& [n, t] : params) rename[n] = prefix + n;

        std::string end_label = fresh_label(p->name + ".end");
        ret_label_.push_back({end_label, p->return_type ? ret_name : ""});
        compile_block(p->body);
        emit_label(end_label);
        ret_label_.pop_back();

        rename = std::move(saved_rename);
        scope_prefix = std::move(saved_prefix);
        loops = std::move(saved_loops);
        pool_floor = std::move(saved_floor);
        pool_used = std::move(saved_used);
        return Operand::var(ret_name);
    }

    std::vector<std::pair<std::string, std::string>> ret_label_;  // (end label, ret var)

    // ---- statements ----

    void compile_block(const std::vector<StmtPtr>& body) {
        auto saved = rename;
        for (const auto& s : body) compile_stmt(*s);
        rename = std::move(saved);
    }

    void compile_stmt(const Stmt& s) {
        reset_pool();
        switch (s.kind) {
            case Stmt::Kind::Decl: {
                std::string ir_name = scope_prefix + s.decl.name;
                while (used_names.count(ir_name)) ir_name += ".b";
                used_names.insert(ir_name);
                rename[s.decl.name] = ir_name;
                // locals re-initialize each time execution passes the
                // declaration (it may sit inside a loop body)
                VarDecl plain = s.decl;
                auto init = plain.init;
                auto bytes = plain.array_init;
                plain.init.reset();
                plain.array_init.clear();
                emit_decl(plain, ir_name);
                if (s.decl.const_initialized) rename[s.decl.name + "_len"] = ir_name + "_len";
                TypeTag t = resolve(s.decl.type);
                if (init) {
                    op2("mov", t, Operand::var(ir_name), Operand::imm_(*init));
                } else if (!bytes.empty()) {
                    for (uint64_t i = 0; i < s.decl.array_len; i++) {
                        uint64_t v = 0;
                        for (int b = t.width_bytes - 1; b >= 0; b--) {
                            size_t k = i * t.width_bytes + b;
                            v = (v << 8) | (k < bytes.size() ? bytes[k] : 0);
                        }
                        op2("mov", t, Operand::var(ir_name, i * t.width_bytes), Operand::imm_(v));
                    }
                } else if (!s.decl_init && !s.decl.is_array) {
                    op2("mov", t, Operand::var(ir_name), Operand::imm_(0));
                }
                if (s.decl_init) eval_into(Operand::var(ir_name), t, *s.decl_init);
                return;
            }
            case Stmt::Kind::Assign:
                compile_assign(*s.lhs, *s.rhs);
                return;
            case Stmt::Kind::CallStmt:
                inline_call(*s.expr);
                return;
            case Stmt::Kind::Return: {
                if (ret_label_.empty()) fail(s.loc, "return outside a procedure body");
                auto [end, ret] = ret_label_.back();
                if (s.expr && !ret.empty())
                    eval_into(Operand::var(ret), resolve(s.expr->type), *s.expr);
                emit(Instruction{"goto", TypeTag::int32_(), true, {Operand::label(end)}, 0});
                return;
            }
            case Stmt::Kind::If: {
                std::string else_l = fresh_label("else");
                std::string end_l = fresh_label("endif");
                compile_branch(*s.cond, s.else_body.empty() ? end_l : else_l);
                compile_block(s.body);
                if (!s.else_body.empty()) {
                    emit(Instruction{"goto", TypeTag::int32_(), true, {Operand::label(end_l)}, 0});
                    emit_label(else_l);
                    compile_block(s.else_body);
                }
                emit_label(end_l);
                return;
            }
            case Stmt::Kind::While: {
                std::string head = fresh_label("while");
                std::string end = fresh_label("wend");
                maybe_annotate(s, head);
                emit_label(head);
                reset_pool();
                compile_branch(*s.cond, end);
                loops.push_back({end, head});
                compile_block(s.body);
                loops.pop_back();
                emit(Instruction{"goto", TypeTag::int32_(), true, {Operand::label(head)}, 0});
                emit_label(end);
                return;
            }
            case Stmt::Kind::For: {
                if (s.init) compile_stmt(*s.init);
                std::string head = fresh_label("for");
                std::string step_l = fresh_label("fstep");
                std::string end = fresh_label("fend");
                maybe_annotate(s, head);
                emit_label(head);
                reset_pool();
                if (s.cond) compile_branch(*s.cond, end);
                loops.push_back({end, step_l});
                compile_block(s.body);
                loops.pop_back();
                emit_label(step_l);
                if (s.step) compile_stmt(*s.step);
                emit(Instruction{"goto", TypeTag::int32_(), true, {Operand::label(head)}, 0});
                emit_label(end);
                return;
            }
            case Stmt::Kind::RepeatUntil: {
                std::string head = fresh_label("repeat");
                std::string check = fresh_label("runtil");
                std::string end = fresh_label("rend");
                maybe_annotate(s, head);
                emit_label(head);
                loops.push_back({end, check});
                compile_block(s.body);
                loops.pop_back();
                emit_label(check);
                reset_pool();
                compile_branch(*s.cond, head);  // branch back while the condition is false
                emit_label(end);
                return;
            }
            case Stmt::Kind::Loop: {
                std::string head = fresh_label("loop");
                std::string end = fresh_label("lend");
                maybe_annotate(s, head);
                emit_label(head);
                loops.push_back({end, head});
                compile_block(s.body);
                loops.pop_back();
                emit(Instruction{"goto", TypeTag::int32_(), true, {Operand::label(head)}, 0});
                emit_label(end);
                return;
            }
            case Stmt::Kind::Break:
                if (loops.empty()) fail(s.loc, "break outside a loop");
                emit(Instruction{"goto", TypeTag::int32_(), true,
                                 {Operand::label(loops.back().break_label)}, 0});
                return;
            case Stmt::Kind::Continue:
                if (loops.empty()) fail(s.loc, "continue outside a loop");
                emit(Instruction{"goto", TypeTag::int32_(), true,
                                 {Operand::label(loops.back().continue_label)}, 0});
                return;
            case Stmt::Kind::InlineAsm: {
                AsmProgram frag = ir::parse_asm(s.asm_text);
                for (auto& it : frag.items) out.items.push_back(std::move(it));
                return;
            }
        }
    }

    // loop bound: explicit @maxiter wins; constant-trip-count loops derive one
    void maybe_annotate(const Stmt& s, const std::string& head_label) {
        uint64_t bound = s.maxiter;
        if (!bound) bound = derive_trip_bound(s);
        if (bound) out.items.push_back(ir::MaxIterAnnot{head_label, bound, s.loc.line});
    }

    uint64_t derive_trip_bound(const Stmt& s) {
        if (s.kind != Stmt::Kind::For || !s.init || !s.cond || !s.step) return 0;
        // pattern: for (i = C0; i < K; i = i + C) with i not written in the body
        const Stmt& init = *s.init;
        std::string var;
        uint64_t c0 = 0;
        if (init.kind == Stmt::Kind::Decl && init.decl.init) {
            var = init.decl.name;
            c0 = *init.decl.init;
        } else if (init.kind == Stmt::Kind::Assign && init.lhs->kind == Expr::Kind::Var &&
                   init.rhs->kind == Expr::Kind::Const) {
            var = init.lhs->name;
            c0 = init.rhs->value;
        } else {
            return 0;
        }
        const Expr& c = *s.cond;
        if (c.kind != Expr::Kind::Binary || (c.binop != "<" && c.binop != "!=")) return 0;
        if (c.a->kind != Expr::Kind::Var || c.a->name != var || c.b->kind != Expr::Kind::Const)
            return 0;
        uint64_t k = c.b->value;
        const Stmt& st = *s.step;
        if (st.kind != Stmt::Kind::Assign || st.lhs->kind != Expr::Kind::Var ||
            st.lhs->name != var)
            return 0;
        const Expr& se = *st.rhs;
        if (se.kind != Expr::Kind::Binary || se.binop != "+" || se.a->kind != Expr::Kind::Var ||
            se.a->name != var || se.b->kind != Expr::Kind::Const || se.b->value == 0)
            return 0;
        // the body must not write the counter
        bool written = false;
        std::function<void(const Stmt&)> walk = [&](const Stmt& stm) {
            if (stm.lhs && stm.lhs->kind == Expr::Kind::Var && stm.lhs->name == var) written = true;
            if (stm.init) walk(*stm.init);
            if (stm.step) walk(*stm.step);
            for (const auto& b : stm.body) walk(*b);
            for (const auto& b : stm.else_body) walk(*b);
        };
        for (const auto& b : s.body) walk(*b);
        if (written || k <= c0) return 0;
        uint64_t step = se.b->value;
        uint64_t trips = (k - c0 + step - 1) / step;
        return trips + 1;  // header evaluations, including the exiting check
    }

    void compile_assign(const Expr& lhs, const Expr& rhs) {
        if (lhs.kind == Expr::Kind::Var) {
            eval_into(Operand::var(sym(lhs.name)), lhs.type, rhs);
            return;
        }
        // array or mem store: compute the value first, then the address
        TypeTag elem = resolve(lhs.elem);
        if (lhs.kind == Expr::Kind::Index && lhs.a->kind == Expr::Kind::Const) {
            Operand cell = Operand::var(sym(lhs.name),
                                        static_cast<int64_t>(lhs.a->value) * elem.width_bytes);
            eval_into(cell, elem, rhs);
            return;
        }
        Operand v = eval_operand(rhs, elem);
        Operand p = address_of(lhs);
        op2("store", elem, p, v);
    }

    // branch to `target` when cond is false
    void compile_branch(const Expr& cond, const std::string& target) {
        bool boolean = (cond.kind == Expr::Kind::Binary &&
                        (cond.binop == "==" || cond.binop == "!=" || cond.binop == ">=" ||
                         cond.binop == "<")) ||
                       (cond.kind == Expr::Kind::Unary && cond.unop == '!');
        TypeTag w = boolean ? TypeTag::int32_() : resolve(cond.type);
        Operand t = temp(w);
        if (boolean) {
            eval_into(t, w, cond);
        } else {
            // normalize a raw value to 0/1 so every condition cell is boolean
            eval_into(t, w, cond);
            op2("neq", w, t, Operand::imm_(0));
        }
        emit(Instruction{"if_zero_goto", w, false, {t, Operand::label(target)}, 0});
    }

    AsmProgram run() {
        for (const auto& g : ast.globals) emit_decl(g, g.name);
        // addr_size: how many bytes one addr cell occupies on this target
        ir::VarDecl as;
        as.type = TypeTag::int32_();
        as.name = "addr_size";
        as.init = addr.width_bytes;
        out.items.push_back(as);

        const ProcDecl* entry = procs.at(ast.entry);
        ret_label_.push_back({fresh_label("main.end"), ""});
        compile_block(entry->body);
        emit_label(ret_label_.back().first);
        ret_label_.pop_back();

        auto diags = ir::validate_symbols(out);
        if (!diags.empty()) throw Error(Stage::Compile, diags);
        return out;
    }
};

}  // namespace

AsmProgram compile_to_hl_asm(const PayloadAst& ast, TypeTag target_width) {
    if (target_width.kind != TypeKind::Addr ||
        (target_width.width_bytes != 4 && target_width.width_bytes != 8))
        throw Error(Stage::Compile, "target width must be addr with 4 or 8 bytes");
    Compiler c(ast, target_width);
    return c.run();
}

}  // namespace dopc::slang
