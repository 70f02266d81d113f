#include "dopc/ir/macro.hpp"

#include <cctype>
#include <set>

namespace dopc::ir {

namespace {

// recursive-descent over + - * / % << >> ( ) and integer literals
struct ExprParser {
    const std::string& s;
    size_t i = 0;
    int line;

    void skip() {
        while (i < s.size() && isspace(static_cast<unsigned char>(s[i]))) i++;
    }
    [[noreturn]] void fail(const std::string& m) {
        throw Error(Stage::Lower, "in $( " + s + " ): " + m, line);
    }
    int64_t primary() {
        skip();
        if (i < s.size() && s[i] == '(') {
            i++;
            int64_t v = shift();
            skip();
            if (i >= s.size() || s[i] != ')') fail("missing ')'");
            i++;
            return v;
        }
        if (i < s.size() && s[i] == '-') {
            i++;
            return -primary();
        }
        skip();
        size_t start = i;
        if (i + 1 < s.size() && s[i] == '0' && (s[i + 1] == 'x' || s[i + 1] == 'X')) {
            i += 2;
            while (i < s.size() && isxdigit(static_cast<unsigned char>(s[i]))) i++;
            if (i == start + 2) fail("bad hex literal");
            return static_cast<int64_t>(std::stoull(s.substr(start, i - start), nullptr, 16));
        }
        while (i < s.size() && isdigit(static_cast<unsigned char>(s[i]))) i++;
        if (i == start) fail("expected integer");
        return static_cast<int64_t>(std::stoull(s.substr(start, i - start)));
    }
    int64_t term() {
        int64_t v = primary();
        for (;;) {
            skip();
            if (i < s.size() && (s[i] == '*' || s[i] == '/' || s[i] == '%')) {
                char op = s[i++];
                int64_t r = primary();
                if ((op == '/' || op == '%') && r == 0) fail("division by zero");
                v = op == '*' ? v * r : op == '/' ? v / r : v % r;
            } else {
                return v;
            }
        }
    }
    int64_t sum() {
        int64_t v = term();
        for (;;) {
            skip();
            if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
                char op = s[i++];
                int64_t r = term();
                v = op == '+' ? v + r : v - r;
            } else {
                return v;
            }
        }
    }
    int64_t shift() {
        int64_t v = sum();
        for (;;) {
            skip();
            if (i + 1 < s.size() && s[i] == '<' && s[i + 1] == '<') {
                i += 2;
                v = static_cast<int64_t>(static_cast<uint64_t>(v) << sum());
            } else if (i + 1 < s.size() && s[i] == '>' && s[i + 1] == '>') {
                i += 2;
                v = static_cast<int64_t>(static_cast<uint64_t>(v) >> sum());
            } else {
                return v;
            }
        }
    }
    int64_t parse() {
        int64_t v = shift();
        skip();
        if (i != s.size()) fail("trailing characters");
        return v;
    }
};

}  // namespace

int64_t eval_macro_expr(const std::string& expr, int line) {
    ExprParser p{expr, 0, line};
    return p.parse();
}

namespace {

std::string rename(const std::string& name, uint64_t id, const ExpandOptions& opts) {
    if (name.empty() || name[0] != '%' || !opts.rename_percent) return name;
    return name.substr(1) + "__" + std::to_string(id);
}

}  // namespace

AsmProgram expand_macros(const AsmProgram& prog, uint64_t invocation_id,
                         const ExpandOptions& opts) {
    AsmProgram out;
    // %once decls resolve through the registry: the first instantiation owns
    // the cell and emits the declaration, later ones only reference it.
    std::map<std::string, std::string> local_once;  // %name -> concrete name
    std::set<std::string> owned;
    std::set<std::string> tables;  // table names are global and never renamed
    for (const auto& it : prog.items) {
        if (const auto* td = std::get_if<TableDecl>(&it)) {
            tables.insert(td->name);
            continue;
        }
        const auto* d = std::get_if<VarDecl>(&it);
        if (!d || !d->once || d->name.empty() || d->name[0] != '%') continue;
        std::string target = rename(d->name, invocation_id, opts);
        if (opts.once) {
            auto found = opts.once->find(d->name);
            if (found != opts.once->end()) {
                local_once[d->name] = found->second;
                continue;
            }
            opts.once->emplace(d->name, target);
        }
        local_once[d->name] = target;
        owned.insert(d->name);
    }

    auto map_name = [&](const std::string& n) -> std::string {
        if (tables.count(n)) return n;
        auto f = local_once.find(n);
        if (f != local_once.end()) return f->second;
        return rename(n, invocation_id, opts);
    };

    for (const auto& it : prog.items) {
        if (const auto* ins = std::get_if<Instruction>(&it)) {
            Instruction copy = *ins;
            for (auto& op : copy.operands) {
                switch (op.kind) {
                    case Operand::Kind::Var:
                    case Operand::Kind::Label:
                    case Operand::Kind::AddrOf:
                        op.name = map_name(op.name);
                        break;
                    case Operand::Kind::MacroExpr: {
                        int64_t v = eval_macro_expr(op.expr, copy.line);
                        op = Operand::imm_(mask_width(static_cast<uint64_t>(v),
                                                      copy.widthless ? 8 : copy.width.width_bytes));
                        break;
                    }
                    case Operand::Kind::Imm:
                        break;
                }
            }
            out.items.push_back(std::move(copy));
        } else if (const auto* l = std::get_if<LabelDef>(&it)) {
            out.items.push_back(LabelDef{map_name(l->name), l->line});
        } else if (const auto* d = std::get_if<VarDecl>(&it)) {
            if (d->once && d->name[0] == '%' && !owned.count(d->name)) continue;
            VarDecl copy = *d;
            copy.name = map_name(copy.name);
            if (copy.init_sym) copy.init_sym = map_name(*copy.init_sym);
            if (copy.init_expr) {
                int64_t v = eval_macro_expr(*copy.init_expr, copy.line);
                copy.init = mask_width(static_cast<uint64_t>(v), copy.type.width_bytes);
                copy.init_expr.reset();
            }
            if (copy.type.kind == TypeKind::Addr && opts.addr_width)
                copy.type.width_bytes = opts.addr_width;
            copy.once = false;
            out.items.push_back(std::move(copy));
        } else if (const auto* td = std::get_if<TableDecl>(&it)) {
            out.items.push_back(*td);  // tables keep their name (global dedupe)
        } else {
            out.items.push_back(it);
        }
    }
    return out;
}

bool fully_expanded(const AsmProgram& prog) {
    for (const auto& it : prog.items) {
        if (const auto* ins = std::get_if<Instruction>(&it)) {
            for (const auto& op : ins->operands)
                if (op.kind == Operand::Kind::MacroExpr) return false;
        } else if (const auto* d = std::get_if<VarDecl>(&it)) {
            if (d->once || d->init_expr) return false;
        }
    }
    return true;
}

}  // namespace dopc::ir
