#include "dopc/ir/parse.hpp"

#include <cctype>
#include <set>
#include <sstream>

namespace dopc::ir {

namespace {

bool is_name_start(char c) { return isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_name_char(char c) {
    return isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

bool valid_name(const std::string& s) {
    size_t i = s.size() && s[0] == '%' ? 1 : 0;
    if (i >= s.size() || !is_name_start(s[i])) return false;
    for (; i < s.size(); i++)
        if (!is_name_char(s[i])) return false;
    return true;
}

bool parse_int(const std::string& tok, int64_t& out) {
    if (tok.empty()) return false;
    size_t i = 0;
    bool neg = false;
    if (tok[0] == '-' || tok[0] == '+') {
        neg = tok[0] == '-';
        i = 1;
    }
    if (i >= tok.size()) return false;
    uint64_t v = 0;
    if (tok.compare(i, 2, "0x") == 0 || tok.compare(i, 2, "0X") == 0) {
        i += 2;
        if (i >= tok.size()) return false;
        for (; i < tok.size(); i++) {
            if (!isxdigit(static_cast<unsigned char>(tok[i]))) return false;
            v = v * 16 + (isdigit(static_cast<unsigned char>(tok[i]))
                              ? tok[i] - '0'
                              : tolower(tok[i]) - 'a' + 10);
        }
    } else {
        for (; i < tok.size(); i++) {
            if (!isdigit(static_cast<unsigned char>(tok[i]))) return false;
            v = v * 10 + (tok[i] - '0');
        }
    }
    out = neg ? -static_cast<int64_t>(v) : static_cast<int64_t>(v);
    return true;
}

// Splits a line honoring $( ... ) groups and "..." strings as single tokens.
std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> toks;
    size_t i = 0;
    while (i < line.size()) {
        if (isspace(static_cast<unsigned char>(line[i]))) {
            i++;
            continue;
        }
        if (line[i] == '#') break;
        size_t start = i;
        if (line[i] == '$' && i + 1 < line.size() && line[i + 1] == '(') {
            i++;  // '$'
            int depth = 0;
            do {
                if (line[i] == '(') depth++;
                if (line[i] == ')') depth--;
                i++;
            } while (i < line.size() && depth > 0);
        } else if (line.compare(i, 4, "hex\"") == 0) {
            i += 4;
            while (i < line.size() && line[i] != '"') i++;
            if (i < line.size()) i++;
        } else {
            while (i < line.size() && !isspace(static_cast<unsigned char>(line[i])) &&
                   line[i] != '#')
                i++;
        }
        toks.push_back(line.substr(start, i - start));
    }
    return toks;
}

// name with optional +k / -k trailing offset
bool split_offset(const std::string& tok, std::string& name, int64_t& off) {
    size_t p = tok.find_first_of("+-", 1);
    if (p == std::string::npos) {
        name = tok;
        off = 0;
        return valid_name(name);
    }
    name = tok.substr(0, p);
    return valid_name(name) && parse_int(tok.substr(p), off);
}

Operand parse_operand(const std::string& tok, int line, std::vector<Diag>& diags) {
    Operand op;
    if (tok[0] == ':') {
        op.kind = Operand::Kind::Label;
        op.name = tok.substr(1);
        if (!valid_name(op.name))
            diags.push_back({line, 0, "malformed label '" + tok + "'"});
        return op;
    }
    if (tok[0] == '&') {
        op.kind = Operand::Kind::AddrOf;
        int64_t v;
        if (parse_int(tok.substr(1), v)) {
            // address of a cell that will hold this immediate once materialized
            op.imm = static_cast<uint64_t>(v);
            return op;
        }
        if (!split_offset(tok.substr(1), op.name, op.offset))
            diags.push_back({line, 0, "malformed operand '" + tok + "'"});
        return op;
    }
    if (tok.compare(0, 5, "leak(") == 0) {
        size_t close = tok.find(')');
        if (close == std::string::npos) {
            diags.push_back({line, 0, "malformed leak operand '" + tok + "'"});
            return op;
        }
        op.kind = Operand::Kind::Leak;
        op.name = tok.substr(5, close - 5);
        if (close + 1 < tok.size() && !parse_int(tok.substr(close + 1), op.offset))
            diags.push_back({line, 0, "malformed leak operand '" + tok + "'"});
        if (!valid_name(op.name))
            diags.push_back({line, 0, "malformed leak operand '" + tok + "'"});
        return op;
    }
    if (tok.compare(0, 2, "$(") == 0) {
        op.kind = Operand::Kind::MacroExpr;
        op.expr = tok.substr(2, tok.size() - (tok.back() == ')' ? 3 : 2));
        return op;
    }
    int64_t v;
    if (parse_int(tok, v)) {
        op.kind = Operand::Kind::Imm;
        op.imm = static_cast<uint64_t>(v);
        return op;
    }
    op.kind = Operand::Kind::Var;
    if (!split_offset(tok, op.name, op.offset))
        diags.push_back({line, 0, "malformed operand '" + tok + "'"});
    return op;
}

bool parse_hex_bytes(const std::string& tok, std::vector<uint8_t>& out) {
    // hex"DEADBEEF"
    if (tok.compare(0, 4, "hex\"") != 0 || tok.back() != '"') return false;
    std::string body = tok.substr(4, tok.size() - 5);
    if (body.size() % 2) return false;
    for (size_t i = 0; i < body.size(); i += 2) {
        auto nib = [](char c) -> int {
            if (isdigit(static_cast<unsigned char>(c))) return c - '0';
            c = static_cast<char>(tolower(c));
            return c >= 'a' && c <= 'f' ? c - 'a' + 10 : -1;
        };
        int hi = nib(body[i]), lo = nib(body[i + 1]);
        if (hi < 0 || lo < 0) return false;
        out.push_back(static_cast<uint8_t>(hi * 16 + lo));
    }
    return true;
}

}  // namespace

AsmProgram parse_asm(const std::string& source, const SignatureRegistry* reg) {
    AsmProgram prog;
    std::vector<Diag> diags;
    std::istringstream in(source);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        auto toks = tokenize(line);
        if (toks.empty()) continue;
        const std::string& head = toks[0];

        if (head[0] == ':') {  // label definition
            if (toks.size() != 1 || !valid_name(head.substr(1))) {
                diags.push_back({lineno, 0, "malformed label '" + head + "'"});
                continue;
            }
            prog.items.push_back(LabelDef{head.substr(1), lineno});
            continue;
        }
        if (head[0] == '.') {  // directive
            int64_t v = 0;
            if ((head != ".advance_pc" && head != ".packet_grow") || toks.size() != 2 ||
                !parse_int(toks[1], v) || v < 0) {
                diags.push_back({lineno, 0, "unknown or malformed directive '" + head + "'"});
                continue;
            }
            prog.items.push_back(Directive{head.substr(1), static_cast<uint64_t>(v), lineno});
            continue;
        }
        if (head == "@maxiter") {
            int64_t v = 0;
            std::string lbl = toks.size() > 1 ? toks[1] : "";
            if (!lbl.empty() && lbl[0] == ':') lbl = lbl.substr(1);
            if (toks.size() != 3 || !valid_name(lbl) || !parse_int(toks[2], v) || v <= 0) {
                diags.push_back({lineno, 0, "malformed @maxiter annotation"});
                continue;
            }
            prog.items.push_back(MaxIterAnnot{lbl, static_cast<uint64_t>(v), lineno});
            continue;
        }
        if (head == "table") {
            if (toks.size() != 3 || !valid_name(toks[1]) || !valid_name(toks[2])) {
                diags.push_back({lineno, 0, "malformed table declaration"});
                continue;
            }
            prog.items.push_back(TableDecl{toks[1], toks[2], lineno});
            continue;
        }
        if (head == "extern") {
            if (toks.size() != 2 || !valid_name(toks[1])) {
                diags.push_back({lineno, 0, "malformed extern declaration"});
                continue;
            }
            prog.items.push_back(ExternDecl{toks[1], lineno});
            continue;
        }

        // declaration?
        size_t t = 0;
        bool once = false, input = false;
        while (t < toks.size() && (toks[t] == "%once" || toks[t] == "input")) {
            if (toks[t] == "%once") once = true;
            else input = true;
            t++;
        }
        if (t < toks.size()) {
            if (auto ty = parse_type_name(toks[t])) {
                VarDecl d;
                d.type = *ty;
                d.once = once;
                d.input = input;
                d.line = lineno;
                if (t + 1 >= toks.size()) {
                    diags.push_back({lineno, 0, "declaration missing name"});
                    continue;
                }
                std::string nm = toks[t + 1];
                auto br = nm.find('[');
                if (br != std::string::npos) {
                    if (nm.back() != ']') {
                        diags.push_back({lineno, 0, "malformed array declaration"});
                        continue;
                    }
                    int64_t n = 0;
                    if (!parse_int(nm.substr(br + 1, nm.size() - br - 2), n) || n <= 0) {
                        diags.push_back({lineno, 0, "bad array length"});
                        continue;
                    }
                    d.array_len = static_cast<uint64_t>(n);
                    nm = nm.substr(0, br);
                }
                d.name = nm;
                if (!valid_name(d.name)) {
                    diags.push_back({lineno, 0, "bad declaration name '" + nm + "'"});
                    continue;
                }
                size_t rest = t + 2;
                if (rest < toks.size()) {
                    if (toks[rest] != "=" || rest + 1 >= toks.size()) {
                        diags.push_back({lineno, 0, "malformed initializer"});
                        continue;
                    }
                    const std::string& val = toks[rest + 1];
                    int64_t v;
                    std::vector<uint8_t> bytes;
                    if (val.size() > 1 && val[0] == '&') {
                        if (!valid_name(val.substr(1))) {
                            diags.push_back({lineno, 0, "malformed initializer '" + val + "'"});
                            continue;
                        }
                        d.init_sym = val.substr(1);
                    } else if (val.compare(0, 2, "$(") == 0) {
                        d.init_expr = val.substr(2, val.size() - 3);
                    } else if (parse_int(val, v)) {
                        if (d.array_len) {
                            diags.push_back({lineno, 0, "array initializer must be hex\"...\""});
                            continue;
                        }
                        d.init = mask_width(static_cast<uint64_t>(v), d.type.width_bytes);
                    } else if (parse_hex_bytes(val, bytes)) {
                        if (!d.array_len) {
                            diags.push_back({lineno, 0, "hex initializer requires an array"});
                            continue;
                        }
                        d.array_init = std::move(bytes);
                    } else {
                        diags.push_back({lineno, 0, "malformed initializer '" + val + "'"});
                        continue;
                    }
                }
                prog.items.push_back(std::move(d));
                continue;
            }
        }

        // instruction
        std::string base;
        TypeTag width;
        const OpSignature* sig = nullptr;
        if (!split_opcode(head, reg, base, width, &sig)) {
            diags.push_back({lineno, 0, "unknown opcode '" + head + "'"});
            continue;
        }
        Instruction ins;
        ins.opcode = base;
        ins.width = width;
        ins.widthless = sig->widthless;
        ins.line = lineno;
        for (size_t k = 1; k < toks.size(); k++)
            ins.operands.push_back(parse_operand(toks[k], lineno, diags));
        if (ins.operands.size() != sig->slots.size()) {
            diags.push_back({lineno, 0,
                             "arity mismatch for '" + head + "': expected " +
                                 std::to_string(sig->slots.size()) + " operand(s), got " +
                                 std::to_string(ins.operands.size())});
            continue;
        }
        for (size_t k = 0; k < ins.operands.size(); k++) {
            const auto& op = ins.operands[k];
            OperandSlot slot = sig->slots[k];
            bool ok = true;
            switch (slot) {
                case OperandSlot::Cell:
                    ok = op.kind == Operand::Kind::Var;
                    break;
                case OperandSlot::CellOrImm:
                    // labels are allowed as values: they resolve to the
                    // target's program-counter convention at the data view
                    ok = true;
                    break;
                case OperandSlot::Label:
                    ok = op.kind == Operand::Kind::Label;
                    break;
            }
            if (!ok)
                diags.push_back({lineno, 0,
                                 "operand " + std::to_string(k + 1) + " of '" + head +
                                     "' has the wrong kind"});
        }
        prog.items.push_back(std::move(ins));
    }
    if (!diags.empty()) throw Error(Stage::Parse, std::move(diags));
    return prog;
}

std::vector<Diag> validate_symbols(const AsmProgram& prog) {
    std::vector<Diag> diags;
    std::set<std::string> vars, labels, dup;
    for (const auto& it : prog.items) {
        if (const auto* d = std::get_if<VarDecl>(&it)) {
            if (!vars.insert(d->name).second && !d->once)
                diags.push_back({d->line, 0, "duplicate declaration of '" + d->name + "'"});
        } else if (const auto* td = std::get_if<TableDecl>(&it)) {
            vars.insert(td->name);
        } else if (const auto* e = std::get_if<ExternDecl>(&it)) {
            vars.insert(e->name);
        } else if (const auto* l = std::get_if<LabelDef>(&it)) {
            if (!labels.insert(l->name).second)
                diags.push_back({l->line, 0, "label ':" + l->name + "' defined twice"});
        }
    }
    for (const auto& it : prog.items) {
        const auto* ins = std::get_if<Instruction>(&it);
        if (!ins) continue;
        for (const auto& op : ins->operands) {
            if (op.kind == Operand::Kind::AddrOf && op.name.empty()) continue;
            if (op.kind == Operand::Kind::Leak) continue;
            if (op.kind == Operand::Kind::Var || op.kind == Operand::Kind::AddrOf) {
                if (!vars.count(op.name)) {
                    bool macro = !op.name.empty() && op.name[0] == '%';
                    diags.push_back({ins->line, 0,
                                     macro ? "unresolved macro '" + op.name + "'"
                                           : "undeclared symbol '" + op.name + "'"});
                }
            } else if (op.kind == Operand::Kind::Label) {
                if (!labels.count(op.name))
                    diags.push_back({ins->line, 0, "undefined label ':" + op.name + "'"});
            }
        }
    }
    return diags;
}

}  // namespace dopc::ir
