#include "dopc/ir/asm.hpp"

#include <algorithm>

namespace dopc::ir {

std::string Operand::to_string() const {
    switch (kind) {
        case Kind::Var:
            return offset ? name + "+" + std::to_string(offset) : name;
        case Kind::Imm:
            return std::to_string(imm);
        case Kind::Label:
            return ":" + name;
        case Kind::AddrOf: {
            std::string base = name.empty() ? "&" + std::to_string(imm) : "&" + name;
            return offset ? base + "+" + std::to_string(offset) : base;
        }
        case Kind::MacroExpr:
            return "$(" + expr + ")";
        case Kind::Leak: {
            std::string base = "leak(" + name + ")";
            return offset ? base + "+" + std::to_string(offset) : base;
        }
    }
    return "?";
}

std::string Instruction::mnemonic() const {
    if (widthless) return opcode;
    return opcode + std::to_string(width.width_bytes * 8);
}

std::string Instruction::to_string() const {
    std::string s = mnemonic();
    for (const auto& o : operands) s += " " + o.to_string();
    return s;
}

std::string VarDecl::to_string() const {
    std::string s;
    if (once) s += "%once ";
    if (input) s += "input ";
    s += type_name(type) + " " + name;
    if (array_len) s += "[" + std::to_string(array_len) + "]";
    if (init_expr) {
        s += " = $(" + *init_expr + ")";
    } else if (init_sym) {
        s += " = &" + *init_sym;
    } else if (init) {
        s += " = " + std::to_string(*init);
    } else if (!array_init.empty()) {
        static const char* hexd = "0123456789ABCDEF";
        s += " = hex\"";
        for (uint8_t b : array_init) {
            s += hexd[b >> 4];
            s += hexd[b & 15];
        }
        s += "\"";
    }
    return s;
}

const VarDecl* AsmProgram::find_decl(const std::string& name) const {
    for (const auto& it : items)
        if (const auto* d = std::get_if<VarDecl>(&it); d && d->name == name) return d;
    return nullptr;
}

bool AsmProgram::defines_label(const std::string& name) const {
    for (const auto& it : items)
        if (const auto* l = std::get_if<LabelDef>(&it); l && l->name == name) return true;
    return false;
}

std::string AsmProgram::to_string() const {
    std::string out;
    for (const auto& it : items) {
        std::visit(
            [&](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, Instruction>) {
                    out += "\t" + v.to_string();
                } else if constexpr (std::is_same_v<T, LabelDef>) {
                    out += ":" + v.name;
                } else if constexpr (std::is_same_v<T, VarDecl>) {
                    out += v.to_string();
                } else if constexpr (std::is_same_v<T, TableDecl>) {
                    out += "table " + v.name + " " + v.generator;
                } else if constexpr (std::is_same_v<T, ExternDecl>) {
                    out += "extern " + v.name;
                } else if constexpr (std::is_same_v<T, Directive>) {
                    out += "." + v.name + " " + std::to_string(v.value);
                } else if constexpr (std::is_same_v<T, MaxIterAnnot>) {
                    out += "@maxiter " + v.label + " " + std::to_string(v.bound);
                }
            },
            it);
        out += "\n";
    }
    return out;
}

namespace {

const OperandSlot C = OperandSlot::Cell;
const OperandSlot CI = OperandSlot::CellOrImm;
const OperandSlot L = OperandSlot::Label;

const std::vector<OpSignature>& core_table() {
    static const std::vector<OpSignature> table = {
        // data movement; dereferencing convention: mov = *p <- *q, load = *p <- **q,
        // store = **p <- *q
        {"mov", false, false, {C, CI}},
        {"load", false, false, {C, CI}},
        {"store", false, false, {CI, CI}},
        // arithmetic / logic
        {"add", false, false, {C, CI}},
        {"sub", false, false, {C, CI}},
        {"mul", false, false, {C, CI}},
        {"and", false, false, {C, CI}},
        {"or", false, false, {C, CI}},
        {"inc", false, false, {C}},
        {"dec", false, false, {C}},
        {"neg", false, false, {C}},
        {"not", false, false, {C}},
        // comparisons write 0/1 into the first operand
        {"gte", false, false, {C, CI}},
        {"lt", false, false, {C, CI}},
        {"eq", false, false, {C, CI}},
        {"neq", false, false, {C, CI}},
        // width conversions (zero-extension; truncation is a narrow mov).
        // widthless: both widths are part of the name itself.
        {"mov8to32", true, false, {C, C}},
        {"mov8to64", true, false, {C, C}},
        {"mov16to32", true, false, {C, C}},
        {"mov16to64", true, false, {C, C}},
        {"mov32to64", true, false, {C, C}},
        // control flow
        {"goto", true, true, {L}},
        {"if_zero_goto", false, true, {C, L}},
        // conditional variants: leading condition cell, effect iff != 0
        {"cond_mov", false, false, {C, C, CI}},
        {"cond_load", false, false, {C, C, CI}},
        {"cond_store", false, false, {C, CI, CI}},
        {"cond_add", false, false, {C, C, CI}},
        {"cond_sub", false, false, {C, C, CI}},
        {"cond_mul", false, false, {C, C, CI}},
        {"cond_and", false, false, {C, C, CI}},
        {"cond_or", false, false, {C, C, CI}},
        {"cond_gte", false, false, {C, C, CI}},
        {"cond_eq", false, false, {C, C, CI}},
        {"cond_neq", false, false, {C, C, CI}},
        {"cond_lt", false, false, {C, C, CI}},
        {"cond_inc", false, false, {C, C}},
        {"cond_dec", false, false, {C, C}},
    };
    return table;
}

}  // namespace

const OpSignature* find_signature(const std::string& base) {
    for (const auto& s : core_table())
        if (s.base == base) return &s;
    return nullptr;
}

const OpSignature* SignatureRegistry::find(const std::string& base) const {
    if (const auto* s = find_signature(base)) return s;
    auto it = extra_.find(base);
    return it == extra_.end() ? nullptr : &it->second;
}

void SignatureRegistry::add(OpSignature sig) { extra_[sig.base] = std::move(sig); }

bool split_opcode(const std::string& mnemonic, const SignatureRegistry* reg,
                  std::string& base, TypeTag& width, const OpSignature** sig) {
    auto lookup = [&](const std::string& b) -> const OpSignature* {
        return reg ? reg->find(b) : find_signature(b);
    };
    // longest match first: some base names end in digits would be ambiguous,
    // so try the full name as widthless before stripping a suffix.
    if (const auto* s = lookup(mnemonic); s && s->widthless) {
        base = mnemonic;
        width = TypeTag::int32_();
        *sig = s;
        return true;
    }
    size_t i = mnemonic.size();
    while (i > 0 && isdigit(static_cast<unsigned char>(mnemonic[i - 1]))) i--;
    if (i == 0 || i == mnemonic.size()) return false;
    int bits = std::stoi(mnemonic.substr(i));
    auto w = width_from_suffix(bits);
    if (!w) return false;
    const auto* s = lookup(mnemonic.substr(0, i));
    if (!s || s->widthless) return false;
    base = mnemonic.substr(0, i);
    width = TypeTag{bits == 8 ? TypeKind::Byte : bits == 16 ? TypeKind::Int16
                                             : bits == 32   ? TypeKind::Int32
                                                            : TypeKind::Int64,
                    *w};
    *sig = s;
    return true;
}

}  // namespace dopc::ir
