#include "dopc/lowering/lower.hpp"

#include <algorithm>
#include <limits>
#include <cctype>
#include <set>

#include "dopc/ir/macro.hpp"

namespace dopc::lowering {

using ir::AsmProgram;
using ir::Instruction;
using ir::Item;
using ir::Operand;
using ir::VarDecl;

namespace {

constexpr uint64_t kInf = std::numeric_limits<uint64_t>::max();

// Variables with a known constant value: declared with an initializer, not an
// input, address never taken, never the target of a write.
std::map<std::string, uint64_t> constant_cells(const AsmProgram& prog) {
    std::map<std::string, uint64_t> consts;
    for (const auto& it : prog.items)
        if (const auto* d = std::get_if<VarDecl>(&it))
            if (d->init && !d->input && !d->array_len) consts[d->name] = *d->init;
    for (const auto& it : prog.items) {
        const auto* ins = std::get_if<Instruction>(&it);
        if (!ins) continue;
        for (size_t k = 0; k < ins->operands.size(); k++) {
            const auto& op = ins->operands[k];
            if (op.kind == Operand::Kind::AddrOf) consts.erase(op.name);
            if (op.kind != Operand::Kind::Var) continue;
            // conservatively treat the leading cell slots of every opcode as
            // potentially written
            bool written = k == 0 || (k == 1 && ins->opcode.rfind("cond_", 0) == 0);
            if (written) consts.erase(op.name);
        }
    }
    return consts;
}

std::map<std::string, int> usage_counts(const AsmProgram& prog) {
    std::map<std::string, int> uses;
    for (const auto& it : prog.items) {
        const auto* ins = std::get_if<Instruction>(&it);
        if (!ins) continue;
        for (const auto& op : ins->operands)
            if (op.kind == Operand::Kind::Var || op.kind == Operand::Kind::AddrOf)
                uses[op.name]++;
    }
    return uses;
}

struct Peephole {
    const OpGraph& graph;
    std::map<std::string, uint64_t> weights;

    uint64_t w(const std::string& mnemonic) {
        auto it = weights.find(mnemonic);
        if (it == weights.end()) it = weights.emplace(mnemonic, plan_weight(graph, mnemonic)).first;
        return it->second;
    }

    AsmProgram run(const AsmProgram& in) {
        auto consts = constant_cells(in);
        auto uses = usage_counts(in);
        auto const_of = [&](const Operand& op) -> std::optional<uint64_t> {
            if (op.kind == Operand::Kind::Imm) return op.imm;
            if (op.kind == Operand::Kind::Var && op.offset == 0) {
                auto it = consts.find(op.name);
                if (it != consts.end()) return it->second;
            }
            return std::nullopt;
        };

        AsmProgram out;
        int fresh_label = 0;
        const auto& items = in.items;
        for (size_t i = 0; i < items.size(); i++) {
            const auto* ins = std::get_if<Instruction>(&items[i]);
            if (!ins) {
                out.items.push_back(items[i]);
                continue;
            }
            const std::string mn = ins->mnemonic();
            std::string ws = std::to_string(ins->width.width_bytes * 8);

            // add/sub of zero disappears; add/sub of one prefers inc/dec
            if (ins->opcode == "add" || ins->opcode == "sub") {
                auto c = const_of(ins->operands[1]);
                if (c && mask_width(*c, ins->width.width_bytes) == 0) continue;
                if (c && *c == 1) {
                    std::string alt = (ins->opcode == "add" ? "inc" : "dec") + ws;
                    if (w(alt) <= w(mn)) {
                        Instruction repl = *ins;
                        repl.opcode = ins->opcode == "add" ? "inc" : "dec";
                        repl.operands.resize(1);
                        out.items.push_back(repl);
                        continue;
                    }
                }
            }

            // multiply by a power-of-two constant: drop, clear or strength-reduce
            if (ins->opcode == "mul") {
                auto c = const_of(ins->operands[1]);
                if (c) {
                    uint64_t v = mask_width(*c, ins->width.width_bytes);
                    if (v == 1) continue;  // never multiply by one
                    if (v == 0) {
                        Instruction mv = *ins;
                        mv.opcode = "mov";
                        mv.operands[1] = Operand::imm_(0);
                        out.items.push_back(mv);
                        continue;
                    }
                    if ((v & (v - 1)) == 0) {
                        int k = 0;
                        while ((uint64_t{1} << k) != v) k++;
                        if (w(mn) == kInf || static_cast<uint64_t>(k) * w("add" + ws) < w(mn)) {
                            for (int j = 0; j < k; j++) {
                                Instruction dbl = *ins;
                                dbl.opcode = "add";
                                dbl.operands[1] = dbl.operands[0];
                                out.items.push_back(dbl);
                            }
                            continue;
                        }
                    }
                }
            }

            // fold [mov %t x; eq/neq %t K; if_zero_goto %t :L] into the branch
            if (ins->opcode == "mov" && i + 2 < items.size()) {
                const auto* cmp = std::get_if<Instruction>(&items[i + 1]);
                const auto* br = std::get_if<Instruction>(&items[i + 2]);
                const auto& t = ins->operands[0];
                if (cmp && br && (cmp->opcode == "eq" || cmp->opcode == "neq") &&
                    br->opcode == "if_zero_goto" && t.kind == Operand::Kind::Var &&
                    !t.offset && cmp->operands[0] == t && br->operands[0] == t &&
                    cmp->width == ins->width && br->width == ins->width &&
                    ins->operands[1].kind == Operand::Kind::Var && uses[t.name] == 3) {
                    auto k = const_of(cmp->operands[1]);
                    if (k) {
                        const Operand& x = ins->operands[1];
                        const std::string& target = br->operands[1].name;
                        bool zero = mask_width(*k, ins->width.width_bytes) == 0;
                        auto sat = [](uint64_t a, uint64_t b) {
                            return a > kInf - b ? kInf : a + b;
                        };
                        uint64_t folded_cost =
                            sat(zero ? 0 : sat(w("mov" + ws), w("sub" + ws)), w("if_zero_goto" + ws));
                        uint64_t orig_cost =
                            sat(sat(w("mov" + ws), w(cmp->mnemonic())), w("if_zero_goto" + ws));
                        bool invert = cmp->opcode == "eq";  // eq: branch taken when x != K
                        if (invert) folded_cost = sat(folded_cost, w("goto"));
                        if (folded_cost < orig_cost) {
                            Operand cond = x;
                            if (!zero) {
                                out.items.push_back(Instruction{"mov", ins->width, false, {t, x}, ins->line});
                                out.items.push_back(Instruction{
                                    "sub", ins->width, false, {t, Operand::imm_(*k)}, ins->line});
                                cond = t;
                            }
                            if (!invert) {
                                out.items.push_back(Instruction{
                                    "if_zero_goto", ins->width, false,
                                    {cond, Operand::label(target)}, ins->line});
                            } else {
                                std::string skip = "%pf" + std::to_string(fresh_label++);
                                out.items.push_back(Instruction{
                                    "if_zero_goto", ins->width, false,
                                    {cond, Operand::label(skip)}, ins->line});
                                out.items.push_back(Instruction{
                                    "goto", TypeTag::int32_(), true,
                                    {Operand::label(target)}, ins->line});
                                out.items.push_back(ir::LabelDef{skip, ins->line});
                            }
                            i += 2;
                            continue;
                        }
                    }
                }
            }

            out.items.push_back(items[i]);
        }
        return out;
    }
};

class Lowerer {
  public:
    Lowerer(const OpGraph& graph, const LowerOptions& opts) : graph_(graph), opts_(opts) {}

    AsmProgram run(const AsmProgram& hl) {
        // resolve addr widths and program-level $( ... ) without touching %names
        ir::ExpandOptions eo;
        eo.rename_percent = false;
        eo.addr_width = opts_.addr_width;
        AsmProgram prog = ir::expand_macros(hl, 0, eo);
        if (opts_.peepholes) {
            Peephole ph{graph_, {}};
            prog = ph.run(prog);
        }
        AsmProgram out;
        for (const auto& it : prog.items) {
            if (const auto* ins = std::get_if<Instruction>(&it))
                emit(*ins, out, 0);
            else
                out.items.push_back(it);
        }
        return out;
    }

  private:
    void emit(const Instruction& ins, AsmProgram& out, int depth) {
        if (depth > 64) throw Error(Stage::Lower, "recipe expansion too deep", ins.line);
        const std::string mn = ins.mnemonic();
        if (graph_.native.count(mn)) {
            out.items.push_back(ins);
            return;
        }
        const SynthesisPlan& plan = plan_for(mn, ins.line);
        if (plan.native) {
            out.items.push_back(ins);
            return;
        }
        const Recipe& r = graph_.recipes[plan.recipe];
        AsmProgram body = substitute(r, ins);
        ir::ExpandOptions eo;
        eo.once = &once_[plan.recipe];
        eo.addr_width = opts_.addr_width;
        body = ir::expand_macros(body, next_invocation_++, eo);
        for (const auto& bit : body.items) {
            if (const auto* bins = std::get_if<Instruction>(&bit))
                emit(*bins, out, depth + 1);
            else
                out.items.push_back(bit);
        }
    }

    const SynthesisPlan& plan_for(const std::string& mn, int line) {
        auto it = plans_.find(mn);
        if (it == plans_.end()) {
            try {
                it = plans_.emplace(mn, select_plan(graph_, mn)).first;
            } catch (const Error& e) {
                throw Error(Stage::Lower, e.diags().empty() ? e.what() : e.diags()[0].message, line);
            }
        }
        return it->second;
    }

    // binds formals to the call-site operands inside a copy of the body
    AsmProgram substitute(const Recipe& r, const Instruction& site) {
        std::map<std::string, const Operand*> binding;
        for (size_t i = 0; i < r.formals.size() && i < site.operands.size(); i++)
            binding[r.formals[i]] = &site.operands[i];

        AsmProgram body = r.body;
        for (auto& it : body.items) {
            auto* ins = std::get_if<Instruction>(&it);
            if (!ins) continue;
            for (auto& op : ins->operands) {
                if (op.kind == Operand::Kind::MacroExpr) {
                    op.expr = substitute_expr(op.expr, binding, ins->line);
                    continue;
                }
                if (op.kind != Operand::Kind::Var && op.kind != Operand::Kind::AddrOf &&
                    op.kind != Operand::Kind::Label)
                    continue;
                auto b = binding.find(op.name);
                if (b == binding.end()) continue;
                const Operand& arg = *b->second;
                int64_t extra = op.offset;
                if (op.kind == Operand::Kind::Label) {
                    if (arg.kind != Operand::Kind::Label)
                        throw Error(Stage::Lower, "formal '" + op.name + "' used as a label but bound to a value",
                                    ins->line);
                    op = arg;
                } else if (op.kind == Operand::Kind::AddrOf) {
                    // &formal: address of the bound cell, or of a cell that
                    // will hold the immediate once materialized
                    switch (arg.kind) {
                        case Operand::Kind::Var:
                            op = Operand::addr_of(arg.name, arg.offset + extra);
                            break;
                        case Operand::Kind::Imm:
                            op = Operand{Operand::Kind::AddrOf, "", extra, arg.imm, {}};
                            break;
                        case Operand::Kind::AddrOf:
                            throw Error(Stage::Lower, "cannot take the address of '&" + arg.name + "'",
                                        ins->line);
                        default:
                            throw Error(Stage::Lower, "bad binding for '&" + op.name + "'", ins->line);
                    }
                } else {
                    op = arg;
                    if (op.kind == Operand::Kind::Var || op.kind == Operand::Kind::AddrOf)
                        op.offset += extra;
                    else if (op.kind == Operand::Kind::Imm)
                        op.imm += extra;
                }
            }
        }
        return body;
    }

    // replaces whole-word formal names inside a $( ... ) expression
    std::string substitute_expr(const std::string& expr,
                                const std::map<std::string, const Operand*>& binding, int line) {
        std::string out;
        size_t i = 0;
        while (i < expr.size()) {
            if (isalpha(static_cast<unsigned char>(expr[i])) || expr[i] == '_') {
                size_t j = i;
                while (j < expr.size() &&
                       (isalnum(static_cast<unsigned char>(expr[j])) || expr[j] == '_'))
                    j++;
                std::string word = expr.substr(i, j - i);
                auto b = binding.find(word);
                if (b != binding.end()) {
                    if (b->second->kind != Operand::Kind::Imm)
                        throw Error(Stage::Lower,
                                    "formal '" + word + "' used in $( ... ) must bind an immediate", line);
                    out += std::to_string(b->second->imm);
                } else {
                    out += word;
                }
                i = j;
            } else {
                out += expr[i++];
            }
        }
        return out;
    }

    const OpGraph& graph_;
    LowerOptions opts_;
    uint64_t next_invocation_ = 1;
    std::map<size_t, ir::OnceRegistry> once_;
    std::map<std::string, SynthesisPlan> plans_;
};

}  // namespace

AsmProgram lower(const AsmProgram& hl, const OpGraph& graph, const LowerOptions& opts) {
    Lowerer l(graph, opts);
    return l.run(hl);
}

}  // namespace dopc::lowering
