#include "dopc/transform/blocks.hpp"

#include <set>

namespace dopc::transform {

using ir::Instruction;
using ir::LabelDef;

BasicBlockGraph build_blocks(const ir::AsmProgram& prog) {
    // labels that are actually jumped to
    std::set<std::string> referenced;
    for (const auto& it : prog.items)
        if (const auto* ins = std::get_if<Instruction>(&it))
            for (const auto& op : ins->operands)
                if (op.kind == ir::Operand::Kind::Label) referenced.insert(op.name);

    BasicBlockGraph g;
    auto open_block = [&](const std::string& label) -> BasicBlock& {
        g.blocks.emplace_back();
        g.blocks.back().id = static_cast<int>(g.blocks.size());
        if (!label.empty()) {
            g.blocks.back().label = label;
            g.label_block[label] = g.blocks.back().id;
        }
        return g.blocks.back();
    };

    open_block("");
    bool after_terminator = false;
    for (size_t i = 0; i < prog.items.size(); i++) {
        if (const auto* l = std::get_if<LabelDef>(&prog.items[i])) {
            if (!referenced.count(l->name)) continue;
            if (g.blocks.back().items.empty() && g.blocks.back().label.empty()) {
                g.blocks.back().label = l->name;
                g.label_block[l->name] = g.blocks.back().id;
            } else {
                open_block(l->name);
            }
            after_terminator = false;
            continue;
        }
        const auto* ins = std::get_if<Instruction>(&prog.items[i]);
        if (!ins) continue;
        if (after_terminator) {
            open_block("");
            after_terminator = false;
        }
        g.blocks.back().items.push_back(i);
        if (ins->opcode == "goto") {
            g.blocks.back().has_terminator = true;
            after_terminator = true;
        } else if (ins->opcode == "if_zero_goto") {
            after_terminator = true;  // conditional: fallthrough continues in a new block
        }
    }

    // successors
    for (size_t b = 0; b < g.blocks.size(); b++) {
        BasicBlock& blk = g.blocks[b];
        int fall = b + 1 < g.blocks.size() ? g.blocks[b + 1].id : 0;
        if (blk.items.empty()) {
            if (fall) blk.succs.push_back(fall);
            continue;
        }
        const auto& last = std::get<Instruction>(prog.items[blk.items.back()]);
        auto target_of = [&](const Instruction& ins) {
            for (const auto& op : ins.operands)
                if (op.kind == ir::Operand::Kind::Label) {
                    auto it = g.label_block.find(op.name);
                    if (it == g.label_block.end())
                        throw Error(Stage::Compile, "undefined label ':" + op.name + "'", ins.line);
                    return it->second;
                }
            return 0;
        };
        if (last.opcode == "goto") {
            blk.succs.push_back(target_of(last));
        } else if (last.opcode == "if_zero_goto") {
            int t = target_of(last);
            blk.succs.push_back(t);
            if (fall) blk.succs.push_back(fall);
        } else if (fall) {
            blk.succs.push_back(fall);
        }
    }
    return g;
}

namespace {

void dfs(const BasicBlockGraph& g, int id, std::vector<int>& state, bool& ok,
         const std::vector<std::set<int>>& dom) {
    state[id] = 1;  // on stack
    for (int s : g.by_id(id).succs) {
        if (state[s] == 0) {
            dfs(g, s, state, ok, dom);
        } else if (state[s] == 1) {
            // retreating edge id -> s: must target a dominator of id
            if (!dom[id].count(s)) ok = false;
        }
    }
    state[id] = 2;
}

}  // namespace

bool reducible(const BasicBlockGraph& g) {
    if (g.blocks.empty()) return true;
    size_t n = g.blocks.size();
    // iterative dominator sets (desk scale)
    std::vector<std::set<int>> dom(n + 1);
    std::set<int> all;
    for (size_t i = 1; i <= n; i++) all.insert(static_cast<int>(i));
    dom[1] = {1};
    for (size_t i = 2; i <= n; i++) dom[i] = all;
    // predecessors
    std::vector<std::vector<int>> preds(n + 1);
    for (const auto& b : g.blocks)
        for (int s : b.succs) preds[s].push_back(b.id);
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t i = 2; i <= n; i++) {
            std::set<int> nd;
            bool first = true;
            for (int p : preds[i]) {
                if (first) {
                    nd = dom[p];
                    first = false;
                } else {
                    std::set<int> inter;
                    for (int x : nd)
                        if (dom[p].count(x)) inter.insert(x);
                    nd = std::move(inter);
                }
            }
            nd.insert(static_cast<int>(i));
            if (nd != dom[i]) {
                dom[i] = std::move(nd);
                changed = true;
            }
        }
    }
    bool ok = true;
    std::vector<int> state(n + 1, 0);
    dfs(g, 1, state, ok, dom);
    return ok;
}

}  // namespace dopc::transform
