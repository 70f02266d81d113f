#include "dopc/lowering/opgraph.hpp"

#include <algorithm>
#include <limits>

namespace dopc::lowering {

namespace {

constexpr uint64_t kInf = std::numeric_limits<uint64_t>::max();

bool goto_class(const std::string& mnemonic) {
    std::string base;
    TypeTag w;
    const ir::OpSignature* sig = nullptr;
    if (ir::split_opcode(mnemonic, nullptr, base, w, &sig)) return sig->goto_class;
    // raw target opcodes: classify by name
    return mnemonic.rfind("goto", 0) == 0;
}

}  // namespace

uint64_t OpGraph::native_weight(const std::string& op) const {
    return goto_class(op) ? 10 : 1;
}

std::vector<std::string> OpGraph::nodes() const {
    std::set<std::string> n(native.begin(), native.end());
    for (const auto& r : recipes) {
        n.insert(r.head);
        for (const auto& b : r.body_ops()) n.insert(b);
    }
    return {n.begin(), n.end()};
}

OpGraph build_op_graph(std::vector<Recipe> recipes, std::set<std::string> native) {
    OpGraph g;
    g.native = std::move(native);
    for (auto& r : recipes) {
        // union semantics: an exact duplicate (same head, formals and body)
        // coming from concatenated files collapses to one entry
        bool dup = false;
        for (const auto& have : g.recipes)
            if (have.head == r.head && have.formals == r.formals &&
                have.body.to_string() == r.body.to_string()) {
                dup = true;
                break;
            }
        if (dup) continue;
        r.order = static_cast<int>(g.recipes.size());
        g.recipes.push_back(std::move(r));
    }
    for (size_t i = 0; i < g.recipes.size(); i++)
        g.heads[g.recipes[i].head].push_back(i);
    for (const auto& r : g.recipes)
        for (const auto& op : r.body_ops())
            if (!g.heads.count(op) && !g.native.count(op)) g.dangling.insert(op);
    return g;
}

OpGraph merge(const OpGraph& a, const OpGraph& b) {
    std::vector<Recipe> rs = a.recipes;
    rs.insert(rs.end(), b.recipes.begin(), b.recipes.end());
    std::set<std::string> nat = a.native;
    nat.insert(b.native.begin(), b.native.end());
    return build_op_graph(std::move(rs), std::move(nat));
}

bool synthesizable(const OpGraph& g, const std::string& op) {
    // least fixed point; cycles never count as grounded
    std::set<std::string> grounded = g.native;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& [head, idxs] : g.heads) {
            if (grounded.count(head)) continue;
            for (size_t i : idxs) {
                bool all = true;
                for (const auto& b : g.recipes[i].body_ops())
                    if (!grounded.count(b)) {
                        all = false;
                        break;
                    }
                if (all) {
                    grounded.insert(head);
                    changed = true;
                    break;
                }
            }
        }
    }
    return grounded.count(op) > 0;
}

namespace {

// Weight of one recipe expansion under current estimates: the sum over every
// body instruction occurrence, or the @weight flat override when grounded.
uint64_t recipe_weight(const OpGraph& g, const Recipe& r,
                       const std::map<std::string, uint64_t>& w) {
    auto value = [&](const std::string& op) -> uint64_t {
        auto it = w.find(op);
        return it == w.end() ? kInf : it->second;
    };
    if (r.weight) {
        for (const auto& b : r.body_ops())
            if (value(b) == kInf) return kInf;
        return *r.weight;
    }
    uint64_t sum = 0;
    for (const auto& it : r.body.items) {
        const auto* ins = std::get_if<ir::Instruction>(&it);
        if (!ins) continue;
        uint64_t c = value(ins->mnemonic());
        if (c == kInf) return kInf;
        if (sum > kInf - c) return kInf;
        sum += c;
    }
    return sum;
}

// Minimal plan weights: value iteration to the least fixed point of
//   W(op) = min(native weight, min over recipes of recipe_weight).
std::map<std::string, uint64_t> solve_weights(const OpGraph& g) {
    std::map<std::string, uint64_t> w;
    for (const auto& n : g.nodes()) w[n] = g.native.count(n) ? g.native_weight(n) : kInf;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& [head, idxs] : g.heads) {
            uint64_t best = g.native.count(head) ? g.native_weight(head) : kInf;
            for (size_t i : idxs) best = std::min(best, recipe_weight(g, g.recipes[i], w));
            if (best < w[head]) {
                w[head] = best;
                changed = true;
            }
        }
    }
    return w;
}

// Witness depths over weight-achieving choices; picking the recipe that
// attains D(op) makes the plan map acyclic (depths strictly decrease).
std::map<std::string, uint64_t> solve_depths(const OpGraph& g,
                                             const std::map<std::string, uint64_t>& w) {
    std::map<std::string, uint64_t> d;
    for (const auto& n : g.nodes())
        d[n] = (g.native.count(n) && w.at(n) == g.native_weight(n)) ? 0 : kInf;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& [head, idxs] : g.heads) {
            if (w.at(head) == kInf) continue;
            uint64_t best = d[head];
            for (size_t i : idxs) {
                if (recipe_weight(g, g.recipes[i], w) != w.at(head)) continue;
                uint64_t depth = 0;
                for (const auto& b : g.recipes[i].body_ops()) {
                    uint64_t bd = d.at(b);
                    if (bd == kInf) {
                        depth = kInf;
                        break;
                    }
                    depth = std::max(depth, bd + 1);
                }
                best = std::min(best, depth);
            }
            if (best < d[head]) {
                d[head] = best;
                changed = true;
            }
        }
    }
    return d;
}

SynthesisPlan build_plan(const OpGraph& g, const std::string& op,
                         const std::map<std::string, uint64_t>& w,
                         const std::map<std::string, uint64_t>& d) {
    SynthesisPlan plan;
    plan.op = op;
    plan.cumulative_weight = w.at(op);
    if (g.native.count(op) && g.native_weight(op) == w.at(op)) {
        plan.native = true;
        return plan;
    }
    // the declaration-order-first recipe that both achieves the minimal
    // weight and attains the witness depth (guarantees a finite expansion)
    for (size_t i : g.heads.at(op)) {
        const Recipe& r = g.recipes[i];
        if (recipe_weight(g, r, w) != w.at(op)) continue;
        uint64_t depth = 0;
        for (const auto& b : r.body_ops()) depth = std::max(depth, d.at(b) == kInf ? kInf : d.at(b) + 1);
        if (depth != d.at(op)) continue;
        plan.recipe = i;
        for (const auto& b : r.body_ops()) plan.children.push_back(build_plan(g, b, w, d));
        return plan;
    }
    throw Error(Stage::Lower, "internal: no witness recipe for '" + op + "'");
}

void collect_alternatives(const OpGraph& g, const std::string& op, std::set<std::string>& visiting,
                          std::vector<std::set<std::string>>& out) {
    if (synthesizable(g, op)) {
        out.push_back({});
        return;
    }
    if (visiting.count(op)) {
        out.push_back({op});
        return;
    }
    visiting.insert(op);
    out.push_back({op});
    auto heads = g.heads.find(op);
    if (heads != g.heads.end()) {
        for (size_t i : heads->second) {
            std::vector<std::set<std::string>> combos = {{}};
            for (const auto& b : g.recipes[i].body_ops()) {
                if (synthesizable(g, b)) continue;
                std::vector<std::set<std::string>> subs;
                collect_alternatives(g, b, visiting, subs);
                std::vector<std::set<std::string>> next;
                for (const auto& c : combos)
                    for (const auto& s : subs) {
                        std::set<std::string> u = c;
                        u.insert(s.begin(), s.end());
                        next.push_back(std::move(u));
                        if (next.size() > 64) break;  // keep the report bounded
                    }
                combos = std::move(next);
            }
            for (auto& c : combos)
                if (!c.empty()) out.push_back(std::move(c));
        }
    }
    visiting.erase(op);
}

}  // namespace

MissingOpReport missing_op_report(const OpGraph& g, const std::string& op) {
    MissingOpReport rep;
    rep.op = op;
    std::set<std::string> visiting;
    std::vector<std::set<std::string>> alts;
    collect_alternatives(g, op, visiting, alts);
    // keep minimal alternatives only
    std::sort(alts.begin(), alts.end(),
              [](const auto& a, const auto& b) { return a.size() < b.size(); });
    for (const auto& a : alts) {
        if (a.empty()) continue;
        bool covered = false;
        for (const auto& kept : rep.alternatives)
            if (std::includes(a.begin(), a.end(), kept.begin(), kept.end())) {
                covered = true;
                break;
            }
        if (!covered) rep.alternatives.push_back(a);
    }
    return rep;
}

std::string MissingOpReport::to_string() const {
    std::string s = "'" + op + "' is not synthesizable; implement one of:";
    for (const auto& alt : alternatives) {
        s += "\n  -";
        for (const auto& o : alt) s += " " + o;
    }
    return s;
}

uint64_t plan_weight(const OpGraph& g, const std::string& op) {
    auto w = solve_weights(g);
    auto it = w.find(op);
    return it == w.end() ? kInf : it->second;
}

SynthesisPlan select_plan(const OpGraph& g, const std::string& op) {
    if (!synthesizable(g, op))
        throw Error(Stage::Lower, missing_op_report(g, op).to_string());
    auto w = solve_weights(g);
    auto d = solve_depths(g, w);
    return build_plan(g, op, w, d);
}

}  // namespace dopc::lowering
