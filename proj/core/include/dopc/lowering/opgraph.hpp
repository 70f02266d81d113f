#pragma once

#include <map>
#include <set>

#include "dopc/lowering/recipe.hpp"

namespace dopc::lowering {

// And/Or dependency structure induced by a recipe set: per opcode the
// alternative edge sets (one per recipe), plus the target's native gadgets.
struct OpGraph {
    std::vector<Recipe> recipes;                       // declaration order
    std::map<std::string, std::vector<size_t>> heads;  // mnemonic -> recipe indices
    std::set<std::string> native;
    std::set<std::string> dangling;  // body ops with no recipe and not native

    // weight of one native gadget occurrence: goto-class costs 10, the rest 1
    uint64_t native_weight(const std::string& op) const;

    std::vector<std::string> nodes() const;
};

OpGraph build_op_graph(std::vector<Recipe> recipes, std::set<std::string> native);

// Merging equals building from concatenated files.
OpGraph merge(const OpGraph& a, const OpGraph& b);

// Least fixed point: true iff op is native or some recipe for it has every
// body op synthesizable. Cycles never count as grounded.
bool synthesizable(const OpGraph& g, const std::string& op);

struct SynthesisPlan {
    std::string op;
    bool native = false;
    size_t recipe = SIZE_MAX;            // index into graph.recipes when !native
    uint64_t cumulative_weight = 0;      // sum over native occurrences of the expansion
    std::vector<SynthesisPlan> children; // one per distinct body op, when !native
};

// Alternatives of ops one would have to implement natively to make `op`
// synthesizable; minimal sets, most useful first.
struct MissingOpReport {
    std::string op;
    std::vector<std::set<std::string>> alternatives;
    std::string to_string() const;
};

// Minimal cumulative-weight plan. Throws Error(Stage::Lower) carrying the
// And/Or report text when op is not synthesizable.
SynthesisPlan select_plan(const OpGraph& g, const std::string& op);

// Weight of the chosen plan without materializing it; SIZE_MAX if none.
uint64_t plan_weight(const OpGraph& g, const std::string& op);

MissingOpReport missing_op_report(const OpGraph& g, const std::string& op);

}  // namespace dopc::lowering
