#pragma once

#include "dopc/lowering/opgraph.hpp"

namespace dopc::lowering {

struct LowerOptions {
    int addr_width = 4;
    bool peepholes = true;
};

// Lowers target-independent DOP-Asm to native-only DOP-Asm: each non-native
// instruction is substituted by its minimal-weight recipe body (fresh macro
// invocation per site), recursively. Peepholes: inc/dec instead of add/sub
// by one, add/sub of zero dropped, comparisons against constants folded into
// the conditional branch, multiplies by small powers of two strength-reduced.
// Throws Error(Stage::Lower) with an And/Or report for unsynthesizable ops.
ir::AsmProgram lower(const ir::AsmProgram& hl, const OpGraph& graph,
                     const LowerOptions& opts = {});

}  // namespace dopc::lowering
