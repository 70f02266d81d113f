#pragma once

#include "dopc/transform/blocks.hpp"

namespace dopc::transform {

// Rewrites a program so control transfers disappear: every block computes a
// here-bit from a state cell and its own ID, every side-effecting operation
// becomes its here-guarded conditional form, and gotos become guarded writes
// to the state cell. Re-executing a block whose here-bit is clear changes no
// cell but `%bf_here`, so block order stops mattering as long as each block
// runs often enough.
//
// A single-block program keeps its body unguarded: only the here prologue
// with a constant-true state is added.
//
// Throws Error(Stage::Compile) when an op has no effect-guarded rewrite.
ir::AsmProgram branch_free_transform(const ir::AsmProgram& prog);

// Reserved cell names the transform owns.
inline constexpr const char* kStateCell = "%bf_state";
inline constexpr const char* kHereCell = "%bf_here";

}  // namespace dopc::transform
