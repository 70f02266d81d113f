#pragma once

#include <map>

#include "dopc/diag.hpp"
#include "dopc/ir/asm.hpp"

namespace dopc::ir {

// Names already assigned to %once declarations of one recipe, shared across
// its instantiations so a temporary is reserved only once.
using OnceRegistry = std::map<std::string, std::string>;

struct ExpandOptions {
    bool rename_percent = true;     // %name -> name__<invocation_id>
    OnceRegistry* once = nullptr;   // nullptr: every %once behaves like a first use
    int addr_width = 0;             // resolve `addr` decls when nonzero
};

// Rewrites every `%name` to `name__<invocation_id>`, evaluates $( ... )
// compile-time expressions to immediates and applies the %once rule: a
// %once-marked declaration is emitted only at its first instantiation, later
// ones reuse the same cell. Table declarations keep their name (tables are
// deduplicated by name program-wide). Idempotent on fully expanded programs.
AsmProgram expand_macros(const AsmProgram& prog, uint64_t invocation_id,
                         const ExpandOptions& opts = {});

// Evaluates a $( ... ) arithmetic expression: + - * / % << >> and parentheses
// over 64-bit integers. Throws Error(Stage::Lower) on division by zero or a
// syntax error.
int64_t eval_macro_expr(const std::string& expr, int line = 0);

// True if nothing is left to expand: no $( ... ), no %once pending.
bool fully_expanded(const AsmProgram& prog);

}  // namespace dopc::ir
