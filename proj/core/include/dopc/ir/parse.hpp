#pragma once

#include "dopc/diag.hpp"
#include "dopc/ir/asm.hpp"

namespace dopc::ir {

// Parses the line-oriented DOP-Asm format (.hlasm / .llasm / recipe bodies).
// One item per line, `#` comments, indentation insignificant, labels `:name`,
// declarations `<type> <name> [= <int>]`. Macros stay unresolved.
// Throws Error(Stage::Parse) on unknown opcode, arity mismatch, malformed
// label or unknown directive.
AsmProgram parse_asm(const std::string& source, const SignatureRegistry* reg = nullptr);

// Validates operand symbols: every Var operand must be declared (or extern),
// every Label operand defined exactly once. `%`-names that are not declared
// are reported as unresolved macros. Returns diagnostics instead of throwing.
std::vector<Diag> validate_symbols(const AsmProgram& prog);

}  // namespace dopc::ir
