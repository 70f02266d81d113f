#pragma once

#include "dopc/diag.hpp"
#include "dopc/slang/ast.hpp"

namespace dopc::slang {

// Parses and type-checks a payload script. The returned AST is fully
// resolved: every identifier declared before use, expression types assigned,
// the call graph acyclic. Throws Error(Stage::Parse) with line/column
// diagnostics: syntax error, undeclared identifier, type mismatch, recursive
// call, duplicate declaration.
//
// `addr` expressions keep width 0 here; the width binds at compile time.
PayloadAst parse_payload(const std::string& source);

}  // namespace dopc::slang
