#pragma once

#include "dopc/ir/asm.hpp"
#include "dopc/slang/ast.hpp"

namespace dopc::slang {

// Lowers the AST to target-independent DOP-Asm: structured control flow
// becomes labels plus (conditional) gotos, compound expressions become
// two-operand operations with compiler temporaries (`%t...`), array accesses
// scale the index by the element size before an offset dereference, and
// procedures are inlined at their call sites (the IR has no call).
// `target_width` must be the addr type with its width resolved (4 or 8).
ir::AsmProgram compile_to_hl_asm(const PayloadAst& ast, TypeTag target_width);

}  // namespace dopc::slang
