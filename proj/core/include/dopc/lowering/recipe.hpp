#pragma once

#include "dopc/diag.hpp"
#include "dopc/ir/asm.hpp"

namespace dopc::lowering {

// One synthesis rule: how to express the head operation through others.
struct Recipe {
    std::string head;                   // mnemonic with width suffix, e.g. "add32"
    std::vector<std::string> formals;   // parameter names; may be used in label position
    ir::AsmProgram body;
    enum class Category { Reusable, App, Gadget };
    Category category = Category::Reusable;
    std::optional<uint64_t> weight;     // @weight: overrides the cumulative default
    int order = 0;                      // declaration order; ties break on it
    int line = 0;

    // distinct opcode mnemonics the body uses (the edge set this recipe draws)
    std::vector<std::string> body_ops() const;
};

// Parses a .recipe file: optional @category / @weight annotations, a header
// line `<opcode><width> <formals...>`, then an indented DOP-Asm body.
// Multiple recipes per file; files are freely concatenable.
std::vector<Recipe> parse_recipes(const std::string& source,
                                  const ir::SignatureRegistry* reg = nullptr);

}  // namespace dopc::lowering
