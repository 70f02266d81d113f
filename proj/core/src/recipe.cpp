#include "dopc/lowering/recipe.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "dopc/ir/parse.hpp"

namespace dopc::lowering {

std::vector<std::string> Recipe::body_ops() const {
    std::set<std::string> seen;
    std::vector<std::string> out;
    for (const auto& it : body.items)
        if (const auto* ins = std::get_if<ir::Instruction>(&it))
            if (seen.insert(ins->mnemonic()).second) out.push_back(ins->mnemonic());
    return out;
}

namespace {

bool is_indented(const std::string& line) {
    return !line.empty() && (line[0] == ' ' || line[0] == '\t');
}

std::string strip(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

void validate_recipe(const Recipe& r, std::vector<Diag>& diags) {
    std::set<std::string> known(r.formals.begin(), r.formals.end());
    for (const auto& it : r.body.items) {
        if (const auto* d = std::get_if<ir::VarDecl>(&it)) known.insert(d->name);
        if (const auto* t = std::get_if<ir::TableDecl>(&it)) known.insert(t->name);
        if (const auto* e = std::get_if<ir::ExternDecl>(&it)) known.insert(e->name);
    }
    for (const auto& it : r.body.items) {
        const auto* ins = std::get_if<ir::Instruction>(&it);
        if (!ins) continue;
        if (ins->mnemonic() == r.head)
            diags.push_back({ins->line, 0, "recipe '" + r.head + "' references its own head opcode"});
        for (const auto& op : ins->operands) {
            if ((op.kind == ir::Operand::Kind::Var || op.kind == ir::Operand::Kind::AddrOf) &&
                !op.name.empty() && !known.count(op.name))
                diags.push_back({ins->line, 0,
                                 "recipe '" + r.head + "' uses undeclared name '" + op.name + "'"});
        }
    }
}

}  // namespace

std::vector<Recipe> parse_recipes(const std::string& source, const ir::SignatureRegistry* reg) {
    std::vector<Recipe> out;
    std::vector<Diag> diags;
    std::istringstream in(source);
    std::string line;
    int lineno = 0;

    std::optional<Recipe::Category> pending_cat;
    std::optional<uint64_t> pending_weight;
    Recipe* current = nullptr;
    std::string body_text;
    int body_start_line = 0;

    auto finish = [&]() {
        if (!current) return;
        try {
            current->body = ir::parse_asm(body_text, reg);
            // re-anchor body line numbers at the recipe's position in the file
            for (auto& it : current->body.items)
                std::visit([&](auto& v) { v.line += body_start_line; }, it);
            validate_recipe(*current, diags);
        } catch (const Error& e) {
            for (auto d : e.diags()) {
                d.line += body_start_line;
                diags.push_back(d);
            }
        }
        body_text.clear();
        current = nullptr;
    };

    while (std::getline(in, line)) {
        lineno++;
        std::string t = strip(line);
        if (t.empty() || t[0] == '#') {
            if (current) body_text += "\n";
            continue;
        }
        if (is_indented(line)) {
            if (!current) {
                diags.push_back({lineno, 0, "indented line outside a recipe body"});
                continue;
            }
            body_text += line + "\n";
            continue;
        }
        finish();
        if (t[0] == '@') {
            std::istringstream ls(t);
            std::string key, val;
            ls >> key >> val;
            if (key == "@category") {
                if (val == "reusable") pending_cat = Recipe::Category::Reusable;
                else if (val == "app") pending_cat = Recipe::Category::App;
                else if (val == "gadget") pending_cat = Recipe::Category::Gadget;
                else diags.push_back({lineno, 0, "unknown @category '" + val + "'"});
            } else if (key == "@weight") {
                try {
                    pending_weight = std::stoull(val);
                } catch (...) {
                    diags.push_back({lineno, 0, "malformed @weight"});
                }
            } else {
                diags.push_back({lineno, 0, "unknown annotation '" + key + "'"});
            }
            continue;
        }
        // header line
        std::istringstream ls(t);
        Recipe r;
        ls >> r.head;
        std::string formal;
        while (ls >> formal) {
            if (formal[0] == '#') break;
            r.formals.push_back(formal);
        }
        std::string base;
        TypeTag width;
        const ir::OpSignature* sig = nullptr;
        if (!ir::split_opcode(r.head, reg, base, width, &sig)) {
            diags.push_back({lineno, 0, "recipe head '" + r.head + "' is not a known opcode"});
            // consume the body anyway
        } else if (r.formals.size() != sig->slots.size()) {
            diags.push_back({lineno, 0, "recipe '" + r.head + "' formal count does not match opcode arity"});
        }
        r.category = pending_cat.value_or(Recipe::Category::Reusable);
        r.weight = pending_weight;
        r.line = lineno;
        r.order = static_cast<int>(out.size());
        pending_cat.reset();
        pending_weight.reset();
        out.push_back(std::move(r));
        current = &out.back();
        body_start_line = lineno;
    }
    finish();
    if (!diags.empty()) throw Error(Stage::Lower, std::move(diags));
    return out;
}

}  // namespace dopc::lowering
