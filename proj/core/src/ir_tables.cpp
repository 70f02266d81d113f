#include "dopc/ir/tables.hpp"

namespace dopc::ir {

uint64_t TableSpec::entry_value(uint64_t index) const {
    uint64_t v = 0;
    for (int b = entry_width - 1; b >= 0; b--)
        v = (v << 8) | bytes.at(index * entry_width + b);
    return v;
}

namespace {

TableSpec fill(std::string gen, int width, uint64_t n, uint64_t align,
               uint64_t (*f)(uint64_t, uint64_t), uint64_t arg = 0) {
    TableSpec t;
    t.generator = std::move(gen);
    t.entry_width = width;
    t.entries = n;
    t.alignment = align;
    t.bytes.resize(n * width);
    for (uint64_t i = 0; i < n; i++) {
        uint64_t v = f(i, arg);
        for (int b = 0; b < width; b++) t.bytes[i * width + b] = static_cast<uint8_t>(v >> (8 * b));
    }
    return t;
}

}  // namespace

std::optional<TableSpec> make_table(const std::string& g) {
    if (g == "dectab256")
        return fill(g, 1, 256, 256, [](uint64_t i, uint64_t) { return (i + 255) & 0xFF; });
    if (g == "inctab256")
        return fill(g, 1, 256, 256, [](uint64_t i, uint64_t) { return (i + 1) & 0xFF; });
    if (g == "negtab256")
        return fill(g, 4, 256, 4, [](uint64_t i, uint64_t) { return 256 - i; });
    if (g == "nottab256")
        return fill(g, 4, 256, 4, [](uint64_t i, uint64_t) { return 255 - i; });
    if (g == "cmpeq512")
        return fill(g, 4, 512, 4, [](uint64_t i, uint64_t) { return uint64_t(i == 256); });
    if (g == "cmpge512")
        return fill(g, 4, 512, 4, [](uint64_t i, uint64_t) { return uint64_t(i >= 256); });
    if (g == "isztab256")
        return fill(g, 1, 256, 1, [](uint64_t i, uint64_t) { return uint64_t(i == 0); });
    if (g == "sel21")
        return fill(g, 4, 2, 4, [](uint64_t i, uint64_t) { return i == 0 ? uint64_t(2) : 1; });
    if (g == "flip01")
        return fill(g, 4, 2, 4, [](uint64_t i, uint64_t) { return uint64_t(i == 0); });
    if (g.rfind("bittab256_", 0) == 0 && g.size() == 11 && g[10] >= '0' && g[10] <= '7')
        return fill(g, 4, 256, 4, [](uint64_t i, uint64_t k) { return (i >> k) & 1; },
                    static_cast<uint64_t>(g[10] - '0'));
    return std::nullopt;
}

}  // namespace dopc::ir
