#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dopc::ir {

// A lookup table recipes can declare with `table <name> <generator>`. The
// bytes are deterministic functions of the generator name.
struct TableSpec {
    std::string generator;
    int entry_width = 4;
    uint64_t entries = 0;
    uint64_t alignment = 4;
    std::vector<uint8_t> bytes;  // little-endian entry stream

    uint64_t size_bytes() const { return bytes.size(); }
    uint64_t entry_value(uint64_t index) const;
};

// Known generators:
//   dectab256       256 bytes,  [i] = (i-1) mod 256, 256-byte aligned
//   inctab?         (none; inc comes from conditional-inc gadgets)
//   negtab256       256 int32,  [i] = 256 - i
//   nottab256       256 int32,  [i] = 255 - i
//   cmpeq512        512 int32,  [i] = (i == 256)
//   cmpge512        512 int32,  [i] = (i >= 256)
//   isztab256       256 bytes,  [i] = (i == 0)
//   sel21           2 int32,    [0] = 2, [1] = 1
//   flip01          2 int32,    [0] = 1, [1] = 0
//   bittab256_k     256 int32,  [v] = (v >> k) & 1, k in 0..7
std::optional<TableSpec> make_table(const std::string& generator);

}  // namespace dopc::ir
