#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace dopc {

// Value widths used throughout the IR. `Addr` resolves to 4 or 8 bytes per
// compilation, taken from the target descriptor.
enum class TypeKind { Byte, Int16, Int32, Int64, Addr };

struct TypeTag {
    TypeKind kind = TypeKind::Int32;
    int width_bytes = 4;  // 1, 2, 4 or 8; for Addr set once the target is known

    bool operator==(const TypeTag&) const = default;

    static TypeTag byte_() { return {TypeKind::Byte, 1}; }
    static TypeTag int16_() { return {TypeKind::Int16, 2}; }
    static TypeTag int32_() { return {TypeKind::Int32, 4}; }
    static TypeTag int64_() { return {TypeKind::Int64, 8}; }
    static TypeTag addr_(int width = 0) { return {TypeKind::Addr, width}; }
};

// Parses "byte", "int16", "int32", "int64", "addr".
std::optional<TypeTag> parse_type_name(const std::string& name);
std::string type_name(const TypeTag& t);

// Width from an opcode suffix: 8 -> 1 byte, 16 -> 2, 32 -> 4, 64 -> 8.
std::optional<int> width_from_suffix(int bits);

// Truncates v to the given byte width (modular arithmetic domain).
uint64_t mask_width(uint64_t v, int width_bytes);

}  // namespace dopc
