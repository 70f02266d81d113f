#include "dopc/types.hpp"

namespace dopc {

std::optional<TypeTag> parse_type_name(const std::string& name) {
    if (name == "byte") return TypeTag::byte_();
    if (name == "int16") return TypeTag::int16_();
    if (name == "int32") return TypeTag::int32_();
    if (name == "int64") return TypeTag::int64_();
    if (name == "addr") return TypeTag::addr_();
    return std::nullopt;
}

std::string type_name(const TypeTag& t) {
    switch (t.kind) {
        case TypeKind::Byte: return "byte";
        case TypeKind::Int16: return "int16";
        case TypeKind::Int32: return "int32";
        case TypeKind::Int64: return "int64";
        case TypeKind::Addr: return "addr";
    }
    return "?";
}

std::optional<int> width_from_suffix(int bits) {
    switch (bits) {
        case 8: return 1;
        case 16: return 2;
        case 32: return 4;
        case 64: return 8;
    }
    return std::nullopt;
}

uint64_t mask_width(uint64_t v, int width_bytes) {
    if (width_bytes >= 8) return v;
    return v & ((uint64_t{1} << (8 * width_bytes)) - 1);
}

}  // namespace dopc
