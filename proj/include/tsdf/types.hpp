#ifndef TSDF_TYPES_HPP
#define TSDF_TYPES_HPP

#include <optional>
#include <string_view>

namespace tsdf {

/// Byte order of numerical values in binary data.
enum class Endianness { Big, Little };

/// Number format of stored samples.
enum class DataType { Int, UInt, Float };

inline std::optional<Endianness> endianness_from_name(std::string_view name) {
    if (name == "big") return Endianness::Big;
    if (name == "little") return Endianness::Little;
    return std::nullopt;
}

inline std::string_view endianness_name(Endianness e) {
    return e == Endianness::Big ? "big" : "little";
}

inline std::optional<DataType> data_type_from_name(std::string_view name) {
    if (name == "int") return DataType::Int;
    if (name == "uint") return DataType::UInt;
    if (name == "float") return DataType::Float;
    return std::nullopt;
}

inline std::string_view data_type_name(DataType t) {
    switch (t) {
    case DataType::Int: return "int";
    case DataType::UInt: return "uint";
    case DataType::Float: return "float";
    }
    return "int";
}

} // namespace tsdf

#endif
