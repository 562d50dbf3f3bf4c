#ifndef TSDF_BINIO_HPP
#define TSDF_BINIO_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "tsdf/types.hpp"

namespace tsdf {

struct FileRecord;

/// Physical description of one raw binary sample file: a rows × channels
/// matrix in row-first order with no header, footer or padding. Element
/// (r, c) starts at byte (r * n_channels + c) * bits/8.
struct BinaryLayout {
    DataType data_type = DataType::Float;
    int bits = 32;
    Endianness endianness = Endianness::Little;
    std::size_t n_channels = 1;
    std::size_t rows = 0;
    std::optional<std::vector<double>> scale_factors; ///< one per channel

    std::size_t bytes_per_element() const { return static_cast<std::size_t>(bits) / 8; }
    std::size_t bytes_per_row() const { return n_channels * bytes_per_element(); }
    std::uint64_t expected_bytes() const {
        return static_cast<std::uint64_t>(rows) * bytes_per_row();
    }

    /// Throws Error("invalid_layout") when the description is inconsistent
    /// (unsupported bit width, float other than 32/64, scale factor arity).
    void check() const;

    /// Layout from a validated flattened record.
    static BinaryLayout from_record(const FileRecord& record);
};

/**
 * Decoded sample block. `physical` always holds the scaled values
 * (stored × scale factor); for integer data `stored` additionally keeps the
 * exact stored integers so a rewrite is bit-identical. For 64-bit unsigned
 * data the stored value is the two's-complement bit pattern.
 */
struct SampleMatrix {
    std::size_t rows = 0;
    std::size_t n_channels = 0;
    std::vector<double> physical;
    std::vector<std::int64_t> stored;

    bool has_stored() const { return !stored.empty() || physical.empty(); }
    double at(std::size_t row, std::size_t channel) const {
        return physical[row * n_channels + channel];
    }
    std::int64_t stored_at(std::size_t row, std::size_t channel) const {
        return stored[row * n_channels + channel];
    }

    static SampleMatrix zeros(std::size_t rows, std::size_t n_channels);
};

struct SizeCheck {
    bool ok = false;
    std::uint64_t expected = 0;
    std::uint64_t actual = 0;
};

/// Compare a file's byte length against the layout.
SizeCheck verify_size(const std::filesystem::path& file, const BinaryLayout& layout);

/**
 * Read rows [row_start, row_start + row_count) by seeking straight to the
 * byte offset; no preceding data is touched. The file length must match the
 * layout exactly (Error("size_mismatch") otherwise); an out-of-bounds range
 * raises Error("row_range").
 */
SampleMatrix read_rows(const std::filesystem::path& file, const BinaryLayout& layout,
                       std::size_t row_start, std::size_t row_count);

/// In-memory variant over a complete file image.
SampleMatrix decode_rows(std::span<const std::byte> bytes, const BinaryLayout& layout,
                         std::size_t row_start, std::size_t row_count);

/**
 * Encode a full matrix. Integer layouts use the exact stored values when
 * the matrix carries them; otherwise physical values are divided by the
 * scale factor and rounded half-to-even. A result outside the storable
 * range raises Error("quantization_overflow") naming row and channel.
 */
std::vector<std::byte> write_rows(const SampleMatrix& matrix, const BinaryLayout& layout);

void write_rows_file(const std::filesystem::path& file, const SampleMatrix& matrix,
                     const BinaryLayout& layout);

} // namespace tsdf

#endif
