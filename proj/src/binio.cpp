#include "tsdf/binio.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "tsdf/error.hpp"
#include "tsdf/metadata.hpp"

namespace tsdf {

namespace {

template <typename T> struct Tag {
    using type = T;
};

/// Invoke fn with the concrete element type of the layout.
template <typename Fn> decltype(auto) with_element_type(const BinaryLayout& layout, Fn&& fn) {
    switch (layout.data_type) {
    case DataType::Float:
        return layout.bits == 32 ? fn(Tag<float>{}) : fn(Tag<double>{});
    case DataType::Int:
        switch (layout.bits) {
        case 8: return fn(Tag<std::int8_t>{});
        case 16: return fn(Tag<std::int16_t>{});
        case 32: return fn(Tag<std::int32_t>{});
        default: return fn(Tag<std::int64_t>{});
        }
    case DataType::UInt:
        switch (layout.bits) {
        case 8: return fn(Tag<std::uint8_t>{});
        case 16: return fn(Tag<std::uint16_t>{});
        case 32: return fn(Tag<std::uint32_t>{});
        default: return fn(Tag<std::uint64_t>{});
        }
    }
    return fn(Tag<double>{}); // unreachable after check()
}

template <typename T> T load_element(const std::byte* p, Endianness order) {
    std::array<std::byte, sizeof(T)> buf;
    std::memcpy(buf.data(), p, sizeof(T));
    const bool native_little = std::endian::native == std::endian::little;
    if ((order == Endianness::Little) != native_little)
        std::reverse(buf.begin(), buf.end());
    T v;
    std::memcpy(&v, buf.data(), sizeof(T));
    return v;
}

template <typename T> void store_element(std::byte* p, T v, Endianness order) {
    std::array<std::byte, sizeof(T)> buf;
    std::memcpy(buf.data(), &v, sizeof(T));
    const bool native_little = std::endian::native == std::endian::little;
    if ((order == Endianness::Little) != native_little)
        std::reverse(buf.begin(), buf.end());
    std::memcpy(p, buf.data(), sizeof(T));
}

double scale_for(const BinaryLayout& layout, std::size_t channel) {
    return layout.scale_factors ? (*layout.scale_factors)[channel] : 1.0;
}

[[noreturn]] void overflow(std::size_t row, std::size_t channel, const std::string& detail) {
    throw Error("quantization_overflow", "value at row " + std::to_string(row) + ", channel " +
                                             std::to_string(channel) + " " + detail);
}

template <typename T>
void check_stored_range(std::int64_t v, std::size_t row, std::size_t channel) {
    if constexpr (std::is_same_v<T, std::int64_t>) {
        (void)v;
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
        (void)v; // any bit pattern is a valid uint64
    } else if constexpr (std::is_signed_v<T>) {
        if (v < std::numeric_limits<T>::min() || v > std::numeric_limits<T>::max())
            overflow(row, channel, "does not fit a signed " + std::to_string(sizeof(T) * 8) +
                                       "-bit integer");
    } else {
        if (v < 0 || static_cast<std::uint64_t>(v) > std::numeric_limits<T>::max())
            overflow(row, channel, "does not fit an unsigned " + std::to_string(sizeof(T) * 8) +
                                       "-bit integer");
    }
}

} // namespace

void BinaryLayout::check() const {
    if (bits != 8 && bits != 16 && bits != 32 && bits != 64)
        throw Error("invalid_layout", "bits must be 8, 16, 32 or 64");
    if (data_type == DataType::Float && bits != 32 && bits != 64)
        throw Error("invalid_layout", "float data requires 32 or 64 bits (IEEE 754)");
    if (n_channels == 0)
        throw Error("invalid_layout", "at least one channel is required");
    if (scale_factors && scale_factors->size() != n_channels)
        throw Error("invalid_layout", "one scale factor per channel is required");
}

BinaryLayout BinaryLayout::from_record(const FileRecord& record) {
    BinaryLayout layout;
    const auto data_type = record.data_type();
    const auto bits = record.bits();
    const auto endianness = record.endianness();
    const auto channels = record.channels();
    const auto rows = record.rows();
    if (!data_type || !bits || !endianness || !channels || !rows || *rows < 0)
        throw Error("invalid_layout", "record \"" + record.file_name() +
                                          "\" does not carry a complete binary description");
    layout.data_type = *data_type;
    layout.bits = static_cast<int>(*bits);
    layout.endianness = *endianness;
    layout.n_channels = channels->size();
    layout.rows = static_cast<std::size_t>(*rows);
    layout.scale_factors = record.scale_factors();
    layout.check();
    return layout;
}

SampleMatrix SampleMatrix::zeros(std::size_t rows, std::size_t n_channels) {
    SampleMatrix m;
    m.rows = rows;
    m.n_channels = n_channels;
    m.physical.assign(rows * n_channels, 0.0);
    return m;
}

SizeCheck verify_size(const std::filesystem::path& file, const BinaryLayout& layout) {
    std::error_code ec;
    const std::uintmax_t actual = std::filesystem::file_size(file, ec);
    if (ec)
        throw Error("io_error", "cannot stat \"" + file.string() + "\": " + ec.message());
    SizeCheck check;
    check.expected = layout.expected_bytes();
    check.actual = static_cast<std::uint64_t>(actual);
    check.ok = check.expected == check.actual;
    return check;
}

SampleMatrix decode_rows(std::span<const std::byte> bytes, const BinaryLayout& layout,
                         std::size_t row_start, std::size_t row_count) {
    layout.check();
    if (bytes.size() != layout.expected_bytes())
        throw Error("size_mismatch", "expected " + std::to_string(layout.expected_bytes()) +
                                         " bytes, got " + std::to_string(bytes.size()));
    if (row_start > layout.rows || row_count > layout.rows - row_start)
        throw Error("row_range", "rows [" + std::to_string(row_start) + ", " +
                                     std::to_string(row_start + row_count) +
                                     ") exceed the file's " + std::to_string(layout.rows) +
                                     " rows");

    SampleMatrix m;
    m.rows = row_count;
    m.n_channels = layout.n_channels;
    const std::size_t n = row_count * layout.n_channels;
    m.physical.resize(n);
    if (layout.data_type != DataType::Float) m.stored.resize(n);

    const std::byte* base = bytes.data() + row_start * layout.bytes_per_row();
    with_element_type(layout, [&](auto tag) {
        using T = typename decltype(tag)::type;
        for (std::size_t i = 0; i < n; ++i) {
            const T v = load_element<T>(base + i * sizeof(T), layout.endianness);
            const std::size_t channel = i % layout.n_channels;
            if constexpr (std::is_floating_point_v<T>) {
                m.physical[i] = static_cast<double>(v) * scale_for(layout, channel);
            } else {
                const auto wide = static_cast<std::int64_t>(v);
                m.stored[i] = wide;
                if constexpr (std::is_same_v<T, std::uint64_t>)
                    m.physical[i] = static_cast<double>(v) * scale_for(layout, channel);
                else
                    m.physical[i] = static_cast<double>(wide) * scale_for(layout, channel);
            }
        }
    });
    return m;
}

SampleMatrix read_rows(const std::filesystem::path& file, const BinaryLayout& layout,
                       std::size_t row_start, std::size_t row_count) {
    layout.check();
    const SizeCheck size = verify_size(file, layout);
    if (!size.ok)
        throw Error("size_mismatch", "\"" + file.string() + "\": expected " +
                                         std::to_string(size.expected) + " bytes, got " +
                                         std::to_string(size.actual));
    if (row_start > layout.rows || row_count > layout.rows - row_start)
        throw Error("row_range", "rows [" + std::to_string(row_start) + ", " +
                                     std::to_string(row_start + row_count) +
                                     ") exceed the file's " + std::to_string(layout.rows) +
                                     " rows");

    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw Error("io_error", "cannot open \"" + file.string() + "\" for reading");

    const std::size_t byte_count = row_count * layout.bytes_per_row();
    std::vector<std::byte> buffer(byte_count);
    in.seekg(static_cast<std::streamoff>(row_start * layout.bytes_per_row()));
    in.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(byte_count));
    if (in.gcount() != static_cast<std::streamsize>(byte_count))
        throw Error("io_error", "short read from \"" + file.string() + "\"");

    // reuse the span decoder on the fetched window
    BinaryLayout window = layout;
    window.rows = row_count;
    return decode_rows(buffer, window, 0, row_count);
}

std::vector<std::byte> write_rows(const SampleMatrix& matrix, const BinaryLayout& layout) {
    layout.check();
    if (matrix.rows != layout.rows || matrix.n_channels != layout.n_channels)
        throw Error("invalid_layout", "matrix dimensions do not match the layout");
    const std::size_t n = matrix.rows * matrix.n_channels;
    const bool from_stored = layout.data_type != DataType::Float && matrix.stored.size() == n;
    if (!from_stored && matrix.physical.size() != n)
        throw Error("invalid_layout", "matrix value buffer has the wrong length");

    std::vector<std::byte> out(layout.expected_bytes());

    with_element_type(layout, [&](auto tag) {
        using T = typename decltype(tag)::type;
        const long double hi = std::is_floating_point_v<T>
                                   ? 0.0L
                                   : ldexpl(1.0L, std::is_signed_v<T> ? int(sizeof(T)) * 8 - 1
                                                                      : int(sizeof(T)) * 8);
        const long double lo = std::is_signed_v<T> ? -hi : 0.0L;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t row = i / layout.n_channels;
            const std::size_t channel = i % layout.n_channels;
            T v;
            if constexpr (std::is_floating_point_v<T>) {
                v = static_cast<T>(matrix.physical[i]);
            } else {
                if (from_stored) {
                    check_stored_range<T>(matrix.stored[i], row, channel);
                    v = static_cast<T>(matrix.stored[i]);
                } else {
                    const double scale = scale_for(layout, channel);
                    const long double q =
                        nearbyintl(static_cast<long double>(matrix.physical[i]) / scale);
                    if (std::isnan(static_cast<double>(q)))
                        overflow(row, channel, "is not a finite number");
                    if (q < lo || q >= hi)
                        overflow(row, channel,
                                 "quantized to " + std::to_string(static_cast<double>(q)) +
                                     ", outside the " + std::to_string(sizeof(T) * 8) + "-bit " +
                                     (std::is_signed_v<T> ? "signed" : "unsigned") + " range");
                    v = static_cast<T>(q);
                }
            }
            store_element<T>(out.data() + i * sizeof(T), v, layout.endianness);
        }
    });
    return out;
}

void write_rows_file(const std::filesystem::path& file, const SampleMatrix& matrix,
                     const BinaryLayout& layout) {
    const std::vector<std::byte> bytes = write_rows(matrix, layout);
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("io_error", "cannot open \"" + file.string() + "\" for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw Error("io_error", "short write to \"" + file.string() + "\"");
}

} // namespace tsdf
