#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "fixtures.hpp"
#include "tsdf/binio.hpp"
#include "tsdf/error.hpp"

using namespace tsdf;

namespace {

BinaryLayout layout_of(DataType type, int bits, Endianness order, std::size_t channels,
                       std::size_t rows) {
    BinaryLayout layout;
    layout.data_type = type;
    layout.bits = bits;
    layout.endianness = order;
    layout.n_channels = channels;
    layout.rows = rows;
    return layout;
}

SampleMatrix matrix_of(std::size_t rows, std::size_t channels, std::vector<double> values) {
    SampleMatrix m;
    m.rows = rows;
    m.n_channels = channels;
    m.physical = std::move(values);
    return m;
}

} // namespace

TEST_CASE("known byte encodings") {
    // IEEE 754 binary32 of 1.0, little endian
    const auto layout = layout_of(DataType::Float, 32, Endianness::Little, 1, 1);
    const auto bytes = write_rows(matrix_of(1, 1, {1.0}), layout);
    REQUIRE(bytes.size() == 4);
    CHECK(std::to_integer<int>(bytes[0]) == 0x00);
    CHECK(std::to_integer<int>(bytes[1]) == 0x00);
    CHECK(std::to_integer<int>(bytes[2]) == 0x80);
    CHECK(std::to_integer<int>(bytes[3]) == 0x3F);

    // 258 = 0x0102 as a big-endian uint16
    const auto be = layout_of(DataType::UInt, 16, Endianness::Big, 1, 1);
    const auto bytes2 = write_rows(matrix_of(1, 1, {258.0}), be);
    REQUIRE(bytes2.size() == 2);
    CHECK(std::to_integer<int>(bytes2[0]) == 0x01);
    CHECK(std::to_integer<int>(bytes2[1]) == 0x02);
}

TEST_CASE("scale factors quantize physical values on write and restore them on read") {
    auto layout = layout_of(DataType::Int, 16, Endianness::Little, 1, 1);
    layout.scale_factors = std::vector<double>{0.00469378};
    const auto bytes = write_rows(matrix_of(1, 1, {0.0469378}), layout);
    const SampleMatrix m = decode_rows(bytes, layout, 0, 1);
    REQUIRE(m.stored.size() == 1);
    CHECK(m.stored[0] == 10);
    CHECK(m.at(0, 0) == doctest::Approx(0.0469378).epsilon(1e-12));
}

TEST_CASE("quantization rounds half to even") {
    auto layout = layout_of(DataType::Int, 16, Endianness::Little, 1, 4);
    const auto bytes = write_rows(matrix_of(4, 1, {2.5, 3.5, -2.5, 0.5}), layout);
    const SampleMatrix m = decode_rows(bytes, layout, 0, 4);
    CHECK(m.stored[0] == 2);
    CHECK(m.stored[1] == 4);
    CHECK(m.stored[2] == -2);
    CHECK(m.stored[3] == 0);
}

TEST_CASE("scaled-integer reconstruction stays within half a scale step") {
    std::mt19937_64 rng(31);
    auto layout = layout_of(DataType::Int, 16, Endianness::Little, 2, 64);
    layout.scale_factors = std::vector<double>{0.01, 0.25};
    SampleMatrix m = SampleMatrix::zeros(64, 2);
    for (std::size_t i = 0; i < m.physical.size(); ++i)
        m.physical[i] = (static_cast<double>(rng() % 20000) - 10000.0) / 100.0;
    const auto bytes = write_rows(m, layout);
    const SampleMatrix back = decode_rows(bytes, layout, 0, 64);
    for (std::size_t r = 0; r < 64; ++r)
        for (std::size_t c = 0; c < 2; ++c)
            CHECK(std::abs(back.at(r, c) - m.at(r, c)) <=
                  (*layout.scale_factors)[c] / 2 + 1e-12);
}

TEST_CASE("expected size arithmetic and verify_size") {
    const auto dir = fixtures::temp_dir("binio_size");
    const auto layout = layout_of(DataType::Int, 16, Endianness::Little, 3, 4833);
    CHECK(layout.expected_bytes() == 28998);

    SampleMatrix m = SampleMatrix::zeros(4833, 3);
    write_rows_file(dir / "f.bin", m, layout);
    CHECK(verify_size(dir / "f.bin", layout).ok);

    std::filesystem::resize_file(dir / "f.bin", 28997);
    const SizeCheck check = verify_size(dir / "f.bin", layout);
    CHECK_FALSE(check.ok);
    CHECK(check.expected == 28998);
    CHECK(check.actual == 28997);
    CHECK_THROWS_AS(read_rows(dir / "f.bin", layout, 0, 1), Error);

    // an empty recording is a zero-byte file
    const auto empty = layout_of(DataType::Float, 64, Endianness::Big, 2, 0);
    write_rows_file(dir / "empty.bin", SampleMatrix::zeros(0, 2), empty);
    CHECK(verify_size(dir / "empty.bin", empty).ok);
}

TEST_CASE("reading zero rows yields an empty matrix") {
    const auto dir = fixtures::temp_dir("binio_empty");
    const auto layout = layout_of(DataType::UInt, 8, Endianness::Little, 2, 10);
    write_rows_file(dir / "f.bin", SampleMatrix::zeros(10, 2), layout);
    const SampleMatrix m = read_rows(dir / "f.bin", layout, 7, 0);
    CHECK(m.rows == 0);
    CHECK(m.n_channels == 2);
    CHECK(m.physical.empty());
    CHECK_THROWS_AS(read_rows(dir / "f.bin", layout, 7, 4), Error);
}

TEST_CASE("random partitions reassemble the full read") {
    std::mt19937_64 rng(37);
    const auto dir = fixtures::temp_dir("binio_partition");
    const auto layout = layout_of(DataType::Float, 32, Endianness::Big, 3, 500);
    SampleMatrix m = SampleMatrix::zeros(500, 3);
    for (auto& v : m.physical)
        v = static_cast<double>(static_cast<float>(
            (static_cast<double>(rng() % 100000) - 50000.0) / 777.0));
    write_rows_file(dir / "f.bin", m, layout);
    const SampleMatrix full = read_rows(dir / "f.bin", layout, 0, 500);
    CHECK(full.physical == m.physical);

    for (int iter = 0; iter < 20; ++iter) {
        const std::size_t a = rng() % 501;
        const std::size_t b = a + rng() % (501 - a);
        const SampleMatrix slice = read_rows(dir / "f.bin", layout, a, b - a);
        REQUIRE(slice.rows == b - a);
        for (std::size_t r = 0; r < slice.rows; ++r)
            for (std::size_t c = 0; c < 3; ++c)
                CHECK(slice.at(r, c) == full.at(a + r, c));
    }
}

TEST_CASE("swapping the declared byte order swaps every element") {
    std::mt19937_64 rng(41);
    for (const int bits : {16, 32, 64}) {
        const auto little =
            layout_of(DataType::UInt, bits, Endianness::Little, 2, 8);
        auto big = little;
        big.endianness = Endianness::Big;

        SampleMatrix m = SampleMatrix::zeros(8, 2);
        m.stored.resize(16);
        for (auto& v : m.stored)
            v = static_cast<std::int64_t>(rng() & ((1ull << (bits - 1)) - 1));
        const auto lb = write_rows(m, little);
        const auto bb = write_rows(m, big);
        REQUIRE(lb.size() == bb.size());
        const std::size_t width = static_cast<std::size_t>(bits) / 8;
        for (std::size_t e = 0; e < lb.size() / width; ++e)
            for (std::size_t k = 0; k < width; ++k)
                CHECK(lb[e * width + k] == bb[e * width + width - 1 - k]);
    }
}

TEST_CASE("float data round-trips bit-exactly including NaN and infinity") {
    const auto dir = fixtures::temp_dir("binio_float");
    for (const int bits : {32, 64}) {
        const auto layout = layout_of(DataType::Float, bits, Endianness::Little, 1, 5);
        SampleMatrix m = matrix_of(
            5, 1,
            {0.1, -3.25, std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity(),
             std::numeric_limits<double>::quiet_NaN()});
        if (bits == 32)
            for (auto& v : m.physical) v = static_cast<double>(static_cast<float>(v));
        const auto bytes = write_rows(m, layout);
        const SampleMatrix back = decode_rows(bytes, layout, 0, 5);
        const auto bytes2 = write_rows(back, layout);
        CHECK(bytes == bytes2);
        CHECK(std::isnan(back.at(4, 0)));
        CHECK(std::isinf(back.at(2, 0)));
    }
}

TEST_CASE("stored integers round-trip bit-exactly across the full width") {
    for (const DataType type : {DataType::Int, DataType::UInt}) {
        for (const int bits : {8, 16, 32, 64}) {
            const auto layout = layout_of(type, bits, Endianness::Big, 1, 3);
            SampleMatrix m;
            m.rows = 3;
            m.n_channels = 1;
            if (type == DataType::Int) {
                const std::int64_t lo =
                    bits == 64 ? std::numeric_limits<std::int64_t>::min()
                               : -(std::int64_t(1) << (bits - 1));
                const std::int64_t hi = bits == 64 ? std::numeric_limits<std::int64_t>::max()
                                                   : (std::int64_t(1) << (bits - 1)) - 1;
                m.stored = {lo, 0, hi};
            } else {
                // for uint64 the stored value is the two's-complement pattern
                const std::int64_t hi =
                    bits == 64 ? -1 : (std::int64_t(1) << bits) - 1;
                m.stored = {0, 1, hi};
            }
            const auto bytes = write_rows(m, layout);
            const SampleMatrix back = decode_rows(bytes, layout, 0, 3);
            CHECK(back.stored == m.stored);
            CHECK(write_rows(back, layout) == bytes);
        }
    }
}

TEST_CASE("out-of-range values raise quantization_overflow naming the cell") {
    const auto layout = layout_of(DataType::Int, 8, Endianness::Little, 2, 2);
    try {
        write_rows(matrix_of(2, 2, {0.0, 0.0, 0.0, 200.0}), layout);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == "quantization_overflow");
        CHECK(std::string(e.what()).find("row 1") != std::string::npos);
        CHECK(std::string(e.what()).find("channel 1") != std::string::npos);
    }

    // uint32 boundary: 2^32 - 1 fits, 2^32 does not
    const auto u32 = layout_of(DataType::UInt, 32, Endianness::Little, 1, 1);
    CHECK_NOTHROW(write_rows(matrix_of(1, 1, {4294967295.0}), u32));
    CHECK_THROWS_AS(write_rows(matrix_of(1, 1, {4294967296.0}), u32), Error);
}

TEST_CASE("layout invariants are enforced") {
    CHECK_THROWS_AS(layout_of(DataType::Float, 16, Endianness::Little, 1, 1).check(), Error);
    CHECK_THROWS_AS(layout_of(DataType::Int, 24, Endianness::Little, 1, 1).check(), Error);
    CHECK_THROWS_AS(layout_of(DataType::Int, 16, Endianness::Little, 0, 1).check(), Error);
    CHECK_NOTHROW(layout_of(DataType::Float, 64, Endianness::Big, 4, 0).check());
}
