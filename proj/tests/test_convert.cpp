#include <doctest.h>

#include <fstream>

#include "fixtures.hpp"
#include "tsdf/convert.hpp"
#include "tsdf/error.hpp"

using namespace tsdf;
namespace fs = std::filesystem;

namespace {

std::vector<std::byte> file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const std::byte*>(text.data());
    return std::vector<std::byte>(p, p + text.size());
}

std::string simple_csv(std::size_t rows) {
    std::string text = "t_ms,X,Y\n";
    for (std::size_t i = 0; i < rows; ++i) {
        text += std::to_string(i * 10) + "," + csv_format_number(0.125 * double(i % 7)) + "," +
                csv_format_number(-0.5 * double(i % 3)) + "\n";
    }
    return text;
}

} // namespace

TEST_CASE("importing a three-column CSV builds a relative-time recording") {
    const auto dir = fixtures::temp_dir("import_simple");
    CsvImportOptions options;
    options.time_column = "t_ms";
    const Recording rec = import_csv(simple_csv(100), options, dir);

    REQUIRE(rec.records.size() == 2); // time file plus samples
    const SignalGroup& group = rec.groups.front();
    REQUIRE(group.time_file.has_value());
    const FileRecord& time = rec.records[*group.time_file];
    CHECK(time.compression() == "relative");
    CHECK(time.units() == std::vector<std::string>{"ms"});
    CHECK(time.data_type() == DataType::UInt); // integral millisecond values
    CHECK(time.rows() == 100);

    const FileRecord& samples = rec.records[group.amplitude_records[0]];
    CHECK(samples.channels() == std::vector<std::string>{"X", "Y"});
    CHECK(samples.rows() == 100);

    const GroupSlice slice = read_group(rec, group.group_id, 0, 100);
    const EpochNanos base = to_epoch_nanos(parse_iso8601("1970-01-01T00:00:00.000+00:00"));
    CHECK(slice.timestamps[3] == base + 30'000'000);
    CHECK(slice.matrices[0].at(1, 0) == 0.125);
}

TEST_CASE("a header-only CSV imports as an empty valid recording") {
    const auto dir = fixtures::temp_dir("import_empty");
    CsvImportOptions options;
    options.time_column = "t_ms";
    const Recording rec = import_csv("t_ms,X,Y\n", options, dir);
    CHECK(rec.records[0].rows() == 0);
    CHECK(validate(rec.records).error_count() == 0);
}

TEST_CASE("import without a time column needs a sampling rate") {
    const auto dir = fixtures::temp_dir("import_uniform");
    CsvImportOptions options;
    CHECK_THROWS_AS(import_csv("X,Y\n1,2\n", options, dir), Error);
    options.sampling_rate = 50.0;
    const Recording rec = import_csv("X,Y\n1,2\n3,4\n", options, dir);
    REQUIRE(rec.records.size() == 1);
    CHECK(rec.groups.front().bindings.front().kind == TimeBinding::Kind::Uniform);
    CHECK(rec.records[0].sampling_rate() == 50.0);
}

TEST_CASE("import failures carry row and column positions") {
    const auto dir = fixtures::temp_dir("import_bad");
    CsvImportOptions options;
    options.time_column = "t_ms";

    try {
        import_csv("t_ms,X\n0,1\n10\n", options, dir);
        FAIL("expected ragged-row error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    try {
        import_csv("t_ms,X\n0,fast\n", options, dir);
        FAIL("expected numeric parse error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        CHECK(std::string(e.what()).find("column 2") != std::string::npos);
    }

    options.strict_monotone = true;
    try {
        import_csv("t_ms,X\n0,1\n0,2\n", options, dir);
        FAIL("expected duplicate-time error");
    } catch (const Error& e) {
        CHECK(e.code() == "nonmonotonic_time");
    }
}

TEST_CASE("explicit dialects parse semicolons and decimal commas") {
    const auto dir = fixtures::temp_dir("import_dialect");
    CsvImportOptions options;
    options.time_column = "t";
    options.dialect = CsvDialect{';', ',', '"'};
    const Recording rec = import_csv("t;X\n0;1,5\n10;2,25\n", options, dir);
    const GroupSlice slice = read_group(rec, 0, 0, 2);
    CHECK(slice.matrices[0].at(0, 0) == 1.5);
    CHECK(slice.matrices[0].at(1, 0) == 2.25);
}

TEST_CASE("export produces unit-annotated headers and elapsed or ISO time") {
    const auto dir = fixtures::temp_dir("export_headers");
    CsvImportOptions options;
    options.time_column = "t_ms";
    const Recording rec = import_csv(simple_csv(4), options, dir);

    const std::string text = export_csv(rec, 0, 0, 4);
    CHECK(text.find("time [ms]") == 0);
    CHECK(text.find("X [unitless]") != std::string::npos);
    CHECK(text.find("\n0,0,-0") != std::string::npos);

    CsvExportOptions iso;
    iso.iso_timestamps = true;
    const std::string iso_text = export_csv(rec, 0, 0, 4, iso);
    CHECK(iso_text.find("time_iso8601") == 0);
    CHECK(iso_text.find("1970-01-01T00:00:00.000000000+00:00") != std::string::npos);
}

TEST_CASE("export then import reproduces values and instants") {
    const auto dir1 = fixtures::temp_dir("roundtrip_fig1");
    const auto dir2 = fixtures::temp_dir("roundtrip_import");
    const Recording rec = open_recording(fixtures::make_fig1_dataset(dir1));
    const int gid = rec.groups.front().group_id;

    const std::string csv = export_csv(rec, gid, 0, 4833);

    CsvImportOptions options;
    options.time_column = "time";
    options.time_unit = "ms";
    options.subject_id = "0713";
    options.start = parse_iso8601(rec.records[0].start_iso8601().value());
    const Recording back = import_csv(csv, options, dir2);

    const GroupSlice original = read_group(rec, gid, 0, 4833);
    const GroupSlice imported = read_group(back, back.groups.front().group_id, 0, 4833);
    CHECK(imported.timestamps == original.timestamps);
    REQUIRE(imported.matrices[0].physical.size() == original.matrices[0].physical.size());
    CHECK(imported.matrices[0].physical == original.matrices[0].physical);
}

TEST_CASE("synth is deterministic per seed") {
    const auto dir1 = fixtures::temp_dir("synth_a");
    const auto dir2 = fixtures::temp_dir("synth_b");
    const auto dir3 = fixtures::temp_dir("synth_c");
    SynthSpec spec;
    spec.channels = 2;
    spec.sampling_rate = 64;
    spec.duration_s = 4;
    spec.seed = 99;
    synth(spec, dir1);
    synth(spec, dir2);
    CHECK(file_bytes(dir1 / "samples.bin") == file_bytes(dir2 / "samples.bin"));
    CHECK(file_bytes(dir1 / "metadata.json") == file_bytes(dir2 / "metadata.json"));

    spec.seed = 100;
    synth(spec, dir3);
    CHECK(file_bytes(dir1 / "samples.bin") != file_bytes(dir3 / "samples.bin"));
}

TEST_CASE("the storage report measures sizes, ratio and latency") {
    const auto dir = fixtures::temp_dir("bench_small");
    SynthSpec spec;
    spec.channels = 3;
    spec.sampling_rate = 1000;
    spec.duration_s = 5;
    const Recording rec = synth(spec, dir);

    const BenchReport report = bench_storage(rec);
    CHECK(report.rows == 5000);
    CHECK(report.binary_bytes == 5000 * 3 * 4);
    CHECK(report.csv_bytes > report.binary_bytes);
    REQUIRE(report.ratio.has_value());
    CHECK(*report.ratio > 1.0);
    CHECK(report.full_load_ms >= 0.0);

    const std::string text = format_bench_report(report);
    CHECK(text.find("metric binary_bytes " + std::to_string(report.binary_bytes)) !=
          std::string::npos);
    CHECK(text.find("metric csv_to_binary") != std::string::npos);
}

TEST_CASE("a zero-row recording reports an undefined ratio") {
    const auto dir = fixtures::temp_dir("bench_empty");
    SynthSpec spec;
    spec.duration_s = 0;
    const Recording rec = synth(spec, dir);
    const BenchReport report = bench_storage(rec);
    CHECK(report.rows == 0);
    CHECK_FALSE(report.ratio.has_value());
    CHECK(format_bench_report(report).find("metric csv_to_binary undefined") !=
          std::string::npos);
}
