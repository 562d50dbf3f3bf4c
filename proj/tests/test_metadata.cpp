#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "tsdf/error.hpp"
#include "tsdf/metadata.hpp"

using namespace tsdf;

namespace {

std::vector<FileRecord> flatten_text(const std::string& text) {
    return flatten(parse_metadata(text));
}

const FileRecord* by_name(const std::vector<FileRecord>& records, std::string_view name) {
    for (const FileRecord& r : records)
        if (r.file_name() == name) return &r;
    return nullptr;
}

} // namespace

TEST_CASE("parse keeps field count, order and scalar kinds") {
    const MetadataDocument doc = parse_metadata(fixtures::audio_metadata());
    CHECK(doc.root.size() == 15);
    const Value* rows = doc.root.find("rows");
    REQUIRE(rows != nullptr);
    CHECK(rows->is_integer());
    CHECK(rows->as_integer() == 1323000);
    // first two fields in document order
    CHECK(doc.root.key(0) == "study_id");
    CHECK(doc.root.key(1) == "subject_id");
}

TEST_CASE("empty document parses to an empty mapping") {
    const MetadataDocument doc = parse_metadata("{}");
    CHECK(doc.root.is_mapping());
    CHECK(doc.root.size() == 0);
    CHECK(flatten(doc).empty());
}

TEST_CASE("hierarchical document keeps its session list") {
    const MetadataDocument doc = parse_metadata(fixtures::hierarchical_metadata());
    const Value* sessions = doc.root.find("multi-day_session");
    REQUIRE(sessions != nullptr);
    CHECK(sessions->is_list());
    CHECK(sessions->size() == 2);
    CHECK((*sessions)[0].is_mapping());
}

TEST_CASE("parse failures carry position and kind") {
    try {
        parse_metadata("{\"a\": 1,,}");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == "parse_error");
        CHECK(std::string(e.what()).find("column") != std::string::npos);
    }
    try {
        parse_metadata("{\"a\": 1, \"a\": 2}");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == "duplicate_field");
        CHECK(std::string(e.what()).find("\"a\"") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_metadata("{\"a\": null}"), Error);
    CHECK_THROWS_AS(parse_metadata("[1, 2]"), Error);     // root must be a mapping
    CHECK_THROWS_AS(parse_metadata("{\"a\": \"\xff\xfe\"}"), Error); // invalid UTF-8
}

TEST_CASE("documents round-trip through serialization structurally") {
    for (const std::string* text : {&fixtures::fig1_metadata(), &fixtures::audio_metadata(),
                                    &fixtures::hierarchical_metadata()}) {
        const MetadataDocument doc = parse_metadata(*text);
        const MetadataDocument again = parse_metadata(write_json(doc.root));
        CHECK(doc.root == again.root);
    }
    // integer vs real survives
    const MetadataDocument doc = parse_metadata("{\"a\": 1, \"b\": 1.0, \"c\": true}");
    const MetadataDocument again = parse_metadata(write_json(doc.root));
    CHECK(again.root.find("a")->is_integer());
    CHECK(again.root.find("b")->is_real());
    CHECK(again.root.find("c")->is_boolean());
}

TEST_CASE("flattening the two-file recording reproduces its flat table") {
    const auto records = flatten_text(fixtures::fig1_metadata());
    REQUIRE(records.size() == 2);

    const FileRecord& time = records[0];
    const FileRecord& samples = records[1];
    CHECK(time.file_name() == "sensor_time.bin");
    CHECK(samples.file_name() == "sensor_samples.bin");

    for (const FileRecord* r : {&time, &samples}) {
        CHECK(r->subject_id() == "0713");
        CHECK(r->study_id() == "drug513trialphase2");
        CHECK(r->device_id() == "serialUID071290123");
        CHECK(r->endianness() == Endianness::Little);
        CHECK(r->metadata_version() == "0.1");
        CHECK(r->start_iso8601() == "2019-12-19T12:41:45.716+00:00");
        CHECK(r->end_iso8601() == "2019-12-19T13:39:33.151+00:00");
        CHECK(r->rows() == 4833);
    }
    CHECK(time.channels() == std::vector<std::string>{"time"});
    CHECK(time.units() == std::vector<std::string>{"s"});
    CHECK(time.compression() == "difference");
    CHECK(time.data_type() == DataType::Float);
    CHECK(time.bits() == 32);

    CHECK(samples.channels() == std::vector<std::string>{"pos", "vel", "accl"});
    CHECK(samples.units() == std::vector<std::string>{"m", "m/s", "m/s/s"});
    CHECK_FALSE(samples.compression().has_value());
    CHECK(samples.data_type() == DataType::Int);
    CHECK(samples.bits() == 16);

    // the two files belong to one group
    CHECK(time.group_id == samples.group_id);
}

TEST_CASE("flattening the hierarchical document resolves inheritance and groups") {
    const auto records = flatten_text(fixtures::hierarchical_metadata());
    REQUIRE(records.size() == 4);
    CHECK(records[0].file_name() == "accelerometer_t1.bin");
    CHECK(records[1].file_name() == "temperature_t1.bin");
    CHECK(records[2].file_name() == "accelerometer_t2.bin");
    CHECK(records[3].file_name() == "temperature_t2.bin");

    for (const FileRecord& r : records) {
        CHECK(r.device_id() == "XBT7456");
        CHECK(r.subject_id() == "PD0234");
        CHECK(r.data_type() == DataType::Float);
        CHECK(r.bits() == 32);
    }
    CHECK(records[0].start_iso8601() == "2022-10-26T09:26:45.123+00:00");
    CHECK(records[1].start_iso8601() == "2022-10-26T09:26:45.123+00:00");
    CHECK(records[2].start_iso8601() == "2022-10-28T10:42:12.465+00:00");
    CHECK(records[0].rows() == 60714);
    CHECK(records[1].rows() == 607);
    CHECK(records[2].rows() == 1154411);
    CHECK(records[3].rows() == 11544);

    CHECK(records[0].group_id == records[1].group_id);
    CHECK(records[2].group_id == records[3].group_id);
    CHECK(records[0].group_id != records[2].group_id);
}

TEST_CASE("a flat document flattens to a single record carrying the root fields") {
    const auto records = flatten_text(fixtures::audio_metadata());
    REQUIRE(records.size() == 1);
    const FileRecord& r = records[0];
    CHECK(r.fields.size() == 15);
    CHECK(r.file_name() == "audio_voice_089.raw");
    CHECK(r.sampling_rate() == 44100.0);
    CHECK(r.compression() == "none");
}

TEST_CASE("deeper levels override shallower ones") {
    const auto records = flatten_text(R"({
        "bits": 32,
        "leaves": [{"file_name": "a.bin", "bits": 16}, {"file_name": "b.bin"}]
    })");
    REQUIRE(records.size() == 2);
    CHECK(records[0].bits() == 16);
    CHECK(records[1].bits() == 32);
}

TEST_CASE("flatten rejects a non-string file_name and mixed lists") {
    CHECK_THROWS_AS(flatten_text("{\"file_name\": 3}"), Error);
    CHECK_THROWS_AS(flatten_text("{\"x\": [1, {\"file_name\": \"a.bin\"}]}"), Error);
}

TEST_CASE("legacy field spellings are accepted as aliases and warned about") {
    const auto records = flatten_text(R"({
        "endianess": "little",
        "signals": [{"filename": "a.bin"}]
    })");
    REQUIRE(records.size() == 1);
    CHECK(records[0].endianness() == Endianness::Little);
    CHECK(records[0].file_name() == "a.bin");

    const ValidationReport report = validate(records);
    CHECK(report.has_code("alias_field:endianess"));
    CHECK(report.has_code("alias_field:filename"));

    // both spellings of one field in the same mapping are ambiguous
    CHECK_THROWS_AS(
        flatten_text(R"({"endianness": "little", "endianess": "big", "file_name": "a.bin"})"),
        Error);
}

TEST_CASE("the reference records validate with zero errors") {
    for (const std::string* text : {&fixtures::fig1_metadata(), &fixtures::audio_metadata(),
                                    &fixtures::hierarchical_metadata()}) {
        const ValidationReport report = validate(flatten_text(*text));
        CHECK(report.error_count() == 0);
    }
}

TEST_CASE("validate pinpoints missing and broken fields") {
    auto records = flatten_text(fixtures::fig1_metadata());

    SUBCASE("missing mandatory field") {
        records[0].fields.erase("endianness");
        const auto report = validate(records);
        CHECK(report.error_count() == 1);
        CHECK(report.has_code("missing_mandatory:endianness"));
    }
    SUBCASE("channel and unit arity must agree") {
        Value units = Value::list();
        units.push_back(Value("m/s/s"));
        records[1].set("channels", [] {
            Value v = Value::list();
            v.push_back(Value("X"));
            v.push_back(Value("Y"));
            v.push_back(Value("Z"));
            return v;
        }());
        records[1].set("units", units);
        const auto report = validate(records);
        CHECK(report.error_count() == 1);
        CHECK(report.has_code("channels_units_length_mismatch"));
    }
    SUBCASE("unsupported bit widths") {
        records[1].set("bits", Value(24));
        CHECK(validate(records).has_code("invalid_value:bits"));
    }
    SUBCASE("float requires 32 or 64 bits") {
        records[0].set("bits", Value(16)); // data_type is float
        CHECK(validate(records).has_code("invalid_value:bits"));
    }
    SUBCASE("unknown data_type") {
        records[1].set("data_type", Value("complex"));
        CHECK(validate(records).has_code("invalid_value:data_type"));
    }
    SUBCASE("ill-typed rows") {
        records[1].set("rows", Value("many"));
        CHECK(validate(records).has_code("ill_typed:rows"));
    }
    SUBCASE("negative rows") {
        records[1].set("rows", Value(-1));
        CHECK(validate(records).has_code("invalid_value:rows"));
    }
    SUBCASE("malformed timestamps") {
        records[1].set("start_iso8601", Value("2019-12-19 12:41"));
        CHECK(validate(records).has_code("invalid_iso8601:start_iso8601"));
    }
    SUBCASE("start after end") {
        records[1].set("start_iso8601", Value("2020-01-01T00:00:00.000+00:00"));
        CHECK(validate(records).has_code("start_after_end"));
    }
    SUBCASE("absolute paths are not portable") {
        records[1].set("file_name", Value("/abs/path.bin"));
        CHECK(validate(records).has_code("absolute_path"));
    }
    SUBCASE("non-positive sampling rate") {
        records[1].set("sampling_rate", Value(0.0));
        CHECK(validate(records).has_code("invalid_value:sampling_rate"));
    }
    SUBCASE("empty mandatory value") {
        records[1].set("subject_id", Value(""));
        CHECK(validate(records).has_code("empty_mandatory:subject_id"));
    }
    SUBCASE("scale factor arity") {
        Value factors = Value::list();
        factors.push_back(Value(0.5));
        records[1].set("scale_factors", factors);
        CHECK(validate(records).has_code("scale_factors_length_mismatch"));
    }
}

TEST_CASE("unrecognized values warn but stay legal") {
    auto records = flatten_text(fixtures::fig1_metadata());
    records[0].set("compression", Value("gzip"));
    records[1].set("firmware_rev", Value("1.2.7"));
    records[1].set("metadata_version", Value("0.2"));
    const auto report = validate(records);
    CHECK(report.error_count() == 0);
    CHECK(report.has_code("unknown_compression"));
    CHECK(report.has_code("unknown_field:firmware_rev"));
    CHECK(report.has_code("metadata_version_unpinned"));
}

TEST_CASE("grouped serialization hoists the shared fields to the root") {
    const auto records = flatten_text(fixtures::fig1_metadata());
    const MetadataDocument doc =
        build_metadata_document(records, MetadataLayout::GroupedByCommonPrefix);

    // the eight fields common to both files sit at the root
    for (const char* name : {"subject_id", "study_id", "device_id", "endianness",
                             "metadata_version", "start_iso8601", "end_iso8601", "rows"})
        CHECK(doc.root.contains(name));
    CHECK_FALSE(doc.root.contains("file_name"));
    const Value* leaves = doc.root.find("samples");
    REQUIRE(leaves != nullptr);
    REQUIRE(leaves->is_list());
    CHECK(leaves->size() == 2);
    CHECK_FALSE((*leaves)[0].contains("subject_id"));

    const auto again = flatten(parse_metadata(serialize_metadata(records)));
    CHECK(semantically_equal(std::span<const FileRecord>(again),
                             std::span<const FileRecord>(records)));
}

TEST_CASE("a single record serializes to a flat document") {
    const auto records = flatten_text(fixtures::audio_metadata());
    SerializeOptions options;
    options.layout = MetadataLayout::FlatPerFile;
    const MetadataDocument doc = parse_metadata(serialize_metadata(records, options));

    // same field set and values as the source document, root level
    const MetadataDocument source = parse_metadata(fixtures::audio_metadata());
    REQUIRE(doc.root.size() == source.root.size());
    for (std::size_t i = 0; i < source.root.size(); ++i) {
        const Value* v = doc.root.find(source.root.key(i));
        REQUIRE(v != nullptr);
        CHECK(*v == source.root[i]);
    }
}

TEST_CASE("serializing nothing is an error") {
    try {
        serialize_metadata({});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == "nothing_to_serialize");
    }
}

// ------------------------------------------------------------- properties

namespace {

FileRecord random_record(std::mt19937_64& rng, int index, int group_id) {
    FileRecord rec;
    rec.group_id = group_id;
    rec.set("subject_id", Value("subj" + std::to_string(rng() % 5)));
    rec.set("study_id", Value("study" + std::to_string(rng() % 3)));
    rec.set("device_id", Value("dev" + std::to_string(rng() % 4)));
    rec.set("endianness", Value(rng() % 2 ? "little" : "big"));
    rec.set("metadata_version", Value("0.1"));
    rec.set("start_iso8601", Value("2021-03-04T05:06:07.123+00:00"));
    rec.set("end_iso8601", Value("2021-03-04T06:06:07.123+00:00"));
    rec.set("rows", Value(static_cast<std::int64_t>(rng() % 10000)));
    rec.set("file_name", Value("file" + std::to_string(index) + ".bin"));

    const std::size_t n_channels = 1 + rng() % 4;
    Value channels = Value::list();
    Value units = Value::list();
    for (std::size_t c = 0; c < n_channels; ++c) {
        channels.push_back(Value("c" + std::to_string(c)));
        units.push_back(Value("unitless"));
    }
    rec.set("channels", channels);
    rec.set("units", units);

    const bool is_float = rng() % 2;
    rec.set("data_type", Value(is_float ? "float" : "int"));
    rec.set("bits", Value(is_float ? (rng() % 2 ? 32 : 64) : (rng() % 2 ? 16 : 32)));

    if (rng() % 3 == 0) rec.set("sensor_type", Value("kind" + std::to_string(rng() % 3)));
    if (rng() % 3 == 0) rec.set("x_note", Value(static_cast<std::int64_t>(rng() % 100)));
    if (rng() % 4 == 0) {
        Value factors = Value::list();
        for (std::size_t c = 0; c < n_channels; ++c)
            factors.push_back(Value(0.25 * static_cast<double>(1 + rng() % 8)));
        rec.set("scale_factors", factors);
    }
    return rec;
}

} // namespace

TEST_CASE("random record lists survive the serialize/parse/flatten round trip") {
    std::mt19937_64 rng(17);
    for (int iter = 0; iter < 100; ++iter) {
        std::vector<FileRecord> records;
        int index = 0;
        const int n_groups = 1 + static_cast<int>(rng() % 3);
        for (int g = 0; g < n_groups; ++g) {
            const int members = 1 + static_cast<int>(rng() % 3);
            for (int m = 0; m < members; ++m) records.push_back(random_record(rng, index++, g));
        }
        SerializeOptions options;
        options.layout = rng() % 2 ? MetadataLayout::GroupedByCommonPrefix
                                   : MetadataLayout::FlatPerFile;
        const std::string text = serialize_metadata(records, options);
        const auto again = flatten(parse_metadata(text));
        REQUIRE(validate(again).error_count() == 0);
        CHECK(semantically_equal(std::span<const FileRecord>(again),
                                 std::span<const FileRecord>(records)));
    }
}

TEST_CASE("injecting a leaf field overrides any inherited value and nothing else") {
    std::mt19937_64 rng(23);
    for (int iter = 0; iter < 50; ++iter) {
        std::vector<FileRecord> records;
        for (int i = 0; i < 4; ++i) records.push_back(random_record(rng, i, i / 2));
        MetadataDocument doc = build_metadata_document(
            records, MetadataLayout::GroupedByCommonPrefix);
        const auto before = flatten(doc);

        // put a fresh value on one leaf
        Value* signals = doc.root.find("signals");
        Value* container = signals ? signals : doc.root.find("samples");
        REQUIRE(container != nullptr);
        Value& first_group = (*container)[0];
        Value* leaves = first_group.is_mapping() ? first_group.find("samples") : &first_group;
        Value& leaf = leaves && leaves->is_list() ? (*leaves)[0] : first_group;
        leaf.set("rows", Value(static_cast<std::int64_t>(999999)));

        const auto after = flatten(doc);
        REQUIRE(after.size() == before.size());
        CHECK(after[0].rows() == 999999);
        for (std::size_t i = 1; i < after.size(); ++i)
            CHECK(semantically_equal(after[i], before[i]));
    }
}

TEST_CASE("flatten yields one record per file_name in document order") {
    std::mt19937_64 rng(29);
    for (int iter = 0; iter < 50; ++iter) {
        std::vector<FileRecord> records;
        const int n = 1 + static_cast<int>(rng() % 6);
        for (int i = 0; i < n; ++i)
            records.push_back(random_record(rng, i, static_cast<int>(rng() % 3)));
        // contiguous groups, as flatten would produce them
        std::stable_sort(records.begin(), records.end(),
                         [](const FileRecord& a, const FileRecord& b) {
                             return a.group_id < b.group_id;
                         });
        std::vector<std::string> expected_names;
        for (const FileRecord& r : records) expected_names.push_back(r.file_name());

        const std::string text = serialize_metadata(records);
        // count occurrences in the text itself
        std::size_t occurrences = 0;
        for (std::size_t pos = text.find("\"file_name\""); pos != std::string::npos;
             pos = text.find("\"file_name\"", pos + 1))
            ++occurrences;

        const auto again = flatten(parse_metadata(text));
        REQUIRE(again.size() == occurrences);
        for (std::size_t i = 0; i < again.size(); ++i)
            CHECK(again[i].file_name() == expected_names[i]);
    }
}
