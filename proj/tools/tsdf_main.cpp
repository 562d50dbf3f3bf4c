#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tsdf/convert.hpp"
#include "tsdf/dataset.hpp"
#include "tsdf/error.hpp"
#include "tsdf/indexer.hpp"
#include "tsdf/metadata.hpp"

namespace {

using namespace tsdf;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitFindings = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io_error", "cannot open \"" + path.string() + "\"");
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_output(const std::optional<std::string>& out_path, const std::string& data) {
    if (!out_path) {
        std::cout << data;
        return;
    }
    std::ofstream out(*out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io_error", "cannot write \"" + *out_path + "\"");
    out << data;
}

std::string json_escape(const std::string& s) {
    Value v(s);
    return write_json_compact(v);
}

std::string violation_json(const Violation& v) {
    return "{\"severity\": " +
           json_escape(v.severity == Severity::Error ? "error" : "warning") +
           ", \"path\": " + json_escape(v.path) + ", \"code\": " + json_escape(v.code) +
           ", \"message\": " + json_escape(v.message) + "}";
}

std::string report_text(const ValidationReport& report, bool json_lines) {
    if (!json_lines) return report.to_string();
    std::string out;
    for (const Violation& v : report.violations) out += violation_json(v) + "\n";
    return out;
}

std::pair<std::size_t, std::size_t> parse_row_range(const std::string& text) {
    const auto sep = text.find("..");
    if (sep == std::string::npos)
        throw CLI::ValidationError("--rows", "expected A..B");
    std::size_t a = 0, b = 0;
    try {
        a = std::stoull(text.substr(0, sep));
        b = std::stoull(text.substr(sep + 2));
    } catch (const std::exception&) {
        throw CLI::ValidationError("--rows", "expected A..B with numeric bounds");
    }
    if (b < a) throw CLI::ValidationError("--rows", "range end before start");
    return {a, b};
}

/// Flattened fields-by-files table for `info`.
std::string info_table(const std::vector<FileRecord>& records) {
    std::vector<std::string> field_order;
    const auto push_unique = [&](const std::string& name) {
        for (const auto& f : field_order)
            if (f == name) return;
        field_order.push_back(name);
    };
    for (std::string_view name : mandatory_field_names()) {
        for (const FileRecord& r : records)
            if (r.fields.contains(name)) {
                push_unique(std::string(name));
                break;
            }
    }
    for (const FileRecord& r : records)
        for (std::size_t i = 0; i < r.fields.size(); ++i) push_unique(r.fields.key(i));

    std::vector<std::vector<std::string>> cells;
    cells.push_back({"field"});
    for (std::size_t c = 0; c < records.size(); ++c)
        cells.front().push_back("file " + std::to_string(c + 1));
    for (const std::string& name : field_order) {
        std::vector<std::string> row{name};
        for (const FileRecord& r : records) {
            const Value* v = r.fields.find(name);
            row.push_back(v ? write_json_compact(*v) : "");
        }
        cells.push_back(std::move(row));
    }

    std::vector<std::size_t> widths(records.size() + 1, 0);
    for (const auto& row : cells)
        for (std::size_t c = 0; c < row.size(); ++c)
            widths[c] = std::max(widths[c], row[c].size());

    std::string out;
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out += row[c];
            if (c + 1 < row.size()) out.append(widths[c] - row[c].size() + 2, ' ');
        }
        out += '\n';
    }
    return out;
}

struct DialectFlags {
    std::string delimiter = ",";
    std::string decimal = ".";
    std::string quote = "\"";

    void attach(CLI::App* cmd) {
        cmd->add_option("--delimiter", delimiter, "field separator character")
            ->default_val(",");
        cmd->add_option("--decimal", decimal, "decimal mark character")->default_val(".");
        cmd->add_option("--quote", quote, "quote character")->default_val("\"");
    }

    CsvDialect dialect() const {
        if (delimiter.size() != 1 || decimal.size() != 1 || quote.size() != 1)
            throw CLI::ValidationError("dialect", "characters must be single characters");
        return CsvDialect{delimiter[0], decimal[0], quote[0]};
    }
};

std::optional<std::int64_t> env_tolerance_ns() {
    if (const char* text = std::getenv("TSDF_AUDIT_TOLERANCE_MS")) {
        try {
            return static_cast<std::int64_t>(std::stod(text) * 1e6);
        } catch (...) {
            throw Error("io_error", "TSDF_AUDIT_TOLERANCE_MS is not a number");
        }
    }
    return std::nullopt;
}

int run(int argc, char** argv) {
    CLI::App app{"Reader, writer, validator and indexer for recordings stored as JSON "
                 "metadata plus raw multiplexed binary sample files"};
    app.require_subcommand(1);
    const auto add_format = [&](CLI::App* cmd) {
        cmd->add_option("--format", "output format: text or json-lines")
            ->check(CLI::IsMember({"text", "json-lines"}));
        return cmd;
    };
    const auto wants_json = [](const CLI::App* cmd) {
        const CLI::Option* option = cmd->get_option("--format");
        return option->count() > 0 && option->as<std::string>() == "json-lines";
    };

    // ------------------------------------------------------------ validate
    std::string validate_path;
    auto* cmd_validate = add_format(app.add_subcommand(
        "validate", "parse, flatten and validate a metadata document; exit 0 iff no errors"));
    cmd_validate->add_option("metadata", validate_path, "metadata .json path")->required();

    // ---------------------------------------------------------------- info
    std::string info_path;
    auto* cmd_info = add_format(
        app.add_subcommand("info", "flattened fields-by-files view of a metadata document"));
    cmd_info->add_option("metadata", info_path, "metadata .json path")->required();

    // --------------------------------------------------------------- audit
    std::string audit_path;
    double audit_tolerance_ms = -1.0;
    auto* cmd_audit = add_format(app.add_subcommand(
        "audit", "cross-file consistency audit including the end-timestamp check; "
                 "default tolerance is one stored time unit, override with --tolerance or "
                 "the TSDF_AUDIT_TOLERANCE_MS environment variable"));
    cmd_audit->add_option("metadata", audit_path, "metadata .json path")->required();
    cmd_audit->add_option("--tolerance", audit_tolerance_ms,
                          "end-timestamp tolerance in milliseconds");

    // --------------------------------------------------------------- slice
    std::string slice_path, slice_rows = "";
    int slice_group = 0;
    std::optional<std::string> slice_csv_out;
    std::optional<std::string> slice_bin_out;
    bool slice_iso = false;
    std::string slice_unit = "ms";
    auto* cmd_slice =
        app.add_subcommand("slice", "read a row range of one group; emit CSV or a new recording");
    cmd_slice->add_option("metadata", slice_path, "metadata .json path")->required();
    cmd_slice->add_option("--group", slice_group, "group id")->default_val(0);
    cmd_slice->add_option("--rows", slice_rows, "row range A..B (half-open)")->required();
    cmd_slice->add_option("--csv", slice_csv_out, "write CSV here instead of stdout");
    cmd_slice->add_option("--bin", slice_bin_out, "write a sliced recording into this directory");
    cmd_slice->add_flag("--iso", slice_iso, "ISO 8601 timestamps instead of elapsed time");
    cmd_slice->add_option("--unit", slice_unit, "unit of the elapsed-time column");

    // ---------------------------------------------------------- import-csv
    std::string import_path, import_out;
    DialectFlags import_dialect;
    CsvImportOptions import_options;
    std::string import_encoding = "relative";
    std::string import_type = "float";
    std::string import_start = "1970-01-01T00:00:00.000+00:00";
    auto* cmd_import = app.add_subcommand("import-csv", "import a typed numeric CSV matrix");
    cmd_import->add_option("csv", import_path, "input CSV path")->required();
    cmd_import->add_option("--out", import_out, "output recording directory")->required();
    import_dialect.attach(cmd_import);
    cmd_import->add_option("--time-column", import_options.time_column,
                           "header label of the time column");
    cmd_import->add_option("--unit", import_options.time_unit, "unit of the time column");
    cmd_import->add_option("--encoding", import_encoding, "time file encoding")
        ->check(CLI::IsMember({"relative", "difference"}));
    cmd_import->add_option("--rate", import_options.sampling_rate,
                           "sampling rate in Hz (uniform import, no time column)");
    cmd_import->add_flag("--strict-monotone", import_options.strict_monotone,
                         "reject duplicate time values");
    cmd_import->add_option("--type", import_type, "amplitude storage type")
        ->check(CLI::IsMember({"int", "uint", "float"}));
    cmd_import->add_option("--bits", import_options.bits, "amplitude storage bit width");
    cmd_import->add_option("--subject", import_options.subject_id, "subject_id");
    cmd_import->add_option("--study", import_options.study_id, "study_id");
    cmd_import->add_option("--device", import_options.device_id, "device_id");
    cmd_import->add_option("--start", import_start, "recording start (ISO 8601)");
    cmd_import->add_option("--sensor-type", import_options.sensor_type, "sensor_type field");

    // ---------------------------------------------------------- export-csv
    std::string export_path;
    std::optional<std::string> export_out;
    int export_group = 0;
    std::string export_rows;
    bool export_iso = false;
    std::string export_unit = "ms";
    DialectFlags export_dialect;
    auto* cmd_export = app.add_subcommand("export-csv", "export a group to CSV");
    cmd_export->add_option("metadata", export_path, "metadata .json path")->required();
    cmd_export->add_option("--group", export_group, "group id")->default_val(0);
    cmd_export->add_option("--rows", export_rows, "row range A..B (default: everything)");
    cmd_export->add_option("--out", export_out, "output file (default: stdout)");
    cmd_export->add_flag("--iso", export_iso, "ISO 8601 timestamps instead of elapsed time");
    cmd_export->add_option("--unit", export_unit, "unit of the elapsed-time column");
    export_dialect.attach(cmd_export);

    // --------------------------------------------------------------- synth
    SynthSpec synth_spec;
    std::string synth_out;
    std::string synth_type = "float";
    auto* cmd_synth = app.add_subcommand("synth", "generate a deterministic synthetic recording");
    cmd_synth->add_option("--channels", synth_spec.channels, "channel count")->default_val(3);
    cmd_synth->add_option("--rate", synth_spec.sampling_rate, "sampling rate in Hz")
        ->default_val(100.0);
    cmd_synth->add_option("--duration", synth_spec.duration_s, "duration in seconds")
        ->default_val(10.0);
    cmd_synth->add_option("--seed", synth_spec.seed, "waveform seed")->default_val(1);
    cmd_synth->add_option("--type", synth_type, "storage type")
        ->check(CLI::IsMember({"int", "uint", "float"}));
    cmd_synth->add_option("--bits", synth_spec.bits, "storage bit width");
    cmd_synth->add_option("--out", synth_out, "output recording directory")->required();

    // --------------------------------------------------------------- bench
    std::string bench_path;
    auto* cmd_bench = add_format(
        app.add_subcommand("bench", "storage and load-latency report for a recording"));
    cmd_bench->add_option("metadata", bench_path, "metadata .json path")->required();

    // --------------------------------------------------------------- index
    auto* cmd_index = app.add_subcommand("index", "relational metadata index");
    cmd_index->require_subcommand(1);

    std::string index_root, index_out;
    auto* cmd_index_build = add_format(
        cmd_index->add_subcommand("build", "scan a tree and materialize the index tables"));
    cmd_index_build->add_option("root", index_root, "directory to scan")->required();
    cmd_index_build->add_option("--out", index_out, "index output directory")->required();

    std::string query_index_dir;
    QueryFilter filter;
    std::string query_from, query_to;
    auto* cmd_index_query =
        add_format(cmd_index->add_subcommand("query", "filter the indexed file rows"));
    cmd_index_query->add_option("--index", query_index_dir, "index directory")->required();
    cmd_index_query->add_option("--subject", filter.subject_id, "subject_id equals");
    cmd_index_query->add_option("--study", filter.study_id, "study_id equals");
    cmd_index_query->add_option("--device", filter.device_id, "device_id equals");
    cmd_index_query->add_option("--sensor-type", filter.sensor_type, "sensor_type equals");
    cmd_index_query->add_option("--channel", filter.channel_label, "has a channel labeled");
    cmd_index_query->add_option("--from", query_from, "overlap window start (ISO 8601)");
    cmd_index_query->add_option("--to", query_to, "overlap window end (ISO 8601)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    // ------------------------------------------------------------ dispatch

    if (*cmd_validate) {
        const auto records = flatten(parse_metadata(read_text_file(validate_path)));
        const ValidationReport report = validate(records);
        std::cerr << report_text(report, wants_json(cmd_validate));
        return report.ok() ? kExitOk : kExitFindings;
    }

    if (*cmd_info) {
        const auto records = flatten(parse_metadata(read_text_file(info_path)));
        if (wants_json(cmd_info)) {
            std::string out;
            for (const FileRecord& r : records) out += write_json_compact(r.fields) + "\n";
            std::cout << out;
        } else {
            std::cout << info_table(records);
        }
        return kExitOk;
    }

    if (*cmd_audit) {
        AuditOptions options;
        options.tolerance_ns = env_tolerance_ns();
        if (audit_tolerance_ms >= 0)
            options.tolerance_ns = static_cast<std::int64_t>(audit_tolerance_ms * 1e6);
        const ValidationReport report = audit_dataset(audit_path, options);
        std::cout << report_text(report, wants_json(cmd_audit));
        return report.ok() ? kExitOk : kExitFindings;
    }

    if (*cmd_slice) {
        const auto [a, b] = parse_row_range(slice_rows);
        const Recording rec = open_recording(slice_path);
        if (slice_bin_out) {
            const SignalGroup& group = rec.group(slice_group);
            const GroupSlice slice = read_group(rec, slice_group, a, b - a);
            RecordingPlan plan;
            const FileRecord& first = rec.records[group.amplitude_records.at(0)];
            plan.subject_id = first.subject_id().value_or("");
            plan.study_id = first.study_id().value_or("");
            plan.device_id = first.device_id().value_or("");
            plan.endianness = first.endianness().value_or(Endianness::Little);
            plan.start = slice.timestamps.empty()
                             ? parse_iso8601(first.start_iso8601().value_or(""))
                             : from_epoch_nanos(
                                   slice.timestamps.front(),
                                   parse_iso8601(first.start_iso8601().value_or("")).offset_kind,
                                   parse_iso8601(first.start_iso8601().value_or(""))
                                       .offset_minutes,
                                   3);
            GroupPlan group_plan;
            group_plan.sensor_type = group.sensor_type;
            // nanosecond relative storage can hold any decoded instant exactly
            group_plan.time_kind = TimeKind::Relative;
            group_plan.time_unit = "ns";
            group_plan.instants = slice.timestamps;
            TimeFilePlan time_file;
            time_file.file_name = "time.bin";
            time_file.data_type = DataType::Int;
            time_file.bits = 64;
            group_plan.time_file = time_file;
            for (std::size_t i = 0; i < group.amplitude_records.size(); ++i) {
                const FileRecord& record = rec.records[group.amplitude_records[i]];
                SignalPlan signal;
                signal.file_name = record.file_name();
                signal.channels = record.channels().value_or(std::vector<std::string>{});
                signal.units = record.units().value_or(std::vector<std::string>{});
                signal.data_type = record.data_type().value_or(DataType::Float);
                signal.bits = static_cast<int>(record.bits().value_or(32));
                signal.scale_factors = record.scale_factors();
                signal.samples = slice.matrices[i];
                group_plan.signals.push_back(std::move(signal));
            }
            plan.groups.push_back(std::move(group_plan));
            create_recording(plan, *slice_bin_out);
            std::cerr << "wrote sliced recording to " << *slice_bin_out << "\n";
            return kExitOk;
        }
        CsvExportOptions options;
        options.iso_timestamps = slice_iso;
        options.elapsed_unit = slice_unit;
        write_output(slice_csv_out, export_csv(rec, slice_group, a, b - a, options));
        return kExitOk;
    }

    if (*cmd_import) {
        import_options.dialect = import_dialect.dialect();
        import_options.time_encoding =
            import_encoding == "difference" ? TimeKind::Difference : TimeKind::Relative;
        import_options.data_type = *data_type_from_name(import_type);
        import_options.start = parse_iso8601(import_start);
        const Recording rec = import_csv_file(import_path, import_options, import_out);
        std::cerr << "imported " << rec.records.front().rows().value_or(0) << " rows into "
                  << import_out << "\n";
        return kExitOk;
    }

    if (*cmd_export) {
        const Recording rec = open_recording(export_path);
        std::size_t a = 0, b = 0;
        if (export_rows.empty()) {
            const SignalGroup& group = rec.group(export_group);
            const std::size_t idx = group.amplitude_records.empty()
                                        ? *group.time_file
                                        : group.amplitude_records.front();
            b = static_cast<std::size_t>(rec.records[idx].rows().value_or(0));
        } else {
            std::tie(a, b) = parse_row_range(export_rows);
        }
        CsvExportOptions options;
        options.dialect = export_dialect.dialect();
        options.iso_timestamps = export_iso;
        options.elapsed_unit = export_unit;
        write_output(export_out, export_csv(rec, export_group, a, b - a, options));
        return kExitOk;
    }

    if (*cmd_synth) {
        synth_spec.data_type = *data_type_from_name(synth_type);
        const Recording rec = synth(synth_spec, synth_out);
        std::cerr << "wrote synthetic recording (" << rec.records.front().rows().value_or(0)
                  << " rows) to " << synth_out << "\n";
        return kExitOk;
    }

    if (*cmd_bench) {
        const Recording rec = open_recording(bench_path);
        const BenchReport report = bench_storage(rec);
        if (wants_json(cmd_bench)) {
            std::string out;
            out += "{\"metric\": \"rows\", \"value\": " + std::to_string(report.rows) + "}\n";
            out += "{\"metric\": \"binary_bytes\", \"value\": " +
                   std::to_string(report.binary_bytes) + "}\n";
            out += "{\"metric\": \"csv_bytes\", \"value\": " +
                   std::to_string(report.csv_bytes) + "}\n";
            out += "{\"metric\": \"csv_to_binary\", \"value\": " +
                   (report.ratio ? csv_format_number(*report.ratio) : std::string("null")) +
                   "}\n";
            out += "{\"metric\": \"full_load_ms\", \"value\": " +
                   csv_format_number(report.full_load_ms) + "}\n";
            out += "{\"metric\": \"random_slice_ms\", \"value\": " +
                   csv_format_number(report.random_slice_ms) + "}\n";
            std::cout << out;
        } else {
            std::cout << format_bench_report(report);
        }
        return kExitOk;
    }

    if (*cmd_index_build) {
        const IndexTable table = build_index(index_root);
        save_index(table, index_out);
        if (wants_json(cmd_index_build)) {
            std::string out;
            out += "{\"indexed_files\": " + std::to_string(table.files.size()) + "}\n";
            for (const SkipEntry& s : table.skipped)
                out += "{\"path\": " + json_escape(s.path) +
                       ", \"reason\": " + json_escape(s.reason) +
                       ", \"indexed\": " + (s.indexed ? "true" : "false") + "}\n";
            std::cout << out;
        } else {
            std::cout << "indexed " << table.files.size() << " file records ("
                      << table.skipped.size() << " scan notes) into " << index_out << "\n";
            for (const SkipEntry& s : table.skipped)
                std::cout << "  " << (s.indexed ? "note" : "skip") << " " << s.path << ": "
                          << s.reason << "\n";
        }
        return kExitOk;
    }

    if (*cmd_index_query) {
        if (!query_from.empty() != !query_to.empty())
            throw CLI::ValidationError("--from/--to", "both bounds are required");
        if (!query_from.empty())
            filter.overlaps = {to_epoch_millis(parse_iso8601(query_from)),
                               to_epoch_millis(parse_iso8601(query_to))};
        const IndexTable table = load_index(query_index_dir);
        const auto hits = query(table, filter);
        std::string out;
        if (wants_json(cmd_index_query)) {
            for (const std::size_t i : hits) {
                const FileRow& f = table.files[i];
                out += "{\"metadata_path\": " + json_escape(f.metadata_path) +
                       ", \"file_name\": " + json_escape(f.file_name) +
                       ", \"subject_id\": " + json_escape(f.subject_id) +
                       ", \"study_id\": " + json_escape(f.study_id) +
                       ", \"device_id\": " + json_escape(f.device_id) + ", \"rows\": " +
                       std::to_string(f.rows) + "}\n";
            }
        } else {
            std::vector<std::string> row{"metadata_path", "file_name",  "subject_id",
                                         "study_id",      "device_id",  "sensor_type",
                                         "start_epoch_ms", "end_epoch_ms", "rows"};
            csv_append_row(out, row);
            for (const std::size_t i : hits) {
                const FileRow& f = table.files[i];
                row = {f.metadata_path,
                       f.file_name,
                       f.subject_id,
                       f.study_id,
                       f.device_id,
                       f.sensor_type.value_or(""),
                       f.start_epoch_ms ? std::to_string(*f.start_epoch_ms) : "",
                       f.end_epoch_ms ? std::to_string(*f.end_epoch_ms) : "",
                       std::to_string(f.rows)};
                csv_append_row(out, row);
            }
        }
        std::cout << out;
        return kExitOk;
    }

    return kExitUsage;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const tsdf::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == "io_error" ? kExitIo : kExitFindings;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
}
