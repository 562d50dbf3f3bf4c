#include "tsdf/convert.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>

#include "tsdf/error.hpp"

namespace tsdf {

namespace {

namespace fs = std::filesystem;

/// "X [m/s/s]" -> ("X", "m/s/s"); no annotation -> unit "unitless".
std::pair<std::string, std::string> split_header(const std::string& header) {
    const auto open = header.rfind(" [");
    if (open != std::string::npos && header.back() == ']') {
        std::string label = header.substr(0, open);
        std::string unit = header.substr(open + 2, header.size() - open - 3);
        if (!label.empty() && !unit.empty()) return {label, unit};
    }
    return {header, "unitless"};
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io_error", "cannot open \"" + path.string() + "\"");
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

} // namespace

Recording import_csv(const std::string& csv_text, const CsvImportOptions& options,
                     const fs::path& out_dir) {
    CsvReader reader(csv_text, options.dialect);
    const auto header = reader.next_row();
    if (!header || (header->size() == 1 && header->front().empty()))
        throw Error("csv_parse_error", "input has no header row");

    std::vector<std::string> labels, units;
    std::optional<std::size_t> time_col;
    for (std::size_t i = 0; i < header->size(); ++i) {
        auto [label, unit] = split_header((*header)[i]);
        if (options.time_column && label == *options.time_column) {
            if (time_col)
                throw Error("csv_parse_error",
                            "time column \"" + label + "\" appears more than once");
            time_col = i;
            continue;
        }
        labels.push_back(label);
        units.push_back(unit);
    }
    if (options.time_column && !time_col)
        throw Error("csv_parse_error",
                    "time column \"" + *options.time_column + "\" not found in the header");
    if (labels.empty())
        throw Error("csv_parse_error", "no data columns in the header");
    if (!time_col && !(options.sampling_rate && *options.sampling_rate > 0))
        throw Error("csv_parse_error",
                    "either a time column or a positive sampling_rate is required");

    const std::int64_t unit_ns = time_unit_nanos(options.time_unit);
    const EpochNanos start_ns = to_epoch_nanos(options.start);

    std::vector<double> values;        // row-major amplitude samples
    std::vector<double> elapsed;       // raw time column values
    std::vector<EpochNanos> instants;
    std::size_t rows = 0;
    bool time_integral = true;

    while (auto row = reader.next_row()) {
        if (row->size() == 1 && row->front().empty()) continue; // trailing blank line
        if (row->size() != header->size())
            throw Error("csv_parse_error",
                        "row at line " + std::to_string(reader.row_line()) + " has " +
                            std::to_string(row->size()) + " fields, header has " +
                            std::to_string(header->size()));
        for (std::size_t i = 0; i < row->size(); ++i) {
            const auto number = csv_parse_number((*row)[i], options.dialect);
            if (!number)
                throw Error("csv_parse_error",
                            "cannot parse \"" + (*row)[i] + "\" as a number at line " +
                                std::to_string(reader.row_line()) + ", column " +
                                std::to_string(i + 1));
            if (time_col && i == *time_col) {
                const double v = *number;
                if (options.strict_monotone && !elapsed.empty() && v <= elapsed.back())
                    throw Error("nonmonotonic_time",
                                "time value at line " + std::to_string(reader.row_line()) +
                                    " does not increase strictly");
                if (options.time_encoding == TimeKind::Difference && !elapsed.empty() &&
                    v < elapsed.back())
                    throw Error("nonmonotonic_time",
                                "time value at line " + std::to_string(reader.row_line()) +
                                    " decreases; difference encoding needs ordered time");
                elapsed.push_back(v);
                if (v != std::floor(v)) time_integral = false;
                instants.push_back(
                    start_ns +
                    llroundl(static_cast<long double>(v) * static_cast<long double>(unit_ns)));
            } else {
                values.push_back(*number);
            }
        }
        ++rows;
    }

    RecordingPlan plan;
    plan.subject_id = options.subject_id;
    plan.study_id = options.study_id;
    plan.device_id = options.device_id;
    plan.start = options.start;
    plan.metadata_file_name = options.metadata_file_name;

    GroupPlan group;
    group.sensor_type = options.sensor_type;

    SignalPlan signal;
    signal.file_name = options.samples_file_name;
    signal.channels = labels;
    signal.units = units;
    signal.data_type = options.data_type;
    signal.bits = options.bits;
    signal.samples.rows = rows;
    signal.samples.n_channels = labels.size();
    signal.samples.physical = std::move(values);

    if (time_col) {
        group.time_kind = options.time_encoding;
        group.time_unit = options.time_unit;
        group.instants = std::move(instants);
        TimeFilePlan time_file;
        time_file.file_name = options.time_file_name;
        // integral values that fit 32 bits keep the compact uint layout;
        // fractional values fall back to float64 so nothing is lost
        const double max_elapsed = elapsed.empty() ? 0.0 : elapsed.back();
        if (time_integral && max_elapsed < 4294967296.0 &&
            (elapsed.empty() || elapsed.front() >= 0.0)) {
            time_file.data_type = DataType::UInt;
            time_file.bits = 32;
        } else {
            time_file.data_type = DataType::Float;
            time_file.bits = 64;
        }
        group.time_file = time_file;
    } else {
        group.time_kind = TimeKind::Uniform;
        group.sampling_rate = options.sampling_rate;
    }

    group.signals.push_back(std::move(signal));
    plan.groups.push_back(std::move(group));

    create_recording(plan, out_dir);
    return open_recording(out_dir / options.metadata_file_name);
}

Recording import_csv_file(const fs::path& csv_path, const CsvImportOptions& options,
                          const fs::path& out_dir) {
    return import_csv(read_text(csv_path), options, out_dir);
}

std::string export_csv(const Recording& rec, int group_id, std::size_t row_start,
                       std::size_t row_count, const CsvExportOptions& options) {
    const SignalGroup& group = rec.group(group_id);
    const GroupSlice slice = read_group(rec, group_id, row_start, row_count);

    const Iso8601Timestamp base = parse_iso8601(
        rec.records[group.amplitude_records.empty() ? *group.time_file
                                                    : group.amplitude_records.front()]
            .start_iso8601()
            .value_or("1970-01-01T00:00:00Z"));
    const EpochNanos base_ns = to_epoch_nanos(base);
    const std::int64_t unit_ns = time_unit_nanos(options.elapsed_unit);

    std::string out;
    std::vector<std::string> row;
    row.push_back(options.iso_timestamps ? "time_iso8601"
                                         : "time [" + options.elapsed_unit + "]");
    for (std::size_t m = 0; m < group.amplitude_records.size(); ++m) {
        const FileRecord& record = rec.records[group.amplitude_records[m]];
        const auto labels = record.channels().value_or(std::vector<std::string>{});
        const auto units = record.units().value_or(std::vector<std::string>{});
        for (std::size_t c = 0; c < labels.size(); ++c)
            row.push_back(labels[c] + " [" + (c < units.size() ? units[c] : "unitless") + "]");
    }
    csv_append_row(out, row, options.dialect);

    for (std::size_t r = 0; r < slice.timestamps.size(); ++r) {
        row.clear();
        const EpochNanos t = slice.timestamps[r];
        if (options.iso_timestamps) {
            row.push_back(format_iso8601(
                from_epoch_nanos(t, base.offset_kind, base.offset_minutes, 9)));
        } else {
            const double elapsed = static_cast<double>(static_cast<long double>(t - base_ns) /
                                                       static_cast<long double>(unit_ns));
            row.push_back(csv_format_number(elapsed, options.dialect));
        }
        for (const SampleMatrix& matrix : slice.matrices)
            for (std::size_t c = 0; c < matrix.n_channels; ++c)
                row.push_back(csv_format_number(matrix.at(r, c), options.dialect));
        csv_append_row(out, row, options.dialect);
    }
    return out;
}

Recording synth(const SynthSpec& spec, const fs::path& out_dir) {
    if (spec.channels == 0 || !(spec.sampling_rate > 0) || spec.duration_s < 0)
        throw Error("inconsistent_plan", "synth needs channels >= 1, rate > 0, duration >= 0");
    const std::size_t rows =
        static_cast<std::size_t>(llround(spec.sampling_rate * spec.duration_s));

    RecordingPlan plan;
    plan.subject_id = spec.subject_id;
    plan.study_id = spec.study_id;
    plan.device_id = spec.device_id + "-seed" + std::to_string(spec.seed);
    plan.start = parse_iso8601("2020-01-01T00:00:00.000+00:00");

    GroupPlan group;
    group.sensor_type = "synthetic";
    group.time_kind = TimeKind::Uniform;
    group.sampling_rate = spec.sampling_rate;

    SignalPlan signal;
    signal.file_name = "samples.bin";
    for (std::size_t c = 0; c < spec.channels; ++c) {
        signal.channels.push_back("ch" + std::to_string(c + 1));
        signal.units.push_back("unitless");
    }
    signal.data_type = spec.data_type;
    signal.bits = spec.bits;
    signal.samples.rows = rows;
    signal.samples.n_channels = spec.channels;
    signal.samples.physical.resize(rows * spec.channels);

    // triangle carrier plus uniform noise; integer phase arithmetic keeps
    // the waveform identical across platforms
    std::mt19937_64 rng(spec.seed);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < spec.channels; ++c) {
            const std::size_t phase = (r * (c + 2)) % 200;
            const double tri =
                (phase < 100 ? static_cast<double>(phase) : 200.0 - static_cast<double>(phase)) /
                    100.0 -
                0.5;
            const double noise = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
            signal.samples.physical[r * spec.channels + c] = tri + 0.1 * noise;
        }
    }

    group.signals.push_back(std::move(signal));
    plan.groups.push_back(std::move(group));
    plan.metadata_file_name = spec.metadata_file_name;
    create_recording(plan, out_dir);
    return open_recording(out_dir / spec.metadata_file_name);
}

BenchReport bench_storage(const Recording& rec) {
    using clock = std::chrono::steady_clock;
    BenchReport report;

    for (const FileRecord& record : rec.records)
        report.binary_bytes += BinaryLayout::from_record(record).expected_bytes();

    std::uint64_t csv_bytes = 0;
    for (const SignalGroup& group : rec.groups) {
        const std::size_t rows = static_cast<std::size_t>(
            rec.records[group.amplitude_records.empty() ? *group.time_file
                                                        : group.amplitude_records.front()]
                .rows()
                .value_or(0));
        csv_bytes += export_csv(rec, group.group_id, 0, rows).size();
    }
    report.csv_bytes = csv_bytes;

    const SignalGroup& first = rec.groups.front();
    report.rows = static_cast<std::size_t>(
        rec.records[first.amplitude_records.empty() ? *first.time_file
                                                    : first.amplitude_records.front()]
            .rows()
            .value_or(0));

    if (report.rows > 0 && report.binary_bytes > 0) {
        report.ratio = static_cast<double>(report.csv_bytes) /
                       static_cast<double>(report.binary_bytes);

        const auto t0 = clock::now();
        const GroupSlice full = read_group(rec, first.group_id, 0, report.rows);
        const auto t1 = clock::now();
        report.full_load_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        (void)full;

        const std::size_t slice_rows = std::max<std::size_t>(1, report.rows / 100);
        std::mt19937_64 rng(42);
        const std::size_t offset =
            report.rows > slice_rows
                ? static_cast<std::size_t>(rng() % (report.rows - slice_rows))
                : 0;
        const auto t2 = clock::now();
        const GroupSlice part = read_group(rec, first.group_id, offset, slice_rows);
        const auto t3 = clock::now();
        report.random_slice_ms = std::chrono::duration<double, std::milli>(t3 - t2).count();
        (void)part;
    }
    return report;
}

std::string format_bench_report(const BenchReport& report) {
    std::string out;
    const auto line = [&](const std::string& name, const std::string& value) {
        out += "  ";
        out += name;
        out.append(name.size() < 18 ? 18 - name.size() : 1, ' ');
        out += value;
        out += '\n';
    };
    out += "storage and latency report\n";
    line("rows", std::to_string(report.rows));
    line("binary_bytes", std::to_string(report.binary_bytes));
    line("csv_bytes", std::to_string(report.csv_bytes));
    line("csv_to_binary", report.ratio ? csv_format_number(*report.ratio) : "undefined");
    line("full_load_ms", csv_format_number(report.full_load_ms));
    line("random_slice_ms", csv_format_number(report.random_slice_ms));

    out += "metric rows " + std::to_string(report.rows) + "\n";
    out += "metric binary_bytes " + std::to_string(report.binary_bytes) + "\n";
    out += "metric csv_bytes " + std::to_string(report.csv_bytes) + "\n";
    out += "metric csv_to_binary " + (report.ratio ? csv_format_number(*report.ratio)
                                                   : std::string("undefined")) + "\n";
    out += "metric full_load_ms " + csv_format_number(report.full_load_ms) + "\n";
    out += "metric random_slice_ms " + csv_format_number(report.random_slice_ms) + "\n";
    return out;
}

} // namespace tsdf
