#include "tsdf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "tsdf/detail/md5.hpp"
#include "tsdf/error.hpp"

namespace tsdf {

namespace {

namespace fs = std::filesystem;

std::string read_file_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("io_error", "cannot open \"" + path.string() + "\" for reading");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad())
        throw Error("io_error", "failed reading \"" + path.string() + "\"");
    return text;
}

std::vector<std::byte> read_file_bytes(const fs::path& path) {
    const std::string text = read_file_text(path);
    const auto* begin = reinterpret_cast<const std::byte*>(text.data());
    return std::vector<std::byte>(begin, begin + text.size());
}

/// Time encoding of a time-bearing record. An absent or "none" compression
/// on a record that demonstrably stores time means plain elapsed values,
/// i.e. relative.
TimeEncoding stored_time_encoding(const FileRecord& record, std::size_t channel) {
    TimeEncoding enc;
    enc.kind = TimeKind::Relative;
    if (auto name = record.compression()) {
        if (auto kind = time_kind_from_name(*name); kind && *kind != TimeKind::Uniform)
            enc.kind = *kind;
    }
    const auto units = record.units();
    if (!units || channel >= units->size())
        throw Error("invalid_time_encoding",
                    "record \"" + record.file_name() + "\" lacks a unit for its time channel");
    enc.unit = (*units)[channel];
    enc.base = parse_iso8601(record.start_iso8601().value_or(""));
    return enc;
}

TimeEncoding uniform_time_encoding(const FileRecord& record, double rate) {
    TimeEncoding enc;
    enc.kind = TimeKind::Uniform;
    enc.sampling_rate = rate;
    enc.base = parse_iso8601(record.start_iso8601().value_or(""));
    return enc;
}

std::optional<std::size_t> time_channel_index(const FileRecord& record) {
    const auto channels = record.channels();
    if (!channels) return std::nullopt;
    for (std::size_t i = 0; i < channels->size(); ++i)
        if ((*channels)[i] == "time") return i;
    return std::nullopt;
}

bool is_time_file(const FileRecord& record) {
    const auto channels = record.channels();
    return channels && channels->size() == 1 && channels->front() == "time";
}

/// Extract one column, preferring exact stored integers when no scale
/// factor rewrites them.
void column_values(const SampleMatrix& matrix, const BinaryLayout& layout, std::size_t channel,
                   std::vector<std::int64_t>& ints, std::vector<double>& reals) {
    const double scale = layout.scale_factors ? (*layout.scale_factors)[channel] : 1.0;
    if (!matrix.stored.empty() && scale == 1.0) {
        ints.reserve(matrix.rows);
        for (std::size_t r = 0; r < matrix.rows; ++r) ints.push_back(matrix.stored_at(r, channel));
    } else {
        reals.reserve(matrix.rows);
        for (std::size_t r = 0; r < matrix.rows; ++r) reals.push_back(matrix.at(r, channel));
    }
}

std::vector<EpochNanos> decode_column(const SampleMatrix& matrix, const BinaryLayout& layout,
                                      std::size_t channel, const TimeEncoding& enc,
                                      std::size_t count) {
    std::vector<std::int64_t> ints;
    std::vector<double> reals;
    column_values(matrix, layout, channel, ints, reals);
    if (!ints.empty() || matrix.rows == 0)
        return decode_timestamps(std::span<const std::int64_t>(ints), enc, count);
    return decode_timestamps(std::span<const double>(reals), enc, count);
}

struct GroupBuilder {
    const std::vector<FileRecord>& records;
    ValidationReport& report;

    void fail(const FileRecord& rec, std::string code, std::string message) {
        report.add(Severity::Error, rec.source_path, std::move(code), std::move(message));
    }

    std::vector<SignalGroup> build() {
        std::vector<SignalGroup> groups;
        std::vector<int> order;
        for (std::size_t i = 0; i < records.size(); ++i) {
            const int gid = records[i].group_id;
            auto it = std::find(order.begin(), order.end(), gid);
            if (it == order.end()) {
                order.push_back(gid);
                groups.push_back(SignalGroup{gid, {}, {}, {}, {}});
                it = order.end() - 1;
            }
            groups[static_cast<std::size_t>(it - order.begin())].amplitude_records.push_back(i);
        }
        for (SignalGroup& group : groups) resolve(group);
        return groups;
    }

    void resolve(SignalGroup& group) {
        std::vector<std::size_t> members = std::move(group.amplitude_records);
        group.amplitude_records.clear();

        for (std::size_t idx : members) {
            if (auto sensor = records[idx].sensor_type(); sensor && !group.sensor_type)
                group.sensor_type = sensor;
            if (is_time_file(records[idx])) {
                if (group.time_file) {
                    fail(records[idx], "ambiguous_time_source",
                         "group has more than one time file");
                    return;
                }
                group.time_file = idx;
            }
        }

        for (std::size_t idx : members) {
            const FileRecord& rec = records[idx];
            if (group.time_file && idx == *group.time_file) continue;
            TimeBinding binding;
            if (group.time_file) {
                if (time_channel_index(rec)) {
                    fail(rec, "ambiguous_time_source",
                         "record \"" + rec.file_name() +
                             "\" carries a time channel although its group has a time file");
                    return;
                }
                const auto time_rows = records[*group.time_file].rows();
                if (rec.rows() != time_rows) {
                    fail(rec, "rows_mismatch",
                         "record \"" + rec.file_name() + "\" has " +
                             std::to_string(rec.rows().value_or(0)) + " rows but the time file has " +
                             std::to_string(time_rows.value_or(0)));
                    return;
                }
                binding.kind = TimeBinding::Kind::SharedFile;
                binding.time_record = *group.time_file;
            } else if (auto channel = time_channel_index(rec)) {
                binding.kind = TimeBinding::Kind::OwnChannel;
                binding.channel = *channel;
            } else if (auto rate = rec.sampling_rate()) {
                binding.kind = TimeBinding::Kind::Uniform;
                binding.sampling_rate = *rate;
            } else {
                fail(rec, "no_time_source",
                     "record \"" + rec.file_name() +
                         "\" has no time file, no time channel and no sampling_rate");
                return;
            }
            group.amplitude_records.push_back(idx);
            group.bindings.push_back(binding);
        }
    }
};

/// Shared assembly for open (strict) and audit (lenient).
struct Assembly {
    Recording recording;
    ValidationReport report;
    std::vector<bool> sized_ok; // per record: binary present with the right size
};

Assembly assemble(const fs::path& metadata_path) {
    Assembly a;
    a.recording.metadata_path = metadata_path;
    a.recording.root_dir = metadata_path.parent_path();

    std::string text = read_file_text(metadata_path);
    MetadataDocument doc;
    try {
        doc = parse_metadata(text);
        a.recording.records = flatten(doc);
    } catch (const Error& e) {
        a.report.add(Severity::Error, "$", e.code(), e.what());
        return a;
    }

    a.report = validate(a.recording.records);
    a.sized_ok.assign(a.recording.records.size(), false);

    for (std::size_t i = 0; i < a.recording.records.size(); ++i) {
        const FileRecord& rec = a.recording.records[i];
        BinaryLayout layout;
        try {
            layout = BinaryLayout::from_record(rec);
        } catch (const Error&) {
            continue; // already reported by validate
        }
        const fs::path file = a.recording.binary_path(rec);
        if (!fs::exists(file)) {
            a.report.add(Severity::Error, rec.source_path, "missing_file",
                         "binary file \"" + file.string() + "\" does not exist");
            continue;
        }
        const SizeCheck size = verify_size(file, layout);
        if (!size.ok) {
            a.report.add(Severity::Error, rec.source_path, "size_mismatch",
                         "\"" + rec.file_name() + "\": expected " +
                             std::to_string(size.expected) + " bytes, got " +
                             std::to_string(size.actual));
            continue;
        }
        a.sized_ok[i] = true;
    }

    GroupBuilder builder{a.recording.records, a.report};
    a.recording.groups = builder.build();
    return a;
}

std::int64_t end_precision_nanos(const Iso8601Timestamp& t) {
    std::int64_t unit = 1'000'000'000;
    for (unsigned i = 0; i < t.fraction_digits; ++i) unit /= 10;
    return unit;
}

std::int64_t default_tolerance(const TimeEncoding& enc, const Iso8601Timestamp& end) {
    std::int64_t granularity;
    if (enc.kind == TimeKind::Uniform) {
        const long double period = 1e9L / static_cast<long double>(*enc.sampling_rate);
        granularity = period < 1.0L ? 1 : static_cast<std::int64_t>(llroundl(period));
    } else {
        granularity = time_unit_nanos(enc.unit);
    }
    // disagreement finer than what the end string can express is noise
    return std::max(granularity, end_precision_nanos(end));
}

} // namespace

// -------------------------------------------------------------- Recording

fs::path Recording::binary_path(const FileRecord& record) const {
    return root_dir / fs::path(record.file_name());
}

const SignalGroup& Recording::group(int group_id) const {
    for (const SignalGroup& g : groups)
        if (g.group_id == group_id) return g;
    throw Error("unknown_group", "no group with id " + std::to_string(group_id));
}

Recording open_recording(const fs::path& metadata_path) {
    Assembly a = assemble(metadata_path);
    if (!a.report.ok()) {
        std::string code = "open_failed";
        for (const Violation& v : a.report.violations)
            if (v.severity == Severity::Error) {
                code = v.code;
                break;
            }
        throw Error(code, "cannot open \"" + metadata_path.string() + "\":\n" +
                              a.report.to_string());
    }
    return std::move(a.recording);
}

// ------------------------------------------------------------------ reads

namespace {

std::vector<EpochNanos> decode_binding(const Recording& rec, const TimeBinding& binding,
                                       const FileRecord& amplitude, std::size_t row_start,
                                       std::size_t row_count) {
    switch (binding.kind) {
    case TimeBinding::Kind::Uniform: {
        TimeEncoding enc = uniform_time_encoding(amplitude, binding.sampling_rate);
        const EpochNanos base = to_epoch_nanos(enc.base);
        std::vector<EpochNanos> out;
        out.reserve(row_count);
        for (std::size_t i = 0; i < row_count; ++i)
            out.push_back(uniform_instant(base, binding.sampling_rate, row_start + i));
        return out;
    }
    case TimeBinding::Kind::SharedFile:
    case TimeBinding::Kind::OwnChannel: {
        const FileRecord& source = binding.kind == TimeBinding::Kind::SharedFile
                                       ? rec.records[binding.time_record]
                                       : amplitude;
        const std::size_t channel =
            binding.kind == TimeBinding::Kind::SharedFile ? 0 : binding.channel;
        const TimeEncoding enc = stored_time_encoding(source, channel);
        const BinaryLayout layout = BinaryLayout::from_record(source);
        if (enc.kind == TimeKind::Difference) {
            // reconstructing instant k needs every delta up to k
            const SampleMatrix prefix =
                read_rows(rec.binary_path(source), layout, 0, row_start + row_count);
            std::vector<EpochNanos> all =
                decode_column(prefix, layout, channel, enc, row_start + row_count);
            return {all.begin() + static_cast<std::ptrdiff_t>(row_start), all.end()};
        }
        const SampleMatrix window =
            read_rows(rec.binary_path(source), layout, row_start, row_count);
        return decode_column(window, layout, channel, enc, row_count);
    }
    }
    return {};
}

} // namespace

RecordSlice read_record(const Recording& rec, std::size_t record_index, std::size_t row_start,
                        std::size_t row_count) {
    if (record_index >= rec.records.size())
        throw Error("row_range", "record index out of range");
    const FileRecord& record = rec.records[record_index];
    const BinaryLayout layout = BinaryLayout::from_record(record);
    if (row_start > layout.rows || row_count > layout.rows - row_start)
        throw Error("row_range", "rows [" + std::to_string(row_start) + ", " +
                                     std::to_string(row_start + row_count) + ") exceed " +
                                     std::to_string(layout.rows) + " rows");

    RecordSlice slice;
    slice.matrix = read_rows(rec.binary_path(record), layout, row_start, row_count);

    // locate this record's binding
    for (const SignalGroup& group : rec.groups) {
        if (group.time_file == record_index) {
            const TimeEncoding enc = stored_time_encoding(record, 0);
            if (enc.kind == TimeKind::Difference) {
                const SampleMatrix prefix =
                    read_rows(rec.binary_path(record), layout, 0, row_start + row_count);
                auto all = decode_column(prefix, layout, 0, enc, row_start + row_count);
                slice.timestamps.assign(all.begin() + static_cast<std::ptrdiff_t>(row_start),
                                        all.end());
            } else {
                slice.timestamps = decode_column(slice.matrix, layout, 0, enc, row_count);
            }
            return slice;
        }
        for (std::size_t i = 0; i < group.amplitude_records.size(); ++i) {
            if (group.amplitude_records[i] == record_index) {
                slice.timestamps =
                    decode_binding(rec, group.bindings[i], record, row_start, row_count);
                return slice;
            }
        }
    }
    throw Error("unknown_group", "record is not part of any group");
}

GroupSlice read_group(const Recording& rec, int group_id, std::size_t row_start,
                      std::size_t row_count) {
    const SignalGroup& group = rec.group(group_id);
    if (group.amplitude_records.empty() && group.time_file) {
        GroupSlice slice;
        slice.timestamps =
            read_record(rec, *group.time_file, row_start, row_count).timestamps;
        return slice;
    }
    if (group.amplitude_records.empty())
        throw Error("unknown_group", "group has no records");

    // homogeneity: a single shared time source, or identical per-record grids
    const auto rows0 = rec.records[group.amplitude_records.front()].rows();
    const TimeBinding& b0 = group.bindings.front();
    for (std::size_t i = 0; i < group.amplitude_records.size(); ++i) {
        const TimeBinding& b = group.bindings[i];
        if (b.kind != b0.kind || rec.records[group.amplitude_records[i]].rows() != rows0 ||
            (b.kind == TimeBinding::Kind::Uniform && b.sampling_rate != b0.sampling_rate))
            throw Error("heterogeneous_rows",
                        "group " + std::to_string(group_id) +
                            " mixes row counts or time grids; read its records individually");
    }

    GroupSlice slice;
    slice.timestamps = decode_binding(rec, b0, rec.records[group.amplitude_records.front()],
                                      row_start, row_count);
    for (std::size_t idx : group.amplitude_records) {
        const BinaryLayout layout = BinaryLayout::from_record(rec.records[idx]);
        if (row_start > layout.rows || row_count > layout.rows - row_start)
            throw Error("row_range", "rows [" + std::to_string(row_start) + ", " +
                                         std::to_string(row_start + row_count) + ") exceed " +
                                         std::to_string(layout.rows) + " rows");
        slice.matrices.push_back(read_rows(rec.binary_path(rec.records[idx]), layout, row_start,
                                           row_count));
    }
    return slice;
}

// ------------------------------------------------------------------ audit

namespace {

struct Auditor {
    const Recording& rec;
    const AuditOptions& options;
    const std::vector<bool>* sized_ok; // null means everything was size-checked at open
    ValidationReport& report;

    bool usable(std::size_t idx) const { return !sized_ok || (*sized_ok)[idx]; }

    void check_sizes() {
        for (std::size_t i = 0; i < rec.records.size(); ++i) {
            if (sized_ok && !(*sized_ok)[i]) continue; // already reported
            const FileRecord& record = rec.records[i];
            BinaryLayout layout;
            try {
                layout = BinaryLayout::from_record(record);
            } catch (const Error&) {
                continue;
            }
            const SizeCheck size = verify_size(rec.binary_path(record), layout);
            if (!size.ok)
                report.add(Severity::Error, record.source_path, "size_mismatch",
                           "\"" + record.file_name() + "\": expected " +
                               std::to_string(size.expected) + " bytes, got " +
                               std::to_string(size.actual));
            if (size.expected > options.max_file_bytes)
                report.add(Severity::Warning, record.source_path, "large_file",
                           "\"" + record.file_name() + "\" holds " +
                               std::to_string(size.expected) +
                               " bytes; consider splitting the recording");
        }
    }

    /// Final decoded instant against the redundant end_iso8601 field.
    void check_end(const FileRecord& record, const std::vector<EpochNanos>& instants,
                   const TimeEncoding& enc) {
        if (instants.empty()) return;
        const auto end_text = record.end_iso8601();
        if (!end_text) return;
        Iso8601Timestamp end;
        try {
            end = parse_iso8601(*end_text);
        } catch (const Error&) {
            return; // validate reported it
        }
        if (!end.anchored()) {
            report.add(Severity::Warning, record.source_path, "local_time_unanchored",
                       "end_iso8601 of \"" + record.file_name() +
                           "\" has no offset; end check skipped");
            return;
        }
        const EpochNanos end_ns = to_epoch_nanos(end);
        const std::int64_t tolerance =
            options.tolerance_ns ? *options.tolerance_ns : default_tolerance(enc, end);
        const EpochNanos final_ns = instants.back();
        const std::int64_t diff =
            final_ns > end_ns ? final_ns - end_ns : end_ns - final_ns;
        if (diff > tolerance) {
            const auto shown = from_epoch_nanos(final_ns, end.offset_kind, end.offset_minutes,
                                                std::max(3u, end.fraction_digits));
            report.add(Severity::Error, record.source_path, "end_timestamp_mismatch",
                       "last decoded instant of \"" + record.file_name() + "\" is " +
                           format_iso8601(shown) + " but end_iso8601 declares " + *end_text +
                           " (difference " + std::to_string(diff) + " ns, tolerance " +
                           std::to_string(tolerance) + " ns)");
        }
    }

    void check_monotone(const FileRecord& record, const std::vector<EpochNanos>& instants) {
        for (std::size_t i = 1; i < instants.size(); ++i) {
            if (instants[i] < instants[i - 1]) {
                report.add(Severity::Error, record.source_path, "nonmonotonic_time",
                           "decoded instants of \"" + record.file_name() +
                               "\" decrease at sample " + std::to_string(i));
                return;
            }
        }
    }

    void scan_nan(const FileRecord& record, const SampleMatrix& matrix) {
        std::size_t nans = 0;
        for (double v : matrix.physical)
            if (std::isnan(v)) ++nans;
        if (nans > 0)
            report.add(Severity::Warning, record.source_path, "nan_values",
                       "\"" + record.file_name() + "\" contains " + std::to_string(nans) +
                           " NaN samples");
    }

    void check_checksum(const FileRecord& record) {
        const Value* checksum = record.find("checksum");
        if (!checksum || !checksum->is_string()) return;
        std::string type = "md5";
        if (const Value* t = record.find("checksum_type"); t && t->is_string())
            type = t->as_string();
        if (type != "md5") {
            report.add(Severity::Warning, record.source_path, "unsupported_checksum_type",
                       "checksum_type \"" + type + "\" is not supported; only md5 is verified");
            return;
        }
        const std::vector<std::byte> bytes = read_file_bytes(rec.binary_path(record));
        const std::string digest = detail::md5_hex(bytes);
        if (digest != checksum->as_string())
            report.add(Severity::Error, record.source_path, "checksum_mismatch",
                       "\"" + record.file_name() + "\" hashes to " + digest +
                           " but the metadata declares " + checksum->as_string());
    }

    void audit_record(std::size_t idx, const TimeBinding* binding) {
        const FileRecord& record = rec.records[idx];
        if (!usable(idx)) return;
        BinaryLayout layout;
        try {
            layout = BinaryLayout::from_record(record);
        } catch (const Error&) {
            return;
        }
        try {
            const SampleMatrix matrix =
                read_rows(rec.binary_path(record), layout, 0, layout.rows);
            if (layout.data_type == DataType::Float) scan_nan(record, matrix);
            check_checksum(record);
            if (binding) {
                if (binding->kind == TimeBinding::Kind::Uniform) {
                    const TimeEncoding enc =
                        uniform_time_encoding(record, binding->sampling_rate);
                    const std::vector<EpochNanos> instants =
                        decode_timestamps(std::span<const std::int64_t>(), enc, layout.rows);
                    check_end(record, instants, enc);
                } else if (binding->kind == TimeBinding::Kind::OwnChannel) {
                    const TimeEncoding enc = stored_time_encoding(record, binding->channel);
                    const std::vector<EpochNanos> instants =
                        decode_column(matrix, layout, binding->channel, enc, layout.rows);
                    check_monotone(record, instants);
                    check_end(record, instants, enc);
                }
                // SharedFile instants are audited once, on the time file itself
            }
        } catch (const Error& e) {
            report.add(Severity::Error, record.source_path, e.code(),
                       "\"" + record.file_name() + "\": " + e.what());
        }
    }

    void audit_time_file(std::size_t idx) {
        const FileRecord& record = rec.records[idx];
        if (!usable(idx)) return;
        try {
            const BinaryLayout layout = BinaryLayout::from_record(record);
            const SampleMatrix matrix =
                read_rows(rec.binary_path(record), layout, 0, layout.rows);
            if (layout.data_type == DataType::Float) scan_nan(record, matrix);
            check_checksum(record);
            const TimeEncoding enc = stored_time_encoding(record, 0);
            const std::vector<EpochNanos> instants =
                decode_column(matrix, layout, 0, enc, layout.rows);
            check_monotone(record, instants);
            check_end(record, instants, enc);
        } catch (const Error& e) {
            report.add(Severity::Error, record.source_path, e.code(),
                       "\"" + record.file_name() + "\": " + e.what());
        }
    }

    void run() {
        check_sizes();
        for (const SignalGroup& group : rec.groups) {
            if (group.time_file) audit_time_file(*group.time_file);
            for (std::size_t i = 0; i < group.amplitude_records.size(); ++i)
                audit_record(group.amplitude_records[i], &group.bindings[i]);
        }
    }
};

} // namespace

ValidationReport audit(const Recording& rec, const AuditOptions& options) {
    ValidationReport report;
    Auditor auditor{rec, options, nullptr, report};
    auditor.run();
    return report;
}

ValidationReport audit_dataset(const fs::path& metadata_path, const AuditOptions& options) {
    Assembly a = assemble(metadata_path);
    Auditor auditor{a.recording, options, &a.sized_ok, a.report};
    auditor.run();
    return a.report;
}

// ----------------------------------------------------------------- create

namespace {

struct PlannedFile {
    fs::path path;
    std::vector<std::byte> bytes;
};

[[noreturn]] void inconsistent(const std::string& message) {
    throw Error("inconsistent_plan", message);
}

void check_redundant_end(const RecordingPlan& plan, EpochNanos final_ns,
                         const std::string& stream) {
    if (!plan.end) return;
    const EpochNanos declared = to_epoch_nanos(*plan.end);
    const std::int64_t diff =
        declared > final_ns ? declared - final_ns : final_ns - declared;
    // the end text carries millisecond precision, so half a millisecond is
    // the largest honest rounding gap
    if (diff > 500'000)
        throw Error("redundant_field_conflict",
                    "caller-supplied end_iso8601 disagrees with the final instant of " + stream +
                        " by " + std::to_string(diff) + " ns");
}

std::string end_text_for(const RecordingPlan& plan, EpochNanos final_ns) {
    if (plan.end) return format_iso8601(*plan.end);
    const OffsetKind kind = plan.start.offset_kind;
    return format_iso8601(
        from_epoch_nanos(final_ns, kind, plan.start.offset_minutes, 3));
}

FileRecord base_record(const RecordingPlan& plan, int group_id) {
    FileRecord rec;
    rec.group_id = group_id;
    rec.set("subject_id", Value(plan.subject_id));
    rec.set("study_id", Value(plan.study_id));
    rec.set("device_id", Value(plan.device_id));
    rec.set("endianness", Value(std::string(endianness_name(plan.endianness))));
    rec.set("metadata_version", Value(plan.metadata_version));
    rec.set("start_iso8601", Value(format_iso8601(plan.start)));
    return rec;
}

Value string_list(const std::vector<std::string>& items) {
    Value v = Value::list();
    for (const std::string& s : items) v.push_back(Value(s));
    return v;
}

Value number_list(const std::vector<double>& items) {
    Value v = Value::list();
    for (double d : items) v.push_back(Value(d));
    return v;
}

} // namespace

std::vector<fs::path> create_recording(const RecordingPlan& plan, const fs::path& out_dir) {
    if (plan.groups.empty()) inconsistent("a recording needs at least one group");
    const EpochNanos start_ns = to_epoch_nanos(plan.start);

    std::vector<FileRecord> records;
    std::vector<PlannedFile> files;
    std::vector<std::string> seen_names;

    for (std::size_t gi = 0; gi < plan.groups.size(); ++gi) {
        const GroupPlan& group = plan.groups[gi];
        const int group_id = static_cast<int>(gi);
        if (group.signals.empty() && !group.time_file)
            inconsistent("group " + std::to_string(gi) + " is empty");

        const bool uniform = group.time_kind == TimeKind::Uniform;
        if (uniform && !(group.sampling_rate && *group.sampling_rate > 0))
            inconsistent("uniform group " + std::to_string(gi) +
                         " needs a positive sampling_rate");
        if (uniform && (group.time_file || !group.instants.empty()))
            inconsistent("uniform group " + std::to_string(gi) +
                         " must not carry stored instants");
        if (!uniform && !group.time_file) {
            for (const SignalPlan& signal : group.signals)
                if (!signal.own_instants)
                    inconsistent("signal \"" + signal.file_name +
                                 "\" needs own_instants when the group has no time file");
        }

        // dedicated time file
        if (group.time_file) {
            if (uniform) inconsistent("a uniform group cannot have a time file");
            if (std::find(seen_names.begin(), seen_names.end(), group.time_file->file_name) !=
                seen_names.end())
                inconsistent("file name \"" + group.time_file->file_name + "\" is used twice");
            for (const SignalPlan& signal : group.signals) {
                if (signal.samples.rows != group.instants.size())
                    inconsistent("signal \"" + signal.file_name + "\" has " +
                                 std::to_string(signal.samples.rows) + " rows for " +
                                 std::to_string(group.instants.size()) + " instants");
                if (signal.own_instants)
                    inconsistent("signal \"" + signal.file_name +
                                 "\" cannot carry instants next to a time file");
            }
            TimeEncoding enc{group.time_kind, group.time_unit, plan.start, std::nullopt};
            const std::size_t rows = group.instants.size();
            const EpochNanos final_ns = rows > 0 ? group.instants.back() : start_ns;
            check_redundant_end(plan, final_ns, "\"" + group.time_file->file_name + "\"");

            BinaryLayout layout;
            layout.data_type = group.time_file->data_type;
            layout.bits = group.time_file->bits;
            layout.endianness = plan.endianness;
            layout.n_channels = 1;
            layout.rows = rows;

            SampleMatrix matrix;
            matrix.rows = rows;
            matrix.n_channels = 1;
            if (layout.data_type == DataType::Float) {
                matrix.physical = encode_timestamps_real(group.instants, enc);
            } else {
                matrix.stored = encode_timestamps(group.instants, enc);
                matrix.physical.assign(matrix.stored.begin(), matrix.stored.end());
            }

            FileRecord rec = base_record(plan, group_id);
            rec.set("end_iso8601", Value(end_text_for(plan, final_ns)));
            rec.set("rows", Value(static_cast<std::int64_t>(rows)));
            rec.set("file_name", Value(group.time_file->file_name));
            rec.set("channels", string_list({"time"}));
            rec.set("units", string_list({group.time_unit}));
            rec.set("data_type", Value(std::string(data_type_name(layout.data_type))));
            rec.set("bits", Value(static_cast<std::int64_t>(layout.bits)));
            rec.set("compression", Value(std::string(time_kind_name(group.time_kind))));
            if (group.sensor_type) rec.set("sensor_type", Value(*group.sensor_type));
            records.push_back(std::move(rec));
            files.push_back({out_dir / group.time_file->file_name, write_rows(matrix, layout)});
            seen_names.push_back(group.time_file->file_name);
        }

        for (const SignalPlan& signal : group.signals) {
            if (std::find(seen_names.begin(), seen_names.end(), signal.file_name) !=
                seen_names.end())
                inconsistent("file name \"" + signal.file_name + "\" is used twice");
            seen_names.push_back(signal.file_name);

            if (signal.channels.size() != signal.units.size() ||
                signal.channels.size() != signal.samples.n_channels)
                inconsistent("signal \"" + signal.file_name +
                             "\" has mismatched channel, unit and matrix arity");
            if (signal.samples.physical.size() != signal.samples.rows * signal.samples.n_channels)
                inconsistent("signal \"" + signal.file_name + "\" has a malformed matrix");

            const std::size_t rows = signal.samples.rows;
            SampleMatrix matrix = signal.samples;

            EpochNanos final_ns = start_ns;
            if (uniform) {
                final_ns = rows > 0 ? uniform_instant(start_ns, *group.sampling_rate, rows - 1)
                                    : start_ns;
            } else if (group.time_file) {
                final_ns = rows > 0 ? group.instants.back() : start_ns;
            } else {
                // instants ride in the record's own "time" channel
                const auto channel = std::find(signal.channels.begin(), signal.channels.end(),
                                               "time");
                if (channel == signal.channels.end())
                    inconsistent("signal \"" + signal.file_name +
                                 "\" carries instants but no channel labeled \"time\"");
                const std::size_t idx =
                    static_cast<std::size_t>(channel - signal.channels.begin());
                if (signal.own_instants->size() != rows)
                    inconsistent("signal \"" + signal.file_name + "\" has " +
                                 std::to_string(rows) + " rows for " +
                                 std::to_string(signal.own_instants->size()) + " instants");
                TimeEncoding enc{group.time_kind, signal.units[idx], plan.start, std::nullopt};
                matrix.stored.clear(); // the time column invalidates pre-encoded integers
                if (signal.data_type == DataType::Float) {
                    const std::vector<double> raw =
                        encode_timestamps_real(*signal.own_instants, enc);
                    for (std::size_t r = 0; r < rows; ++r)
                        matrix.physical[r * matrix.n_channels + idx] = raw[r];
                } else {
                    const std::vector<std::int64_t> raw =
                        encode_timestamps(*signal.own_instants, enc);
                    for (std::size_t r = 0; r < rows; ++r)
                        matrix.physical[r * matrix.n_channels + idx] =
                            static_cast<double>(raw[r]);
                }
                final_ns = rows > 0 ? signal.own_instants->back() : start_ns;
            }
            check_redundant_end(plan, final_ns, "\"" + signal.file_name + "\"");

            BinaryLayout layout;
            layout.data_type = signal.data_type;
            layout.bits = signal.bits;
            layout.endianness = plan.endianness;
            layout.n_channels = signal.channels.size();
            layout.rows = rows;
            layout.scale_factors = signal.scale_factors;

            FileRecord rec = base_record(plan, group_id);
            rec.set("end_iso8601", Value(end_text_for(plan, final_ns)));
            rec.set("rows", Value(static_cast<std::int64_t>(rows)));
            rec.set("file_name", Value(signal.file_name));
            rec.set("channels", string_list(signal.channels));
            rec.set("units", string_list(signal.units));
            rec.set("data_type", Value(std::string(data_type_name(signal.data_type))));
            rec.set("bits", Value(static_cast<std::int64_t>(signal.bits)));
            if (uniform) {
                rec.set("compression", Value("none"));
                rec.set("sampling_rate", Value(*group.sampling_rate));
            } else if (!group.time_file) {
                rec.set("compression", Value(std::string(time_kind_name(group.time_kind))));
            }
            if (signal.scale_factors) rec.set("scale_factors", number_list(*signal.scale_factors));
            if (group.sensor_type) rec.set("sensor_type", Value(*group.sensor_type));
            for (std::size_t i = 0; i < signal.extra_fields.size(); ++i)
                rec.set(signal.extra_fields.key(i), signal.extra_fields[i]);
            records.push_back(std::move(rec));
            files.push_back({out_dir / signal.file_name, write_rows(matrix, layout)});
        }
    }

    // serialization validates the records; nothing has touched the disk yet
    SerializeOptions options;
    options.layout = plan.layout;
    const std::string metadata_text = serialize_metadata(records, options);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec)
        throw Error("io_error", "cannot create \"" + out_dir.string() + "\": " + ec.message());

    std::vector<fs::path> written;
    const fs::path metadata_path = out_dir / plan.metadata_file_name;
    {
        std::ofstream out(metadata_path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("io_error", "cannot write \"" + metadata_path.string() + "\"");
        out << metadata_text;
    }
    written.push_back(metadata_path);
    for (const PlannedFile& file : files) {
        std::ofstream out(file.path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("io_error", "cannot write \"" + file.path.string() + "\"");
        out.write(reinterpret_cast<const char*>(file.bytes.data()),
                  static_cast<std::streamsize>(file.bytes.size()));
        written.push_back(file.path);
    }
    return written;
}

} // namespace tsdf
