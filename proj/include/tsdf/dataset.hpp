#ifndef TSDF_DATASET_HPP
#define TSDF_DATASET_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tsdf/binio.hpp"
#include "tsdf/metadata.hpp"
#include "tsdf/timecodec.hpp"

namespace tsdf {

/// Where one amplitude record gets its instants from.
struct TimeBinding {
    enum class Kind {
        SharedFile, ///< the group's dedicated time file (channels == ["time"])
        OwnChannel, ///< a channel labeled "time" inside the record's own file
        Uniform,    ///< start + index / sampling_rate
    };
    Kind kind = Kind::Uniform;
    std::size_t time_record = 0; ///< record index of the time file (SharedFile)
    std::size_t channel = 0;     ///< column of the "time" channel (OwnChannel)
    double sampling_rate = 0.0;  ///< Hz (Uniform)
};

/// Records that share one timestamp source (e.g. the amplitude files of one
/// IMU plus their time file).
struct SignalGroup {
    int group_id = 0;
    std::optional<std::string> sensor_type;
    std::optional<std::size_t> time_file;      ///< record index when a time file exists
    std::vector<std::size_t> amplitude_records; ///< record indices, document order
    std::vector<TimeBinding> bindings;          ///< parallel to amplitude_records
};

/// A fully resolved recording: one metadata file plus its binary files,
/// opened, validated, size-checked and grouped. Immutable after open.
struct Recording {
    std::filesystem::path metadata_path;
    std::filesystem::path root_dir;
    std::vector<FileRecord> records;
    std::vector<SignalGroup> groups;

    std::filesystem::path binary_path(const FileRecord& record) const;
    const SignalGroup& group(int group_id) const;
};

/// Parse, flatten, validate (zero errors required), resolve and size-check
/// every binary, and detect each group's time source. Any failure throws
/// Error with the offending file named.
Recording open_recording(const std::filesystem::path& metadata_path);

struct GroupSlice {
    std::vector<EpochNanos> timestamps;   ///< one instant per requested row
    std::vector<SampleMatrix> matrices;   ///< parallel to group.amplitude_records
};

/**
 * Decode rows [row_start, row_start + row_count) of every amplitude record
 * in a group together with their shared instants. Amplitude rows are
 * fetched by offset arithmetic; difference-encoded time needs a prefix
 * pass over the stored values up to row_start, which is the one documented
 * sequential cost. Requires the group to be homogeneous (one shared time
 * source or equal per-record grids); heterogeneous groups are read record
 * by record with read_record.
 */
GroupSlice read_group(const Recording& rec, int group_id, std::size_t row_start,
                      std::size_t row_count);

struct RecordSlice {
    std::vector<EpochNanos> timestamps;
    SampleMatrix matrix;
};

/// Decode one amplitude record's rows and instants.
RecordSlice read_record(const Recording& rec, std::size_t record_index, std::size_t row_start,
                        std::size_t row_count);

struct AuditOptions {
    /// End-timestamp tolerance in nanoseconds. When unset, one stored time
    /// unit (or one sample period for uniform encoding), but never finer
    /// than the precision of the end_iso8601 text itself.
    std::optional<std::int64_t> tolerance_ns;
    /// Warn for binary files larger than this.
    std::uint64_t max_file_bytes = 4ull << 30;
};

/// Cross-file consistency audit of an opened recording: final decoded
/// instant against end_iso8601, sizes, monotone time, NaN scan, checksum
/// fields when present. Findings go into the report; nothing throws.
ValidationReport audit(const Recording& rec, const AuditOptions& options = {});

/// Lenient end-to-end audit from the metadata path: validation findings,
/// missing or mis-sized binaries and group defects become report entries
/// instead of exceptions, and the data-level checks run on whatever is
/// consistent enough to decode.
ValidationReport audit_dataset(const std::filesystem::path& metadata_path,
                               const AuditOptions& options = {});

// ---------------------------------------------------------------- create

/// One amplitude stream to be written.
struct SignalPlan {
    std::string file_name;
    std::vector<std::string> channels;
    std::vector<std::string> units;
    DataType data_type = DataType::Float;
    int bits = 32;
    std::optional<std::vector<double>> scale_factors;
    SampleMatrix samples; ///< the "time" column is overwritten when instants ride in-file
    std::optional<std::vector<EpochNanos>> own_instants; ///< in-file time channel
    Value extra_fields = Value::mapping();
};

/// Storage for a group's dedicated time file.
struct TimeFilePlan {
    std::string file_name;
    DataType data_type = DataType::UInt;
    int bits = 32;
};

struct GroupPlan {
    std::optional<std::string> sensor_type;
    TimeKind time_kind = TimeKind::Uniform;
    std::string time_unit = "ms";
    std::optional<double> sampling_rate;          ///< required for Uniform
    std::vector<EpochNanos> instants;             ///< shared instants (time-file mode)
    std::optional<TimeFilePlan> time_file;        ///< present iff a time file is written
    std::vector<SignalPlan> signals;
};

struct RecordingPlan {
    std::string subject_id;
    std::string study_id;
    std::string device_id;
    std::string metadata_version = "0.1";
    Endianness endianness = Endianness::Little;
    Iso8601Timestamp start;
    /// Redundant end timestamp; when set it must agree with the final
    /// instant of every stream (Error("redundant_field_conflict")).
    std::optional<Iso8601Timestamp> end;
    std::vector<GroupPlan> groups;
    MetadataLayout layout = MetadataLayout::GroupedByCommonPrefix;
    std::string metadata_file_name = "metadata.json";
};

/**
 * Write a complete recording (metadata plus binaries) into out_dir.
 * Inputs are checked for mutual consistency before anything is written;
 * opening and auditing the output yields zero errors. Returns the written
 * paths, metadata first.
 */
std::vector<std::filesystem::path> create_recording(const RecordingPlan& plan,
                                                    const std::filesystem::path& out_dir);

} // namespace tsdf

#endif
