#ifndef TSDF_CONVERT_HPP
#define TSDF_CONVERT_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "tsdf/csv.hpp"
#include "tsdf/dataset.hpp"

namespace tsdf {

struct CsvImportOptions {
    CsvDialect dialect;

    /// Header label of the time column (unit annotations stripped). When
    /// unset the data is treated as uniformly sampled at `sampling_rate`.
    std::optional<std::string> time_column;
    /// Unit of the time column's elapsed values.
    std::string time_unit = "ms";
    /// Relative or Difference storage for the generated time file.
    TimeKind time_encoding = TimeKind::Relative;
    std::optional<double> sampling_rate;
    /// Reject duplicate consecutive time values.
    bool strict_monotone = false;

    /// Storage for the amplitude file.
    DataType data_type = DataType::Float;
    int bits = 32;

    std::string subject_id = "unknown";
    std::string study_id = "unknown";
    std::string device_id = "unknown";
    Iso8601Timestamp start = parse_iso8601("1970-01-01T00:00:00.000+00:00");
    std::optional<std::string> sensor_type;

    std::string metadata_file_name = "metadata.json";
    std::string samples_file_name = "samples.bin";
    std::string time_file_name = "time.bin";
};

/// Import a rectangular CSV (header row required) into a one-group
/// recording under out_dir and open it. Numeric parse failures are
/// reported with row and column; ragged rows are rejected.
Recording import_csv(const std::string& csv_text, const CsvImportOptions& options,
                     const std::filesystem::path& out_dir);
Recording import_csv_file(const std::filesystem::path& csv_path,
                          const CsvImportOptions& options,
                          const std::filesystem::path& out_dir);

struct CsvExportOptions {
    CsvDialect dialect;
    /// First column as ISO 8601 text instead of numeric elapsed time.
    bool iso_timestamps = false;
    /// Unit of the numeric elapsed-time column.
    std::string elapsed_unit = "ms";
};

/// Render one group's rows as CSV: a time column, then every channel of
/// every record with unit-annotated headers ("X [m/s/s]").
std::string export_csv(const Recording& rec, int group_id, std::size_t row_start,
                       std::size_t row_count, const CsvExportOptions& options = {});

/// Deterministic synthetic recording generator for fixtures and benchmarks.
struct SynthSpec {
    std::size_t channels = 3;
    double sampling_rate = 100.0;
    double duration_s = 10.0;
    std::uint64_t seed = 1;
    DataType data_type = DataType::Float;
    int bits = 32;
    std::string subject_id = "synthetic";
    std::string study_id = "benchmark";
    std::string device_id = "synth";
    std::string metadata_file_name = "metadata.json";
};

/// Same spec and seed, byte-identical dataset.
Recording synth(const SynthSpec& spec, const std::filesystem::path& out_dir);

struct BenchReport {
    std::uint64_t binary_bytes = 0;
    std::uint64_t csv_bytes = 0;
    std::optional<double> ratio;  ///< csv/binary; unset when rows == 0
    double full_load_ms = 0.0;
    double random_slice_ms = 0.0; ///< contiguous 1% slice at a random offset
    std::size_t rows = 0;
};

/// Measure binary-vs-CSV storage footprint and full-load vs random-slice
/// latency for a recording.
BenchReport bench_storage(const Recording& rec);

/// Aligned human-readable table followed by one machine-readable
/// "metric <name> <value>" line per metric.
std::string format_bench_report(const BenchReport& report);

} // namespace tsdf

#endif
