#ifndef TSDF_INDEXER_HPP
#define TSDF_INDEXER_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tsdf/metadata.hpp"

namespace tsdf {

/// One row of the "files" table: a flattened FileRecord reduced to its
/// queryable columns. (metadata_path, file_name) is unique.
struct FileRow {
    std::string metadata_path; ///< relative to the indexed root
    std::string file_name;
    std::string subject_id;
    std::string study_id;
    std::string device_id;
    std::optional<std::string> sensor_type;
    std::optional<std::int64_t> start_epoch_ms; ///< null for local-only timestamps
    std::optional<std::int64_t> end_epoch_ms;
    std::int64_t rows = 0;
    std::string data_type;
    int bits = 0;
    std::size_t n_channels = 0;
    int group_id = 0;
};

struct ChannelRow {
    std::size_t file_row = 0; ///< index into files
    std::size_t channel_index = 0;
    std::string label;
    std::string unit;
};

struct ExtraRow {
    std::size_t file_row = 0;
    std::string field_name;
    std::string value_text; ///< compact JSON rendering of the value
};

/// Per-file scan note: fatal failures keep the file out of the index,
/// warnings accompany indexed files.
struct SkipEntry {
    std::string path;
    std::string reason;
    bool indexed = false;
};

struct IndexTable {
    std::vector<FileRow> files;
    std::vector<ChannelRow> channels;
    std::vector<ExtraRow> extras;
    std::vector<SkipEntry> skipped;
};

/// Scan a directory tree for "*.json" metadata documents; every document
/// that parses, flattens and validates without errors contributes its
/// records. Failures become skip entries, never aborts. Row order is
/// deterministic: path, then document order.
IndexTable build_index(const std::filesystem::path& root_dir);

/// Persist as deterministic CSV tables (files.csv, channels.csv,
/// extras.csv, skipped.csv) plus schema.sql so any SQL engine can ingest
/// them.
void save_index(const IndexTable& table, const std::filesystem::path& out_dir);
IndexTable load_index(const std::filesystem::path& dir);

struct QueryFilter {
    std::optional<std::string> subject_id;
    std::optional<std::string> study_id;
    std::optional<std::string> device_id;
    std::optional<std::string> sensor_type;
    std::optional<std::string> channel_label;
    /// [t0, t1] in epoch milliseconds; matches rows whose [start, end]
    /// interval overlaps it. Rows without epoch columns never match.
    std::optional<std::pair<std::int64_t, std::int64_t>> overlaps;
};

/// Conjunction of the provided filters; returns indices into table.files.
/// Throws Error("invalid_query") when t0 > t1.
std::vector<std::size_t> query(const IndexTable& table, const QueryFilter& filter);

} // namespace tsdf

#endif
