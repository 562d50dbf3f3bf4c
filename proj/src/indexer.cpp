#include "tsdf/indexer.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include "tsdf/csv.hpp"
#include "tsdf/error.hpp"
#include "tsdf/iso8601.hpp"

namespace tsdf {

namespace {

namespace fs = std::filesystem;

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io_error", "cannot open \"" + path.string() + "\"");
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::optional<std::int64_t> epoch_ms_of(const FileRecord& record, std::string_view field,
                                        bool& local_only) {
    const auto text = record.get_string(field);
    if (!text) return std::nullopt;
    const Iso8601Timestamp t = parse_iso8601(*text); // validated earlier
    if (!t.anchored()) {
        local_only = true;
        return std::nullopt;
    }
    return to_epoch_millis(t);
}

void index_document(IndexTable& table, const fs::path& root, const fs::path& path) {
    const std::string rel = fs::relative(path, root).generic_string();
    std::vector<FileRecord> records;
    try {
        records = flatten(parse_metadata(read_text(path)));
    } catch (const Error& e) {
        table.skipped.push_back({rel, e.what(), false});
        return;
    }
    if (records.empty()) {
        table.skipped.push_back({rel, "no file records (not a metadata document?)", false});
        return;
    }
    const ValidationReport report = validate(records);
    if (!report.ok()) {
        std::string reason = "validation failed: ";
        for (const Violation& v : report.violations)
            if (v.severity == Severity::Error) {
                reason += v.code;
                break;
            }
        table.skipped.push_back({rel, reason, false});
        return;
    }
    for (std::size_t i = 0; i < records.size(); ++i)
        for (std::size_t j = i + 1; j < records.size(); ++j)
            if (records[i].file_name() == records[j].file_name()) {
                table.skipped.push_back(
                    {rel, "duplicate file_name \"" + records[i].file_name() + "\"", false});
                return;
            }

    bool local_only = false;
    for (const FileRecord& record : records) {
        FileRow row;
        row.metadata_path = rel;
        row.file_name = record.file_name();
        row.subject_id = record.subject_id().value_or("");
        row.study_id = record.study_id().value_or("");
        row.device_id = record.device_id().value_or("");
        row.sensor_type = record.sensor_type();
        row.start_epoch_ms = epoch_ms_of(record, "start_iso8601", local_only);
        row.end_epoch_ms = epoch_ms_of(record, "end_iso8601", local_only);
        row.rows = record.rows().value_or(0);
        row.data_type = record.get_string("data_type").value_or("");
        row.bits = static_cast<int>(record.bits().value_or(0));
        row.group_id = record.group_id;

        const std::size_t file_row = table.files.size();
        const auto labels = record.channels().value_or(std::vector<std::string>{});
        const auto units = record.units().value_or(std::vector<std::string>{});
        row.n_channels = labels.size();
        table.files.push_back(std::move(row));

        for (std::size_t c = 0; c < labels.size(); ++c)
            table.channels.push_back(
                {file_row, c, labels[c], c < units.size() ? units[c] : std::string()});

        const Value extras = record.extra_fields();
        for (std::size_t i = 0; i < extras.size(); ++i)
            table.extras.push_back({file_row, extras.key(i), write_json_compact(extras[i])});
    }
    if (local_only)
        table.skipped.push_back(
            {rel, "local-only timestamps: excluded from time-overlap filters", true});
}

// --------------------------------------------------------- persistence

const CsvDialect kTableDialect{};

std::string opt_text(const std::optional<std::string>& v) { return v.value_or(""); }

std::string opt_int(const std::optional<std::int64_t>& v) {
    return v ? std::to_string(*v) : std::string();
}

void write_table(const fs::path& path, const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    for (const auto& row : rows) csv_append_row(out, row, kTableDialect);
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw Error("io_error", "cannot write \"" + path.string() + "\"");
    file << out;
}

std::vector<std::vector<std::string>> read_table(const fs::path& path) {
    const std::string text = read_text(path);
    CsvReader reader(text, kTableDialect);
    std::vector<std::vector<std::string>> rows;
    while (auto row = reader.next_row()) {
        if (row->size() == 1 && row->front().empty()) continue;
        rows.push_back(std::move(*row));
    }
    return rows;
}

std::optional<std::int64_t> parse_opt_int(const std::string& text) {
    if (text.empty()) return std::nullopt;
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size())
        throw Error("index_format_error", "malformed integer \"" + text + "\" in index table");
    return v;
}

std::int64_t parse_int(const std::string& text) {
    const auto v = parse_opt_int(text);
    if (!v) throw Error("index_format_error", "missing integer in index table");
    return *v;
}

constexpr std::string_view kSchemaText =
    "CREATE TABLE files (\n"
    "  row_id INTEGER PRIMARY KEY,\n"
    "  metadata_path TEXT NOT NULL,\n"
    "  file_name TEXT NOT NULL,\n"
    "  subject_id TEXT NOT NULL,\n"
    "  study_id TEXT NOT NULL,\n"
    "  device_id TEXT NOT NULL,\n"
    "  sensor_type TEXT,\n"
    "  start_epoch_ms INTEGER,\n"
    "  end_epoch_ms INTEGER,\n"
    "  rows INTEGER NOT NULL,\n"
    "  data_type TEXT NOT NULL,\n"
    "  bits INTEGER NOT NULL,\n"
    "  n_channels INTEGER NOT NULL,\n"
    "  group_id INTEGER NOT NULL,\n"
    "  UNIQUE (metadata_path, file_name)\n"
    ");\n"
    "CREATE TABLE channels (\n"
    "  file_row INTEGER NOT NULL REFERENCES files(row_id),\n"
    "  channel_index INTEGER NOT NULL,\n"
    "  label TEXT NOT NULL,\n"
    "  unit TEXT NOT NULL\n"
    ");\n"
    "CREATE TABLE extras (\n"
    "  file_row INTEGER NOT NULL REFERENCES files(row_id),\n"
    "  field_name TEXT NOT NULL,\n"
    "  value_text TEXT NOT NULL\n"
    ");\n";

} // namespace

IndexTable build_index(const fs::path& root_dir) {
    std::error_code ec;
    if (!fs::is_directory(root_dir, ec) || ec)
        throw Error("io_error", "\"" + root_dir.string() + "\" is not a readable directory");

    std::vector<fs::path> documents;
    for (auto it = fs::recursive_directory_iterator(
             root_dir, fs::directory_options::skip_permission_denied, ec);
         it != fs::recursive_directory_iterator(); ++it) {
        if (it->is_regular_file() && it->path().extension() == ".json")
            documents.push_back(it->path());
    }
    std::sort(documents.begin(), documents.end(),
              [&](const fs::path& a, const fs::path& b) {
                  return fs::relative(a, root_dir).generic_string() <
                         fs::relative(b, root_dir).generic_string();
              });

    IndexTable table;
    for (const fs::path& path : documents) index_document(table, root_dir, path);
    return table;
}

void save_index(const IndexTable& table, const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error("io_error", "cannot create \"" + out_dir.string() + "\"");

    std::vector<std::vector<std::string>> rows;
    rows.push_back({"row_id", "metadata_path", "file_name", "subject_id", "study_id",
                    "device_id", "sensor_type", "start_epoch_ms", "end_epoch_ms", "rows",
                    "data_type", "bits", "n_channels", "group_id"});
    for (std::size_t i = 0; i < table.files.size(); ++i) {
        const FileRow& f = table.files[i];
        rows.push_back({std::to_string(i), f.metadata_path, f.file_name, f.subject_id,
                        f.study_id, f.device_id, opt_text(f.sensor_type),
                        opt_int(f.start_epoch_ms), opt_int(f.end_epoch_ms),
                        std::to_string(f.rows), f.data_type, std::to_string(f.bits),
                        std::to_string(f.n_channels), std::to_string(f.group_id)});
    }
    write_table(out_dir / "files.csv", rows);

    rows.clear();
    rows.push_back({"file_row", "channel_index", "label", "unit"});
    for (const ChannelRow& c : table.channels)
        rows.push_back({std::to_string(c.file_row), std::to_string(c.channel_index), c.label,
                        c.unit});
    write_table(out_dir / "channels.csv", rows);

    rows.clear();
    rows.push_back({"file_row", "field_name", "value_text"});
    for (const ExtraRow& e : table.extras)
        rows.push_back({std::to_string(e.file_row), e.field_name, e.value_text});
    write_table(out_dir / "extras.csv", rows);

    rows.clear();
    rows.push_back({"path", "reason", "indexed"});
    for (const SkipEntry& s : table.skipped)
        rows.push_back({s.path, s.reason, s.indexed ? "1" : "0"});
    write_table(out_dir / "skipped.csv", rows);

    std::ofstream schema(out_dir / "schema.sql", std::ios::binary | std::ios::trunc);
    if (!schema) throw Error("io_error", "cannot write schema.sql");
    schema << kSchemaText;
}

IndexTable load_index(const fs::path& dir) {
    IndexTable table;

    const auto files = read_table(dir / "files.csv");
    for (std::size_t i = 1; i < files.size(); ++i) {
        const auto& row = files[i];
        if (row.size() != 14)
            throw Error("index_format_error", "files.csv row has " +
                                                  std::to_string(row.size()) + " fields");
        FileRow f;
        f.metadata_path = row[1];
        f.file_name = row[2];
        f.subject_id = row[3];
        f.study_id = row[4];
        f.device_id = row[5];
        if (!row[6].empty()) f.sensor_type = row[6];
        f.start_epoch_ms = parse_opt_int(row[7]);
        f.end_epoch_ms = parse_opt_int(row[8]);
        f.rows = parse_int(row[9]);
        f.data_type = row[10];
        f.bits = static_cast<int>(parse_int(row[11]));
        f.n_channels = static_cast<std::size_t>(parse_int(row[12]));
        f.group_id = static_cast<int>(parse_int(row[13]));
        table.files.push_back(std::move(f));
    }

    const auto channels = read_table(dir / "channels.csv");
    for (std::size_t i = 1; i < channels.size(); ++i) {
        const auto& row = channels[i];
        if (row.size() != 4)
            throw Error("index_format_error", "channels.csv row has " +
                                                  std::to_string(row.size()) + " fields");
        table.channels.push_back({static_cast<std::size_t>(parse_int(row[0])),
                                  static_cast<std::size_t>(parse_int(row[1])), row[2], row[3]});
    }

    const auto extras = read_table(dir / "extras.csv");
    for (std::size_t i = 1; i < extras.size(); ++i) {
        const auto& row = extras[i];
        if (row.size() != 3)
            throw Error("index_format_error", "extras.csv row has " +
                                                  std::to_string(row.size()) + " fields");
        table.extras.push_back({static_cast<std::size_t>(parse_int(row[0])), row[1], row[2]});
    }

    const auto skipped = read_table(dir / "skipped.csv");
    for (std::size_t i = 1; i < skipped.size(); ++i) {
        const auto& row = skipped[i];
        if (row.size() != 3)
            throw Error("index_format_error", "skipped.csv row has " +
                                                  std::to_string(row.size()) + " fields");
        table.skipped.push_back({row[0], row[1], row[2] == "1"});
    }
    return table;
}

std::vector<std::size_t> query(const IndexTable& table, const QueryFilter& filter) {
    if (filter.overlaps && filter.overlaps->first > filter.overlaps->second)
        throw Error("invalid_query", "time filter has t0 > t1");

    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < table.files.size(); ++i) {
        const FileRow& f = table.files[i];
        if (filter.subject_id && f.subject_id != *filter.subject_id) continue;
        if (filter.study_id && f.study_id != *filter.study_id) continue;
        if (filter.device_id && f.device_id != *filter.device_id) continue;
        if (filter.sensor_type && f.sensor_type != *filter.sensor_type) continue;
        if (filter.overlaps) {
            if (!f.start_epoch_ms || !f.end_epoch_ms) continue;
            if (*f.start_epoch_ms > filter.overlaps->second ||
                *f.end_epoch_ms < filter.overlaps->first)
                continue;
        }
        if (filter.channel_label) {
            const bool found = std::any_of(table.channels.begin(), table.channels.end(),
                                           [&](const ChannelRow& c) {
                                               return c.file_row == i &&
                                                      c.label == *filter.channel_label;
                                           });
            if (!found) continue;
        }
        out.push_back(i);
    }
    return out;
}

} // namespace tsdf
