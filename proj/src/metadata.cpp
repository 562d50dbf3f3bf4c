#include "tsdf/metadata.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "tsdf/error.hpp"
#include "tsdf/iso8601.hpp"
#include "tsdf/timecodec.hpp"

namespace tsdf {

namespace {

constexpr std::array<std::string_view, 13> kMandatoryFields = {
    "subject_id", "study_id",   "device_id", "endianness", "metadata_version",
    "start_iso8601", "end_iso8601", "rows",  "file_name",  "channels",
    "units",      "data_type",  "bits"};

constexpr std::array<std::string_view, 6> kOptionalFields = {
    "compression", "sampling_rate", "scale_factors", "sensor_type", "checksum", "checksum_type"};

constexpr std::string_view kPinnedMetadataVersion = "0.1";

std::string_view canonical_field_name(std::string_view name) {
    if (name == "endianess") return "endianness";
    if (name == "filename") return "file_name";
    return name;
}

bool is_alias(std::string_view name) {
    return name != canonical_field_name(name);
}

bool looks_absolute(const std::string& path) {
    if (path.empty()) return false;
    if (path.front() == '/' || path.front() == '\\') return true;
    // windows drive letter
    if (path.size() >= 3 && std::isalpha(static_cast<unsigned char>(path[0])) && path[1] == ':' &&
        (path[2] == '/' || path[2] == '\\'))
        return true;
    return false;
}

} // namespace

// ------------------------------------------------------------- FileRecord

std::optional<std::string> FileRecord::get_string(std::string_view name) const {
    const Value* v = find(name);
    if (v && v->is_string()) return v->as_string();
    return std::nullopt;
}

std::optional<std::int64_t> FileRecord::get_integer(std::string_view name) const {
    const Value* v = find(name);
    if (v && v->is_integer()) return v->as_integer();
    return std::nullopt;
}

std::optional<double> FileRecord::get_number(std::string_view name) const {
    const Value* v = find(name);
    if (v && v->is_number()) return v->as_number();
    return std::nullopt;
}

std::optional<std::vector<std::string>> FileRecord::get_string_list(std::string_view name) const {
    const Value* v = find(name);
    if (!v || !v->is_list()) return std::nullopt;
    std::vector<std::string> out;
    out.reserve(v->size());
    for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_string()) return std::nullopt;
        out.push_back((*v)[i].as_string());
    }
    return out;
}

std::optional<std::vector<double>> FileRecord::get_number_list(std::string_view name) const {
    const Value* v = find(name);
    if (!v || !v->is_list()) return std::nullopt;
    std::vector<double> out;
    out.reserve(v->size());
    for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_number()) return std::nullopt;
        out.push_back((*v)[i].as_number());
    }
    return out;
}

std::string FileRecord::file_name() const {
    return get_string("file_name").value_or(std::string());
}

std::optional<Endianness> FileRecord::endianness() const {
    if (auto s = get_string("endianness")) return endianness_from_name(*s);
    return std::nullopt;
}

std::optional<DataType> FileRecord::data_type() const {
    if (auto s = get_string("data_type")) return data_type_from_name(*s);
    return std::nullopt;
}

Value FileRecord::extra_fields() const {
    Value out = Value::mapping();
    for (std::size_t i = 0; i < fields.size(); ++i)
        if (!is_recognized_field(fields.key(i))) out.set(fields.key(i), fields[i]);
    return out;
}

std::span<const std::string_view> mandatory_field_names() {
    return kMandatoryFields;
}

bool is_recognized_field(std::string_view name) {
    return std::find(kMandatoryFields.begin(), kMandatoryFields.end(), name) !=
               kMandatoryFields.end() ||
           std::find(kOptionalFields.begin(), kOptionalFields.end(), name) !=
               kOptionalFields.end();
}

// ------------------------------------------------------- ValidationReport

std::size_t ValidationReport::error_count() const {
    return static_cast<std::size_t>(
        std::count_if(violations.begin(), violations.end(),
                      [](const Violation& v) { return v.severity == Severity::Error; }));
}

std::size_t ValidationReport::warning_count() const {
    return violations.size() - error_count();
}

void ValidationReport::add(Severity severity, std::string path, std::string code,
                           std::string message) {
    violations.push_back({severity, std::move(path), std::move(code), std::move(message)});
}

bool ValidationReport::has_code(std::string_view code) const {
    return std::any_of(violations.begin(), violations.end(),
                       [&](const Violation& v) { return v.code == code; });
}

std::string ValidationReport::to_string() const {
    std::string out;
    for (const auto& v : violations) {
        out += v.severity == Severity::Error ? "error" : "warning";
        out += " [" + v.code + "] at " + v.path + ": " + v.message + "\n";
    }
    return out;
}

// ------------------------------------------------------------------ parse

MetadataDocument parse_metadata(const std::string& text) {
    Value root = parse_json(text);
    if (!root.is_mapping())
        throw Error("parse_error", "root of a metadata document must be a mapping");
    return MetadataDocument{std::move(root)};
}

// ---------------------------------------------------------------- flatten

namespace {

enum class NodeRole { Field, ChildMapping, ChildList };

NodeRole classify(const Value& v, const std::string& path) {
    if (v.is_mapping()) return NodeRole::ChildMapping;
    if (!v.is_list()) return NodeRole::Field;
    bool any_mapping = false;
    bool any_other = false;
    for (std::size_t i = 0; i < v.size(); ++i)
        (v[i].is_mapping() ? any_mapping : any_other) = true;
    if (any_mapping && any_other)
        throw Error("mixed_list",
                    "list at " + path + " mixes mappings with scalar values");
    return any_mapping ? NodeRole::ChildList : NodeRole::Field;
}

struct Flattener {
    std::vector<FileRecord> records;
    int next_group = 0;

    using AliasNotes = std::vector<std::pair<std::string, std::string>>;

    void walk(const Value& node, const std::string& path, Value context, AliasNotes notes,
              std::optional<int> list_group) {
        // collect this level's fields first: they apply to every leaf below,
        // regardless of their position relative to nested containers
        bool own_file_name = false;
        std::vector<std::string_view> set_here;
        for (std::size_t i = 0; i < node.size(); ++i) {
            const std::string& raw_name = node.key(i);
            const Value& child = node[i];
            if (classify(child, path + "." + raw_name) != NodeRole::Field) continue;

            const std::string_view name = canonical_field_name(raw_name);
            if (std::find(set_here.begin(), set_here.end(), name) != set_here.end())
                throw Error("alias_collision", "mapping at " + path + " sets \"" +
                                                   std::string(name) +
                                                   "\" twice through alias spellings");
            set_here.push_back(name);
            if (is_alias(raw_name)) notes.emplace_back(path + "." + raw_name, raw_name);

            if (name == "file_name") {
                if (!child.is_string())
                    throw Error("invalid_file_name",
                                "file_name at " + path + " must be a string");
                own_file_name = true;
            }
            context.set(std::string(name), child);
        }

        // emit and recurse in field order so records appear in document order
        for (std::size_t i = 0; i < node.size(); ++i) {
            const std::string& raw_name = node.key(i);
            const Value& child = node[i];
            const std::string child_path = path + "." + raw_name;
            switch (classify(child, child_path)) {
            case NodeRole::Field:
                if (own_file_name && canonical_field_name(raw_name) == "file_name") {
                    FileRecord rec;
                    rec.fields = context;
                    rec.group_id = list_group ? *list_group : next_group++;
                    rec.source_path = path;
                    rec.alias_notes = notes;
                    records.push_back(std::move(rec));
                }
                break;
            case NodeRole::ChildMapping:
                walk(child, child_path, context, notes, list_group);
                break;
            case NodeRole::ChildList: {
                const int group = next_group++;
                for (std::size_t j = 0; j < child.size(); ++j)
                    walk(child[j], child_path + "[" + std::to_string(j) + "]", context, notes,
                         group);
                break;
            }
            }
        }
    }
};

} // namespace

std::vector<FileRecord> flatten(const MetadataDocument& doc) {
    Flattener f;
    f.walk(doc.root, "$", Value::mapping(), {}, std::nullopt);
    return f.records;
}

// --------------------------------------------------------------- validate

namespace {

struct RecordChecker {
    const FileRecord& rec;
    ValidationReport& report;

    std::string at(std::string_view field) const {
        return rec.source_path + "." + std::string(field);
    }

    void error(std::string_view field, std::string code, std::string message) {
        report.add(Severity::Error, at(field), std::move(code), std::move(message));
    }
    void warning(std::string_view field, std::string code, std::string message) {
        report.add(Severity::Warning, at(field), std::move(code), std::move(message));
    }

    const Value* require(std::string_view field) {
        const Value* v = rec.find(field);
        if (!v)
            error(field, "missing_mandatory:" + std::string(field),
                  "mandatory field \"" + std::string(field) + "\" is missing");
        return v;
    }

    void check_mandatory_string(std::string_view field) {
        const Value* v = require(field);
        if (!v) return;
        if (!v->is_string()) {
            error(field, "ill_typed:" + std::string(field),
                  "field \"" + std::string(field) + "\" must be a string");
            return;
        }
        if (v->as_string().empty())
            error(field, "empty_mandatory:" + std::string(field),
                  "mandatory field \"" + std::string(field) + "\" is empty");
    }

    /// Mandatory string list; returns length when well formed.
    std::optional<std::size_t> check_string_list(std::string_view field) {
        const Value* v = require(field);
        if (!v) return std::nullopt;
        if (!v->is_list()) {
            error(field, "ill_typed:" + std::string(field),
                  "field \"" + std::string(field) + "\" must be a list of strings");
            return std::nullopt;
        }
        for (std::size_t i = 0; i < v->size(); ++i) {
            if (!(*v)[i].is_string()) {
                error(field, "ill_typed:" + std::string(field),
                      "field \"" + std::string(field) + "\" must contain only strings");
                return std::nullopt;
            }
        }
        if (v->empty()) {
            error(field, "empty_mandatory:" + std::string(field),
                  "mandatory field \"" + std::string(field) + "\" is empty");
            return std::nullopt;
        }
        return v->size();
    }

    std::optional<Iso8601Timestamp> check_timestamp(std::string_view field) {
        const Value* v = require(field);
        if (!v) return std::nullopt;
        if (!v->is_string()) {
            error(field, "ill_typed:" + std::string(field),
                  "field \"" + std::string(field) + "\" must be an ISO 8601 string");
            return std::nullopt;
        }
        try {
            return parse_iso8601(v->as_string());
        } catch (const Error& e) {
            error(field, "invalid_iso8601:" + std::string(field), e.what());
            return std::nullopt;
        }
    }

    void run() {
        check_mandatory_string("subject_id");
        check_mandatory_string("study_id");
        check_mandatory_string("device_id");
        check_mandatory_string("metadata_version");
        check_mandatory_string("file_name");

        if (const Value* v = rec.find("endianness"); !v) {
            require("endianness");
        } else if (!v->is_string()) {
            error("endianness", "ill_typed:endianness", "field \"endianness\" must be a string");
        } else if (!endianness_from_name(v->as_string())) {
            error("endianness", "invalid_value:endianness",
                  "endianness must be \"big\" or \"little\", got \"" + v->as_string() + "\"");
        }

        if (const Value* v = rec.find("rows"); !v) {
            require("rows");
        } else if (!v->is_integer()) {
            error("rows", "ill_typed:rows", "field \"rows\" must be an integer");
        } else if (v->as_integer() < 0) {
            error("rows", "invalid_value:rows", "rows must be non-negative");
        }

        const auto n_channels = check_string_list("channels");
        const auto n_units = check_string_list("units");
        if (n_channels && n_units && *n_channels != *n_units)
            error("units", "channels_units_length_mismatch",
                  "channels has " + std::to_string(*n_channels) + " entries but units has " +
                      std::to_string(*n_units));

        std::optional<DataType> data_type;
        if (const Value* v = rec.find("data_type"); !v) {
            require("data_type");
        } else if (!v->is_string()) {
            error("data_type", "ill_typed:data_type", "field \"data_type\" must be a string");
        } else if (!(data_type = data_type_from_name(v->as_string()))) {
            error("data_type", "invalid_value:data_type",
                  "data_type must be \"int\", \"uint\" or \"float\", got \"" + v->as_string() +
                      "\"");
        }

        if (const Value* v = rec.find("bits"); !v) {
            require("bits");
        } else if (!v->is_integer()) {
            error("bits", "ill_typed:bits", "field \"bits\" must be an integer");
        } else {
            const std::int64_t bits = v->as_integer();
            if (bits != 8 && bits != 16 && bits != 32 && bits != 64)
                error("bits", "invalid_value:bits", "bits must be 8, 16, 32 or 64");
            else if (data_type == DataType::Float && bits != 32 && bits != 64)
                error("bits", "invalid_value:bits",
                      "float data requires 32 or 64 bits (IEEE 754)");
        }

        const auto start = check_timestamp("start_iso8601");
        const auto end = check_timestamp("end_iso8601");
        if (start && end && start->anchored() && end->anchored() &&
            to_epoch_millis(*start) > to_epoch_millis(*end))
            error("end_iso8601", "start_after_end",
                  "start_iso8601 is later than end_iso8601");

        if (auto fn = rec.get_string("file_name"); fn && looks_absolute(*fn))
            error("file_name", "absolute_path",
                  "file_name must be relative to the metadata file, got \"" + *fn + "\"");

        if (const Value* v = rec.find("compression")) {
            if (!v->is_string())
                error("compression", "ill_typed:compression",
                      "field \"compression\" must be a string");
            else if (!time_kind_known(v->as_string()))
                warning("compression", "unknown_compression",
                        "compression \"" + v->as_string() + "\" is not a recognized time encoding");
        }

        if (const Value* v = rec.find("sampling_rate")) {
            if (!v->is_number())
                error("sampling_rate", "ill_typed:sampling_rate",
                      "field \"sampling_rate\" must be a number");
            else if (!(v->as_number() > 0.0))
                error("sampling_rate", "invalid_value:sampling_rate",
                      "sampling_rate must be positive");
        }

        if (const Value* v = rec.find("scale_factors")) {
            bool numeric = v->is_list();
            if (numeric)
                for (std::size_t i = 0; i < v->size(); ++i)
                    if (!(*v)[i].is_number()) numeric = false;
            if (!numeric)
                error("scale_factors", "ill_typed:scale_factors",
                      "field \"scale_factors\" must be a list of numbers");
            else if (n_channels && v->size() != *n_channels)
                error("scale_factors", "scale_factors_length_mismatch",
                      "scale_factors has " + std::to_string(v->size()) +
                          " entries for " + std::to_string(*n_channels) + " channels");
        }

        if (const Value* v = rec.find("sensor_type"); v && !v->is_string())
            error("sensor_type", "ill_typed:sensor_type",
                  "field \"sensor_type\" must be a string");

        if (auto version = rec.get_string("metadata_version");
            version && *version != kPinnedMetadataVersion)
            warning("metadata_version", "metadata_version_unpinned",
                    "this tool validates against metadata_version \"" +
                        std::string(kPinnedMetadataVersion) + "\", document declares \"" +
                        *version + "\"");

        for (std::size_t i = 0; i < rec.fields.size(); ++i) {
            const std::string& name = rec.fields.key(i);
            if (!is_recognized_field(name))
                warning(name, "unknown_field:" + name,
                        "field \"" + name + "\" is not in the recognized vocabulary");
        }

        for (const auto& [path, original] : rec.alias_notes)
            report.add(Severity::Warning, path, "alias_field:" + original,
                       "\"" + original + "\" accepted as an alias of \"" +
                           std::string(canonical_field_name(original)) + "\"");
    }

    static bool time_kind_known(std::string_view name) {
        return time_kind_from_name(name).has_value();
    }
};

} // namespace

ValidationReport validate(std::span<const FileRecord> records) {
    ValidationReport report;
    for (const FileRecord& rec : records) {
        RecordChecker checker{rec, report};
        checker.run();
    }
    return report;
}

// -------------------------------------------------------------- serialize

namespace {

/// Fields in canonical emission order: Table-1 mandatory order, then the
/// recognized optional fields, then extras in collection order.
Value ordered_fields(const Value& fields) {
    Value out = Value::mapping();
    for (std::string_view name : kMandatoryFields)
        if (const Value* v = fields.find(name)) out.set(std::string(name), *v);
    for (std::string_view name : kOptionalFields)
        if (const Value* v = fields.find(name)) out.set(std::string(name), *v);
    for (std::size_t i = 0; i < fields.size(); ++i)
        if (!out.contains(fields.key(i))) out.set(fields.key(i), fields[i]);
    return out;
}

/// Fields that appear with an identical value in every record of the span.
Value shared_fields(std::span<const FileRecord* const> records) {
    Value shared = Value::mapping();
    if (records.empty()) return shared;
    const Value& first = records.front()->fields;
    for (std::size_t i = 0; i < first.size(); ++i) {
        const std::string& name = first.key(i);
        const bool everywhere = std::all_of(records.begin(), records.end(),
                                            [&](const FileRecord* r) {
                                                const Value* v = r->fields.find(name);
                                                return v && *v == first[i];
                                            });
        if (everywhere) shared.set(name, first[i]);
    }
    return shared;
}

Value minus(const Value& fields, const Value& removed) {
    Value out = Value::mapping();
    for (std::size_t i = 0; i < fields.size(); ++i)
        if (!removed.contains(fields.key(i))) out.set(fields.key(i), fields[i]);
    return out;
}

std::string container_name(const Value& mapping, std::string_view base) {
    std::string name(base);
    while (mapping.contains(name)) name += "_list";
    return name;
}

} // namespace

MetadataDocument build_metadata_document(std::span<const FileRecord> records,
                                         MetadataLayout layout) {
    if (records.empty())
        throw Error("nothing_to_serialize", "cannot serialize an empty record list");
    if (ValidationReport report = validate(records); !report.ok())
        throw Error("invalid_records",
                    "records must validate with zero errors before serialization:\n" +
                        report.to_string());

    if (records.size() == 1)
        return MetadataDocument{ordered_fields(records.front().fields)};

    // partition into groups, preserving first-appearance order
    std::vector<int> group_order;
    std::vector<std::vector<const FileRecord*>> groups;
    for (const FileRecord& rec : records) {
        auto it = std::find(group_order.begin(), group_order.end(), rec.group_id);
        if (it == group_order.end()) {
            group_order.push_back(rec.group_id);
            groups.emplace_back();
            it = group_order.end() - 1;
        }
        groups[static_cast<std::size_t>(it - group_order.begin())].push_back(&rec);
    }

    const bool hoist = layout == MetadataLayout::GroupedByCommonPrefix;

    std::vector<const FileRecord*> all;
    for (const FileRecord& rec : records) all.push_back(&rec);
    Value root_shared = Value::mapping();
    if (hoist) {
        root_shared = shared_fields(all);
        root_shared.erase("file_name"); // a hoisted file_name would change the leaf count
    }

    Value root = ordered_fields(root_shared);

    if (groups.size() == 1) {
        Value leaves = Value::list();
        for (const FileRecord* rec : groups.front())
            leaves.push_back(ordered_fields(minus(rec->fields, root_shared)));
        root.set(container_name(root, "samples"), std::move(leaves));
        return MetadataDocument{std::move(root)};
    }

    Value signal_list = Value::list();
    for (const auto& group : groups) {
        Value group_shared = Value::mapping();
        if (hoist) {
            group_shared = minus(shared_fields(group), root_shared);
            group_shared.erase("file_name");
        }
        Value group_node = ordered_fields(group_shared);
        Value leaves = Value::list();
        for (const FileRecord* rec : group) {
            Value leaf = minus(rec->fields, root_shared);
            leaves.push_back(ordered_fields(minus(leaf, group_shared)));
        }
        group_node.set(container_name(group_node, "samples"), std::move(leaves));
        signal_list.push_back(std::move(group_node));
    }
    root.set(container_name(root, "signals"), std::move(signal_list));
    return MetadataDocument{std::move(root)};
}

std::string serialize_metadata(std::span<const FileRecord> records,
                               const SerializeOptions& options) {
    return write_json(build_metadata_document(records, options.layout).root, options.indent);
}

// --------------------------------------------------------------- equality

namespace {

bool unordered_equal(const Value& a, const Value& b) {
    if (!a.is_mapping() || !b.is_mapping() || a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Value* other = b.find(a.key(i));
        if (!other || !(*other == a[i])) return false;
    }
    return true;
}

} // namespace

bool semantically_equal(const FileRecord& a, const FileRecord& b) {
    return unordered_equal(a.fields, b.fields);
}

bool semantically_equal(std::span<const FileRecord> a, std::span<const FileRecord> b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!semantically_equal(a[i], b[i])) return false;
    // group partitions must match up to renumbering
    const auto canonical = [](std::span<const FileRecord> records) {
        std::vector<int> seen, out;
        for (const FileRecord& rec : records) {
            auto it = std::find(seen.begin(), seen.end(), rec.group_id);
            if (it == seen.end()) {
                seen.push_back(rec.group_id);
                it = seen.end() - 1;
            }
            out.push_back(static_cast<int>(it - seen.begin()));
        }
        return out;
    };
    return canonical(a) == canonical(b);
}

} // namespace tsdf
