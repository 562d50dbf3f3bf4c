#ifndef TSDF_METADATA_HPP
#define TSDF_METADATA_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsdf/types.hpp"
#include "tsdf/value.hpp"

namespace tsdf {

/// A parsed metadata document: the JSON tree with hierarchy and field order
/// preserved. The root is always a mapping.
struct MetadataDocument {
    Value root;
};

/**
 * One flattened leaf of the metadata hierarchy, describing a single binary
 * file with every inherited field resolved. `fields` holds the complete
 * flattened mapping under canonical field names; the typed accessors
 * return nullopt when a field is absent or carries the wrong node type
 * (validate reports those findings, flatten does not).
 */
struct FileRecord {
    Value fields = Value::mapping();
    int group_id = 0;
    /// Location of the leaf mapping in the source document, e.g. "$.sensors[1]".
    std::string source_path = "$";
    /// (path, original spelling) for fields accepted under a legacy alias.
    std::vector<std::pair<std::string, std::string>> alias_notes;

    const Value* find(std::string_view name) const { return fields.find(name); }

    std::optional<std::string> get_string(std::string_view name) const;
    std::optional<std::int64_t> get_integer(std::string_view name) const;
    std::optional<double> get_number(std::string_view name) const;
    std::optional<std::vector<std::string>> get_string_list(std::string_view name) const;
    std::optional<std::vector<double>> get_number_list(std::string_view name) const;

    std::string file_name() const;
    std::optional<std::string> subject_id() const { return get_string("subject_id"); }
    std::optional<std::string> study_id() const { return get_string("study_id"); }
    std::optional<std::string> device_id() const { return get_string("device_id"); }
    std::optional<std::string> metadata_version() const { return get_string("metadata_version"); }
    std::optional<Endianness> endianness() const;
    std::optional<std::string> start_iso8601() const { return get_string("start_iso8601"); }
    std::optional<std::string> end_iso8601() const { return get_string("end_iso8601"); }
    std::optional<std::int64_t> rows() const { return get_integer("rows"); }
    std::optional<std::vector<std::string>> channels() const { return get_string_list("channels"); }
    std::optional<std::vector<std::string>> units() const { return get_string_list("units"); }
    std::optional<DataType> data_type() const;
    std::optional<std::int64_t> bits() const { return get_integer("bits"); }
    std::optional<std::string> compression() const { return get_string("compression"); }
    std::optional<double> sampling_rate() const { return get_number("sampling_rate"); }
    std::optional<std::vector<double>> scale_factors() const {
        return get_number_list("scale_factors");
    }
    std::optional<std::string> sensor_type() const { return get_string("sensor_type"); }

    /// Fields outside the recognized vocabulary, in collection order.
    Value extra_fields() const;

    void set(std::string name, Value v) { fields.set(std::move(name), std::move(v)); }
};

/// Every field name is either mandatory, recognized-optional, or extra.
std::span<const std::string_view> mandatory_field_names();
bool is_recognized_field(std::string_view name);

enum class Severity { Error, Warning };

struct Violation {
    Severity severity = Severity::Error;
    std::string path;     ///< location of the offending node
    std::string code;     ///< stable machine identifier, e.g. "missing_mandatory:rows"
    std::string message;  ///< human explanation
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return error_count() == 0; }
    std::size_t error_count() const;
    std::size_t warning_count() const;
    void add(Severity severity, std::string path, std::string code, std::string message);
    bool has_code(std::string_view code) const;
    /// All findings joined one per line, for log and exception text.
    std::string to_string() const;
};

/// Parse UTF-8 metadata text. The root must be a mapping; scalar types are
/// preserved (integers are not coerced to reals). Malformed text raises
/// Error("parse_error") with line/column, invalid UTF-8 raises
/// Error("encoding_error"), duplicate field names raise
/// Error("duplicate_field").
MetadataDocument parse_metadata(const std::string& text);

/**
 * Resolve the hierarchy into one FileRecord per file_name field, walking
 * root to leaf and letting deeper values override shallower ones. Sibling
 * mappings inside one list share a group_id; nested lists open new groups.
 * Records come back in document order. The legacy spellings "endianess"
 * and "filename" are accepted as aliases of "endianness" and "file_name"
 * (noted on the record, reported as warnings by validate). Throws for a
 * file_name that is not a string and for lists mixing scalars with
 * mappings.
 */
std::vector<FileRecord> flatten(const MetadataDocument& doc);

/// Check flattened records against the mandatory-field contract. All
/// findings land in the report; nothing throws.
ValidationReport validate(std::span<const FileRecord> records);

/// How serialize_metadata arranges records in the document.
enum class MetadataLayout {
    FlatPerFile,           ///< every leaf carries all of its fields
    GroupedByCommonPrefix, ///< fields shared by every record hoist to the root
};

struct SerializeOptions {
    MetadataLayout layout = MetadataLayout::GroupedByCommonPrefix;
    int indent = 3;
};

/// Build a conformant document from records that validate with zero errors
/// and render it as JSON text. flatten(parse(serialize(records))) is
/// semantically equal to the input up to group_id renumbering and field
/// order. Throws Error("nothing_to_serialize") for an empty record list.
std::string serialize_metadata(std::span<const FileRecord> records,
                               const SerializeOptions& options = {});

/// Build the document tree without rendering it.
MetadataDocument build_metadata_document(std::span<const FileRecord> records,
                                         MetadataLayout layout);

/// Field-for-field equality ignoring group_id numbering and field order.
bool semantically_equal(const FileRecord& a, const FileRecord& b);
bool semantically_equal(std::span<const FileRecord> a, std::span<const FileRecord> b);

} // namespace tsdf

#endif
