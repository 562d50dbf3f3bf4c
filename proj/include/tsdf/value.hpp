#ifndef TSDF_VALUE_HPP
#define TSDF_VALUE_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tsdf {

/**
 * One node of a metadata document tree: a scalar (boolean, integer, real,
 * string), an ordered list of nodes, or an ordered mapping of unique field
 * names to nodes. Integers and reals are distinct kinds and never coerced.
 */
class Value {
public:
    enum class Kind { Boolean, Integer, Real, String, List, Mapping };

    Value() : kind_(Kind::Mapping) {}
    Value(bool b) : kind_(Kind::Boolean), bool_(b) {}
    Value(std::int64_t i) : kind_(Kind::Integer), int_(i) {}
    Value(int i) : kind_(Kind::Integer), int_(i) {}
    Value(double d) : kind_(Kind::Real), real_(d) {}
    Value(std::string s) : kind_(Kind::String), string_(std::move(s)) {}
    Value(const char* s) : kind_(Kind::String), string_(s) {}

    static Value list();
    static Value mapping();

    Kind kind() const { return kind_; }
    bool is_boolean() const { return kind_ == Kind::Boolean; }
    bool is_integer() const { return kind_ == Kind::Integer; }
    bool is_real() const { return kind_ == Kind::Real; }
    bool is_string() const { return kind_ == Kind::String; }
    bool is_list() const { return kind_ == Kind::List; }
    bool is_mapping() const { return kind_ == Kind::Mapping; }
    bool is_scalar() const { return !is_list() && !is_mapping(); }
    bool is_number() const { return is_integer() || is_real(); }

    bool as_boolean() const;
    std::int64_t as_integer() const;
    double as_real() const;
    /// Numeric value of an integer or real node.
    double as_number() const;
    const std::string& as_string() const;

    /// Element count of a list or mapping; 0 for scalars.
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    // list access
    const Value& operator[](std::size_t i) const { return values_[i]; }
    Value& operator[](std::size_t i) { return values_[i]; }
    void push_back(Value v);

    // mapping access (insertion order preserved, names unique)
    const std::string& key(std::size_t i) const { return keys_[i]; }
    const Value* find(std::string_view name) const;
    Value* find(std::string_view name);
    bool contains(std::string_view name) const { return find(name) != nullptr; }
    /// Insert a field, or overwrite the value in place if the name exists.
    void set(std::string name, Value v);
    bool erase(std::string_view name);

    friend bool operator==(const Value& a, const Value& b);
    friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }

private:
    Kind kind_;
    bool bool_ = false;
    std::int64_t int_ = 0;
    double real_ = 0.0;
    std::string string_;
    std::vector<std::string> keys_;  // mapping field names, parallel to values_
    std::vector<Value> values_;      // list elements or mapping values
};

/// Parse JSON text into a Value tree. Duplicate field names within one
/// mapping and null values are rejected. Malformed input raises
/// Error("parse_error", ...) with line/column; invalid UTF-8 raises
/// Error("encoding_error", ...).
Value parse_json(const std::string& text);

/// Serialize a Value tree to JSON text. Lists of scalars are rendered on
/// one line; mappings and lists of containers use one entry per line at
/// the given indent width. Real numbers use the shortest representation
/// that round-trips, always carrying a decimal marker.
std::string write_json(const Value& value, int indent = 3);

/// Scalar or single-line rendering of any node, used for table views.
std::string write_json_compact(const Value& value);

} // namespace tsdf

#endif
