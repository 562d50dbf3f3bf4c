#include "tsdf/value.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "tsdf/error.hpp"

#include <json.hpp>

namespace tsdf {

Value Value::list() {
    Value v;
    v.kind_ = Kind::List;
    return v;
}

Value Value::mapping() {
    Value v;
    v.kind_ = Kind::Mapping;
    return v;
}

bool Value::as_boolean() const {
    if (!is_boolean()) throw Error("type_error", "node is not a boolean");
    return bool_;
}

std::int64_t Value::as_integer() const {
    if (!is_integer()) throw Error("type_error", "node is not an integer");
    return int_;
}

double Value::as_real() const {
    if (!is_real()) throw Error("type_error", "node is not a real");
    return real_;
}

double Value::as_number() const {
    if (is_integer()) return static_cast<double>(int_);
    if (is_real()) return real_;
    throw Error("type_error", "node is not a number");
}

const std::string& Value::as_string() const {
    if (!is_string()) throw Error("type_error", "node is not a string");
    return string_;
}

void Value::push_back(Value v) {
    if (!is_list()) throw Error("type_error", "node is not a list");
    values_.push_back(std::move(v));
}

const Value* Value::find(std::string_view name) const {
    if (!is_mapping()) return nullptr;
    for (std::size_t i = 0; i < keys_.size(); ++i)
        if (keys_[i] == name) return &values_[i];
    return nullptr;
}

Value* Value::find(std::string_view name) {
    return const_cast<Value*>(static_cast<const Value*>(this)->find(name));
}

void Value::set(std::string name, Value v) {
    if (!is_mapping()) throw Error("type_error", "node is not a mapping");
    for (std::size_t i = 0; i < keys_.size(); ++i) {
        if (keys_[i] == name) {
            values_[i] = std::move(v);
            return;
        }
    }
    keys_.push_back(std::move(name));
    values_.push_back(std::move(v));
}

bool Value::erase(std::string_view name) {
    if (!is_mapping()) return false;
    for (std::size_t i = 0; i < keys_.size(); ++i) {
        if (keys_[i] == name) {
            keys_.erase(keys_.begin() + static_cast<std::ptrdiff_t>(i));
            values_.erase(values_.begin() + static_cast<std::ptrdiff_t>(i));
            return true;
        }
    }
    return false;
}

bool operator==(const Value& a, const Value& b) {
    if (a.kind_ != b.kind_) return false;
    switch (a.kind_) {
    case Value::Kind::Boolean: return a.bool_ == b.bool_;
    case Value::Kind::Integer: return a.int_ == b.int_;
    case Value::Kind::Real: return a.real_ == b.real_;
    case Value::Kind::String: return a.string_ == b.string_;
    case Value::Kind::List: return a.values_ == b.values_;
    case Value::Kind::Mapping: return a.keys_ == b.keys_ && a.values_ == b.values_;
    }
    return false;
}

namespace {

// ---------------------------------------------------------------- parsing

class TreeBuilder : public nlohmann::json_sax<nlohmann::json> {
public:
    Value root;
    std::string error_code;
    std::string error_message;

    bool null() override {
        return fail("unsupported_value", "null is not a valid metadata value at " + path());
    }
    bool boolean(bool v) override { return emit(Value(v)); }
    bool number_integer(number_integer_t v) override { return emit(Value(static_cast<std::int64_t>(v))); }
    bool number_unsigned(number_unsigned_t v) override {
        if (v <= static_cast<number_unsigned_t>(INT64_MAX))
            return emit(Value(static_cast<std::int64_t>(v)));
        return emit(Value(static_cast<double>(v)));
    }
    bool number_float(number_float_t v, const string_t&) override { return emit(Value(v)); }
    bool string(string_t& v) override { return emit(Value(v)); }
    bool binary(binary_t&) override { return fail("unsupported_value", "binary values are not valid metadata"); }

    bool start_object(std::size_t) override {
        stack_.push_back(Value::mapping());
        return true;
    }
    bool key(string_t& name) override {
        if (stack_.back().contains(name))
            return fail("duplicate_field",
                        "duplicate field \"" + name + "\" in mapping at " + path());
        pending_keys_.push_back(name);
        return true;
    }
    bool end_object() override { return pop(); }

    bool start_array(std::size_t) override {
        stack_.push_back(Value::list());
        return true;
    }
    bool end_array() override { return pop(); }

    bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception& ex) override {
        std::string what = ex.what();
        // strip nlohmann's "[json.exception.parse_error.N] " prefix
        if (auto pos = what.find("] "); pos != std::string::npos) what = what.substr(pos + 2);
        const bool encoding = what.find("UTF-8") != std::string::npos;
        return fail(encoding ? "encoding_error" : "parse_error", what);
    }

private:
    std::vector<Value> stack_;
    std::vector<std::string> pending_keys_; // one per open mapping awaiting a value

    std::string path() const {
        std::string p = "$";
        std::size_t key_idx = 0;
        for (const auto& node : stack_) {
            if (node.is_mapping()) {
                if (key_idx < pending_keys_.size()) p += "." + pending_keys_[key_idx++];
            } else {
                p += "[" + std::to_string(node.size()) + "]";
            }
        }
        return p;
    }

    bool fail(std::string code, std::string message) {
        error_code = std::move(code);
        error_message = std::move(message);
        return false;
    }

    bool emit(Value v) {
        if (stack_.empty()) {
            root = std::move(v);
            return true;
        }
        Value& top = stack_.back();
        if (top.is_list()) {
            top.push_back(std::move(v));
        } else {
            top.set(std::move(pending_keys_.back()), std::move(v));
            pending_keys_.pop_back();
        }
        return true;
    }

    bool pop() {
        Value done = std::move(stack_.back());
        stack_.pop_back();
        return emit(std::move(done));
    }
};

// ---------------------------------------------------------------- writing

void write_escaped(std::string& out, const std::string& s) {
    out += '"';
    for (unsigned char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\b': out += "\\b"; break;
        case '\f': out += "\\f"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\t': out += "\\t"; break;
        default:
            if (c < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                out += buf;
            } else {
                out += static_cast<char>(c);
            }
        }
    }
    out += '"';
}

void write_number(std::string& out, const Value& v) {
    char buf[32];
    if (v.is_integer()) {
        auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v.as_integer());
        out.append(buf, p);
        return;
    }
    const double d = v.as_real();
    if (!std::isfinite(d))
        throw Error("non_finite_number", "real value cannot be represented in JSON text");
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), d);
    std::string_view text(buf, static_cast<std::size_t>(p - buf));
    out += text;
    // keep the real/integer distinction through a reparse
    if (text.find('.') == std::string_view::npos && text.find('e') == std::string_view::npos)
        out += ".0";
}

bool all_scalars(const Value& list) {
    for (std::size_t i = 0; i < list.size(); ++i)
        if (!list[i].is_scalar()) return false;
    return true;
}

void write_node(std::string& out, const Value& v, int indent, int depth) {
    const auto pad = [&](int d) { out.append(static_cast<std::size_t>(indent * d), ' '); };
    switch (v.kind()) {
    case Value::Kind::Boolean: out += v.as_boolean() ? "true" : "false"; break;
    case Value::Kind::Integer:
    case Value::Kind::Real: write_number(out, v); break;
    case Value::Kind::String: write_escaped(out, v.as_string()); break;
    case Value::Kind::List:
        if (v.empty()) {
            out += "[]";
        } else if (all_scalars(v)) {
            out += '[';
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (i) out += ", ";
                write_node(out, v[i], indent, depth);
            }
            out += ']';
        } else {
            out += "[\n";
            for (std::size_t i = 0; i < v.size(); ++i) {
                pad(depth + 1);
                write_node(out, v[i], indent, depth + 1);
                if (i + 1 < v.size()) out += ',';
                out += '\n';
            }
            pad(depth);
            out += ']';
        }
        break;
    case Value::Kind::Mapping:
        if (v.empty()) {
            out += "{}";
        } else {
            out += "{\n";
            for (std::size_t i = 0; i < v.size(); ++i) {
                pad(depth + 1);
                write_escaped(out, v.key(i));
                out += ": ";
                write_node(out, v[i], indent, depth + 1);
                if (i + 1 < v.size()) out += ',';
                out += '\n';
            }
            pad(depth);
            out += '}';
        }
        break;
    }
}

} // namespace

Value parse_json(const std::string& text) {
    TreeBuilder builder;
    const bool ok = nlohmann::json::sax_parse(text, &builder);
    if (!ok) {
        if (builder.error_code.empty())
            throw Error("parse_error", "malformed JSON text");
        throw Error(builder.error_code, builder.error_message);
    }
    return builder.root;
}

std::string write_json(const Value& value, int indent) {
    std::string out;
    write_node(out, value, indent, 0);
    out += '\n';
    return out;
}

std::string write_json_compact(const Value& value) {
    std::string out;
    switch (value.kind()) {
    case Value::Kind::List: {
        out += '[';
        for (std::size_t i = 0; i < value.size(); ++i) {
            if (i) out += ", ";
            out += write_json_compact(value[i]);
        }
        out += ']';
        break;
    }
    case Value::Kind::Mapping: {
        out += '{';
        for (std::size_t i = 0; i < value.size(); ++i) {
            if (i) out += ", ";
            write_escaped(out, value.key(i));
            out += ": ";
            out += write_json_compact(value[i]);
        }
        out += '}';
        break;
    }
    default:
        write_node(out, value, 0, 0);
    }
    return out;
}

} // namespace tsdf
