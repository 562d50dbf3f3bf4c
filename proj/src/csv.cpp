#include "tsdf/csv.hpp"

#include <charconv>
#include <cmath>

#include "tsdf/error.hpp"

namespace tsdf {

std::string csv_quote(std::string_view field, const CsvDialect& dialect) {
    const bool needs_quote = field.find_first_of(std::string{dialect.delimiter, dialect.quote,
                                                             '\n', '\r'}) != std::string_view::npos;
    if (!needs_quote) return std::string(field);
    std::string out;
    out += dialect.quote;
    for (char c : field) {
        out += c;
        if (c == dialect.quote) out += dialect.quote;
    }
    out += dialect.quote;
    return out;
}

void csv_append_row(std::string& out, std::span<const std::string> fields,
                    const CsvDialect& dialect) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += dialect.delimiter;
        out += csv_quote(fields[i], dialect);
    }
    out += '\n';
}

CsvReader::CsvReader(std::string_view text, CsvDialect dialect)
    : text_(text), dialect_(dialect) {}

std::optional<std::vector<std::string>> CsvReader::next_row() {
    if (pos_ >= text_.size()) return std::nullopt;
    row_line_ = line_;

    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    while (pos_ < text_.size()) {
        const char c = text_[pos_];
        if (quoted) {
            if (c == dialect_.quote) {
                if (pos_ + 1 < text_.size() && text_[pos_ + 1] == dialect_.quote) {
                    field += dialect_.quote;
                    ++pos_;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line_;
                field += c;
            }
            ++pos_;
            continue;
        }
        if (c == dialect_.quote && field.empty()) {
            quoted = true;
            ++pos_;
            continue;
        }
        if (c == dialect_.delimiter) {
            row.push_back(std::move(field));
            field.clear();
            ++pos_;
            continue;
        }
        if (c == '\n' || c == '\r') {
            if (c == '\r' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '\n') ++pos_;
            ++pos_;
            ++line_;
            row.push_back(std::move(field));
            return row;
        }
        field += c;
        ++pos_;
    }
    if (quoted)
        throw Error("csv_parse_error",
                    "unterminated quote in row starting at line " + std::to_string(row_line_));
    row.push_back(std::move(field));
    return row;
}

std::string csv_format_number(double value, const CsvDialect& dialect) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    std::string out(buf, p);
    if (dialect.decimal_mark != '.') {
        for (char& c : out)
            if (c == '.') c = dialect.decimal_mark;
    }
    return out;
}

std::optional<double> csv_parse_number(std::string_view text, const CsvDialect& dialect) {
    std::string normalized(text);
    if (dialect.decimal_mark != '.') {
        for (char& c : normalized) {
            if (c == '.') return std::nullopt; // '.' is not a digit under this dialect
            if (c == dialect.decimal_mark) c = '.';
        }
    }
    if (normalized.empty()) return std::nullopt;
    double value = 0.0;
    const char* begin = normalized.data();
    const char* end = begin + normalized.size();
    auto [p, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || p != end) return std::nullopt;
    return value;
}

} // namespace tsdf
