#ifndef TSDF_CSV_HPP
#define TSDF_CSV_HPP

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tsdf {

/// Every character of the dialect is explicit; nothing is guessed from the
/// locale.
struct CsvDialect {
    char delimiter = ',';
    char decimal_mark = '.';
    char quote = '"';
};

/// Quote a field if it contains the delimiter, the quote character or a
/// newline; embedded quotes are doubled.
std::string csv_quote(std::string_view field, const CsvDialect& dialect = {});

void csv_append_row(std::string& out, std::span<const std::string> fields,
                    const CsvDialect& dialect = {});

/// Row-at-a-time reader over complete CSV text, handling quoted fields with
/// embedded delimiters, quotes and newlines.
class CsvReader {
public:
    CsvReader(std::string_view text, CsvDialect dialect = {});

    /// Next row, or nullopt at end of input. Throws Error("csv_parse_error")
    /// for an unterminated quote.
    std::optional<std::vector<std::string>> next_row();

    /// 1-based line number where the last returned row started.
    std::size_t row_line() const { return row_line_; }

private:
    std::string_view text_;
    CsvDialect dialect_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t row_line_ = 1;
};

/// Shortest decimal text that parses back to exactly the same double, using
/// the dialect's decimal mark.
std::string csv_format_number(double value, const CsvDialect& dialect = {});

/// Parse a number under the dialect's decimal mark. Returns nullopt for
/// text that is not a complete number.
std::optional<double> csv_parse_number(std::string_view text, const CsvDialect& dialect = {});

} // namespace tsdf

#endif
