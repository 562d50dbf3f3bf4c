#ifndef TSDF_ISO8601_HPP
#define TSDF_ISO8601_HPP

#include <cstdint>
#include <string>
#include <string_view>

namespace tsdf {

/// Nanoseconds since the Unix epoch (POSIX timescale, no leap seconds).
using EpochNanos = std::int64_t;

/// How much offset information a timestamp string carried.
enum class OffsetKind {
    Known,     ///< explicit ±hh:mm designator
    UtcOnly,   ///< "Z": UTC known, local offset unknown
    LocalOnly, ///< no designator: local time known, absolute time unknown
};

/**
 * Structured timestamp in the yyyy-mm-ddThh:mm:ss.SSS±hh:mm form, with the
 * "Z" and omitted-offset variants. The fractional part keeps its original
 * digit count (0 to 9) so formatting reproduces the source text exactly.
 */
struct Iso8601Timestamp {
    int year = 1970;
    unsigned month = 1;
    unsigned day = 1;
    unsigned hour = 0;
    unsigned minute = 0;
    unsigned second = 0;
    std::uint32_t fraction = 0;    ///< literal fraction digits read as an integer
    unsigned fraction_digits = 0;  ///< 0 means no fractional part
    OffsetKind offset_kind = OffsetKind::LocalOnly;
    int offset_minutes = 0;        ///< meaningful only when offset_kind == Known

    /// Fraction scaled to nanoseconds.
    std::uint32_t nanoseconds() const;
    /// True when the absolute instant is determined (Known or UtcOnly).
    bool anchored() const { return offset_kind != OffsetKind::LocalOnly; }

    friend bool operator==(const Iso8601Timestamp&, const Iso8601Timestamp&) = default;
};

/// Parse a timestamp string, detecting the offset variant. Throws
/// Error("invalid_iso8601", ...) naming the defect.
Iso8601Timestamp parse_iso8601(std::string_view text);

/// Canonical formatting; inverse of parse_iso8601 for every valid input.
std::string format_iso8601(const Iso8601Timestamp& t);

/// Milliseconds since the Unix epoch; sub-millisecond fraction truncated
/// toward zero. Throws Error("no_absolute_anchor") for LocalOnly inputs.
std::int64_t to_epoch_millis(const Iso8601Timestamp& t);

/// Nanoseconds since the Unix epoch. Throws Error("no_absolute_anchor") for
/// LocalOnly inputs and Error("epoch_overflow") outside the int64 range.
EpochNanos to_epoch_nanos(const Iso8601Timestamp& t);

/// Reconstruct a timestamp at the given offset, rounding the instant to
/// the nearest `fraction_digits`-decimal value.
Iso8601Timestamp from_epoch_nanos(EpochNanos ns, OffsetKind kind, int offset_minutes,
                                  unsigned fraction_digits = 3);

/// Days since 1970-01-01 in the proleptic Gregorian calendar.
std::int64_t days_from_civil(int year, unsigned month, unsigned day);

} // namespace tsdf

#endif
