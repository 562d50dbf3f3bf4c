#include "tsdf/iso8601.hpp"

#include <array>
#include <cstdio>

#include "tsdf/error.hpp"

namespace tsdf {

namespace {

constexpr std::int64_t kNanosPerSecond = 1'000'000'000;
constexpr int kMaxOffsetMinutes = 18 * 60;

constexpr std::array<unsigned, 12> kMonthDays = {31, 28, 31, 30, 31, 30,
                                                 31, 31, 30, 31, 30, 31};

bool is_leap(int y) {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

unsigned days_in_month(int year, unsigned month) {
    if (month == 2 && is_leap(year)) return 29;
    return kMonthDays[month - 1];
}

std::uint32_t pow10_u32(unsigned n) {
    std::uint32_t v = 1;
    while (n--) v *= 10;
    return v;
}

[[noreturn]] void bad(std::string_view text, const std::string& defect) {
    throw Error("invalid_iso8601", defect + " in \"" + std::string(text) + "\"");
}

struct Cursor {
    std::string_view text;
    std::size_t pos = 0;

    bool done() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }

    unsigned digits(unsigned n, const char* what) {
        unsigned v = 0;
        for (unsigned i = 0; i < n; ++i) {
            if (done() || peek() < '0' || peek() > '9')
                bad(text, std::string("expected digit in ") + what);
            v = v * 10 + static_cast<unsigned>(peek() - '0');
            ++pos;
        }
        return v;
    }

    void expect(char c, const char* what) {
        if (done() || peek() != c)
            bad(text, std::string("expected '") + c + "' " + what);
        ++pos;
    }
};

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

// civil date from day count, inverse of days_from_civil
void civil_from_days(std::int64_t z, int& year, unsigned& month, unsigned& day) {
    z += 719468;
    const std::int64_t era = floor_div(z, 146097);
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    day = doy - (153 * mp + 2) / 5 + 1;
    month = mp < 10 ? mp + 3 : mp - 9;
    year = static_cast<int>(y + (month <= 2));
}

/// Seconds since epoch of the timestamp's wall-clock fields, offset applied.
std::int64_t anchored_seconds(const Iso8601Timestamp& t) {
    if (!t.anchored())
        throw Error("no_absolute_anchor",
                    "timestamp \"" + format_iso8601(t) + "\" carries no UTC offset");
    const std::int64_t days = days_from_civil(t.year, t.month, t.day);
    std::int64_t secs = days * 86400 + t.hour * 3600 + t.minute * 60 + t.second;
    if (t.offset_kind == OffsetKind::Known) secs -= static_cast<std::int64_t>(t.offset_minutes) * 60;
    return secs;
}

} // namespace

std::int64_t days_from_civil(int year, unsigned month, unsigned day) {
    // Howard Hinnant's algorithm, proleptic Gregorian
    year -= month <= 2;
    const std::int64_t era = floor_div(year, 400);
    const unsigned yoe = static_cast<unsigned>(year - era * 400);
    const unsigned doy = (153 * (month > 2 ? month - 3 : month + 9) + 2) / 5 + day - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

std::uint32_t Iso8601Timestamp::nanoseconds() const {
    return fraction * pow10_u32(9 - fraction_digits);
}

Iso8601Timestamp parse_iso8601(std::string_view text) {
    Cursor c{text};
    Iso8601Timestamp t;

    t.year = static_cast<int>(c.digits(4, "year"));
    c.expect('-', "after year");
    t.month = c.digits(2, "month");
    c.expect('-', "after month");
    t.day = c.digits(2, "day");
    c.expect('T', "between date and time");
    t.hour = c.digits(2, "hour");
    c.expect(':', "after hour");
    t.minute = c.digits(2, "minute");
    c.expect(':', "after minute");
    t.second = c.digits(2, "second");

    if (t.month < 1 || t.month > 12) bad(text, "month out of range");
    if (t.day < 1 || t.day > days_in_month(t.year, t.month)) bad(text, "invalid calendar date");
    if (t.hour > 23) bad(text, "hour out of range");
    if (t.minute > 59) bad(text, "minute out of range");
    if (t.second > 59) bad(text, "second out of range");

    if (!c.done() && c.peek() == '.') {
        ++c.pos;
        std::uint32_t frac = 0;
        unsigned n = 0;
        while (!c.done() && c.peek() >= '0' && c.peek() <= '9') {
            if (n == 9) bad(text, "fractional seconds beyond nanosecond precision");
            frac = frac * 10 + static_cast<unsigned>(c.peek() - '0');
            ++n;
            ++c.pos;
        }
        if (n == 0) bad(text, "decimal point without fraction digits");
        t.fraction = frac;
        t.fraction_digits = n;
    }

    if (c.done()) {
        t.offset_kind = OffsetKind::LocalOnly;
        return t;
    }

    const char designator = c.peek();
    if (designator == 'Z') {
        ++c.pos;
        t.offset_kind = OffsetKind::UtcOnly;
    } else if (designator == '+' || designator == '-') {
        ++c.pos;
        const unsigned oh = c.digits(2, "offset hours");
        c.expect(':', "in offset");
        const unsigned om = c.digits(2, "offset minutes");
        if (om > 59) bad(text, "offset minutes out of range");
        int minutes = static_cast<int>(oh * 60 + om);
        if (minutes > kMaxOffsetMinutes) bad(text, "offset out of range (max 18:00)");
        if (designator == '-') {
            if (minutes == 0) bad(text, "negative zero offset is not allowed");
            minutes = -minutes;
        }
        t.offset_kind = OffsetKind::Known;
        t.offset_minutes = minutes;
    } else {
        bad(text, "unexpected trailing characters");
    }

    if (!c.done()) bad(text, "unexpected trailing characters");
    return t;
}

std::string format_iso8601(const Iso8601Timestamp& t) {
    char buf[48];
    int n = std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02u:%02u:%02u", t.year, t.month,
                          t.day, t.hour, t.minute, t.second);
    std::string out(buf, static_cast<std::size_t>(n));
    if (t.fraction_digits > 0) {
        std::snprintf(buf, sizeof(buf), ".%0*u", static_cast<int>(t.fraction_digits), t.fraction);
        out += buf;
    }
    switch (t.offset_kind) {
    case OffsetKind::LocalOnly: break;
    case OffsetKind::UtcOnly: out += 'Z'; break;
    case OffsetKind::Known: {
        const unsigned abs_min = static_cast<unsigned>(t.offset_minutes < 0 ? -t.offset_minutes
                                                                            : t.offset_minutes);
        std::snprintf(buf, sizeof(buf), "%c%02u:%02u", t.offset_minutes < 0 ? '-' : '+',
                      abs_min / 60, abs_min % 60);
        out += buf;
        break;
    }
    }
    return out;
}

std::int64_t to_epoch_millis(const Iso8601Timestamp& t) {
    const std::int64_t secs = anchored_seconds(t);
    const std::int64_t frac_ns = t.nanoseconds();
    const std::int64_t whole_ms = frac_ns / 1'000'000;
    const std::int64_t rem = frac_ns % 1'000'000;
    std::int64_t ms = secs * 1000 + whole_ms;
    // truncation is toward zero of the exact value, so negative instants
    // with a leftover sub-millisecond part round up by one
    if (secs < 0 && rem > 0) ms += 1;
    return ms;
}

EpochNanos to_epoch_nanos(const Iso8601Timestamp& t) {
    const std::int64_t secs = anchored_seconds(t);
    std::int64_t ns = 0;
    if (__builtin_mul_overflow(secs, kNanosPerSecond, &ns) ||
        __builtin_add_overflow(ns, static_cast<std::int64_t>(t.nanoseconds()), &ns))
        throw Error("epoch_overflow", "instant outside the epoch-nanosecond range");
    return ns;
}

Iso8601Timestamp from_epoch_nanos(EpochNanos ns, OffsetKind kind, int offset_minutes,
                                  unsigned fraction_digits) {
    if (kind == OffsetKind::LocalOnly)
        throw Error("no_absolute_anchor", "cannot place an instant on a local-only clock");
    if (fraction_digits > 9)
        throw Error("invalid_iso8601", "fractional seconds beyond nanosecond precision");
    if (kind == OffsetKind::UtcOnly) offset_minutes = 0;
    else if (offset_minutes < -kMaxOffsetMinutes || offset_minutes > kMaxOffsetMinutes)
        throw Error("invalid_iso8601", "offset out of range (max 18:00)");

    const std::int64_t local_ns = ns + static_cast<std::int64_t>(offset_minutes) * 60 * kNanosPerSecond;
    const std::int64_t unit = static_cast<std::int64_t>(pow10_u32(9 - fraction_digits));
    // round to the requested precision, ties away from zero
    std::int64_t scaled = floor_div(local_ns, unit);
    if (2 * (local_ns - scaled * unit) >= unit) ++scaled;

    const std::int64_t per_second = static_cast<std::int64_t>(pow10_u32(fraction_digits));
    std::int64_t secs = floor_div(scaled, per_second);
    const std::int64_t frac = scaled - secs * per_second;

    const std::int64_t days = floor_div(secs, 86400);
    std::int64_t sod = secs - days * 86400;

    Iso8601Timestamp t;
    civil_from_days(days, t.year, t.month, t.day);
    t.hour = static_cast<unsigned>(sod / 3600);
    t.minute = static_cast<unsigned>((sod % 3600) / 60);
    t.second = static_cast<unsigned>(sod % 60);
    t.fraction = static_cast<std::uint32_t>(frac);
    t.fraction_digits = fraction_digits;
    t.offset_kind = kind;
    t.offset_minutes = kind == OffsetKind::Known ? offset_minutes : 0;
    return t;
}

} // namespace tsdf
