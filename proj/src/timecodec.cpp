#include "tsdf/timecodec.hpp"

#include <cmath>
#include <limits>

#include "tsdf/error.hpp"

namespace tsdf {

namespace {

constexpr std::int64_t kNanosPerSecond = 1'000'000'000;

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
    std::int64_t r = 0;
    if (__builtin_add_overflow(a, b, &r))
        throw Error("epoch_overflow", "instant outside the epoch-nanosecond range");
    return r;
}

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    std::int64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r))
        throw Error("epoch_overflow", "instant outside the epoch-nanosecond range");
    return r;
}

std::int64_t round_to_nanos(long double v, const char* what) {
    if (!std::isfinite(static_cast<double>(v)))
        throw Error("invalid_time_value", std::string("non-finite ") + what);
    if (v >= static_cast<long double>(std::numeric_limits<std::int64_t>::max()) ||
        v <= static_cast<long double>(std::numeric_limits<std::int64_t>::min()))
        throw Error("epoch_overflow", "instant outside the epoch-nanosecond range");
    return llroundl(v);
}

double require_rate(const TimeEncoding& enc) {
    if (!enc.sampling_rate.has_value() || !(*enc.sampling_rate > 0.0))
        throw Error("invalid_time_encoding", "uniform encoding requires a positive sampling_rate");
    return *enc.sampling_rate;
}

template <typename T>
std::vector<EpochNanos> decode_impl(std::span<const T> raw, const TimeEncoding& enc,
                                    std::size_t count) {
    std::vector<EpochNanos> out;
    out.reserve(count);

    if (enc.kind == TimeKind::Uniform) {
        if (!raw.empty())
            throw Error("invalid_time_encoding", "uniform encoding stores no time values");
        const double rate = require_rate(enc);
        const EpochNanos base = to_epoch_nanos(enc.base);
        for (std::size_t i = 0; i < count; ++i)
            out.push_back(uniform_instant(base, rate, i));
        return out;
    }

    if (raw.size() != count)
        throw Error("invalid_time_encoding", "expected " + std::to_string(count) +
                                                 " stored time values, got " +
                                                 std::to_string(raw.size()));
    const std::int64_t unit = time_unit_nanos(enc.unit);
    const EpochNanos base = enc.kind == TimeKind::Absolute ? 0 : to_epoch_nanos(enc.base);

    if constexpr (std::is_integral_v<T>) {
        std::int64_t cum = 0;
        for (std::size_t i = 0; i < count; ++i) {
            const std::int64_t v = raw[i];
            switch (enc.kind) {
            case TimeKind::Relative:
            case TimeKind::Absolute:
                out.push_back(checked_add(base, checked_mul(v, unit)));
                break;
            case TimeKind::Difference:
                if (v < 0)
                    throw Error("nonmonotonic_time",
                                "negative difference value at sample " + std::to_string(i));
                cum = checked_add(cum, v);
                out.push_back(checked_add(base, checked_mul(cum, unit)));
                break;
            case TimeKind::Uniform: break; // handled above
            }
        }
    } else {
        long double cum = 0.0L;
        for (std::size_t i = 0; i < count; ++i) {
            const long double v = static_cast<long double>(raw[i]);
            switch (enc.kind) {
            case TimeKind::Relative:
            case TimeKind::Absolute:
                out.push_back(checked_add(base, round_to_nanos(v * unit, "time value")));
                break;
            case TimeKind::Difference:
                if (raw[i] < 0)
                    throw Error("nonmonotonic_time",
                                "negative difference value at sample " + std::to_string(i));
                cum += v;
                out.push_back(checked_add(base, round_to_nanos(cum * unit, "time value")));
                break;
            case TimeKind::Uniform: break;
            }
        }
    }
    return out;
}

std::int64_t encode_one(EpochNanos delta, std::int64_t unit, const EncodeOptions& options,
                        std::size_t index) {
    const std::int64_t q = delta / unit;
    if (delta % unit != 0 && !options.allow_truncation)
        throw Error("unit_precision_loss",
                    "instant at sample " + std::to_string(index) +
                        " is not a whole number of stored units");
    return q;
}

} // namespace

std::optional<TimeKind> time_kind_from_name(std::string_view name) {
    if (name == "relative") return TimeKind::Relative;
    if (name == "absolute") return TimeKind::Absolute;
    if (name == "difference") return TimeKind::Difference;
    if (name == "none") return TimeKind::Uniform;
    return std::nullopt;
}

std::string_view time_kind_name(TimeKind kind) {
    switch (kind) {
    case TimeKind::Relative: return "relative";
    case TimeKind::Absolute: return "absolute";
    case TimeKind::Difference: return "difference";
    case TimeKind::Uniform: return "none";
    }
    return "none";
}

std::int64_t time_unit_nanos(std::string_view unit) {
    if (unit == "s") return 1'000'000'000;
    if (unit == "ms") return 1'000'000;
    if (unit == "us") return 1'000;
    if (unit == "ns") return 1;
    throw Error("invalid_time_unit",
                "time unit \"" + std::string(unit) + "\" is not one of s, ms, us, ns");
}

std::vector<EpochNanos> decode_timestamps(std::span<const std::int64_t> raw,
                                          const TimeEncoding& enc, std::size_t count) {
    return decode_impl(raw, enc, count);
}

std::vector<EpochNanos> decode_timestamps(std::span<const double> raw, const TimeEncoding& enc,
                                          std::size_t count) {
    return decode_impl(raw, enc, count);
}

std::vector<std::int64_t> encode_timestamps(std::span<const EpochNanos> instants,
                                            const TimeEncoding& enc,
                                            const EncodeOptions& options) {
    std::vector<std::int64_t> out;

    if (enc.kind == TimeKind::Uniform) {
        const double rate = require_rate(enc);
        const EpochNanos base = to_epoch_nanos(enc.base);
        for (std::size_t i = 0; i < instants.size(); ++i) {
            if (instants[i] != uniform_instant(base, rate, i))
                throw Error("uniform_grid_mismatch",
                            "instant at sample " + std::to_string(i) +
                                " does not lie on the uniform sampling grid");
        }
        return out;
    }

    const std::int64_t unit = time_unit_nanos(enc.unit);
    out.reserve(instants.size());
    const EpochNanos base = enc.kind == TimeKind::Absolute ? 0 : to_epoch_nanos(enc.base);

    EpochNanos prev = base;
    for (std::size_t i = 0; i < instants.size(); ++i) {
        const EpochNanos t = instants[i];
        switch (enc.kind) {
        case TimeKind::Relative:
        case TimeKind::Absolute: {
            std::int64_t delta = 0;
            if (__builtin_sub_overflow(t, base, &delta))
                throw Error("epoch_overflow", "instant outside the epoch-nanosecond range");
            out.push_back(encode_one(delta, unit, options, i));
            break;
        }
        case TimeKind::Difference: {
            if (t < prev)
                throw Error("nonmonotonic_time",
                            "instants must be nondecreasing for difference encoding (sample " +
                                std::to_string(i) + ")");
            out.push_back(encode_one(t - prev, unit, options, i));
            prev = t;
            break;
        }
        case TimeKind::Uniform: break; // handled above
        }
    }
    return out;
}

std::vector<double> encode_timestamps_real(std::span<const EpochNanos> instants,
                                           const TimeEncoding& enc) {
    if (enc.kind == TimeKind::Uniform)
        throw Error("invalid_time_encoding", "uniform encoding stores no time values");

    const std::int64_t unit = time_unit_nanos(enc.unit);
    const EpochNanos base = enc.kind == TimeKind::Absolute ? 0 : to_epoch_nanos(enc.base);

    std::vector<double> out;
    out.reserve(instants.size());
    EpochNanos prev = base;
    for (std::size_t i = 0; i < instants.size(); ++i) {
        const EpochNanos t = instants[i];
        EpochNanos ref = base;
        if (enc.kind == TimeKind::Difference) {
            if (t < prev)
                throw Error("nonmonotonic_time",
                            "instants must be nondecreasing for difference encoding (sample " +
                                std::to_string(i) + ")");
            ref = prev;
            prev = t;
        }
        out.push_back(static_cast<double>(static_cast<long double>(t - ref) /
                                          static_cast<long double>(unit)));
    }
    return out;
}

EpochNanos uniform_instant(EpochNanos base_ns, double sampling_rate_hz, std::uint64_t index) {
    if (!(sampling_rate_hz > 0.0))
        throw Error("invalid_time_encoding", "sampling rate must be positive");
    const long double offset = static_cast<long double>(index) *
                               static_cast<long double>(kNanosPerSecond) /
                               static_cast<long double>(sampling_rate_hz);
    return checked_add(base_ns, round_to_nanos(offset, "sample offset"));
}

} // namespace tsdf
