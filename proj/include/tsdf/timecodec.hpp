#ifndef TSDF_TIMECODEC_HPP
#define TSDF_TIMECODEC_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsdf/iso8601.hpp"

namespace tsdf {

/// Strategy mapping stored numbers to instants.
enum class TimeKind {
    Relative,   ///< elapsed since the recording start
    Absolute,   ///< Unix time in the stored unit
    Difference, ///< delta from the previous sample (first value is offset from start)
    Uniform,    ///< start + index / sampling_rate, nothing stored
};

/// Parse a time-encoding name ("relative", "absolute", "difference"; "none"
/// means uniform). Returns nullopt for unrecognized names.
std::optional<TimeKind> time_kind_from_name(std::string_view name);
std::string_view time_kind_name(TimeKind kind);

/// Nanoseconds per stored unit; accepts "s", "ms", "us", "ns".
std::int64_t time_unit_nanos(std::string_view unit);

/// Complete description of how a stream of instants is stored.
struct TimeEncoding {
    TimeKind kind = TimeKind::Uniform;
    std::string unit = "ms";
    Iso8601Timestamp base;                    ///< recording start
    std::optional<double> sampling_rate;      ///< Hz, required iff kind == Uniform
};

/**
 * Decode stored time values into absolute instants (epoch nanoseconds).
 * `raw` must hold `count` values for every kind except Uniform, which takes
 * no stored values. Negative values under Difference raise
 * Error("nonmonotonic_time"); results outside the representable range raise
 * Error("epoch_overflow").
 */
std::vector<EpochNanos> decode_timestamps(std::span<const std::int64_t> raw,
                                          const TimeEncoding& enc, std::size_t count);
std::vector<EpochNanos> decode_timestamps(std::span<const double> raw,
                                          const TimeEncoding& enc, std::size_t count);

struct EncodeOptions {
    /// Permit instants that are not exact multiples of the unit, truncating
    /// the stored value toward zero instead of raising unit_precision_loss.
    bool allow_truncation = false;
};

/**
 * Encode absolute instants as stored values in the given unit; the exact
 * inverse of decode_timestamps. Instants must be nondecreasing for
 * Difference. An instant that does not fall on the unit grid raises
 * Error("unit_precision_loss") unless truncation is allowed. Uniform
 * encoding stores nothing; it verifies the instants against the sample
 * grid of `enc.sampling_rate` and returns an empty vector.
 */
std::vector<std::int64_t> encode_timestamps(std::span<const EpochNanos> instants,
                                            const TimeEncoding& enc,
                                            const EncodeOptions& options = {});

/// Encode with real-valued output for storage in floating-point files,
/// where sub-unit instants are representable.
std::vector<double> encode_timestamps_real(std::span<const EpochNanos> instants,
                                           const TimeEncoding& enc);

/// Instant of sample `index` on a uniform grid starting at `base_ns`.
EpochNanos uniform_instant(EpochNanos base_ns, double sampling_rate_hz, std::uint64_t index);

} // namespace tsdf

#endif
