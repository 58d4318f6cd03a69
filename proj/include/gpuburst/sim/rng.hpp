#pragma once

#include <cstdint>
#include <string_view>

namespace gpuburst::sim {

/// Counter-based random stream keyed by (scenario seed, stream key).
///
/// Draw `n` of a stream is a pure function of (seed, key, n), so two entities
/// never share state and the order in which other streams are consumed has no
/// effect on this one. Distribution sampling is implemented here rather than
/// through <random> distributions, whose output is implementation-defined.
class RngStream {
public:
    RngStream() = default;
    RngStream(std::uint64_t seed, std::uint64_t stream_key);
    RngStream(std::uint64_t seed, std::string_view label);

    /// Stable 64-bit key for a textual stream label (FNV-1a).
    static std::uint64_t key_of(std::string_view label);

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform();
    double uniform(double lo, double hi);
    /// Unbiased integer in [0, n). Requires n > 0.
    std::uint64_t below(std::uint64_t n);
    bool bernoulli(double p);
    double normal();
    double lognormal(double median, double sigma);
    double exponential(double rate);

    std::uint64_t draws() const { return counter_; }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace gpuburst::sim
