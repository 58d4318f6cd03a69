#include "gpuburst/sim/rng.hpp"

#include <cmath>
#include <numbers>

namespace gpuburst::sim {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_key)
    : key_(mix64(mix64(seed + kGolden) ^ mix64(stream_key ^ 0xD1B54A32D192ED03ULL))) {}

RngStream::RngStream(std::uint64_t seed, std::string_view label) : RngStream(seed, key_of(label)) {}

std::uint64_t RngStream::key_of(std::string_view label) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::uint64_t RngStream::next_u64() {
    // Two rounds over (key, counter) keep neighbouring counters decorrelated.
    const std::uint64_t c = counter_++;
    return mix64(mix64(key_ + c * kGolden) ^ key_);
}

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

std::uint64_t RngStream::below(std::uint64_t n) {
    // Lemire's multiply-shift with rejection.
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            x = next_u64();
            m = static_cast<__uint128_t>(x) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

bool RngStream::bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return uniform() < p;
}

double RngStream::normal() {
    // Box-Muller, cosine branch only; u1 is kept away from zero.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RngStream::lognormal(double median, double sigma) {
    return median * std::exp(sigma * normal());
}

double RngStream::exponential(double rate) {
    return -std::log(1.0 - uniform()) / rate;
}

}  // namespace gpuburst::sim
