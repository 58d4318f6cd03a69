#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <string>

namespace gpuburst::sim {

/// Virtual time since scenario start. Stored as whole milliseconds so that
/// every arithmetic step is exact and traces are bit-identical across hosts;
/// the public unit is seconds.
class SimTime {
public:
    constexpr SimTime() = default;

    static constexpr SimTime from_ms(std::int64_t ms) { return SimTime(ms); }
    static SimTime from_seconds(double s) { return SimTime(std::llround(s * 1000.0)); }
    static SimTime from_minutes(double m) { return from_seconds(m * 60.0); }

    constexpr std::int64_t ms() const { return ms_; }
    constexpr double seconds() const { return static_cast<double>(ms_) / 1000.0; }
    constexpr double minutes() const { return seconds() / 60.0; }
    constexpr double hours() const { return seconds() / 3600.0; }

    constexpr SimTime operator+(SimTime d) const { return SimTime(ms_ + d.ms_); }
    constexpr SimTime operator-(SimTime d) const { return SimTime(ms_ - d.ms_); }
    SimTime& operator+=(SimTime d) {
        ms_ += d.ms_;
        return *this;
    }

    constexpr auto operator<=>(const SimTime&) const = default;

    /// Seconds with millisecond precision, e.g. "60.000".
    std::string to_string() const;

private:
    constexpr explicit SimTime(std::int64_t ms) : ms_(ms) {}

    std::int64_t ms_ = 0;
};

inline SimTime seconds(double s) { return SimTime::from_seconds(s); }
inline SimTime minutes(double m) { return SimTime::from_minutes(m); }

}  // namespace gpuburst::sim
