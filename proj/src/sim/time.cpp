#include "gpuburst/sim/time.hpp"

#include <cstdio>
#include <cstdlib>

namespace gpuburst::sim {

std::string SimTime::to_string() const {
    const std::int64_t whole = ms_ / 1000;
    const std::int64_t frac = std::llabs(ms_ % 1000);
    char buf[48];
    if (ms_ < 0 && whole == 0) {
        std::snprintf(buf, sizeof buf, "-0.%03lld", static_cast<long long>(frac));
    } else {
        std::snprintf(buf, sizeof buf, "%lld.%03lld", static_cast<long long>(whole),
                      static_cast<long long>(frac));
    }
    return buf;
}

}  // namespace gpuburst::sim
