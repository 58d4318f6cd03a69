#include "gpuburst/workload/workload.hpp"

#include <cmath>

#include "gpuburst/errors.hpp"

namespace gpuburst::workload {

std::string_view to_string(InputClass c) {
    return c == InputClass::Standard ? "Standard" : "Small";
}

InputClass parse_input_class(std::string_view name) {
    if (name == "Standard") return InputClass::Standard;
    if (name == "Small") return InputClass::Small;
    throw ParseError("unknown input class '" + std::string(name) + "'");
}

WorkloadModel::WorkloadModel(GpuTable table, WorkloadConfig config, std::vector<StorageEndpoint> endpoints)
    : table_(std::move(table)), config_(config) {
    for (auto& e : endpoints) {
        auto key = e.region;
        endpoints_.emplace(std::move(key), std::move(e));
    }
}

sim::SimTime WorkloadModel::runtime_for(GpuModel gpu, InputClass input) const {
    double s = table_.perf(gpu).runtime_standard_min * 60.0;
    if (input == InputClass::Small) s *= config_.small_size_factor;
    return sim::SimTime::from_seconds(s);
}

sim::SimTime WorkloadModel::runtime_for(GpuModel gpu, InputClass input, sim::RngStream& rng) const {
    double s = table_.perf(gpu).runtime_standard_min * 60.0;
    if (input == InputClass::Small) s *= config_.small_size_factor;
    if (config_.runtime_jitter > 0) s *= rng.uniform(1.0 - config_.runtime_jitter, 1.0 + config_.runtime_jitter);
    return sim::SimTime::from_seconds(s);
}

ScienceUnit WorkloadModel::science_output(GpuModel gpu, InputClass input, bool completed) const {
    (void)table_.perf(gpu);
    if (!completed) return {0.0};
    return {input == InputClass::Standard ? 1.0 : config_.small_size_factor};
}

bool WorkloadModel::has_storage(std::string_view region) const {
    return endpoints_.find(std::string(region)) != endpoints_.end();
}

const StorageEndpoint& WorkloadModel::resolve_storage(std::string_view region) const {
    auto it = endpoints_.find(std::string(region));
    if (it == endpoints_.end()) {
        throw NoEndpointForRegion("no storage endpoint for region '" + std::string(region) + "'");
    }
    return it->second;
}

double WorkloadModel::transfer_time(double bytes, const StorageEndpoint& endpoint, Direction direction) {
    if (bytes <= 0) return 0.0;
    const double bps = direction == Direction::Read ? endpoint.read_bps : endpoint.write_bps;
    return bytes * 8.0 / bps;
}

sim::SimTime WorkloadModel::io_time(InputClass input, std::string_view region) const {
    const double factor = input == InputClass::Small ? config_.small_size_factor : 1.0;
    if (config_.input_bytes <= 0 && config_.output_bytes <= 0) return {};
    const auto& ep = resolve_storage(region);
    return sim::SimTime::from_seconds(transfer_time(config_.input_bytes * factor, ep, Direction::Read) +
                                      transfer_time(config_.output_bytes * factor, ep, Direction::Write));
}

double WorkloadModel::pflops32_of(const GpuCounts& counts) const {
    double tflops = 0;
    for (auto m : kAllGpuModels) {
        if (counts[m] == 0) continue;
        tflops += static_cast<double>(counts[m]) * table_.perf(m).peak_tflops32;
    }
    return tflops / 1000.0;
}

}  // namespace gpuburst::workload
