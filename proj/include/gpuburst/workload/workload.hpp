#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gpuburst/sim/rng.hpp"
#include "gpuburst/sim/time.hpp"
#include "gpuburst/workload/gpu.hpp"
#include "gpuburst/workload/gpu_table.hpp"

namespace gpuburst::workload {

enum class InputClass : std::uint8_t { Standard, Small };

std::string_view to_string(InputClass c);
InputClass parse_input_class(std::string_view name);

enum class Direction : std::uint8_t { Read, Write };

/// Region-local object storage. Jobs never cross regions for I/O.
struct StorageEndpoint {
    std::string region;
    double read_bps = 1e12;
    double write_bps = 1e12;
};

/// Photon-propagation work in Standard-job equivalents.
struct ScienceUnit {
    double value = 0;
};

struct WorkloadConfig {
    /// Work (and input volume) of a Small job relative to a Standard one.
    double small_size_factor = 0.125;
    /// Half-width of the uniform multiplicative runtime jitter; 0 disables it.
    double runtime_jitter = 0.05;
    double input_bytes = 10e9;
    double output_bytes = 1e9;
};

class WorkloadModel {
public:
    WorkloadModel(GpuTable table, WorkloadConfig config, std::vector<StorageEndpoint> endpoints);

    const GpuTable& table() const { return table_; }
    const WorkloadConfig& config() const { return config_; }

    /// Deterministic runtime (no jitter).
    sim::SimTime runtime_for(GpuModel gpu, InputClass input) const;
    /// Runtime with the configured jitter drawn from `rng`.
    sim::SimTime runtime_for(GpuModel gpu, InputClass input, sim::RngStream& rng) const;

    ScienceUnit science_output(GpuModel gpu, InputClass input, bool completed) const;

    /// Throws NoEndpointForRegion.
    const StorageEndpoint& resolve_storage(std::string_view region) const;
    bool has_storage(std::string_view region) const;

    /// Seconds to move `bytes` through the endpoint. Requires bytes >= 0.
    static double transfer_time(double bytes, const StorageEndpoint& endpoint, Direction direction);

    /// Stage-in plus stage-out for one job in `region`.
    sim::SimTime io_time(InputClass input, std::string_view region) const;

    /// Aggregate fp32 peak in PFLOP32s. Throws UnknownGpuModel for a model
    /// with a non-zero count and no table row.
    double pflops32_of(const GpuCounts& counts) const;

private:
    GpuTable table_;
    WorkloadConfig config_;
    std::unordered_map<std::string, StorageEndpoint> endpoints_;
};

}  // namespace gpuburst::workload
