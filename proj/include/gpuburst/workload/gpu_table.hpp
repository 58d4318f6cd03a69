#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "gpuburst/workload/gpu.hpp"

namespace gpuburst::workload {

/// Measured per-model performance: runtime of the reference (Standard) job,
/// nominal fp32 peak, and the efficacy correlation relative to the T4
/// (reporting only).
struct GpuPerfEntry {
    GpuModel model = GpuModel::V100;
    double runtime_standard_min = 0;
    double peak_tflops32 = 0;
    double efficacy_correlation = 0;
};

/// Opportunistic list prices in $/instance-hour.
struct PriceColumns {
    double min = 0;
    double max = 0;
    double point = 0;
};

/// The versioned GPU data file:
/// `model,runtime_min,tflops32,corr,price_min,price_max,price_point`.
/// Price columns may be blank for models that are not rented (GTX1080).
class GpuTable {
public:
    /// The table shipped in data/gpu_perf.csv, compiled in.
    static const GpuTable& builtin();
    static GpuTable parse_csv(std::string_view text);
    static GpuTable load_csv(const std::filesystem::path& path);

    bool contains(GpuModel m) const { return perf_[index_of(m)].has_value(); }
    /// Throws UnknownGpuModel when the model has no row.
    const GpuPerfEntry& perf(GpuModel m) const;
    std::optional<PriceColumns> price(GpuModel m) const { return price_[index_of(m)]; }

    std::string to_csv() const;

private:
    std::array<std::optional<GpuPerfEntry>, kGpuModelCount> perf_{};
    std::array<std::optional<PriceColumns>, kGpuModelCount> price_{};
};

}  // namespace gpuburst::workload
