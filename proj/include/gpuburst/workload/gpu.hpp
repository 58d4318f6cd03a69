#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace gpuburst::workload {

enum class GpuModel : std::uint8_t { V100, P100, P40, T4, P4, M60, K80, K520, GTX1080 };

inline constexpr std::size_t kGpuModelCount = 9;

inline constexpr std::array<GpuModel, kGpuModelCount> kAllGpuModels = {
    GpuModel::V100, GpuModel::P100, GpuModel::P40,  GpuModel::T4,     GpuModel::P4,
    GpuModel::M60,  GpuModel::K80,  GpuModel::K520, GpuModel::GTX1080,
};

constexpr std::size_t index_of(GpuModel m) { return static_cast<std::size_t>(m); }

std::string_view to_string(GpuModel m);
/// Accepts the canonical names ("V100", "GTX1080"; "GTX 1080" also works).
/// Throws UnknownGpuModel otherwise.
GpuModel parse_gpu_model(std::string_view name);

/// Instance counts per GPU model.
class GpuCounts {
public:
    std::int64_t& operator[](GpuModel m) { return counts_[index_of(m)]; }
    std::int64_t operator[](GpuModel m) const { return counts_[index_of(m)]; }

    std::int64_t total() const {
        std::int64_t t = 0;
        for (auto c : counts_) t += c;
        return t;
    }

    bool operator==(const GpuCounts&) const = default;

private:
    std::array<std::int64_t, kGpuModelCount> counts_{};
};

}  // namespace gpuburst::workload
