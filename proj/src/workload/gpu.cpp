#include "gpuburst/workload/gpu.hpp"

#include <string>

#include "gpuburst/errors.hpp"

namespace gpuburst::workload {
namespace {

constexpr std::array<std::string_view, kGpuModelCount> kNames = {
    "V100", "P100", "P40", "T4", "P4", "M60", "K80", "K520", "GTX1080",
};

}  // namespace

std::string_view to_string(GpuModel m) {
    return kNames.at(index_of(m));
}

GpuModel parse_gpu_model(std::string_view name) {
    if (name == "GTX 1080") return GpuModel::GTX1080;
    for (std::size_t i = 0; i < kNames.size(); ++i) {
        if (kNames[i] == name) return kAllGpuModels[i];
    }
    throw UnknownGpuModel("unknown GPU model '" + std::string(name) + "'");
}

}  // namespace gpuburst::workload
