#pragma once

#include <cstdint>
#include <limits>

namespace gpuburst {

using EntityId = std::uint64_t;
using InstanceId = std::uint32_t;
using GroupId = std::uint32_t;
using JobId = std::uint32_t;
using ScheddId = std::uint16_t;
using RegionIndex = std::uint16_t;

inline constexpr InstanceId kNoInstance = std::numeric_limits<InstanceId>::max();
inline constexpr GroupId kNoGroup = std::numeric_limits<GroupId>::max();
inline constexpr JobId kNoJob = std::numeric_limits<JobId>::max();

}  // namespace gpuburst
