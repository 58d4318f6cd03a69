#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "gpuburst/ids.hpp"
#include "gpuburst/sim/rng.hpp"
#include "gpuburst/sim/time.hpp"
#include "gpuburst/workload/gpu.hpp"

namespace gpuburst::providers {

using workload::GpuModel;

/// Anonymized cloud vendors. Each exposes exactly one provisioning flavor.
enum class Provider : std::uint8_t { A, B, C };
enum class Flavor : std::uint8_t { Fleet, ScaleSet, InstanceGroup };

constexpr Flavor flavor_of(Provider p) {
    switch (p) {
        case Provider::A: return Flavor::Fleet;
        case Provider::B: return Flavor::ScaleSet;
        case Provider::C: return Flavor::InstanceGroup;
    }
    return Flavor::Fleet;
}

std::string_view to_string(Provider p);
std::string_view to_string(Flavor f);
Provider parse_provider(std::string_view name);

enum class InstanceState : std::uint8_t { Requested, Booting, Running, Stopped, Deallocated, Terminated };

std::string_view to_string(InstanceState s);
InstanceState parse_instance_state(std::string_view name);

/// Booting, Running and Stopped instances are charged; Deallocated and
/// Terminated are not.
constexpr bool is_billable(InstanceState s) {
    return s == InstanceState::Booting || s == InstanceState::Running || s == InstanceState::Stopped;
}

/// States that hold a slot of the regional quota.
constexpr bool holds_quota(InstanceState s) {
    return s == InstanceState::Requested || is_billable(s);
}

/// The lifecycle graph. Preemption is Running -> Terminated with reason
/// Preempted; cancelling an unfulfilled request or a boot also ends in
/// Terminated.
bool is_legal(InstanceState from, InstanceState to);

enum class EndReason : std::uint8_t { None, Preempted, SystemShutdown, Deallocated, Deleted, Swept, Cancelled };

std::string_view to_string(EndReason r);
EndReason parse_end_reason(std::string_view name);

struct BootDelay {
    double median_s = 90.0;
    /// Log-normal shape; 0 gives a fixed delay of `median_s`.
    double sigma = 0.5;
};

struct RegionSpec {
    std::string id;
    Provider provider = Provider::A;
    std::string geo_area;
    std::map<GpuModel, std::int64_t> quota;
    BootDelay boot;
    double wan_latency_s = 0.05;
    /// Provider API throughput for Requested -> Booting; 0 means unlimited.
    double launch_rate_per_min = 0;
};

enum class FaultKind : std::uint8_t { RegionalLimitStall, DeprovisionRespawnBug, Preemption };

std::string_view to_string(FaultKind k);
FaultKind parse_fault_kind(std::string_view name);

struct FaultSpec {
    FaultKind kind = FaultKind::Preemption;
    /// Region ids the fault applies to; empty means every region.
    std::vector<std::string> regions;
    sim::SimTime start;
    sim::SimTime end;
    /// RegionalLimitStall: fraction of requests frozen until recovery.
    double stall_fraction = 1.0;
    /// DeprovisionRespawnBug: rogue instances started per de-provisioning call.
    std::int64_t rogue_per_call = 1;
    /// Preemption: expected preemptions per running instance-hour.
    double preemption_rate_per_hour = 0.02;

    bool active_at(sim::SimTime t) const { return t >= start && t <= end; }
};

struct Instance {
    InstanceId id = kNoInstance;
    GroupId group = kNoGroup;
    RegionIndex region = 0;
    GpuModel gpu = GpuModel::V100;
    InstanceState state = InstanceState::Requested;
    EndReason end_reason = EndReason::None;
    bool rogue = false;
    bool frozen = false;
    bool stall_checked = false;
    bool surplus = false;
    std::uint32_t generation = 0;
    sim::SimTime requested_at;
    sim::SimTime boot_ready_at;
    sim::SimTime billable_since;
    sim::RngStream rng;
};

struct Group {
    GroupId id = kNoGroup;
    std::string name;
    Flavor flavor = Flavor::Fleet;
    RegionIndex region = 0;
    GpuModel gpu = GpuModel::V100;
    std::int64_t desired = 0;
    std::int64_t max_size = 0;
    /// Non-terminated, non-deallocated members in creation order.
    std::vector<InstanceId> members;
    std::int64_t unfulfilled = 0;
    /// Generations owed to auto-replacement (InstanceGroup only).
    std::vector<std::uint32_t> owed_generations;
};

struct MetadataRecord {
    InstanceId instance = kNoInstance;
    Provider provider = Provider::A;
    std::string region;

    bool operator==(const MetadataRecord&) const = default;
};

/// One state change, reported to the orchestrator for tracing and billing.
struct LifecycleChange {
    InstanceId instance = kNoInstance;
    InstanceState from = InstanceState::Requested;
    InstanceState to = InstanceState::Requested;
    EndReason reason = EndReason::None;
    /// Start of the billable span that this change closes, if it closes one.
    bool billing_stopped = false;
    sim::SimTime billable_from;
};

struct AuditRecord {
    sim::SimTime t;
    GroupId group = kNoGroup;
    Flavor flavor = Flavor::Fleet;
    std::string region;
    std::string action;
    std::int64_t count = 0;
};

}  // namespace gpuburst::providers
