#include "gpuburst/providers/types.hpp"

#include <array>
#include <string>

#include "gpuburst/errors.hpp"

namespace gpuburst::providers {
namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view name, const std::array<std::string_view, N>& names, std::string_view what) {
    for (std::size_t i = 0; i < N; ++i) {
        if (names[i] == name) return static_cast<E>(i);
    }
    throw ParseError("unknown " + std::string(what) + " '" + std::string(name) + "'");
}

constexpr std::array<std::string_view, 3> kProviders = {"A", "B", "C"};
constexpr std::array<std::string_view, 3> kFlavors = {"Fleet", "ScaleSet", "InstanceGroup"};
constexpr std::array<std::string_view, 6> kStates = {"Requested", "Booting",     "Running",
                                                     "Stopped",   "Deallocated", "Terminated"};
constexpr std::array<std::string_view, 7> kReasons = {"",        "Preempted", "SystemShutdown", "Deallocated",
                                                      "Deleted", "Swept",     "Cancelled"};
constexpr std::array<std::string_view, 3> kFaults = {"RegionalLimitStall", "DeprovisionRespawnBug",
                                                     "Preemption"};

}  // namespace

std::string_view to_string(Provider p) { return kProviders.at(static_cast<std::size_t>(p)); }
std::string_view to_string(Flavor f) { return kFlavors.at(static_cast<std::size_t>(f)); }
std::string_view to_string(InstanceState s) { return kStates.at(static_cast<std::size_t>(s)); }
std::string_view to_string(EndReason r) { return kReasons.at(static_cast<std::size_t>(r)); }
std::string_view to_string(FaultKind k) { return kFaults.at(static_cast<std::size_t>(k)); }

Provider parse_provider(std::string_view name) { return parse_enum<Provider>(name, kProviders, "provider"); }
InstanceState parse_instance_state(std::string_view name) {
    return parse_enum<InstanceState>(name, kStates, "instance state");
}
EndReason parse_end_reason(std::string_view name) { return parse_enum<EndReason>(name, kReasons, "end reason"); }
FaultKind parse_fault_kind(std::string_view name) { return parse_enum<FaultKind>(name, kFaults, "fault kind"); }

bool is_legal(InstanceState from, InstanceState to) {
    using S = InstanceState;
    switch (from) {
        case S::Requested: return to == S::Booting || to == S::Terminated;
        case S::Booting: return to == S::Running || to == S::Terminated;
        case S::Running: return to == S::Stopped || to == S::Deallocated || to == S::Terminated;
        case S::Stopped: return to == S::Deallocated || to == S::Running;
        case S::Deallocated:
        case S::Terminated: return false;
    }
    return false;
}

}  // namespace gpuburst::providers
