#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gpuburst/pool/pool.hpp"
#include "gpuburst/providers/types.hpp"
#include "gpuburst/sim/time.hpp"
#include "gpuburst/workload/workload.hpp"

namespace gpuburst::scenario {

using workload::GpuModel;

struct JobBatch {
    pool::JobClass cls = pool::JobClass::Gpu;
    workload::InputClass input = workload::InputClass::Standard;
    std::int64_t count = 0;
};

struct GroupSpec {
    std::string name;
    std::string region;
    /// More than one entry is a mixed template and fails validation.
    std::vector<GpuModel> gpus;
    /// ScaleSet only.
    std::int64_t max_size = 0;
};

/// Fleets are created by their (single) action; ScaleSets and InstanceGroups
/// are created empty at t=0 and resized by each action.
struct ProvisionStep {
    sim::SimTime at;
    std::string group;
    std::int64_t size = 0;
};

enum class OperatorKind : std::uint8_t { ManualRecovery, ManualSweep };

struct OperatorStep {
    sim::SimTime at;
    OperatorKind kind = OperatorKind::ManualRecovery;
    std::string region;
};

struct RegionConfig {
    providers::RegionSpec spec;
    bool has_collector = true;
    double storage_read_bps = 1e12;
    double storage_write_bps = 1e12;
};

/// Acceptance targets carried by a scenario. Extensive quantities are given
/// at scale 1.0 and multiplied by the run's scale factor.
struct Range {
    double lo = 0;
    double hi = 0;
    bool contains(double v) const { return v >= lo && v <= hi; }
};

struct Target {
    double value = 0;
    double rel_tol = 0;
    /// Below scale 1 the tolerance widens by 1/sqrt(scale), the growth of
    /// relative counting noise.
    bool within(double v, double scale = 1.0) const;
};

struct Expectations {
    std::optional<Target> peak_total;
    std::map<GpuModel, Target> peak_counts;
    std::optional<Target> peak_pflops32;
    std::optional<Range> milestone_65_s;
    std::optional<Range> milestone_90_s;
    std::optional<Target> walltime_hours;
    std::optional<Target> pflop32_hours;
    std::map<GpuModel, Target> model_pflop32_hours;
    std::optional<Target> cost_per_hour;
    bool cost_within_price_range = false;
    /// Keyed by a '+'-joined model list, e.g. "V100+T4".
    std::map<std::string, Range> science_fraction;
    bool empty() const;
};

struct Scenario {
    std::string name;
    std::uint64_t seed = 1;
    sim::SimTime horizon = sim::seconds(14400);
    sim::SimTime sample_period = sim::seconds(60);
    double scale = 1.0;

    pool::PoolConfig pool;
    sim::SimTime provider_tick = sim::seconds(10);
    workload::WorkloadConfig workload;
    std::vector<JobBatch> jobs;
    /// Input class -> regions holding a replica.
    std::map<workload::InputClass, std::vector<std::string>> replicas;

    std::vector<RegionConfig> regions;
    std::vector<GroupSpec> groups;
    std::vector<ProvisionStep> provisioning;
    std::optional<sim::SimTime> shutdown_at;
    std::vector<providers::FaultSpec> faults;
    std::vector<OperatorStep> operator_steps;

    std::optional<std::filesystem::path> gpu_table_path;
    Expectations expect;

    const RegionConfig* find_region(std::string_view id) const;
    const GroupSpec* find_group(std::string_view name) const;
    bool has_fault(providers::FaultKind kind) const;
};

/// Throws ParseError for malformed text and ValidationError listing every
/// semantic problem with its field path.
Scenario parse_scenario_text(std::string_view text, std::string name = "scenario");
Scenario parse_scenario(const std::filesystem::path& path);

/// All semantic problems, each prefixed by its field path; empty when valid.
std::vector<std::string> validate(const Scenario& s);

/// Multiplies job counts, quotas, group sizes and launch rates by `factor`.
Scenario scaled(const Scenario& s, double factor);

std::string_view to_string(OperatorKind k);

}  // namespace gpuburst::scenario
