#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "gpuburst/economics/economics.hpp"
#include "gpuburst/providers/types.hpp"
#include "gpuburst/scenario/scenario.hpp"
#include "gpuburst/sim/engine.hpp"

namespace gpuburst::scenario {

struct TimeseriesRow {
    sim::SimTime t;
    std::uint64_t running_gpu_jobs = 0;
    std::uint64_t idle_gpu_jobs = 0;
    std::int64_t running_instances = 0;
    double pflops32 = 0;
};

struct PoolStats {
    std::uint32_t max_schedd_running = 0;
    /// Worst max/min running-count ratio across same-kind schedds over the
    /// steady-state samples; 0 when no sample qualified.
    double fair_share_ratio_gpu = 0;
    double fair_share_ratio_cpu = 0;
    std::size_t steady_samples = 0;
    std::uint64_t locality_violations = 0;
    std::uint64_t io_operations = 0;
    std::uint64_t io_locality_violations = 0;
    bool conserved = true;
    sim::SimTime max_leaf_backlog;
    std::uint64_t gpu_preemptions = 0;
    /// GPU jobs running on an instance when it was lost, and how many of
    /// those were back in their queue, Idle, with unchanged requirements.
    std::uint64_t gpu_jobs_lost = 0;
    std::uint64_t gpu_jobs_requeued = 0;
    std::uint64_t cpu_removed = 0;
    std::uint64_t gpu_removed = 0;
};

struct RunResult {
    Scenario scenario;
    sim::EventTrace trace;
    std::vector<TimeseriesRow> timeseries;
    std::vector<providers::AuditRecord> audit;
    std::vector<std::string> region_ids;
    economics::PeakReport peak;
    economics::TotalsReport totals;
    double ledger_total = 0;
    double ledger_rogue = 0;
    std::size_t ledger_entries = 0;
    PoolStats pool;
    /// Seconds from the first provisioning action until the Running count
    /// first reaches the fraction of its peak; negative if never.
    double milestone_65_s = -1;
    double milestone_90_s = -1;
    /// Crossing times of the fraction -/+ 1/sqrt(peak) when scale < 1; equal
    /// to the nominal crossing at full scale.
    std::array<double, 2> milestone_65_band{-1, -1};
    std::array<double, 2> milestone_90_band{-1, -1};
    /// Instances still billable (or rogue and alive) at the horizon.
    std::int64_t end_alive = 0;
    std::int64_t end_rogue_alive = 0;
    std::uint64_t instance_preemptions = 0;
    double wall_seconds = 0;
};

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

RunResult run(const Scenario& scenario);

/// Writes trace.csv, timeseries.csv, audit.csv, peak.csv, totals.csv and
/// summary.json into `dir` and returns their paths. Throws IoError.
std::vector<std::filesystem::path> emit_outputs(const RunResult& result, const std::filesystem::path& dir,
                                                const std::vector<CheckResult>& checks = {});

/// Invariant checks that apply to every run plus the scenario's expectations.
std::vector<CheckResult> evaluate_checks(const RunResult& result);

void write_timeseries_csv(std::ostream& out, const std::vector<TimeseriesRow>& rows);
void write_audit_csv(std::ostream& out, const std::vector<providers::AuditRecord>& audit);

}  // namespace gpuburst::scenario
