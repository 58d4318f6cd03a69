#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gpuburst/ids.hpp"
#include "gpuburst/sim/engine.hpp"
#include "gpuburst/workload/gpu.hpp"
#include "gpuburst/workload/gpu_table.hpp"
#include "gpuburst/workload/workload.hpp"

namespace gpuburst::economics {

using workload::GpuModel;

enum class Market : std::uint8_t { Opportunistic, OnDemand };

struct PriceEntry {
    double min = 0;
    double max = 0;
    double point = 0;
};

class PriceBook {
public:
    PriceBook() = default;
    static PriceBook from_table(const workload::GpuTable& table, double on_demand_multiplier = 3.0);

    /// Throws ValidationError unless min <= point <= max.
    void set(GpuModel gpu, PriceEntry entry);
    bool contains(GpuModel gpu) const { return entries_[workload::index_of(gpu)].has_value(); }
    /// Throws UnknownGpuModel.
    const PriceEntry& entry(GpuModel gpu) const;
    double hourly_price(GpuModel gpu, Market market = Market::Opportunistic) const;
    double on_demand_multiplier() const { return on_demand_multiplier_; }

private:
    std::array<std::optional<PriceEntry>, workload::kGpuModelCount> entries_{};
    double on_demand_multiplier_ = 3.0;
};

/// Charge for [from, to) at an hourly rate, billed in whole started seconds.
double interval_cost(double rate_per_hour, sim::SimTime from, sim::SimTime to);

struct LedgerEntry {
    InstanceId instance = kNoInstance;
    GpuModel gpu = GpuModel::V100;
    std::string region;
    sim::SimTime from;
    sim::SimTime to;
    double rate = 0;
    double amount = 0;
    bool rogue = false;
};

class CostLedger {
public:
    explicit CostLedger(PriceBook prices, Market market = Market::Opportunistic);

    /// Throws OverlappingInterval if [from, to) intersects an earlier entry of
    /// the same instance.
    const LedgerEntry& accrue(InstanceId instance, GpuModel gpu, std::string region, sim::SimTime from,
                              sim::SimTime to, bool rogue);

    const std::vector<LedgerEntry>& entries() const { return entries_; }
    double total() const { return total_; }
    double rogue_total() const { return rogue_total_; }
    double total_for(GpuModel gpu) const { return by_model_[workload::index_of(gpu)]; }
    std::unordered_map<std::string, double> by_region() const;
    const PriceBook& prices() const { return prices_; }

private:
    PriceBook prices_;
    Market market_;
    std::vector<LedgerEntry> entries_;
    std::unordered_map<InstanceId, std::vector<std::size_t>> per_instance_;
    std::array<double, workload::kGpuModelCount> by_model_{};
    double total_ = 0;
    double rogue_total_ = 0;
};

struct PeakRow {
    GpuModel gpu = GpuModel::V100;
    std::int64_t count = 0;
    double pflops32 = 0;
    double cost_per_hour = 0;
    double cost_min = 0;
    double cost_max = 0;
};

struct PeakReport {
    sim::SimTime at;
    std::vector<PeakRow> rows;
    std::int64_t total_count = 0;
    double total_pflops32 = 0;
    double total_cost_per_hour = 0;
};

struct TotalsRow {
    GpuModel gpu = GpuModel::V100;
    double walltime_hours = 0;
    double pflop32_hours = 0;
    double cost = 0;
    double science = 0;
    std::uint64_t completed_jobs = 0;
    double walltime_fraction = 0;
    double cost_fraction = 0;
    double science_fraction = 0;
};

struct TotalsReport {
    sim::SimTime end;
    std::vector<TotalsRow> rows;
    double walltime_hours = 0;
    double pflop32_hours = 0;
    double cost = 0;
    double rogue_cost = 0;
    double science = 0;
    std::uint64_t completed_jobs = 0;
    std::uint64_t preemptions = 0;
};

/// Instance lifecycle as reconstructed from a trace's InstanceState events.
/// Walltime counts non-rogue Running time; cost covers every billable span.
PeakReport peak_report(const sim::EventTrace& trace, const PriceBook& prices, const workload::GpuTable& table);
TotalsReport totals_report(const sim::EventTrace& trace, const PriceBook& prices,
                           const workload::WorkloadModel& workload);

/// Non-rogue Running instance count after each instant at which it changes.
std::vector<std::pair<sim::SimTime, std::int64_t>> running_curve(const sim::EventTrace& trace);

void write_peak_csv(std::ostream& out, const PeakReport& r);
void write_totals_csv(std::ostream& out, const TotalsReport& r);
std::string format_peak_table(const PeakReport& r);
std::string format_totals_table(const TotalsReport& r);

}  // namespace gpuburst::economics
