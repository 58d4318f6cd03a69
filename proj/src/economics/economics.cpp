#include "gpuburst/economics/economics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "gpuburst/errors.hpp"
#include "gpuburst/providers/types.hpp"

namespace gpuburst::economics {

using workload::index_of;
using workload::kAllGpuModels;

PriceBook PriceBook::from_table(const workload::GpuTable& table, double on_demand_multiplier) {
    PriceBook book;
    book.on_demand_multiplier_ = on_demand_multiplier;
    for (GpuModel m : kAllGpuModels)
        if (auto p = table.price(m)) book.set(m, PriceEntry{p->min, p->max, p->point});
    return book;
}

void PriceBook::set(GpuModel gpu, PriceEntry e) {
    if (!(e.min >= 0 && e.min <= e.point && e.point <= e.max))
        throw ValidationError({fmt::format("prices.{}: need 0 <= min <= point <= max, got {}/{}/{}",
                                           workload::to_string(gpu), e.min, e.point, e.max)});
    entries_[index_of(gpu)] = e;
}

const PriceEntry& PriceBook::entry(GpuModel gpu) const {
    const auto& e = entries_[index_of(gpu)];
    if (!e) throw UnknownGpuModel(fmt::format("no price for {}", workload::to_string(gpu)));
    return *e;
}

double PriceBook::hourly_price(GpuModel gpu, Market market) const {
    const double point = entry(gpu).point;
    return market == Market::OnDemand ? point * on_demand_multiplier_ : point;
}

double interval_cost(double rate_per_hour, sim::SimTime from, sim::SimTime to) {
    const std::int64_t ms = (to - from).ms();
    if (ms <= 0) return 0.0;
    const std::int64_t billed_s = (ms + 999) / 1000;
    return rate_per_hour * static_cast<double>(billed_s) / 3600.0;
}

CostLedger::CostLedger(PriceBook prices, Market market) : prices_(std::move(prices)), market_(market) {}

const LedgerEntry& CostLedger::accrue(InstanceId instance, GpuModel gpu, std::string region, sim::SimTime from,
                                      sim::SimTime to, bool rogue) {
    if (to < from) throw OverlappingInterval(fmt::format("instance {}: interval ends before it starts", instance));
    auto& mine = per_instance_[instance];
    for (std::size_t i : mine) {
        const auto& e = entries_[i];
        if (from < e.to && e.from < to)
            throw OverlappingInterval(fmt::format("instance {}: [{}, {}) overlaps [{}, {})", instance,
                                                  from.to_string(), to.to_string(), e.from.to_string(),
                                                  e.to.to_string()));
    }
    LedgerEntry e;
    e.instance = instance;
    e.gpu = gpu;
    e.region = std::move(region);
    e.from = from;
    e.to = to;
    e.rate = prices_.hourly_price(gpu, market_);
    e.amount = interval_cost(e.rate, from, to);
    e.rogue = rogue;
    total_ += e.amount;
    if (rogue) rogue_total_ += e.amount;
    by_model_[index_of(gpu)] += e.amount;
    mine.push_back(entries_.size());
    entries_.push_back(std::move(e));
    return entries_.back();
}

std::unordered_map<std::string, double> CostLedger::by_region() const {
    std::unordered_map<std::string, double> out;
    for (const auto& e : entries_) out[e.region] += e.amount;
    return out;
}

namespace {

struct Life {
    providers::InstanceState state = providers::InstanceState::Requested;
    sim::SimTime since;
    sim::SimTime bill_since;
    GpuModel gpu = GpuModel::V100;
    bool rogue = false;
};

struct Replay {
    std::array<double, workload::kGpuModelCount> running_ms{};
    std::array<double, workload::kGpuModelCount> cost{};
    double rogue_cost = 0;
    std::uint64_t preemptions = 0;
};

// Walks InstanceState events; `on_instant` fires after the last event of each
// timestamp with the per-model non-rogue Running counts.
template <typename OnInstant>
Replay replay(const sim::EventTrace& trace, const PriceBook* prices, OnInstant&& on_instant) {
    using providers::InstanceState;
    Replay out;
    std::unordered_map<EntityId, Life> lives;
    workload::GpuCounts running;

    auto close = [&](Life& l, sim::SimTime at, InstanceState next) {
        if (l.state == InstanceState::Running && !l.rogue) out.running_ms[index_of(l.gpu)] += (at - l.since).ms();
        if (!providers::is_billable(l.state) && providers::is_billable(next)) l.bill_since = at;
        if (providers::is_billable(l.state) && !providers::is_billable(next) && prices) {
            const double c = interval_cost(prices->hourly_price(l.gpu), l.bill_since, at);
            out.cost[index_of(l.gpu)] += c;
            if (l.rogue) out.rogue_cost += c;
        }
    };

    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& ev = trace[i];
        if (ev.kind == sim::EventKind::InstanceState) {
            const auto to = providers::parse_instance_state(sim::detail_value(ev.detail, "to"));
            auto [it, fresh] = lives.try_emplace(ev.target);
            Life& l = it->second;
            if (fresh) {
                l.gpu = workload::parse_gpu_model(sim::detail_value(ev.detail, "gpu"));
                l.rogue = sim::detail_value(ev.detail, "rogue") == "1";
                l.since = ev.at;
                l.state = InstanceState::Requested;
            }
            if (to != l.state) {
                close(l, ev.at, to);
                if (l.state == InstanceState::Running && !l.rogue) running[l.gpu] -= 1;
                if (to == InstanceState::Running && !l.rogue) running[l.gpu] += 1;
                l.state = to;
                l.since = ev.at;
            }
            if (sim::detail_value(ev.detail, "reason") == "Preempted") ++out.preemptions;
        }
        if (i + 1 == trace.size() || trace[i + 1].at != ev.at) on_instant(ev.at, running);
    }
    const sim::SimTime end = trace.back().at;
    for (auto& [id, l] : lives) close(l, end, InstanceState::Terminated);
    return out;
}

}  // namespace

PeakReport peak_report(const sim::EventTrace& trace, const PriceBook& prices, const workload::GpuTable& table) {
    if (trace.empty()) throw EmptyTrace("peak report needs a non-empty trace");
    PeakReport r;
    workload::GpuCounts best;
    std::int64_t best_total = -1;
    replay(trace, &prices, [&](sim::SimTime at, const workload::GpuCounts& running) {
        if (running.total() > best_total) {
            best_total = running.total();
            best = running;
            r.at = at;
        }
    });
    for (GpuModel m : kAllGpuModels) {
        if (best[m] == 0) continue;
        PeakRow row;
        row.gpu = m;
        row.count = best[m];
        row.pflops32 = static_cast<double>(best[m]) * table.perf(m).peak_tflops32 / 1000.0;
        const auto& p = prices.entry(m);
        row.cost_per_hour = static_cast<double>(best[m]) * p.point;
        row.cost_min = static_cast<double>(best[m]) * p.min;
        row.cost_max = static_cast<double>(best[m]) * p.max;
        r.total_count += row.count;
        r.total_pflops32 += row.pflops32;
        r.total_cost_per_hour += row.cost_per_hour;
        r.rows.push_back(row);
    }
    return r;
}

TotalsReport totals_report(const sim::EventTrace& trace, const PriceBook& prices,
                           const workload::WorkloadModel& workload) {
    if (trace.empty()) throw EmptyTrace("totals report needs a non-empty trace");
    const Replay rep = replay(trace, &prices, [](sim::SimTime, const workload::GpuCounts&) {});

    std::array<double, workload::kGpuModelCount> science{};
    std::array<std::uint64_t, workload::kGpuModelCount> completed{};
    for (const auto& ev : trace) {
        if (ev.kind != sim::EventKind::JobComplete) continue;
        const auto gpu = workload::parse_gpu_model(sim::detail_value(ev.detail, "gpu"));
        const auto input = workload::parse_input_class(sim::detail_value(ev.detail, "input"));
        science[index_of(gpu)] += workload.science_output(gpu, input, true).value;
        ++completed[index_of(gpu)];
    }

    TotalsReport r;
    r.end = trace.back().at;
    r.rogue_cost = rep.rogue_cost;
    r.preemptions = rep.preemptions;
    for (GpuModel m : kAllGpuModels) {
        const std::size_t i = index_of(m);
        if (rep.running_ms[i] == 0 && rep.cost[i] == 0 && completed[i] == 0) continue;
        TotalsRow row;
        row.gpu = m;
        row.walltime_hours = rep.running_ms[i] / 3.6e6;
        row.pflop32_hours = row.walltime_hours * workload.table().perf(m).peak_tflops32 / 1000.0;
        row.cost = rep.cost[i];
        row.science = science[i];
        row.completed_jobs = completed[i];
        r.walltime_hours += row.walltime_hours;
        r.pflop32_hours += row.pflop32_hours;
        r.cost += row.cost;
        r.science += row.science;
        r.completed_jobs += row.completed_jobs;
        r.rows.push_back(row);
    }
    for (auto& row : r.rows) {
        row.walltime_fraction = r.walltime_hours > 0 ? row.walltime_hours / r.walltime_hours : 0;
        row.cost_fraction = r.cost > 0 ? row.cost / r.cost : 0;
        row.science_fraction = r.science > 0 ? row.science / r.science : 0;
    }
    return r;
}

std::vector<std::pair<sim::SimTime, std::int64_t>> running_curve(const sim::EventTrace& trace) {
    std::vector<std::pair<sim::SimTime, std::int64_t>> out;
    if (trace.empty()) return out;
    replay(trace, nullptr, [&](sim::SimTime at, const workload::GpuCounts& running) {
        const auto n = running.total();
        if (out.empty() || out.back().second != n) out.emplace_back(at, n);
    });
    return out;
}

void write_peak_csv(std::ostream& out, const PeakReport& r) {
    out << "gpu,count,pflops32,cost_per_hour,cost_min,cost_max\n";
    for (const auto& row : r.rows)
        out << fmt::format("{},{},{:.3f},{:.2f},{:.2f},{:.2f}\n", workload::to_string(row.gpu), row.count,
                           row.pflops32, row.cost_per_hour, row.cost_min, row.cost_max);
    out << fmt::format("Total,{},{:.3f},{:.2f},,\n", r.total_count, r.total_pflops32, r.total_cost_per_hour);
}

void write_totals_csv(std::ostream& out, const TotalsReport& r) {
    out << "gpu,walltime_hours,pflop32_hours,cost,science,completed_jobs,walltime_fraction,cost_fraction,"
           "science_fraction\n";
    for (const auto& row : r.rows)
        out << fmt::format("{},{:.3f},{:.4f},{:.2f},{:.3f},{},{:.5f},{:.5f},{:.5f}\n", workload::to_string(row.gpu),
                           row.walltime_hours, row.pflop32_hours, row.cost, row.science, row.completed_jobs,
                           row.walltime_fraction, row.cost_fraction, row.science_fraction);
    out << fmt::format("Total,{:.3f},{:.4f},{:.2f},{:.3f},{},1,1,1\n", r.walltime_hours, r.pflop32_hours, r.cost,
                       r.science, r.completed_jobs);
}

std::string format_peak_table(const PeakReport& r) {
    std::string s = fmt::format("Peak at t={} s\n", r.at.to_string());
    s += fmt::format("{:<8} {:>8} {:>10} {:>10} {:>21}\n", "GPU", "Count", "PFLOP32s", "$/h", "$/h range");
    for (const auto& row : r.rows)
        s += fmt::format("{:<8} {:>8} {:>10.1f} {:>10.0f} {:>10.0f}-{:<10.0f}\n", workload::to_string(row.gpu),
                         row.count, row.pflops32, row.cost_per_hour, row.cost_min, row.cost_max);
    s += fmt::format("{:<8} {:>8} {:>10.1f} {:>10.0f}\n", "Total", r.total_count, r.total_pflops32,
                     r.total_cost_per_hour);
    return s;
}

std::string format_totals_table(const TotalsReport& r) {
    std::string s = fmt::format("Totals through t={} s\n", r.end.to_string());
    s += fmt::format("{:<8} {:>12} {:>12} {:>10} {:>10} {:>7} {:>7} {:>7}\n", "GPU", "Walltime h", "PFLOP32 h",
                     "Cost $", "Science", "wall%", "cost%", "sci%");
    for (const auto& row : r.rows)
        s += fmt::format("{:<8} {:>12.0f} {:>12.1f} {:>10.0f} {:>10.1f} {:>7.1f} {:>7.1f} {:>7.1f}\n",
                         workload::to_string(row.gpu), row.walltime_hours, row.pflop32_hours, row.cost, row.science,
                         100 * row.walltime_fraction, 100 * row.cost_fraction, 100 * row.science_fraction);
    s += fmt::format("{:<8} {:>12.0f} {:>12.1f} {:>10.0f} {:>10.1f}\n", "Total", r.walltime_hours, r.pflop32_hours,
                     r.cost, r.science);
    s += fmt::format("Rogue cost: {:.2f} $   Preemptions: {}\n", r.rogue_cost, r.preemptions);
    return s;
}

}  // namespace gpuburst::economics
