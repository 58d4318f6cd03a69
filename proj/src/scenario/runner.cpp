#include "gpuburst/scenario/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "gpuburst/errors.hpp"
#include "gpuburst/pool/pool.hpp"
#include "gpuburst/providers/cloud.hpp"

namespace gpuburst::scenario {

namespace {

using providers::Flavor;
using providers::InstanceState;
using sim::EventKind;
using sim::SimTime;

struct FairSample {
    SimTime t;
    double gpu_ratio = 0;
    bool gpu_backlogged = false;
    double cpu_ratio = 0;
    bool cpu_backlogged = false;
};

std::vector<providers::RegionSpec> provider_regions(const Scenario& s) {
    std::vector<providers::RegionSpec> out;
    for (const auto& r : s.regions) out.push_back(r.spec);
    return out;
}

std::vector<pool::PoolRegion> pool_regions(const Scenario& s) {
    std::vector<pool::PoolRegion> out;
    for (const auto& r : s.regions) out.push_back({r.spec.id, sim::seconds(r.spec.wan_latency_s), r.has_collector});
    return out;
}

std::vector<workload::StorageEndpoint> endpoints(const Scenario& s) {
    std::vector<workload::StorageEndpoint> out;
    for (const auto& r : s.regions) out.push_back({r.spec.id, r.storage_read_bps, r.storage_write_bps});
    return out;
}

workload::GpuTable load_table(const Scenario& s) {
    return s.gpu_table_path ? workload::GpuTable::load_csv(*s.gpu_table_path) : workload::GpuTable::builtin();
}

class Orchestrator {
public:
    explicit Orchestrator(const Scenario& s)
        : s_(s),
          engine_(s.seed),
          workload_(load_table(s), s.workload, endpoints(s)),
          prices_(economics::PriceBook::from_table(workload_.table())),
          cloud_(engine_, provider_regions(s), providers::ProvidersConfig{s.provider_tick}),
          pool_(engine_, workload_, pool_regions(s), s.pool),
          ledger_(prices_) {
        pool_.set_drain_handler([this](InstanceId id) { deprovision(id); });
        engine_.set_handler([this](const sim::Event& ev) { handle(ev); });
    }

    RunResult run();

private:
    void setup();
    void handle(const sim::Event& ev);
    void flush_changes();
    void on_change(const providers::LifecycleChange& c);
    void deprovision(InstanceId id);
    void provision(std::size_t step);
    void begin_shutdown();
    void sample();
    void schedule_periodic(EventKind kind, SimTime at);
    SimTime period_of(EventKind kind) const;

    const Scenario& s_;
    sim::Engine engine_;
    workload::WorkloadModel workload_;
    economics::PriceBook prices_;
    providers::CloudProviders cloud_;
    pool::Pool pool_;
    economics::CostLedger ledger_;

    std::map<std::string, GroupId, std::less<>> groups_;
    workload::GpuCounts running_;
    bool shutdown_ = false;
    std::vector<TimeseriesRow> timeseries_;
    std::vector<FairSample> fair_;
    std::uint32_t max_schedd_running_ = 0;
    std::uint64_t gpu_jobs_lost_ = 0;
    std::uint64_t gpu_jobs_requeued_ = 0;
};

SimTime Orchestrator::period_of(EventKind kind) const {
    switch (kind) {
        case EventKind::ProviderTick: return s_.provider_tick;
        case EventKind::NegotiatorTick: return s_.pool.negotiator.cycle_period;
        default: return s_.sample_period;
    }
}

void Orchestrator::schedule_periodic(EventKind kind, SimTime at) {
    if (at <= s_.horizon) {
        engine_.schedule(at, kind, 0);
    } else if (kind == EventKind::Sample && engine_.now() < s_.horizon) {
        engine_.schedule(s_.horizon, kind, 0);
    }
}

void Orchestrator::setup() {
    for (const auto& g : s_.groups) {
        const auto* r = s_.find_region(g.region);
        switch (providers::flavor_of(r->spec.provider)) {
            case Flavor::Fleet: break;
            case Flavor::ScaleSet: groups_[g.name] = cloud_.create_scale_set(g.region, g.gpus.front(), g.max_size, g.name); break;
            case Flavor::InstanceGroup: groups_[g.name] = cloud_.create_instance_group(g.region, g.gpus.front(), g.name); break;
        }
    }

    for (const auto& f : s_.faults) cloud_.add_fault(f);

    for (const auto& batch : s_.jobs) {
        pool::JobSpec spec;
        spec.cls = batch.cls;
        spec.input = batch.input;
        if (batch.cls == pool::JobClass::Gpu) {
            for (const auto& id : s_.replicas.at(batch.input)) spec.required_regions.push_back(cloud_.region_index(id));
        }
        for (std::int64_t i = 0; i < batch.count; ++i) pool_.submit_round_robin(std::span<const pool::JobSpec>(&spec, 1));
    }

    for (std::size_t i = 0; i < s_.provisioning.size(); ++i)
        engine_.schedule(s_.provisioning[i].at, EventKind::ProvisionAction, i);
    for (std::size_t i = 0; i < s_.faults.size(); ++i) {
        const auto& f = s_.faults[i];
        const std::string regions = fmt::format("{}", fmt::join(f.regions, "|"));
        engine_.schedule(f.start, EventKind::FaultWindow, i,
                         fmt::format("kind={};edge=start;regions={}", providers::to_string(f.kind), regions));
        if (f.end <= s_.horizon)
            engine_.schedule(f.end, EventKind::FaultWindow, i,
                             fmt::format("kind={};edge=end;regions={}", providers::to_string(f.kind), regions));
    }
    for (std::size_t i = 0; i < s_.operator_steps.size(); ++i) {
        const auto& o = s_.operator_steps[i];
        engine_.schedule(o.at, o.kind == OperatorKind::ManualRecovery ? EventKind::ManualRecovery : EventKind::ManualSweep,
                         i, "region=" + o.region);
    }
    if (s_.shutdown_at) engine_.schedule(*s_.shutdown_at, EventKind::ShutdownStart, 0);
    schedule_periodic(EventKind::ProviderTick, SimTime{});
    schedule_periodic(EventKind::NegotiatorTick, SimTime{});
    schedule_periodic(EventKind::Sample, SimTime{});
}

void Orchestrator::handle(const sim::Event& ev) {
    switch (ev.kind) {
        case EventKind::ProviderTick:
        case EventKind::NegotiatorTick:
        case EventKind::Sample:
            if (ev.kind == EventKind::ProviderTick) {
                cloud_.provider_tick();
            } else if (ev.kind == EventKind::NegotiatorTick) {
                flush_changes();
                pool_.start_matches(pool_.negotiate_cycle());
                for (std::size_t i = 0; i < pool_.schedd_count(); ++i)
                    max_schedd_running_ = std::max(max_schedd_running_, pool_.schedd(static_cast<ScheddId>(i)).running);
            } else {
                sample();
            }
            schedule_periodic(ev.kind, ev.at + period_of(ev.kind));
            break;
        case EventKind::ProvisionAction: provision(ev.target); break;
        case EventKind::InstanceState: break;
        case EventKind::StartdHandshake: pool_.on_handshake(static_cast<InstanceId>(ev.target)); break;
        case EventKind::AdVisible: pool_.on_ad_visible(static_cast<InstanceId>(ev.target)); break;
        case EventKind::JobComplete:
            pool_.on_job_terminal(static_cast<JobId>(ev.target), pool::TerminalReason::Completed);
            break;
        case EventKind::ShutdownStart: begin_shutdown(); break;
        case EventKind::ManualRecovery: cloud_.manual_recovery(s_.operator_steps[ev.target].region); break;
        case EventKind::ManualSweep: cloud_.manual_sweep(s_.operator_steps[ev.target].region); break;
        case EventKind::FaultWindow: break;
    }
    flush_changes();
}

void Orchestrator::flush_changes() {
    for (auto changes = cloud_.take_changes(); !changes.empty(); changes = cloud_.take_changes())
        for (const auto& c : changes) on_change(c);
}

void Orchestrator::on_change(const providers::LifecycleChange& c) {
    const auto& inst = cloud_.instance(c.instance);
    const auto& region = cloud_.region(inst.region);
    engine_.schedule(engine_.now(), EventKind::InstanceState, c.instance,
                     fmt::format("from={};to={};gpu={};region={};group={};rogue={};reason={}", providers::to_string(c.from),
                                 providers::to_string(c.to), workload::to_string(inst.gpu), region.id,
                                 inst.group == kNoGroup ? std::string("-") : std::to_string(inst.group),
                                 inst.rogue ? 1 : 0, providers::to_string(c.reason)));

    if (c.billing_stopped) ledger_.accrue(c.instance, inst.gpu, region.id, c.billable_from, engine_.now(), inst.rogue);
    if (inst.rogue) return;

    if (c.to == InstanceState::Running) {
        ++running_[inst.gpu];
        if (inst.state == InstanceState::Running) {
            // The startd learns where it runs from the instance metadata service.
            const auto md = cloud_.query_metadata(c.instance);
            pool_.register_startd(c.instance, cloud_.region_index(md.region), inst.gpu, md.provider);
        }
    }
    if (c.from == InstanceState::Running) {
        --running_[inst.gpu];
        const auto* slot = pool_.slot(c.instance);
        const JobId lost = slot && slot->present ? slot->gpu_job : kNoJob;
        const auto requirement = lost != kNoJob ? pool_.job(lost).requirement : 0;
        pool_.on_instance_lost(c.instance);
        if (lost != kNoJob) {
            ++gpu_jobs_lost_;
            const auto& j = pool_.job(lost);
            if (j.state == pool::JobState::Idle && j.queued && j.instance == kNoInstance && j.requirement == requirement)
                ++gpu_jobs_requeued_;
        }
    }
}

void Orchestrator::deprovision(InstanceId id) {
    const auto& inst = cloud_.instance(id);
    if (inst.rogue || inst.state != InstanceState::Running) return;
    const auto& g = cloud_.group(inst.group);
    switch (g.flavor) {
        case Flavor::Fleet: cloud_.system_shutdown(id); break;
        case Flavor::ScaleSet: cloud_.deallocate_instance(g.id, id); break;
        case Flavor::InstanceGroup: cloud_.delete_group_instance(g.id, id); break;
    }
}

void Orchestrator::provision(std::size_t step_index) {
    if (shutdown_) return;
    const auto& step = s_.provisioning[step_index];
    const auto* g = s_.find_group(step.group);
    const auto* r = s_.find_region(g->region);
    switch (providers::flavor_of(r->spec.provider)) {
        case Flavor::Fleet: groups_[g->name] = cloud_.create_fleet(g->region, g->gpus, step.size, g->name); break;
        case Flavor::ScaleSet: cloud_.resize_scale_set(groups_.at(g->name), step.size); break;
        case Flavor::InstanceGroup: cloud_.resize_instance_group(groups_.at(g->name), step.size); break;
    }
}

void Orchestrator::begin_shutdown() {
    shutdown_ = true;
    for (const auto& [name, id] : groups_) {
        const auto& g = cloud_.group(id);
        std::int64_t live = 0;
        for (InstanceId m : g.members)
            if (!cloud_.instance(m).surplus) ++live;
        if (g.flavor == Flavor::ScaleSet) cloud_.resize_scale_set(id, live);
        if (g.flavor == Flavor::InstanceGroup) cloud_.resize_instance_group(id, live);
    }
    pool_.begin_shutdown();
}

void Orchestrator::sample() {
    TimeseriesRow row;
    row.t = engine_.now();
    row.running_gpu_jobs = pool_.counts(pool::JobClass::Gpu).running;
    row.idle_gpu_jobs = pool_.counts(pool::JobClass::Gpu).idle;
    row.running_instances = running_.total();
    row.pflops32 = workload_.pflops32_of(running_);
    timeseries_.push_back(row);

    FairSample fs;
    fs.t = row.t;
    for (auto kind : {pool::JobClass::Gpu, pool::JobClass::Cpu}) {
        std::uint32_t lo = UINT32_MAX;
        std::uint32_t hi = 0;
        bool backlogged = !shutdown_;
        const auto ids = pool_.schedds_of(kind);
        for (ScheddId id : ids) {
            const auto& sd = pool_.schedd(id);
            lo = std::min(lo, sd.running);
            hi = std::max(hi, sd.running);
            backlogged = backlogged && sd.idle > 0;
        }
        backlogged = backlogged && !ids.empty() && lo > 0;
        const double ratio = backlogged ? static_cast<double>(hi) / lo : 0.0;
        if (kind == pool::JobClass::Gpu) {
            fs.gpu_ratio = ratio;
            fs.gpu_backlogged = backlogged;
        } else {
            fs.cpu_ratio = ratio;
            fs.cpu_backlogged = backlogged;
        }
    }
    fair_.push_back(fs);
}

RunResult Orchestrator::run() {
    const auto wall_start = std::chrono::steady_clock::now();
    setup();
    RunResult r;
    r.trace = engine_.run_until(s_.horizon);
    const SimTime end = s_.horizon;

    std::int64_t alive = 0;
    for (std::size_t i = 0; i < cloud_.instance_count(); ++i) {
        const auto& inst = cloud_.instance(static_cast<InstanceId>(i));
        if (!providers::is_billable(inst.state)) continue;
        ++alive;
        ledger_.accrue(inst.id, inst.gpu, cloud_.region(inst.region).id, inst.billable_since, end, inst.rogue);
    }

    r.scenario = s_;
    r.timeseries = std::move(timeseries_);
    r.audit = cloud_.audit();
    for (const auto& reg : s_.regions) r.region_ids.push_back(reg.spec.id);
    r.peak = economics::peak_report(r.trace, prices_, workload_.table());
    r.totals = economics::totals_report(r.trace, prices_, workload_);
    r.ledger_total = ledger_.total();
    r.ledger_rogue = ledger_.rogue_total();
    r.ledger_entries = ledger_.entries().size();
    r.end_alive = alive;
    r.end_rogue_alive = cloud_.rogue_alive();
    r.instance_preemptions = r.totals.preemptions;

    SimTime t0 = s_.horizon;
    for (const auto& p : s_.provisioning) t0 = std::min(t0, p.at);
    const auto curve = economics::running_curve(r.trace);
    std::int64_t peak = 0;
    for (const auto& [t, n] : curve) peak = std::max(peak, n);
    SimTime t90_abs = s_.horizon;
    auto crossing = [&](double frac) {
        for (const auto& [t, n] : curve)
            if (peak > 0 && static_cast<double>(n) >= frac * static_cast<double>(peak)) return t;
        return SimTime::from_ms(-1);
    };
    auto rel = [&](SimTime t) { return t < SimTime{} ? -1.0 : (t - t0).seconds(); };
    const double band = s_.scale < 1.0 && peak > 0 ? 1.0 / std::sqrt(static_cast<double>(peak)) : 0.0;
    r.milestone_65_s = rel(crossing(0.65));
    r.milestone_90_s = rel(crossing(0.90));
    if (r.milestone_90_s >= 0) t90_abs = crossing(0.90);
    r.milestone_65_band = {rel(crossing(0.65 - band)), rel(crossing(std::min(1.0, 0.65 + band)))};
    r.milestone_90_band = {rel(crossing(0.90 - band)), rel(crossing(std::min(1.0, 0.90 + band)))};

    auto& ps = r.pool;
    ps.max_schedd_running = max_schedd_running_;
    for (const auto& f : fair_) {
        if (f.t < t90_abs) continue;
        if (f.gpu_backlogged) ps.fair_share_ratio_gpu = std::max(ps.fair_share_ratio_gpu, f.gpu_ratio);
        if (f.cpu_backlogged) ps.fair_share_ratio_cpu = std::max(ps.fair_share_ratio_cpu, f.cpu_ratio);
        if (f.gpu_backlogged) ++ps.steady_samples;
    }
    ps.locality_violations = pool_.locality_violations();
    ps.io_operations = pool_.io_operations();
    ps.io_locality_violations = pool_.io_locality_violations();
    ps.conserved = pool_.counts(pool::JobClass::Gpu).conserved() && pool_.counts(pool::JobClass::Cpu).conserved();
    ps.max_leaf_backlog = pool_.max_leaf_backlog();
    ps.gpu_preemptions = pool_.counts(pool::JobClass::Gpu).preemptions;
    ps.gpu_jobs_lost = gpu_jobs_lost_;
    ps.gpu_jobs_requeued = gpu_jobs_requeued_;
    ps.gpu_removed = pool_.counts(pool::JobClass::Gpu).removed;
    ps.cpu_removed = pool_.counts(pool::JobClass::Cpu).removed;

    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return r;
}

}  // namespace

RunResult run(const Scenario& scenario) {
    auto problems = validate(scenario);
    if (!problems.empty()) throw ValidationError(std::move(problems));
    Orchestrator o(scenario);
    return o.run();
}

void write_timeseries_csv(std::ostream& out, const std::vector<TimeseriesRow>& rows) {
    out << "t,running_gpu_jobs,idle_gpu_jobs,running_instances,pflops32\n";
    for (const auto& r : rows)
        out << fmt::format("{},{},{},{},{:.4f}\n", r.t.to_string(), r.running_gpu_jobs, r.idle_gpu_jobs,
                           r.running_instances, r.pflops32);
}

void write_audit_csv(std::ostream& out, const std::vector<providers::AuditRecord>& audit) {
    out << "t,group,flavor,region,action,count\n";
    for (const auto& a : audit)
        out << fmt::format("{},{},{},{},{},{}\n", a.t.to_string(),
                           a.group == kNoGroup ? std::string("-") : std::to_string(a.group),
                           providers::to_string(a.flavor), a.region, a.action, a.count);
}

namespace {

bool in_range(double v, double lo, double hi) { return v >= lo && v <= hi; }

std::string pct(double got, double want) {
    return want == 0 ? fmt::format("got {:.4g}", got) : fmt::format("got {:.4g}, want {:.4g} ({:+.2f}%)", got, want, 100.0 * (got - want) / want);
}

}  // namespace

std::vector<CheckResult> evaluate_checks(const RunResult& r) {
    std::vector<CheckResult> out;
    const Scenario& s = r.scenario;
    const double scale = s.scale;

    out.push_back({"locality", r.pool.locality_violations == 0 && r.pool.io_locality_violations == 0,
                   fmt::format("{} placement, {} I/O violations over {} I/O operations", r.pool.locality_violations,
                               r.pool.io_locality_violations, r.pool.io_operations)});
    out.push_back({"schedd_cap", r.pool.max_schedd_running <= s.pool.schedd_cap,
                   fmt::format("max running per schedd {} (cap {})", r.pool.max_schedd_running, s.pool.schedd_cap)});
    out.push_back({"job_conservation", r.pool.conserved, "submitted == idle + running + completed + removed"});
    const double ledger_gap = std::abs(r.ledger_total - r.totals.cost);
    out.push_back({"ledger_matches_trace", ledger_gap <= 1e-6 * std::max(1.0, r.totals.cost),
                   fmt::format("ledger {:.4f} vs trace {:.4f}", r.ledger_total, r.totals.cost)});

    if (s.shutdown_at) {
        bool respawn = false;
        bool swept = false;
        for (const auto& f : s.faults) respawn = respawn || f.kind == providers::FaultKind::DeprovisionRespawnBug;
        for (const auto& o : s.operator_steps) swept = swept || o.kind == OperatorKind::ManualSweep;
        if (respawn && !swept) {
            out.push_back({"rogue_instances_persist", r.end_rogue_alive > 0 && r.ledger_rogue > 0,
                           fmt::format("{} rogue alive at horizon, rogue cost {:.2f}", r.end_rogue_alive, r.ledger_rogue)});
        } else {
            out.push_back({"end_state_clean", r.end_alive == 0,
                           fmt::format("{} instances billable at horizon", r.end_alive)});
        }
    }

    const auto& e = s.expect;
    if (e.peak_total)
        out.push_back({"peak_total", e.peak_total->within(static_cast<double>(r.peak.total_count), scale),
                       pct(static_cast<double>(r.peak.total_count), e.peak_total->value * scale)});
    for (const auto& [gpu, t] : e.peak_counts) {
        double got = 0;
        for (const auto& row : r.peak.rows)
            if (row.gpu == gpu) got = static_cast<double>(row.count);
        out.push_back({fmt::format("peak_count[{}]", workload::to_string(gpu)), t.within(got, scale), pct(got, t.value * scale)});
    }
    if (e.peak_pflops32)
        out.push_back({"peak_pflops32", e.peak_pflops32->within(r.peak.total_pflops32, scale),
                       pct(r.peak.total_pflops32, e.peak_pflops32->value * scale)});
    auto milestone = [&](const char* name, int pct_of_peak, double nominal, const std::array<double, 2>& band,
                         const Range& w) {
        const bool ok = band[0] >= 0 && band[1] >= 0 && band[0] <= w.hi && band[1] >= w.lo;
        out.push_back({name, ok,
                       fmt::format("{}% of peak after {:.0f} s (band {:.0f}..{:.0f} s), window [{:.0f}, {:.0f}]",
                                   pct_of_peak, nominal, band[0], band[1], w.lo, w.hi)});
    };
    if (e.milestone_65_s) milestone("milestone_65", 65, r.milestone_65_s, r.milestone_65_band, *e.milestone_65_s);
    if (e.milestone_90_s) milestone("milestone_90", 90, r.milestone_90_s, r.milestone_90_band, *e.milestone_90_s);
    if (e.walltime_hours)
        out.push_back({"walltime_hours", e.walltime_hours->within(r.totals.walltime_hours, scale),
                       pct(r.totals.walltime_hours, e.walltime_hours->value * scale)});
    if (e.pflop32_hours)
        out.push_back({"pflop32_hours", e.pflop32_hours->within(r.totals.pflop32_hours, scale),
                       pct(r.totals.pflop32_hours, e.pflop32_hours->value * scale)});
    for (const auto& [gpu, t] : e.model_pflop32_hours) {
        double got = 0;
        for (const auto& row : r.totals.rows)
            if (row.gpu == gpu) got = row.pflop32_hours;
        out.push_back({fmt::format("pflop32_hours[{}]", workload::to_string(gpu)), t.within(got, scale),
                       pct(got, t.value * scale)});
    }
    if (e.cost_per_hour)
        out.push_back({"peak_cost_per_hour", e.cost_per_hour->within(r.peak.total_cost_per_hour, scale),
                       pct(r.peak.total_cost_per_hour, e.cost_per_hour->value * scale)});
    if (e.cost_within_price_range) {
        bool ok = true;
        std::string bad;
        for (const auto& row : r.peak.rows) {
            if (!in_range(row.cost_per_hour, row.cost_min - 1e-9, row.cost_max + 1e-9)) {
                ok = false;
                bad += fmt::format(" {}", workload::to_string(row.gpu));
            }
        }
        out.push_back({"peak_cost_in_price_range", ok, ok ? "every model within count x [min, max]" : "outside:" + bad});
    }
    for (const auto& [key, range] : e.science_fraction) {
        double got = 0;
        std::string_view rest = key;
        while (!rest.empty()) {
            const auto plus = rest.find('+');
            const auto name = rest.substr(0, plus);
            const auto gpu = workload::parse_gpu_model(name);
            for (const auto& row : r.totals.rows)
                if (row.gpu == gpu) got += row.science_fraction;
            if (plus == std::string_view::npos) break;
            rest.remove_prefix(plus + 1);
        }
        out.push_back({fmt::format("science_fraction[{}]", key), range.contains(got),
                       fmt::format("got {:.4f}, window [{}, {}]", got, range.lo, range.hi)});
    }
    return out;
}

std::vector<std::filesystem::path> emit_outputs(const RunResult& r, const std::filesystem::path& dir,
                                                const std::vector<CheckResult>& checks) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError(fmt::format("cannot create {}: {}", dir.string(), ec.message()));

    std::vector<std::filesystem::path> manifest;
    auto write = [&](const char* name, auto&& body) {
        const auto path = dir / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
        body(out);
        out.flush();
        if (!out) throw IoError(fmt::format("write failed for {}", path.string()));
        manifest.push_back(path);
    };

    write("trace.csv", [&](std::ostream& o) { sim::write_trace_csv(o, r.trace); });
    write("timeseries.csv", [&](std::ostream& o) { write_timeseries_csv(o, r.timeseries); });
    write("audit.csv", [&](std::ostream& o) { write_audit_csv(o, r.audit); });
    write("peak.csv", [&](std::ostream& o) { economics::write_peak_csv(o, r.peak); });
    write("totals.csv", [&](std::ostream& o) { economics::write_totals_csv(o, r.totals); });
    write("summary.json", [&](std::ostream& o) {
        nlohmann::ordered_json j;
        j["scenario"] = r.scenario.name;
        j["seed"] = r.scenario.seed;
        j["scale"] = r.scenario.scale;
        j["horizon_s"] = r.scenario.horizon.seconds();
        j["small_size_factor"] = r.scenario.workload.small_size_factor;
        j["peak"] = {{"t_s", r.peak.at.seconds()},
                     {"instances", r.peak.total_count},
                     {"pflops32", r.peak.total_pflops32},
                     {"cost_per_hour", r.peak.total_cost_per_hour}};
        j["totals"] = {{"walltime_hours", r.totals.walltime_hours},
                       {"pflop32_hours", r.totals.pflop32_hours},
                       {"cost", r.totals.cost},
                       {"rogue_cost", r.totals.rogue_cost},
                       {"science", r.totals.science},
                       {"completed_jobs", r.totals.completed_jobs},
                       {"instance_preemptions", r.instance_preemptions}};
        j["milestones_s"] = {{"p65", r.milestone_65_s}, {"p90", r.milestone_90_s}};
        j["ledger"] = {{"total", r.ledger_total}, {"rogue", r.ledger_rogue}, {"entries", r.ledger_entries}};
        j["pool"] = {{"max_schedd_running", r.pool.max_schedd_running},
                     {"fair_share_ratio_gpu", r.pool.fair_share_ratio_gpu},
                     {"fair_share_ratio_cpu", r.pool.fair_share_ratio_cpu},
                     {"locality_violations", r.pool.locality_violations},
                     {"io_locality_violations", r.pool.io_locality_violations},
                     {"max_leaf_backlog_s", r.pool.max_leaf_backlog.seconds()},
                     {"gpu_job_preemptions", r.pool.gpu_preemptions},
                     {"gpu_jobs_requeued", r.pool.gpu_jobs_requeued},
                     {"gpu_jobs_removed", r.pool.gpu_removed},
                     {"cpu_jobs_removed", r.pool.cpu_removed}};
        j["end_state"] = {{"billable_instances", r.end_alive}, {"rogue_alive", r.end_rogue_alive}};
        auto arr = nlohmann::ordered_json::array();
        for (const auto& c : checks) arr.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
        j["checks"] = arr;
        o << j.dump(2) << '\n';
    });
    return manifest;
}

}  // namespace gpuburst::scenario
