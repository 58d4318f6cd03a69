// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "gpuburst/economics/economics.hpp"
#include "gpuburst/errors.hpp"
#include "gpuburst/pool/pool.hpp"
#include "gpuburst/providers/cloud.hpp"
#include "gpuburst/scenario/runner.hpp"
#include "gpuburst/scenario/scenario.hpp"
#include "gpuburst/sim/rng.hpp"
#include "harness.hpp"

namespace fs = std::filesystem;
using namespace gpuburst;
using scenario::CheckResult;
using scenario::RunResult;
using scenario::Scenario;

namespace {

const fs::path kSource = GPUBURST_SOURCE_DIR;

template <typename C>
concept HasFleetResize = requires(C c) { c.resize_fleet(GroupId{}, std::int64_t{}); };
static_assert(!HasFleetResize<providers::CloudProviders>);

struct Verdict {
    bool ok = true;
    std::vector<std::string> notes;

    void need(bool cond, std::string what) {
        if (!cond) ok = false;
        notes.push_back((cond ? "" : "!") + std::move(what));
    }
};

Scenario replay_scenario() { return scenario::parse_scenario(kSource / "scenarios" / "paper_replay.yaml"); }

const CheckResult* find_check(const std::vector<CheckResult>& checks, const std::string& name) {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

void need_check(Verdict& v, const std::vector<CheckResult>& checks, const std::string& name) {
    const auto* c = find_check(checks, name);
    if (!c) {
        v.need(false, name + " missing");
        return;
    }
    v.need(c->passed, fmt::format("{} ({})", name, c->detail));
}

void need_prefix(Verdict& v, const std::vector<CheckResult>& checks, const std::string& prefix, std::size_t expected) {
    std::size_t seen = 0;
    for (const auto& c : checks)
        if (c.name.rfind(prefix, 0) == 0) {
            ++seen;
            if (!c.passed) v.need(false, fmt::format("{} ({})", c.name, c.detail));
        }
    v.need(seen == expected, fmt::format("{} {} checks", seen, prefix));
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Replay {
    RunResult result;
    std::vector<CheckResult> checks;
};

Replay& full_replay() {
    static Replay r = [] {
        Replay out;
        out.result = scenario::run(replay_scenario());
        out.checks = scenario::evaluate_checks(out.result);
        return out;
    }();
    return r;
}

Replay& reduced_replay() {
    static Replay r = [] {
        Replay out;
        out.result = scenario::run(scenario::scaled(replay_scenario(), 0.01));
        out.checks = scenario::evaluate_checks(out.result);
        return out;
    }();
    return r;
}

// ---------------------------------------------------------------------------

Verdict peak_composition() {
    Verdict v;
    const auto& r = full_replay();
    need_check(v, r.checks, "peak_total");
    need_prefix(v, r.checks, "peak_count[", 8);
    v.need(r.result.wall_seconds < 60.0, fmt::format("runtime {:.2f} s", r.result.wall_seconds));
    return v;
}

Verdict peak_compute() {
    Verdict v;
    need_check(v, full_replay().checks, "peak_pflops32");
    return v;
}

Verdict ramp_milestones() {
    Verdict v;
    const auto& s = full_replay().result.scenario;
    bool stall = false, recovery = false;
    for (const auto& f : s.faults) stall = stall || f.kind == providers::FaultKind::RegionalLimitStall;
    for (const auto& o : s.operator_steps)
        recovery = recovery || (o.kind == scenario::OperatorKind::ManualRecovery && o.at == sim::seconds(3000));
    v.need(stall && recovery, "stall fault with recovery at 50 min");
    need_check(v, full_replay().checks, "milestone_65");
    need_check(v, full_replay().checks, "milestone_90");
    return v;
}

Verdict integral_totals() {
    Verdict v;
    need_check(v, full_replay().checks, "walltime_hours");
    need_check(v, full_replay().checks, "pflop32_hours");
    need_prefix(v, full_replay().checks, "pflop32_hours[", 8);
    return v;
}

Verdict peak_cost() {
    Verdict v;
    need_check(v, full_replay().checks, "peak_cost_per_hour");
    need_check(v, full_replay().checks, "peak_cost_in_price_range");
    return v;
}

Verdict science_skew() {
    Verdict v;
    need_check(v, full_replay().checks, "science_fraction[V100+T4]");
    need_check(v, full_replay().checks, "science_fraction[K80+K520]");
    return v;
}

Verdict preemption_accounting() {
    Verdict v;
    const auto base = scenario::scaled(replay_scenario(), 0.01);
    double rate = 0;
    for (const auto& f : base.faults)
        if (f.kind == providers::FaultKind::Preemption) rate = f.preemption_rate_per_hour;
    v.need(rate == 0.02, fmt::format("configured rate {}", rate));

    std::uint64_t preemptions = 0, lost = 0, requeued = 0, bad_completions = 0;
    double hours = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto s = base;
        s.seed = seed;
        const auto r = scenario::run(s);
        preemptions += r.instance_preemptions;
        hours += r.totals.walltime_hours;
        lost += r.pool.gpu_jobs_lost;
        requeued += r.pool.gpu_jobs_requeued;

        // Each job is credited at most once, and only through a completion.
        std::set<EntityId> done;
        double science = 0;
        for (const auto& ev : r.trace) {
            if (ev.kind != sim::EventKind::JobComplete) continue;
            if (!done.insert(ev.target).second) ++bad_completions;
            science += sim::detail_value(ev.detail, "input") == "Standard" ? 1.0 : s.workload.small_size_factor;
        }
        if (std::abs(science - r.totals.science) > 1e-6 * std::max(1.0, science)) ++bad_completions;
        if (!r.pool.conserved) ++bad_completions;
    }
    const double empirical = hours > 0 ? static_cast<double>(preemptions) / hours : 0;
    v.need(std::abs(empirical - 0.02) <= 0.005,
           fmt::format("{} preemptions over {:.0f} instance-hours = {:.2f}%/h", preemptions, hours, empirical * 100));
    v.need(lost > 0 && requeued == lost, fmt::format("{} of {} preempted GPU jobs requeued", requeued, lost));
    v.need(bad_completions == 0, fmt::format("{} science-credit anomalies", bad_completions));
    return v;
}

Verdict provider_semantics() {
    Verdict v;
    using providers::InstanceState;
    using providers::Provider;
    using workload::GpuModel;

    const auto without = testing::ig_teardown_without_reduction(20, 10);
    v.need(!without.converged && without.alive > 0,
           fmt::format("(a) no reduction: {} alive after {} generations", without.alive, without.generations));
    const auto with = testing::ig_teardown_with_reduction(20, 10);
    v.need(with.converged && with.alive == 0, fmt::format("(a) with reduction: empty after {} generations", with.generations));

    {
        testing::CloudHarness h({testing::region("r1", Provider::B, GpuModel::V100, 10)});
        const auto g = h.cloud.create_scale_set("r1", GpuModel::V100, 10);
        h.cloud.resize_scale_set(g, 1);
        const auto id = h.cloud.group(g).members.front();
        h.advance(sim::seconds(30));
        h.cloud.system_shutdown(id);
        const bool stopped = h.cloud.instance(id).state == InstanceState::Stopped;
        h.advance(sim::seconds(3600));
        h.cloud.deallocate_instance(g, id);
        h.advance(sim::seconds(3600));
        h.collect();
        economics::CostLedger ledger(economics::PriceBook::from_table(workload::GpuTable::builtin()));
        std::size_t stops = 0;
        for (const auto& c : h.changes)
            if (c.billing_stopped) {
                ++stops;
                ledger.accrue(c.instance, GpuModel::V100, "r1", c.billable_from, sim::seconds(3630), false);
            }
        const double want = 0.783 * 3630.0 / 3600.0;
        v.need(stopped && stops == 1 && std::abs(ledger.total() - want) < 1e-9 &&
                   h.cloud.instance(id).state == InstanceState::Deallocated,
               fmt::format("(b) stopped hour billed {:.4f} (want {:.4f}), deallocated hour unbilled", ledger.total(), want));
    }
    {
        testing::CloudHarness h({testing::region("r1", Provider::A, GpuModel::V100, 10)});
        const auto g = h.cloud.create_fleet("r1", GpuModel::V100, 2);
        bool rejected = false;
        try {
            h.cloud.resize_scale_set(g, 5);
        } catch (const NotAScaleSet&) {
            rejected = true;
        }
        v.need(rejected, "(c) fleet exposes no resize");
        const GpuModel mixed[] = {GpuModel::V100, GpuModel::T4};
        bool mixed_rejected = false;
        try {
            h.cloud.create_fleet("r1", mixed, 2);
        } catch (const MixedGpuTemplate&) {
            mixed_rejected = true;
        }
        v.need(mixed_rejected, "(d) mixed-GPU fleet rejected");
    }

    const auto table = testing::check_transition_table();
    v.need(table.ok(), fmt::format("transition table {} pairs", table.cases));
    const auto exhaustive = testing::enumerate_small_sequences(5);
    v.need(exhaustive.ok(), fmt::format("exhaustive: {} sequences, {} transitions, {} illegal", exhaustive.cases,
                                        exhaustive.transitions, exhaustive.failures.size()));
    const auto random = testing::random_sequences(10000, 2024);
    v.need(random.ok() && random.cases == 10000, fmt::format("random: {} sequences, {} transitions, {} illegal",
                                                             random.cases, random.transitions, random.failures.size()));
    for (const auto* s : {&exhaustive, &random})
        if (!s->failures.empty()) v.notes.push_back("first: " + s->failures.front());
    return v;
}

Verdict pool_properties() {
    Verdict v;
    const auto& r = reduced_replay().result;
    const auto cap = r.scenario.pool.schedd_cap;
    v.need(r.pool.max_schedd_running <= cap, fmt::format("max schedd running {} <= cap {}", r.pool.max_schedd_running, cap));
    v.need(r.pool.steady_samples > 0 && r.pool.fair_share_ratio_gpu <= 1.15,
           fmt::format("fair-share max/min {:.3f} over {} steady samples", r.pool.fair_share_ratio_gpu,
                       r.pool.steady_samples));
    v.need(r.pool.locality_violations == 0 && r.pool.io_locality_violations == 0 && r.pool.io_operations > 0,
           fmt::format("{} placement and {} I/O locality violations", r.pool.locality_violations,
                       r.pool.io_locality_violations));

    // Synthetic burst: 10k startds in one minute against the full-scale pool.
    const auto s = replay_scenario();
    std::vector<pool::PoolRegion> regions;
    for (const auto& rc : s.regions) regions.push_back({rc.spec.id, sim::seconds(rc.spec.wan_latency_s), rc.has_collector});
    std::vector<workload::StorageEndpoint> endpoints;
    for (const auto& rc : s.regions) endpoints.push_back({rc.spec.id, rc.storage_read_bps, rc.storage_write_bps});
    const workload::WorkloadModel model(workload::GpuTable::builtin(), s.workload, endpoints);
    sim::Engine engine(s.seed);
    pool::Pool p(engine, model, regions, s.pool);
    engine.set_handler([&](const sim::Event& ev) {
        if (ev.kind == sim::EventKind::StartdHandshake) p.on_handshake(static_cast<InstanceId>(ev.target));
        if (ev.kind == sim::EventKind::AdVisible) p.on_ad_visible(static_cast<InstanceId>(ev.target));
    });
    auto rng = engine.stream("burst");
    for (InstanceId i = 0; i < 10000; ++i) {
        engine.run_until(sim::SimTime::from_ms(static_cast<std::int64_t>(i) * 6));
        const auto region = static_cast<RegionIndex>(rng.below(regions.size()));
        p.register_startd(i, region, workload::GpuModel::T4, providers::Provider::A);
    }
    engine.run_until(sim::seconds(600));
    v.need(p.max_leaf_backlog() < sim::seconds(60) && p.visible_slots() == 10000,
           fmt::format("burst of 10k/min: max leaf backlog {:.3f} s, {} ads visible", p.max_leaf_backlog().seconds(),
                       p.visible_slots()));
    return v;
}

Verdict determinism() {
    Verdict v;
    const auto tmp = fs::temp_directory_path() / fmt::format("gpuburst_acceptance_{}", ::getpid());
    fs::remove_all(tmp);
    const char* files[] = {"trace.csv", "timeseries.csv", "audit.csv", "peak.csv", "totals.csv"};
    for (const char* name : {"paper_replay.yaml", "smoke.yaml"}) {
        auto s = scenario::scaled(scenario::parse_scenario(kSource / "scenarios" / name), 0.01);
        auto emit = [&](std::uint64_t seed, const std::string& tag) {
            auto copy = s;
            copy.seed = seed;
            const auto r = scenario::run(copy);
            scenario::emit_outputs(r, tmp / tag, scenario::evaluate_checks(r));
            return tmp / tag;
        };
        const auto a = emit(11, std::string(name) + "-a");
        const auto b = emit(11, std::string(name) + "-b");
        const auto c = emit(12, std::string(name) + "-c");
        bool same = true;
        for (const char* f : files) same = same && slurp(a / f) == slurp(b / f) && !slurp(a / f).empty();
        v.need(same, fmt::format("{}: equal seeds byte-identical", name));
        v.need(slurp(a / "trace.csv") != slurp(c / "trace.csv"), fmt::format("{}: different seeds differ", name));
    }
    fs::remove_all(tmp);
    return v;
}

Verdict respawn_regression() {
    Verdict v;
    const auto base = scenario::scaled(replay_scenario(), 0.01);
    bool respawn = false;
    for (const auto& f : base.faults) respawn = respawn || f.kind == providers::FaultKind::DeprovisionRespawnBug;
    v.need(respawn, "respawn fault active");

    auto unswept = base;
    std::erase_if(unswept.operator_steps, [](const auto& o) { return o.kind == scenario::OperatorKind::ManualSweep; });
    const auto a = scenario::run(unswept);
    v.need(a.end_rogue_alive > 0 && a.ledger_rogue > 0,
           fmt::format("no sweep: {} rogue alive at end, rogue cost {:.2f}", a.end_rogue_alive, a.ledger_rogue));

    bool has_sweep = false;
    for (const auto& o : base.operator_steps) has_sweep = has_sweep || o.kind == scenario::OperatorKind::ManualSweep;
    v.need(has_sweep, "sweep scheduled");
    const auto b = scenario::run(base);
    v.need(b.end_rogue_alive == 0 && b.end_alive == 0 && b.ledger_rogue > 0,
           fmt::format("with sweep: {} alive, rogue cost {:.2f} kept", b.end_rogue_alive, b.ledger_rogue));
    return v;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"peak composition", peak_composition},
        {"peak compute", peak_compute},
        {"ramp milestones", ramp_milestones},
        {"integral totals", integral_totals},
        {"cost at peak", peak_cost},
        {"science skew", science_skew},
        {"preemption accounting", preemption_accounting},
        {"provider semantics", provider_semantics},
        {"pool properties", pool_properties},
        {"determinism", determinism},
        {"respawn regression", respawn_regression},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v.ok = false;
            v.notes.push_back(std::string("exception: ") + e.what());
        }
        std::string detail;
        for (const auto& n : v.notes) detail += (detail.empty() ? "" : "; ") + n;
        std::cout << fmt::format("{} criterion {:>2} ({}): {}\n", v.ok ? "PASS" : "FAIL", i + 1, criteria[i].first, detail);
        if (!v.ok) ++failed;
    }
    std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
