#include "harness.hpp"

#include <algorithm>
#include <array>
#include <functional>

#include <fmt/format.h>

#include "gpuburst/errors.hpp"

namespace gpuburst::testing {

using providers::EndReason;
using providers::Flavor;
using providers::InstanceState;
using providers::Provider;
using workload::GpuModel;

CloudHarness::CloudHarness(std::vector<providers::RegionSpec> regions, std::uint64_t seed)
    : engine(seed), cloud(engine, std::move(regions)) {
    engine.set_handler([this](const sim::Event& ev) {
        if (ev.kind == sim::EventKind::ProviderTick) cloud.provider_tick();
    });
}

void CloudHarness::advance_to(sim::SimTime t) {
    const std::int64_t period = cloud.config().tick.ms();
    for (std::int64_t k = engine.now().ms() / period + 1; k * period < t.ms(); ++k)
        engine.schedule(sim::SimTime::from_ms(k * period), sim::EventKind::ProviderTick, 0);
    if (t > engine.now()) engine.schedule(t, sim::EventKind::ProviderTick, 0);
    engine.run_until(t);
    collect();
}

void CloudHarness::collect() {
    for (auto& c : cloud.take_changes()) changes.push_back(c);
}

providers::RegionSpec region(std::string id, Provider p, GpuModel gpu, std::int64_t quota, double boot_s) {
    providers::RegionSpec r;
    r.id = std::move(id);
    r.provider = p;
    r.geo_area = "NA";
    r.quota[gpu] = quota;
    r.boot = {boot_s, 0.0};
    return r;
}

namespace {

// The lifecycle graph as published, plus the two cancellation edges
// (an unfulfilled request or a boot that is deleted before it runs).
bool expected_legal(InstanceState from, InstanceState to) {
    using S = InstanceState;
    static const std::array<std::pair<S, S>, 9> edges = {{
        {S::Requested, S::Booting},
        {S::Booting, S::Running},
        {S::Running, S::Stopped},
        {S::Running, S::Deallocated},
        {S::Running, S::Terminated},
        {S::Stopped, S::Deallocated},
        {S::Stopped, S::Running},
        {S::Requested, S::Terminated},
        {S::Booting, S::Terminated},
    }};
    return std::find(edges.begin(), edges.end(), std::pair{from, to}) != edges.end();
}

constexpr std::array<InstanceState, 6> kStates = {InstanceState::Requested, InstanceState::Booting,
                                                  InstanceState::Running,   InstanceState::Stopped,
                                                  InstanceState::Deallocated, InstanceState::Terminated};

enum class Op : int { Tick, Grow, Shrink, Shutdown, Deprovision, Start, Sweep };
constexpr int kOpCount = 7;

struct World {
    CloudHarness h;
    std::vector<GroupId> groups;
    std::vector<std::int64_t> desired;
    std::size_t checked = 0;
    int fleets = 0;

    explicit World(std::vector<providers::RegionSpec> regions, std::uint64_t seed) : h(std::move(regions), seed) {}
};

std::vector<providers::RegionSpec> one_region_per(std::span<const Provider> providers_, std::int64_t quota) {
    std::vector<providers::RegionSpec> out;
    for (auto p : providers_) {
        auto r = region(fmt::format("r-{}", providers::to_string(p)), p, GpuModel::T4, quota, 30.0);
        out.push_back(r);
    }
    return out;
}

void setup_groups(World& w) {
    for (std::size_t r = 0; r < w.h.cloud.region_count(); ++r) {
        const auto& spec = w.h.cloud.region(static_cast<RegionIndex>(r));
        switch (providers::flavor_of(spec.provider)) {
            case Flavor::Fleet: w.groups.push_back(kNoGroup); break;
            case Flavor::ScaleSet: w.groups.push_back(w.h.cloud.create_scale_set(spec.id, GpuModel::T4, 3)); break;
            case Flavor::InstanceGroup: w.groups.push_back(w.h.cloud.create_instance_group(spec.id, GpuModel::T4)); break;
        }
        w.desired.push_back(0);
    }
}

void add_faults(World& w, bool preemption) {
    providers::FaultSpec respawn;
    respawn.kind = providers::FaultKind::DeprovisionRespawnBug;
    respawn.end = sim::seconds(1e7);
    w.h.cloud.add_fault(respawn);
    if (preemption) {
        providers::FaultSpec pre;
        pre.kind = providers::FaultKind::Preemption;
        pre.end = sim::seconds(1e7);
        pre.preemption_rate_per_hour = 60.0;
        w.h.cloud.add_fault(pre);
    }
}

InstanceId first_in_state(const providers::CloudProviders& c, InstanceState s, RegionIndex region) {
    for (InstanceId i = 0; i < c.instance_count(); ++i) {
        const auto& inst = c.instance(i);
        if (inst.state == s && inst.region == region) return i;
    }
    return kNoInstance;
}

// Applies one operation; documented contract errors are part of the API.
void apply(World& w, Op op, std::size_t g, sim::SimTime tick) {
    auto& cloud = w.h.cloud;
    const auto r = static_cast<RegionIndex>(g);
    const auto flavor = providers::flavor_of(cloud.region(r).provider);
    const auto& rid = cloud.region(r).id;
    try {
        switch (op) {
            case Op::Tick: w.h.advance(tick); return;
            case Op::Grow:
                if (flavor == Flavor::Fleet) {
                    cloud.create_fleet(rid, GpuModel::T4, 1, fmt::format("fleet-{}", w.fleets++));
                } else if (flavor == Flavor::ScaleSet) {
                    cloud.resize_scale_set(w.groups[g], cloud.group(w.groups[g]).desired + 1);
                } else {
                    cloud.resize_instance_group(w.groups[g], cloud.group(w.groups[g]).desired + 1);
                }
                break;
            case Op::Shrink:
                if (flavor == Flavor::ScaleSet) cloud.resize_scale_set(w.groups[g], cloud.group(w.groups[g]).desired - 1);
                if (flavor == Flavor::InstanceGroup)
                    cloud.resize_instance_group(w.groups[g], cloud.group(w.groups[g]).desired - 1);
                break;
            case Op::Shutdown: {
                auto id = first_in_state(cloud, InstanceState::Running, r);
                if (id == kNoInstance) id = first_in_state(cloud, InstanceState::Booting, r);
                if (id != kNoInstance) cloud.system_shutdown(id);
                break;
            }
            case Op::Deprovision: {
                if (flavor == Flavor::Fleet) {
                    const auto id = first_in_state(cloud, InstanceState::Running, r);
                    if (id != kNoInstance) cloud.system_shutdown(id);
                    break;
                }
                const auto& grp = cloud.group(w.groups[g]);
                if (grp.members.empty()) break;
                if (flavor == Flavor::ScaleSet) cloud.deallocate_instance(grp.id, grp.members.front());
                else cloud.delete_group_instance(grp.id, grp.members.front());
                break;
            }
            case Op::Start: {
                const auto id = first_in_state(cloud, InstanceState::Stopped, r);
                if (id != kNoInstance) cloud.start_instance(id);
                break;
            }
            case Op::Sweep: cloud.manual_sweep(rid); break;
        }
    } catch (const IllegalTransition&) {
        throw;
    } catch (const Error&) {
        // Contract errors (wrong state, exceeds max size, ...) are expected.
    }
    w.h.collect();
}

void check_world(World& w, SuiteResult& out, const std::string& where) {
    const auto& cloud = w.h.cloud;
    for (; w.checked < w.h.changes.size(); ++w.checked) {
        const auto& c = w.h.changes[w.checked];
        if (c.from == InstanceState::Requested && c.to == InstanceState::Requested) continue;
        ++out.transitions;
        if (!expected_legal(c.from, c.to)) {
            out.failures.push_back(fmt::format("{}: illegal {} -> {} on instance {}", where, to_string(c.from),
                                               to_string(c.to), c.instance));
        }
        if (c.billing_stopped && c.billable_from > w.h.engine.now())
            out.failures.push_back(fmt::format("{}: billing span ends before it starts", where));
    }
    std::int64_t total = 0;
    for (auto s : kStates) total += cloud.count_in_state(s);
    if (total != static_cast<std::int64_t>(cloud.instance_count()))
        out.failures.push_back(where + ": state counts do not sum to instance count");
    for (std::size_t r = 0; r < cloud.region_count(); ++r) {
        const auto ri = static_cast<RegionIndex>(r);
        if (cloud.quota_in_use(ri, GpuModel::T4) > cloud.quota(ri, GpuModel::T4))
            out.failures.push_back(where + ": quota exceeded");
    }
    for (GroupId g = 0; g < cloud.group_count(); ++g) {
        for (auto id : cloud.group(g).members) {
            const auto& inst = cloud.instance(id);
            if (inst.state == InstanceState::Terminated || inst.state == InstanceState::Deallocated || inst.rogue)
                out.failures.push_back(fmt::format("{}: group {} holds ended or rogue instance {}", where, g, id));
        }
    }
}

void run_sequence(World& w, std::span<const int> ops, std::span<const std::size_t> targets, SuiteResult& out,
                  const std::string& where, sim::SimTime tick) {
    try {
        for (std::size_t i = 0; i < ops.size(); ++i) {
            apply(w, static_cast<Op>(ops[i]), targets[i], tick);
            check_world(w, out, where);
        }
        w.h.advance(sim::seconds(120));
        check_world(w, out, where);
    } catch (const IllegalTransition& e) {
        out.failures.push_back(where + ": " + e.what());
    }
    ++out.cases;
}

}  // namespace

SuiteResult check_transition_table() {
    SuiteResult out;
    for (auto from : kStates) {
        for (auto to : kStates) {
            ++out.cases;
            if (providers::is_legal(from, to) != expected_legal(from, to)) {
                out.failures.push_back(fmt::format("{} -> {}: is_legal disagrees with the lifecycle graph",
                                                   to_string(from), to_string(to)));
            }
        }
    }
    return out;
}

SuiteResult enumerate_small_sequences(int max_len) {
    SuiteResult out;
    const std::array<Provider, 3> all = {Provider::A, Provider::B, Provider::C};
    for (std::size_t f = 0; f < all.size(); ++f) {
        const Provider one[] = {all[f]};
        for (int len = 1; len <= max_len; ++len) {
            std::vector<int> ops(static_cast<std::size_t>(len), 0);
            const std::vector<std::size_t> targets(static_cast<std::size_t>(len), 0);
            for (;;) {
                World w(one_region_per(one, 2), 17);
                setup_groups(w);
                add_faults(w, false);
                std::string where = fmt::format("flavor {} ops", providers::to_string(providers::flavor_of(all[f])));
                for (int o : ops) where += fmt::format(" {}", o);
                run_sequence(w, ops, targets, out, where, sim::seconds(40));
                std::size_t k = 0;
                while (k < ops.size() && ++ops[k] == kOpCount) ops[k++] = 0;
                if (k == ops.size()) break;
            }
        }
    }
    return out;
}

SuiteResult random_sequences(std::uint64_t cases, std::uint64_t seed) {
    SuiteResult out;
    const std::array<Provider, 3> all = {Provider::A, Provider::B, Provider::C};
    for (std::uint64_t c = 0; c < cases; ++c) {
        sim::RngStream rng(seed, c);
        World w(one_region_per(all, 3), seed + c);
        setup_groups(w);
        add_faults(w, true);
        const std::size_t len = 10 + rng.below(30);
        std::vector<int> ops;
        std::vector<std::size_t> targets;
        for (std::size_t i = 0; i < len; ++i) {
            ops.push_back(static_cast<int>(rng.below(kOpCount)));
            targets.push_back(static_cast<std::size_t>(rng.below(all.size())));
        }
        const auto tick = sim::seconds(5 + static_cast<double>(rng.below(120)));
        run_sequence(w, ops, targets, out, fmt::format("random case {}", c), tick);
    }
    return out;
}

namespace {

TeardownOutcome ig_teardown(std::int64_t size, std::uint32_t max_generations, bool reduce) {
    CloudHarness h({region("c-test", Provider::C, GpuModel::K80, size * 4, 30.0)});
    const auto g = h.cloud.create_instance_group("c-test", GpuModel::K80);
    h.cloud.resize_instance_group(g, size);
    h.advance(sim::seconds(60));
    if (reduce) h.cloud.resize_instance_group(g, h.cloud.live_members(g));

    TeardownOutcome out;
    for (std::uint32_t round = 0; round < 4 * max_generations; ++round) {
        const auto members = h.cloud.group(g).members;
        for (auto id : members) {
            if (h.cloud.instance(id).state != InstanceState::Running) continue;
            if (reduce) h.cloud.delete_group_instance(g, id);
            else h.cloud.system_shutdown(id);
        }
        h.advance(sim::seconds(60));
        std::uint32_t gen = 0;
        for (InstanceId i = 0; i < h.cloud.instance_count(); ++i)
            gen = std::max(gen, h.cloud.instance(i).generation);
        out.generations = gen;
        out.alive = h.cloud.live_members(g);
        if (out.alive == 0) {
            // Stays empty once converged.
            h.advance(sim::seconds(600));
            out.alive = h.cloud.live_members(g);
            out.converged = out.alive == 0;
            return out;
        }
        if (gen >= max_generations) return out;
    }
    return out;
}

}  // namespace

TeardownOutcome ig_teardown_without_reduction(std::int64_t size, std::uint32_t max_generations) {
    return ig_teardown(size, max_generations, false);
}

TeardownOutcome ig_teardown_with_reduction(std::int64_t size, std::uint32_t max_generations) {
    return ig_teardown(size, max_generations, true);
}

}  // namespace gpuburst::testing
