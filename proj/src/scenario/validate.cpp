#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "gpuburst/errors.hpp"
#include "gpuburst/scenario/scenario.hpp"
#include "gpuburst/workload/gpu_table.hpp"

namespace gpuburst::scenario {

using providers::Flavor;

std::string_view to_string(OperatorKind k) {
    return k == OperatorKind::ManualRecovery ? "ManualRecovery" : "ManualSweep";
}

bool Target::within(double v, double scale) const {
    const double want = value * scale;
    const double widen = scale < 1.0 && scale > 0.0 ? 1.0 / std::sqrt(scale) : 1.0;
    return std::abs(v - want) <= rel_tol * widen * std::abs(want);
}

bool Expectations::empty() const {
    return !peak_total && peak_counts.empty() && !peak_pflops32 && !milestone_65_s && !milestone_90_s &&
           !walltime_hours && !pflop32_hours && model_pflop32_hours.empty() && !cost_per_hour &&
           !cost_within_price_range && science_fraction.empty();
}

const RegionConfig* Scenario::find_region(std::string_view id) const {
    for (const auto& r : regions)
        if (r.spec.id == id) return &r;
    return nullptr;
}

const GroupSpec* Scenario::find_group(std::string_view name) const {
    for (const auto& g : groups)
        if (g.name == name) return &g;
    return nullptr;
}

bool Scenario::has_fault(providers::FaultKind kind) const {
    return std::any_of(faults.begin(), faults.end(), [&](const auto& f) { return f.kind == kind; });
}

std::vector<std::string> validate(const Scenario& s) {
    std::vector<std::string> p;
    auto add = [&](std::string msg) { p.push_back(std::move(msg)); };

    if (s.horizon <= sim::SimTime{}) add("horizon_s: must be positive");
    if (s.sample_period <= sim::SimTime{}) add("sample_s: must be positive");
    if (s.provider_tick <= sim::SimTime{}) add("providers.tick_s: must be positive");
    if (s.pool.negotiator.cycle_period <= sim::SimTime{}) add("pool.cycle_s: must be positive");
    if (s.pool.cpu_slots_per_instance < 2) add("pool.cpu_slots_per_instance: must be at least 2");
    if (s.pool.schedd_cap == 0) add("pool.schedd_cap: must be positive");
    if (s.pool.gpu_schedds == 0) add("pool.gpu_schedds: need at least one GPU schedd");
    if (s.workload.small_size_factor <= 0 || s.workload.small_size_factor > 1)
        add("workload.small_size_factor: must be in (0, 1]");
    if (s.workload.runtime_jitter < 0 || s.workload.runtime_jitter >= 1) add("workload.runtime_jitter: must be in [0, 1)");
    if (s.workload.input_bytes < 0 || s.workload.output_bytes < 0) add("workload: byte counts must be non-negative");

    const workload::GpuTable table =
        s.gpu_table_path ? workload::GpuTable::load_csv(*s.gpu_table_path) : workload::GpuTable::builtin();

    std::set<std::string> region_ids;
    for (std::size_t i = 0; i < s.regions.size(); ++i) {
        const auto& r = s.regions[i];
        const std::string rp = fmt::format("regions[{}]", i);
        if (r.spec.id.empty()) add(rp + ".id: must not be empty");
        if (!region_ids.insert(r.spec.id).second) add(fmt::format("{}.id: duplicate region '{}'", rp, r.spec.id));
        for (const auto& [gpu, q] : r.spec.quota)
            if (q < 0) add(fmt::format("{}.quota.{}: must be non-negative", rp, workload::to_string(gpu)));
        if (r.spec.boot.median_s <= 0 || r.spec.boot.sigma < 0) add(rp + ".boot: median must be positive, sigma >= 0");
        if (r.spec.wan_latency_s < 0) add(rp + ".wan_latency_s: must be non-negative");
        if (r.spec.launch_rate_per_min < 0) add(rp + ".launch_rate_per_min: must be non-negative");
        if (r.storage_read_bps <= 0 || r.storage_write_bps <= 0) add(rp + ": storage bandwidth must be positive");
    }
    if (s.regions.empty()) add("regions: at least one region is required");

    std::set<std::string> provisioned;
    std::set<std::string> group_names;
    for (std::size_t i = 0; i < s.groups.size(); ++i) {
        const auto& g = s.groups[i];
        const std::string gp = fmt::format("groups[{}]", i);
        if (!group_names.insert(g.name).second) add(fmt::format("{}.name: duplicate group '{}'", gp, g.name));
        const RegionConfig* r = s.find_region(g.region);
        if (!r) {
            add(fmt::format("{}.region: unknown region '{}'", gp, g.region));
            continue;
        }
        provisioned.insert(g.region);
        if (g.gpus.size() > 1) add(fmt::format("{}.gpu: mixed GPU template ({} models); one model per group", gp, g.gpus.size()));
        if (g.gpus.empty()) add(gp + ".gpu: required");
        for (auto m : g.gpus) {
            if (!table.contains(m)) add(fmt::format("{}.gpu: no performance data for {}", gp, workload::to_string(m)));
            if (!table.price(m)) add(fmt::format("{}.gpu: no price for {}", gp, workload::to_string(m)));
        }
        const Flavor flavor = providers::flavor_of(r->spec.provider);
        if (flavor == Flavor::ScaleSet && g.max_size <= 0) add(gp + ".max_size: scale sets need a positive max_size");
        if (flavor != Flavor::ScaleSet && g.max_size != 0) add(gp + ".max_size: only scale sets have a max_size");
        if (!r->has_collector) add(fmt::format("{}.region: region '{}' has no collector node", gp, g.region));
    }

    std::set<std::string> fleets_created;
    for (std::size_t i = 0; i < s.provisioning.size(); ++i) {
        const auto& a = s.provisioning[i];
        const std::string ap = fmt::format("provisioning[{}]", i);
        if (a.at > s.horizon) add(ap + ".t_s: scheduled past the horizon");
        if (a.size < 0) add(ap + ".size: must be non-negative");
        const GroupSpec* g = s.find_group(a.group);
        if (!g) {
            add(fmt::format("{}.group: unknown group '{}'", ap, a.group));
            continue;
        }
        const RegionConfig* r = s.find_region(g->region);
        if (!r) continue;
        switch (providers::flavor_of(r->spec.provider)) {
            case Flavor::Fleet:
                if (!fleets_created.insert(g->name).second)
                    add(fmt::format("{}: fleet '{}' cannot be resized after creation", ap, g->name));
                break;
            case Flavor::ScaleSet:
                if (a.size > g->max_size)
                    add(fmt::format("{}.size: {} exceeds max_size {} of '{}'", ap, a.size, g->max_size, g->name));
                break;
            case Flavor::InstanceGroup: break;
        }
    }

    for (std::size_t i = 0; i < s.jobs.size(); ++i) {
        const auto& j = s.jobs[i];
        const std::string jp = fmt::format("workload.jobs[{}]", i);
        if (j.count < 0) add(jp + ".count: must be non-negative");
        if (j.cls == pool::JobClass::Cpu && s.pool.cpu_schedds == 0 && j.count > 0)
            add(jp + ": CPU jobs need at least one CPU schedd");
        if (j.cls != pool::JobClass::Gpu || j.count == 0) continue;
        auto it = s.replicas.find(j.input);
        const bool placed = it != s.replicas.end() &&
                            std::any_of(it->second.begin(), it->second.end(),
                                        [&](const std::string& r) { return provisioned.count(r) > 0; });
        if (!placed)
            add(fmt::format("{}: GPU input class {} has no replica in any provisioned region", jp,
                            workload::to_string(j.input)));
    }
    for (const auto& [cls, regions] : s.replicas)
        for (const auto& r : regions)
            if (!region_ids.count(r))
                add(fmt::format("workload.replicas.{}: unknown region '{}'", workload::to_string(cls), r));

    if (s.shutdown_at && *s.shutdown_at > s.horizon) add("shutdown.t_s: scheduled past the horizon");

    for (std::size_t i = 0; i < s.faults.size(); ++i) {
        const auto& f = s.faults[i];
        const std::string fp = fmt::format("faults[{}]", i);
        if (f.end < f.start) add(fp + ": end_s before start_s");
        if (f.start > s.horizon) add(fp + ".start_s: scheduled past the horizon");
        if (f.stall_fraction < 0 || f.stall_fraction > 1) add(fp + ".stall_fraction: must be in [0, 1]");
        if (f.rogue_per_call < 0) add(fp + ".rogue_per_call: must be non-negative");
        if (f.preemption_rate_per_hour < 0) add(fp + ".rate_per_hour: must be non-negative");
        for (const auto& r : f.regions)
            if (!region_ids.count(r)) add(fmt::format("{}.regions: unknown region '{}'", fp, r));
    }

    for (std::size_t i = 0; i < s.operator_steps.size(); ++i) {
        const auto& o = s.operator_steps[i];
        const std::string op = fmt::format("operator[{}]", i);
        if (o.at > s.horizon) add(op + ".t_s: scheduled past the horizon");
        if (!region_ids.count(o.region)) add(fmt::format("{}.region: unknown region '{}'", op, o.region));
    }
    return p;
}

namespace {

std::int64_t scale_count(std::int64_t n, double f) { return static_cast<std::int64_t>(std::llround(static_cast<double>(n) * f)); }

}  // namespace

Scenario scaled(const Scenario& s, double factor) {
    if (!(factor > 0) || !std::isfinite(factor)) throw ValidationError({"scale: must be a positive number"});
    Scenario out = s;
    out.scale = s.scale * factor;
    for (auto& j : out.jobs) j.count = scale_count(j.count, factor);
    for (auto& r : out.regions) {
        for (auto& [gpu, q] : r.spec.quota) q = scale_count(q, factor);
        r.spec.launch_rate_per_min *= factor;
    }
    for (auto& g : out.groups) g.max_size = scale_count(g.max_size, factor);
    for (auto& a : out.provisioning) a.size = scale_count(a.size, factor);
    return out;
}

}  // namespace gpuburst::scenario
