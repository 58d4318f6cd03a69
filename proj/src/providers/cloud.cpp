#include "gpuburst/providers/cloud.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gpuburst/errors.hpp"

namespace gpuburst::providers {
namespace {

std::size_t quota_slot(RegionIndex r, GpuModel m) {
    return static_cast<std::size_t>(r) * workload::kGpuModelCount + workload::index_of(m);
}

std::string describe(InstanceId id) {
    return "instance " + std::to_string(id);
}

}  // namespace

CloudProviders::CloudProviders(sim::Engine& engine, std::vector<RegionSpec> regions, ProvidersConfig config)
    : engine_(engine), config_(config), regions_(std::move(regions)) {
    for (std::size_t i = 0; i < regions_.size(); ++i) {
        const auto [it, fresh] = region_ids_.emplace(regions_[i].id, static_cast<RegionIndex>(i));
        if (!fresh) throw UnknownRegion("duplicate region id '" + regions_[i].id + "'");
    }
    quota_used_.assign(regions_.size() * workload::kGpuModelCount, 0);
    pending_.resize(regions_.size());
    launch_credit_.resize(regions_.size());
    credit_refilled_at_.assign(regions_.size(), engine_.now());
    stall_recovered_.assign(regions_.size(), false);
    for (std::size_t i = 0; i < regions_.size(); ++i) {
        const double rate = regions_[i].launch_rate_per_min;
        launch_credit_[i] = std::max(1.0, rate / 60.0 * config_.tick.seconds());
    }
    last_tick_ = engine_.now();
}

// -- regions ----------------------------------------------------------------

RegionIndex CloudProviders::region_index(std::string_view id) const {
    auto it = region_ids_.find(std::string(id));
    if (it == region_ids_.end()) throw UnknownRegion("unknown region '" + std::string(id) + "'");
    return it->second;
}

std::int64_t CloudProviders::quota(RegionIndex r, GpuModel m) const {
    const auto& q = regions_.at(r).quota;
    auto it = q.find(m);
    return it == q.end() ? 0 : it->second;
}

std::int64_t CloudProviders::quota_in_use(RegionIndex r, GpuModel m) const {
    return quota_used_[quota_slot(r, m)];
}

std::int64_t CloudProviders::quota_room(RegionIndex r, GpuModel m) const {
    return std::max<std::int64_t>(0, quota(r, m) - quota_in_use(r, m));
}

// -- bookkeeping --------------------------------------------------------------

Instance& CloudProviders::mutable_instance(InstanceId id) {
    if (id >= instances_.size()) throw UnknownInstance("unknown " + describe(id));
    return instances_[id];
}

const Instance& CloudProviders::instance(InstanceId id) const {
    if (id >= instances_.size()) throw UnknownInstance("unknown " + describe(id));
    return instances_[id];
}

Group& CloudProviders::mutable_group(GroupId id) {
    if (id >= groups_.size()) throw UnknownGroup("unknown group " + std::to_string(id));
    return groups_[id];
}

const Group& CloudProviders::group(GroupId id) const {
    if (id >= groups_.size()) throw UnknownGroup("unknown group " + std::to_string(id));
    return groups_[id];
}

GroupId CloudProviders::group_by_name(std::string_view name) const {
    auto it = group_names_.find(std::string(name));
    if (it == group_names_.end()) throw UnknownGroup("unknown group '" + std::string(name) + "'");
    return it->second;
}

std::int64_t CloudProviders::live_members(GroupId id) const {
    return static_cast<std::int64_t>(group(id).members.size());
}

std::int64_t CloudProviders::count_in_state(InstanceState s) const {
    return state_counts_[static_cast<std::size_t>(s)];
}

GroupId CloudProviders::add_group(Group g) {
    g.id = static_cast<GroupId>(groups_.size());
    if (g.name.empty()) g.name = "group-" + std::to_string(g.id);
    const auto [it, fresh] = group_names_.emplace(g.name, g.id);
    if (!fresh) throw UnknownGroup("duplicate group name '" + g.name + "'");
    groups_.push_back(std::move(g));
    return groups_.back().id;
}

void CloudProviders::audit(GroupId group, Flavor flavor, RegionIndex region, std::string action,
                           std::int64_t count) {
    audit_.push_back(AuditRecord{engine_.now(), group, flavor, regions_[region].id, std::move(action), count});
}

bool CloudProviders::covers(const FaultSpec& f, RegionIndex region) const {
    const auto idx = static_cast<std::size_t>(&f - faults_.data());
    return fault_regions_[idx][region];
}

InstanceId CloudProviders::request_instance(RegionIndex region, GpuModel gpu, GroupId group,
                                            std::uint32_t generation) {
    const auto id = static_cast<InstanceId>(instances_.size());
    Instance inst;
    inst.id = id;
    inst.group = group;
    inst.region = region;
    inst.gpu = gpu;
    inst.generation = generation;
    inst.requested_at = engine_.now();
    inst.rng = sim::RngStream(engine_.seed(), "instance/" + std::to_string(id));
    instances_.push_back(inst);
    running_pos_.push_back(0);
    ++state_counts_[static_cast<std::size_t>(InstanceState::Requested)];
    ++quota_used_[quota_slot(region, gpu)];
    changes_.push_back(LifecycleChange{id, InstanceState::Requested, InstanceState::Requested});
    return id;
}

void CloudProviders::transition(Instance& inst, InstanceState to, EndReason reason) {
    const InstanceState from = inst.state;
    if (!is_legal(from, to)) {
        throw IllegalTransition(describe(inst.id) + ": " + std::string(to_string(from)) + " -> " +
                                std::string(to_string(to)));
    }
    LifecycleChange change{inst.id, from, to, reason};

    --state_counts_[static_cast<std::size_t>(from)];
    ++state_counts_[static_cast<std::size_t>(to)];
    if (holds_quota(from) != holds_quota(to)) {
        quota_used_[quota_slot(inst.region, inst.gpu)] += holds_quota(to) ? 1 : -1;
    }
    if (!is_billable(from) && is_billable(to)) inst.billable_since = engine_.now();
    if (is_billable(from) && !is_billable(to)) {
        change.billing_stopped = true;
        change.billable_from = inst.billable_since;
    }
    if (from == InstanceState::Running) {
        const std::size_t pos = running_pos_[inst.id];
        const InstanceId moved = running_.back();
        running_[pos] = moved;
        running_pos_[moved] = pos;
        running_.pop_back();
        if (!inst.rogue) --running_non_rogue_;
    }
    if (to == InstanceState::Running) {
        running_pos_[inst.id] = running_.size();
        running_.push_back(inst.id);
        if (!inst.rogue) ++running_non_rogue_;
    }
    if (to == InstanceState::Terminated || to == InstanceState::Deallocated) {
        inst.end_reason = reason;
        if (inst.rogue) --rogue_alive_;
    }
    inst.state = to;
    changes_.push_back(change);
}

void CloudProviders::begin_boot(Instance& inst) {
    transition(inst, InstanceState::Booting);
    const auto& boot = regions_[inst.region].boot;
    const double delay = boot.sigma > 0 ? inst.rng.lognormal(boot.median_s, boot.sigma) : boot.median_s;
    inst.boot_ready_at = engine_.now() + sim::seconds(delay);
    booting_.emplace(inst.boot_ready_at.ms(), inst.id);
}

bool CloudProviders::stall_active(RegionIndex region) const {
    if (stall_recovered_[region]) return false;
    for (const auto& f : faults_) {
        if (f.kind == FaultKind::RegionalLimitStall && f.active_at(engine_.now()) && covers(f, region)) return true;
    }
    return false;
}

double CloudProviders::stall_fraction(RegionIndex region) const {
    double frac = 0;
    for (const auto& f : faults_) {
        if (f.kind == FaultKind::RegionalLimitStall && f.active_at(engine_.now()) && covers(f, region)) {
            frac = std::max(frac, f.stall_fraction);
        }
    }
    return frac;
}

void CloudProviders::refill_launch_credit(RegionIndex region) {
    const double rate = regions_[region].launch_rate_per_min;
    if (rate <= 0) return;
    const double burst = std::max(1.0, rate / 60.0 * config_.tick.seconds());
    const double elapsed = (engine_.now() - credit_refilled_at_[region]).seconds();
    launch_credit_[region] = std::min(burst, launch_credit_[region] + rate / 60.0 * elapsed);
    credit_refilled_at_[region] = engine_.now();
}

void CloudProviders::promote_requests(RegionIndex region) {
    auto& queue = pending_[region];
    if (queue.empty()) return;
    refill_launch_credit(region);
    const double rate = regions_[region].launch_rate_per_min;
    const bool stalled = stall_active(region);
    const double frozen_fraction = stalled ? stall_fraction(region) : 0.0;

    std::deque<InstanceId> kept;
    while (!queue.empty()) {
        const InstanceId id = queue.front();
        Instance& inst = instances_[id];
        if (inst.state != InstanceState::Requested) {
            queue.pop_front();
            continue;
        }
        if (!stalled) {
            inst.frozen = false;
        } else if (!inst.stall_checked) {
            inst.stall_checked = true;
            inst.frozen = inst.rng.bernoulli(frozen_fraction);
        }
        if (inst.frozen) {
            kept.push_back(id);
            queue.pop_front();
            continue;
        }
        if (rate > 0 && launch_credit_[region] < 1.0) break;
        if (rate > 0) launch_credit_[region] -= 1.0;
        queue.pop_front();
        begin_boot(inst);
    }
    // Frozen requests keep their place ahead of anything not yet examined.
    for (auto it = kept.rbegin(); it != kept.rend(); ++it) queue.push_front(*it);
}

std::int64_t CloudProviders::launch_into(Group& g, std::int64_t n) {
    if (n <= 0) return 0;
    std::int64_t k = std::min(n, quota_room(g.region, g.gpu));
    if (g.flavor == Flavor::ScaleSet) {
        k = std::min(k, g.max_size - static_cast<std::int64_t>(g.members.size()));
    }
    k = std::max<std::int64_t>(k, 0);
    for (std::int64_t i = 0; i < k; ++i) {
        std::uint32_t generation = 0;
        if (!g.owed_generations.empty()) {
            generation = g.owed_generations.front();
            g.owed_generations.erase(g.owed_generations.begin());
        }
        const InstanceId id = request_instance(g.region, g.gpu, g.id, generation);
        g.members.push_back(id);
        pending_[g.region].push_back(id);
    }
    promote_requests(g.region);
    return k;
}

void CloudProviders::remove_member(Group& g, InstanceId id) {
    auto it = std::find(g.members.begin(), g.members.end(), id);
    if (it != g.members.end()) g.members.erase(it);
}

void CloudProviders::fill_instance_group(Group& g) {
    const auto shortfall = g.desired - static_cast<std::int64_t>(g.members.size());
    if (shortfall <= 0) return;
    const auto launched = launch_into(g, shortfall);
    if (launched > 0) audit(g.id, g.flavor, g.region, "replace", launched);
}

// -- provisioning -------------------------------------------------------------

GroupId CloudProviders::create_fleet(std::string_view region, std::span<const GpuModel> models, std::int64_t count,
                                     std::string name) {
    if (models.size() != 1) {
        throw MixedGpuTemplate("fleet templates must name exactly one GPU model, got " +
                               std::to_string(models.size()));
    }
    const RegionIndex r = region_index(region);
    Group g;
    g.name = std::move(name);
    g.flavor = Flavor::Fleet;
    g.region = r;
    g.gpu = models.front();
    g.desired = count;
    const GroupId id = add_group(std::move(g));
    Group& fleet = groups_[id];
    const auto launched = launch_into(fleet, count);
    fleet.unfulfilled = count - launched;
    audit(id, Flavor::Fleet, r, "create_fleet", launched);
    return id;
}

GroupId CloudProviders::create_fleet(std::string_view region, GpuModel model, std::int64_t count, std::string name) {
    const GpuModel one[] = {model};
    return create_fleet(region, one, count, std::move(name));
}

GroupId CloudProviders::create_scale_set(std::string_view region, GpuModel model, std::int64_t max_size,
                                         std::string name) {
    Group g;
    g.name = std::move(name);
    g.flavor = Flavor::ScaleSet;
    g.region = region_index(region);
    g.gpu = model;
    g.max_size = max_size;
    return add_group(std::move(g));
}

GroupId CloudProviders::create_instance_group(std::string_view region, GpuModel model, std::string name) {
    Group g;
    g.name = std::move(name);
    g.flavor = Flavor::InstanceGroup;
    g.region = region_index(region);
    g.gpu = model;
    return add_group(std::move(g));
}

std::int64_t CloudProviders::resize_scale_set(GroupId group_id, std::int64_t new_desired) {
    Group& g = mutable_group(group_id);
    if (g.flavor != Flavor::ScaleSet) throw NotAScaleSet(g.name + " is a " + std::string(to_string(g.flavor)));
    if (new_desired < 0 || new_desired > g.max_size) {
        throw ExceedsMaxSize(g.name + ": size " + std::to_string(new_desired) + " outside [0, " +
                             std::to_string(g.max_size) + "]");
    }
    std::vector<InstanceId> active;
    std::vector<InstanceId> surplus;
    for (InstanceId id : g.members) (instances_[id].surplus ? surplus : active).push_back(id);
    const auto current = static_cast<std::int64_t>(active.size());

    std::int64_t delta = 0;
    if (new_desired > current) {
        std::int64_t need = new_desired - current;
        // Reclaim marked instances before launching new ones, newest mark first.
        while (need > 0 && !surplus.empty()) {
            instances_[surplus.back()].surplus = false;
            surplus.pop_back();
            --need;
            ++delta;
        }
        const auto launched = launch_into(g, need);
        g.unfulfilled += need - launched;
        delta += launched;
    } else if (new_desired < current) {
        for (std::int64_t i = 0; i < current - new_desired; ++i) {
            instances_[active[active.size() - 1 - static_cast<std::size_t>(i)]].surplus = true;
            ++delta;
        }
    }
    g.desired = new_desired;
    audit(group_id, g.flavor, g.region, "resize", new_desired);
    return delta;
}

std::int64_t CloudProviders::resize_instance_group(GroupId group_id, std::int64_t new_desired) {
    Group& g = mutable_group(group_id);
    if (g.flavor != Flavor::InstanceGroup) {
        throw NotAnInstanceGroup(g.name + " is a " + std::string(to_string(g.flavor)));
    }
    if (new_desired < 0) throw ExceedsMaxSize(g.name + ": negative size");
    g.desired = new_desired;
    audit(group_id, g.flavor, g.region, "resize", new_desired);
    const auto shortfall = g.desired - static_cast<std::int64_t>(g.members.size());
    if (shortfall <= 0) return 0;
    const auto launched = launch_into(g, shortfall);
    g.unfulfilled += shortfall - launched;
    return launched;
}

void CloudProviders::deallocate_instance(GroupId group_id, InstanceId id) {
    Group& g = mutable_group(group_id);
    if (g.flavor != Flavor::ScaleSet) throw NotAScaleSet(g.name + " is a " + std::string(to_string(g.flavor)));
    if (std::find(g.members.begin(), g.members.end(), id) == g.members.end()) {
        throw UnknownInstance(describe(id) + " is not a member of " + g.name);
    }
    Instance& inst = instances_[id];
    if (inst.state != InstanceState::Running && inst.state != InstanceState::Stopped) {
        throw InvalidInstanceState(describe(id) + " is " + std::string(to_string(inst.state)));
    }
    transition(inst, InstanceState::Deallocated, EndReason::Deallocated);
    remove_member(g, id);
    if (!inst.surplus) g.desired = std::max<std::int64_t>(0, g.desired - 1);
    audit(group_id, g.flavor, g.region, "deallocate", 1);
    respawn_if_faulty(inst);
}

void CloudProviders::delete_group_instance(GroupId group_id, InstanceId id) {
    Group& g = mutable_group(group_id);
    if (g.flavor != Flavor::InstanceGroup) {
        throw NotAnInstanceGroup(g.name + " is a " + std::string(to_string(g.flavor)));
    }
    if (std::find(g.members.begin(), g.members.end(), id) == g.members.end()) {
        throw UnknownInstance(describe(id) + " is not a member of " + g.name);
    }
    Instance& inst = instances_[id];
    const EndReason reason = inst.state == InstanceState::Running ? EndReason::Deleted : EndReason::Cancelled;
    transition(inst, InstanceState::Terminated, reason);
    remove_member(g, id);
    g.desired = std::max<std::int64_t>(0, g.desired - 1);
    audit(group_id, g.flavor, g.region, "delete", 1);
    respawn_if_faulty(inst);
}

void CloudProviders::system_shutdown(InstanceId id) {
    Instance& inst = mutable_instance(id);
    if (inst.rogue) throw InvalidInstanceState(describe(id) + " is rogue and outside automation control");
    if (inst.state != InstanceState::Running) {
        throw InvalidInstanceState(describe(id) + " is " + std::string(to_string(inst.state)));
    }
    Group& g = groups_[inst.group];
    switch (g.flavor) {
        case Flavor::Fleet:
            transition(inst, InstanceState::Terminated, EndReason::SystemShutdown);
            remove_member(g, id);
            break;
        case Flavor::ScaleSet:
            // The VM is stopped but keeps its allocation, and its bill.
            transition(inst, InstanceState::Stopped);
            break;
        case Flavor::InstanceGroup:
            transition(inst, InstanceState::Terminated, EndReason::SystemShutdown);
            remove_member(g, id);
            g.owed_generations.push_back(inst.generation + 1);
            break;
    }
}

void CloudProviders::start_instance(InstanceId id) {
    Instance& inst = mutable_instance(id);
    if (inst.state != InstanceState::Stopped) {
        throw InvalidInstanceState(describe(id) + " is " + std::string(to_string(inst.state)));
    }
    transition(inst, InstanceState::Running);
}

void CloudProviders::respawn_if_faulty(const Instance& deprovisioned) {
    const RegionIndex r = deprovisioned.region;
    const GpuModel gpu = deprovisioned.gpu;
    std::int64_t spawned = 0;
    for (const auto& f : faults_) {
        if (f.kind != FaultKind::DeprovisionRespawnBug || !f.active_at(engine_.now()) || !covers(f, r)) continue;
        const auto n = std::min(f.rogue_per_call, quota_room(r, gpu));
        for (std::int64_t i = 0; i < n; ++i) {
            const InstanceId id = request_instance(r, gpu, kNoGroup, 0);
            instances_[id].rogue = true;
            ++rogue_alive_;
            begin_boot(instances_[id]);
            ++spawned;
        }
    }
    if (spawned > 0) audit(kNoGroup, flavor_of(regions_[r].provider), r, "rogue_spawn", spawned);
}

// -- metadata -----------------------------------------------------------------

MetadataRecord CloudProviders::query_metadata(InstanceId id) const {
    const Instance& inst = instance(id);
    if (inst.state != InstanceState::Booting && inst.state != InstanceState::Running) {
        throw NotProvisioned(describe(id) + " is " + std::string(to_string(inst.state)));
    }
    const auto& region = regions_[inst.region];
    return MetadataRecord{id, region.provider, region.id};
}

// -- periodic + operator ----------------------------------------------------

void CloudProviders::add_fault(FaultSpec fault) {
    std::vector<bool> mask(regions_.size(), fault.regions.empty());
    for (const auto& r : fault.regions) mask[region_index(r)] = true;
    faults_.push_back(std::move(fault));
    fault_regions_.push_back(std::move(mask));
}

void CloudProviders::provider_tick() {
    const sim::SimTime now = engine_.now();
    const double dt_hours = (now - last_tick_).hours();
    last_tick_ = now;

    for (std::size_t r = 0; r < regions_.size(); ++r) promote_requests(static_cast<RegionIndex>(r));

    while (!booting_.empty() && booting_.top().first <= now.ms()) {
        Instance& inst = instances_[booting_.top().second];
        booting_.pop();
        if (inst.state == InstanceState::Booting) transition(inst, InstanceState::Running);
    }

    if (dt_hours > 0) {
        std::vector<double> rate(regions_.size(), 0.0);
        bool any = false;
        for (const auto& f : faults_) {
            if (f.kind != FaultKind::Preemption || !f.active_at(now)) continue;
            for (std::size_t r = 0; r < regions_.size(); ++r) {
                if (covers(f, static_cast<RegionIndex>(r))) {
                    rate[r] += f.preemption_rate_per_hour;
                    any = true;
                }
            }
        }
        if (any) {
            std::vector<double> prob(regions_.size());
            for (std::size_t r = 0; r < regions_.size(); ++r) prob[r] = 1.0 - std::exp(-rate[r] * dt_hours);
            // Each instance draws from its own stream, so visiting order does not
            // affect outcomes; victims are applied in ascending id order.
            std::vector<InstanceId> victims;
            for (InstanceId id : running_) {
                Instance& inst = instances_[id];
                if (inst.rogue || prob[inst.region] <= 0) continue;
                if (inst.rng.bernoulli(prob[inst.region])) victims.push_back(id);
            }
            std::sort(victims.begin(), victims.end());
            for (InstanceId id : victims) {
                Instance& inst = instances_[id];
                transition(inst, InstanceState::Terminated, EndReason::Preempted);
                Group& g = groups_[inst.group];
                remove_member(g, id);
                if (g.flavor == Flavor::InstanceGroup) g.owed_generations.push_back(inst.generation + 1);
            }
        }
    }

    for (auto& g : groups_) {
        if (g.flavor == Flavor::InstanceGroup) fill_instance_group(g);
    }
}

std::int64_t CloudProviders::manual_recovery(std::string_view region) {
    const RegionIndex r = region_index(region);
    stall_recovered_[r] = true;
    std::int64_t released = 0;
    for (InstanceId id : pending_[r]) {
        if (instances_[id].frozen) {
            instances_[id].frozen = false;
            ++released;
        }
    }
    audit(kNoGroup, flavor_of(regions_[r].provider), r, "manual_recovery", released);
    promote_requests(r);
    return released;
}

std::int64_t CloudProviders::manual_sweep(std::string_view region) {
    const RegionIndex r = region_index(region);
    std::int64_t swept = 0;
    for (auto& inst : instances_) {
        if (!inst.rogue || inst.region != r) continue;
        if (inst.state == InstanceState::Terminated) continue;
        transition(inst, InstanceState::Terminated, EndReason::Swept);
        ++swept;
    }
    audit(kNoGroup, flavor_of(regions_[r].provider), r, "manual_sweep", swept);
    return swept;
}

std::vector<LifecycleChange> CloudProviders::take_changes() {
    std::vector<LifecycleChange> out;
    out.swap(changes_);
    return out;
}

}  // namespace gpuburst::providers
