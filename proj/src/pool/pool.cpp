#include "gpuburst/pool/pool.hpp"

#include <algorithm>
#include <numeric>
#include <queue>

#include <fmt/format.h>

#include "gpuburst/errors.hpp"

namespace gpuburst::pool {

namespace {

std::size_t idx(JobClass c) { return static_cast<std::size_t>(c); }

}  // namespace

std::string_view to_string(JobClass c) { return c == JobClass::Gpu ? "GPU" : "CPU"; }

std::string_view to_string(JobState s) {
    switch (s) {
        case JobState::Idle: return "Idle";
        case JobState::Running: return "Running";
        case JobState::Completed: return "Completed";
        case JobState::Removed: return "Removed";
        case JobState::PreemptedRequeued: return "PreemptedRequeued";
    }
    return "?";
}

Pool::Pool(sim::Engine& engine, const workload::WorkloadModel& workload, std::vector<PoolRegion> regions,
           PoolConfig config)
    : engine_(engine), workload_(workload), regions_(std::move(regions)), config_(config) {
    if (config_.cpu_slots_per_instance < 2) throw ValidationError({"pool.cpu_slots_per_instance must be >= 2"});

    all_regions_lex_.resize(regions_.size());
    std::iota(all_regions_lex_.begin(), all_regions_lex_.end(), RegionIndex{0});
    std::stable_sort(all_regions_lex_.begin(), all_regions_lex_.end(),
                     [&](RegionIndex a, RegionIndex b) { return regions_[a].id < regions_[b].id; });
    lex_rank_.resize(regions_.size());
    for (std::size_t i = 0; i < all_regions_lex_.size(); ++i) lex_rank_[all_regions_lex_[i]] = static_cast<std::uint16_t>(i);

    leaf_busy_until_.assign(regions_.size(), std::vector<sim::SimTime>(config_.collector.leaves_per_region));
    visible_per_region_.assign(regions_.size(), 0);
    for (auto& per_kind : free_) per_kind.resize(regions_.size());

    ScheddId next = 0;
    for (std::uint16_t i = 0; i < config_.gpu_schedds; ++i)
        schedds_.push_back(Schedd{next++, JobClass::Gpu, 0, config_.schedd_cap, 0, {}});
    for (std::uint16_t i = 0; i < config_.cpu_schedds; ++i)
        schedds_.push_back(Schedd{next++, JobClass::Cpu, 0, config_.schedd_cap, 0, {}});
}

// ---------------------------------------------------------------------------
// collector tree

SlotAd& Pool::ensure_slot(InstanceId instance) {
    if (instance >= slots_.size()) slots_.resize(static_cast<std::size_t>(instance) + 1);
    return slots_[instance];
}

const SlotAd* Pool::slot(InstanceId instance) const {
    if (instance >= slots_.size() || slots_[instance].instance == kNoInstance) return nullptr;
    return &slots_[instance];
}

std::uint32_t Pool::register_startd(InstanceId instance, RegionIndex region, GpuModel gpu,
                                    providers::Provider provider) {
    if (region >= regions_.size()) throw UnknownRegion(fmt::format("region index {}", region));
    if (!regions_[region].has_collector || config_.collector.leaves_per_region == 0)
        throw NoLeafInRegion(regions_[region].id);
    SlotAd& s = ensure_slot(instance);
    if (s.present) throw InvalidInstanceState(fmt::format("instance {} already registered", instance));

    s = SlotAd{};
    s.instance = instance;
    s.gpu = gpu;
    s.region = region;
    s.provider = provider;
    s.cpu_slots = config_.cpu_slots_per_instance;
    s.present = true;

    auto rng = engine_.stream("startd/" + std::to_string(instance));
    s.leaf = static_cast<std::uint32_t>(rng.below(config_.collector.leaves_per_region));

    sim::SimTime& busy = leaf_busy_until_[region][s.leaf];
    const sim::SimTime now = engine_.now();
    const sim::SimTime start = std::max(now, busy);
    max_leaf_backlog_ = std::max(max_leaf_backlog_, start - now);
    busy = start + config_.collector.registration_service;
    engine_.schedule(busy, sim::EventKind::StartdHandshake, instance);
    return s.leaf;
}

void Pool::on_handshake(InstanceId instance) {
    if (instance >= slots_.size()) return;
    SlotAd& s = slots_[instance];
    if (!s.present || s.handshake_done) return;
    s.handshake_done = true;
    ++handshaken_slots_;
    engine_.schedule(engine_.now() + config_.collector.forward_latency + regions_[s.region].wan_latency,
                     sim::EventKind::AdVisible, instance);
}

void Pool::on_ad_visible(InstanceId instance) {
    if (instance >= slots_.size()) return;
    SlotAd& s = slots_[instance];
    if (!s.present || !s.handshake_done || s.visible) return;
    s.visible = true;
    ++visible_slots_;
    ++visible_per_region_[s.region];
    if (shutdown_)
        drain(s);
    else
        free_[idx(JobClass::Gpu)][s.region].insert(instance);
}

void Pool::on_instance_lost(InstanceId instance) {
    if (instance >= slots_.size()) return;
    SlotAd& s = slots_[instance];
    if (!s.present) return;
    s.present = false;
    if (s.handshake_done) --handshaken_slots_;
    if (s.visible) {
        --visible_slots_;
        --visible_per_region_[s.region];
    }
    for (auto& per_kind : free_) per_kind[s.region].erase(instance);

    if (s.gpu_job != kNoJob) on_job_terminal(s.gpu_job, TerminalReason::Preempted);
    const std::vector<JobId> cpu = s.cpu_jobs;
    for (JobId j : cpu) on_job_terminal(j, TerminalReason::Preempted);

    s.state = SlotState::Unclaimed;
    s.cpu_enabled = false;
    s.cpu_jobs.clear();
    s.visible = false;
    s.handshake_done = false;
}

// ---------------------------------------------------------------------------
// schedds

const Schedd& Pool::schedd(ScheddId id) const {
    if (id >= schedds_.size()) throw UnknownSchedd(fmt::format("schedd {}", id));
    return schedds_[id];
}

std::vector<ScheddId> Pool::schedds_of(JobClass kind) const {
    std::vector<ScheddId> out;
    for (const auto& s : schedds_)
        if (s.kind == kind) out.push_back(s.id);
    return out;
}

const JobAd& Pool::job(JobId id) const {
    if (id >= jobs_.size()) throw InvalidJobState(fmt::format("unknown job {}", id));
    return jobs_[id];
}

std::uint32_t Pool::intern_requirement(std::vector<RegionIndex> regions, JobClass cls) {
    for (RegionIndex r : regions)
        if (r >= regions_.size()) throw UnknownRegion(fmt::format("region index {}", r));
    std::sort(regions.begin(), regions.end(), [&](RegionIndex a, RegionIndex b) { return lex_rank_[a] < lex_rank_[b]; });
    regions.erase(std::unique(regions.begin(), regions.end()), regions.end());
    for (std::uint32_t i = 0; i < requirements_.size(); ++i)
        if (requirement_class_[i] == cls && requirements_[i] == regions) return i;
    requirements_.push_back(std::move(regions));
    requirement_class_.push_back(cls);
    return static_cast<std::uint32_t>(requirements_.size() - 1);
}

void Pool::enqueue_idle(JobAd& j, bool at_front) {
    Schedd& sd = schedds_[j.schedd];
    if (sd.idle_by_requirement.size() <= j.requirement) sd.idle_by_requirement.resize(j.requirement + 1);
    auto& q = sd.idle_by_requirement[j.requirement];
    if (at_front) {
        q.push_front(j.id);
    } else {
        j.queue_seq = next_queue_seq_++;
        q.push_back(j.id);
    }
    j.queued = true;
    ++sd.idle;
}

std::uint32_t Pool::submit_jobs(ScheddId schedd_id, std::span<const JobSpec> jobs) {
    if (schedd_id >= schedds_.size()) throw UnknownSchedd(fmt::format("schedd {}", schedd_id));
    const JobClass kind = schedds_[schedd_id].kind;
    for (const auto& spec : jobs)
        if (spec.cls != kind)
            throw KindMismatch(fmt::format("{} job submitted to {} schedd {}", to_string(spec.cls), to_string(kind),
                                           schedd_id));
    for (const auto& spec : jobs) {
        JobAd j;
        j.id = static_cast<JobId>(jobs_.size());
        j.cls = spec.cls;
        j.input = spec.input;
        j.requirement = intern_requirement(spec.required_regions, spec.cls);
        j.schedd = schedd_id;
        jobs_.push_back(j);
        enqueue_idle(jobs_.back(), false);
        auto& c = counts_[idx(spec.cls)];
        ++c.submitted;
        ++c.idle;
    }
    return static_cast<std::uint32_t>(jobs.size());
}

std::uint32_t Pool::submit_round_robin(std::span<const JobSpec> jobs) {
    std::array<std::vector<ScheddId>, 2> targets{schedds_of(JobClass::Gpu), schedds_of(JobClass::Cpu)};
    std::uint32_t accepted = 0;
    for (const auto& spec : jobs) {
        const auto& t = targets[idx(spec.cls)];
        if (t.empty()) throw KindMismatch(fmt::format("no {} schedd configured", to_string(spec.cls)));
        std::size_t& cursor = round_robin_cursor_[idx(spec.cls)];
        accepted += submit_jobs(t[cursor % t.size()], std::span<const JobSpec>(&spec, 1));
        ++cursor;
    }
    return accepted;
}

std::uint32_t Pool::remove_idle_jobs(JobClass cls) {
    std::uint32_t removed = 0;
    auto& c = counts_[idx(cls)];
    for (auto& sd : schedds_) {
        if (sd.kind != cls) continue;
        for (auto& q : sd.idle_by_requirement) {
            for (JobId id : q) {
                JobAd& j = jobs_[id];
                j.state = JobState::Removed;
                j.queued = false;
                ++removed;
            }
            q.clear();
        }
        sd.idle = 0;
    }
    c.idle -= removed;
    c.removed += removed;
    return removed;
}

// ---------------------------------------------------------------------------
// negotiator

std::optional<RegionIndex> Pool::offer_region(JobClass kind, std::uint32_t requirement) const {
    const auto& listed = requirements_[requirement];
    const auto& regions = listed.empty() ? all_regions_lex_ : listed;
    const auto& free = free_[idx(kind)];
    for (RegionIndex r : regions) {
        if (config_.negotiator.prefetch_bug) {
            if (visible_per_region_[r] == 0) continue;
            if (free[r].empty()) return std::nullopt;
            return r;
        }
        if (!free[r].empty()) return r;
    }
    return std::nullopt;
}

void Pool::update_cpu_free(SlotAd& s) {
    auto& set = free_[idx(JobClass::Cpu)][s.region];
    const bool has_room = s.present && s.visible && s.cpu_enabled && s.state != SlotState::Draining &&
                          s.cpu_jobs.size() + s.cpu_reserved < s.cpu_slots;
    if (has_room)
        set.insert(s.instance);
    else
        set.erase(s.instance);
}

void Pool::match_kind(JobClass kind, std::vector<Match>& out) {
    using Entry = std::pair<std::uint64_t, ScheddId>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> order;
    for (const auto& sd : schedds_)
        if (sd.kind == kind && sd.idle > 0) order.emplace(sd.running, sd.id);

    while (!order.empty()) {
        auto [load, id] = order.top();
        order.pop();
        Schedd& sd = schedds_[id];
        if (load >= sd.cap || sd.idle == 0) continue;

        std::optional<RegionIndex> region;
        std::uint32_t best_req = 0;
        std::uint64_t best_seq = 0;
        for (std::uint32_t r = 0; r < sd.idle_by_requirement.size(); ++r) {
            const auto& q = sd.idle_by_requirement[r];
            if (q.empty()) continue;
            const std::uint64_t seq = jobs_[q.front()].queue_seq;
            if (region && seq >= best_seq) continue;
            if (auto offered = offer_region(kind, r)) {
                region = offered;
                best_req = r;
                best_seq = seq;
            }
        }
        if (!region) continue;

        auto& q = sd.idle_by_requirement[best_req];
        JobAd& j = jobs_[q.front()];
        q.pop_front();
        --sd.idle;
        j.queued = false;

        auto& free = free_[idx(kind)][*region];
        const InstanceId inst = *free.begin();
        SlotAd& s = slots_[inst];
        j.instance = inst;
        if (kind == JobClass::Gpu) {
            free.erase(free.begin());
            s.reserved_for = j.id;
            s.cpu_enabled = true;
        } else {
            ++s.cpu_reserved;
        }
        update_cpu_free(s);
        out.push_back(Match{j.id, inst});
        order.emplace(load + 1, id);
    }
}

std::vector<Match> Pool::negotiate_cycle() {
    std::vector<Match> out;
    if (shutdown_) return out;
    match_kind(JobClass::Gpu, out);
    match_kind(JobClass::Cpu, out);
    return out;
}

void Pool::release_reservation(JobAd& j) {
    if (j.instance == kNoInstance || j.instance >= slots_.size()) {
        j.instance = kNoInstance;
        return;
    }
    SlotAd& s = slots_[j.instance];
    if (j.cls == JobClass::Gpu) {
        if (s.reserved_for == j.id) {
            s.reserved_for = kNoJob;
            if (s.gpu_job == kNoJob && s.cpu_jobs.empty()) s.cpu_enabled = false;
            if (s.present && s.visible && s.state == SlotState::Unclaimed && s.gpu_job == kNoJob && !shutdown_)
                free_[idx(JobClass::Gpu)][s.region].insert(s.instance);
            update_cpu_free(s);
        }
    } else if (s.cpu_reserved > 0) {
        --s.cpu_reserved;
        update_cpu_free(s);
    }
    j.instance = kNoInstance;
}

void Pool::start_job(JobId id, InstanceId instance) {
    if (id >= jobs_.size()) throw InvalidJobState(fmt::format("unknown job {}", id));
    JobAd& j = jobs_[id];
    if (j.state != JobState::Idle) throw InvalidJobState(fmt::format("job {} is {}", id, to_string(j.state)));
    Schedd& sd = schedds_[j.schedd];

    if (j.queued) {
        auto& q = sd.idle_by_requirement[j.requirement];
        q.erase(std::find(q.begin(), q.end(), id));
        --sd.idle;
        j.queued = false;
    }
    const bool reserved_here = j.instance == instance;
    auto back_to_idle = [&] {
        if (reserved_here) release_reservation(j);
        j.instance = kNoInstance;
        enqueue_idle(j, true);
    };

    SlotAd* s = instance < slots_.size() ? &slots_[instance] : nullptr;
    if (!s || !s->present || !s->visible || s->state == SlotState::Draining) {
        back_to_idle();
        throw SlotVanished(fmt::format("instance {} is gone", instance));
    }
    if (sd.running >= sd.cap) {
        back_to_idle();
        throw CapExceeded(fmt::format("schedd {} at cap {}", sd.id, sd.cap));
    }

    const auto& required = requirements_[j.requirement];
    if (!required.empty() && std::find(required.begin(), required.end(), s->region) == required.end()) {
        ++locality_violations_;
        back_to_idle();
        throw LocalityViolation(fmt::format("job {} cannot run in region {}", id, regions_[s->region].id));
    }

    if (j.cls == JobClass::Gpu) {
        if (s->state != SlotState::Unclaimed || s->gpu_job != kNoJob ||
            (s->reserved_for != kNoJob && s->reserved_for != id)) {
            back_to_idle();
            throw SlotVanished(fmt::format("instance {} GPU slot is not free", instance));
        }
        const std::string& region_name = regions_[s->region].id;
        const auto& endpoint = workload_.resolve_storage(region_name);
        io_operations_ += 2;
        if (endpoint.region != region_name) io_locality_violations_ += 2;

        auto rng = engine_.stream(fmt::format("job/{}/{}", id, j.attempts));
        const sim::SimTime duration = workload_.runtime_for(s->gpu, j.input, rng) + workload_.io_time(j.input, region_name);

        s->reserved_for = kNoJob;
        s->state = SlotState::ClaimedGpu;
        s->gpu_job = id;
        s->cpu_enabled = true;
        free_[idx(JobClass::Gpu)][s->region].erase(instance);
        update_cpu_free(*s);

        j.instance = instance;
        j.state = JobState::Running;
        j.started_at = engine_.now();
        j.completion = engine_.schedule(engine_.now() + duration, sim::EventKind::JobComplete, id,
                                        job_detail(j, *s));
    } else {
        const std::size_t reserved = reserved_here ? 1 : 0;
        if (!s->cpu_enabled || s->cpu_jobs.size() + s->cpu_reserved - reserved >= s->cpu_slots) {
            back_to_idle();
            throw SlotVanished(fmt::format("instance {} has no free CPU slot", instance));
        }
        if (reserved_here) --s->cpu_reserved;
        s->cpu_jobs.push_back(id);
        update_cpu_free(*s);
        j.instance = instance;
        j.state = JobState::Running;
        j.started_at = engine_.now();
    }

    ++sd.running;
    auto& c = counts_[idx(j.cls)];
    --c.idle;
    ++c.running;
}

std::size_t Pool::start_matches(std::span<const Match> matches) {
    std::size_t started = 0;
    for (const auto& m : matches) {
        try {
            start_job(m.job, m.instance);
            ++started;
        } catch (const CapExceeded&) {
        } catch (const SlotVanished&) {
        }
    }
    return started;
}

std::string Pool::job_detail(const JobAd& j, const SlotAd& s) const {
    return fmt::format("gpu={};input={};region={};instance={};schedd={}", workload::to_string(s.gpu),
                       workload::to_string(j.input), regions_[s.region].id, s.instance, j.schedd);
}

void Pool::on_job_terminal(JobId id, TerminalReason reason) {
    if (id >= jobs_.size()) throw InvalidJobState(fmt::format("unknown job {}", id));
    JobAd& j = jobs_[id];
    if (j.state != JobState::Running) throw InvalidJobState(fmt::format("job {} is {}", id, to_string(j.state)));
    Schedd& sd = schedds_[j.schedd];
    auto& c = counts_[idx(j.cls)];
    --sd.running;
    --c.running;

    SlotAd& s = slots_[j.instance];
    if (j.cls == JobClass::Gpu) {
        s.gpu_job = kNoJob;
        if (s.state == SlotState::ClaimedGpu) s.state = SlotState::Unclaimed;
    } else {
        s.cpu_jobs.erase(std::find(s.cpu_jobs.begin(), s.cpu_jobs.end(), id));
    }

    if (reason == TerminalReason::Completed) {
        j.state = JobState::Completed;
        ++c.completed;
    } else {
        engine_.cancel(j.completion);
        j.completion = 0;
        j.state = JobState::PreemptedRequeued;
        ++j.attempts;
        ++c.preemptions;
        j.state = JobState::Idle;
        j.instance = kNoInstance;
        ++c.idle;
        enqueue_idle(j, false);
    }

    if (!s.present) return;
    if (j.cls == JobClass::Gpu) {
        if (shutdown_) {
            drain(s);
            return;
        }
        if (s.visible && s.reserved_for == kNoJob) free_[idx(JobClass::Gpu)][s.region].insert(s.instance);
    }
    update_cpu_free(s);
}

void Pool::drain(SlotAd& s) {
    if (s.state == SlotState::Draining) return;
    s.state = SlotState::Draining;
    for (auto& per_kind : free_) per_kind[s.region].erase(s.instance);
    auto& c = counts_[idx(JobClass::Cpu)];
    for (JobId id : s.cpu_jobs) {
        JobAd& j = jobs_[id];
        --schedds_[j.schedd].running;
        --c.running;
        ++c.removed;
        j.state = JobState::Removed;
    }
    s.cpu_jobs.clear();
    s.cpu_reserved = 0;
    s.cpu_enabled = false;
    if (drain_handler_) drain_handler_(s.instance);
}

void Pool::begin_shutdown() {
    if (shutdown_) return;
    shutdown_ = true;
    remove_idle_jobs(JobClass::Gpu);
    for (auto& s : slots_)
        if (s.present && s.visible && s.gpu_job == kNoJob && s.reserved_for == kNoJob) drain(s);
}

}  // namespace gpuburst::pool
