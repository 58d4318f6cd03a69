#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "gpuburst/ids.hpp"
#include "gpuburst/providers/types.hpp"
#include "gpuburst/sim/engine.hpp"
#include "gpuburst/workload/workload.hpp"

namespace gpuburst::pool {

using workload::GpuModel;
using workload::InputClass;

enum class JobClass : std::uint8_t { Gpu, Cpu };
enum class JobState : std::uint8_t { Idle, Running, Completed, Removed, PreemptedRequeued };
enum class SlotState : std::uint8_t { Unclaimed, ClaimedGpu, Draining };
enum class TerminalReason : std::uint8_t { Completed, Preempted };

std::string_view to_string(JobClass c);
std::string_view to_string(JobState s);

/// What a submitter provides. Empty `required_regions` means any region.
struct JobSpec {
    JobClass cls = JobClass::Gpu;
    InputClass input = InputClass::Standard;
    std::vector<RegionIndex> required_regions;
};

struct JobAd {
    JobId id = kNoJob;
    JobClass cls = JobClass::Gpu;
    InputClass input = InputClass::Standard;
    std::uint32_t requirement = 0;
    ScheddId schedd = 0;
    JobState state = JobState::Idle;
    InstanceId instance = kNoInstance;
    std::uint32_t attempts = 0;
    std::uint64_t queue_seq = 0;
    bool queued = false;
    sim::EventId completion = 0;
    sim::SimTime started_at;
};

/// One startd: a single GPU slot plus `cpu_slots` CPU slots that open up
/// once the GPU slot has been claimed.
struct SlotAd {
    InstanceId instance = kNoInstance;
    GpuModel gpu = GpuModel::V100;
    RegionIndex region = 0;
    providers::Provider provider = providers::Provider::A;
    std::uint16_t gpu_slots = 1;
    std::uint16_t cpu_slots = 2;
    SlotState state = SlotState::Unclaimed;
    JobId gpu_job = kNoJob;
    JobId reserved_for = kNoJob;
    std::uint16_t cpu_reserved = 0;
    std::vector<JobId> cpu_jobs;
    bool cpu_enabled = false;
    std::uint32_t leaf = 0;
    bool present = false;
    bool handshake_done = false;
    bool visible = false;
};

struct Schedd {
    ScheddId id = 0;
    JobClass kind = JobClass::Gpu;
    std::uint32_t running = 0;
    std::uint32_t cap = 12000;
    std::uint64_t idle = 0;
    /// Idle jobs per requirement, each in queue order.
    std::vector<std::deque<JobId>> idle_by_requirement;
};

struct CollectorConfig {
    std::uint32_t leaves_per_region = 20;
    sim::SimTime registration_service = sim::SimTime::from_ms(50);
    sim::SimTime forward_latency = sim::seconds(2);
};

struct NegotiatorConfig {
    sim::SimTime cycle_period = sim::seconds(60);
    /// Reproduces the prefetch defect: each request is only offered slots
    /// from the lexicographically first of its regions that hosts any slot.
    bool prefetch_bug = false;
};

struct PoolConfig {
    std::uint16_t gpu_schedds = 10;
    std::uint16_t cpu_schedds = 20;
    std::uint32_t schedd_cap = 12000;
    std::uint16_t cpu_slots_per_instance = 2;
    CollectorConfig collector;
    NegotiatorConfig negotiator;
};

struct PoolRegion {
    std::string id;
    sim::SimTime wan_latency;
    /// False models a region without a leaf-collector node.
    bool has_collector = true;
};

struct Match {
    JobId job = kNoJob;
    InstanceId instance = kNoInstance;
};

struct ClassCounts {
    std::uint64_t submitted = 0;
    std::uint64_t idle = 0;
    std::uint64_t running = 0;
    std::uint64_t completed = 0;
    std::uint64_t removed = 0;
    std::uint64_t preemptions = 0;

    bool conserved() const { return submitted == idle + running + completed + removed; }
};

/// The workload management system: collector tree, sharded schedds and the
/// fair-share negotiator. Schedules its own handshake, ad-visibility and job
/// completion events; the owner routes those events back in.
class Pool {
public:
    Pool(sim::Engine& engine, const workload::WorkloadModel& workload, std::vector<PoolRegion> regions,
         PoolConfig config = {});

    const PoolConfig& config() const { return config_; }

    // -- collector tree -------------------------------------------------------
    /// Attaches the startd to a uniformly random leaf in its region and
    /// queues the handshake there. Returns the leaf index.
    std::uint32_t register_startd(InstanceId instance, RegionIndex region, GpuModel gpu,
                                  providers::Provider provider);
    void on_handshake(InstanceId instance);
    void on_ad_visible(InstanceId instance);
    /// The instance left (preempted, stopped, de-provisioned). Running jobs on
    /// it are requeued.
    void on_instance_lost(InstanceId instance);

    // -- schedds ---------------------------------------------------------------
    std::size_t schedd_count() const { return schedds_.size(); }
    const Schedd& schedd(ScheddId id) const;
    std::vector<ScheddId> schedds_of(JobClass kind) const;
    /// Throws KindMismatch if any job's class differs from the schedd's kind.
    std::uint32_t submit_jobs(ScheddId schedd, std::span<const JobSpec> jobs);
    /// Deals the batch round-robin across every schedd of the batch's class.
    std::uint32_t submit_round_robin(std::span<const JobSpec> jobs);

    // -- negotiator ------------------------------------------------------------
    /// One matchmaking pass. Matched slots are reserved for their job until
    /// start_job runs.
    std::vector<Match> negotiate_cycle();
    /// Throws CapExceeded or SlotVanished; in both cases the job stays Idle at
    /// the head of its queue.
    void start_job(JobId job, InstanceId instance);
    /// start_job over a batch, absorbing the recoverable errors. Returns how
    /// many started.
    std::size_t start_matches(std::span<const Match> matches);

    std::uint32_t remove_idle_jobs(JobClass cls);
    void on_job_terminal(JobId job, TerminalReason reason);

    /// Controlled shutdown: idle GPU jobs are removed and every instance is
    /// handed to the drain handler once its GPU slot is free.
    void begin_shutdown();
    bool shutdown_active() const { return shutdown_; }
    void set_drain_handler(std::function<void(InstanceId)> handler) { drain_handler_ = std::move(handler); }

    // -- views -------------------------------------------------------------------
    const JobAd& job(JobId id) const;
    std::size_t job_count() const { return jobs_.size(); }
    const SlotAd* slot(InstanceId instance) const;
    const ClassCounts& counts(JobClass cls) const { return counts_[static_cast<std::size_t>(cls)]; }
    std::uint64_t visible_slots() const { return visible_slots_; }
    std::uint64_t handshaken_slots() const { return handshaken_slots_; }
    /// Longest wait any startd spent queued at a leaf before its handshake.
    sim::SimTime max_leaf_backlog() const { return max_leaf_backlog_; }
    std::uint64_t locality_violations() const { return locality_violations_; }
    std::uint64_t io_operations() const { return io_operations_; }
    std::uint64_t io_locality_violations() const { return io_locality_violations_; }
    const std::vector<std::vector<RegionIndex>>& requirements() const { return requirements_; }

private:
    std::uint32_t intern_requirement(std::vector<RegionIndex> regions, JobClass cls);
    SlotAd& ensure_slot(InstanceId instance);
    void enqueue_idle(JobAd& job, bool at_front);
    void release_reservation(JobAd& job);
    void update_cpu_free(SlotAd& s);
    void drain(SlotAd& s);
    void match_kind(JobClass kind, std::vector<Match>& out);
    std::optional<RegionIndex> offer_region(JobClass kind, std::uint32_t requirement) const;
    std::string job_detail(const JobAd& job, const SlotAd& s) const;

    sim::Engine& engine_;
    const workload::WorkloadModel& workload_;
    std::vector<PoolRegion> regions_;
    std::vector<std::uint16_t> lex_rank_;
    PoolConfig config_;

    std::vector<JobAd> jobs_;
    std::vector<Schedd> schedds_;
    std::vector<std::vector<RegionIndex>> requirements_;
    std::vector<JobClass> requirement_class_;
    std::uint64_t next_queue_seq_ = 0;
    std::array<ClassCounts, 2> counts_{};

    std::vector<SlotAd> slots_;
    std::vector<std::vector<sim::SimTime>> leaf_busy_until_;
    std::vector<std::uint32_t> visible_per_region_;
    std::vector<RegionIndex> all_regions_lex_;
    // free_[kind][region]: instances with a free slot of that kind.
    std::array<std::vector<std::set<InstanceId>>, 2> free_;
    std::uint64_t visible_slots_ = 0;
    std::uint64_t handshaken_slots_ = 0;
    sim::SimTime max_leaf_backlog_;
    std::uint64_t locality_violations_ = 0;
    std::uint64_t io_operations_ = 0;
    std::uint64_t io_locality_violations_ = 0;

    bool shutdown_ = false;
    std::function<void(InstanceId)> drain_handler_;
    std::size_t round_robin_cursor_[2] = {0, 0};
};

}  // namespace gpuburst::pool
