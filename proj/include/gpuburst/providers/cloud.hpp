#pragma once

#include <array>
#include <deque>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gpuburst/providers/types.hpp"
#include "gpuburst/sim/engine.hpp"

namespace gpuburst::providers {

struct ProvidersConfig {
    sim::SimTime tick = sim::seconds(10);
};

/// Simulated cloud backends: regions with quotas, provisioning groups with
/// per-flavor semantics, the instance state machine, the metadata service and
/// fault injection.
///
/// All mutation happens from the event loop. Every state change is queued as
/// a LifecycleChange; the owner drains them with take_changes().
class CloudProviders {
public:
    CloudProviders(sim::Engine& engine, std::vector<RegionSpec> regions, ProvidersConfig config = {});

    // -- regions ------------------------------------------------------------
    std::size_t region_count() const { return regions_.size(); }
    const RegionSpec& region(RegionIndex r) const { return regions_.at(r); }
    /// Throws UnknownRegion.
    RegionIndex region_index(std::string_view id) const;
    std::int64_t quota(RegionIndex r, GpuModel m) const;
    std::int64_t quota_in_use(RegionIndex r, GpuModel m) const;

    // -- provisioning -------------------------------------------------------
    /// Ephemeral, fixed-size group. More than one GPU model is rejected with
    /// MixedGpuTemplate. The request is clamped to the remaining quota; the
    /// shortfall is recorded in Group::unfulfilled.
    GroupId create_fleet(std::string_view region, std::span<const GpuModel> models, std::int64_t count,
                         std::string name = {});
    GroupId create_fleet(std::string_view region, GpuModel model, std::int64_t count, std::string name = {});

    /// Empty resizable groups, created ahead of time.
    GroupId create_scale_set(std::string_view region, GpuModel model, std::int64_t max_size,
                             std::string name = {});
    GroupId create_instance_group(std::string_view region, GpuModel model, std::string name = {});

    /// Scale-up launches subject to quota; scale-down only marks surplus
    /// members, which keep billing until deallocated. Returns the number of
    /// instances launched or marked.
    std::int64_t resize_scale_set(GroupId group, std::int64_t new_desired);
    /// Sets the target size; shortfalls are (re)launched now and on every tick.
    std::int64_t resize_instance_group(GroupId group, std::int64_t new_desired);

    /// ScaleSet de-provisioning: Running/Stopped -> Deallocated.
    void deallocate_instance(GroupId group, InstanceId instance);
    /// InstanceGroup de-provisioning: terminates and lowers the target size,
    /// so no replacement follows.
    void delete_group_instance(GroupId group, InstanceId instance);
    /// Guest OS shutdown. Fleet: terminates (ephemeral). ScaleSet: Stopped and
    /// still billed. InstanceGroup: terminates and is replaced.
    void system_shutdown(InstanceId instance);
    /// Stopped -> Running.
    void start_instance(InstanceId instance);

    // -- metadata service ---------------------------------------------------
    /// Throws NotProvisioned unless the instance is Booting or Running.
    MetadataRecord query_metadata(InstanceId instance) const;

    // -- periodic + operator ------------------------------------------------
    void provider_tick();
    void add_fault(FaultSpec fault);
    const std::vector<FaultSpec>& faults() const { return faults_; }
    /// Releases requests frozen by a RegionalLimitStall.
    std::int64_t manual_recovery(std::string_view region);
    /// Terminates every rogue instance in the region. Returns how many.
    std::int64_t manual_sweep(std::string_view region);

    std::vector<LifecycleChange> take_changes();

    // -- views --------------------------------------------------------------
    const ProvidersConfig& config() const { return config_; }
    std::size_t instance_count() const { return instances_.size(); }
    std::size_t group_count() const { return groups_.size(); }
    /// Throws UnknownInstance.
    const Instance& instance(InstanceId id) const;
    /// Throws UnknownGroup.
    const Group& group(GroupId id) const;
    GroupId group_by_name(std::string_view name) const;
    std::int64_t live_members(GroupId id) const;
    std::int64_t count_in_state(InstanceState s) const;
    std::int64_t running_non_rogue() const { return running_non_rogue_; }
    std::int64_t rogue_alive() const { return rogue_alive_; }
    const std::vector<InstanceId>& running() const { return running_; }
    const std::vector<AuditRecord>& audit() const { return audit_; }

private:
    Instance& mutable_instance(InstanceId id);
    Group& mutable_group(GroupId id);
    GroupId add_group(Group g);

    InstanceId request_instance(RegionIndex region, GpuModel gpu, GroupId group, std::uint32_t generation);
    void transition(Instance& inst, InstanceState to, EndReason reason = EndReason::None);
    void begin_boot(Instance& inst);
    void promote_requests(RegionIndex region);
    void refill_launch_credit(RegionIndex region);
    std::int64_t quota_room(RegionIndex region, GpuModel gpu) const;
    std::int64_t launch_into(Group& g, std::int64_t n);
    void fill_instance_group(Group& g);
    void remove_member(Group& g, InstanceId id);
    bool stall_active(RegionIndex region) const;
    double stall_fraction(RegionIndex region) const;
    void respawn_if_faulty(const Instance& deprovisioned);
    bool covers(const FaultSpec& f, RegionIndex region) const;
    void audit(GroupId group, Flavor flavor, RegionIndex region, std::string action, std::int64_t count);

    sim::Engine& engine_;
    ProvidersConfig config_;
    std::vector<RegionSpec> regions_;
    std::unordered_map<std::string, RegionIndex> region_ids_;
    std::vector<Instance> instances_;
    std::vector<Group> groups_;
    std::unordered_map<std::string, GroupId> group_names_;
    std::vector<std::int64_t> quota_used_;

    std::vector<std::deque<InstanceId>> pending_;
    std::vector<double> launch_credit_;
    std::vector<sim::SimTime> credit_refilled_at_;
    std::vector<bool> stall_recovered_;

    using BootEntry = std::pair<std::int64_t, InstanceId>;
    std::priority_queue<BootEntry, std::vector<BootEntry>, std::greater<>> booting_;
    std::vector<InstanceId> running_;
    std::vector<std::size_t> running_pos_;
    std::int64_t running_non_rogue_ = 0;
    std::int64_t rogue_alive_ = 0;
    sim::SimTime last_tick_;
    std::array<std::int64_t, 6> state_counts_{};

    std::vector<FaultSpec> faults_;
    std::vector<std::vector<bool>> fault_regions_;
    std::vector<LifecycleChange> changes_;
    std::vector<AuditRecord> audit_;
};

}  // namespace gpuburst::providers
