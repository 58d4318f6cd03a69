#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "gpuburst/ids.hpp"
#include "gpuburst/sim/rng.hpp"
#include "gpuburst/sim/time.hpp"

namespace gpuburst::sim {

using EventId = std::uint64_t;

enum class EventKind : std::uint8_t {
    ProviderTick,
    NegotiatorTick,
    Sample,
    ProvisionAction,
    InstanceState,
    StartdHandshake,
    AdVisible,
    JobComplete,
    ShutdownStart,
    ManualRecovery,
    ManualSweep,
    FaultWindow,
};

inline constexpr int kEventKindCount = 12;

std::string_view to_string(EventKind kind);
/// Throws UnknownEventKind for names outside the enumeration.
EventKind parse_event_kind(std::string_view name);
bool is_valid(EventKind kind);

struct Event {
    SimTime at;
    EventId seq = 0;
    EventKind kind = EventKind::ProviderTick;
    EntityId target = 0;
    std::string detail;
};

using EventTrace = std::vector<Event>;

/// Single-threaded discrete-event core: virtual clock, FIFO-stable priority
/// queue and the per-run seed from which every entity derives its stream.
class Engine {
public:
    using Handler = std::function<void(const Event&)>;

    explicit Engine(std::uint64_t seed = 0) : seed_(seed) {}

    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    /// Enqueue an event. Equal timestamps dispatch in insertion order.
    EventId schedule(SimTime at, EventKind kind, EntityId target, std::string detail = {});

    /// Drop a pending event; it will neither dispatch nor appear in a trace.
    /// Unknown or already-dispatched ids are ignored.
    void cancel(EventId id);

    /// Dispatch every event with `at <= t_end`. Returns the dispatched events
    /// in order. Stops early when the queue drains.
    EventTrace run_until(SimTime t_end);

    void set_handler(Handler h) { handler_ = std::move(h); }

    SimTime now() const { return now_; }
    std::uint64_t seed() const { return seed_; }
    std::optional<SimTime> next_time();

    RngStream stream(std::string_view label) const { return RngStream(seed_, label); }
    RngStream stream(std::uint64_t key) const { return RngStream(seed_, key); }

private:
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            if (a.at != b.at) return a.at > b.at;
            return a.seq > b.seq;
        }
    };

    void drop_cancelled_head();

    std::uint64_t seed_;
    SimTime now_;
    EventId next_seq_ = 0;
    std::priority_queue<Event, std::vector<Event>, Later> queue_;
    std::unordered_set<EventId> cancelled_;
    Handler handler_;
};

/// Trace CSV: header `t,seq,kind,target,detail`, one record per line.
void write_trace_csv(std::ostream& out, const EventTrace& trace);
EventTrace read_trace_csv(std::istream& in);

/// Value of `key` in a `k=v;k=v` detail string, empty when absent.
std::string_view detail_value(std::string_view detail, std::string_view key);

}  // namespace gpuburst::sim
