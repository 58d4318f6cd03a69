#include "gpuburst/sim/engine.hpp"

#include <array>
#include <istream>
#include <ostream>
#include <string>

#include "gpuburst/errors.hpp"

namespace gpuburst::sim {
namespace {

constexpr std::array<std::string_view, kEventKindCount> kKindNames = {
    "ProviderTick",   "NegotiatorTick", "Sample",      "ProvisionAction",
    "InstanceState",  "StartdHandshake", "AdVisible",  "JobComplete",
    "ShutdownStart",  "ManualRecovery", "ManualSweep", "FaultWindow",
};

}  // namespace

bool is_valid(EventKind kind) {
    return static_cast<int>(kind) < kEventKindCount;
}

std::string_view to_string(EventKind kind) {
    if (!is_valid(kind)) throw UnknownEventKind("event kind " + std::to_string(static_cast<int>(kind)));
    return kKindNames[static_cast<std::size_t>(kind)];
}

EventKind parse_event_kind(std::string_view name) {
    for (std::size_t i = 0; i < kKindNames.size(); ++i) {
        if (kKindNames[i] == name) return static_cast<EventKind>(i);
    }
    throw UnknownEventKind("unknown event kind '" + std::string(name) + "'");
}

EventId Engine::schedule(SimTime at, EventKind kind, EntityId target, std::string detail) {
    if (at < now_) {
        throw SchedulingInPast("event at " + at.to_string() + " s is before now " + now_.to_string() + " s");
    }
    if (!is_valid(kind)) {
        throw UnknownEventKind("event kind " + std::to_string(static_cast<int>(kind)));
    }
    const EventId id = next_seq_++;
    queue_.push(Event{at, id, kind, target, std::move(detail)});
    return id;
}

void Engine::cancel(EventId id) {
    if (id < next_seq_) cancelled_.insert(id);
}

void Engine::drop_cancelled_head() {
    while (!queue_.empty()) {
        auto it = cancelled_.find(queue_.top().seq);
        if (it == cancelled_.end()) return;
        cancelled_.erase(it);
        queue_.pop();
    }
}

std::optional<SimTime> Engine::next_time() {
    drop_cancelled_head();
    if (queue_.empty()) return std::nullopt;
    return queue_.top().at;
}

EventTrace Engine::run_until(SimTime t_end) {
    EventTrace trace;
    for (;;) {
        drop_cancelled_head();
        if (queue_.empty()) return trace;  // drained: clock stays at the last event
        if (queue_.top().at > t_end) break;
        // priority_queue::top is const; the event is copied out before pop.
        Event ev = queue_.top();
        queue_.pop();
        now_ = ev.at;
        if (handler_) handler_(ev);
        trace.push_back(std::move(ev));
    }
    if (t_end > now_) now_ = t_end;
    return trace;
}

void write_trace_csv(std::ostream& out, const EventTrace& trace) {
    out << "t,seq,kind,target,detail\n";
    for (const auto& ev : trace) {
        out << ev.at.to_string() << ',' << ev.seq << ',' << to_string(ev.kind) << ',' << ev.target << ','
            << ev.detail << '\n';
    }
}

EventTrace read_trace_csv(std::istream& in) {
    EventTrace trace;
    std::string line;
    if (!std::getline(in, line) || line != "t,seq,kind,target,detail") {
        throw ParseError("trace: missing header row");
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::array<std::string, 5> f;
        std::size_t start = 0;
        for (std::size_t i = 0; i < 4; ++i) {
            const auto comma = line.find(',', start);
            if (comma == std::string::npos) {
                throw ParseError("trace line " + std::to_string(lineno) + ": expected 5 fields");
            }
            f[i] = line.substr(start, comma - start);
            start = comma + 1;
        }
        f[4] = line.substr(start);
        try {
            Event ev;
            ev.at = SimTime::from_seconds(std::stod(f[0]));
            ev.seq = std::stoull(f[1]);
            ev.kind = parse_event_kind(f[2]);
            ev.target = std::stoull(f[3]);
            ev.detail = std::move(f[4]);
            trace.push_back(std::move(ev));
        } catch (const UnknownEventKind&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError("trace line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return trace;
}

std::string_view detail_value(std::string_view detail, std::string_view key) {
    std::size_t pos = 0;
    while (pos <= detail.size()) {
        std::size_t end = pos;
        while (end < detail.size() && detail[end] != ';') ++end;
        const std::string_view field = detail.substr(pos, end - pos);
        if (field.size() > key.size() && field[key.size()] == '=' && field.substr(0, key.size()) == key)
            return field.substr(key.size() + 1);
        pos = end + 1;
    }
    return {};
}

}  // namespace gpuburst::sim
