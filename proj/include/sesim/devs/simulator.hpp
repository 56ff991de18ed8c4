#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sesim/devs/coupled.hpp"

namespace sesim::devs {

struct SimOptions {
    double start = 0;
    // Zero-time transition budget per simulated instant; exceeding it means
    // the model livelocks (e.g. a zero-hold cycle) and raises LIVELOCK.
    std::uint64_t livelock_limit = 1'000'000;
};

// Deterministic event-driven executor for a component hierarchy.
//
// Ordering rules:
//  * among components imminent at the same instant, the first-declared
//    (depth-first) fires first;
//  * when an input reaches a component exactly when its hold expires, the
//    internal transition runs first, then the input (elapsed 0);
//  * simultaneous inputs are delivered one at a time, in coupling
//    declaration order, each triggering its own external transition;
//  * outputs fire before the emitting component's internal transition.
class Simulator {
public:
    explicit Simulator(Component root, SimOptions opts = {})
        : root_(std::make_unique<Component>(std::move(root))), opts_(opts), clock_(opts.start) {
        auto diags = validate_component(*root_);
        if (has_errors(diags))
            throw Error("INVALID_SPEC", "component failed validation", std::move(diags));
        for (auto& [path, spec] : collect_atomics(*root_)) {
            Instance inst;
            inst.path = path;
            inst.spec = spec;
            inst.state = spec->initial_state;
            inst.t_last = opts_.start;
            inst.t_next = opts_.start + spec->ta(spec->initial_state).value();
            index_by_path_[inst.path] = instances_.size();
            instances_.push_back(std::move(inst));
        }
        // Static routing: where each atomic output is delivered.
        for (std::size_t i = 0; i < instances_.size(); ++i) {
            for (const auto& port : instances_[i].spec->ports) {
                if (port.direction != PortDirection::output) continue;
                std::vector<std::pair<std::size_t, std::string>> dests;
                for (const auto& ep : resolve_output(*root_, instances_[i].path, port.name)) {
                    if (ep.path.empty()) continue;  // left through the root boundary
                    dests.emplace_back(index_by_path_.at(ep.path), ep.port);
                }
                routing_[{i, port.name}] = std::move(dests);
            }
        }
    }
    explicit Simulator(AtomicSpec spec, SimOptions opts = {})
        : Simulator(Component(std::move(spec)), opts) {}
    explicit Simulator(CoupledSpec spec, SimOptions opts = {})
        : Simulator(Component(std::move(spec)), opts) {}

    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;
    Simulator(Simulator&&) = default;
    Simulator& operator=(Simulator&&) = default;

    SimTime now() const { return SimTime::of(clock_); }

    SimTime next_event_time() const {
        double t = std::numeric_limits<double>::infinity();
        for (const auto& inst : instances_) t = std::min(t, inst.t_next);
        for (const auto& inj : injections_) t = std::min(t, inj.time);
        return std::isinf(t) ? SimTime::infinity() : SimTime::of(t);
    }

    // Schedules an external input for a component's input port. The target
    // may be the root boundary (empty path), a nested coupled boundary, or
    // an atomic directly; coupled targets fan out along their couplings.
    void inject(SimTime time, std::vector<std::string> path, const std::string& port,
                MessageValue value) {
        if (time.is_infinite())
            throw Error("BAD_TIME", "cannot inject at infinite time");
        if (time.value() < clock_)
            throw Error("PAST_EVENT", "injection at " + detail::num_to_string(time.value()) +
                                          " is before the clock " +
                                          detail::num_to_string(clock_));
        const Component* target = detail_routing::navigate(*root_, path, path.size());
        if (!target)
            throw Error("UNKNOWN_TARGET", "no component at path '" + join_path(path) + "'");
        const Port* p = component_port(*target, port, PortDirection::input);
        if (!p)
            throw Error("UNKNOWN_TARGET", "component '" + join_path(path) +
                                              "' has no input port '" + port + "'");
        if (!value_matches_type(value, p->message_type, component_types(*target)))
            throw Error("TYPE_MISMATCH", "value of type '" + value.type +
                                             "' does not match port type '" + p->message_type +
                                             "'");
        injections_.push_back({time.value(), seq_++, std::move(path), port, std::move(value)});
    }

    // Runs every event with time <= until; afterwards the clock is `until`.
    // Returns the input/output/internal/dropped events of this call.
    EventTrace advance(SimTime until) {
        if (until.is_infinite())
            throw Error("BAD_TIME", "advance requires a finite time");
        if (until.value() < clock_)
            throw Error("BAD_TIME", "cannot advance backwards");
        EventTrace trace;
        std::stable_sort(injections_.begin(), injections_.end(),
                         [](const Injection& a, const Injection& b) {
                             return a.time < b.time || (a.time == b.time && a.seq < b.seq);
                         });
        for (;;) {
            double t_next = next_event_time_raw();
            if (std::isinf(t_next) || t_next > until.value()) break;
            run_instant(t_next, trace);
        }
        clock_ = until.value();
        return trace;
    }

    const std::string& state_of(const std::vector<std::string>& path) const {
        return instances_[index_of(path)].state;
    }
    SimTime next_internal_of(const std::vector<std::string>& path) const {
        double t = instances_[index_of(path)].t_next;
        return std::isinf(t) ? SimTime::infinity() : SimTime::of(t);
    }
    std::size_t component_count() const { return instances_.size(); }

private:
    struct Instance {
        std::vector<std::string> path;
        const AtomicSpec* spec = nullptr;
        std::string state;
        double t_last = 0;
        double t_next = 0;
        // Last accepted message per structural type name (store-and-forward).
        std::map<std::string, MessageValue> memory;
    };
    struct Injection {
        double time;
        std::uint64_t seq;
        std::vector<std::string> path;
        std::string port;
        MessageValue value;
    };

    static std::string join_path(const std::vector<std::string>& p) {
        std::string s;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (i) s += '.';
            s += p[i];
        }
        return s;
    }

    std::size_t index_of(const std::vector<std::string>& path) const {
        auto it = index_by_path_.find(path);
        if (it == index_by_path_.end())
            throw Error("UNKNOWN_TARGET", "no atomic component at path '" + join_path(path) + "'");
        return it->second;
    }

    double next_event_time_raw() const {
        double t = std::numeric_limits<double>::infinity();
        for (const auto& inst : instances_) t = std::min(t, inst.t_next);
        if (!injections_.empty()) t = std::min(t, injections_.front().time);
        return t;
    }

    void run_instant(double t, EventTrace& trace) {
        steps_this_instant_ = 0;
        drain_imminents(t, trace);
        while (!injections_.empty() && injections_.front().time == t) {
            Injection inj = std::move(injections_.front());
            injections_.erase(injections_.begin());
            for (const auto& ep : resolve_input(*root_, inj.path, inj.port))
                deliver(index_by_path_.at(ep.path), ep.port, inj.value, t, trace);
            drain_imminents(t, trace);
        }
    }

    void drain_imminents(double t, EventTrace& trace) {
        for (;;) {
            std::size_t pick = instances_.size();
            for (std::size_t i = 0; i < instances_.size(); ++i) {
                if (instances_[i].t_next == t) {
                    pick = i;
                    break;
                }
            }
            if (pick == instances_.size()) return;
            fire_internal(pick, t, trace);
        }
    }

    void bump_step_budget(double t) {
        if (++steps_this_instant_ > opts_.livelock_limit)
            throw Error("LIVELOCK", "more than " + std::to_string(opts_.livelock_limit) +
                                        " zero-time transitions at t=" +
                                        detail::num_to_string(t));
    }

    void fire_internal(std::size_t idx, double t, EventTrace& trace) {
        bump_step_budget(t);
        Instance& inst = instances_[idx];
        const AtomicSpec& spec = *inst.spec;
        const std::string old_state = inst.state;

        // Output function runs on the expiring state.
        std::vector<std::pair<std::string, MessageValue>> emissions;
        auto out_it = spec.outputs.find(old_state);
        if (out_it != spec.outputs.end()) {
            for (const auto& ot : out_it->second) {
                const Port* p = spec.find_port(ot.port, PortDirection::output);
                MessageValue v;
                if (ot.value) {
                    v = *ot.value;
                } else {
                    auto mem = inst.memory.find(p->message_type);
                    v = mem != inst.memory.end() ? mem->second
                                                 : zero_value(p->message_type, spec.data_types);
                }
                Event e;
                e.time = SimTime::of(t);
                e.path = inst.path;
                e.port = ot.port;
                e.kind = EventKind::output;
                e.value = v;
                trace.append(std::move(e));
                emissions.emplace_back(ot.port, std::move(v));
            }
        }

        // Internal transition completes before any delivery so that
        // feedback arriving within the same instant sees the new state.
        auto tr = spec.internal_transitions.find(old_state);
        Event ev;
        ev.time = SimTime::of(t);
        ev.path = inst.path;
        ev.kind = EventKind::internal;
        ev.from_state = old_state;
        ev.to_state = tr->second;
        trace.append(std::move(ev));
        inst.state = tr->second;
        inst.t_last = t;
        inst.t_next = t + spec.ta(inst.state).value();

        for (auto& [port, value] : emissions) {
            auto rt = routing_.find({idx, port});
            if (rt == routing_.end()) continue;
            for (const auto& [dest_idx, dest_port] : rt->second)
                deliver(dest_idx, dest_port, value, t, trace);
        }
    }

    void deliver(std::size_t idx, const std::string& port, const MessageValue& value, double t,
                 EventTrace& trace) {
        Instance& inst = instances_[idx];
        // Pending internal at this very instant resolves first (elapsed 0).
        while (inst.t_next == t) fire_internal(idx, t, trace);

        const AtomicSpec& spec = *inst.spec;
        auto it = spec.external_transitions.find({inst.state, port});
        const GuardedTarget* hit = nullptr;
        if (it != spec.external_transitions.end()) {
            for (const auto& gt : it->second) {
                if (!gt.guard || guard_passes(*gt.guard, value)) {
                    hit = &gt;
                    break;
                }
            }
        }

        Event e;
        e.time = SimTime::of(t);
        e.path = inst.path;
        e.port = port;
        e.value = value;
        if (!hit) {
            // No matching reaction in this state: message is discarded but
            // stays visible in the trace.
            e.kind = EventKind::dropped;
            trace.append(std::move(e));
            return;
        }
        e.kind = EventKind::input;
        trace.append(std::move(e));
        const Port* p = spec.find_port(port, PortDirection::input);
        inst.memory[p->message_type] = value;
        inst.state = hit->target;
        inst.t_last = t;
        inst.t_next = t + spec.ta(inst.state).value();
        bump_step_budget(t);
    }

    std::unique_ptr<Component> root_;
    SimOptions opts_;
    double clock_ = 0;
    std::vector<Instance> instances_;
    std::map<std::vector<std::string>, std::size_t> index_by_path_;
    std::map<std::pair<std::size_t, std::string>,
             std::vector<std::pair<std::size_t, std::string>>>
        routing_;
    std::vector<Injection> injections_;
    std::uint64_t seq_ = 0;
    std::uint64_t steps_this_instant_ = 0;
};

// One-call convenience: validate, inject, run to `until`, return the trace.
inline EventTrace simulate(Component root, const std::vector<Event>& inputs, SimTime until,
                           SimOptions opts = {}) {
    Simulator sim(std::move(root), opts);
    for (const auto& e : inputs) sim.inject(e.time, e.path, e.port, e.value.value_or(MessageValue{}));
    return sim.advance(until);
}

}  // namespace sesim::devs
