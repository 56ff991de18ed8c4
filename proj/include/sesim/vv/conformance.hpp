#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sesim/detail/strings.hpp"
#include "sesim/devs/coupled.hpp"
#include "sesim/devs/simulator.hpp"
#include "sesim/devs/types.hpp"
#include "sesim/error.hpp"
#include "sesim/vv/report.hpp"

// Replay-based trace conformance.
//
// An event trace claims "this model, run from its initial state (under these
// external inputs), produced exactly these events". The checker re-executes
// the model with a second interpreter written independently of
// devs::Simulator — only the pure structural helpers (collect_atomics,
// resolve_input, resolve_output) are shared, the event loop is not — and
// compares the two event streams element by element. Any divergence (times,
// ordering, payloads, state labels, missing or extra events) counts as a
// mismatch. Times are compared exactly as recorded, so traces that round-trip
// through CSV must use grid times that survive the 9-significant-digit
// encoding.

namespace sesim::vv {

// External input for replaying traces of models that are not autonomous.
// Addressed like Simulator::inject: `path` may name the root boundary
// (empty), a nested coupled boundary, or an atomic directly.
struct StimulusEvent {
    double time = 0;
    std::vector<std::string> path;
    std::string port;
    devs::MessageValue value;
};

namespace detail_conf {

class Replayer {
public:
    explicit Replayer(const devs::Component& root) : root_(root) {
        for (auto& [path, spec] : devs::collect_atomics(root_)) {
            Unit u;
            u.path = path;
            u.spec = spec;
            u.state = spec->initial_state;
            u.t_next = spec->ta(u.state).value();
            index_.emplace(u.path, units_.size());
            units_.push_back(std::move(u));
        }
    }

    devs::EventTrace run(std::vector<StimulusEvent> stimuli, double until) {
        std::stable_sort(stimuli.begin(), stimuli.end(),
                         [](const StimulusEvent& a, const StimulusEvent& b) {
                             return a.time < b.time;
                         });
        queue_ = std::move(stimuli);
        devs::EventTrace out;
        for (;;) {
            const double t = horizon();
            if (std::isinf(t) || t > until) break;
            steps_ = 0;
            settle(t, out);
            while (!queue_.empty() && queue_.front().time == t) {
                StimulusEvent s = std::move(queue_.front());
                queue_.erase(queue_.begin());
                for (const auto& ep : devs::resolve_input(root_, s.path, s.port))
                    accept(index_.at(ep.path), ep.port, s.value, t, out);
                settle(t, out);
            }
        }
        return out;
    }

private:
    struct Unit {
        std::vector<std::string> path;
        const devs::AtomicSpec* spec = nullptr;
        std::string state;
        double t_next = 0;
        std::map<std::string, devs::MessageValue> memory;  // per message type
    };

    double horizon() const {
        double t = std::numeric_limits<double>::infinity();
        for (const auto& u : units_) t = std::min(t, u.t_next);
        if (!queue_.empty()) t = std::min(t, queue_.front().time);
        return t;
    }

    void budget(double t) {
        if (++steps_ > devs::SimOptions{}.livelock_limit)
            throw Error("LIVELOCK",
                        "replay exceeded the zero-time transition budget at t=" +
                            detail::num_to_string(t));
    }

    // All expiries pending at t, first-declared first, until none remain.
    void settle(double t, devs::EventTrace& out) {
        for (;;) {
            std::size_t pick = units_.size();
            for (std::size_t i = 0; i < units_.size(); ++i) {
                if (units_[i].t_next == t) {
                    pick = i;
                    break;
                }
            }
            if (pick == units_.size()) return;
            expire(pick, t, out);
        }
    }

    void expire(std::size_t idx, double t, devs::EventTrace& out) {
        budget(t);
        Unit& u = units_[idx];
        const devs::AtomicSpec& spec = *u.spec;
        const std::string old_state = u.state;

        std::vector<std::pair<std::string, devs::MessageValue>> emissions;
        auto out_it = spec.outputs.find(old_state);
        if (out_it != spec.outputs.end()) {
            for (const auto& tmpl : out_it->second) {
                const devs::Port* p = spec.find_port(tmpl.port, devs::PortDirection::output);
                devs::MessageValue v;
                if (tmpl.value) {
                    v = *tmpl.value;
                } else {
                    auto mem = u.memory.find(p->message_type);
                    v = mem != u.memory.end() ? mem->second
                                              : devs::zero_value(p->message_type, spec.data_types);
                }
                devs::Event e;
                e.time = devs::SimTime::of(t);
                e.path = u.path;
                e.port = tmpl.port;
                e.kind = devs::EventKind::output;
                e.value = v;
                out.append(std::move(e));
                emissions.emplace_back(tmpl.port, std::move(v));
            }
        }

        auto tr = spec.internal_transitions.find(old_state);
        devs::Event ev;
        ev.time = devs::SimTime::of(t);
        ev.path = u.path;
        ev.kind = devs::EventKind::internal;
        ev.from_state = old_state;
        ev.to_state = tr->second;
        out.append(std::move(ev));
        u.state = tr->second;
        u.t_next = t + spec.ta(u.state).value();

        for (auto& [port, value] : emissions) {
            for (const auto& ep : devs::resolve_output(root_, units_[idx].path, port)) {
                if (ep.path.empty()) continue;  // left through the root boundary
                accept(index_.at(ep.path), ep.port, value, t, out);
            }
        }
    }

    void accept(std::size_t idx, const std::string& port, const devs::MessageValue& value,
                double t, devs::EventTrace& out) {
        Unit& u = units_[idx];
        while (u.t_next == t) expire(idx, t, out);  // pending expiry resolves first

        const devs::AtomicSpec& spec = *u.spec;
        auto it = spec.external_transitions.find({u.state, port});
        const devs::GuardedTarget* hit = nullptr;
        if (it != spec.external_transitions.end()) {
            for (const auto& gt : it->second) {
                if (!gt.guard || devs::guard_passes(*gt.guard, value)) {
                    hit = &gt;
                    break;
                }
            }
        }

        devs::Event e;
        e.time = devs::SimTime::of(t);
        e.path = u.path;
        e.port = port;
        e.value = value;
        if (!hit) {
            e.kind = devs::EventKind::dropped;
            out.append(std::move(e));
            return;
        }
        e.kind = devs::EventKind::input;
        out.append(std::move(e));
        const devs::Port* p = spec.find_port(port, devs::PortDirection::input);
        u.memory[p->message_type] = value;
        u.state = hit->target;
        u.t_next = t + spec.ta(u.state).value();
        budget(t);
    }

    const devs::Component& root_;
    std::vector<Unit> units_;
    std::map<std::vector<std::string>, std::size_t> index_;
    std::vector<StimulusEvent> queue_;
    std::uint64_t steps_ = 0;
};

inline std::string describe(const devs::Event& e) {
    std::string s = "t=" + detail::num_to_string(e.time.value()) + " " +
                    devs::to_string(e.kind) + " " +
                    (e.path.empty() ? std::string("<root>") : e.path_str());
    if (e.kind == devs::EventKind::internal) {
        s += " " + e.from_state + " -> " + e.to_state;
    } else {
        s += "." + e.port;
        if (e.value) s += " " + devs::to_json(*e.value);
    }
    return s;
}

}  // namespace detail_conf

// Recovers the external inputs of the run that produced `trace`. Only
// defined for an atomic root: with no couplings, every recorded input or
// dropped event can only have come from an injection, so the recovery is
// exact. A coupled root also records inputs that were routed internally,
// which are indistinguishable from injections; asking for its stimuli
// throws UNSUPPORTED.
inline std::vector<StimulusEvent> stimuli_from_trace(const devs::Component& model,
                                                     const devs::EventTrace& trace) {
    if (!model.is_atomic())
        throw Error("UNSUPPORTED",
                    "inputs can only be recovered from the trace of an atomic model; '" +
                        model.name() + "' is a composition");
    std::vector<StimulusEvent> out;
    for (const auto& e : trace.events) {
        if (e.kind != devs::EventKind::input && e.kind != devs::EventKind::dropped) continue;
        if (!e.value)
            throw Error("BAD_TRACE", "input event at t=" +
                                         detail::num_to_string(e.time.value()) +
                                         " carries no value");
        out.push_back({e.time.value(), e.path, e.port, *e.value});
    }
    return out;
}

// Re-executes `model` and counts how far the recorded trace diverges from
// the replay. value = number of mismatching positions (plus any length
// difference), threshold = 0. `stimuli` replays the external inputs of the
// original run; autonomous models need none.
inline CheckResult trace_conformance(const devs::Component& model,
                                     const devs::EventTrace& trace,
                                     const std::string& name = "trace_conformance",
                                     const std::vector<StimulusEvent>& stimuli = {}) {
    const std::string kind = "conformance";
    const std::string metric = "mismatches";
    const double nan = std::numeric_limits<double>::quiet_NaN();

    auto diags = devs::validate_component(model);
    if (has_errors(diags))
        return make_result(name, kind, metric, nan, 0,
                           "model failed validation: " + diags.front().str());

    double until = trace.events.empty() ? 0.0 : trace.events.back().time.value();
    for (const auto& s : stimuli) until = std::max(until, s.time);

    devs::EventTrace replay;
    try {
        replay = detail_conf::Replayer(model).run(stimuli, until);
    } catch (const Error& e) {
        return make_result(name, kind, metric, nan, 0, std::string("replay failed: ") + e.what());
    }

    const std::size_t n = std::min(trace.events.size(), replay.events.size());
    std::size_t mismatches =
        std::max(trace.events.size(), replay.events.size()) - n;
    std::string detail;
    for (std::size_t i = 0; i < n; ++i) {
        if (trace.events[i] == replay.events[i]) continue;
        ++mismatches;
        if (detail.empty())
            detail = "event " + std::to_string(i) + ": trace has [" +
                     detail_conf::describe(trace.events[i]) + "], replay produced [" +
                     detail_conf::describe(replay.events[i]) + "]";
    }
    if (detail.empty() && trace.events.size() != replay.events.size())
        detail = "trace has " + std::to_string(trace.events.size()) +
                 " events, replay produced " + std::to_string(replay.events.size());
    if (detail.empty())
        detail = std::to_string(trace.events.size()) + " events match";
    return make_result(name, kind, metric, static_cast<double>(mismatches), 0, detail);
}

}  // namespace sesim::vv
