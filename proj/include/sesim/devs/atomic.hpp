#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sesim/devs/types.hpp"
#include "sesim/diagnostics.hpp"

namespace sesim::devs {

// Payload predicate on an incoming message: <field path> <cmp> <threshold>.
// Numeric fields only; a missing path or non-numeric field fails the guard.
struct TransitionGuard {
    enum class Cmp { gt, ge, lt, le, eq, ne };
    std::vector<std::string> field_path;
    Cmp cmp = Cmp::gt;
    double threshold = 0;

    friend bool operator==(const TransitionGuard&, const TransitionGuard&) = default;
};

inline const char* to_string(TransitionGuard::Cmp c) {
    switch (c) {
        case TransitionGuard::Cmp::gt: return ">";
        case TransitionGuard::Cmp::ge: return ">=";
        case TransitionGuard::Cmp::lt: return "<";
        case TransitionGuard::Cmp::le: return "<=";
        case TransitionGuard::Cmp::eq: return "==";
        default: return "!=";
    }
}

inline bool guard_passes(const TransitionGuard& g, const MessageValue& m) {
    const MessageValue* cur = &m;
    const FieldValue* fv = nullptr;
    for (std::size_t i = 0; i < g.field_path.size(); ++i) {
        fv = cur->find(g.field_path[i]);
        if (!fv) return false;
        if (i + 1 < g.field_path.size()) {
            if (!fv->is_record()) return false;
            cur = &fv->record();
        }
    }
    if (!fv) return false;
    auto num = fv->numeric();
    if (!num) return false;
    double v = *num;
    switch (g.cmp) {
        case TransitionGuard::Cmp::gt: return v > g.threshold;
        case TransitionGuard::Cmp::ge: return v >= g.threshold;
        case TransitionGuard::Cmp::lt: return v < g.threshold;
        case TransitionGuard::Cmp::le: return v <= g.threshold;
        case TransitionGuard::Cmp::eq: return v == g.threshold;
        default: return v != g.threshold;
    }
}

// Reaction to an input on one (state, port): first entry whose guard passes
// (or has none) wins. A plain unconditional transition is a single
// guard-less entry.
struct GuardedTarget {
    std::optional<TransitionGuard> guard;
    std::string target;
    friend bool operator==(const GuardedTarget&, const GuardedTarget&) = default;
};

// One emission scheduled when a state's hold expires. A null value template
// means store-and-forward: emit the most recently received message whose
// type matches the port's message type.
struct OutputTemplate {
    std::string port;
    std::optional<MessageValue> value;
    friend bool operator==(const OutputTemplate&, const OutputTemplate&) = default;
};

// Declarative atomic component: finite named states, a time advance per
// state, internal/external transitions, and per-state output schedules.
struct AtomicSpec {
    std::string name;
    std::vector<std::string> states;  // declaration order
    std::string initial_state;
    std::map<std::string, SimTime> time_advance;
    std::map<std::string, std::string> internal_transitions;
    std::map<std::pair<std::string, std::string>, std::vector<GuardedTarget>>
        external_transitions;  // keyed by (state, input port)
    std::map<std::string, std::vector<OutputTemplate>> outputs;
    std::vector<Port> ports;
    TypeRegistry data_types;

    bool has_state(const std::string& s) const {
        for (const auto& st : states)
            if (st == s) return true;
        return false;
    }
    const Port* find_port(const std::string& name, PortDirection dir) const {
        for (const auto& p : ports)
            if (p.name == name && p.direction == dir) return &p;
        return nullptr;
    }
    SimTime ta(const std::string& s) const {
        auto it = time_advance.find(s);
        return it == time_advance.end() ? SimTime::infinity() : it->second;
    }
    bool is_passive(const std::string& s) const { return ta(s).is_infinite(); }

    friend bool operator==(const AtomicSpec&, const AtomicSpec&) = default;
};

namespace detail_atomic {

inline void check_type_exists(const std::string& type_name, const TypeRegistry& reg,
                              const std::string& where, const std::string& spec_name,
                              std::vector<Diagnostic>& out) {
    if (primitive_from_name(type_name)) return;
    if (reg.count(type_name)) return;
    out.push_back({spec_name, 0, Severity::error, "UNKNOWN_TYPE",
                   "type '" + type_name + "' referenced by " + where + " is not defined"});
}

// Detects cycles in record-type composition (a type containing itself).
inline bool type_has_cycle(const std::string& name, const TypeRegistry& reg,
                           std::set<std::string>& visiting) {
    if (visiting.count(name)) return true;
    auto it = reg.find(name);
    if (it == reg.end()) return false;
    visiting.insert(name);
    for (const auto& f : it->second.fields) {
        if (!f.type.is_primitive() && type_has_cycle(f.type.type_name(), reg, visiting))
            return true;
    }
    visiting.erase(name);
    return false;
}

}  // namespace detail_atomic

// Structural validation. Empty result = well-formed.
inline std::vector<Diagnostic> validate_atomic(const AtomicSpec& spec) {
    std::vector<Diagnostic> out;
    const std::string& n = spec.name;
    auto err = [&](const std::string& code, const std::string& msg) {
        out.push_back({n, 0, Severity::error, code, msg});
    };

    if (spec.states.empty()) err("NO_STATES", "spec declares no states");
    std::set<std::string> seen_states;
    for (const auto& s : spec.states)
        if (!seen_states.insert(s).second) err("DUPLICATE_STATE", "state '" + s + "' declared twice");

    if (!spec.has_state(spec.initial_state))
        err("UNKNOWN_STATE", "initial state '" + spec.initial_state + "' is not a declared state");

    // Data types: unique field names, no cyclic composition, referenced
    // field types defined.
    for (const auto& [tname, dt] : spec.data_types) {
        std::set<std::string> fnames;
        for (const auto& f : dt.fields) {
            if (!fnames.insert(f.name).second)
                err("DUPLICATE_FIELD", "type '" + tname + "' has duplicate field '" + f.name + "'");
            if (!f.type.is_primitive())
                detail_atomic::check_type_exists(f.type.type_name(), spec.data_types,
                                                 "field '" + tname + "." + f.name + "'", n, out);
        }
        std::set<std::string> visiting;
        if (detail_atomic::type_has_cycle(tname, spec.data_types, visiting))
            err("TYPE_CYCLE", "type '" + tname + "' contains itself");
    }

    // Ports: unique (name, direction), known types.
    std::set<std::pair<std::string, int>> port_keys;
    for (const auto& p : spec.ports) {
        if (!port_keys.insert({p.name, static_cast<int>(p.direction)}).second)
            err("DUPLICATE_PORT", "port '" + p.name + "' declared twice");
        detail_atomic::check_type_exists(p.message_type, spec.data_types,
                                         "port '" + p.name + "'", n, out);
    }

    for (const auto& [s, t] : spec.time_advance) {
        if (!spec.has_state(s)) err("UNKNOWN_STATE", "time advance names unknown state '" + s + "'");
        if (t.is_finite() && t.value() < 0) err("BAD_TIME", "negative time advance for '" + s + "'");
    }

    // Every state with a finite hold must know where to go when it expires.
    for (const auto& s : spec.states) {
        if (!spec.is_passive(s) && !spec.internal_transitions.count(s))
            err("MISSING_INTERNAL",
                "state '" + s + "' has finite time advance but no internal transition");
    }
    for (const auto& [from, to] : spec.internal_transitions) {
        if (!spec.has_state(from))
            err("UNKNOWN_STATE", "internal transition from unknown state '" + from + "'");
        if (!spec.has_state(to))
            err("UNKNOWN_STATE", "internal transition to unknown state '" + to + "'");
        if (spec.has_state(from) && spec.is_passive(from))
            err("PASSIVE_INTERNAL",
                "passive state '" + from + "' has an internal transition that can never fire");
    }

    for (const auto& [key, targets] : spec.external_transitions) {
        const auto& [state, port] = key;
        if (!spec.has_state(state))
            err("UNKNOWN_STATE", "external transition in unknown state '" + state + "'");
        if (!spec.find_port(port, PortDirection::input))
            err("UNKNOWN_PORT", "external transition on unknown input port '" + port + "'");
        if (targets.empty())
            err("EMPTY_TRANSITION", "external transition on ('" + state + "','" + port +
                                        "') has no targets");
        for (const auto& gt : targets) {
            if (!spec.has_state(gt.target))
                err("UNKNOWN_STATE", "external transition to unknown state '" + gt.target + "'");
        }
    }

    // Outputs fire when a hold expires, so passive states must not have any.
    for (const auto& [state, outs] : spec.outputs) {
        if (!spec.has_state(state)) {
            err("UNKNOWN_STATE", "output schedule for unknown state '" + state + "'");
            continue;
        }
        if (spec.is_passive(state))
            err("PASSIVE_OUTPUT", "passive state '" + state + "' has outputs that can never fire");
        for (const auto& ot : outs) {
            const Port* p = spec.find_port(ot.port, PortDirection::output);
            if (!p) {
                err("UNKNOWN_PORT", "output in state '" + state + "' names unknown output port '" +
                                        ot.port + "'");
                continue;
            }
            if (ot.value && !value_matches_type(*ot.value, p->message_type, spec.data_types))
                err("TYPE_MISMATCH", "output template in state '" + state + "' does not match type '" +
                                         p->message_type + "' of port '" + ot.port + "'");
        }
    }

    return out;
}

}  // namespace sesim::devs
