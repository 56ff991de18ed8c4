#pragma once

// Semantic checking and compilation of the sentence dialect into an
// AtomicSpec, plus the inverse rendering. check() validates cross
// references without building anything; compile() requires a clean check;
// pretty_print() renders a spec back into canonical sentences and refuses
// specs using features the dialect cannot express.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "sesim/devs/atomic.hpp"
#include "sesim/lang/parser.hpp"

namespace sesim::lang {

using devs::AtomicSpec;
using devs::Port;
using devs::PortDirection;

// Input-port names a receive trigger stands for: a port with that exact
// name wins; otherwise every input port of the type with that name (in
// port declaration order). Empty result = unresolved.
inline std::vector<std::string> resolve_trigger(const std::string& trigger,
                                                const std::vector<Port>& ports) {
    for (const auto& p : ports)
        if (p.direction == PortDirection::input && p.name == trigger) return {trigger};
    std::vector<std::string> out;
    for (const auto& p : ports)
        if (p.direction == PortDirection::input && p.message_type == trigger)
            out.push_back(p.name);
    return out;
}

namespace detail_compile {

// Declarations gathered in one pass over the statements; check and compile
// share this so they cannot disagree.
struct Gathered {
    std::map<std::string, const TypeDeclStmt*> types;
    std::vector<std::string> type_order;
    std::map<std::pair<std::string, std::string>, const RangeDeclStmt*> ranges;
    std::vector<Port> ports;
    std::vector<int> port_lines;
    struct StateDecl {
        bool passive = false;
        double time = 0;
        int line = 0;
    };
    std::map<std::string, StateDecl> state_decls;
    std::vector<std::string> state_order;
    const StartHoldStmt* start = nullptr;
    std::map<std::string, std::string> internal;  // from -> to
    std::vector<const ExternalWhenStmt*> whens;
    std::vector<const AfterOutputStmt*> afters;
    std::vector<const UseDeclStmt*> uses;
};

inline Gathered gather(const Ast& ast, std::vector<Diagnostic>& out) {
    Gathered g;
    const std::string& src = ast.source;
    auto err = [&](int line, const std::string& code, const std::string& msg) {
        out.push_back({src, line, Severity::error, code, msg});
    };
    auto warn = [&](int line, const std::string& code, const std::string& msg) {
        out.push_back({src, line, Severity::warning, code, msg});
    };

    auto add_state = [&](const std::string& state, bool passive, double time, int line) {
        auto it = g.state_decls.find(state);
        if (it == g.state_decls.end()) {
            g.state_decls.emplace(state, Gathered::StateDecl{passive, time, line});
            g.state_order.push_back(state);
            return;
        }
        const auto& prev = it->second;
        if (prev.passive == passive && (passive || prev.time == time)) {
            warn(line, "DUPLICATE_HOLD",
                 "state '" + state + "' is declared again with the same timing (first at line " +
                     std::to_string(prev.line) + ")");
        } else {
            err(line, "CONFLICTING_HOLD",
                "state '" + state + "' already has a different timing (line " +
                    std::to_string(prev.line) + ")");
        }
    };

    for (const auto& stmt : ast.statements) {
        if (const auto* td = std::get_if<TypeDeclStmt>(&stmt)) {
            if (g.types.count(td->name)) {
                err(td->line, "DUPLICATE_TYPE", "type '" + td->name + "' declared twice");
                continue;
            }
            std::set<std::string> fields;
            for (const auto& f : td->fields)
                if (!fields.insert(f).second)
                    err(td->line, "DUPLICATE_FIELD",
                        "type '" + td->name + "' lists field '" + f + "' twice");
            g.types.emplace(td->name, td);
            g.type_order.push_back(td->name);
        } else if (const auto* rd = std::get_if<RangeDeclStmt>(&stmt)) {
            auto key = std::make_pair(rd->type_name, rd->field);
            auto it = g.ranges.find(key);
            if (it != g.ranges.end()) {
                if (it->second->range == rd->range)
                    warn(rd->line, "DUPLICATE_RANGE",
                         "range of " + rd->type_name + "'s " + rd->field + " repeated");
                else
                    err(rd->line, "CONFLICTING_RANGE",
                        "range of " + rd->type_name + "'s " + rd->field +
                            " already set to '" + it->second->range + "'");
                continue;
            }
            g.ranges.emplace(key, rd);
        } else if (const auto* ud = std::get_if<UseDeclStmt>(&stmt)) {
            g.uses.push_back(ud);
        } else if (const auto* pd = std::get_if<PortDeclStmt>(&stmt)) {
            PortDirection dir = pd->input ? PortDirection::input : PortDirection::output;
            bool dup = false;
            for (const auto& p : g.ports)
                if (p.name == pd->port && p.direction == dir) dup = true;
            if (dup) {
                err(pd->line, "DUPLICATE_PORT", "port '" + pd->port + "' declared twice");
                continue;
            }
            g.ports.push_back({pd->port, dir, pd->type});
            g.port_lines.push_back(pd->line);
        } else if (const auto* sh = std::get_if<StartHoldStmt>(&stmt)) {
            if (g.start)
                err(sh->line, "DUPLICATE_START",
                    "starting state already chosen at line " + std::to_string(g.start->line));
            else
                g.start = sh;
            add_state(sh->state, false, sh->time, sh->line);
        } else if (const auto* h = std::get_if<HoldStmt>(&stmt)) {
            add_state(h->state, false, h->time, h->line);
        } else if (const auto* p = std::get_if<PassivateStmt>(&stmt)) {
            add_state(p->state, true, 0, p->line);
        } else if (const auto* ig = std::get_if<InternalGotoStmt>(&stmt)) {
            auto it = g.internal.find(ig->from);
            if (it != g.internal.end()) {
                if (it->second == ig->to)
                    warn(ig->line, "DUPLICATE_TRANSITION",
                         "transition from '" + ig->from + "' repeated");
                else
                    err(ig->line, "CONFLICTING_TRANSITION",
                        "state '" + ig->from + "' already goes to '" + it->second + "'");
                continue;
            }
            g.internal.emplace(ig->from, ig->to);
        } else if (const auto* ew = std::get_if<ExternalWhenStmt>(&stmt)) {
            g.whens.push_back(ew);
        } else if (const auto* ao = std::get_if<AfterOutputStmt>(&stmt)) {
            g.afters.push_back(ao);
        }
    }
    return g;
}

inline bool known_type(const Gathered& g, const std::string& name) {
    return devs::primitive_from_name(name).has_value() || g.types.count(name) > 0;
}

inline bool type_cycle(const Gathered& g, const std::string& name,
                       std::set<std::string>& visiting) {
    if (visiting.count(name)) return true;
    auto it = g.types.find(name);
    if (it == g.types.end()) return false;
    visiting.insert(name);
    for (const auto& f : it->second->fields) {
        auto r = g.ranges.find({name, f});
        if (r != g.ranges.end() && type_cycle(g, r->second->range, visiting)) return true;
    }
    visiting.erase(name);
    return false;
}

// Cross-reference checks for the declarations both dialects share: every
// referenced type exists, every field has a range, no cyclic composition,
// port and use sentences name real types.
inline void check_shared(const Gathered& g, const std::string& src,
                         std::vector<Diagnostic>& out) {
    auto err = [&](int line, const std::string& code, const std::string& msg) {
        out.push_back({src, line, Severity::error, code, msg});
    };

    for (const auto& [key, rd] : g.ranges) {
        if (!g.types.count(rd->type_name)) {
            err(rd->line, "UNKNOWN_TYPE", "range given for undeclared type '" + rd->type_name + "'");
            continue;
        }
        const auto* td = g.types.at(rd->type_name);
        bool found = false;
        for (const auto& f : td->fields) found = found || f == rd->field;
        if (!found)
            err(rd->line, "UNKNOWN_FIELD",
                "type '" + rd->type_name + "' has no field '" + rd->field + "'");
        if (!known_type(g, rd->range))
            err(rd->line, "UNKNOWN_TYPE", "range type '" + rd->range + "' is not declared");
    }
    for (const auto& tname : g.type_order) {
        const auto* td = g.types.at(tname);
        for (const auto& f : td->fields) {
            if (!g.ranges.count({tname, f}))
                err(td->line, "MISSING_RANGE",
                    "field '" + tname + "." + f + "' has no range sentence");
        }
        std::set<std::string> visiting;
        if (type_cycle(g, tname, visiting))
            err(td->line, "TYPE_CYCLE", "type '" + tname + "' contains itself");
    }
    for (const auto* ud : g.uses)
        if (!known_type(g, ud->type))
            err(ud->line, "UNKNOWN_TYPE", "use sentence names undeclared type '" + ud->type + "'");
    for (std::size_t i = 0; i < g.ports.size(); ++i)
        if (!known_type(g, g.ports[i].message_type))
            err(g.port_lines[i], "UNKNOWN_TYPE",
                "port '" + g.ports[i].name + "' has undeclared type '" +
                    g.ports[i].message_type + "'");
}

// Builds the declared record types in declaration order, fields typed by
// their range sentences. Assumes check_shared passed.
inline devs::TypeRegistry build_types(const Gathered& g) {
    devs::TypeRegistry reg;
    for (const auto& tname : g.type_order) {
        const auto* td = g.types.at(tname);
        devs::DataType dt;
        dt.name = tname;
        for (const auto& f : td->fields) {
            const auto* rd = g.ranges.at({tname, f});
            if (auto prim = devs::primitive_from_name(rd->range))
                dt.fields.push_back({f, devs::FieldType{*prim}});
            else
                dt.fields.push_back({f, devs::FieldType{rd->range}});
        }
        reg.emplace(tname, std::move(dt));
    }
    return reg;
}

}  // namespace detail_compile

// Cross-reference validation of a parsed model. State-machine-level rules
// that need the built spec (e.g. a finite hold without a way out) are the
// business of devs::validate_atomic, run after compile().
inline std::vector<Diagnostic> check(const Ast& ast) {
    std::vector<Diagnostic> out;
    const std::string& src = ast.source;
    auto err = [&](int line, const std::string& code, const std::string& msg) {
        out.push_back({src, line, Severity::error, code, msg});
    };
    auto warn = [&](int line, const std::string& code, const std::string& msg) {
        out.push_back({src, line, Severity::warning, code, msg});
    };

    detail_compile::Gathered g = detail_compile::gather(ast, out);
    detail_compile::check_shared(g, src, out);

    if (!g.start) err(1, "NO_START", "no 'to start hold in ...' sentence");

    auto known_state = [&](const std::string& s) { return g.state_decls.count(s) > 0; };
    for (const auto& stmt : ast.statements) {
        const auto* ig = std::get_if<InternalGotoStmt>(&stmt);
        if (!ig) continue;
        if (!known_state(ig->from))
            err(ig->line, "UNKNOWN_STATE", "transition from undeclared state '" + ig->from + "'");
        if (!known_state(ig->to))
            err(ig->line, "UNKNOWN_STATE", "transition to undeclared state '" + ig->to + "'");
    }

    // Receive sentences: resolve the trigger and watch for contradictions
    // once triggers are expanded to ports.
    std::map<std::pair<std::string, std::string>, std::string> seen;
    for (const auto* ew : g.whens) {
        if (!known_state(ew->state))
            err(ew->line, "UNKNOWN_STATE", "receive sentence in undeclared state '" + ew->state + "'");
        if (!known_state(ew->target))
            err(ew->line, "UNKNOWN_STATE", "receive sentence targets undeclared state '" + ew->target + "'");
        auto ports = resolve_trigger(ew->trigger, g.ports);
        if (ports.empty()) {
            err(ew->line, "UNKNOWN_PORT",
                "'" + ew->trigger + "' is neither an input port nor a type with input ports");
            continue;
        }
        for (const auto& port : ports) {
            auto key = std::make_pair(ew->state, port);
            auto it = seen.find(key);
            if (it == seen.end()) {
                seen.emplace(key, ew->target);
            } else if (it->second == ew->target) {
                warn(ew->line, "DUPLICATE_TRANSITION",
                     "state '" + ew->state + "' already reacts to '" + port + "'");
            } else {
                err(ew->line, "CONFLICTING_TRANSITION",
                    "state '" + ew->state + "' reacts to '" + port + "' with target '" +
                        it->second + "' already");
            }
        }
    }

    for (const auto* ao : g.afters) {
        if (!known_state(ao->state))
            err(ao->line, "UNKNOWN_STATE", "output sentence in undeclared state '" + ao->state + "'");
        bool found = false;
        for (const auto& p : g.ports)
            if (p.direction == PortDirection::output && p.name == ao->port) found = true;
        if (!found) err(ao->line, "UNKNOWN_PORT", "no output port named '" + ao->port + "'");
    }

    return out;
}

// Builds the AtomicSpec. The model is named after the source file's stem.
// Throws INVALID_MODEL carrying the diagnostics when check() finds errors.
inline AtomicSpec compile(const Ast& ast) {
    auto diags = check(ast);
    if (has_errors(diags))
        throw Error("INVALID_MODEL", "model '" + ast.source + "' failed checks", std::move(diags));

    std::vector<Diagnostic> sink;
    detail_compile::Gathered g = detail_compile::gather(ast, sink);

    AtomicSpec spec;
    spec.name = detail::path_stem(ast.source);
    spec.data_types = detail_compile::build_types(g);
    spec.ports = g.ports;

    spec.states = g.state_order;
    spec.initial_state = g.start->state;
    for (const auto& s : g.state_order) {
        const auto& d = g.state_decls.at(s);
        spec.time_advance.emplace(
            s, d.passive ? devs::SimTime::infinity() : devs::SimTime::of(d.time));
    }
    spec.internal_transitions = g.internal;

    for (const auto* ew : g.whens) {
        for (const auto& port : resolve_trigger(ew->trigger, g.ports)) {
            auto& targets = spec.external_transitions[{ew->state, port}];
            if (targets.empty()) targets.push_back({std::nullopt, ew->target});
        }
    }
    for (const auto* ao : g.afters)
        spec.outputs[ao->state].push_back({ao->port, std::nullopt});

    return spec;
}

// Renders a spec as canonical dialect text such that
// compile(parse(pretty_print(spec), name)) reproduces the spec exactly.
// Throws UNREPRESENTABLE for specs using features without a sentence form:
// guarded or multi-way receives, literal output payloads, and a passive
// starting state.
inline std::string pretty_print(const AtomicSpec& spec) {
    for (const auto& [key, targets] : spec.external_transitions) {
        if (targets.size() != 1 || targets[0].guard)
            throw Error("UNREPRESENTABLE",
                        "external transition on ('" + key.first + "','" + key.second +
                            "') is guarded or multi-way");
    }
    for (const auto& [state, outs] : spec.outputs)
        for (const auto& ot : outs)
            if (ot.value)
                throw Error("UNREPRESENTABLE",
                            "output in state '" + state + "' carries a literal payload");
    if (spec.is_passive(spec.initial_state))
        throw Error("UNREPRESENTABLE", "starting state '" + spec.initial_state + "' is passive");
    for (const auto& [tname, dt] : spec.data_types)
        if (dt.fields.empty())
            throw Error("UNREPRESENTABLE", "type '" + tname + "' has no fields");

    std::string out;
    for (const auto& [tname, dt] : spec.data_types) {
        if (dt.fields.size() == 1) {
            out += "A " + tname + " has a " + dt.fields[0].name + "!\n";
        } else {
            out += tname + " has ";
            for (std::size_t i = 0; i < dt.fields.size(); ++i) {
                if (i) out += " and ";
                out += dt.fields[i].name;
            }
            out += "!\n";
        }
        for (const auto& f : dt.fields)
            out += "the range of " + tname + "'s " + f.name + " is " + f.type.display() + "!\n";
    }
    if (!spec.data_types.empty()) out += "\n";

    for (const auto& p : spec.ports) {
        out += p.direction == PortDirection::input ? "accepts input on " : "generates output on ";
        out += p.name + " with type " + p.message_type + "!\n";
    }
    if (!spec.ports.empty()) out += "\n";

    for (const auto& s : spec.states) {
        devs::SimTime t = spec.ta(s);
        if (s == spec.initial_state)
            out += "to start hold in " + s + " for time " + detail::num_to_string(t.value()) +
                   "!\n";
        else if (t.is_infinite())
            out += "passivate in " + s + "!\n";
        else
            out += "hold in " + s + " for time " + detail::num_to_string(t.value()) + "!\n";

        auto ig = spec.internal_transitions.find(s);
        if (ig != spec.internal_transitions.end())
            out += "from " + s + " go to " + ig->second + "!\n";
        for (const auto& [key, targets] : spec.external_transitions)
            if (key.first == s)
                out += "when in " + s + " and receive " + key.second + " go to " +
                       targets[0].target + "!\n";
        auto ao = spec.outputs.find(s);
        if (ao != spec.outputs.end())
            for (const auto& ot : ao->second) out += "after " + s + " output " + ot.port + "!\n";
    }
    return out;
}

}  // namespace sesim::lang
