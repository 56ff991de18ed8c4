#pragma once

#include <memory>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sesim/devs/atomic.hpp"

namespace sesim::devs {

struct CoupledSpec;

// Child of a coupled model: an atomic or a nested coupled, held by value
// (deep copy) so specs stay plain values.
class Component {
public:
    Component(AtomicSpec a) : v_(std::move(a)) {}
    Component(CoupledSpec c);
    Component(const Component& o);
    Component(Component&& o) noexcept = default;
    Component& operator=(const Component& o) {
        Component tmp(o);
        v_ = std::move(tmp.v_);
        return *this;
    }
    Component& operator=(Component&& o) noexcept = default;
    ~Component();

    bool is_atomic() const { return std::holds_alternative<AtomicSpec>(v_); }
    const AtomicSpec& atomic() const { return std::get<AtomicSpec>(v_); }
    AtomicSpec& atomic() { return std::get<AtomicSpec>(v_); }
    const CoupledSpec& coupled() const { return *std::get<std::unique_ptr<CoupledSpec>>(v_); }
    CoupledSpec& coupled() { return *std::get<std::unique_ptr<CoupledSpec>>(v_); }

    const std::string& name() const;

    friend bool operator==(const Component& a, const Component& b);

private:
    std::variant<AtomicSpec, std::unique_ptr<CoupledSpec>> v_;
};

// Directed link between ports. An empty component name denotes the coupled
// model itself (its own boundary ports).
struct Coupling {
    std::string from_component;  // "" = parent input side
    std::string from_port;
    std::string to_component;  // "" = parent output side
    std::string to_port;
    friend bool operator==(const Coupling&, const Coupling&) = default;
};

// Hierarchical composition: named children plus couplings among their ports
// and the parent's boundary ports. Child order is the tie-break order when
// several components are imminent at the same instant.
struct CoupledSpec {
    std::string name;
    std::vector<std::pair<std::string, Component>> children;  // declaration order
    std::vector<Coupling> couplings;                          // declaration order
    std::vector<Port> ports;                                  // boundary ports
    TypeRegistry data_types;                                  // types for boundary ports

    const Component* find_child(const std::string& n) const {
        for (const auto& [cn, c] : children)
            if (cn == n) return &c;
        return nullptr;
    }
    const Port* find_port(const std::string& n, PortDirection dir) const {
        for (const auto& p : ports)
            if (p.name == n && p.direction == dir) return &p;
        return nullptr;
    }

    friend bool operator==(const CoupledSpec& a, const CoupledSpec& b);
};

inline Component::Component(CoupledSpec c)
    : v_(std::make_unique<CoupledSpec>(std::move(c))) {}
inline Component::Component(const Component& o)
    : v_(o.is_atomic()
             ? std::variant<AtomicSpec, std::unique_ptr<CoupledSpec>>(o.atomic())
             : std::variant<AtomicSpec, std::unique_ptr<CoupledSpec>>(
                   std::make_unique<CoupledSpec>(o.coupled()))) {}
inline Component::~Component() = default;

inline const std::string& Component::name() const {
    return is_atomic() ? atomic().name : coupled().name;
}

inline bool operator==(const Component& a, const Component& b) {
    if (a.is_atomic() != b.is_atomic()) return false;
    if (a.is_atomic()) return a.atomic() == b.atomic();
    return a.coupled() == b.coupled();
}

inline bool operator==(const CoupledSpec& a, const CoupledSpec& b) {
    return a.name == b.name && a.children == b.children && a.couplings == b.couplings &&
           a.ports == b.ports && a.data_types == b.data_types;
}

// ---------------------------------------------------------------------------
// Port lookup across either kind of component.
// ---------------------------------------------------------------------------
inline const Port* component_port(const Component& c, const std::string& port,
                                  PortDirection dir) {
    return c.is_atomic() ? c.atomic().find_port(port, dir) : c.coupled().find_port(port, dir);
}

inline const TypeRegistry& component_types(const Component& c) {
    return c.is_atomic() ? c.atomic().data_types : c.coupled().data_types;
}

// ---------------------------------------------------------------------------
// Validation.
// ---------------------------------------------------------------------------
inline std::vector<Diagnostic> validate_coupled(const CoupledSpec& spec) {
    std::vector<Diagnostic> out;
    const std::string& n = spec.name;
    auto err = [&](const std::string& code, const std::string& msg) {
        out.push_back({n, 0, Severity::error, code, msg});
    };

    std::set<std::string> names;
    for (const auto& [cn, child] : spec.children) {
        if (cn.empty() || cn == "self")
            err("BAD_CHILD_NAME", "child name '" + cn + "' is reserved");
        if (!names.insert(cn).second) err("DUPLICATE_CHILD", "child '" + cn + "' declared twice");
        auto child_diags = child.is_atomic() ? validate_atomic(child.atomic())
                                             : validate_coupled(child.coupled());
        for (auto& d : child_diags) {
            d.message = "in child '" + cn + "': " + d.message;
            out.push_back(std::move(d));
        }
    }

    std::set<std::pair<std::string, int>> port_keys;
    for (const auto& p : spec.ports) {
        if (!port_keys.insert({p.name, static_cast<int>(p.direction)}).second)
            err("DUPLICATE_PORT", "boundary port '" + p.name + "' declared twice");
        if (!primitive_from_name(p.message_type) && !spec.data_types.count(p.message_type))
            err("UNKNOWN_TYPE", "boundary port '" + p.name + "' has undefined type '" +
                                    p.message_type + "'");
    }

    std::set<std::string> seen_couplings;
    for (const auto& c : spec.couplings) {
        std::string desc = "coupling " + (c.from_component.empty() ? "self" : c.from_component) +
                           "." + c.from_port + " -> " +
                           (c.to_component.empty() ? "self" : c.to_component) + "." + c.to_port;
        std::string key = c.from_component + "\x01" + c.from_port + "\x01" + c.to_component +
                          "\x01" + c.to_port;
        if (!seen_couplings.insert(key).second)
            out.push_back({n, 0, Severity::warning, "DUPLICATE_COUPLING",
                           desc + " declared twice; the message will be delivered twice"});

        // Resolve the source endpoint's port + type registry.
        const Port* from_port = nullptr;
        const TypeRegistry* from_reg = nullptr;
        if (c.from_component.empty()) {
            if (c.to_component.empty()) {
                err("PARENT_PASSTHROUGH", desc + " connects the boundary to itself");
                continue;
            }
            from_port = spec.find_port(c.from_port, PortDirection::input);
            from_reg = &spec.data_types;
            if (!from_port) {
                err("UNKNOWN_PORT", desc + ": no boundary input port '" + c.from_port + "'");
                continue;
            }
        } else {
            const Component* child = spec.find_child(c.from_component);
            if (!child) {
                err("UNKNOWN_COMPONENT", desc + ": no child '" + c.from_component + "'");
                continue;
            }
            from_port = component_port(*child, c.from_port, PortDirection::output);
            from_reg = &component_types(*child);
            if (!from_port) {
                err("UNKNOWN_PORT", desc + ": child '" + c.from_component +
                                        "' has no output port '" + c.from_port + "'");
                continue;
            }
        }

        const Port* to_port = nullptr;
        const TypeRegistry* to_reg = nullptr;
        if (c.to_component.empty()) {
            to_port = spec.find_port(c.to_port, PortDirection::output);
            to_reg = &spec.data_types;
            if (!to_port) {
                err("UNKNOWN_PORT", desc + ": no boundary output port '" + c.to_port + "'");
                continue;
            }
        } else {
            if (c.from_component == c.to_component) {
                err("SELF_LOOP", desc + " feeds a component back to itself in zero time");
                continue;
            }
            const Component* child = spec.find_child(c.to_component);
            if (!child) {
                err("UNKNOWN_COMPONENT", desc + ": no child '" + c.to_component + "'");
                continue;
            }
            to_port = component_port(*child, c.to_port, PortDirection::input);
            to_reg = &component_types(*child);
            if (!to_port) {
                err("UNKNOWN_PORT", desc + ": child '" + c.to_component +
                                        "' has no input port '" + c.to_port + "'");
                continue;
            }
        }

        if (!same_type(from_port->message_type, *from_reg, to_port->message_type, *to_reg))
            err("TYPE_MISMATCH", desc + ": '" + from_port->message_type + "' does not match '" +
                                     to_port->message_type + "'");
    }

    return out;
}

inline std::vector<Diagnostic> validate_component(const Component& c) {
    return c.is_atomic() ? validate_atomic(c.atomic()) : validate_coupled(c.coupled());
}

// ---------------------------------------------------------------------------
// Routing resolution. Shared by the simulator (runtime delivery) and
// flatten (static rewiring) so both impose the same deterministic order:
// couplings are scanned in declaration order and nested boundaries are
// resolved depth-first.
// ---------------------------------------------------------------------------
struct Endpoint {
    std::vector<std::string> path;  // atomic path from root; empty = root boundary
    std::string port;
    friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

namespace detail_routing {

// Follows an input port downward to the atomic inputs it feeds.
inline void descend_input(const Component& comp, std::vector<std::string>& path,
                          const std::string& port, std::vector<Endpoint>& out) {
    if (comp.is_atomic()) {
        out.push_back({path, port});
        return;
    }
    const CoupledSpec& cs = comp.coupled();
    for (const auto& c : cs.couplings) {
        if (!c.from_component.empty() || c.from_port != port) continue;
        if (c.to_component.empty()) continue;  // boundary-to-boundary is rejected by validate
        const Component* child = cs.find_child(c.to_component);
        if (!child) continue;
        path.push_back(c.to_component);
        descend_input(*child, path, c.to_port, out);
        path.pop_back();
    }
}

// Node chain from the root to the parent of the emitting child.
inline const Component* navigate(const Component& root, const std::vector<std::string>& path,
                                 std::size_t count) {
    const Component* cur = &root;
    for (std::size_t i = 0; i < count; ++i) {
        if (cur->is_atomic()) return nullptr;
        const Component* next = cur->coupled().find_child(path[i]);
        if (!next) return nullptr;
        cur = next;
    }
    return cur;
}

inline void resolve_up(const Component& root, const std::vector<std::string>& emitter_path,
                       std::size_t level, const std::string& child_name,
                       const std::string& port, std::vector<Endpoint>& out) {
    const Component* parent = navigate(root, emitter_path, level);
    if (!parent || parent->is_atomic()) return;
    const CoupledSpec& cs = parent->coupled();
    for (const auto& c : cs.couplings) {
        if (c.from_component != child_name || c.from_port != port) continue;
        if (c.to_component.empty()) {
            if (level == 0) {
                out.push_back({{}, c.to_port});  // reached the root boundary
            } else {
                resolve_up(root, emitter_path, level - 1, emitter_path[level - 1], c.to_port,
                           out);
            }
        } else {
            const Component* child = cs.find_child(c.to_component);
            if (!child) continue;
            std::vector<std::string> p(emitter_path.begin(), emitter_path.begin() + level);
            p.push_back(c.to_component);
            descend_input(*child, p, c.to_port, out);
        }
    }
}

inline void collect_atomics(const Component& comp, std::vector<std::string>& path,
                            std::vector<std::pair<std::vector<std::string>, const AtomicSpec*>>& out) {
    if (comp.is_atomic()) {
        out.emplace_back(path, &comp.atomic());
        return;
    }
    for (const auto& [name, child] : comp.coupled().children) {
        path.push_back(name);
        collect_atomics(child, path, out);
        path.pop_back();
    }
}

}  // namespace detail_routing

// Atomic-level (or root boundary) destinations of an output emitted by the
// atomic at `emitter_path` on `port`, in deterministic delivery order.
inline std::vector<Endpoint> resolve_output(const Component& root,
                                            const std::vector<std::string>& emitter_path,
                                            const std::string& port) {
    std::vector<Endpoint> out;
    if (emitter_path.empty()) return out;  // root atomic output leaves the system
    detail_routing::resolve_up(root, emitter_path, emitter_path.size() - 1,
                               emitter_path.back(), port, out);
    return out;
}

// Atomic-level destinations of an input arriving at `path` (a component,
// possibly the root itself) on `port`.
inline std::vector<Endpoint> resolve_input(const Component& root,
                                           const std::vector<std::string>& path,
                                           const std::string& port) {
    std::vector<Endpoint> out;
    const Component* c = detail_routing::navigate(root, path, path.size());
    if (!c) return out;
    std::vector<std::string> p = path;
    detail_routing::descend_input(*c, p, port, out);
    return out;
}

// All atomic leaves with their paths, in depth-first declaration order.
inline std::vector<std::pair<std::vector<std::string>, const AtomicSpec*>> collect_atomics(
    const Component& root) {
    std::vector<std::pair<std::vector<std::string>, const AtomicSpec*>> out;
    std::vector<std::string> path;
    detail_routing::collect_atomics(root, path, out);
    return out;
}

// ---------------------------------------------------------------------------
// Closure under coupling: rewrite a hierarchy as a single-level coupled
// model. Children are the atomic leaves, named by their dot-joined paths;
// couplings are the fully resolved atomic-to-atomic routes plus boundary
// routes. Boundary ports are preserved.
// ---------------------------------------------------------------------------
inline CoupledSpec flatten(const CoupledSpec& spec) {
    Component root{spec};
    CoupledSpec flat;
    flat.name = spec.name;
    flat.ports = spec.ports;
    flat.data_types = spec.data_types;

    auto join = [](const std::vector<std::string>& path) {
        std::string s;
        for (std::size_t i = 0; i < path.size(); ++i) {
            if (i) s += '.';
            s += path[i];
        }
        return s;
    };

    auto atomics = collect_atomics(root);
    for (const auto& [path, aspec] : atomics) {
        AtomicSpec copy = *aspec;
        flat.children.emplace_back(join(path), Component{std::move(copy)});
    }

    // Boundary inputs first (mirrors injection routing), then each atomic's
    // outputs in declaration order.
    for (const auto& p : spec.ports) {
        if (p.direction != PortDirection::input) continue;
        for (const auto& ep : resolve_input(root, {}, p.name))
            flat.couplings.push_back({"", p.name, join(ep.path), ep.port});
    }
    for (const auto& [path, aspec] : atomics) {
        for (const auto& port : aspec->ports) {
            if (port.direction != PortDirection::output) continue;
            for (const auto& ep : resolve_output(root, path, port.name)) {
                if (ep.path.empty())
                    flat.couplings.push_back({join(path), port.name, "", ep.port});
                else
                    flat.couplings.push_back({join(path), port.name, join(ep.path), ep.port});
            }
        }
    }
    return flat;
}

}  // namespace sesim::devs
