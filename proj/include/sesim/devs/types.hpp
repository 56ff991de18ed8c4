#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sesim/detail/strings.hpp"
#include "sesim/error.hpp"

namespace sesim::devs {

// ---------------------------------------------------------------------------
// Simulation time: a nonnegative real or +infinity (passive).
// Ordering and addition follow IEEE semantics, so inf absorbs as expected.
// ---------------------------------------------------------------------------
class SimTime {
public:
    constexpr SimTime() = default;

    static SimTime of(double v) {
        if (std::isnan(v) || v < 0) throw Error("BAD_TIME", "time must be >= 0, got " + detail::num_to_string(v));
        SimTime t;
        t.v_ = v;
        return t;
    }
    static constexpr SimTime infinity() {
        SimTime t;
        t.v_ = std::numeric_limits<double>::infinity();
        return t;
    }

    double value() const { return v_; }
    bool is_infinite() const { return std::isinf(v_); }
    bool is_finite() const { return !std::isinf(v_); }

    friend auto operator<=>(SimTime a, SimTime b) { return a.v_ <=> b.v_; }
    friend bool operator==(SimTime a, SimTime b) { return a.v_ == b.v_; }
    friend SimTime operator+(SimTime a, SimTime b) {
        SimTime t;
        t.v_ = a.v_ + b.v_;
        return t;
    }

private:
    double v_ = 0;
};

// ---------------------------------------------------------------------------
// Message data types: named records whose fields are primitives or other
// named types. A TypeRegistry holds every definition a spec refers to.
// ---------------------------------------------------------------------------
enum class Primitive { integer, real, text };

inline const char* to_string(Primitive p) {
    switch (p) {
        case Primitive::integer: return "Integer";
        case Primitive::real: return "Real";
        default: return "String";
    }
}

inline std::optional<Primitive> primitive_from_name(const std::string& n) {
    if (n == "Integer") return Primitive::integer;
    if (n == "Real") return Primitive::real;
    if (n == "String") return Primitive::text;
    return std::nullopt;
}

// Field type: a primitive or a reference to a named DataType.
struct FieldType {
    std::variant<Primitive, std::string> v;

    bool is_primitive() const { return std::holds_alternative<Primitive>(v); }
    Primitive primitive() const { return std::get<Primitive>(v); }
    const std::string& type_name() const { return std::get<std::string>(v); }
    std::string display() const {
        return is_primitive() ? to_string(primitive()) : type_name();
    }
    friend bool operator==(const FieldType&, const FieldType&) = default;
};

struct DataType {
    struct Field {
        std::string name;
        FieldType type;
        friend bool operator==(const Field&, const Field&) = default;
    };
    std::string name;
    std::vector<Field> fields;  // declaration order

    const Field* find(const std::string& fname) const {
        for (const auto& f : fields)
            if (f.name == fname) return &f;
        return nullptr;
    }
    friend bool operator==(const DataType&, const DataType&) = default;
};

using TypeRegistry = std::map<std::string, DataType>;

// Structural equality of two type names across possibly different
// registries: same name, same fields, recursively. Couplings use this so a
// type declared independently in two model files still matches.
inline bool same_type(const std::string& a, const TypeRegistry& ra,
                      const std::string& b, const TypeRegistry& rb,
                      int depth = 0) {
    if (depth > 64) return false;  // cyclic definitions never match
    if (a != b) return false;
    auto pa = primitive_from_name(a), pb = primitive_from_name(b);
    if (pa || pb) return pa == pb;
    auto ia = ra.find(a);
    auto ib = rb.find(b);
    if (ia == ra.end() || ib == rb.end()) return false;
    const DataType& da = ia->second;
    const DataType& db = ib->second;
    if (da.fields.size() != db.fields.size()) return false;
    for (std::size_t i = 0; i < da.fields.size(); ++i) {
        const auto& fa = da.fields[i];
        const auto& fb = db.fields[i];
        if (fa.name != fb.name) return false;
        if (fa.type.is_primitive() != fb.type.is_primitive()) return false;
        if (fa.type.is_primitive()) {
            if (fa.type.primitive() != fb.type.primitive()) return false;
        } else if (!same_type(fa.type.type_name(), ra, fb.type.type_name(), rb, depth + 1)) {
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Ports and message values.
// ---------------------------------------------------------------------------
enum class PortDirection { input, output };

struct Port {
    std::string name;
    PortDirection direction = PortDirection::input;
    std::string message_type;  // DataType or primitive name
    friend bool operator==(const Port&, const Port&) = default;
};

struct MessageValue;

// A field's runtime value: integer, real, text, or a nested record. The
// nested record lives behind a pointer (std::variant cannot hold the still
// incomplete MessageValue directly) but copies deeply, so FieldValue keeps
// plain value semantics.
class FieldValue {
public:
    FieldValue() : v_(std::int64_t{0}) {}
    FieldValue(std::int64_t i) : v_(i) {}
    FieldValue(double d) : v_(d) {}
    FieldValue(std::string s) : v_(std::move(s)) {}
    FieldValue(MessageValue m);

    FieldValue(const FieldValue& o);
    FieldValue(FieldValue&&) noexcept = default;
    FieldValue& operator=(const FieldValue& o) {
        FieldValue tmp(o);
        v_ = std::move(tmp.v_);
        return *this;
    }
    FieldValue& operator=(FieldValue&&) noexcept = default;

    bool is_integer() const { return std::holds_alternative<std::int64_t>(v_); }
    bool is_real() const { return std::holds_alternative<double>(v_); }
    bool is_text() const { return std::holds_alternative<std::string>(v_); }
    bool is_record() const {
        return std::holds_alternative<std::unique_ptr<MessageValue>>(v_);
    }

    std::int64_t integer() const { return std::get<std::int64_t>(v_); }
    double real() const { return std::get<double>(v_); }
    const std::string& text() const { return std::get<std::string>(v_); }
    const MessageValue& record() const {
        return *std::get<std::unique_ptr<MessageValue>>(v_);
    }
    MessageValue& record() { return *std::get<std::unique_ptr<MessageValue>>(v_); }

    // Numeric view: integers widen to double; text/records have none.
    std::optional<double> numeric() const {
        if (is_integer()) return static_cast<double>(integer());
        if (is_real()) return real();
        return std::nullopt;
    }

    friend bool operator==(const FieldValue& a, const FieldValue& b);

private:
    std::variant<std::int64_t, double, std::string, std::unique_ptr<MessageValue>> v_;
};

// Typed record value. Fields are kept sorted by name so equality and the
// JSON encoding are canonical regardless of construction order.
struct MessageValue {
    std::string type;
    std::vector<std::pair<std::string, FieldValue>> fields;

    void set(const std::string& name, FieldValue value) {
        for (auto& [n, fv] : fields) {
            if (n == name) {
                fv = std::move(value);
                return;
            }
        }
        auto it = fields.begin();
        while (it != fields.end() && it->first < name) ++it;
        fields.insert(it, {name, std::move(value)});
    }
    const FieldValue* find(const std::string& name) const {
        for (const auto& [n, fv] : fields)
            if (n == name) return &fv;
        return nullptr;
    }
    FieldValue* find(const std::string& name) {
        for (auto& [n, fv] : fields)
            if (n == name) return &fv;
        return nullptr;
    }
    friend bool operator==(const MessageValue& a, const MessageValue& b) {
        return a.type == b.type && a.fields == b.fields;
    }
};

inline FieldValue::FieldValue(MessageValue m)
    : v_(std::make_unique<MessageValue>(std::move(m))) {}

inline FieldValue::FieldValue(const FieldValue& o)
    : v_(std::int64_t{0}) {
    if (o.is_record())
        v_ = std::make_unique<MessageValue>(o.record());
    else if (o.is_integer())
        v_ = o.integer();
    else if (o.is_real())
        v_ = o.real();
    else
        v_ = o.text();
}

inline bool operator==(const FieldValue& a, const FieldValue& b) {
    if (a.v_.index() != b.v_.index()) return false;
    if (a.is_record()) return a.record() == b.record();
    if (a.is_integer()) return a.integer() == b.integer();
    if (a.is_real()) return a.real() == b.real();
    return a.text() == b.text();
}

// Canonical JSON: keys sorted (the field vector already is), integers bare,
// reals in shortest round-trip form.
inline std::string to_json(const FieldValue& fv);

inline std::string to_json(const MessageValue& m) {
    std::string out = "{";
    bool first = true;
    for (const auto& [name, fv] : m.fields) {
        if (!first) out += ',';
        first = false;
        out += '"';
        out += detail::json_escape(name);
        out += "\":";
        out += to_json(fv);
    }
    out += '}';
    return out;
}

inline std::string to_json(const FieldValue& fv) {
    if (fv.is_integer()) return std::to_string(fv.integer());
    if (fv.is_real()) return detail::num_to_string(fv.real());
    if (fv.is_text()) return '"' + detail::json_escape(fv.text()) + '"';
    return to_json(fv.record());
}

// Zero value of a type: ints 0, reals 0, strings "", records recursively.
// Used when an output must fire before anything was ever received.
inline MessageValue zero_value(const std::string& type_name, const TypeRegistry& reg,
                               int depth = 0) {
    MessageValue m;
    m.type = type_name;
    if (depth > 64) return m;
    auto it = reg.find(type_name);
    if (it == reg.end()) return m;
    for (const auto& f : it->second.fields) {
        if (f.type.is_primitive()) {
            switch (f.type.primitive()) {
                case Primitive::integer: m.set(f.name, FieldValue(std::int64_t{0})); break;
                case Primitive::real: m.set(f.name, FieldValue(0.0)); break;
                case Primitive::text: m.set(f.name, FieldValue(std::string{})); break;
            }
        } else {
            m.set(f.name, FieldValue(zero_value(f.type.type_name(), reg, depth + 1)));
        }
    }
    return m;
}

// Checks that a value structurally matches a declared type.
inline bool value_matches_type(const MessageValue& m, const std::string& type_name,
                               const TypeRegistry& reg, int depth = 0) {
    if (depth > 64) return false;
    if (m.type != type_name) return false;
    auto it = reg.find(type_name);
    if (it == reg.end()) return primitive_from_name(type_name).has_value() && m.fields.empty();
    const DataType& dt = it->second;
    if (m.fields.size() != dt.fields.size()) return false;
    for (const auto& f : dt.fields) {
        const FieldValue* fv = m.find(f.name);
        if (!fv) return false;
        if (f.type.is_primitive()) {
            switch (f.type.primitive()) {
                case Primitive::integer:
                    if (!fv->is_integer()) return false;
                    break;
                case Primitive::real:
                    if (!fv->is_real()) return false;
                    break;
                case Primitive::text:
                    if (!fv->is_text()) return false;
                    break;
            }
        } else {
            if (!fv->is_record()) return false;
            if (!value_matches_type(fv->record(), f.type.type_name(), reg, depth + 1))
                return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Events and traces.
// ---------------------------------------------------------------------------
enum class EventKind { input, output, internal, dropped };

inline const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::input: return "input";
        case EventKind::output: return "output";
        case EventKind::internal: return "internal";
        default: return "dropped";
    }
}

inline std::optional<EventKind> event_kind_from_string(const std::string& s) {
    if (s == "input") return EventKind::input;
    if (s == "output") return EventKind::output;
    if (s == "internal") return EventKind::internal;
    if (s == "dropped") return EventKind::dropped;
    return std::nullopt;
}

// One observable simulation event. `path` is the chain of child names from
// the root (empty when the root itself is the atomic). `internal` rows have
// no port/value; they carry the state change instead.
struct Event {
    SimTime time;
    std::vector<std::string> path;
    std::string port;
    EventKind kind = EventKind::output;
    std::optional<MessageValue> value;
    std::string from_state;  // internal rows only
    std::string to_state;

    std::string path_str() const {
        std::string out;
        for (std::size_t i = 0; i < path.size(); ++i) {
            if (i) out += '.';
            out += path[i];
        }
        return out;
    }
    friend bool operator==(const Event&, const Event&) = default;
};

struct EventTrace {
    std::vector<Event> events;  // nondecreasing time

    void append(Event e) { events.push_back(std::move(e)); }
    friend bool operator==(const EventTrace&, const EventTrace&) = default;
};

inline std::string payload_json(const Event& e) {
    if (e.kind == EventKind::internal) {
        return "{\"from\":\"" + detail::json_escape(e.from_state) + "\",\"to\":\"" +
               detail::json_escape(e.to_state) + "\"}";
    }
    return e.value ? to_json(*e.value) : std::string("{}");
}

// CSV schema: time,path,port,direction,type,payload_json
inline std::string to_csv(const EventTrace& trace) {
    std::string out = "time,path,port,direction,type,payload_json\n";
    for (const Event& e : trace.events) {
        out += detail::num_to_csv(e.time.value());
        out += ',';
        out += e.path_str();
        out += ',';
        out += e.port;
        out += ',';
        out += to_string(e.kind);
        out += ',';
        out += e.value ? e.value->type : std::string{};
        out += ",\"";
        // JSON payload is quoted as a CSV field; embedded quotes doubled.
        std::string pj = payload_json(e);
        for (char c : pj) {
            out += c;
            if (c == '"') out += '"';
        }
        out += "\"\n";
    }
    return out;
}

}  // namespace sesim::devs
