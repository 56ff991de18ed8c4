#pragma once

// Parameterized builders for the two builtin component shapes the
// composition dialect can declare inline: periodic emitters (sources) and
// threshold monitors. The bundled models reuse these so a model built in
// code and the same model loaded from its file are structurally identical.

#include <optional>
#include <string>
#include <vector>

#include "sesim/devs/atomic.hpp"

namespace sesim::devs {

// Optional announcement phase: emit one value (the type's zero value) on
// `port` when the initial hold of `time` expires.
struct Announce {
    std::string port;
    std::string type;
    double time = 1;
};

// Walks `path` through the declared record structure and sets the numeric
// leaf it names. Integer fields require an integral number. Returns false
// when the path does not exist, crosses a non-record, or the leaf kind
// cannot take the number.
inline bool set_numeric_field(MessageValue& value, const std::string& type_name,
                              const TypeRegistry& reg, const std::vector<std::string>& path,
                              double number) {
    if (path.empty()) return false;
    auto tit = reg.find(type_name);
    if (tit == reg.end()) return false;
    const DataType::Field* field = tit->second.find(path.front());
    if (!field) return false;
    FieldValue* fv = value.find(path.front());
    if (!fv) return false;
    if (path.size() > 1) {
        if (!field->type.is_primitive() && fv->is_record()) {
            std::vector<std::string> rest(path.begin() + 1, path.end());
            return set_numeric_field(fv->record(), field->type.type_name(), reg, rest, number);
        }
        return false;
    }
    if (!field->type.is_primitive()) return false;
    switch (field->type.primitive()) {
        case Primitive::integer: {
            auto i = static_cast<std::int64_t>(number);
            if (static_cast<double>(i) != number) return false;
            *fv = FieldValue(i);
            return true;
        }
        case Primitive::real:
            *fv = FieldValue(number);
            return true;
        default:
            return false;
    }
}

// Emits `readings` one by one on `port`: the first when the clock reaches
// `start`, the rest every `period` after that, then goes quiet. With an
// announcement, a hold of `announce->time` precedes everything and ends
// with the zero-valued announcement. Throws BAD_TIME/NONPOSITIVE_PERIOD on
// inconsistent timing.
inline AtomicSpec periodic_source(const std::string& name, const std::string& port,
                                  const std::string& type, TypeRegistry registry,
                                  double period, double start,
                                  std::vector<MessageValue> readings,
                                  std::optional<Announce> announce = std::nullopt) {
    if (period <= 0)
        throw Error("NONPOSITIVE_PERIOD", "component '" + name + "' needs a period > 0");
    if (start < 0 || (announce && (announce->time < 0 || announce->time > start)))
        throw Error("BAD_TIME", "component '" + name + "' has inconsistent start times");

    AtomicSpec a;
    a.name = name;
    a.data_types = std::move(registry);
    a.ports.push_back({port, PortDirection::output, type});
    if (announce)
        a.ports.push_back({announce->port, PortDirection::output, announce->type});

    std::string first_emitting = readings.empty() ? "done" : "r0";
    if (announce) {
        a.states.push_back("announce");
        a.time_advance.emplace("announce", SimTime::of(announce->time));
        a.internal_transitions.emplace("announce", first_emitting);
        a.outputs["announce"].push_back(
            {announce->port, zero_value(announce->type, a.data_types)});
    }
    double first_hold = announce ? start - announce->time : start;
    for (std::size_t i = 0; i < readings.size(); ++i) {
        std::string st = "r" + std::to_string(i);
        a.states.push_back(st);
        a.time_advance.emplace(st, SimTime::of(i == 0 ? first_hold : period));
        a.internal_transitions.emplace(
            st, i + 1 < readings.size() ? "r" + std::to_string(i + 1) : "done");
        a.outputs[st].push_back({port, std::move(readings[i])});
    }
    a.states.push_back("done");
    a.time_advance.emplace("done", SimTime::infinity());
    a.initial_state = a.states.front();
    return a;
}

// Watches `in_port`; when the numeric field at `path` exceeds `limit` the
// triggering message is re-emitted on `raise_port` within the same
// instant. Everything else is absorbed. An announcement phase may precede
// the watch.
inline AtomicSpec threshold_monitor(const std::string& name, const std::string& in_port,
                                    const std::string& type, TypeRegistry registry,
                                    const std::string& raise_port,
                                    std::vector<std::string> path, double limit,
                                    std::optional<Announce> announce = std::nullopt) {
    AtomicSpec a;
    a.name = name;
    a.data_types = std::move(registry);
    a.ports.push_back({in_port, PortDirection::input, type});
    a.ports.push_back({raise_port, PortDirection::output, type});
    if (announce)
        a.ports.push_back({announce->port, PortDirection::output, announce->type});

    if (announce) {
        if (announce->time < 0)
            throw Error("BAD_TIME", "component '" + name + "' announces at a negative time");
        a.states.push_back("announce");
        a.time_advance.emplace("announce", SimTime::of(announce->time));
        a.internal_transitions.emplace("announce", "wait");
        a.outputs["announce"].push_back(
            {announce->port, zero_value(announce->type, a.data_types)});
    }
    a.states.push_back("wait");
    a.states.push_back("alert");
    a.time_advance.emplace("wait", SimTime::infinity());
    a.time_advance.emplace("alert", SimTime::of(0));
    a.internal_transitions.emplace("alert", "wait");
    TransitionGuard over{std::move(path), TransitionGuard::Cmp::gt, limit};
    a.external_transitions[{"wait", in_port}] = {{over, "alert"}, {std::nullopt, "wait"}};
    a.outputs["alert"].push_back({raise_port, std::nullopt});  // forwards the trigger
    a.initial_state = a.states.front();
    return a;
}

}  // namespace sesim::devs
