#pragma once

// Shared fixtures: the mediator relay spec built by hand as plain data, the
// record types it speaks, and helpers to build typed message values. The
// hand-built spec is the reference point for both the simulator tests and
// the language tests (compiling the bundled source must yield exactly this).

#include <cstdint>
#include <string>
#include <utility>

#include "sesim/devs/coupled.hpp"
#include "sesim/devs/simulator.hpp"

namespace ts {

using namespace sesim;
using namespace sesim::devs;

inline DataType int_value_type(std::string name) {
    return DataType{std::move(name), {{"value", FieldType{Primitive::integer}}}};
}

// The record family used by the sensor/mediator/gateway components.
inline TypeRegistry mediator_types() {
    TypeRegistry reg;
    reg.emplace("Distance", int_value_type("Distance"));
    reg.emplace("Abscissa", int_value_type("Abscissa"));
    reg.emplace("Ordinate", int_value_type("Ordinate"));
    reg.emplace("Coordinate",
                DataType{"Coordinate",
                         {{"x", FieldType{std::string("Abscissa")}},
                          {"y", FieldType{std::string("Ordinate")}}}});
    reg.emplace("Depth", int_value_type("Depth"));
    reg.emplace("Measure",
                DataType{"Measure",
                         {{"coordinate", FieldType{std::string("Coordinate")}},
                          {"depth", FieldType{std::string("Depth")}}}});
    return reg;
}

// Mediator relay: after a one-unit settling hold it waits for the two peer
// coordinates, then forwards each received measure after a one-unit delay,
// returning to the listening state.
inline AtomicSpec mediator_spec() {
    AtomicSpec m;
    m.name = "mediator";
    m.data_types = mediator_types();
    m.states = {"s0", "s1", "s2", "s3", "s4", "s5"};
    m.initial_state = "s0";
    m.time_advance = {
        {"s0", SimTime::of(1)},      {"s1", SimTime::infinity()},
        {"s2", SimTime::infinity()}, {"s3", SimTime::infinity()},
        {"s4", SimTime::of(1)},      {"s5", SimTime::of(1)},
    };
    m.internal_transitions = {{"s0", "s1"}, {"s4", "s5"}, {"s5", "s3"}};
    m.external_transitions = {
        {{"s1", "FromCoordinate"}, {{std::nullopt, "s2"}}},
        {{"s1", "ToCoordinate"}, {{std::nullopt, "s2"}}},
        {{"s2", "FromCoordinate"}, {{std::nullopt, "s3"}}},
        {{"s2", "ToCoordinate"}, {{std::nullopt, "s3"}}},
        {{"s3", "FromSensors"}, {{std::nullopt, "s4"}}},
    };
    m.outputs = {{"s4", {{"Measure", std::nullopt}}}};
    m.ports = {
        {"FromCoordinate", PortDirection::input, "Coordinate"},
        {"ToCoordinate", PortDirection::input, "Coordinate"},
        {"FromSensors", PortDirection::input, "Measure"},
        {"Measure", PortDirection::output, "Measure"},
    };
    return m;
}

inline MessageValue int_record(std::string type, std::int64_t v) {
    MessageValue m;
    m.type = std::move(type);
    m.set("value", FieldValue(v));
    return m;
}

inline MessageValue coordinate(std::int64_t x, std::int64_t y) {
    MessageValue m;
    m.type = "Coordinate";
    m.set("x", FieldValue(int_record("Abscissa", x)));
    m.set("y", FieldValue(int_record("Ordinate", y)));
    return m;
}

inline MessageValue measure(std::int64_t x, std::int64_t y, std::int64_t depth) {
    MessageValue m;
    m.type = "Measure";
    m.set("coordinate", FieldValue(coordinate(x, y)));
    m.set("depth", FieldValue(int_record("Depth", depth)));
    return m;
}

// Minimal registry holding just the single-field Distance record.
inline TypeRegistry distance_only_types() {
    TypeRegistry reg;
    reg.emplace("Distance", int_value_type("Distance"));
    return reg;
}

// One-shot emitter: holds for `delay`, emits on "Out", then passivates.
// With no template value the emission falls back to the type's zero value.
inline AtomicSpec one_shot(std::string name, double delay,
                           std::optional<MessageValue> payload = std::nullopt) {
    AtomicSpec a;
    a.name = std::move(name);
    a.data_types = distance_only_types();
    a.states = {"armed", "done"};
    a.initial_state = "armed";
    a.time_advance = {{"armed", SimTime::of(delay)}, {"done", SimTime::infinity()}};
    a.internal_transitions = {{"armed", "done"}};
    a.outputs = {{"armed", {{"Out", std::move(payload)}}}};
    a.ports = {{"Out", PortDirection::output, "Distance"}};
    return a;
}

// Sink that counts inputs by walking a fixed state chain c0 -> c1 -> ...
inline AtomicSpec counter(std::string name, int capacity) {
    AtomicSpec a;
    a.name = std::move(name);
    a.data_types = distance_only_types();
    for (int i = 0; i <= capacity; ++i) a.states.push_back("c" + std::to_string(i));
    a.initial_state = "c0";
    for (const auto& s : a.states) a.time_advance.emplace(s, SimTime::infinity());
    for (int i = 0; i < capacity; ++i)
        a.external_transitions[{"c" + std::to_string(i), "In"}] = {
            {std::nullopt, "c" + std::to_string(i + 1)}};
    a.ports = {{"In", PortDirection::input, "Distance"}};
    return a;
}

}  // namespace ts
