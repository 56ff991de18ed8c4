#pragma once

// Bundled reference model: project staffing dynamics. A veteran team works
// through a fixed-size project; when perceived schedule slip crosses a
// threshold, a one-time batch of rookies is added. Rookie mentoring and a
// larger communication graph depress productivity before the reinforcements
// pay off. `brooks_model()` builds the model through the API; the text
// returned by `brooks_sd_text()` ships as models/brooks.sd and parses to the
// same model.

#include <string>
#include <utility>
#include <vector>

#include "sesim/sd/expr.hpp"
#include "sesim/sd/model.hpp"

namespace sesim::models {

// Exact contents of the bundled models/brooks.sd file.
inline const std::string& brooks_sd_text() {
    static const std::string text = R"sd(# Project staffing dynamics: a veteran team works through a fixed-size
# project; when perceived schedule slip crosses a threshold, a one-time
# batch of rookies is added. Rookies produce less, consume veteran
# mentoring time, and enlarge the communication graph, so productivity
# dips before the reinforcements pay off.
#
# Tunable inputs (experiment factors): staffing_pulse, entropy_factor.

const initial_veterans = 10
const nominal_productivity = 1
const assimilation_time = 20
const mentoring_fraction = 0.25
const rookie_productivity = 0.4
const comm_scale = 0.025
const entropy_factor = 0.03
const staffing_pulse = 2
const project_size = 1350
const planned_duration = 135
const slip_threshold = 0.05

stock rookies init 0 nonneg
stock veterans init initial_veterans nonneg
stock completed_work init 0 nonneg

aux team_size = rookies + veterans
aux communication_overhead = MIN(1, entropy_factor * team_size * (team_size - 1) * comm_scale)
aux mentoring_load = mentoring_fraction * rookies
aux effective_veterans = MAX(0, veterans - mentoring_load)
aux production_rate = nominal_productivity * (effective_veterans + rookie_productivity * rookies) * (1 - communication_overhead)
aux scheduled_completion = project_size * TIME / planned_duration
aux perceived_slip = MAX(0, (scheduled_completion - completed_work) / project_size)
aux staffing_done = IF(MAX(rookies, veterans - initial_veterans) > 0, 1, 0)
aux allocation_trigger = MAX(IF(perceived_slip >= slip_threshold, 1, 0), staffing_done)

# The whole batch lands inside a single step: pulse / DT integrates to
# exactly `staffing_pulse` people, once, at the first triggering step.
flow personnel_allocation to rookies rate IF(allocation_trigger > 0.5, 1, 0) * IF(staffing_done > 0.5, 0, 1) * staffing_pulse / DT
flow assimilation_rate from rookies to veterans rate rookies / assimilation_time
flow completion to completed_work rate production_rate

time 0 300 0.25 euler
)sd";
    return text;
}

inline sd::SdModel brooks_model() {
    sd::SdModel m;
    m.name = "brooks";

    const std::vector<std::pair<const char*, double>> constants = {
        {"initial_veterans", 10},   {"nominal_productivity", 1},
        {"assimilation_time", 20},  {"mentoring_fraction", 0.25},
        {"rookie_productivity", 0.4}, {"comm_scale", 0.025},
        {"entropy_factor", 0.03},   {"staffing_pulse", 2},
        {"project_size", 1350},     {"planned_duration", 135},
        {"slip_threshold", 0.05},
    };
    for (const auto& [name, value] : constants) m.constants.push_back({name, value});

    m.stocks.push_back({"rookies", sd::num(0), true});
    m.stocks.push_back({"veterans", sd::parse_expr("initial_veterans"), true});
    m.stocks.push_back({"completed_work", sd::num(0), true});

    auto aux = [&](const char* name, const char* expr) {
        m.auxes.push_back({name, sd::parse_expr(expr)});
    };
    aux("team_size", "rookies + veterans");
    aux("communication_overhead",
        "MIN(1, entropy_factor * team_size * (team_size - 1) * comm_scale)");
    aux("mentoring_load", "mentoring_fraction * rookies");
    aux("effective_veterans", "MAX(0, veterans - mentoring_load)");
    aux("production_rate",
        "nominal_productivity * (effective_veterans + rookie_productivity * rookies)"
        " * (1 - communication_overhead)");
    aux("scheduled_completion", "project_size * TIME / planned_duration");
    aux("perceived_slip", "MAX(0, (scheduled_completion - completed_work) / project_size)");
    aux("staffing_done", "IF(MAX(rookies, veterans - initial_veterans) > 0, 1, 0)");
    aux("allocation_trigger", "MAX(IF(perceived_slip >= slip_threshold, 1, 0), staffing_done)");

    // pulse / DT integrates to exactly `staffing_pulse` people in the one
    // step where the trigger is up and nobody has been added yet.
    m.flows.push_back({"personnel_allocation", "", "rookies",
                       sd::parse_expr("IF(allocation_trigger > 0.5, 1, 0)"
                                      " * IF(staffing_done > 0.5, 0, 1)"
                                      " * staffing_pulse / DT")});
    m.flows.push_back(
        {"assimilation_rate", "rookies", "veterans", sd::parse_expr("rookies / assimilation_time")});
    m.flows.push_back({"completion", "", "completed_work", sd::parse_expr("production_rate")});

    m.time = {0, 300, 0.25, sd::TimeSpec::Method::euler};
    return m;
}

}  // namespace sesim::models
