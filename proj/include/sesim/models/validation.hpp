#pragma once

// Bundled validation material: the two suites shipped under
// models/validation/ plus the golden event trace they reference. The texts
// here are the exact bytes of the shipped files (tests enforce it), so the
// command-line tool can resolve the bundled suite names without knowing
// where the repository lives on disk.

#include <map>
#include <string>

namespace sesim::models {

// Exact contents of the bundled models/validation/brooks-default.vv file.
inline const std::string& brooks_default_suite_text() {
    static const std::string text = R"vv(# Staffing-surge sanity checks for the bundled project-staffing model.
# Run with: sesim validate brooks.sd --suite brooks-default

model brooks

# Adding people mid-project hurts before it helps: throughput dips right
# after the surge and climbs back within two assimilation periods.
check productivity_dip = drop_then_recover(production_rate) within 40

# Work only ever accumulates.
check steady_progress = monotone_increasing(completed_work)

# The whole staffing batch lands inside a single integration step...
check staffing_step = continuous_at(team_size, 100.25) jump 2.5

# ...but the immediate throughput shock stays small.
check smooth_output = continuous_at(production_rate, 100.25) jump 0.1

# Nobody leaves: the team peaks at exactly veterans + pulse.
check team_peak = band(team_size, max_value) between 11.9 and 12.1

# Long-run throughput ends above the pre-surge level.
check final_rate = band(production_rate, final_value) between 10.8 and 10.83

# The dip bottoms out where it always has.
check dip_floor = band(production_rate, min_value) between 9.25 and 9.3

# Extreme corner: a triple-size surge under doubled communication entropy
# still pays off by the end of the horizon.
check heavy_surge = band(production_rate, final_value) between 10.2 and 10.28 with staffing_pulse = 6 and entropy_factor = 0.06
)vv";
    return text;
}

// Exact contents of the bundled models/validation/trace-golden.vv file.
inline const std::string& trace_golden_suite_text() {
    static const std::string text = R"vv(# Golden-trace conformance for the bundled store-and-forward mediator.
# Run with: sesim validate mediator.devsnl --suite trace-golden
#
# The trace records one full exchange: two neighbour positions arrive,
# a sensor reading follows, and the mediator forwards the fused
# measurement one time unit later before settling back into its
# listening state. `replaying inputs` re-injects the recorded inputs,
# so the replay must reproduce every event, byte for byte.

model mediator

check relay = conformance("golden/mediator-trace.csv") replaying inputs
)vv";
    return text;
}

// Exact contents of models/validation/golden/mediator-trace.csv: the
// mediator run that receives its two neighbour positions at t=2 and t=3, a
// sensor reading at t=5, and forwards the fused measurement at t=6.
inline const std::string& mediator_golden_trace_csv() {
    static const std::string text = R"csv(time,path,port,direction,type,payload_json
1,,,internal,,"{""from"":""s0"",""to"":""s1""}"
2,,FromCoordinate,input,Coordinate,"{""x"":{""value"":3},""y"":{""value"":4}}"
3,,ToCoordinate,input,Coordinate,"{""x"":{""value"":8},""y"":{""value"":2}}"
5,,FromSensors,input,Measure,"{""coordinate"":{""x"":{""value"":3},""y"":{""value"":4}},""depth"":{""value"":7}}"
6,,Measure,output,Measure,"{""coordinate"":{""x"":{""value"":3},""y"":{""value"":4}},""depth"":{""value"":7}}"
6,,,internal,,"{""from"":""s4"",""to"":""s5""}"
7,,,internal,,"{""from"":""s5"",""to"":""s3""}"
)csv";
    return text;
}

// Suite text by bundled name; nullptr for names that are not bundled.
inline const std::string* bundled_suite_text(const std::string& name) {
    if (name == "brooks-default") return &brooks_default_suite_text();
    if (name == "trace-golden") return &trace_golden_suite_text();
    return nullptr;
}

// Data files the bundled suites reference, keyed exactly as written in the
// suite text — hand these to SuiteContext::virtual_files.
inline std::map<std::string, std::string> bundled_suite_data() {
    return {{"golden/mediator-trace.csv", mediator_golden_trace_csv()}};
}

}  // namespace sesim::models
