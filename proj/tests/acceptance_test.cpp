// Acceptance suite: the ten gate criteria for the toolkit, one test and one
// printed PASS/FAIL line each. Tolerances are pinned in code next to the
// assertions they guard.

#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sesim/devs/coupled.hpp"
#include "sesim/devs/simulator.hpp"
#include "sesim/devs/types.hpp"
#include "sesim/exp/config.hpp"
#include "sesim/exp/design.hpp"
#include "sesim/exp/run.hpp"
#include "sesim/lang/compile.hpp"
#include "sesim/lang/coupled.hpp"
#include "sesim/lang/loader.hpp"
#include "sesim/models/brooks.hpp"
#include "sesim/models/fms.hpp"
#include "sesim/models/validation.hpp"
#include "sesim/sd/model.hpp"
#include "sesim/sd/simulate.hpp"
#include "sesim/vv/conformance.hpp"
#include "test_support.hpp"

namespace {

using namespace sesim;
using Clock = std::chrono::steady_clock;

const std::filesystem::path kRepo = SESIM_SOURCE_DIR;

// Prints the per-criterion verdict line; call as the last statement so the
// verdict reflects every assertion above it.
void verdict(int criterion, const Clock::time_point& started, double budget_seconds,
             const char* what) {
    double elapsed = std::chrono::duration<double>(Clock::now() - started).count();
    if (budget_seconds > 0) {
        EXPECT_LT(elapsed, budget_seconds) << what;
    }
    std::printf("[criterion %2d] %s  %s  (%.3fs)\n", criterion,
                ::testing::Test::HasFailure() ? "FAIL" : "PASS", what, elapsed);
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    EXPECT_TRUE(in.good()) << p;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// The eight staffing trajectories of the bundled factorial table, computed
// once and shared by the qualitative-law and conservation criteria.
const std::vector<double> kPulses = {0, 2, 4, 6};
const std::vector<double> kEntropies = {0.03, 0.06};

const sd::Trajectory& staffing_trial(double pulse, double entropy) {
    static std::map<std::pair<double, double>, sd::Trajectory> cache;
    auto key = std::make_pair(pulse, entropy);
    auto hit = cache.find(key);
    if (hit == cache.end())
        hit = cache
                  .emplace(key, sd::run_with(models::brooks_model(),
                                             {{"staffing_pulse", pulse},
                                              {"entropy_factor", entropy}}))
                  .first;
    return hit->second;
}

double brooks_constant(const std::string& name) {
    for (const auto& c : models::brooks_model().constants)
        if (c.name == name) return c.value;
    ADD_FAILURE() << "no constant " << name;
    return 0;
}

std::size_t trigger_index(const sd::Trajectory& traj) {
    auto trigger = traj.series("allocation_trigger");
    for (std::size_t i = 0; i < trigger.size(); ++i)
        if (trigger[i] >= 0.5) return i;
    ADD_FAILURE() << "the staffing trigger never fired";
    return 0;
}

// Minimal subprocess driver for the criteria that exercise the shipped
// command-line tool.
struct CliResult {
    int code = -1;
    std::string out;
};

CliResult run_cli(const std::string& args) {
    static const std::filesystem::path dir = [] {
        auto d = std::filesystem::temp_directory_path() /
                 ("sesim-accept-" + std::to_string(::getpid()));
        std::filesystem::create_directories(d);
        return d;
    }();
    auto out = dir / "stdout.txt";
    std::string cmd = "\"" SESIM_CLI_PATH "\" " + args + " >'" + out.string() +
                      "' 2>'" + (dir / "stderr.txt").string() + "'";
    int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out)};
}

// ---------------------------------------------------------------------------
// 1. The bundled factorial table: 4 staffing levels crossed with 2 entropy
//    levels, first factor varying fastest, reproduced by library and tool.
// ---------------------------------------------------------------------------

TEST(Acceptance, C01_FactorialTableReproduces) {
    auto started = Clock::now();

    auto cfg = experiment::load_experiment_file(kRepo / "experiments/table1.cfg");
    experiment::Design design = experiment::full_factorial(cfg.factors);

    ASSERT_EQ(design.factors.size(), 2u);
    EXPECT_EQ(design.factors[0].name, "staffing_pulse");
    EXPECT_EQ(design.factors[1].name, "entropy_factor");
    ASSERT_EQ(design.trials.size(), 8u);
    for (std::size_t i = 0; i < 8; ++i) {
        const auto& a = design.trials[i].assignment;
        EXPECT_EQ(design.trials[i].index, i);
        EXPECT_EQ(a.at("staffing_pulse"), kPulses[i % 4]) << "trial " << i;
        EXPECT_EQ(a.at("entropy_factor"), kEntropies[i / 4]) << "trial " << i;
    }

    CliResult r = run_cli("experiment " + (kRepo / "experiments/table1.cfg").string() +
                          " --design-only");
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out,
              "trial,staffing_pulse,entropy_factor\n"
              "0,0,0.03\n1,2,0.03\n2,4,0.03\n3,6,0.03\n"
              "4,0,0.06\n5,2,0.06\n6,4,0.06\n7,6,0.06\n");

    verdict(1, started, 1.0, "factorial table: 8 trials, first factor fastest");
}

// ---------------------------------------------------------------------------
// 2. The shipped mediator source compiles to exactly the published
//    six-state store-and-forward machine.
// ---------------------------------------------------------------------------

TEST(Acceptance, C02_MediatorSourceCompilesToTheSixStateMachine) {
    auto started = Clock::now();

    auto parsed = lang::parse(slurp(kRepo / "models/mediator.devsnl"), "mediator.devsnl");
    ASSERT_FALSE(has_errors(parsed.diagnostics)) << format_diagnostics(parsed.diagnostics);
    devs::AtomicSpec spec = lang::compile(parsed.ast);

    EXPECT_EQ(spec.states, (std::vector<std::string>{"s0", "s1", "s2", "s3", "s4", "s5"}));
    EXPECT_EQ(spec.initial_state, "s0");

    EXPECT_EQ(spec.ta("s0"), devs::SimTime::of(1));
    EXPECT_TRUE(spec.ta("s1").is_infinite());
    EXPECT_TRUE(spec.ta("s2").is_infinite());
    EXPECT_TRUE(spec.ta("s3").is_infinite());
    EXPECT_EQ(spec.ta("s4"), devs::SimTime::of(1));
    EXPECT_EQ(spec.ta("s5"), devs::SimTime::of(1));

    std::size_t inputs = 0, outputs = 0;
    for (const auto& p : spec.ports)
        (p.direction == devs::PortDirection::input ? inputs : outputs)++;
    EXPECT_EQ(inputs, 3u);
    EXPECT_EQ(outputs, 1u);

    auto target = [&](const std::string& state, const std::string& port) {
        auto it = spec.external_transitions.find({state, port});
        if (it == spec.external_transitions.end() || it->second.size() != 1)
            return std::string();
        return it->second[0].target;
    };
    // "receive Coordinate" binds both coordinate-typed ports.
    EXPECT_EQ(target("s1", "FromCoordinate"), "s2");
    EXPECT_EQ(target("s1", "ToCoordinate"), "s2");
    EXPECT_EQ(target("s2", "FromCoordinate"), "s3");
    EXPECT_EQ(target("s2", "ToCoordinate"), "s3");
    EXPECT_EQ(target("s3", "FromSensors"), "s4");

    EXPECT_EQ(spec.internal_transitions.at("s0"), "s1");
    EXPECT_EQ(spec.internal_transitions.at("s4"), "s5");
    EXPECT_EQ(spec.internal_transitions.at("s5"), "s3");

    ASSERT_EQ(spec.outputs.count("s4"), 1u);
    ASSERT_EQ(spec.outputs.at("s4").size(), 1u);
    EXPECT_EQ(spec.outputs.at("s4")[0].port, "Measure");

    verdict(2, started, 1.0, "mediator source compiles to the six-state machine");
}

// ---------------------------------------------------------------------------
// 3. The golden mediator exchange: coordinates at t=2 and t=3, a reading at
//    t=5, exactly one forwarded measure at t=6, idle again at t=7.
// ---------------------------------------------------------------------------

TEST(Acceptance, C03_MediatorGoldenTraceIsExact) {
    auto started = Clock::now();

    devs::Simulator sim(models::mediator_model());
    sim.inject(devs::SimTime::of(2), {}, "FromCoordinate", ts::coordinate(3, 4));
    sim.inject(devs::SimTime::of(3), {}, "ToCoordinate", ts::coordinate(8, 2));
    sim.inject(devs::SimTime::of(5), {}, "FromSensors", ts::measure(3, 4, 7));
    devs::EventTrace trace = sim.advance(devs::SimTime::of(8));

    std::vector<const devs::Event*> outputs;
    for (const auto& e : trace.events)
        if (e.kind == devs::EventKind::output) outputs.push_back(&e);
    ASSERT_EQ(outputs.size(), 1u);
    EXPECT_EQ(outputs[0]->time, devs::SimTime::of(6));
    EXPECT_EQ(outputs[0]->port, "Measure");
    ASSERT_TRUE(outputs[0]->value.has_value());
    EXPECT_EQ(*outputs[0]->value, ts::measure(3, 4, 7));

    const devs::Event& last = trace.events.back();
    EXPECT_EQ(last.kind, devs::EventKind::internal);
    EXPECT_EQ(last.time, devs::SimTime::of(7));
    EXPECT_EQ(last.to_state, "s3");
    EXPECT_EQ(sim.state_of({}), "s3");

    // The run is the shipped golden trace, and the replay checker agrees.
    EXPECT_EQ(devs::to_csv(trace), models::mediator_golden_trace_csv());
    devs::Component mediator(models::mediator_model());
    auto stimuli = vv::stimuli_from_trace(mediator, trace);
    EXPECT_TRUE(vv::trace_conformance(mediator, trace, "golden", stimuli).passed);

    verdict(3, started, 1.0, "mediator golden trace: one forwarded measure at t=6");
}

// ---------------------------------------------------------------------------
// 4. Qualitative staffing laws on every surged trial: identical to the
//    unsurged baseline before the trigger, a dip within two assimilation
//    periods after it, and a recovery past the pre-surge level.
// ---------------------------------------------------------------------------

TEST(Acceptance, C04_StaffingSurgeObeysTheQualitativeLaws) {
    auto started = Clock::now();
    const double window = 2 * brooks_constant("assimilation_time");  // 40 time units

    for (double entropy : kEntropies) {
        const sd::Trajectory& baseline = staffing_trial(0, entropy);
        auto base_rate = baseline.series("production_rate");

        for (double pulse : {2.0, 4.0, 6.0}) {
            SCOPED_TRACE("pulse " + std::to_string(pulse) + ", entropy " +
                         std::to_string(entropy));
            const sd::Trajectory& traj = staffing_trial(pulse, entropy);
            auto rate = traj.series("production_rate");
            std::size_t trig = trigger_index(traj);
            ASSERT_EQ(trigger_index(baseline), trig);

            // (a) Before the trigger the surge is invisible.
            for (std::size_t i = 0; i < trig; ++i)
                ASSERT_NEAR(rate[i], base_rate[i], 1e-9) << "t=" << traj.times[i];

            // (b) The rate drops below its pre-trigger value within the window.
            const double pre = rate[trig];
            const double deadline = traj.times[trig] + window;
            std::size_t drop = 0;
            for (std::size_t i = trig + 1;
                 i < rate.size() && traj.times[i] <= deadline && drop == 0; ++i)
                if (rate[i] < pre) drop = i;
            ASSERT_NE(drop, 0u) << "no dip within " << window << " time units";

            // (c) ...and later climbs past it, inside the horizon.
            bool recovered = false;
            for (std::size_t i = drop + 1; i < rate.size() && !recovered; ++i)
                recovered = rate[i] > pre;
            EXPECT_TRUE(recovered);
        }
    }

    verdict(4, started, 10.0, "surged trials: baseline before, dip within, recovery after");
}

// ---------------------------------------------------------------------------
// 5. Personnel conservation: at every grid point of every trial the team
//    equals the founders plus whatever the pulse has delivered.
// ---------------------------------------------------------------------------

TEST(Acceptance, C05_PersonnelIsConservedAtEveryGridPoint) {
    auto started = Clock::now();
    const double founders = brooks_constant("initial_veterans");

    for (double entropy : kEntropies) {
        for (double pulse : kPulses) {
            SCOPED_TRACE("pulse " + std::to_string(pulse) + ", entropy " +
                         std::to_string(entropy));
            const sd::Trajectory& traj = staffing_trial(pulse, entropy);
            auto rookies = traj.series("rookies");
            auto veterans = traj.series("veterans");
            std::size_t trig = trigger_index(traj);

            // The batch integrates over the step that begins at the trigger,
            // so it is on board from the next grid point on.
            for (std::size_t i = 0; i < traj.times.size(); ++i) {
                double delivered = i > trig ? pulse : 0;
                ASSERT_NEAR(rookies[i] + veterans[i], founders + delivered, 1e-9)
                    << "t=" << traj.times[i];
            }
        }
    }

    verdict(5, started, 0, "team size == founders + delivered pulse, everywhere");
}

// ---------------------------------------------------------------------------
// 6. Closure under coupling: a hierarchy and its flattened form produce the
//    same (dot-normalized) trace, for the flood model and a nested pipeline.
// ---------------------------------------------------------------------------

devs::CoupledSpec nested_pipeline() {
    devs::CoupledSpec inner;
    inner.name = "inner";
    inner.ports = {{"In", devs::PortDirection::input, "Distance"}};
    inner.data_types = ts::distance_only_types();
    inner.children.emplace_back("cnt", devs::Component(ts::counter("cnt", 5)));
    inner.couplings = {{"", "In", "cnt", "In"}};

    devs::CoupledSpec line;
    line.name = "line";
    line.ports = {{"In", devs::PortDirection::input, "Distance"}};
    line.data_types = ts::distance_only_types();
    line.children.emplace_back(
        "gen", devs::Component(ts::one_shot("gen", 3, ts::int_record("Distance", 5))));
    line.children.emplace_back("inner", devs::Component(inner));
    line.couplings = {{"", "In", "inner", "In"}, {"gen", "Out", "inner", "In"}};
    return line;
}

TEST(Acceptance, C06_FlatteningPreservesEveryTrace) {
    auto started = Clock::now();

    using Scenario = std::function<std::string(const devs::CoupledSpec&)>;
    auto compare = [](const devs::CoupledSpec& spec, const Scenario& scenario) {
        std::string hier = scenario(spec);
        std::string flat = scenario(devs::flatten(spec));
        EXPECT_FALSE(hier.empty());
        EXPECT_EQ(hier, flat);
    };

    const devs::CoupledSpec fms = models::fms_model();
    // Autonomous run through the alarm.
    compare(fms, [](const devs::CoupledSpec& s) {
        devs::Simulator sim(s);
        return devs::to_csv(sim.advance(devs::SimTime::of(60)));
    });
    // A hand-delivered deep reading straight to the gateway.
    compare(fms, [](const devs::CoupledSpec& s) {
        devs::Simulator sim(s);
        sim.inject(devs::SimTime::of(7.5), {"gateway"}, "FromSensors",
                   ts::measure(9, 9, 12));
        return devs::to_csv(sim.advance(devs::SimTime::of(20)));
    });
    // An early extra position announcement into the mediator chain.
    compare(fms, [](const devs::CoupledSpec& s) {
        devs::Simulator sim(s);
        sim.inject(devs::SimTime::of(0.5), {"mediator2"}, "ToCoordinate",
                   ts::coordinate(1, 2));
        return devs::to_csv(sim.advance(devs::SimTime::of(30)));
    });

    const devs::CoupledSpec line = nested_pipeline();
    // Autonomous: the generator feeds the nested counter.
    compare(line, [](const devs::CoupledSpec& s) {
        devs::Simulator sim(s);
        return devs::to_csv(sim.advance(devs::SimTime::of(10)));
    });
    // Boundary injections routed through two levels.
    compare(line, [](const devs::CoupledSpec& s) {
        devs::Simulator sim(s);
        sim.inject(devs::SimTime::of(1), {}, "In", ts::int_record("Distance", 1));
        sim.inject(devs::SimTime::of(2), {}, "In", ts::int_record("Distance", 2));
        return devs::to_csv(sim.advance(devs::SimTime::of(10)));
    });
    // Two injections collide with the generator's own instant.
    compare(line, [](const devs::CoupledSpec& s) {
        devs::Simulator sim(s);
        sim.inject(devs::SimTime::of(3), {}, "In", ts::int_record("Distance", 1));
        sim.inject(devs::SimTime::of(3), {}, "In", ts::int_record("Distance", 2));
        return devs::to_csv(sim.advance(devs::SimTime::of(10)));
    });

    // The states agree too, under the dot-renaming.
    devs::Simulator hier(nested_pipeline());
    devs::Simulator flat(devs::flatten(nested_pipeline()));
    hier.advance(devs::SimTime::of(10));
    flat.advance(devs::SimTime::of(10));
    EXPECT_EQ(hier.state_of({"inner", "cnt"}), "c1");
    EXPECT_EQ(flat.state_of({"inner.cnt"}), "c1");

    verdict(6, started, 5.0, "hierarchical and flattened runs match on every scenario");
}

// ---------------------------------------------------------------------------
// 7. Numerical convergence on the linear-decay oracle ds/dt = -0.1 s.
// ---------------------------------------------------------------------------

TEST(Acceptance, C07_IntegratorsConvergeOnTheDecayOracle) {
    auto started = Clock::now();

    auto parsed = sd::parse_sd(
        "stock s init 100\n"
        "flow decay from s rate 0.1 * s\n"
        "time 0 10 0.5 euler\n",
        "decay.sd");
    ASSERT_FALSE(has_errors(parsed.diagnostics)) << format_diagnostics(parsed.diagnostics);
    sd::SdModel model = parsed.model;
    const double exact = 100 * std::exp(-1.0);

    auto euler_error = [&](double dt) {
        sd::SdModel m = model;
        m.time.dt = dt;
        return std::abs(sd::run(m).final_value("s") - exact);
    };
    double e1 = euler_error(0.5), e2 = euler_error(0.25), e3 = euler_error(0.125);
    // First-order method: halving dt must halve the error (ratio within 10%).
    EXPECT_GT(e1 / e2, 1.8);
    EXPECT_LT(e1 / e2, 2.2);
    EXPECT_GT(e2 / e3, 1.8);
    EXPECT_LT(e2 / e3, 2.2);

    sd::SdModel rk = model;
    rk.time.dt = 0.25;
    rk.time.method = sd::TimeSpec::Method::rk4;
    EXPECT_LT(std::abs(sd::run(rk).final_value("s") - exact) / exact, 1e-6);

    verdict(7, started, 1.0, "euler halves its error with dt; rk4 lands within 1e-6");
}

// ---------------------------------------------------------------------------
// 8. Determinism at the tool level: identical bytes across reruns, and
//    across sequential vs parallel experiment execution.
// ---------------------------------------------------------------------------

TEST(Acceptance, C08_EveryRunIsByteDeterministic) {
    auto started = Clock::now();

    CliResult once = run_cli("run brooks.sd --set staffing_pulse=4");
    CliResult again = run_cli("run brooks.sd --set staffing_pulse=4");
    EXPECT_EQ(once.code, 0);
    EXPECT_FALSE(once.out.empty());
    EXPECT_EQ(once.out, again.out);

    CliResult trace1 = run_cli("run fms --until 60");
    CliResult trace2 = run_cli("run fms --until 60");
    EXPECT_EQ(trace1.code, 0);
    EXPECT_EQ(trace1.out, trace2.out);

    const std::string table = (kRepo / "experiments/table1.cfg").string();
    CliResult seq = run_cli("experiment " + table);
    CliResult par = run_cli("experiment " + table + " --parallel");
    EXPECT_EQ(seq.code, 0);
    EXPECT_EQ(par.code, 0);
    EXPECT_FALSE(seq.out.empty());
    EXPECT_EQ(seq.out, par.out);

    verdict(8, started, 10.0, "reruns and parallel experiments are byte-identical");
}

// ---------------------------------------------------------------------------
// 9. Pretty-printer round trip: every bundled component source survives
//    compile -> print -> compile unchanged.
// ---------------------------------------------------------------------------

TEST(Acceptance, C09_ComponentSourcesRoundTripThroughThePrinter) {
    auto started = Clock::now();

    std::size_t checked = 0;
    for (const auto& entry : std::filesystem::directory_iterator(kRepo / "models")) {
        if (entry.path().extension() != ".devsnl") continue;
        SCOPED_TRACE(entry.path().filename().string());
        ++checked;

        auto first = lang::parse(slurp(entry.path()), entry.path().filename().string());
        ASSERT_FALSE(has_errors(first.diagnostics)) << format_diagnostics(first.diagnostics);
        devs::AtomicSpec original = lang::compile(first.ast);

        // The model is named after the source stem, so print and reparse
        // under the same name.
        std::string printed = lang::pretty_print(original);
        auto second = lang::parse(printed, entry.path().filename().string());
        ASSERT_FALSE(has_errors(second.diagnostics))
            << format_diagnostics(second.diagnostics);
        EXPECT_EQ(lang::compile(second.ast), original);
    }
    EXPECT_GE(checked, 1u);

    verdict(9, started, 1.0, "every bundled component source round-trips exactly");
}

// ---------------------------------------------------------------------------
// 10. Alarm causality: exactly one alarm, caused by the one super-threshold
//     reading; remove that reading and no alarm ever fires.
// ---------------------------------------------------------------------------

TEST(Acceptance, C10_TheAlarmHasExactlyOneCause) {
    auto started = Clock::now();

    auto run_quiet = [](devs::Component model) {
        devs::Simulator sim(std::move(model));
        devs::EventTrace trace;
        for (;;) {
            devs::SimTime t = sim.next_event_time();
            if (t.is_infinite()) break;
            auto chunk = sim.advance(t);
            trace.events.insert(trace.events.end(), chunk.events.begin(),
                                chunk.events.end());
        }
        return trace;
    };

    devs::EventTrace trace = run_quiet(devs::Component(models::fms_model()));
    std::vector<std::size_t> alarms, deep_measures;
    for (std::size_t i = 0; i < trace.events.size(); ++i) {
        const auto& e = trace.events[i];
        if (e.kind != devs::EventKind::output) continue;
        if (e.port == "Alarm") alarms.push_back(i);
        if (e.port == "Measure" && e.value &&
            devs::to_json(*e.value).find("\"depth\":{\"value\":11}") != std::string::npos)
            deep_measures.push_back(i);
    }
    ASSERT_EQ(alarms.size(), 1u);
    ASSERT_FALSE(deep_measures.empty());
    const devs::Event& alarm = trace.events[alarms[0]];
    EXPECT_EQ(alarm.time, devs::SimTime::of(58));
    EXPECT_EQ(alarm.path, std::vector<std::string>{"gateway"});
    EXPECT_EQ(*alarm.value, ts::measure(3, 4, 11));
    // The forwarded super-threshold reading precedes its alarm, same instant.
    EXPECT_LT(deep_measures.back(), alarms[0]);
    EXPECT_EQ(trace.events[deep_measures.back()].time, alarm.time);
    EXPECT_EQ(trace.events[deep_measures.back()].path,
              std::vector<std::string>{"mediator2"});

    // Nothing above the threshold by t=50, so no alarm yet either.
    devs::Simulator capped(models::fms_model());
    for (const auto& e : capped.advance(devs::SimTime::of(50)).events)
        EXPECT_NE(e.port, "Alarm");

    // Cap the deepest reading below the flood limit: the alarm never fires.
    std::string calm_text = models::fms_devsc_text();
    auto pos = calm_text.find("depth.value 11");
    ASSERT_NE(pos, std::string::npos);
    calm_text.replace(pos, 14, "depth.value 9");
    auto parsed = lang::parse_coupled(calm_text, "calm.devsc");
    ASSERT_FALSE(has_errors(parsed.diagnostics)) << format_diagnostics(parsed.diagnostics);
    devs::CoupledSpec calm = lang::compile_coupled(parsed.ast, [](const std::string&) {
        return devs::Component(models::mediator_model());
    });
    for (const auto& e : run_quiet(devs::Component(calm)).events)
        EXPECT_NE(e.port, "Alarm");

    verdict(10, started, 1.0, "one alarm, one cause; calm water raises none");
}

}  // namespace
