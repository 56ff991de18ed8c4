// The sesim command-line tool, driven end to end as a subprocess: exit
// codes, stdout/stderr contracts, byte-identical reruns, and the bundled
// model / suite name fallbacks.

#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sesim/devs/simulator.hpp"
#include "sesim/devs/types.hpp"
#include "sesim/exp/config.hpp"
#include "sesim/exp/run.hpp"
#include "sesim/models/brooks.hpp"
#include "sesim/models/fms.hpp"
#include "sesim/sd/simulate.hpp"

namespace {

using namespace sesim;

const std::filesystem::path kRepo = SESIM_SOURCE_DIR;

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = std::filesystem::temp_directory_path() /
               ("sesim-cli-" + std::to_string(::getpid()));
        std::filesystem::create_directories(dir_);
    }
    void TearDown() override { std::filesystem::remove_all(dir_); }

    std::filesystem::path put(const std::string& name, const std::string& text) {
        auto p = dir_ / name;
        std::ofstream(p, std::ios::binary) << text;
        return p;
    }

    // Runs `sesim <args>` through the shell, capturing both streams.
    CliResult run(const std::string& args, const std::string& env = "") {
        auto out = dir_ / "stdout.txt";
        auto err = dir_ / "stderr.txt";
        std::string cmd = env + (env.empty() ? "" : " ") + "\"" SESIM_CLI_PATH "\" " + args +
                          " >'" + out.string() + "' 2>'" + err.string() + "'";
        int status = std::system(cmd.c_str());
        CliResult r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(out);
        r.err = slurp(err);
        return r;
    }

    std::filesystem::path dir_;
};

std::string repo(const std::string& rel) { return (kRepo / rel).string(); }

// ---------------------------------------------------------------------------
// parse
// ---------------------------------------------------------------------------

TEST_F(Cli, ParseAcceptsEveryBundledFile) {
    EXPECT_EQ(run("parse " + repo("models/brooks.sd")).code, 0);
    EXPECT_EQ(run("parse " + repo("models/fms.devsc")).code, 0);
    EXPECT_EQ(run("parse " + repo("experiments/table1.cfg")).code, 0);
    EXPECT_EQ(run("parse " + repo("models/validation/brooks-default.vv")).code, 0);
    EXPECT_EQ(run("parse " + repo("models/validation/trace-golden.vv")).code, 0);

    // The mediator declares its initial hold twice; that is worth a warning
    // but not a failure.
    CliResult r = run("parse " + repo("models/mediator.devsnl"));
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.err.find("warning DUPLICATE_HOLD"), std::string::npos);
}

TEST_F(Cli, ParseReportsProblemsOnStderrAndExitsOne) {
    auto bad = put("broken.devsnl",
                   "accepts input on In with type Thing!\n"
                   "to start hold in s0 for time 1!\n");
    CliResult r = run("parse '" + bad.string() + "'");
    EXPECT_EQ(r.code, 1);
    EXPECT_TRUE(r.out.empty());
    EXPECT_NE(r.err.find("broken.devsnl"), std::string::npos);
    EXPECT_NE(r.err.find(" error "), std::string::npos);

    // A composition whose child file is missing is a content problem too.
    auto orphan = put("orphan.devsc",
                      "component kid from \"no-such-file.devsnl\"!\n");
    EXPECT_EQ(run("parse '" + orphan.string() + "'").code, 1);
}

TEST_F(Cli, ParseExitsTwoWhenTheFileCannotBeRead) {
    CliResult r = run("parse " + repo("models/absent.devsnl"));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("cannot read"), std::string::npos);

    auto odd = put("notes.txt", "hello\n");
    EXPECT_EQ(run("parse '" + odd.string() + "'").code, 2);
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

TEST_F(Cli, RunWritesTheTrajectoryAndRerunsAreByteIdentical) {
    auto a = dir_ / "a.csv";
    auto b = dir_ / "b.csv";
    EXPECT_EQ(run("run brooks.sd -o '" + a.string() + "'").code, 0);
    EXPECT_EQ(run("run brooks.sd -o '" + b.string() + "'").code, 0);

    const std::string expected = sd::run(models::brooks_model()).to_csv();
    EXPECT_EQ(slurp(a), expected);
    EXPECT_EQ(slurp(a), slurp(b));
}

TEST_F(Cli, RunAppliesConstantOverridesAndTheHorizon) {
    CliResult r = run("run brooks.sd --set staffing_pulse=4 --set entropy_factor=0.03"
                      " --until 150");
    ASSERT_EQ(r.code, 0);
    sd::SdModel m = models::brooks_model();
    m.time.stop = 150;
    EXPECT_EQ(r.out, sd::run_with(m, {{"staffing_pulse", 4}}).to_csv());

    EXPECT_EQ(run("run brooks.sd --set warp=1").code, 1);
    EXPECT_NE(run("run brooks.sd --set warp=1").err.find("UNKNOWN_CONSTANT"),
              std::string::npos);
    EXPECT_EQ(run("run brooks.sd --set nonsense").code, 2);
    EXPECT_EQ(run("run brooks.sd --until -3").code, 2);
}

TEST_F(Cli, RunEmitsEventTracesForDiscreteModels) {
    // Capped run: the flood never crosses the threshold by t=50.
    CliResult capped = run("run fms.devsc --until 50");
    ASSERT_EQ(capped.code, 0);
    devs::Simulator cap_sim(models::fms_model());
    EXPECT_EQ(capped.out, devs::to_csv(cap_sim.advance(devs::SimTime::of(50))));
    EXPECT_EQ(capped.out.find("Alarm"), std::string::npos);

    // Uncapped run: the model runs until it goes quiet, alarm included.
    CliResult full = run("run fms");
    ASSERT_EQ(full.code, 0);
    devs::Simulator sim(models::fms_model());
    devs::EventTrace trace;
    for (;;) {
        devs::SimTime t = sim.next_event_time();
        if (t.is_infinite()) break;
        auto chunk = sim.advance(t);
        trace.events.insert(trace.events.end(), chunk.events.begin(), chunk.events.end());
    }
    EXPECT_EQ(full.out, devs::to_csv(trace));
    EXPECT_NE(full.out.find("Alarm"), std::string::npos);

    // The autonomous mediator makes one move and passivates.
    CliResult quiet = run("run mediator");
    ASSERT_EQ(quiet.code, 0);
    EXPECT_EQ(quiet.out,
              "time,path,port,direction,type,payload_json\n"
              "1,,,internal,,\"{\"\"from\"\":\"\"s0\"\",\"\"to\"\":\"\"s1\"\"}\"\n");
}

TEST_F(Cli, RunRefusesTrajectoryFlagsOnEventModels) {
    EXPECT_EQ(run("run fms --set staffing_pulse=2").code, 2);
    EXPECT_EQ(run("run fms --plot-data").code, 2);
}

TEST_F(Cli, PlotDataWritesPerVariableSeries) {
    auto out = dir_ / "traj.csv";
    ASSERT_EQ(run("run brooks.sd -o '" + out.string() + "' --plot-data").code, 0);

    auto team = dir_ / "traj.team_size.csv";
    ASSERT_TRUE(std::filesystem::exists(team));
    std::string text = slurp(team);
    EXPECT_EQ(text.substr(0, text.find('\n')), "time,team_size");
    EXPECT_NE(text.find("\n0,10\n"), std::string::npos);

    // One file per trajectory column.
    sd::Trajectory traj = sd::run(models::brooks_model());
    for (const auto& var : traj.variables)
        EXPECT_TRUE(std::filesystem::exists(dir_ / ("traj." + var + ".csv"))) << var;
}

TEST_F(Cli, RunExitsTwoForUnknownModels) {
    CliResult r = run("run no-such-model");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("bundled"), std::string::npos);
}

// ---------------------------------------------------------------------------
// experiment
// ---------------------------------------------------------------------------

TEST_F(Cli, DesignOnlyPrintsTheTrialTable) {
    CliResult r = run("experiment " + repo("experiments/table1.cfg") + " --design-only");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out,
              "trial,staffing_pulse,entropy_factor\n"
              "0,0,0.03\n"
              "1,2,0.03\n"
              "2,4,0.03\n"
              "3,6,0.03\n"
              "4,0,0.06\n"
              "5,2,0.06\n"
              "6,4,0.06\n"
              "7,6,0.06\n");
}

TEST_F(Cli, ExperimentMatchesTheLibraryAndParallelChangesNothing) {
    auto seq = dir_ / "seq.csv";
    auto par = dir_ / "par.csv";
    ASSERT_EQ(run("experiment " + repo("experiments/table1.cfg") + " -o '" +
                  seq.string() + "'")
                  .code,
              0);
    ASSERT_EQ(run("experiment " + repo("experiments/table1.cfg") + " --parallel -o '" +
                  par.string() + "'")
                  .code,
              0);
    EXPECT_EQ(slurp(seq), slurp(par));

    auto cfg = experiment::load_experiment_file(kRepo / "experiments/table1.cfg");
    auto design = experiment::full_factorial(cfg.factors);
    experiment::RunOptions opts;
    opts.replications = cfg.replications;
    opts.seed = cfg.seed;
    auto result = experiment::run_experiment(
        design, cfg.responses, experiment::sd_runner(models::brooks_model(), {}),
        /*deterministic=*/true, opts);
    EXPECT_EQ(slurp(seq), result.to_csv());
}

TEST_F(Cli, ExperimentListsEveryConfigProblemAndExitsOne) {
    auto bad = put("bad.cfg",
                   "model brooks\n"
                   "factor warp_drive = 1, 2\n"
                   "factor staffing_pulse = 0, 2\n"
                   "factor shields = 3\n"
                   "set phasers = 9\n"
                   "response final = final_value(production_rate)\n");
    CliResult r = run("experiment '" + bad.string() + "'");
    EXPECT_EQ(r.code, 1);
    EXPECT_TRUE(r.out.empty());
    EXPECT_NE(r.err.find("UNRESOLVED_FACTOR"), std::string::npos);
    EXPECT_NE(r.err.find("warp_drive"), std::string::npos);
    EXPECT_NE(r.err.find("shields"), std::string::npos);
    EXPECT_NE(r.err.find("phasers"), std::string::npos);

    EXPECT_EQ(run("experiment '" + put("empty.cfg", "factor a = 1\n").string() + "'").code,
              1);  // never names a model
    EXPECT_EQ(run("experiment " + repo("experiments/absent.cfg")).code, 2);
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

TEST_F(Cli, ValidateRunsTheBundledSuitesByName) {
    CliResult brooks = run("validate brooks.sd --suite brooks-default");
    EXPECT_EQ(brooks.code, 0);
    EXPECT_NE(brooks.out.find("8 checks, 0 failed"), std::string::npos);

    CliResult mediator = run("validate mediator.devsnl --suite trace-golden");
    EXPECT_EQ(mediator.code, 0);
    EXPECT_NE(mediator.out.find("1 check, 0 failed"), std::string::npos);

    // The same suites also run from their shipped files.
    EXPECT_EQ(run("validate brooks.sd --suite " +
                  repo("models/validation/brooks-default.vv"))
                  .code,
              0);
    EXPECT_EQ(run("validate mediator.devsnl --suite " +
                  repo("models/validation/trace-golden.vv"))
                  .code,
              0);
}

TEST_F(Cli, ValidateReportsFailuresAndWritesTheCsv) {
    auto suite = put("strict.vv",
                     "model brooks\n"
                     "check ramp = monotone_increasing(completed_work)\n"
                     "check impossible = band(production_rate, final_value) "
                     "between 0 and 1\n");
    auto report = dir_ / "report.csv";
    CliResult r = run("validate brooks.sd --suite '" + suite.string() + "' -o '" +
                      report.string() + "'");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("pass  ramp"), std::string::npos);
    EXPECT_NE(r.out.find("FAIL  impossible"), std::string::npos);
    EXPECT_NE(r.out.find("2 checks, 1 failed"), std::string::npos);

    std::string csv = slurp(report);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "check,kind,verdict,metric,value,threshold");
    EXPECT_NE(csv.find("impossible,band,fail"), std::string::npos);
}

TEST_F(Cli, ValidateTreatsBrokenSuitesAsConfigErrors) {
    // A tolerance below zero can never pass; that is a mistake in the suite,
    // so it must not read as a model failure.
    auto bad = put("bad.vv",
                   "model brooks\n"
                   "check gold = reference(production_rate, \"x.csv\") mae -1\n");
    CliResult r = run("validate brooks.sd --suite '" + bad.string() + "'");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("can never be met"), std::string::npos);

    EXPECT_EQ(run("validate brooks.sd --suite no-such-suite").code, 2);
    EXPECT_EQ(run("validate no-such-model --suite brooks-default").code, 2);
}

TEST_F(Cli, ValidateWarnsWhenSuiteAndModelDisagree) {
    CliResult r = run("validate fms.devsc --suite brooks-default");
    EXPECT_EQ(r.code, 1);  // every trajectory check fails against an event model
    EXPECT_NE(r.err.find("written for model 'brooks'"), std::string::npos);
}

// ---------------------------------------------------------------------------
// list-models, output redirection, usage
// ---------------------------------------------------------------------------

TEST_F(Cli, ListModelsNamesTheBundledTrio) {
    CliResult r = run("list-models");
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("brooks"), std::string::npos);
    EXPECT_NE(r.out.find("fms"), std::string::npos);
    EXPECT_NE(r.out.find("mediator"), std::string::npos);
    EXPECT_NE(r.out.find("stock-and-flow"), std::string::npos);
}

TEST_F(Cli, OutDirRedirectsRelativeOutputs) {
    auto outs = dir_ / "outs";
    CliResult r = run("run brooks.sd -o nested/traj.csv",
                      "SESIM_OUT_DIR='" + outs.string() + "'");
    ASSERT_EQ(r.code, 0);
    EXPECT_TRUE(std::filesystem::exists(outs / "nested/traj.csv"));

    // Absolute outputs stay where they point.
    auto abs = dir_ / "abs.csv";
    ASSERT_EQ(run("run brooks.sd -o '" + abs.string() + "'",
                  "SESIM_OUT_DIR='" + outs.string() + "'")
                  .code,
              0);
    EXPECT_TRUE(std::filesystem::exists(abs));
}

TEST_F(Cli, UsageMistakesExitTwoAndHelpExitsZero) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("frobnicate").code, 2);
    EXPECT_EQ(run("run").code, 2);
    EXPECT_EQ(run("validate brooks.sd").code, 2);  // --suite is required
    EXPECT_EQ(run("--help").code, 0);
    EXPECT_EQ(run("run --help").code, 0);
}

}  // namespace
