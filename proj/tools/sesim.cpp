// sesim — command-line front end for the simulation toolkit.
//
//   sesim parse <file>                     lint a model / experiment / suite file
//   sesim run <model> [options]            simulate one scenario, CSV out
//   sesim experiment <config> [options]    run (or print) a factorial design
//   sesim validate <model> --suite <s>     run a validation suite, report out
//   sesim list-models                      show the bundled models
//
// Exit codes are stable: 0 = success, 1 = the work ran and came back
// negative (error diagnostics, a failed check, an engine error), 2 = the
// request never started (usage mistakes, unreadable input, broken suite).
// All output is deterministic — the same invocation writes the same bytes.
// The only environment knob is SESIM_OUT_DIR: when set, relative output
// paths land under it.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sesim/devs/simulator.hpp"
#include "sesim/devs/trace_io.hpp"
#include "sesim/diagnostics.hpp"
#include "sesim/error.hpp"
#include "sesim/exp/config.hpp"
#include "sesim/exp/design.hpp"
#include "sesim/exp/run.hpp"
#include "sesim/lang/loader.hpp"
#include "sesim/models/brooks.hpp"
#include "sesim/models/fms.hpp"
#include "sesim/models/validation.hpp"
#include "sesim/sd/model.hpp"
#include "sesim/sd/simulate.hpp"
#include "sesim/vv/suite.hpp"

namespace {

using namespace sesim;

constexpr int kOk = 0;       // did what was asked
constexpr int kFailure = 1;  // ran, and the answer is "no"
constexpr int kUsage = 2;    // never started: bad request, unreadable input

// ---------------------------------------------------------------------------
// Output plumbing
// ---------------------------------------------------------------------------

// Relative output paths land under $SESIM_OUT_DIR when it is set. Inputs
// are never redirected.
std::filesystem::path out_path(const std::string& name) {
    std::filesystem::path p = name;
    if (p.is_relative())
        if (const char* dir = std::getenv("SESIM_OUT_DIR"); dir && *dir)
            p = std::filesystem::path(dir) / p;
    return p;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
    }
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out.good())
        throw Error("WRITE_FAILED", "cannot write '" + p.string() + "'");
}

// To the -o file when one was given, to stdout otherwise.
void deliver(const std::string& out_opt, const std::string& text) {
    if (out_opt.empty())
        std::fputs(text.c_str(), stdout);
    else
        write_file(out_path(out_opt), text);
}

void print_diagnostics(const std::vector<Diagnostic>& diags) {
    for (const auto& d : diags) std::fprintf(stderr, "%s\n", d.str().c_str());
}

void print_error(const Error& e) {
    std::fprintf(stderr, "sesim: error %s\n", e.what());
    print_diagnostics(e.diagnostics());
}

// Failures before any work started (absent files, unrecognized formats)
// exit 2; failures of the work itself exit 1.
int exit_for(const Error& e) {
    return e.code() == "FILE_NOT_FOUND" || e.code() == "UNKNOWN_FORMAT" ? kUsage : kFailure;
}

// ---------------------------------------------------------------------------
// Model resolution: file paths first, bundled names as the fallback
// ---------------------------------------------------------------------------

struct BundledModel {
    const char* name;
    const char* kind;
    const char* file;
    const char* blurb;
};

constexpr BundledModel kBundledModels[] = {
    {"brooks", "stock-and-flow", "models/brooks.sd",
     "project staffing dynamics: a mid-project hiring surge dips productivity"},
    {"fms", "discrete-event composition", "models/fms.devsc",
     "flood monitoring: two depth sensors, mediator chain, alarm gateway"},
    {"mediator", "discrete-event component", "models/mediator.devsnl",
     "store-and-forward relay that fuses positions with sensor readings"},
};

struct LoadedModel {
    std::string name;
    std::optional<sd::SdModel> sd;
    std::optional<devs::Component> devs;
};

std::string stem_of(const std::string& ref) {
    return std::filesystem::path(ref).stem().string();
}

std::optional<LoadedModel> bundled_model(const std::string& ref) {
    const std::string base = std::filesystem::path(ref).filename().string();
    if (base == "brooks" || base == "brooks.sd")
        return LoadedModel{"brooks", models::brooks_model(), std::nullopt};
    if (base == "fms" || base == "fms.devsc")
        return LoadedModel{"fms", std::nullopt, devs::Component(models::fms_model())};
    if (base == "mediator" || base == "mediator.devsnl")
        return LoadedModel{"mediator", std::nullopt,
                           devs::Component(models::mediator_model())};
    return std::nullopt;
}

sd::SdModel load_sd_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in.good())
        throw Error("FILE_NOT_FOUND", "cannot open model file '" + file.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    auto parsed = sd::parse_sd(ss.str(), file.string());
    auto checked = sd::check_model(parsed.model);
    parsed.diagnostics.insert(parsed.diagnostics.end(), checked.begin(), checked.end());
    if (has_errors(parsed.diagnostics))
        throw Error("INVALID_MODEL", "model '" + file.string() + "' has errors",
                    std::move(parsed.diagnostics));
    print_diagnostics(parsed.diagnostics);  // warnings survive the filter above
    return parsed.model;
}

// `ref` is a path when such a file exists, a bundled name otherwise.
LoadedModel load_model(const std::string& ref) {
    std::filesystem::path path = ref;
    if (std::filesystem::exists(path)) {
        std::string ext = path.extension().string();
        if (ext == ".sd") return {stem_of(ref), load_sd_file(path), std::nullopt};
        if (ext == ".devsnl" || ext == ".devsc") {
            std::vector<Diagnostic> warnings;
            auto comp = lang::load_model_file(path, &warnings);
            print_diagnostics(warnings);
            return {stem_of(ref), std::nullopt, std::move(comp)};
        }
        throw Error("UNKNOWN_FORMAT", "model file '" + ref +
                                          "' has unrecognized extension '" + ext + "'");
    }
    if (auto bundled = bundled_model(ref)) return std::move(*bundled);
    throw Error("FILE_NOT_FOUND",
                "no file '" + ref + "' and no bundled model by that name (bundled: "
                "brooks, fms, mediator)");
}

// ---------------------------------------------------------------------------
// parse
// ---------------------------------------------------------------------------

int cmd_parse(const std::string& file) {
    std::filesystem::path path = file;
    if (!std::filesystem::exists(path)) {
        std::fprintf(stderr, "sesim: cannot read '%s'\n", file.c_str());
        return kUsage;
    }
    const std::string ext = path.extension().string();

    std::vector<Diagnostic> diags;
    try {
        if (ext == ".sd") {
            std::ifstream in(path, std::ios::binary);
            std::ostringstream ss;
            ss << in.rdbuf();
            auto parsed = sd::parse_sd(ss.str(), file);
            diags = std::move(parsed.diagnostics);
            if (!has_errors(diags)) {
                auto checked = sd::check_model(parsed.model);
                diags.insert(diags.end(), checked.begin(), checked.end());
            }
        } else if (ext == ".devsnl" || ext == ".devsc") {
            lang::load_model_file(path, &diags);
        } else if (ext == ".cfg") {
            auto cfg = experiment::load_experiment_file(path, &diags);
            if (!has_errors(diags)) {
                auto checked = experiment::check_config(cfg, file);
                diags.insert(diags.end(), checked.begin(), checked.end());
            }
        } else if (ext == ".vv") {
            vv::load_suite_file(path, &diags);
        } else {
            std::fprintf(stderr,
                         "sesim: '%s' is not a recognized format "
                         "(.sd, .devsnl, .devsc, .cfg, .vv)\n",
                         file.c_str());
            return kUsage;
        }
    } catch (const Error& e) {
        // The file itself was readable, so whatever the loader tripped on
        // (an unresolvable child, an include cycle) is a content problem.
        print_error(e);
        return kFailure;
    }
    print_diagnostics(diags);
    return has_errors(diags) ? kFailure : kOk;
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

bool parse_assignment(const std::string& text, std::pair<std::string, double>& out) {
    auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) return false;
    auto value = detail::parse_number(detail::trim(text.substr(eq + 1)));
    if (!value) return false;
    out = {std::string(detail::trim(text.substr(0, eq))), *value};
    return true;
}

int run_sd(sd::SdModel model, const std::vector<std::pair<std::string, double>>& sets,
           std::optional<double> until, const std::string& out, bool plot_data,
           const std::string& name) {
    if (until) {
        if (!std::isfinite(*until) || *until <= model.time.start) {
            std::fprintf(stderr, "sesim: --until must lie beyond the model's start time %s\n",
                         detail::num_to_string(model.time.start).c_str());
            return kUsage;
        }
        model.time.stop = *until;
    }
    sd::Trajectory traj;
    try {
        for (const auto& [k, v] : sets) sd::set_constant(model, k, v);
        traj = sd::run(model);
    } catch (const Error& e) {
        print_error(e);
        return kFailure;
    }
    deliver(out, traj.to_csv());
    if (plot_data) {
        const std::string base =
            out.empty() ? name
                        : (std::filesystem::path(out).parent_path() /
                           std::filesystem::path(out).stem())
                              .string();
        for (const auto& var : traj.variables) {
            std::string text = "time," + var + "\n";
            auto series = traj.series(var);
            for (std::size_t i = 0; i < traj.times.size(); ++i)
                text += detail::num_to_csv(traj.times[i]) + "," +
                        detail::num_to_csv(series[i]) + "\n";
            write_file(out_path(base + "." + var + ".csv"), text);
        }
    }
    return kOk;
}

int run_devs(devs::Component model, std::optional<double> until, const std::string& out) {
    devs::EventTrace trace;
    try {
        devs::Simulator sim(std::move(model));
        if (until) {
            if (!std::isfinite(*until) || *until < 0) {
                std::fprintf(stderr, "sesim: --until must be a finite time\n");
                return kUsage;
            }
            trace = sim.advance(devs::SimTime::of(*until));
        } else {
            // No horizon given: run until the model goes quiet.
            for (;;) {
                devs::SimTime t = sim.next_event_time();
                if (t.is_infinite()) break;
                auto chunk = sim.advance(t);
                trace.events.insert(trace.events.end(),
                                    std::make_move_iterator(chunk.events.begin()),
                                    std::make_move_iterator(chunk.events.end()));
            }
        }
    } catch (const Error& e) {
        print_error(e);
        return kFailure;
    }
    deliver(out, devs::to_csv(trace));
    return kOk;
}

int cmd_run(const std::string& model_ref, const std::vector<std::string>& set_opts,
            std::optional<double> until, const std::string& out, bool plot_data) {
    std::vector<std::pair<std::string, double>> sets;
    for (const auto& s : set_opts) {
        std::pair<std::string, double> kv;
        if (!parse_assignment(s, kv)) {
            std::fprintf(stderr, "sesim: --set expects NAME=NUMBER, got '%s'\n", s.c_str());
            return kUsage;
        }
        sets.push_back(std::move(kv));
    }

    LoadedModel model;
    try {
        model = load_model(model_ref);
    } catch (const Error& e) {
        print_error(e);
        return exit_for(e);
    }

    if (model.sd)
        return run_sd(std::move(*model.sd), sets, until, out, plot_data, model.name);

    if (!sets.empty()) {
        std::fprintf(stderr,
                     "sesim: --set adjusts stock-and-flow constants; '%s' is a "
                     "discrete-event model\n",
                     model.name.c_str());
        return kUsage;
    }
    if (plot_data) {
        std::fprintf(stderr,
                     "sesim: --plot-data extracts trajectory variables; '%s' produces an "
                     "event trace\n",
                     model.name.c_str());
        return kUsage;
    }
    return run_devs(std::move(*model.devs), until, out);
}

// ---------------------------------------------------------------------------
// experiment
// ---------------------------------------------------------------------------

std::string design_table(const experiment::Design& design) {
    std::string out = "trial";
    for (const auto& f : design.factors) out += "," + f.name;
    out += "\n";
    for (const auto& t : design.trials) {
        out += std::to_string(t.index);
        for (const auto& f : design.factors)
            out += "," + detail::num_to_csv(t.assignment.at(f.name));
        out += "\n";
    }
    return out;
}

int cmd_experiment(const std::string& config, bool design_only, const std::string& out,
                   bool parallel) {
    std::filesystem::path path = config;
    if (!std::filesystem::exists(path)) {
        std::fprintf(stderr, "sesim: cannot read '%s'\n", config.c_str());
        return kUsage;
    }

    // Collect every problem before deciding: a broken config should read as
    // one report, not as a peel-one-fix-one loop.
    std::vector<Diagnostic> diags;
    experiment::ExperimentConfig cfg;
    try {
        cfg = experiment::load_experiment_file(path, &diags);
    } catch (const Error& e) {
        print_error(e);
        return kFailure;
    }
    auto structural = experiment::check_config(cfg, config);
    diags.insert(diags.end(), structural.begin(), structural.end());

    std::optional<LoadedModel> model;
    if (!cfg.model.empty()) {
        // Model files named by a config resolve like its includes do:
        // relative to the config's own directory. Bundled names win first.
        std::string ref = cfg.model;
        if (!bundled_model(ref)) {
            std::filesystem::path p = ref;
            if (p.is_relative()) ref = (path.parent_path() / p).string();
        }
        try {
            model = load_model(ref);
        } catch (const Error& e) {
            diags.push_back({config, 0, Severity::error, e.code(), e.what()});
        }
        if (model && !model->sd) {
            diags.push_back({config, 0, Severity::error, "UNSUPPORTED",
                             "model '" + cfg.model +
                                 "' is not a stock-and-flow model; experiment responses "
                                 "reduce trajectories"});
            model.reset();
        }
    }

    if (model) {
        std::set<std::string> constants;
        for (const auto& c : model->sd->constants) constants.insert(c.name);
        for (const auto& f : cfg.factors)
            if (!constants.count(f.name))
                diags.push_back({config, 0, Severity::error, "UNRESOLVED_FACTOR",
                                 "factor '" + f.name + "' does not name a constant of model '" +
                                     model->name + "'"});
        for (const auto& [k, v] : cfg.overrides) {
            (void)v;
            if (!constants.count(k))
                diags.push_back({config, 0, Severity::error, "UNKNOWN_CONSTANT",
                                 "set '" + k + "' does not name a constant of model '" +
                                     model->name + "'"});
        }
    }

    print_diagnostics(diags);
    if (has_errors(diags)) return kFailure;

    try {
        experiment::Design design = experiment::full_factorial(cfg.factors);
        if (design_only) {
            deliver(out, design_table(design));
            return kOk;
        }
        std::map<std::string, double> fixed(cfg.overrides.begin(), cfg.overrides.end());
        experiment::RunOptions opts;
        opts.replications = cfg.replications;
        opts.seed = cfg.seed;
        opts.parallel = parallel;
        experiment::ExperimentResult result = experiment::run_experiment(
            design, cfg.responses, experiment::sd_runner(*model->sd, fixed),
            /*deterministic=*/true, opts);
        print_diagnostics(result.notes);
        deliver(out, result.to_csv());
    } catch (const Error& e) {
        print_error(e);
        return kFailure;
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

int cmd_validate(const std::string& model_ref, const std::string& suite_ref,
                 const std::string& out) {
    // Setup problems — an unreadable or broken suite, a model that will not
    // load — exit 2: nothing was validated. Exit 1 is reserved for a suite
    // that ran and failed.
    vv::Suite suite;
    vv::SuiteContext ctx;
    std::vector<Diagnostic> diags;
    std::filesystem::path path = suite_ref;
    if (std::filesystem::exists(path)) {
        suite = vv::load_suite_file(path, &diags);
        ctx.base_dir = path.parent_path();
    } else if (const std::string* text = models::bundled_suite_text(stem_of(suite_ref))) {
        auto parsed = vv::parse_suite(*text, stem_of(suite_ref) + ".vv");
        diags = std::move(parsed.diagnostics);
        auto structural = vv::check_suite(parsed.suite, stem_of(suite_ref) + ".vv");
        diags.insert(diags.end(), structural.begin(), structural.end());
        suite = std::move(parsed.suite);
        ctx.virtual_files = models::bundled_suite_data();
    } else {
        std::fprintf(stderr,
                     "sesim: no suite file '%s' and no bundled suite by that name "
                     "(bundled: brooks-default, trace-golden)\n",
                     suite_ref.c_str());
        return kUsage;
    }
    print_diagnostics(diags);
    if (has_errors(diags)) return kUsage;

    LoadedModel model;
    try {
        model = load_model(model_ref);
    } catch (const Error& e) {
        print_error(e);
        return kUsage;
    }
    if (!suite.model.empty() && suite.model != model.name)
        std::fprintf(stderr, "sesim: warning: the suite was written for model '%s', not '%s'\n",
                     suite.model.c_str(), model.name.c_str());

    ctx.sd_model = std::move(model.sd);
    ctx.devs_model = std::move(model.devs);

    vv::VnVReport report = vv::run_suite(suite, ctx);

    for (const auto& c : report.checks) {
        std::string line = (c.passed ? "pass  " : "FAIL  ") + c.name + "  [" + c.kind +
                           "]  " + c.metric + " = " + detail::num_to_csv(c.value) +
                           " (threshold " + detail::num_to_csv(c.threshold) + ")";
        if (!c.passed && !c.detail.empty()) line += "  — " + c.detail;
        std::printf("%s\n", line.c_str());
    }
    std::printf("%zu check%s, %zu failed\n", report.checks.size(),
                report.checks.size() == 1 ? "" : "s", report.failure_count());

    if (!out.empty()) write_file(out_path(out), report.to_csv());
    return report.all_passed() ? kOk : kFailure;
}

// ---------------------------------------------------------------------------
// list-models
// ---------------------------------------------------------------------------

int cmd_list_models() {
    for (const auto& m : kBundledModels)
        std::printf("%-10s %-28s %-24s %s\n", m.name, m.kind, m.file, m.blurb);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"simulation toolkit: discrete-event and stock-and-flow models, "
                 "factorial experiments, validation suites"};
    app.require_subcommand(1);

    std::string parse_file;
    auto* parse_cmd = app.add_subcommand("parse", "lint a model, experiment or suite file");
    parse_cmd->add_option("file", parse_file, "input file (.sd .devsnl .devsc .cfg .vv)")
        ->required();

    std::string run_model, run_out;
    std::vector<std::string> run_sets;
    std::optional<double> run_until;
    bool run_plot = false;
    auto* run_cmd = app.add_subcommand("run", "simulate one scenario and emit CSV");
    run_cmd->add_option("model", run_model, "model file, or a bundled model name")->required();
    run_cmd->add_option("--set", run_sets, "override a model constant, NAME=NUMBER")
        ->take_all();
    run_cmd->add_option("--until", run_until, "simulate through this time");
    run_cmd->add_option("-o,--out", run_out, "write the CSV here instead of stdout");
    run_cmd->add_flag("--plot-data", run_plot, "also write per-variable time,value files");

    std::string exp_config, exp_out;
    bool exp_design_only = false, exp_parallel = false;
    auto* exp_cmd = app.add_subcommand("experiment", "run a factorial experiment config");
    exp_cmd->add_option("config", exp_config, "experiment file (.cfg)")->required();
    exp_cmd->add_flag("--design-only", exp_design_only,
                      "print the trial table without simulating");
    exp_cmd->add_flag("--parallel", exp_parallel, "run trials concurrently (same results)");
    exp_cmd->add_option("-o,--out", exp_out, "write the result CSV here instead of stdout");

    std::string val_model, val_suite, val_out;
    auto* val_cmd = app.add_subcommand("validate", "run a validation suite against a model");
    val_cmd->add_option("model", val_model, "model file, or a bundled model name")->required();
    val_cmd->add_option("--suite", val_suite, "suite file, or a bundled suite name")
        ->required();
    val_cmd->add_option("-o,--out", val_out, "also write the report as CSV");

    auto* list_cmd = app.add_subcommand("list-models", "show the bundled models");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (parse_cmd->parsed()) return cmd_parse(parse_file);
        if (run_cmd->parsed())
            return cmd_run(run_model, run_sets, run_until, run_out, run_plot);
        if (exp_cmd->parsed())
            return cmd_experiment(exp_config, exp_design_only, exp_out, exp_parallel);
        if (val_cmd->parsed()) return cmd_validate(val_model, val_suite, val_out);
        if (list_cmd->parsed()) return cmd_list_models();
    } catch (const Error& e) {
        print_error(e);
        return exit_for(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "sesim: unexpected failure: %s\n", e.what());
        return kFailure;
    }
    return kUsage;
}
