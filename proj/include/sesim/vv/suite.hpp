#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sesim/detail/strings.hpp"
#include "sesim/devs/trace_io.hpp"
#include "sesim/diagnostics.hpp"
#include "sesim/error.hpp"
#include "sesim/sd/simulate.hpp"
#include "sesim/vv/checks.hpp"
#include "sesim/vv/conformance.hpp"
#include "sesim/vv/report.hpp"

// Validation suite files (.vv): a model binding plus one check per line.
//
//   # staffing model sanity
//   model brooks
//   set staffing_pulse = 2
//   check heal   = drop_then_recover(production_rate) within 40
//   check ramp   = monotone_increasing(completed_work)
//   check smooth = continuous_at(completed_work, 100.25) jump 0.5
//   check dip    = band(production_rate, min_value) between 9.2 and 9.3
//   check corner = band(production_rate, final_value) between 10 and 10.5
//                    with entropy_factor = 0.06 and staffing_pulse = 6
//   check gold   = reference(production_rate, "golden/brooks.csv") mae 1e-9
//   check replay = conformance("golden/fms-trace.csv")
//   check driven = conformance("golden/relay-trace.csv") replaying inputs
//
// (each check on a single line; `#` starts a comment)
//
// The suite names its model but does not resolve it — the caller binds the
// name to an actual model in a SuiteContext. `set` lines override constants
// for every trajectory check; a band check may add its own overrides with a
// `with` clause to probe an extreme-condition corner. `replaying inputs`
// re-injects the inputs recorded in the trace (atomic models only — see
// stimuli_from_trace); without it the replay is autonomous. File references
// (reference tables, traces) resolve against the context's base directory,
// after the context's virtual files. Check thresholds (within / slack /
// jump / tolerance) must be satisfiable, i.e. at least zero.

namespace sesim::vv {

struct SuiteCheck {
    std::string name;
    std::string kind;  // drop_then_recover | monotone_increasing | monotone_decreasing |
                       // continuous_at | band | reference | conformance
    std::string variable;
    // band
    BandStat stat = BandStat::final_value;
    double lo = 0;
    double hi = 0;
    std::vector<std::pair<std::string, double>> overrides;
    // monotone
    double slack = 1e-9;
    // continuous_at
    double at = 0;
    double jump = 0;
    // drop_then_recover
    double within = 0;
    // reference / conformance
    std::string file;
    ErrorMetric metric = ErrorMetric::mae;
    double tolerance = 0;
    bool replay_inputs = false;  // conformance: recover injections from the trace

    int line = 0;
};

struct Suite {
    std::string model;  // name or path, as written; resolved by the caller
    std::vector<std::pair<std::string, double>> sets;
    std::vector<SuiteCheck> checks;
};

struct SuiteParseResult {
    Suite suite;
    std::vector<Diagnostic> diagnostics;
};

namespace detail_suite {

// split_ws, with '=' split out as its own token so `k=v`, `k =v` and
// `k = v` all tokenize alike.
inline std::vector<std::string> tokens_with_eq(std::string_view s) {
    std::vector<std::string> out;
    for (const auto& raw : detail::split_ws(s)) {
        std::string_view t = raw;
        while (!t.empty()) {
            auto eq = t.find('=');
            if (eq == std::string_view::npos) {
                out.emplace_back(t);
                break;
            }
            if (eq > 0) out.emplace_back(t.substr(0, eq));
            out.emplace_back("=");
            t.remove_prefix(eq + 1);
        }
    }
    return out;
}

inline std::string strip_quotes(std::string_view s) {
    s = detail::trim(s);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
        s = s.substr(1, s.size() - 2);
    return std::string(s);
}

// `<ident> = <num> ( and <ident> = <num> )*`
inline bool parse_override_list(std::string_view text,
                                std::vector<std::pair<std::string, double>>& out,
                                std::string& why) {
    auto toks = tokens_with_eq(text);
    std::size_t i = 0;
    while (i < toks.size()) {
        if (i + 2 >= toks.size() || !detail::is_identifier(toks[i]) || toks[i + 1] != "=") {
            why = "expected '<constant> = <number>'";
            return false;
        }
        auto v = detail::parse_number(toks[i + 2]);
        if (!v) {
            why = "bad number '" + toks[i + 2] + "'";
            return false;
        }
        out.emplace_back(toks[i], *v);
        i += 3;
        if (i == toks.size()) return true;
        if (toks[i] != "and") {
            why = "expected 'and' between overrides, got '" + toks[i] + "'";
            return false;
        }
        ++i;
        if (i == toks.size()) {
            why = "dangling 'and'";
            return false;
        }
    }
    if (out.empty()) {
        why = "empty override list";
        return false;
    }
    return true;
}

// The right-hand side of a check line: `<kind>(<args>) <trailer>`.
inline bool parse_check_expr(std::string_view rhs, SuiteCheck& c, std::string& why) {
    auto open = rhs.find('(');
    if (open == std::string_view::npos) {
        why = "expected '<kind>(...)'";
        return false;
    }
    auto close = rhs.find(')', open);
    if (close == std::string_view::npos) {
        why = "missing ')'";
        return false;
    }
    c.kind = std::string(detail::trim(rhs.substr(0, open)));
    std::vector<std::string> args;
    for (const auto& a : detail::split(rhs.substr(open + 1, close - open - 1), ','))
        args.emplace_back(detail::trim(a));
    if (args.size() == 1 && args[0].empty()) args.clear();
    std::string_view trailer = detail::trim(rhs.substr(close + 1));

    auto need_args = [&](std::size_t n) {
        if (args.size() == n) return true;
        why = c.kind + " takes " + std::to_string(n) + " argument" + (n == 1 ? "" : "s");
        return false;
    };
    auto keyword_number = [&](std::string_view text, const std::string& keyword,
                              double& out_num) {
        auto toks = detail::split_ws(text);
        if (toks.size() != 2 || toks[0] != keyword) {
            why = "expected '" + keyword + " <number>' after the check";
            return false;
        }
        auto v = detail::parse_number(toks[1]);
        if (!v) {
            why = "bad number '" + toks[1] + "'";
            return false;
        }
        out_num = *v;
        return true;
    };
    // A threshold below zero (or NaN) can never be satisfied; such a check
    // is a mistake in the suite, not a property of the model, so it is
    // rejected here rather than reported as a model failure.
    auto satisfiable = [&](double v, const std::string& what) {
        if (v >= 0) return true;
        why = what + " of " + detail::num_to_string(v) + " can never be met";
        return false;
    };

    if (c.kind == "drop_then_recover") {
        if (!need_args(1)) return false;
        c.variable = args[0];
        return keyword_number(trailer, "within", c.within) &&
               satisfiable(c.within, "a recovery window");
    }
    if (c.kind == "monotone_increasing" || c.kind == "monotone_decreasing") {
        if (!need_args(1)) return false;
        c.variable = args[0];
        if (trailer.empty()) return true;
        return keyword_number(trailer, "slack", c.slack) && satisfiable(c.slack, "a slack");
    }
    if (c.kind == "continuous_at") {
        if (!need_args(2)) return false;
        c.variable = args[0];
        auto at = detail::parse_number(args[1]);
        if (!at) {
            why = "bad instant '" + args[1] + "'";
            return false;
        }
        c.at = *at;
        return keyword_number(trailer, "jump", c.jump) &&
               satisfiable(c.jump, "a jump allowance");
    }
    if (c.kind == "band") {
        if (!need_args(2)) return false;
        c.variable = args[0];
        auto stat = band_stat_from_string(args[1]);
        if (!stat) {
            why = "band statistic must be final_value, min_value or max_value, got '" +
                  args[1] + "'";
            return false;
        }
        c.stat = *stat;
        std::string_view band_part = trailer;
        auto with_pos = trailer.find(" with ");
        if (with_pos != std::string_view::npos) {
            band_part = detail::trim(trailer.substr(0, with_pos));
            if (!parse_override_list(detail::trim(trailer.substr(with_pos + 6)), c.overrides,
                                     why))
                return false;
        }
        auto toks = detail::split_ws(band_part);
        if (toks.size() != 4 || toks[0] != "between" || toks[2] != "and") {
            why = "expected 'between <number> and <number>'";
            return false;
        }
        auto lo = detail::parse_number(toks[1]);
        auto hi = detail::parse_number(toks[3]);
        if (!lo || !hi) {
            why = "bad band bound";
            return false;
        }
        if (std::isnan(*lo) || std::isnan(*hi)) {
            why = "band bounds must be numbers, not nan";
            return false;
        }
        if (*hi < *lo) {
            why = "band is empty: " + toks[1] + " > " + toks[3];
            return false;
        }
        c.lo = *lo;
        c.hi = *hi;
        return true;
    }
    if (c.kind == "reference") {
        if (!need_args(2)) return false;
        c.variable = args[0];
        c.file = strip_quotes(args[1]);
        auto toks = detail::split_ws(trailer);
        if (toks.size() != 2) {
            why = "expected '<mae|rmse|max_abs> <tolerance>' after the check";
            return false;
        }
        auto metric = error_metric_from_string(toks[0]);
        if (!metric) {
            why = "unknown error metric '" + toks[0] + "'";
            return false;
        }
        c.metric = *metric;
        auto tol = detail::parse_number(toks[1]);
        if (!tol) {
            why = "bad tolerance '" + toks[1] + "'";
            return false;
        }
        c.tolerance = *tol;
        return satisfiable(c.tolerance, "an error tolerance");
    }
    if (c.kind == "conformance") {
        if (!need_args(1)) return false;
        c.file = strip_quotes(args[0]);
        if (trailer.empty()) return true;
        auto toks = detail::split_ws(trailer);
        if (toks.size() == 2 && toks[0] == "replaying" && toks[1] == "inputs") {
            c.replay_inputs = true;
            return true;
        }
        why = "conformance takes nothing after the file, or 'replaying inputs'";
        return false;
    }
    why = "unknown check kind '" + c.kind + "'";
    return false;
}

}  // namespace detail_suite

inline SuiteParseResult parse_suite(std::string_view text, const std::string& source = "<input>") {
    SuiteParseResult r;
    auto error = [&](int line, const std::string& code, const std::string& msg) {
        r.diagnostics.push_back({source, line, Severity::error, code, msg});
    };
    auto warning = [&](int line, const std::string& code, const std::string& msg) {
        r.diagnostics.push_back({source, line, Severity::warning, code, msg});
    };

    auto lines = detail::split(text, '\n');
    for (std::size_t li = 0; li < lines.size(); ++li) {
        const int lineno = static_cast<int>(li) + 1;
        std::string_view line = lines[li];
        auto hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;

        auto space = line.find_first_of(" \t");
        std::string_view key = space == std::string_view::npos ? line : line.substr(0, space);
        std::string_view rest =
            space == std::string_view::npos ? std::string_view{} : detail::trim(line.substr(space));

        if (key == "model") {
            if (rest.empty()) {
                error(lineno, "SYNTAX_ERROR", "model line names nothing");
            } else if (!r.suite.model.empty()) {
                error(lineno, "DUPLICATE_KEY", "the suite already names a model");
            } else {
                r.suite.model = detail_suite::strip_quotes(rest);
            }
            continue;
        }
        if (key == "set") {
            std::vector<std::pair<std::string, double>> one;
            std::string why;
            if (!detail_suite::parse_override_list(rest, one, why) || one.size() != 1) {
                error(lineno, "SYNTAX_ERROR",
                      "set expects '<constant> = <number>'" + (why.empty() ? "" : ": " + why));
                continue;
            }
            for (const auto& [k, v] : r.suite.sets) {
                (void)v;
                if (k == one[0].first) {
                    warning(lineno, "DUPLICATE_SET",
                            "constant '" + k + "' was already set; the later value wins");
                    break;
                }
            }
            r.suite.sets.push_back(std::move(one[0]));
            continue;
        }
        if (key == "check") {
            auto eq = rest.find('=');
            if (eq == std::string_view::npos) {
                error(lineno, "SYNTAX_ERROR", "check expects '<name> = <kind>(...)'");
                continue;
            }
            SuiteCheck c;
            c.name = std::string(detail::trim(rest.substr(0, eq)));
            c.line = lineno;
            if (!detail::is_identifier(c.name)) {
                error(lineno, "SYNTAX_ERROR", "check name '" + c.name + "' is not an identifier");
                continue;
            }
            bool duplicate = false;
            for (const auto& prior : r.suite.checks) {
                if (prior.name == c.name) {
                    error(lineno, "DUPLICATE_CHECK",
                          "check '" + c.name + "' is already declared");
                    duplicate = true;
                    break;
                }
            }
            if (duplicate) continue;
            std::string why;
            if (!detail_suite::parse_check_expr(detail::trim(rest.substr(eq + 1)), c, why)) {
                error(lineno, "SYNTAX_ERROR", "check '" + c.name + "': " + why);
                continue;
            }
            r.suite.checks.push_back(std::move(c));
            continue;
        }
        error(lineno, "SYNTAX_ERROR", "unknown directive '" + std::string(key) + "'");
    }
    return r;
}

// Structural checks beyond syntax.
inline std::vector<Diagnostic> check_suite(const Suite& suite,
                                           const std::string& source = "<input>") {
    std::vector<Diagnostic> diags;
    if (suite.model.empty())
        diags.push_back({source, 0, Severity::error, "NO_MODEL",
                         "the suite never names a model"});
    if (suite.checks.empty())
        diags.push_back({source, 0, Severity::warning, "NO_CHECKS",
                         "the suite declares no checks"});
    return diags;
}

// Loads a .vv file. Throws FILE_NOT_FOUND; with no `diags` sink, any error
// raises INVALID_SUITE.
inline Suite load_suite_file(const std::filesystem::path& file,
                             std::vector<Diagnostic>* diags = nullptr) {
    std::ifstream in(file, std::ios::binary);
    if (!in.good())
        throw Error("FILE_NOT_FOUND", "cannot open suite file '" + file.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    auto parsed = parse_suite(ss.str(), file.string());
    auto structural = check_suite(parsed.suite, file.string());
    parsed.diagnostics.insert(parsed.diagnostics.end(), structural.begin(), structural.end());
    if (diags)
        *diags = std::move(parsed.diagnostics);
    else if (has_errors(parsed.diagnostics))
        throw Error("INVALID_SUITE", "suite '" + file.string() + "' has errors",
                    std::move(parsed.diagnostics));
    return parsed.suite;
}

// ---------------------------------------------------------------------------
// Running a suite
// ---------------------------------------------------------------------------

// The caller resolves the suite's model name into actual models. Trajectory
// checks need `sd_model`; conformance checks need `devs_model`. Checks whose
// model kind is missing fail honestly rather than being skipped.
struct SuiteContext {
    std::optional<sd::SdModel> sd_model;
    std::optional<devs::Component> devs_model;
    std::filesystem::path base_dir;  // reference/trace files resolve against this
    // In-memory files, consulted before the disk by exact name as written in
    // the suite. Lets callers bundle golden data next to embedded suites.
    std::map<std::string, std::string> virtual_files;
};

namespace detail_suite {

inline std::string read_file_or_throw(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in.good()) throw Error("FILE_NOT_FOUND", "cannot open '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace detail_suite

inline VnVReport run_suite(const Suite& suite, const SuiteContext& ctx) {
    VnVReport report;
    const double nan = detail_vv::kNaN;

    std::map<std::string, double> base_overrides;
    for (const auto& [k, v] : suite.sets) base_overrides[k] = v;

    // One trajectory for every check that runs the suite's own settings.
    std::optional<sd::Trajectory> base_traj;
    std::string base_traj_error;
    if (ctx.sd_model) {
        try {
            base_traj = sd::run_with(*ctx.sd_model, base_overrides);
        } catch (const Error& e) {
            base_traj_error = e.what();
        }
    }

    auto read_data = [&](const std::string& file) {
        auto hit = ctx.virtual_files.find(file);
        if (hit != ctx.virtual_files.end()) return hit->second;
        std::filesystem::path p = file;
        return detail_suite::read_file_or_throw(p.is_absolute() ? p : ctx.base_dir / p);
    };

    for (const auto& c : suite.checks) {
        if (c.kind == "conformance") {
            if (!ctx.devs_model) {
                report.checks.push_back(make_result(
                    c.name, "conformance", "mismatches", nan, 0,
                    "the suite's model is not a discrete-event model; nothing to replay"));
                continue;
            }
            try {
                const std::string text = read_data(c.file);
                auto trace =
                    devs::read_trace_csv(text, devs::collect_types(*ctx.devs_model));
                std::vector<StimulusEvent> stimuli;
                if (c.replay_inputs)
                    stimuli = stimuli_from_trace(*ctx.devs_model, trace);
                report.checks.push_back(
                    trace_conformance(*ctx.devs_model, trace, c.name, stimuli));
            } catch (const Error& e) {
                report.checks.push_back(
                    make_result(c.name, "conformance", "mismatches", nan, 0, e.what()));
            }
            continue;
        }

        // Everything else consumes a trajectory.
        if (!ctx.sd_model) {
            report.checks.push_back(
                make_result(c.name, c.kind, "unavailable", nan, 0,
                            "the suite's model is not a stock-and-flow model"));
            continue;
        }
        try {
            const sd::Trajectory* traj = nullptr;
            sd::Trajectory corner;
            if (c.kind == "band" && !c.overrides.empty()) {
                auto merged = base_overrides;
                for (const auto& [k, v] : c.overrides) merged[k] = v;
                corner = sd::run_with(*ctx.sd_model, merged);
                traj = &corner;
            } else {
                if (!base_traj) throw Error("SIMULATION_FAILED", base_traj_error);
                traj = &*base_traj;
            }

            if (c.kind == "drop_then_recover") {
                report.checks.push_back(check_drop_then_recover(
                    c.name, traj->times, traj->series(c.variable), c.within));
            } else if (c.kind == "monotone_increasing" || c.kind == "monotone_decreasing") {
                report.checks.push_back(check_monotone(c.name, traj->series(c.variable),
                                                       c.kind == "monotone_increasing",
                                                       c.slack));
            } else if (c.kind == "continuous_at") {
                report.checks.push_back(check_continuous_at(
                    c.name, traj->times, traj->series(c.variable), c.at, c.jump));
            } else if (c.kind == "band") {
                report.checks.push_back(
                    check_band(c.name, traj->series(c.variable), c.stat, c.lo, c.hi));
            } else if (c.kind == "reference") {
                auto ref = read_reference_csv(read_data(c.file));
                report.checks.push_back(
                    compare_reference(c.name, *traj, c.variable, ref, c.metric, c.tolerance));
            } else {
                report.checks.push_back(make_result(c.name, c.kind, "unavailable", nan, 0,
                                                    "unknown check kind"));
            }
        } catch (const Error& e) {
            report.checks.push_back(
                make_result(c.name, c.kind, "error", nan, 0, e.what()));
        }
    }
    return report;
}

}  // namespace sesim::vv
