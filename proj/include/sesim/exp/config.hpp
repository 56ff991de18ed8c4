#pragma once

// Experiment files: a line-oriented format naming the model, fixed
// constant overrides, factors with their levels, response reductions, and
// run options. `include <file>` splices another experiment file in place,
// exactly as if its lines appeared at the include line, so shared defaults
// live in one file and each experiment adds its factors.
//
//   model brooks
//   set planned_duration = 135
//   factor staffing_pulse = 0, 2, 4, 6
//   response dip = min_after(production_rate, 0)
//   replications 3
//   seed 42
//   include defaults.cfg

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sesim/detail/strings.hpp"
#include "sesim/diagnostics.hpp"
#include "sesim/error.hpp"
#include "sesim/exp/design.hpp"
#include "sesim/exp/run.hpp"

namespace sesim::experiment {

struct ExperimentConfig {
    std::string model;                                       // model name or file
    std::vector<std::pair<std::string, double>> overrides;   // `set` lines, in order
    std::vector<Factor> factors;
    std::vector<ResponseSpec> responses;
    std::uint32_t replications = 1;
    std::uint64_t seed = 1;
};

// Include references found while parsing, to be spliced by the loader.
struct ConfigInclude {
    std::string file;
    int line = 0;
};

struct ConfigParseResult {
    ExperimentConfig config;
    std::vector<ConfigInclude> includes;
    std::vector<Diagnostic> diagnostics;
};

namespace detail_exp {

inline bool parse_response_spec(const std::string& name, std::string_view body,
                                ResponseSpec& spec, std::string& why) {
    auto open = body.find('(');
    if (open == std::string_view::npos || body.empty() || body.back() != ')') {
        why = "expected '<kind>(<variable>[, <number>])'";
        return false;
    }
    std::string kind(detail::trim(body.substr(0, open)));
    auto args = detail::split(std::string(body.substr(open + 1, body.size() - open - 2)), ',');
    spec.name = name;
    if (kind == "final_value") spec.kind = ResponseSpec::Kind::final_value;
    else if (kind == "min_after") spec.kind = ResponseSpec::Kind::min_after;
    else if (kind == "max_value") spec.kind = ResponseSpec::Kind::max_value;
    else if (kind == "time_to_recover") spec.kind = ResponseSpec::Kind::time_to_recover;
    else if (kind == "series" || kind == "full_series") spec.kind = ResponseSpec::Kind::series;
    else {
        why = "'" + kind + "' is not a response kind";
        return false;
    }
    if (args.empty() || args.size() > 2) {
        why = "expected one variable and an optional number";
        return false;
    }
    spec.variable = std::string(detail::trim(args[0]));
    if (!detail::is_identifier(spec.variable)) {
        why = "'" + spec.variable + "' is not a variable name";
        return false;
    }
    spec.after = 0;
    if (args.size() == 2) {
        auto num = detail::parse_number(detail::trim(args[1]));
        if (!num) {
            why = "'" + std::string(detail::trim(args[1])) + "' is not a number";
            return false;
        }
        spec.after = *num;
    }
    return true;
}

// Handles one `include <file>` reference; the loader passes a resolver
// that splices the referenced file into the same accumulating config.
using IncludeHandler = std::function<void(const std::string& file, int line)>;

// Parses `text` into `cfg`, accumulating across spliced files so the
// duplicate rules hold over the whole experiment, not per file.
inline void parse_config_into(std::string_view text, const std::string& source,
                              ExperimentConfig& cfg, std::vector<Diagnostic>& diags,
                              std::vector<ConfigInclude>* includes,
                              const IncludeHandler& on_include) {
    auto err = [&](int line, const std::string& code, const std::string& msg) {
        diags.push_back({source, line, Severity::error, code, msg});
    };

    int line_no = 0;
    for (const auto& raw : detail::split(text, '\n')) {
        ++line_no;
        std::string line = raw;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        auto body = detail::trim(line);
        if (body.empty()) continue;

        auto words = detail::split_ws(body);
        const std::string& key = words[0];

        if (key == "model") {
            if (words.size() != 2)
                err(line_no, "SYNTAX_ERROR", "expected 'model <name-or-file>'");
            else if (!cfg.model.empty())
                err(line_no, "DUPLICATE_KEY",
                    "the model is already set to '" + cfg.model + "'");
            else
                cfg.model = words[1];
        } else if (key == "include") {
            if (words.size() != 2) {
                err(line_no, "SYNTAX_ERROR", "expected 'include <file>'");
            } else {
                if (includes) includes->push_back({words[1], line_no});
                if (on_include) on_include(words[1], line_no);
            }
        } else if (key == "set" || key == "factor") {
            auto eq = body.find('=');
            if (eq == std::string_view::npos || words.size() < 2) {
                err(line_no, "SYNTAX_ERROR", "expected '" + key + " <name> = ...'");
                continue;
            }
            std::string name(detail::trim(body.substr(key.size(), eq - key.size())));
            if (!detail::is_identifier(name)) {
                err(line_no, "SYNTAX_ERROR", "'" + name + "' is not a constant name");
                continue;
            }
            auto rest = detail::trim(body.substr(eq + 1));
            if (key == "set") {
                auto num = detail::parse_number(rest);
                if (!num) {
                    err(line_no, "SYNTAX_ERROR", "'" + std::string(rest) + "' is not a number");
                    continue;
                }
                for (const auto& [n, v] : cfg.overrides) {
                    if (n == name) {
                        diags.push_back({source, line_no, Severity::warning, "DUPLICATE_SET",
                                         "'" + name + "' was already set; the later value wins"});
                        break;
                    }
                }
                cfg.overrides.emplace_back(name, *num);
            } else {
                Factor f{name, {}};
                bool ok = true;
                for (const auto& part : detail::split(rest, ',')) {
                    auto num = detail::parse_number(detail::trim(part));
                    if (!num) {
                        err(line_no, "SYNTAX_ERROR",
                            "'" + std::string(detail::trim(part)) + "' is not a level");
                        ok = false;
                        break;
                    }
                    f.levels.push_back(*num);
                }
                if (!ok) continue;
                bool duplicate = false;
                for (const auto& existing : cfg.factors)
                    if (existing.name == name) duplicate = true;
                if (duplicate)
                    err(line_no, "DUPLICATE_FACTOR", "factor '" + name + "' appears twice");
                else
                    cfg.factors.push_back(std::move(f));
            }
        } else if (key == "response") {
            auto eq = body.find('=');
            if (eq == std::string_view::npos) {
                err(line_no, "SYNTAX_ERROR", "expected 'response <name> = <kind>(...)'");
                continue;
            }
            std::string name(detail::trim(body.substr(key.size(), eq - key.size())));
            if (!detail::is_identifier(name)) {
                err(line_no, "SYNTAX_ERROR", "'" + name + "' is not a response name");
                continue;
            }
            ResponseSpec spec;
            std::string why;
            if (!parse_response_spec(name, detail::trim(body.substr(eq + 1)), spec, why)) {
                err(line_no, "SYNTAX_ERROR", why);
                continue;
            }
            bool duplicate = false;
            for (const auto& existing : cfg.responses)
                if (existing.name == name) duplicate = true;
            if (duplicate)
                err(line_no, "DUPLICATE_RESPONSE", "response '" + name + "' appears twice");
            else
                cfg.responses.push_back(std::move(spec));
        } else if (key == "replications" || key == "seed") {
            auto num = words.size() == 2 ? detail::parse_number(words[1]) : std::nullopt;
            if (!num || *num < 0 || *num != static_cast<double>(static_cast<std::uint64_t>(*num))) {
                err(line_no, "SYNTAX_ERROR", "expected '" + key + " <whole number>'");
                continue;
            }
            if (key == "replications")
                cfg.replications = static_cast<std::uint32_t>(*num);
            else
                cfg.seed = static_cast<std::uint64_t>(*num);
        } else {
            err(line_no, "SYNTAX_ERROR", "'" + key + "' is not an experiment keyword");
        }
    }
}

}  // namespace detail_exp

// Parses one file's text. Include lines are recorded, not resolved; use
// load_experiment_file for the on-disk format with includes.
inline ConfigParseResult parse_config(std::string_view text,
                                      const std::string& source = "<input>") {
    ConfigParseResult r;
    detail_exp::parse_config_into(text, source, r.config, r.diagnostics, &r.includes, nullptr);
    return r;
}

// Structural checks beyond syntax: a runnable experiment names a model;
// one without responses only proves the runs finish.
inline std::vector<Diagnostic> check_config(const ExperimentConfig& cfg,
                                            const std::string& source = "<input>") {
    std::vector<Diagnostic> diags;
    if (cfg.model.empty())
        diags.push_back({source, 0, Severity::error, "NO_MODEL",
                         "the experiment never names a model"});
    if (cfg.responses.empty())
        diags.push_back({source, 0, Severity::warning, "NO_RESPONSES",
                         "no responses are declared; the result table will be bare"});
    return diags;
}

namespace detail_exp {

inline void load_config_file(const std::filesystem::path& file, ExperimentConfig& cfg,
                             std::vector<Diagnostic>& diags,
                             std::set<std::string>& visiting) {
    std::error_code ec;
    auto canonical = std::filesystem::weakly_canonical(file, ec);
    const std::string key = ec ? file.string() : canonical.string();
    if (visiting.count(key))
        throw Error("INCLUDE_CYCLE", "experiment files include each other: '" +
                                         file.string() + "' is already being loaded");
    visiting.insert(key);
    struct Eraser {
        std::set<std::string>& set;
        const std::string& key;
        ~Eraser() { set.erase(key); }
    } eraser{visiting, key};

    std::ifstream in(file, std::ios::binary);
    if (!in.good())
        throw Error("FILE_NOT_FOUND", "cannot open experiment file '" + file.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();

    parse_config_into(ss.str(), file.string(), cfg, diags, nullptr,
                      [&](const std::string& ref, int) {
                          load_config_file(file.parent_path() / ref, cfg, diags, visiting);
                      });
}

}  // namespace detail_exp

// Loads an experiment file, splicing `include` references in place,
// relative to the directory of the file that names them. Throws
// FILE_NOT_FOUND and INCLUDE_CYCLE; with no `diags` sink, syntax errors
// raise INVALID_EXPERIMENT.
inline ExperimentConfig load_experiment_file(const std::filesystem::path& file,
                                             std::vector<Diagnostic>* diags = nullptr) {
    std::vector<Diagnostic> collected;
    std::set<std::string> visiting;
    ExperimentConfig cfg;
    detail_exp::load_config_file(file, cfg, collected, visiting);
    if (diags)
        *diags = std::move(collected);
    else if (has_errors(collected))
        throw Error("INVALID_EXPERIMENT", "experiment '" + file.string() + "' has errors",
                    std::move(collected));
    return cfg;
}

}  // namespace sesim::experiment
