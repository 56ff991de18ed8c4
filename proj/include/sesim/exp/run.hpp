#pragma once

// Experiment execution: run every trial of a design through a simulation
// callback, reduce each trajectory to named response values, and render
// the result table as CSV. Failures stay local to their trial — the cell
// records `error:<CODE>` and the other trials keep going.

#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <future>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sesim/detail/strings.hpp"
#include "sesim/diagnostics.hpp"
#include "sesim/error.hpp"
#include "sesim/exp/design.hpp"
#include "sesim/sd/simulate.hpp"

namespace sesim::experiment {

// A reduction from one trajectory to one response column.
struct ResponseSpec {
    enum class Kind {
        final_value,      // value at the end of the horizon
        min_after,        // lowest value at any time >= `after`
        max_value,        // highest value over the whole run
        time_to_recover,  // drop below the baseline and back: how long it took
        series,           // keep the whole series (excluded from the CSV table)
    };
    std::string name;      // column name
    Kind kind = Kind::final_value;
    std::string variable;  // trajectory column to reduce
    double after = 0;      // min_after: window start; time_to_recover: baseline time
};

// Scalar reduction. `time_to_recover` reads its baseline at the first grid
// point at or after `after`, returns 0 when the series never drops below
// it, the time from the drop back to baseline level when it recovers, and
// NaN when it never does.
inline double scalar_response(const ResponseSpec& r, const sd::Trajectory& traj) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    const auto s = traj.series(r.variable);
    switch (r.kind) {
        case ResponseSpec::Kind::final_value:
            return s.back();
        case ResponseSpec::Kind::min_after: {
            double best = nan;
            for (std::size_t i = 0; i < s.size(); ++i)
                if (traj.times[i] >= r.after && !(best <= s[i])) best = s[i];
            return best;
        }
        case ResponseSpec::Kind::max_value: {
            double best = s.front();
            for (double v : s) best = std::max(best, v);
            return best;
        }
        case ResponseSpec::Kind::time_to_recover: {
            std::size_t i0 = 0;
            while (i0 < s.size() && traj.times[i0] < r.after) ++i0;
            if (i0 >= s.size()) return nan;
            const double baseline = s[i0];
            std::size_t drop = i0 + 1;
            while (drop < s.size() && s[drop] >= baseline) ++drop;
            if (drop >= s.size()) return 0;  // never disrupted
            for (std::size_t j = drop + 1; j < s.size(); ++j)
                if (s[j] >= baseline) return traj.times[j] - traj.times[drop];
            return nan;  // never recovered
        }
        case ResponseSpec::Kind::series:
            break;
    }
    return nan;
}

// One executed (trial, replicate) pair.
struct TrialResult {
    std::size_t trial = 0;
    std::uint32_t replicate = 0;
    std::uint64_t seed = 0;
    Assignment assignment;
    std::map<std::string, double> scalars;               // response name -> value
    std::map<std::string, std::vector<double>> series;   // series responses
    std::string error;                                   // "" or "error:<CODE>"
};

struct ExperimentResult {
    Design design;
    std::vector<ResponseSpec> responses;
    std::vector<TrialResult> rows;   // ordered by (trial, replicate)
    std::vector<Diagnostic> notes;

    // `trial,replicate,<factors...>,<scalar responses...>`; an errored row
    // repeats its error tag in every response cell.
    std::string to_csv() const {
        std::string out = "trial,replicate";
        for (const auto& f : design.factors) out += "," + f.name;
        for (const auto& r : responses)
            if (r.kind != ResponseSpec::Kind::series) out += "," + r.name;
        out += "\n";
        for (const auto& row : rows) {
            out += std::to_string(row.trial) + "," + std::to_string(row.replicate);
            for (const auto& f : design.factors)
                out += "," + detail::num_to_csv(row.assignment.at(f.name));
            for (const auto& r : responses) {
                if (r.kind == ResponseSpec::Kind::series) continue;
                out += ",";
                out += row.error.empty() ? detail::num_to_csv(row.scalars.at(r.name))
                                         : row.error;
            }
            out += "\n";
        }
        return out;
    }
};

// The simulation under experiment: an assignment of factor values plus a
// replicate seed in, a trajectory out.
using SimulateFn = std::function<sd::Trajectory(const Assignment&, std::uint64_t)>;

struct RunOptions {
    std::uint32_t replications = 1;
    std::uint64_t seed = 1;   // base; per-replicate seeds derive from it
    bool parallel = false;
};

namespace detail_exp {

// splitmix64 spread of (base, trial, replicate) so replicate streams are
// decorrelated and platform-stable.
inline std::uint64_t seed_for(std::uint64_t base, std::size_t trial, std::uint32_t rep) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (trial * 1000003ULL + rep + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace detail_exp

// Runs the whole design. A deterministic simulation collapses the
// replicate count to one (noted in the result); per-trial failures are
// captured as error cells rather than aborting the experiment.
inline ExperimentResult run_experiment(const Design& design,
                                       std::vector<ResponseSpec> responses,
                                       const SimulateFn& simulate, bool deterministic,
                                       RunOptions opts = {}) {
    ExperimentResult out;
    out.design = design;
    out.responses = std::move(responses);

    std::uint32_t reps = opts.replications == 0 ? 1 : opts.replications;
    if (deterministic && reps > 1) {
        out.notes.push_back({"", 0, Severity::warning, "DETERMINISTIC_MODEL",
                             "the simulation is deterministic; running 1 replicate instead of " +
                                 std::to_string(reps)});
        reps = 1;
    }

    auto job = [&](const Trial& trial, std::uint32_t rep) {
        TrialResult r;
        r.trial = trial.index;
        r.replicate = rep;
        r.seed = detail_exp::seed_for(opts.seed, trial.index, rep);
        r.assignment = trial.assignment;
        try {
            sd::Trajectory traj = simulate(trial.assignment, r.seed);
            for (const auto& resp : out.responses) {
                if (resp.kind == ResponseSpec::Kind::series)
                    r.series[resp.name] = traj.series(resp.variable);
                else
                    r.scalars[resp.name] = scalar_response(resp, traj);
            }
        } catch (const Error& e) {
            r.error = std::string("error:") + e.code();
        } catch (const std::exception&) {
            r.error = "error:EXCEPTION";
        }
        return r;
    };

    if (opts.parallel) {
        std::vector<std::future<TrialResult>> futures;
        for (const auto& trial : design.trials)
            for (std::uint32_t rep = 0; rep < reps; ++rep)
                futures.push_back(std::async(std::launch::async, job, std::cref(trial), rep));
        for (auto& f : futures) out.rows.push_back(f.get());
    } else {
        for (const auto& trial : design.trials)
            for (std::uint32_t rep = 0; rep < reps; ++rep) out.rows.push_back(job(trial, rep));
    }
    return out;
}

// Adapter for stock-and-flow models: factors and fixed overrides are the
// model's constants; the seed is ignored because the integration is
// deterministic.
inline SimulateFn sd_runner(sd::SdModel model, std::map<std::string, double> fixed = {}) {
    return [model = std::move(model), fixed = std::move(fixed)](const Assignment& a,
                                                                std::uint64_t) {
        std::map<std::string, double> overrides = fixed;
        for (const auto& [k, v] : a) overrides[k] = v;
        return sd::run_with(model, overrides);
    };
}

}  // namespace sesim::experiment
