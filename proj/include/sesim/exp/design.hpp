#pragma once

// Experiment designs: named factors with discrete levels expanded into an
// ordered list of trials. The full factorial varies the first factor
// fastest; the one-at-a-time design perturbs a baseline one factor at a
// time for sensitivity scans.

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sesim/detail/strings.hpp"
#include "sesim/error.hpp"

namespace sesim::experiment {

struct Factor {
    std::string name;            // a tunable constant of the target model
    std::vector<double> levels;
};

// One concrete setting per factor (plus any fixed extras carried along).
using Assignment = std::map<std::string, double>;

struct Trial {
    std::size_t index = 0;  // position in the design
    Assignment assignment;
};

struct Design {
    std::vector<Factor> factors;  // declaration order = column order
    std::vector<Trial> trials;
};

namespace detail_exp {

inline void check_factors(const std::vector<Factor>& factors) {
    std::set<std::string> seen;
    for (const auto& f : factors) {
        if (f.levels.empty())
            throw Error("EMPTY_FACTOR", "factor '" + f.name + "' has no levels");
        if (!seen.insert(f.name).second)
            throw Error("DUPLICATE_FACTOR", "factor '" + f.name + "' appears twice");
        std::set<double> levels;
        for (double v : f.levels)
            if (!levels.insert(v).second)
                throw Error("DUPLICATE_LEVEL", "factor '" + f.name + "' repeats the level " +
                                                   detail::num_to_string(v));
    }
}

}  // namespace detail_exp

// Cross product of all levels, first factor cycling fastest: with factors
// A{a0,a1} and B{b0,b1} the trials run (a0,b0), (a1,b0), (a0,b1), (a1,b1).
// No factors at all still yields the single as-is trial.
inline Design full_factorial(std::vector<Factor> factors) {
    detail_exp::check_factors(factors);
    Design d;
    d.factors = std::move(factors);
    std::size_t total = 1;
    for (const auto& f : d.factors) total *= f.levels.size();
    d.trials.reserve(total);
    for (std::size_t i = 0; i < total; ++i) {
        Trial t;
        t.index = i;
        std::size_t stride = 1;
        for (const auto& f : d.factors) {
            t.assignment[f.name] = f.levels[(i / stride) % f.levels.size()];
            stride *= f.levels.size();
        }
        d.trials.push_back(std::move(t));
    }
    return d;
}

// Baseline first, then one trial per factor level that differs from the
// baseline, factors in declaration order. Every factor must appear in the
// baseline so each trial changes exactly one thing.
inline Design sensitivity_oat(const Assignment& baseline, std::vector<Factor> factors) {
    detail_exp::check_factors(factors);
    for (const auto& f : factors)
        if (!baseline.count(f.name))
            throw Error("MISSING_BASELINE",
                        "factor '" + f.name + "' has no baseline value to perturb around");
    Design d;
    d.factors = std::move(factors);
    d.trials.push_back({0, baseline});
    for (const auto& f : d.factors)
        for (double level : f.levels) {
            if (level == baseline.at(f.name)) continue;
            Trial t;
            t.index = d.trials.size();
            t.assignment = baseline;
            t.assignment[f.name] = level;
            d.trials.push_back(std::move(t));
        }
    return d;
}

}  // namespace sesim::experiment
