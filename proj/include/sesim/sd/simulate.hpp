#pragma once

// Fixed-step integration of stock-and-flow models. Produces a trajectory:
// one row per grid point holding every stock, flow, and auxiliary, plus a
// record of each time a non-negative stock was clamped back to zero. The
// same trajectory shape is what experiments reduce and reports compare.

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sesim/detail/strings.hpp"
#include "sesim/sd/model.hpp"

namespace sesim::sd {

struct Clamp {
    double time = 0;
    std::string stock;
};

struct Trajectory {
    std::vector<std::string> variables;  // stocks, then flows, then auxes
    std::vector<double> times;
    std::vector<std::vector<double>> rows;  // rows[i][j] = variables[j] at times[i]
    std::vector<Clamp> clamps;

    std::optional<std::size_t> column(const std::string& name) const {
        for (std::size_t j = 0; j < variables.size(); ++j)
            if (variables[j] == name) return j;
        return std::nullopt;
    }
    // Column by name; throws UNKNOWN_VARIABLE for names not recorded.
    std::vector<double> series(const std::string& name) const {
        auto j = column(name);
        if (!j) throw Error("UNKNOWN_VARIABLE", "trajectory has no column '" + name + "'");
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& row : rows) out.push_back(row[*j]);
        return out;
    }
    double final_value(const std::string& name) const {
        auto j = column(name);
        if (!j || rows.empty())
            throw Error("UNKNOWN_VARIABLE", "trajectory has no column '" + name + "'");
        return rows.back()[*j];
    }

    // CSV with a 'time' column first; numbers use %.9g so runs are
    // byte-identical across repeats.
    std::string to_csv() const {
        std::string out = "time";
        for (const auto& v : variables) out += "," + v;
        out += "\n";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out += detail::num_to_csv(times[i]);
            for (double v : rows[i]) out += "," + detail::num_to_csv(v);
            out += "\n";
        }
        return out;
    }
};

// --------------------------------------------------------------------------
// Integration
// --------------------------------------------------------------------------

namespace detail_sd {

struct Runner {
    const SdModel& m;
    std::vector<std::string> order;        // algebraic evaluation order
    std::map<std::string, double> values;  // constants + current state + algebraic
    std::map<std::string, const Expr*> equations;

    explicit Runner(const SdModel& model) : m(model), order(eval_order(model)) {
        for (const auto& c : m.constants) values[c.name] = c.value;
        for (const auto& a : m.auxes) equations[a.name] = a.expr.get();
        for (const auto& f : m.flows) equations[f.name] = f.rate.get();
    }

    // Evaluates every flow and aux at (t, stocks) into `values`.
    void evaluate_algebraic(double t, const std::vector<double>& stocks) {
        for (std::size_t i = 0; i < m.stocks.size(); ++i) values[m.stocks[i].name] = stocks[i];
        EvalEnv env{&values, t, m.time.dt};
        for (const auto& n : order) values[n] = eval(*equations.at(n), env);
    }

    // Net rate of change of each stock from the current flow values.
    std::vector<double> derivatives() const {
        std::vector<double> d(m.stocks.size(), 0.0);
        for (const auto& f : m.flows) {
            double rate = values.at(f.name);
            for (std::size_t i = 0; i < m.stocks.size(); ++i) {
                if (m.stocks[i].name == f.from) d[i] -= rate;
                if (m.stocks[i].name == f.to) d[i] += rate;
            }
        }
        return d;
    }

    std::vector<double> slopes(double t, const std::vector<double>& stocks) {
        evaluate_algebraic(t, stocks);
        return derivatives();
    }
};

}  // namespace detail_sd

// Integrates the model over its time spec. Throws INVALID_MODEL (via
// eval_order) when the model does not validate.
inline Trajectory run(const SdModel& m) {
    detail_sd::Runner runner(m);

    Trajectory out;
    for (const auto& s : m.stocks) out.variables.push_back(s.name);
    for (const auto& f : m.flows) out.variables.push_back(f.name);
    for (const auto& a : m.auxes) out.variables.push_back(a.name);

    // Initial stocks may only use constants.
    std::vector<double> stocks;
    {
        EvalEnv env{&runner.values, m.time.start, m.time.dt};
        for (const auto& s : m.stocks) stocks.push_back(eval(*s.init, env));
    }

    const double dt = m.time.dt;
    const auto steps = static_cast<std::size_t>(
        std::ceil((m.time.stop - m.time.start) / dt - 1e-9));

    auto record = [&](double t) {
        runner.evaluate_algebraic(t, stocks);
        out.times.push_back(t);
        std::vector<double> row;
        row.reserve(out.variables.size());
        for (const auto& v : out.variables) row.push_back(runner.values.at(v));
        out.rows.push_back(std::move(row));
    };

    record(m.time.start);
    for (std::size_t i = 0; i < steps; ++i) {
        double t = m.time.start + static_cast<double>(i) * dt;

        if (m.time.method == TimeSpec::Method::euler) {
            std::vector<double> k1 = runner.slopes(t, stocks);
            for (std::size_t j = 0; j < stocks.size(); ++j) stocks[j] += dt * k1[j];
        } else {
            std::vector<double> k1 = runner.slopes(t, stocks);
            std::vector<double> y(stocks.size());
            for (std::size_t j = 0; j < y.size(); ++j) y[j] = stocks[j] + 0.5 * dt * k1[j];
            std::vector<double> k2 = runner.slopes(t + 0.5 * dt, y);
            for (std::size_t j = 0; j < y.size(); ++j) y[j] = stocks[j] + 0.5 * dt * k2[j];
            std::vector<double> k3 = runner.slopes(t + 0.5 * dt, y);
            for (std::size_t j = 0; j < y.size(); ++j) y[j] = stocks[j] + dt * k3[j];
            std::vector<double> k4 = runner.slopes(t + dt, y);
            for (std::size_t j = 0; j < stocks.size(); ++j)
                stocks[j] += dt / 6.0 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
        }

        double t_next = m.time.start + static_cast<double>(i + 1) * dt;
        for (std::size_t j = 0; j < stocks.size(); ++j) {
            if (m.stocks[j].nonneg && stocks[j] < 0) {
                stocks[j] = 0;
                out.clamps.push_back({t_next, m.stocks[j].name});
            }
        }
        record(t_next);
    }
    return out;
}

// Convenience: copy the model, apply constant overrides, run.
inline Trajectory run_with(const SdModel& m,
                           const std::map<std::string, double>& overrides) {
    SdModel copy = m;
    for (const auto& [k, v] : overrides) set_constant(copy, k, v);
    return run(copy);
}

// --------------------------------------------------------------------------
// Step-size convergence probe
// --------------------------------------------------------------------------

// Runs the model at dt, dt/2, and dt/4 and reports the final value of one
// variable at each resolution. For a first-order method the successive
// differences shrink by about 2x, for a fourth-order method by about 16x;
// `ratio` is that observed factor (NaN when the fine difference is ~0).
struct ConvergenceProbe {
    double coarse = 0, medium = 0, fine = 0;
    double ratio = 0;
};

inline ConvergenceProbe convergence_probe(const SdModel& m, const std::string& variable) {
    ConvergenceProbe p;
    SdModel half = m, quarter = m;
    half.time.dt = m.time.dt / 2;
    quarter.time.dt = m.time.dt / 4;
    p.coarse = run(m).final_value(variable);
    p.medium = run(half).final_value(variable);
    p.fine = run(quarter).final_value(variable);
    double d1 = p.coarse - p.medium;
    double d2 = p.medium - p.fine;
    p.ratio = std::abs(d2) > 1e-300 ? d1 / d2 : std::numeric_limits<double>::quiet_NaN();
    return p;
}

}  // namespace sesim::sd
