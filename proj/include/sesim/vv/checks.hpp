#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sesim/detail/strings.hpp"
#include "sesim/error.hpp"
#include "sesim/sd/simulate.hpp"
#include "sesim/vv/report.hpp"

// Behaviour-pattern and reference checks over simulated trajectories. Each
// returns a CheckResult under the uniform rule from report.hpp
// (pass iff value <= threshold).

namespace sesim::vv {

namespace detail_vv {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline std::optional<std::size_t> first_non_finite(const std::vector<double>& s) {
    for (std::size_t i = 0; i < s.size(); ++i)
        if (!std::isfinite(s[i])) return i;
    return std::nullopt;
}

inline std::string at_sample(const std::vector<double>& times, std::size_t i) {
    return "sample " + std::to_string(i) +
           (i < times.size() ? " (t=" + detail::num_to_string(times[i]) + ")" : "");
}

}  // namespace detail_vv

// ---------------------------------------------------------------------------
// Pattern checks
// ---------------------------------------------------------------------------

// The series may dip below its starting level, but must come back within
// `within` time units of the drop. value = recovery duration; a series that
// never drops scores 0 (the pattern holds vacuously), one that never
// recovers scores NaN.
inline CheckResult check_drop_then_recover(const std::string& name,
                                           const std::vector<double>& times,
                                           const std::vector<double>& series, double within) {
    const std::string kind = "drop_then_recover";
    const std::string metric = "recovery_time";
    if (series.empty() || times.size() != series.size())
        return make_result(name, kind, metric, detail_vv::kNaN, within,
                           "series is empty or its grid does not match the time grid");
    if (auto bad = detail_vv::first_non_finite(series))
        return make_result(name, kind, metric, detail_vv::kNaN, within,
                           "non-finite value at " + detail_vv::at_sample(times, *bad));
    const double baseline = series.front();
    std::size_t drop = series.size();
    for (std::size_t i = 1; i < series.size(); ++i) {
        if (series[i] < baseline) {
            drop = i;
            break;
        }
    }
    if (drop == series.size())
        return make_result(name, kind, metric, 0.0, within,
                           "never drops below its starting level " +
                               detail::num_to_string(baseline));
    for (std::size_t j = drop + 1; j < series.size(); ++j) {
        if (series[j] >= baseline) {
            return make_result(name, kind, metric, times[j] - times[drop], within,
                               "drops at t=" + detail::num_to_string(times[drop]) +
                                   ", back to " + detail::num_to_string(baseline) + " at t=" +
                                   detail::num_to_string(times[j]));
        }
    }
    return make_result(name, kind, metric, detail_vv::kNaN, within,
                       "drops at t=" + detail::num_to_string(times[drop]) +
                           " and never returns to " + detail::num_to_string(baseline));
}

// Monotonicity with a slack for float noise. value = the worst step in the
// wrong direction (0 when perfectly monotone), threshold = slack.
inline CheckResult check_monotone(const std::string& name, const std::vector<double>& series,
                                  bool increasing, double slack = 1e-9) {
    const std::string kind = increasing ? "monotone_increasing" : "monotone_decreasing";
    const std::string metric = increasing ? "max_decrease" : "max_increase";
    if (auto bad = detail_vv::first_non_finite(series))
        return make_result(name, kind, metric, detail_vv::kNaN, slack,
                           "non-finite value at sample " + std::to_string(*bad));
    double worst = 0;
    std::size_t at = 0;
    for (std::size_t i = 1; i < series.size(); ++i) {
        const double violation = increasing ? series[i - 1] - series[i] : series[i] - series[i - 1];
        if (violation > worst) {
            worst = violation;
            at = i;
        }
    }
    std::string detail;
    if (worst > 0)
        detail = "worst step between samples " + std::to_string(at - 1) + " and " +
                 std::to_string(at);
    return make_result(name, kind, metric, worst, slack, detail);
}

// Continuity probe at one instant: |step| across the grid interval spanning
// `at` must stay within max_jump. When `at` falls exactly on a grid point,
// the interval ending there is used.
inline CheckResult check_continuous_at(const std::string& name, const std::vector<double>& times,
                                       const std::vector<double>& series, double at,
                                       double max_jump) {
    const std::string kind = "continuous_at";
    const std::string metric = "jump";
    if (times.size() != series.size() || times.size() < 2)
        return make_result(name, kind, metric, detail_vv::kNaN, max_jump,
                           "need at least two samples on a matching grid");
    if (at < times.front() || at > times.back())
        return make_result(name, kind, metric, detail_vv::kNaN, max_jump,
                           "t=" + detail::num_to_string(at) + " is outside the trajectory [" +
                               detail::num_to_string(times.front()) + ", " +
                               detail::num_to_string(times.back()) + "]");
    std::size_t hi = 0;
    while (hi < times.size() && times[hi] < at) ++hi;
    if (hi == 0) hi = 1;  // `at` == start: use the first interval
    if (!std::isfinite(series[hi - 1]) || !std::isfinite(series[hi]))
        return make_result(name, kind, metric, detail_vv::kNaN, max_jump,
                           "non-finite value next to t=" + detail::num_to_string(at));
    const double jump = std::abs(series[hi] - series[hi - 1]);
    return make_result(name, kind, metric, jump, max_jump,
                       "step from t=" + detail::num_to_string(times[hi - 1]) + " to t=" +
                           detail::num_to_string(times[hi]));
}

// ---------------------------------------------------------------------------
// Band checks
// ---------------------------------------------------------------------------

enum class BandStat { final_value, min_value, max_value };

inline const char* to_string(BandStat s) {
    switch (s) {
        case BandStat::final_value: return "final_value";
        case BandStat::min_value: return "min_value";
        default: return "max_value";
    }
}

inline std::optional<BandStat> band_stat_from_string(const std::string& s) {
    if (s == "final_value") return BandStat::final_value;
    if (s == "min_value") return BandStat::min_value;
    if (s == "max_value") return BandStat::max_value;
    return std::nullopt;
}

// One summary statistic of the series must land inside [lo, hi].
// value = distance outside the band (0 inside), threshold = 0.
inline CheckResult check_band(const std::string& name, const std::vector<double>& series,
                              BandStat stat, double lo, double hi) {
    const std::string kind = "band";
    const std::string metric = "band_violation";
    if (series.empty())
        return make_result(name, kind, metric, detail_vv::kNaN, 0, "series is empty");
    if (auto bad = detail_vv::first_non_finite(series))
        return make_result(name, kind, metric, detail_vv::kNaN, 0,
                           "non-finite value at sample " + std::to_string(*bad));
    double s = 0;
    switch (stat) {
        case BandStat::final_value: s = series.back(); break;
        case BandStat::min_value: s = *std::min_element(series.begin(), series.end()); break;
        case BandStat::max_value: s = *std::max_element(series.begin(), series.end()); break;
    }
    const double violation = s < lo ? lo - s : (s > hi ? s - hi : 0.0);
    return make_result(name, kind, metric, violation, 0,
                       std::string(to_string(stat)) + " = " + detail::num_to_string(s) +
                           ", band [" + detail::num_to_string(lo) + ", " +
                           detail::num_to_string(hi) + "]");
}

// ---------------------------------------------------------------------------
// Reference comparison
// ---------------------------------------------------------------------------

enum class ErrorMetric { mae, rmse, max_abs };

inline const char* to_string(ErrorMetric m) {
    switch (m) {
        case ErrorMetric::mae: return "mae";
        case ErrorMetric::rmse: return "rmse";
        default: return "max_abs";
    }
}

inline std::optional<ErrorMetric> error_metric_from_string(const std::string& s) {
    if (s == "mae") return ErrorMetric::mae;
    if (s == "rmse") return ErrorMetric::rmse;
    if (s == "max_abs") return ErrorMetric::max_abs;
    return std::nullopt;
}

// Reference data in trajectory-CSV form (header `time,<var>,...`), so a
// saved golden trajectory doubles as a reference table. The table may be
// sparser than the trajectory it is compared against.
struct ReferenceTable {
    std::vector<std::string> variables;
    std::vector<double> times;
    std::vector<std::vector<double>> rows;

    std::optional<std::size_t> column(const std::string& name) const {
        for (std::size_t j = 0; j < variables.size(); ++j)
            if (variables[j] == name) return j;
        return std::nullopt;
    }
};

// Throws BAD_REFERENCE on malformed input.
inline ReferenceTable read_reference_csv(const std::string& text) {
    auto fail = [](std::size_t line, const std::string& what) -> void {
        throw Error("BAD_REFERENCE", "line " + std::to_string(line) + ": " + what);
    };
    ReferenceTable table;
    bool saw_header = false;
    auto lines = detail::split(text, '\n');
    for (std::size_t li = 0; li < lines.size(); ++li) {
        const std::string line{detail::trim(lines[li])};
        if (line.empty()) continue;
        auto cells = detail::split(line, ',');
        if (!saw_header) {
            if (cells.empty() || detail::trim(cells[0]) != "time")
                fail(li + 1, "header must start with a 'time' column");
            for (std::size_t j = 1; j < cells.size(); ++j)
                table.variables.emplace_back(detail::trim(cells[j]));
            saw_header = true;
            continue;
        }
        if (cells.size() != table.variables.size() + 1)
            fail(li + 1, "expected " + std::to_string(table.variables.size() + 1) + " cells");
        std::vector<double> row;
        row.reserve(cells.size() - 1);
        for (std::size_t j = 0; j < cells.size(); ++j) {
            auto v = detail::parse_number(detail::trim(cells[j]));
            if (!v) fail(li + 1, "bad number '" + cells[j] + "'");
            if (j == 0)
                table.times.push_back(*v);
            else
                row.push_back(*v);
        }
        table.rows.push_back(std::move(row));
    }
    if (!saw_header) throw Error("BAD_REFERENCE", "line 1: empty reference table");
    return table;
}

// Compares one trajectory variable against reference samples. Every
// reference time must land on the trajectory grid (within half a grid step);
// otherwise the comparison would silently measure interpolation error
// instead of model error, so it fails with a grid mismatch.
inline CheckResult compare_reference(const std::string& name, const sd::Trajectory& traj,
                                     const std::string& variable, const ReferenceTable& ref,
                                     ErrorMetric metric, double tolerance) {
    const std::string kind = "reference";
    const std::string metric_name = to_string(metric);
    auto traj_col = traj.column(variable);
    if (!traj_col)
        return make_result(name, kind, metric_name, detail_vv::kNaN, tolerance,
                           "trajectory has no variable '" + variable + "'");
    auto ref_col = ref.column(variable);
    if (!ref_col)
        return make_result(name, kind, metric_name, detail_vv::kNaN, tolerance,
                           "reference table has no variable '" + variable + "'");
    if (ref.times.empty())
        return make_result(name, kind, metric_name, detail_vv::kNaN, tolerance,
                           "reference table holds no samples");
    if (traj.times.size() < 2)
        return make_result(name, kind, metric_name, detail_vv::kNaN, tolerance,
                           "trajectory holds fewer than two samples");

    const double step = (traj.times.back() - traj.times.front()) /
                        static_cast<double>(traj.times.size() - 1);
    const double snap = step / 2 * (1 + 1e-9);

    double sum_abs = 0, sum_sq = 0, worst = 0, worst_t = ref.times.front();
    for (std::size_t i = 0; i < ref.times.size(); ++i) {
        const double rt = ref.times[i];
        auto it = std::lower_bound(traj.times.begin(), traj.times.end(), rt);
        std::size_t j = static_cast<std::size_t>(it - traj.times.begin());
        if (j == traj.times.size() ||
            (j > 0 && rt - traj.times[j - 1] < traj.times[j] - rt))
            --j;
        if (std::abs(traj.times[j] - rt) > snap)
            return make_result(name, kind, metric_name, detail_vv::kNaN, tolerance,
                               "grid mismatch: reference t=" + detail::num_to_string(rt) +
                                   " is not on the trajectory grid");
        const double diff = std::abs(traj.rows[j][*traj_col] - ref.rows[i][*ref_col]);
        sum_abs += diff;
        sum_sq += diff * diff;
        if (diff > worst) {
            worst = diff;
            worst_t = rt;
        }
    }
    const double n = static_cast<double>(ref.times.size());
    double err = 0;
    switch (metric) {
        case ErrorMetric::mae: err = sum_abs / n; break;
        case ErrorMetric::rmse: err = std::sqrt(sum_sq / n); break;
        case ErrorMetric::max_abs: err = worst; break;
    }
    return make_result(name, kind, metric_name, err, tolerance,
                       std::to_string(ref.times.size()) + " reference points, largest gap " +
                           detail::num_to_string(worst) + " at t=" +
                           detail::num_to_string(worst_t));
}

}  // namespace sesim::vv
