#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "sesim/detail/strings.hpp"

// Check verdicts and the report they roll up into.
//
// Every check, whatever it measures, reduces to one number (`value`)
// compared against one bound (`threshold`): the check passes iff
// value <= threshold. A NaN value therefore always fails, which is exactly
// right for "could not even be evaluated". Keeping the rule uniform makes
// reports machine-readable without per-check knowledge.

namespace sesim::vv {

struct CheckResult {
    std::string name;       // user-chosen check name
    std::string kind;       // check family, e.g. "band", "monotone", "conformance"
    bool passed = false;
    std::string metric;     // what `value` measures, e.g. "mismatches"
    double value = 0;
    double threshold = 0;
    std::string detail;     // human-oriented: observed stat, first divergence, ...
};

inline CheckResult make_result(std::string name, std::string kind, std::string metric,
                               double value, double threshold, std::string detail = "") {
    CheckResult r;
    r.name = std::move(name);
    r.kind = std::move(kind);
    r.metric = std::move(metric);
    r.value = value;
    r.threshold = threshold;
    r.passed = value <= threshold;  // NaN fails
    r.detail = std::move(detail);
    return r;
}

struct VnVReport {
    std::vector<CheckResult> checks;

    bool all_passed() const {
        for (const auto& c : checks)
            if (!c.passed) return false;
        return true;
    }
    std::size_t failure_count() const {
        std::size_t n = 0;
        for (const auto& c : checks)
            if (!c.passed) ++n;
        return n;
    }

    // One row per check. `detail` stays out of the table on purpose: it is
    // free-form prose for humans, not a stable column.
    std::string to_csv() const {
        std::string out = "check,kind,verdict,metric,value,threshold\n";
        for (const auto& c : checks) {
            out += c.name;
            out += ',';
            out += c.kind;
            out += ',';
            out += c.passed ? "pass" : "fail";
            out += ',';
            out += c.metric;
            out += ',';
            out += detail::num_to_csv(c.value);
            out += ',';
            out += detail::num_to_csv(c.threshold);
            out += '\n';
        }
        return out;
    }
};

}  // namespace sesim::vv
