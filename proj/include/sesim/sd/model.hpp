#pragma once

// Stock-and-flow models: stocks integrate flow rates, flows and auxiliaries
// are algebraic equations evaluated in dependency order each step, and
// constants are the tunable inputs. Includes the line-oriented text format
// (one declaration per line, '#' comments).

#include <map>
#include <set>
#include <string>
#include <vector>

#include "sesim/detail/strings.hpp"
#include "sesim/diagnostics.hpp"
#include "sesim/sd/expr.hpp"

namespace sesim::sd {

struct Stock {
    std::string name;
    ExprPtr init;          // may reference constants
    bool nonneg = false;   // clamp to zero after each step
};
struct Flow {
    std::string name;
    std::string from, to;  // stock names; "" = across the model boundary
    ExprPtr rate;
};
struct Aux {
    std::string name;
    ExprPtr expr;
};
struct Constant {
    std::string name;
    double value = 0;
};
struct TimeSpec {
    enum class Method { euler, rk4 };
    double start = 0, stop = 10, dt = 1;
    Method method = Method::euler;
};

struct SdModel {
    std::string name;
    std::vector<Stock> stocks;
    std::vector<Flow> flows;
    std::vector<Aux> auxes;
    std::vector<Constant> constants;
    TimeSpec time;

    const Stock* find_stock(const std::string& n) const {
        for (const auto& s : stocks)
            if (s.name == n) return &s;
        return nullptr;
    }
    const Constant* find_constant(const std::string& n) const {
        for (const auto& c : constants)
            if (c.name == n) return &c;
        return nullptr;
    }
};

// Replaces a constant's value; experiment factors and command-line
// overrides go through here. Throws UNKNOWN_CONSTANT for anything that is
// not a declared constant (stocks and equations are not tunable).
inline void set_constant(SdModel& model, const std::string& name, double value) {
    for (auto& c : model.constants) {
        if (c.name == name) {
            c.value = value;
            return;
        }
    }
    throw Error("UNKNOWN_CONSTANT", "model '" + model.name + "' has no constant '" + name + "'");
}

// --------------------------------------------------------------------------
// Validation and evaluation order
// --------------------------------------------------------------------------

namespace detail_sd {

struct Names {
    std::set<std::string> stocks, algebraic, constants, all;
};

inline Names collect_names(const SdModel& m) {
    Names n;
    for (const auto& s : m.stocks) n.stocks.insert(s.name);
    for (const auto& f : m.flows) n.algebraic.insert(f.name);
    for (const auto& a : m.auxes) n.algebraic.insert(a.name);
    for (const auto& c : m.constants) n.constants.insert(c.name);
    n.all = n.stocks;
    n.all.insert(n.algebraic.begin(), n.algebraic.end());
    n.all.insert(n.constants.begin(), n.constants.end());
    return n;
}

}  // namespace detail_sd

// Structural validation: unique names, known references, flow endpoints
// that are stocks, sane time bounds, and no algebraic dependency cycles.
inline std::vector<Diagnostic> check_model(const SdModel& m) {
    std::vector<Diagnostic> out;
    auto err = [&](const std::string& code, const std::string& msg) {
        out.push_back({m.name, 0, Severity::error, code, msg});
    };

    std::set<std::string> seen;
    auto declare = [&](const std::string& n, const char* what) {
        if (n.empty()) err("BAD_NAME", std::string(what) + " with an empty name");
        if (!seen.insert(n).second)
            err("DUPLICATE_NAME", std::string(what) + " '" + n + "' is declared twice");
    };
    for (const auto& s : m.stocks) declare(s.name, "stock");
    for (const auto& f : m.flows) declare(f.name, "flow");
    for (const auto& a : m.auxes) declare(a.name, "aux");
    for (const auto& c : m.constants) declare(c.name, "constant");

    detail_sd::Names names = detail_sd::collect_names(m);
    auto check_refs = [&](const ExprPtr& e, const std::string& owner, bool constants_only) {
        if (!e) {
            err("MISSING_EXPRESSION", "'" + owner + "' has no expression");
            return;
        }
        for (const auto& d : deps(*e)) {
            if (constants_only) {
                if (!names.constants.count(d))
                    err("UNKNOWN_VARIABLE", "initial value of '" + owner +
                                                "' may only use constants, not '" + d + "'");
            } else if (!names.all.count(d)) {
                err("UNKNOWN_VARIABLE", "'" + owner + "' references unknown '" + d + "'");
            }
        }
    };
    for (const auto& s : m.stocks) check_refs(s.init, s.name, true);
    for (const auto& f : m.flows) check_refs(f.rate, f.name, false);
    for (const auto& a : m.auxes) check_refs(a.expr, a.name, false);

    for (const auto& f : m.flows) {
        for (const std::string* end : {&f.from, &f.to})
            if (!end->empty() && !names.stocks.count(*end))
                err("UNKNOWN_STOCK", "flow '" + f.name + "' touches unknown stock '" + *end + "'");
        if (f.from.empty() && f.to.empty())
            err("DANGLING_FLOW", "flow '" + f.name + "' touches no stock at all");
    }

    if (!(m.time.dt > 0)) err("BAD_TIME", "time step must be positive");
    if (!(m.time.stop > m.time.start)) err("BAD_TIME", "stop time must come after start time");

    // Algebraic nodes must order: stocks and constants are given, so only
    // flow->flow / flow->aux / aux->... dependencies can cycle.
    std::map<std::string, const Expr*> algebraic;
    std::vector<std::string> decl_order;
    for (const auto& a : m.auxes)
        if (a.expr && algebraic.emplace(a.name, a.expr.get()).second)
            decl_order.push_back(a.name);
    for (const auto& f : m.flows)
        if (f.rate && algebraic.emplace(f.name, f.rate.get()).second)
            decl_order.push_back(f.name);
    std::set<std::string> done, visiting;
    auto visit = [&](auto&& self, const std::string& n) -> bool {
        if (done.count(n)) return true;
        if (!visiting.insert(n).second) {
            err("ALGEBRAIC_LOOP", "equations around '" + n + "' depend on themselves");
            return false;
        }
        for (const auto& d : deps(*algebraic.at(n)))
            if (algebraic.count(d) && !self(self, d)) return false;
        visiting.erase(n);
        done.insert(n);
        return true;
    };
    for (const auto& n : decl_order)
        if (!visit(visit, n)) break;

    return out;
}

// Names of flows and auxes in an order where every equation's dependencies
// are evaluated before it. Deterministic: depth-first over declaration
// order. Throws INVALID_MODEL when the model does not validate.
inline std::vector<std::string> eval_order(const SdModel& m) {
    auto diags = check_model(m);
    if (has_errors(diags))
        throw Error("INVALID_MODEL", "model '" + m.name + "' failed checks", std::move(diags));

    std::map<std::string, const Expr*> algebraic;
    std::vector<std::string> decl_order;
    for (const auto& a : m.auxes) {
        algebraic.emplace(a.name, a.expr.get());
        decl_order.push_back(a.name);
    }
    for (const auto& f : m.flows) {
        algebraic.emplace(f.name, f.rate.get());
        decl_order.push_back(f.name);
    }
    std::vector<std::string> order;
    std::set<std::string> done;
    auto visit = [&](auto&& self, const std::string& n) -> void {
        if (done.count(n)) return;
        done.insert(n);
        for (const auto& d : deps(*algebraic.at(n)))
            if (algebraic.count(d)) self(self, d);
        order.push_back(n);
    };
    for (const auto& n : decl_order) visit(visit, n);
    return order;
}

// --------------------------------------------------------------------------
// Text format
// --------------------------------------------------------------------------
//
//   # comment
//   stock <name> init <expr> [nonneg]
//   flow <name> [from <stock>] [to <stock>] rate <expr>
//   aux <name> = <expr>
//   const <name> = <number>
//   time <start> <stop> <dt> <euler|rk4>

struct SdParseResult {
    SdModel model;
    std::vector<Diagnostic> diagnostics;
};

inline SdParseResult parse_sd(std::string_view text, const std::string& source = "<input>") {
    SdParseResult r;
    r.model.name = detail::path_stem(source);
    auto err = [&](int line, const std::string& code, const std::string& msg) {
        r.diagnostics.push_back({source, line, Severity::error, code, msg});
    };

    bool saw_time = false;
    int line_no = 0;
    for (std::string_view raw : detail::split(text, '\n')) {
        ++line_no;
        std::string_view line = detail::trim(raw);
        if (line.empty() || line.front() == '#') continue;

        std::vector<std::string> words = detail::split_ws(line);
        // Offset just past words[word_idx] in `line`. Words are whitespace
        // separated, so searching each word from the end of the previous
        // one lands exactly on it (never inside a longer name).
        auto offset_after = [&](std::size_t word_idx) {
            std::size_t pos = 0;
            for (std::size_t w = 0; w <= word_idx; ++w) {
                pos = line.find(words[w], pos);
                pos += words[w].size();
            }
            return pos;
        };
        auto parse_tail = [&](std::string_view tail) -> ExprPtr {
            try {
                return parse_expr(detail::trim(tail));
            } catch (const Error& e) {
                err(line_no, "BAD_EXPRESSION", e.what());
                return nullptr;
            }
        };
        auto expr_after = [&](std::size_t word_idx) -> ExprPtr {
            return parse_tail(line.substr(offset_after(word_idx)));
        };

        if (words[0] == "stock") {
            if (words.size() < 4 || words[2] != "init") {
                err(line_no, "SYNTAX_ERROR", "expected 'stock <name> init <expr> [nonneg]'");
                continue;
            }
            Stock s;
            s.name = words[1];
            std::string_view body = line.substr(offset_after(2));
            if (words.back() == "nonneg") {
                s.nonneg = true;
                body = body.substr(0, body.rfind("nonneg"));
            }
            s.init = parse_tail(body);
            if (s.init) r.model.stocks.push_back(std::move(s));
        } else if (words[0] == "flow") {
            if (words.size() < 4) {
                err(line_no, "SYNTAX_ERROR",
                    "expected 'flow <name> [from <stock>] [to <stock>] rate <expr>'");
                continue;
            }
            Flow f;
            f.name = std::string(words[1]);
            std::size_t w = 2;
            if (w + 1 < words.size() && words[w] == "from") {
                f.from = std::string(words[w + 1]);
                w += 2;
            }
            if (w + 1 < words.size() && words[w] == "to") {
                f.to = std::string(words[w + 1]);
                w += 2;
            }
            if (w >= words.size() || words[w] != "rate") {
                err(line_no, "SYNTAX_ERROR", "flow '" + f.name + "' is missing 'rate <expr>'");
                continue;
            }
            f.rate = expr_after(w);
            if (f.rate) r.model.flows.push_back(std::move(f));
        } else if (words[0] == "aux") {
            if (words.size() < 4 || words[2] != "=") {
                err(line_no, "SYNTAX_ERROR", "expected 'aux <name> = <expr>'");
                continue;
            }
            Aux a;
            a.name = std::string(words[1]);
            a.expr = expr_after(2);
            if (a.expr) r.model.auxes.push_back(std::move(a));
        } else if (words[0] == "const") {
            if (words.size() != 4 || words[2] != "=") {
                err(line_no, "SYNTAX_ERROR", "expected 'const <name> = <number>'");
                continue;
            }
            auto v = detail::parse_number(words[3]);
            if (!v) {
                err(line_no, "SYNTAX_ERROR", "constant value must be a number");
                continue;
            }
            r.model.constants.push_back({std::string(words[1]), *v});
        } else if (words[0] == "time") {
            if (words.size() != 5) {
                err(line_no, "SYNTAX_ERROR", "expected 'time <start> <stop> <dt> <euler|rk4>'");
                continue;
            }
            auto start = detail::parse_number(words[1]);
            auto stop = detail::parse_number(words[2]);
            auto dt = detail::parse_number(words[3]);
            if (!start || !stop || !dt) {
                err(line_no, "SYNTAX_ERROR", "time bounds must be numbers");
                continue;
            }
            if (words[4] == "euler") r.model.time.method = TimeSpec::Method::euler;
            else if (words[4] == "rk4") r.model.time.method = TimeSpec::Method::rk4;
            else {
                err(line_no, "SYNTAX_ERROR", "integration method must be 'euler' or 'rk4'");
                continue;
            }
            r.model.time.start = *start;
            r.model.time.stop = *stop;
            r.model.time.dt = *dt;
            saw_time = true;
        } else {
            err(line_no, "SYNTAX_ERROR", "unrecognized declaration '" + std::string(words[0]) + "'");
        }
    }
    if (!saw_time)
        r.diagnostics.push_back({source, line_no, Severity::warning, "NO_TIME_SPEC",
                                 "no 'time' line; using start 0, stop 10, dt 1, euler"});
    return r;
}

// Canonical text rendering; parse_sd(serialize_sd(m)) reproduces the model.
inline std::string serialize_sd(const SdModel& m) {
    std::string out;
    for (const auto& c : m.constants)
        out += "const " + c.name + " = " + detail::num_to_string(c.value) + "\n";
    for (const auto& s : m.stocks) {
        out += "stock " + s.name + " init " + to_string(s.init);
        if (s.nonneg) out += " nonneg";
        out += "\n";
    }
    for (const auto& a : m.auxes) out += "aux " + a.name + " = " + to_string(a.expr) + "\n";
    for (const auto& f : m.flows) {
        out += "flow " + f.name;
        if (!f.from.empty()) out += " from " + f.from;
        if (!f.to.empty()) out += " to " + f.to;
        out += " rate " + to_string(f.rate) + "\n";
    }
    out += "time " + detail::num_to_string(m.time.start) + " " +
           detail::num_to_string(m.time.stop) + " " + detail::num_to_string(m.time.dt) + " " +
           (m.time.method == TimeSpec::Method::euler ? "euler" : "rk4") + "\n";
    return out;
}

}  // namespace sesim::sd
