#pragma once

// Arithmetic expressions for stock-and-flow models: numbers, named
// variables, arithmetic and comparisons (yielding 0/1), IF with a lazily
// evaluated branch, MIN/MAX, and the time builtins TIME (current time), DT
// (the model time step), STEP(height, at), and PULSE(at, height, width).

#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sesim/detail/strings.hpp"
#include "sesim/error.hpp"

namespace sesim::sd {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Kind {
        number,
        variable,
        time,
        dt,
        negate,
        add,
        sub,
        mul,
        div,
        lt,
        le,
        gt,
        ge,
        eq,
        ne,
        min,
        max,
        if_then_else,
        step,
        pulse,
    };
    Kind kind = Kind::number;
    double number = 0;
    std::string name;
    std::vector<ExprPtr> args;
};

inline ExprPtr num(double v) {
    auto e = std::make_shared<Expr>();
    e->kind = Expr::Kind::number;
    e->number = v;
    return e;
}
inline ExprPtr var(std::string name) {
    auto e = std::make_shared<Expr>();
    e->kind = Expr::Kind::variable;
    e->name = std::move(name);
    return e;
}
inline ExprPtr node(Expr::Kind kind, std::vector<ExprPtr> args) {
    auto e = std::make_shared<Expr>();
    e->kind = kind;
    e->args = std::move(args);
    return e;
}

// --------------------------------------------------------------------------
// Evaluation
// --------------------------------------------------------------------------

struct EvalEnv {
    const std::map<std::string, double>* values = nullptr;
    double time = 0;
    double dt = 0;
};

inline double eval(const Expr& e, const EvalEnv& env) {
    using K = Expr::Kind;
    auto arg = [&](std::size_t i) { return eval(*e.args[i], env); };
    switch (e.kind) {
        case K::number:
            return e.number;
        case K::variable: {
            if (env.values) {
                auto it = env.values->find(e.name);
                if (it != env.values->end()) return it->second;
            }
            throw Error("UNKNOWN_VARIABLE", "no value for variable '" + e.name + "'");
        }
        case K::time:
            return env.time;
        case K::dt:
            return env.dt;
        case K::negate:
            return -arg(0);
        case K::add:
            return arg(0) + arg(1);
        case K::sub:
            return arg(0) - arg(1);
        case K::mul:
            return arg(0) * arg(1);
        case K::div:
            return arg(0) / arg(1);
        case K::lt:
            return arg(0) < arg(1) ? 1 : 0;
        case K::le:
            return arg(0) <= arg(1) ? 1 : 0;
        case K::gt:
            return arg(0) > arg(1) ? 1 : 0;
        case K::ge:
            return arg(0) >= arg(1) ? 1 : 0;
        case K::eq:
            return arg(0) == arg(1) ? 1 : 0;
        case K::ne:
            return arg(0) != arg(1) ? 1 : 0;
        case K::min: {
            double v = arg(0);
            for (std::size_t i = 1; i < e.args.size(); ++i) v = std::min(v, arg(i));
            return v;
        }
        case K::max: {
            double v = arg(0);
            for (std::size_t i = 1; i < e.args.size(); ++i) v = std::max(v, arg(i));
            return v;
        }
        case K::if_then_else:
            // Only the taken branch evaluates, so the other branch may
            // divide by zero or reference nothing real without harm.
            return arg(0) != 0 ? arg(1) : arg(2);
        case K::step:
            return env.time >= eval(*e.args[1], env) ? arg(0) : 0;
        case K::pulse: {
            double at = arg(0), height = arg(1), width = arg(2);
            return env.time >= at && env.time < at + width ? height : 0;
        }
    }
    throw Error("BAD_EXPRESSION", "unreachable expression kind");
}

// Variable names the expression reads (time builtins excluded).
inline void collect_deps(const Expr& e, std::set<std::string>& out) {
    if (e.kind == Expr::Kind::variable) out.insert(e.name);
    for (const auto& a : e.args) collect_deps(*a, out);
}
inline std::set<std::string> deps(const Expr& e) {
    std::set<std::string> out;
    collect_deps(e, out);
    return out;
}

// --------------------------------------------------------------------------
// Parsing
// --------------------------------------------------------------------------

namespace detail_expr {

struct Parser {
    std::string_view text;
    std::size_t i = 0;

    [[noreturn]] void fail(const std::string& why) const {
        throw Error("BAD_EXPRESSION",
                    why + " at offset " + std::to_string(i) + " in '" + std::string(text) + "'");
    }
    void skip_ws() {
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    }
    bool eat(char c) {
        skip_ws();
        if (i < text.size() && text[i] == c) {
            ++i;
            return true;
        }
        return false;
    }
    bool eat(std::string_view s) {
        skip_ws();
        if (text.substr(i, s.size()) == s) {
            i += s.size();
            return true;
        }
        return false;
    }
    char peek() {
        skip_ws();
        return i < text.size() ? text[i] : '\0';
    }

    ExprPtr parse() {
        ExprPtr e = comparison();
        skip_ws();
        if (i != text.size()) fail("unexpected trailing text");
        return e;
    }

    ExprPtr comparison() {
        ExprPtr lhs = additive();
        skip_ws();
        Expr::Kind k;
        if (eat("<=")) k = Expr::Kind::le;
        else if (eat(">=")) k = Expr::Kind::ge;
        else if (eat("==")) k = Expr::Kind::eq;
        else if (eat("!=")) k = Expr::Kind::ne;
        else if (eat('<')) k = Expr::Kind::lt;
        else if (eat('>')) k = Expr::Kind::gt;
        else return lhs;
        return node(k, {lhs, additive()});
    }

    ExprPtr additive() {
        ExprPtr e = term();
        for (;;) {
            if (eat('+')) e = node(Expr::Kind::add, {e, term()});
            else if (eat('-')) e = node(Expr::Kind::sub, {e, term()});
            else return e;
        }
    }

    ExprPtr term() {
        ExprPtr e = unary();
        for (;;) {
            if (eat('*')) e = node(Expr::Kind::mul, {e, unary()});
            else if (eat('/')) e = node(Expr::Kind::div, {e, unary()});
            else return e;
        }
    }

    ExprPtr unary() {
        if (eat('-')) return node(Expr::Kind::negate, {unary()});
        return primary();
    }

    ExprPtr primary() {
        skip_ws();
        if (eat('(')) {
            ExprPtr e = comparison();
            if (!eat(')')) fail("expected ')'");
            return e;
        }
        char c = peek();
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number_lit();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return name_or_call();
        fail("expected a number, name, or '('");
    }

    ExprPtr number_lit() {
        std::size_t start = i;
        while (i < text.size() &&
               (std::isdigit(static_cast<unsigned char>(text[i])) || text[i] == '.'))
            ++i;
        if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
            std::size_t save = i++;
            if (i < text.size() && (text[i] == '+' || text[i] == '-')) ++i;
            if (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
                while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
            } else {
                i = save;
            }
        }
        auto v = detail::parse_number(text.substr(start, i - start));
        if (!v) fail("malformed number");
        return num(*v);
    }

    ExprPtr name_or_call() {
        std::size_t start = i;
        while (i < text.size() && (std::isalnum(static_cast<unsigned char>(text[i])) ||
                                   text[i] == '_'))
            ++i;
        std::string name(text.substr(start, i - start));
        if (!eat('(')) {
            if (name == "TIME") return node(Expr::Kind::time, {});
            if (name == "DT") return node(Expr::Kind::dt, {});
            return var(std::move(name));
        }
        std::vector<ExprPtr> args;
        if (!eat(')')) {
            do {
                args.push_back(comparison());
            } while (eat(','));
            if (!eat(')')) fail("expected ')' after arguments");
        }
        auto want = [&](std::size_t n) {
            if (args.size() != n)
                fail(name + " takes " + std::to_string(n) + " arguments, got " +
                     std::to_string(args.size()));
        };
        auto want_at_least = [&](std::size_t n) {
            if (args.size() < n)
                fail(name + " takes at least " + std::to_string(n) + " arguments");
        };
        if (name == "IF") {
            want(3);
            return node(Expr::Kind::if_then_else, std::move(args));
        }
        if (name == "MIN") {
            want_at_least(1);
            return node(Expr::Kind::min, std::move(args));
        }
        if (name == "MAX") {
            want_at_least(1);
            return node(Expr::Kind::max, std::move(args));
        }
        if (name == "STEP") {
            want(2);
            return node(Expr::Kind::step, std::move(args));
        }
        if (name == "PULSE") {
            want(3);
            return node(Expr::Kind::pulse, std::move(args));
        }
        fail("unknown function '" + name + "'");
    }
};

inline int precedence(Expr::Kind k) {
    using K = Expr::Kind;
    switch (k) {
        case K::lt:
        case K::le:
        case K::gt:
        case K::ge:
        case K::eq:
        case K::ne:
            return 1;
        case K::add:
        case K::sub:
            return 2;
        case K::mul:
        case K::div:
            return 3;
        case K::negate:
            return 4;
        default:
            return 5;  // atoms and calls never need parens
    }
}

inline const char* op_text(Expr::Kind k) {
    using K = Expr::Kind;
    switch (k) {
        case K::add: return " + ";
        case K::sub: return " - ";
        case K::mul: return " * ";
        case K::div: return " / ";
        case K::lt: return " < ";
        case K::le: return " <= ";
        case K::gt: return " > ";
        case K::ge: return " >= ";
        case K::eq: return " == ";
        case K::ne: return " != ";
        default: return "?";
    }
}

inline void print(const Expr& e, std::string& out) {
    using K = Expr::Kind;
    auto child = [&](const Expr& c, bool needs_parens) {
        if (needs_parens) out += '(';
        print(c, out);
        if (needs_parens) out += ')';
    };
    auto call = [&](const char* fn) {
        out += fn;
        out += '(';
        for (std::size_t i = 0; i < e.args.size(); ++i) {
            if (i) out += ", ";
            print(*e.args[i], out);
        }
        out += ')';
    };
    switch (e.kind) {
        case K::number:
            out += detail::num_to_string(e.number);
            return;
        case K::variable:
            out += e.name;
            return;
        case K::time:
            out += "TIME";
            return;
        case K::dt:
            out += "DT";
            return;
        case K::negate:
            out += '-';
            child(*e.args[0], precedence(e.args[0]->kind) < precedence(K::negate));
            return;
        case K::add:
        case K::mul: {
            int p = precedence(e.kind);
            child(*e.args[0], precedence(e.args[0]->kind) < p);
            out += op_text(e.kind);
            child(*e.args[1], precedence(e.args[1]->kind) < p);
            return;
        }
        case K::sub:
        case K::div: {
            // Left-associative, non-commutative: the right child needs
            // parens at equal precedence too.
            int p = precedence(e.kind);
            child(*e.args[0], precedence(e.args[0]->kind) < p);
            out += op_text(e.kind);
            child(*e.args[1], precedence(e.args[1]->kind) <= p);
            return;
        }
        case K::lt:
        case K::le:
        case K::gt:
        case K::ge:
        case K::eq:
        case K::ne: {
            // Comparisons do not chain in the grammar: a comparison child
            // needs parens on either side.
            int p = precedence(e.kind);
            child(*e.args[0], precedence(e.args[0]->kind) <= p);
            out += op_text(e.kind);
            child(*e.args[1], precedence(e.args[1]->kind) <= p);
            return;
        }
        case K::min: call("MIN"); return;
        case K::max: call("MAX"); return;
        case K::if_then_else: call("IF"); return;
        case K::step: call("STEP"); return;
        case K::pulse: call("PULSE"); return;
    }
}

}  // namespace detail_expr

// Parses one expression; the whole string must be consumed. Throws
// BAD_EXPRESSION on malformed input.
inline ExprPtr parse_expr(std::string_view text) {
    detail_expr::Parser p{text};
    return p.parse();
}

// Canonical rendering with minimal parentheses; parse_expr(to_string(e))
// reproduces the tree.
inline std::string to_string(const Expr& e) {
    std::string out;
    detail_expr::print(e, out);
    return out;
}
inline std::string to_string(const ExprPtr& e) { return to_string(*e); }

}  // namespace sesim::sd
