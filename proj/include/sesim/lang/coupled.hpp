#pragma once

// Sentence dialect for composed models: named children (loaded from files
// or declared inline as builtin sources/monitors), couplings between their
// ports, and boundary ports. Shares the lexer, the type/range/use/port
// sentences, and the diagnostics style with the component dialect.

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sesim/devs/coupled.hpp"
#include "sesim/devs/generators.hpp"
#include "sesim/lang/compile.hpp"
#include "sesim/lang/parser.hpp"

namespace sesim::lang {

// --------------------------------------------------------------------------
// Statements
// --------------------------------------------------------------------------

struct ComponentFileStmt {  // component <name> from "<file>"
    std::string name, file;
    int line = 0;
};
struct SourceDeclStmt {  // component <name> emits on <port> with type <T>
                         //   every <period> starting at <start>
    std::string name, port, type;
    double period = 0, start = 0;
    int line = 0;
};
struct ReadingStmt {  // <name> reading <field.path> <num> (and <field.path> <num>)*
    std::string component;
    std::vector<std::pair<std::vector<std::string>, double>> fields;
    int line = 0;
};
struct AnnounceStmt {  // <name> announces on <port> with type <T> at time <num>
    std::string component, port, type;
    double time = 0;
    int line = 0;
};
struct MonitorDeclStmt {  // component <name> watches <port> with type <T>
                          //   and raises <port> when <field.path> exceeds <num>
    std::string name, in_port, type, raise_port;
    std::vector<std::string> path;
    double limit = 0;
    int line = 0;
};
struct CoupleStmt {  // couple <a>.<p> to <b>.<q>   ('self' names the boundary)
    std::string from_component, from_port, to_component, to_port;
    int line = 0;
};

using CoupledStatement =
    std::variant<TypeDeclStmt, RangeDeclStmt, UseDeclStmt, PortDeclStmt, ComponentFileStmt,
                 SourceDeclStmt, ReadingStmt, AnnounceStmt, MonitorDeclStmt, CoupleStmt>;

struct CoupledAst {
    std::string source;
    std::vector<CoupledStatement> statements;
};

struct CoupledParseResult {
    CoupledAst ast;
    std::vector<Diagnostic> diagnostics;
};

// --------------------------------------------------------------------------
// Parsing
// --------------------------------------------------------------------------

namespace detail_parse {

inline std::optional<CoupledStatement> parse_coupled_sentence(Sentence& s,
                                                              const std::string& source,
                                                              std::vector<Diagnostic>& diags) {
    const int line = s.line();
    auto fail = [&](const std::string& why) -> std::optional<CoupledStatement> {
        diags.push_back({source, line, Severity::error, "SYNTAX_ERROR", why});
        return std::nullopt;
    };
    auto finish = [&](CoupledStatement st, const char* what) -> std::optional<CoupledStatement> {
        if (!s.done()) return fail(std::string("unexpected trailing words in ") + what);
        return st;
    };
    // "with type <T>" tail shared by several component sentences.
    auto eat_typed = [&](std::string& port, std::string& type) {
        auto p = s.eat_ident();
        if (!p) return false;
        if (!s.eat_word("with") || !s.eat_word("type")) return false;
        auto t = s.eat_ident();
        if (!t) return false;
        port = *p;
        type = *t;
        return true;
    };

    if (s.peek_word("component")) {
        s.eat_word("component");
        auto name = s.eat_ident();
        if (!name) return fail("expected a component name after 'component'");
        if (s.eat_word("from")) {
            if (s.done() || s.cur().kind != TokKind::str)
                return fail("expected a quoted file name after 'from'");
            std::string file = s.cur().text;
            ++s.i;
            return finish(ComponentFileStmt{*name, file, line}, "component sentence");
        }
        if (s.eat_word("emits")) {
            SourceDeclStmt src{*name, "", "", 0, 0, line};
            if (!s.eat_word("on") || !eat_typed(src.port, src.type))
                return fail("expected 'emits on <port> with type <type>'");
            if (!s.eat_word("every")) return fail("expected 'every <period>'");
            auto period = s.eat_number();
            if (!period) return fail("expected a period");
            if (!s.eat_word("starting") || !s.eat_word("at"))
                return fail("expected 'starting at <time>'");
            auto start = s.eat_number();
            if (!start) return fail("expected a start time");
            src.period = *period;
            src.start = *start;
            return finish(std::move(src), "source sentence");
        }
        if (s.eat_word("watches")) {
            MonitorDeclStmt mon{*name, "", "", "", {}, 0, line};
            if (!eat_typed(mon.in_port, mon.type))
                return fail("expected 'watches <port> with type <type>'");
            if (!s.eat_word("and") || !s.eat_word("raises"))
                return fail("expected 'and raises <port>'");
            auto raise = s.eat_ident();
            if (!raise) return fail("expected a port to raise on");
            mon.raise_port = *raise;
            if (!s.eat_word("when")) return fail("expected 'when <field.path> exceeds <limit>'");
            auto path = s.eat_field_path();
            if (!path) return fail("expected a field path to watch");
            if (!s.eat_word("exceeds")) return fail("expected 'exceeds <limit>'");
            auto limit = s.eat_number();
            if (!limit) return fail("expected a limit");
            mon.path = std::move(*path);
            mon.limit = *limit;
            return finish(std::move(mon), "monitor sentence");
        }
        return fail("expected 'from', 'emits', or 'watches' after the component name");
    }
    if (s.peek_word("couple")) {
        s.eat_word("couple");
        auto from = s.eat_field_path();
        if (!from || from->size() != 2)
            return fail("expected '<component>.<port>' after 'couple'");
        if (!s.eat_word("to")) return fail("expected 'to' in couple sentence");
        auto to = s.eat_field_path();
        if (!to || to->size() != 2) return fail("expected '<component>.<port>' after 'to'");
        auto boundary = [](const std::string& n) { return n == "self" ? std::string() : n; };
        return finish(CoupleStmt{boundary((*from)[0]), (*from)[1], boundary((*to)[0]),
                                 (*to)[1], line},
                      "couple sentence");
    }
    if (s.peek_word("reading", 1)) {
        auto name = s.eat_ident();
        s.eat_word("reading");
        ReadingStmt rd{*name, {}, line};
        do {
            auto path = s.eat_field_path();
            if (!path) return fail("expected a field path in reading sentence");
            auto num = s.eat_number();
            if (!num) return fail("expected a value in reading sentence");
            rd.fields.emplace_back(std::move(*path), *num);
        } while (s.eat_word("and"));
        return finish(std::move(rd), "reading sentence");
    }
    if (s.peek_word("announces", 1)) {
        auto name = s.eat_ident();
        s.eat_word("announces");
        AnnounceStmt an{*name, "", "", 0, line};
        if (!s.eat_word("on") || !eat_typed(an.port, an.type))
            return fail("expected 'announces on <port> with type <type>'");
        if (!s.eat_word("at") || !s.eat_word("time")) return fail("expected 'at time <num>'");
        auto t = s.eat_number();
        if (!t) return fail("expected an announcement time");
        an.time = *t;
        return finish(std::move(an), "announce sentence");
    }

    // Everything else is shared with the component dialect; component-only
    // sentences (hold/passivate/...) are rejected here.
    auto st = parse_sentence(s, source, diags);
    if (!st) return std::nullopt;
    if (auto* td = std::get_if<TypeDeclStmt>(&*st)) return CoupledStatement{std::move(*td)};
    if (auto* rd = std::get_if<RangeDeclStmt>(&*st)) return CoupledStatement{std::move(*rd)};
    if (auto* ud = std::get_if<UseDeclStmt>(&*st)) return CoupledStatement{std::move(*ud)};
    if (auto* pd = std::get_if<PortDeclStmt>(&*st)) return CoupledStatement{std::move(*pd)};
    return fail("this sentence form belongs in a component file, not a composition");
}

}  // namespace detail_parse

inline CoupledParseResult parse_coupled(std::string_view text,
                                        const std::string& source = "<input>") {
    CoupledParseResult r;
    r.ast.source = source;
    std::vector<Token> toks = lex(text, source, r.diagnostics);

    std::size_t start = 0;
    for (std::size_t i = 0; i <= toks.size(); ++i) {
        bool at_end = i == toks.size();
        if (!at_end && toks[i].kind != TokKind::bang) continue;
        if (i > start) {
            if (at_end) {
                r.diagnostics.push_back({source, toks[start].line, Severity::error,
                                         "SYNTAX_ERROR", "sentence is missing its final '!'"});
            } else {
                Sentence s{&toks, start, i, start};
                auto st = detail_parse::parse_coupled_sentence(s, source, r.diagnostics);
                if (st) r.ast.statements.push_back(std::move(*st));
            }
        }
        start = i + 1;
    }
    if (r.ast.statements.empty())
        r.diagnostics.push_back(
            {source, 1, Severity::warning, "EMPTY_MODEL", "no sentences recognized"});
    return r;
}

// --------------------------------------------------------------------------
// Checking and compilation
// --------------------------------------------------------------------------

namespace detail_compile {

enum class ChildKind { file, source, monitor };

struct GatheredCoupled {
    Ast shared_ast;   // owns the shared-subset statements `shared` points into
    Gathered shared;  // types, ranges, uses, boundary ports
    struct Child {
        ChildKind kind;
        const void* stmt;  // points at the declaring statement
        int line;
    };
    std::map<std::string, Child> children;
    std::vector<std::string> child_order;
    std::map<std::string, std::vector<const ReadingStmt*>> readings;
    std::map<std::string, const AnnounceStmt*> announces;
    std::vector<const CoupleStmt*> couples;
};

inline GatheredCoupled gather_coupled(const CoupledAst& ast, std::vector<Diagnostic>& out) {
    GatheredCoupled g;
    const std::string& src = ast.source;
    auto err = [&](int line, const std::string& code, const std::string& msg) {
        out.push_back({src, line, Severity::error, code, msg});
    };

    // Reuse the shared gatherer for the sentence forms both dialects have.
    // g.shared holds pointers into g.shared_ast's statements; the vector's
    // heap storage keeps them stable when the result is moved out.
    g.shared_ast.source = src;
    for (const auto& stmt : ast.statements) {
        if (const auto* td = std::get_if<TypeDeclStmt>(&stmt))
            g.shared_ast.statements.push_back(*td);
        else if (const auto* rd = std::get_if<RangeDeclStmt>(&stmt))
            g.shared_ast.statements.push_back(*rd);
        else if (const auto* ud = std::get_if<UseDeclStmt>(&stmt))
            g.shared_ast.statements.push_back(*ud);
        else if (const auto* pd = std::get_if<PortDeclStmt>(&stmt))
            g.shared_ast.statements.push_back(*pd);
    }
    g.shared = gather(g.shared_ast, out);

    auto add_child = [&](const std::string& name, ChildKind kind, const void* stmt, int line) {
        if (name == "self") {
            err(line, "BAD_CHILD_NAME", "'self' names the boundary and cannot be a component");
            return;
        }
        if (g.children.count(name)) {
            err(line, "DUPLICATE_COMPONENT", "component '" + name + "' declared twice");
            return;
        }
        g.children.emplace(name, GatheredCoupled::Child{kind, stmt, line});
        g.child_order.push_back(name);
    };

    for (const auto& stmt : ast.statements) {
        if (const auto* cf = std::get_if<ComponentFileStmt>(&stmt)) {
            add_child(cf->name, ChildKind::file, cf, cf->line);
        } else if (const auto* sd = std::get_if<SourceDeclStmt>(&stmt)) {
            add_child(sd->name, ChildKind::source, sd, sd->line);
        } else if (const auto* md = std::get_if<MonitorDeclStmt>(&stmt)) {
            add_child(md->name, ChildKind::monitor, md, md->line);
        } else if (const auto* rd = std::get_if<ReadingStmt>(&stmt)) {
            g.readings[rd->component].push_back(rd);
        } else if (const auto* an = std::get_if<AnnounceStmt>(&stmt)) {
            if (g.announces.count(an->component))
                err(an->line, "BAD_ANNOUNCE",
                    "component '" + an->component + "' already announces");
            else
                g.announces.emplace(an->component, an);
        } else if (const auto* cp = std::get_if<CoupleStmt>(&stmt)) {
            g.couples.push_back(cp);
        }
    }
    return g;
}

}  // namespace detail_compile

// Source-level validation: types and declarations are consistent and every
// sentence refers to components that exist. Port-level wiring is validated
// by devs::validate_coupled once the children are built.
inline std::vector<Diagnostic> check_coupled(const CoupledAst& ast) {
    std::vector<Diagnostic> out;
    const std::string& src = ast.source;
    auto err = [&](int line, const std::string& code, const std::string& msg) {
        out.push_back({src, line, Severity::error, code, msg});
    };

    detail_compile::GatheredCoupled g = detail_compile::gather_coupled(ast, out);
    detail_compile::check_shared(g.shared, src, out);

    auto child_kind = [&](const std::string& name)
        -> std::optional<detail_compile::ChildKind> {
        auto it = g.children.find(name);
        if (it == g.children.end()) return std::nullopt;
        return it->second.kind;
    };

    for (const auto& name : g.child_order) {
        const auto& child = g.children.at(name);
        if (child.kind == detail_compile::ChildKind::source) {
            const auto* sd = static_cast<const SourceDeclStmt*>(child.stmt);
            if (sd->period <= 0)
                err(sd->line, "NONPOSITIVE_PERIOD",
                    "component '" + name + "' needs a period > 0");
            if (!detail_compile::known_type(g.shared, sd->type))
                err(sd->line, "UNKNOWN_TYPE",
                    "component '" + name + "' emits undeclared type '" + sd->type + "'");
        } else if (child.kind == detail_compile::ChildKind::monitor) {
            const auto* md = static_cast<const MonitorDeclStmt*>(child.stmt);
            if (!detail_compile::known_type(g.shared, md->type))
                err(md->line, "UNKNOWN_TYPE",
                    "component '" + name + "' watches undeclared type '" + md->type + "'");
        }
    }

    for (const auto& [name, list] : g.readings) {
        auto kind = child_kind(name);
        if (!kind) {
            err(list.front()->line, "UNKNOWN_COMPONENT",
                "reading for undeclared component '" + name + "'");
        } else if (*kind != detail_compile::ChildKind::source) {
            err(list.front()->line, "BAD_READING",
                "component '" + name + "' does not emit readings");
        }
    }
    for (const auto& [name, an] : g.announces) {
        auto kind = child_kind(name);
        if (!kind) {
            err(an->line, "UNKNOWN_COMPONENT",
                "announcement for undeclared component '" + name + "'");
            continue;
        }
        if (*kind == detail_compile::ChildKind::file) {
            err(an->line, "BAD_ANNOUNCE",
                "component '" + name + "' comes from a file and cannot announce");
            continue;
        }
        if (!detail_compile::known_type(g.shared, an->type))
            err(an->line, "UNKNOWN_TYPE",
                "component '" + name + "' announces undeclared type '" + an->type + "'");
        if (*kind == detail_compile::ChildKind::source) {
            const auto* sd = static_cast<const SourceDeclStmt*>(g.children.at(name).stmt);
            if (an->time > sd->start)
                err(an->line, "BAD_ANNOUNCE",
                    "component '" + name + "' would announce after its first reading");
        }
    }

    for (const auto* cp : g.couples) {
        for (const std::string* end : {&cp->from_component, &cp->to_component})
            if (!end->empty() && !g.children.count(*end))
                err(cp->line, "UNKNOWN_COMPONENT",
                    "couple sentence names undeclared component '" + *end + "'");
    }

    return out;
}

// Loads the spec behind 'component <name> from "<file>"'. The loader owns
// path resolution and cycle detection; it throws sesim::Error on failure.
using ComponentResolver = std::function<devs::Component(const std::string& file)>;

// Builds the CoupledSpec: children in declaration order (file components
// resolved through the resolver, sources and monitors built from their
// sentences), couplings in declaration order, boundary ports as declared.
// Throws INVALID_MODEL when check_coupled or the built spec's validation
// finds errors.
inline devs::CoupledSpec compile_coupled(const CoupledAst& ast,
                                         const ComponentResolver& resolve) {
    auto diags = check_coupled(ast);
    if (has_errors(diags))
        throw Error("INVALID_MODEL", "model '" + ast.source + "' failed checks",
                    std::move(diags));

    std::vector<Diagnostic> sink;
    detail_compile::GatheredCoupled g = detail_compile::gather_coupled(ast, sink);
    devs::TypeRegistry types = detail_compile::build_types(g.shared);

    auto announce_for = [&](const std::string& name) -> std::optional<devs::Announce> {
        auto it = g.announces.find(name);
        if (it == g.announces.end()) return std::nullopt;
        return devs::Announce{it->second->port, it->second->type, it->second->time};
    };

    devs::CoupledSpec spec;
    spec.name = detail::path_stem(ast.source);
    spec.data_types = types;
    spec.ports = g.shared.ports;

    for (const auto& name : g.child_order) {
        const auto& child = g.children.at(name);
        if (child.kind == detail_compile::ChildKind::file) {
            const auto* cf = static_cast<const ComponentFileStmt*>(child.stmt);
            spec.children.emplace_back(name, resolve(cf->file));
        } else if (child.kind == detail_compile::ChildKind::source) {
            const auto* sd = static_cast<const SourceDeclStmt*>(child.stmt);
            std::vector<devs::MessageValue> readings;
            auto rit = g.readings.find(name);
            if (rit != g.readings.end()) {
                for (const auto* rd : rit->second) {
                    devs::MessageValue m = devs::zero_value(sd->type, types);
                    for (const auto& [path, num] : rd->fields) {
                        if (!devs::set_numeric_field(m, sd->type, types, path, num)) {
                            std::string joined;
                            for (const auto& seg : path)
                                joined += (joined.empty() ? "" : ".") + seg;
                            throw Error(
                                "BAD_READING",
                                "reading for '" + name + "' cannot set '" + joined + "'",
                                {{ast.source, rd->line, Severity::error, "BAD_READING",
                                  "'" + joined + "' is not a numeric field of " + sd->type +
                                      " or cannot hold " + detail::num_to_string(num)}});
                        }
                    }
                    readings.push_back(std::move(m));
                }
            }
            spec.children.emplace_back(
                name, devs::Component(devs::periodic_source(name, sd->port, sd->type, types,
                                                            sd->period, sd->start,
                                                            std::move(readings),
                                                            announce_for(name))));
        } else {
            const auto* md = static_cast<const MonitorDeclStmt*>(child.stmt);
            spec.children.emplace_back(
                name, devs::Component(devs::threshold_monitor(name, md->in_port, md->type,
                                                              types, md->raise_port, md->path,
                                                              md->limit, announce_for(name))));
        }
    }

    for (const auto* cp : g.couples)
        spec.couplings.push_back(
            {cp->from_component, cp->from_port, cp->to_component, cp->to_port});

    auto built = devs::validate_coupled(spec);
    if (has_errors(built)) {
        for (auto& d : built)
            if (d.file.empty()) d.file = ast.source;
        throw Error("INVALID_MODEL", "model '" + ast.source + "' failed wiring checks",
                    std::move(built));
    }
    return spec;
}

}  // namespace sesim::lang
