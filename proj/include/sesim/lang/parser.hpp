#pragma once

// Sentence dialect for atomic components. Each statement is one sentence
// ended by '!'; '//' starts a line comment. parse() lexes and recognizes
// sentences, skipping malformed ones with a diagnostic so a single typo
// does not hide the rest of the file.

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sesim/detail/strings.hpp"
#include "sesim/diagnostics.hpp"

namespace sesim::lang {

// --------------------------------------------------------------------------
// Statements
// --------------------------------------------------------------------------

struct TypeDeclStmt {
    std::string name;
    std::vector<std::string> fields;
    int line = 0;
};
struct RangeDeclStmt {  // the range of <type>'s <field> is <range>
    std::string type_name, field, range;
    int line = 0;
};
struct UseDeclStmt {  // use <var> with type <type>   (declarative only)
    std::string var, type;
    int line = 0;
};
struct PortDeclStmt {
    bool input = true;
    std::string port, type;
    int line = 0;
};
struct StartHoldStmt {
    std::string state;
    double time = 0;
    int line = 0;
};
struct HoldStmt {
    std::string state;
    double time = 0;
    int line = 0;
};
struct PassivateStmt {
    std::string state;
    int line = 0;
};
struct InternalGotoStmt {
    std::string from, to;
    int line = 0;
};
struct ExternalWhenStmt {  // when in <state> and receive <port-or-type> go to <target>
    std::string state, trigger, target;
    int line = 0;
};
struct AfterOutputStmt {  // after <state> output <port>
    std::string state, port;
    int line = 0;
};

using Statement =
    std::variant<TypeDeclStmt, RangeDeclStmt, UseDeclStmt, PortDeclStmt, StartHoldStmt,
                 HoldStmt, PassivateStmt, InternalGotoStmt, ExternalWhenStmt, AfterOutputStmt>;

struct Ast {
    std::string source;  // file name for diagnostics; its stem names the model
    std::vector<Statement> statements;
};

struct ParseResult {
    Ast ast;
    std::vector<Diagnostic> diagnostics;
};

// --------------------------------------------------------------------------
// Lexer (shared with the composition dialect)
// --------------------------------------------------------------------------

enum class TokKind { word, number, str, possessive, dot, bang };

struct Token {
    TokKind kind = TokKind::word;
    std::string text;
    double num = 0;
    int line = 1;
};

inline std::vector<Token> lex(std::string_view text, const std::string& source,
                              std::vector<Diagnostic>& diags) {
    std::vector<Token> out;
    int line = 1;
    std::size_t i = 0;
    auto is_word_start = [](char c) {
        return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
    };
    auto is_word_char = [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    };
    while (i < text.size()) {
        char c = text[i];
        if (c == '\n') {
            ++line;
            ++i;
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\r') {
            ++i;
            continue;
        }
        if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
            while (i < text.size() && text[i] != '\n') ++i;
            continue;
        }
        if (is_word_start(c)) {
            std::size_t start = i;
            while (i < text.size() && is_word_char(text[i])) ++i;
            out.push_back({TokKind::word, std::string(text.substr(start, i - start)), 0, line});
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t start = i;
            while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
            if (i < text.size() && text[i] == '.' && i + 1 < text.size() &&
                std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
                ++i;
                while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
            }
            if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
                std::size_t save = i;
                ++i;
                if (i < text.size() && (text[i] == '+' || text[i] == '-')) ++i;
                if (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
                    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])))
                        ++i;
                } else {
                    i = save;  // 'e' belonged to something else
                }
            }
            auto slice = text.substr(start, i - start);
            auto v = detail::parse_number(slice);
            if (!v) {
                diags.push_back({source, line, Severity::error, "SYNTAX_ERROR",
                                 "malformed number '" + std::string(slice) + "'"});
                continue;
            }
            out.push_back({TokKind::number, std::string(slice), *v, line});
            continue;
        }
        if (c == '\'' && i + 1 < text.size() && text[i + 1] == 's') {
            out.push_back({TokKind::possessive, "'s", 0, line});
            i += 2;
            continue;
        }
        if (c == '.') {
            out.push_back({TokKind::dot, ".", 0, line});
            ++i;
            continue;
        }
        if (c == '!') {
            out.push_back({TokKind::bang, "!", 0, line});
            ++i;
            continue;
        }
        if (c == '"') {
            std::size_t start = ++i;
            while (i < text.size() && text[i] != '"' && text[i] != '\n') ++i;
            if (i == text.size() || text[i] == '\n') {
                diags.push_back({source, line, Severity::error, "SYNTAX_ERROR",
                                 "unterminated string literal"});
                continue;
            }
            out.push_back({TokKind::str, std::string(text.substr(start, i - start)), 0, line});
            ++i;
            continue;
        }
        diags.push_back({source, line, Severity::error, "SYNTAX_ERROR",
                         std::string("unexpected character '") + c + "'"});
        ++i;
    }
    return out;
}

// Cursor over one sentence (tokens between two '!')
struct Sentence {
    const std::vector<Token>* toks = nullptr;
    std::size_t begin = 0, end = 0;
    std::size_t i = 0;

    int line() const { return begin < end ? (*toks)[begin].line : 0; }
    bool done() const { return i >= end; }
    const Token& cur() const { return (*toks)[i]; }

    bool eat_word(std::string_view w) {
        if (!done() && cur().kind == TokKind::word && cur().text == w) {
            ++i;
            return true;
        }
        return false;
    }
    bool peek_word(std::string_view w, std::size_t ahead = 0) const {
        std::size_t j = i + ahead;
        return j < end && (*toks)[j].kind == TokKind::word && (*toks)[j].text == w;
    }
    void eat_article() {
        if (!done() && cur().kind == TokKind::word &&
            (cur().text == "a" || cur().text == "A" || cur().text == "an" || cur().text == "An"))
            ++i;
    }
    std::optional<std::string> eat_ident() {
        if (!done() && cur().kind == TokKind::word) return (*toks)[i++].text;
        return std::nullopt;
    }
    std::optional<double> eat_number() {
        if (!done() && cur().kind == TokKind::number) return (*toks)[i++].num;
        return std::nullopt;
    }
    bool eat(TokKind k) {
        if (!done() && cur().kind == k) {
            ++i;
            return true;
        }
        return false;
    }
    // Dotted identifier chain: a.b.c
    std::optional<std::vector<std::string>> eat_field_path() {
        auto first = eat_ident();
        if (!first) return std::nullopt;
        std::vector<std::string> path{*first};
        while (!done() && cur().kind == TokKind::dot) {
            ++i;
            auto next = eat_ident();
            if (!next) return std::nullopt;
            path.push_back(*next);
        }
        return path;
    }
};

namespace detail_parse {

inline std::optional<Statement> parse_sentence(Sentence& s, const std::string& source,
                                               std::vector<Diagnostic>& diags) {
    const int line = s.line();
    auto fail = [&](const std::string& why) -> std::optional<Statement> {
        diags.push_back({source, line, Severity::error, "SYNTAX_ERROR", why});
        return std::nullopt;
    };
    auto finish = [&](Statement st, const char* what) -> std::optional<Statement> {
        if (!s.done()) return fail(std::string("unexpected trailing words in ") + what);
        return st;
    };

    if (s.peek_word("the")) {
        s.eat_word("the");
        if (!s.eat_word("range") || !s.eat_word("of")) return fail("expected 'the range of ...'");
        auto type = s.eat_ident();
        if (!type) return fail("expected a type name after 'the range of'");
        if (!s.eat(TokKind::possessive)) return fail("expected <type>'s <field>");
        auto field = s.eat_ident();
        if (!field) return fail("expected a field name");
        if (!s.eat_word("is")) return fail("expected 'is' in range sentence");
        auto range = s.eat_ident();
        if (!range) return fail("expected a range type");
        return finish(RangeDeclStmt{*type, *field, *range, line}, "range sentence");
    }
    if (s.peek_word("use")) {
        s.eat_word("use");
        auto var = s.eat_ident();
        if (!var) return fail("expected a variable name after 'use'");
        if (!s.eat_word("with") || !s.eat_word("type")) return fail("expected 'with type'");
        auto type = s.eat_ident();
        if (!type) return fail("expected a type name");
        return finish(UseDeclStmt{*var, *type, line}, "use sentence");
    }
    if (s.peek_word("accepts") || s.peek_word("generates")) {
        bool input = s.peek_word("accepts");
        s.eat_word(input ? "accepts" : "generates");
        if (!s.eat_word(input ? "input" : "output") || !s.eat_word("on"))
            return fail(input ? "expected 'accepts input on ...'"
                              : "expected 'generates output on ...'");
        auto port = s.eat_ident();
        if (!port) return fail("expected a port name");
        if (!s.eat_word("with") || !s.eat_word("type")) return fail("expected 'with type'");
        auto type = s.eat_ident();
        if (!type) return fail("expected a type name");
        return finish(PortDeclStmt{input, *port, *type, line}, "port sentence");
    }
    if (s.peek_word("to")) {
        s.eat_word("to");
        if (!s.eat_word("start") || !s.eat_word("hold") || !s.eat_word("in"))
            return fail("expected 'to start hold in ...'");
        auto state = s.eat_ident();
        if (!state) return fail("expected a state name");
        if (!s.eat_word("for") || !s.eat_word("time")) return fail("expected 'for time'");
        auto t = s.eat_number();
        if (!t) return fail("expected a time value");
        return finish(StartHoldStmt{*state, *t, line}, "start sentence");
    }
    if (s.peek_word("hold")) {
        s.eat_word("hold");
        if (!s.eat_word("in")) return fail("expected 'hold in ...'");
        auto state = s.eat_ident();
        if (!state) return fail("expected a state name");
        if (!s.eat_word("for") || !s.eat_word("time")) return fail("expected 'for time'");
        auto t = s.eat_number();
        if (!t) return fail("expected a time value");
        return finish(HoldStmt{*state, *t, line}, "hold sentence");
    }
    if (s.peek_word("passivate")) {
        s.eat_word("passivate");
        if (!s.eat_word("in")) return fail("expected 'passivate in ...'");
        auto state = s.eat_ident();
        if (!state) return fail("expected a state name");
        return finish(PassivateStmt{*state, line}, "passivate sentence");
    }
    if (s.peek_word("from")) {
        s.eat_word("from");
        auto from = s.eat_ident();
        if (!from) return fail("expected a state name after 'from'");
        if (!s.eat_word("go") || !s.eat_word("to")) return fail("expected 'go to'");
        auto to = s.eat_ident();
        if (!to) return fail("expected a target state");
        return finish(InternalGotoStmt{*from, *to, line}, "transition sentence");
    }
    if (s.peek_word("when")) {
        s.eat_word("when");
        if (!s.eat_word("in")) return fail("expected 'when in ...'");
        auto state = s.eat_ident();
        if (!state) return fail("expected a state name");
        if (!s.eat_word("and") || !s.eat_word("receive"))
            return fail("expected 'and receive'");
        auto trigger = s.eat_ident();
        if (!trigger) return fail("expected a port or type name");
        if (!s.eat_word("go") || !s.eat_word("to")) return fail("expected 'go to'");
        auto target = s.eat_ident();
        if (!target) return fail("expected a target state");
        return finish(ExternalWhenStmt{*state, *trigger, *target, line}, "receive sentence");
    }
    if (s.peek_word("after")) {
        s.eat_word("after");
        auto state = s.eat_ident();
        if (!state) return fail("expected a state name after 'after'");
        if (!s.eat_word("output")) return fail("expected 'output'");
        auto port = s.eat_ident();
        if (!port) return fail("expected an output port name");
        return finish(AfterOutputStmt{*state, *port, line}, "output sentence");
    }

    // Anything else must be a type declaration: [A|An] Name has f (and g)*
    s.eat_article();
    auto name = s.eat_ident();
    if (!name) return fail("unrecognized sentence");
    if (!s.eat_word("has")) return fail("expected 'has' in type declaration");
    TypeDeclStmt td{*name, {}, line};
    s.eat_article();
    auto field = s.eat_ident();
    if (!field) return fail("expected a field name");
    td.fields.push_back(*field);
    while (s.eat_word("and")) {
        s.eat_article();
        auto next = s.eat_ident();
        if (!next) return fail("expected a field name after 'and'");
        td.fields.push_back(*next);
    }
    return finish(std::move(td), "type declaration");
}

}  // namespace detail_parse

// Splits the token stream into sentences at '!' and parses each one.
// Malformed sentences are reported and skipped.
inline ParseResult parse(std::string_view text, const std::string& source = "<input>") {
    ParseResult r;
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
                auto st = detail_parse::parse_sentence(s, source, r.diagnostics);
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

}  // namespace sesim::lang
