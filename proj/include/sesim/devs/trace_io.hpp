#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sesim/detail/strings.hpp"
#include "sesim/devs/coupled.hpp"
#include "sesim/devs/types.hpp"
#include "sesim/error.hpp"

// Reading event traces back from their CSV form (the inverse of
// to_csv in types.hpp).
//
// The CSV encoding is lossy in exactly one way: JSON payload numbers carry
// no integer/real distinction ("5" could be either), so reconstructing
// typed values needs the message type definitions. Callers pass the
// TypeRegistry of the model that produced the trace; collect_types() below
// gathers one from a component hierarchy. Every malformed input raises
// BAD_TRACE with the offending line number.

namespace sesim::devs {

namespace detail_trace {

[[noreturn]] inline void fail(std::size_t line, const std::string& what) {
    throw Error("BAD_TRACE", "line " + std::to_string(line) + ": " + what);
}

// Raw JSON shape before typing: a string, a number token, or an object.
// That is all the canonical encoder ever emits.
struct JsonValue {
    enum class Kind { object, string, number };
    Kind kind = Kind::object;
    std::string scalar;                                      // string / number token
    std::vector<std::pair<std::string, JsonValue>> members;  // object entries in order

    const JsonValue* find(const std::string& key) const {
        for (const auto& [k, v] : members)
            if (k == key) return &v;
        return nullptr;
    }
};

class JsonParser {
public:
    JsonParser(const std::string& text, std::size_t line) : s_(text), line_(line) {}

    JsonValue parse() {
        JsonValue v = value();
        skip_ws();
        if (i_ != s_.size()) fail(line_, "trailing characters after JSON payload");
        return v;
    }

private:
    void skip_ws() {
        while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t')) ++i_;
    }
    char peek() {
        if (i_ >= s_.size()) fail(line_, "unterminated JSON payload");
        return s_[i_];
    }

    JsonValue value() {
        skip_ws();
        char c = peek();
        if (c == '{') return object();
        if (c == '"') {
            JsonValue v;
            v.kind = JsonValue::Kind::string;
            v.scalar = string();
            return v;
        }
        return number();
    }

    JsonValue object() {
        JsonValue v;
        ++i_;  // '{'
        skip_ws();
        if (peek() == '}') {
            ++i_;
            return v;
        }
        for (;;) {
            skip_ws();
            if (peek() != '"') fail(line_, "expected a quoted key in JSON object");
            std::string key = string();
            skip_ws();
            if (peek() != ':') fail(line_, "expected ':' after JSON key");
            ++i_;
            v.members.emplace_back(std::move(key), value());
            skip_ws();
            char c = peek();
            if (c == ',') {
                ++i_;
                continue;
            }
            if (c == '}') {
                ++i_;
                return v;
            }
            fail(line_, "expected ',' or '}' in JSON object");
        }
    }

    std::string string() {
        ++i_;  // opening quote
        std::string out;
        for (;;) {
            if (i_ >= s_.size()) fail(line_, "unterminated JSON string");
            char c = s_[i_++];
            if (c == '"') return out;
            if (c != '\\') {
                out += c;
                continue;
            }
            if (i_ >= s_.size()) fail(line_, "unterminated JSON escape");
            char e = s_[i_++];
            switch (e) {
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                case '/': out += '/'; break;
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case 'r': out += '\r'; break;
                case 'b': out += '\b'; break;
                case 'f': out += '\f'; break;
                case 'u': {
                    if (i_ + 4 > s_.size()) fail(line_, "truncated \\u escape");
                    unsigned code = 0;
                    for (int k = 0; k < 4; ++k) {
                        char h = s_[i_++];
                        code <<= 4;
                        if (h >= '0' && h <= '9')
                            code |= static_cast<unsigned>(h - '0');
                        else if (h >= 'a' && h <= 'f')
                            code |= static_cast<unsigned>(h - 'a' + 10);
                        else if (h >= 'A' && h <= 'F')
                            code |= static_cast<unsigned>(h - 'A' + 10);
                        else
                            fail(line_, "bad hex digit in \\u escape");
                    }
                    // The encoder only produces \u00xx (control characters).
                    if (code > 0xFF) fail(line_, "\\u escape outside the encoded range");
                    out += static_cast<char>(code);
                    break;
                }
                default: fail(line_, "unsupported JSON escape");
            }
        }
    }

    JsonValue number() {
        std::size_t start = i_;
        while (i_ < s_.size()) {
            char c = s_[i_];
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-' ||
                c == '.' || c == 'e' || c == 'E') {
                ++i_;
            } else {
                break;
            }
        }
        if (i_ == start) fail(line_, "unexpected character in JSON payload");
        JsonValue v;
        v.kind = JsonValue::Kind::number;
        v.scalar = s_.substr(start, i_ - start);
        return v;
    }

    const std::string& s_;
    std::size_t i_ = 0;
    std::size_t line_;
};

inline MessageValue value_from_json(const JsonValue& j, const std::string& type_name,
                                    const TypeRegistry& reg, std::size_t line);

inline FieldValue field_from_json(const JsonValue& j, const FieldType& ft,
                                  const TypeRegistry& reg, std::size_t line,
                                  const std::string& where) {
    if (!ft.is_primitive()) return FieldValue(value_from_json(j, ft.type_name(), reg, line));
    switch (ft.primitive()) {
        case Primitive::text:
            if (j.kind != JsonValue::Kind::string)
                fail(line, "field '" + where + "' must be a JSON string");
            return FieldValue(j.scalar);
        case Primitive::integer: {
            if (j.kind != JsonValue::Kind::number)
                fail(line, "field '" + where + "' must be a JSON number");
            std::int64_t v = 0;
            auto [p, ec] = std::from_chars(j.scalar.data(), j.scalar.data() + j.scalar.size(), v);
            if (ec != std::errc{} || p != j.scalar.data() + j.scalar.size())
                fail(line, "field '" + where + "' must be an integer, got '" + j.scalar + "'");
            return FieldValue(v);
        }
        case Primitive::real:
        default: {
            if (j.kind != JsonValue::Kind::number)
                fail(line, "field '" + where + "' must be a JSON number");
            auto num = detail::parse_number(j.scalar);
            if (!num || !std::isfinite(*num))
                fail(line, "field '" + where + "' holds a bad number '" + j.scalar + "'");
            return FieldValue(*num);
        }
    }
}

inline MessageValue value_from_json(const JsonValue& j, const std::string& type_name,
                                    const TypeRegistry& reg, std::size_t line) {
    if (j.kind != JsonValue::Kind::object)
        fail(line, "payload for type '" + type_name + "' is not a JSON object");
    MessageValue m;
    m.type = type_name;
    auto it = reg.find(type_name);
    if (it == reg.end()) {
        if (!primitive_from_name(type_name)) fail(line, "unknown message type '" + type_name + "'");
        if (!j.members.empty())
            fail(line, "payload for primitive type '" + type_name + "' must be {}");
        return m;
    }
    for (const auto& [key, jv] : j.members) {
        const DataType::Field* f = it->second.find(key);
        if (!f) fail(line, "type '" + type_name + "' has no field '" + key + "'");
        m.set(key, field_from_json(jv, f->type, reg, line, type_name + "." + key));
    }
    // Catches missing and duplicated fields in one go.
    if (!value_matches_type(m, type_name, reg))
        fail(line, "payload does not match type '" + type_name + "'");
    return m;
}

// First `n` comma-separated fields plus the remainder as field n+1. None of
// the leading trace columns may contain commas, so only the payload needs
// real CSV quoting.
inline std::vector<std::string> head_fields(const std::string& line, std::size_t n,
                                            std::size_t lineno) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t comma = line.find(',', pos);
        if (comma == std::string::npos)
            fail(lineno, "expected " + std::to_string(n + 1) + " CSV fields");
        out.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
    out.push_back(line.substr(pos));
    return out;
}

inline std::string unquote_csv(const std::string& f, std::size_t lineno) {
    if (f.empty() || f.front() != '"') return f;  // writers always quote, but tolerate bare
    std::string out;
    std::size_t i = 1;
    for (;;) {
        if (i >= f.size()) fail(lineno, "unterminated quoted CSV field");
        char c = f[i++];
        if (c != '"') {
            out += c;
            continue;
        }
        if (i < f.size() && f[i] == '"') {  // doubled quote
            out += '"';
            ++i;
            continue;
        }
        if (i != f.size()) fail(lineno, "characters after the closing CSV quote");
        return out;
    }
}

}  // namespace detail_trace

inline constexpr const char* kTraceCsvHeader = "time,path,port,direction,type,payload_json";

// Parses a trace CSV produced by to_csv(EventTrace). `types` supplies the
// message type definitions used to rebuild typed payloads.
inline EventTrace read_trace_csv(const std::string& text, const TypeRegistry& types) {
    using detail_trace::fail;
    EventTrace trace;
    bool saw_header = false;
    auto lines = detail::split(text, '\n');
    for (std::size_t li = 0; li < lines.size(); ++li) {
        const std::size_t lineno = li + 1;
        std::string line = lines[li];
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::trim(line).empty()) continue;
        if (!saw_header) {
            if (detail::trim(line) != kTraceCsvHeader)
                fail(lineno, std::string("first line must be the header '") + kTraceCsvHeader + "'");
            saw_header = true;
            continue;
        }

        auto f = detail_trace::head_fields(line, 5, lineno);
        Event e;
        auto t = detail::parse_number(f[0]);
        if (!t || !std::isfinite(*t) || *t < 0) fail(lineno, "bad event time '" + f[0] + "'");
        e.time = SimTime::of(*t);
        if (!trace.events.empty() && *t < trace.events.back().time.value())
            fail(lineno, "event times must be nondecreasing");
        if (!f[1].empty()) e.path = detail::split(f[1], '.');
        e.port = f[2];
        auto kind = event_kind_from_string(f[3]);
        if (!kind) fail(lineno, "unknown direction '" + f[3] + "'");
        e.kind = *kind;

        const std::string payload = detail_trace::unquote_csv(f[5], lineno);
        detail_trace::JsonValue j = detail_trace::JsonParser(payload, lineno).parse();
        if (e.kind == EventKind::internal) {
            if (!f[4].empty()) fail(lineno, "internal rows carry no message type");
            const auto* from = j.find("from");
            const auto* to = j.find("to");
            if (j.kind != detail_trace::JsonValue::Kind::object || j.members.size() != 2 ||
                !from || !to || from->kind != detail_trace::JsonValue::Kind::string ||
                to->kind != detail_trace::JsonValue::Kind::string)
                fail(lineno, "internal payload must be {\"from\":\"..\",\"to\":\"..\"}");
            e.from_state = from->scalar;
            e.to_state = to->scalar;
        } else if (f[4].empty()) {
            if (j.kind != detail_trace::JsonValue::Kind::object || !j.members.empty())
                fail(lineno, "a row without a type must carry the payload {}");
        } else {
            e.value = detail_trace::value_from_json(j, f[4], types, lineno);
        }
        trace.append(std::move(e));
    }
    if (!saw_header) fail(1, "empty trace: the header line is missing");
    return trace;
}

// Every type definition reachable from a component hierarchy, merged into
// one registry. On a name collision the first definition (depth-first
// declaration order) wins; components that exchange messages were already
// required to agree structurally when the couplings were validated.
inline void collect_types(const Component& c, TypeRegistry& out) {
    if (c.is_atomic()) {
        for (const auto& [name, dt] : c.atomic().data_types) out.emplace(name, dt);
        return;
    }
    for (const auto& [name, dt] : c.coupled().data_types) out.emplace(name, dt);
    for (const auto& [child_name, child] : c.coupled().children) collect_types(child, out);
}

inline TypeRegistry collect_types(const Component& c) {
    TypeRegistry reg;
    collect_types(c, reg);
    return reg;
}

}  // namespace sesim::devs
