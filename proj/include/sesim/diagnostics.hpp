#pragma once

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

namespace sesim {

enum class Severity { warning, error };

inline const char* to_string(Severity s) {
    return s == Severity::error ? "error" : "warning";
}

// One findable problem in a model file or spec. Rendered as
// "file:line: severity CODE message" so editors can jump to it.
struct Diagnostic {
    std::string file;      // may be empty for in-memory specs
    int line = 0;          // 1-based; 0 = whole file
    Severity severity = Severity::error;
    std::string code;      // stable machine-readable tag, e.g. "UNKNOWN_PORT"
    std::string message;

    std::string str() const {
        std::ostringstream os;
        os << (file.empty() ? "<input>" : file) << ':' << line << ": "
           << to_string(severity) << ' ' << code << ' ' << message;
        return os.str();
    }
};

inline bool has_errors(const std::vector<Diagnostic>& ds) {
    return std::any_of(ds.begin(), ds.end(),
                       [](const Diagnostic& d) { return d.severity == Severity::error; });
}

inline std::string format_diagnostics(const std::vector<Diagnostic>& ds) {
    std::string out;
    for (const auto& d : ds) {
        out += d.str();
        out += '\n';
    }
    return out;
}

}  // namespace sesim
