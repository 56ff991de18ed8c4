#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sesim/diagnostics.hpp"

namespace sesim {

// Hard failure with a stable code ("NUMERIC_ERROR", "LIVELOCK", ...).
// Validation-style APIs return Diagnostic lists instead; Error is for
// conditions that abort an operation outright.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message,
          std::vector<Diagnostic> diagnostics = {})
        : std::runtime_error(code + ": " + message),
          code_(std::move(code)),
          diagnostics_(std::move(diagnostics)) {}

    const std::string& code() const { return code_; }
    const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

private:
    std::string code_;
    std::vector<Diagnostic> diagnostics_;
};

}  // namespace sesim
