#pragma once

// Loads model files from disk: .devsnl component sources and .devsc
// composition sources, the latter resolving their children relative to the
// referencing file. Detects reference cycles across files.

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sesim/devs/coupled.hpp"
#include "sesim/lang/compile.hpp"
#include "sesim/lang/coupled.hpp"

namespace sesim::lang {

namespace detail_load {

inline std::string read_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw Error("FILE_NOT_FOUND", "cannot open model file '" + file.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

inline devs::Component load_component(const std::filesystem::path& file,
                                      std::set<std::string>& visiting,
                                      std::vector<Diagnostic>* warnings);

inline devs::CoupledSpec load_coupled(const std::filesystem::path& file,
                                      std::set<std::string>& visiting,
                                      std::vector<Diagnostic>* warnings) {
    std::string text = read_file(file);
    auto pr = parse_coupled(text, file.string());
    if (has_errors(pr.diagnostics))
        throw Error("INVALID_MODEL", "model '" + file.string() + "' has syntax errors",
                    std::move(pr.diagnostics));
    if (warnings)
        warnings->insert(warnings->end(), pr.diagnostics.begin(), pr.diagnostics.end());
    auto checked = check_coupled(pr.ast);
    if (warnings && !has_errors(checked))
        warnings->insert(warnings->end(), checked.begin(), checked.end());

    std::filesystem::path dir = file.parent_path();
    ComponentResolver resolve = [&](const std::string& ref) {
        std::filesystem::path target(ref);
        if (target.is_relative()) target = dir / target;
        return load_component(target, visiting, warnings);
    };
    return compile_coupled(pr.ast, resolve);
}

inline devs::AtomicSpec load_atomic(const std::filesystem::path& file,
                                    std::vector<Diagnostic>* warnings) {
    std::string text = read_file(file);
    auto pr = parse(text, file.string());
    if (has_errors(pr.diagnostics))
        throw Error("INVALID_MODEL", "model '" + file.string() + "' has syntax errors",
                    std::move(pr.diagnostics));
    if (warnings)
        warnings->insert(warnings->end(), pr.diagnostics.begin(), pr.diagnostics.end());
    auto checked = check(pr.ast);
    if (warnings && !has_errors(checked))
        warnings->insert(warnings->end(), checked.begin(), checked.end());
    return compile(pr.ast);
}

inline devs::Component load_component(const std::filesystem::path& file,
                                      std::set<std::string>& visiting,
                                      std::vector<Diagnostic>* warnings) {
    std::error_code ec;
    std::filesystem::path canon = std::filesystem::weakly_canonical(file, ec);
    std::string key = (ec ? file : canon).string();
    if (visiting.count(key))
        throw Error("INCLUDE_CYCLE", "model file '" + file.string() + "' refers to itself");
    visiting.insert(key);
    struct Eraser {
        std::set<std::string>& set;
        std::string key;
        ~Eraser() { set.erase(key); }
    } eraser{visiting, key};

    std::string ext = file.extension().string();
    if (ext == ".devsnl") return devs::Component(load_atomic(file, warnings));
    if (ext == ".devsc") return devs::Component(load_coupled(file, visiting, warnings));
    throw Error("UNKNOWN_FORMAT",
                "model file '" + file.string() + "' has unrecognized extension '" + ext + "'");
}

}  // namespace detail_load

// Loads one model file by extension: .devsnl for a component, .devsc for a
// composition. Warnings collect into *warnings when given; errors throw
// (FILE_NOT_FOUND, UNKNOWN_FORMAT, INCLUDE_CYCLE, INVALID_MODEL, ...).
inline devs::Component load_model_file(const std::filesystem::path& file,
                                       std::vector<Diagnostic>* warnings = nullptr) {
    std::set<std::string> visiting;
    return detail_load::load_component(file, visiting, warnings);
}

}  // namespace sesim::lang
