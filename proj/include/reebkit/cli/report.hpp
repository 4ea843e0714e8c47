#ifndef REEBKIT_CLI_REPORT_HPP
#define REEBKIT_CLI_REPORT_HPP

// Verification reports. Each check stores a margin, a tolerance and the
// comparison between them; the verdict is recomputed from those three.

#include "reebkit/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace reebkit::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "reebkit 0.1.0";

enum class Comparison { Greater, GreaterEqual, Less, LessEqual };

inline const char* to_string(Comparison c) {
    switch (c) {
    case Comparison::Greater: return "gt";
    case Comparison::GreaterEqual: return "ge";
    case Comparison::Less: return "lt";
    case Comparison::LessEqual: return "le";
    }
    return "?";
}

inline Comparison comparison_from_string(const std::string& s) {
    if (s == "gt") return Comparison::Greater;
    if (s == "ge") return Comparison::GreaterEqual;
    if (s == "lt") return Comparison::Less;
    if (s == "le") return Comparison::LessEqual;
    throw ConfigError("unknown comparison '" + s + "'");
}

/// Non-finite margins fail.
inline bool verdict_of(double margin, double tolerance, Comparison c) {
    if (!std::isfinite(margin) || !std::isfinite(tolerance)) return false;
    switch (c) {
    case Comparison::Greater: return margin > tolerance;
    case Comparison::GreaterEqual: return margin >= tolerance;
    case Comparison::Less: return margin < tolerance;
    case Comparison::LessEqual: return margin <= tolerance;
    }
    return false;
}

struct Check {
    std::string name;
    double margin = 0.0;
    double tolerance = 0.0;
    Comparison comparison = Comparison::LessEqual;
    bool passed = false;

    static Check make(std::string name, double margin, Comparison c, double tolerance) {
        return {std::move(name), margin, tolerance, c, verdict_of(margin, tolerance, c)};
    }
};

struct Report {
    std::string task;
    Json config;
    std::string version = kToolVersion;
    long long seed = 0;
    std::vector<Check> checks;
    Json results = Json::object();
    std::vector<std::string> artifacts;
    double wall_time = 0.0;

    bool passed() const {
        for (const auto& c : checks)
            if (!c.passed) return false;
        return !checks.empty();
    }

    Check& add(std::string name, double margin, Comparison c, double tolerance) {
        checks.push_back(Check::make(std::move(name), margin, c, tolerance));
        return checks.back();
    }

    /// Name of the first failing check, or empty.
    std::string first_failure() const {
        for (const auto& c : checks)
            if (!c.passed) return c.name;
        return {};
    }
};

/// Finite numbers as themselves, anything else as null.
inline Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json to_json(const Report& r, bool with_wall_time = true) {
    Json j;
    j["tool"] = r.version;
    j["task"] = r.task;
    j["config"] = r.config;
    j["seed"] = r.seed;
    j["passed"] = r.passed();
    Json checks = Json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"name", c.name},
                          {"verdict", c.passed ? "pass" : "fail"},
                          {"margin", number(c.margin)},
                          {"tolerance", number(c.tolerance)},
                          {"comparison", to_string(c.comparison)}});
    j["checks"] = checks;
    j["results"] = r.results;
    j["artifacts"] = r.artifacts;
    if (with_wall_time) j["wall_time_s"] = r.wall_time;
    return j;
}

inline Report report_from_json(const Json& j) {
    try {
        Report r;
        r.version = j.at("tool").get<std::string>();
        r.task = j.at("task").get<std::string>();
        r.config = j.at("config");
        r.seed = j.at("seed").get<long long>();
        for (const auto& c : j.at("checks")) {
            Check k;
            k.name = c.at("name").get<std::string>();
            k.margin = c.at("margin").is_null() ? std::numeric_limits<double>::quiet_NaN() : c.at("margin").get<double>();
            k.tolerance = c.at("tolerance").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                      : c.at("tolerance").get<double>();
            k.comparison = comparison_from_string(c.at("comparison").get<std::string>());
            k.passed = c.at("verdict").get<std::string>() == "pass";
            r.checks.push_back(std::move(k));
        }
        r.results = j.at("results");
        r.artifacts = j.at("artifacts").get<std::vector<std::string>>();
        if (j.contains("wall_time_s")) r.wall_time = j.at("wall_time_s").get<double>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed report: ") + e.what());
    }
}

/// True iff every recorded verdict follows from its margin, tolerance and comparison.
inline bool verdicts_consistent(const Report& r) {
    for (const auto& c : r.checks)
        if (verdict_of(c.margin, c.tolerance, c.comparison) != c.passed) return false;
    return true;
}

} // namespace reebkit::cli

#endif
