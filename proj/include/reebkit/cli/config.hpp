#ifndef REEBKIT_CLI_CONFIG_HPP
#define REEBKIT_CLI_CONFIG_HPP

// Run configuration: YAML or JSON files, validated against a fixed schema.
//
//   task: verify-form | surgery-plan | branch-lift | flow-orbits | lens-cover
//   model: alpha_r:r=1.414          # or an inline form:
//   form: {chart: solid_torus | T3, coefficients: [a_0, a_1, a_2]}
//   grid: {rho: 50, theta: 16, phi: 16, rho_max: 1.5}
//   tolerance: 1e-9
//   seed: 0
//   output: {json: report.json, csv: data.csv}
//   surgery: {p: -2, q: 1}
//   branch: {m: 2, k: 0, l: 1, case: "2" | "1" | hyp, epsilon: 0.1, bump: [r0, r1], f: "1 + rho*sin(theta)"}
//   flow: {seeds: "grid:8x8", field: reeb | model}
//   lens: {p: 5, q: 2, core1: {m, k, l}, core2: {m, k, l}}
//
// Unknown keys are errors at every level.

#include "reebkit/branched_cover.hpp"
#include "reebkit/errors.hpp"

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

namespace reebkit::cli {

using Json = nlohmann::ordered_json;

struct GridConfig {
    int rho = 50;
    int theta = 16;
    int phi = 16;
    std::optional<double> rho_max;
};

struct FormConfig {
    std::string chart = "solid_torus";
    std::array<std::string, 3> coefficients;
};

struct BranchConfig {
    BranchData data;
    std::string kind = "2";
    double epsilon = 0.1;
    std::optional<std::array<double, 2>> bump;
    std::string f = "1 + rho*sin(theta)";
};

struct FlowConfig {
    std::string seeds = "grid:8x8";
    std::string field = "reeb";
};

struct LensConfig {
    long long p = 1;
    long long q = 0;
    BranchData core1;
    BranchData core2;
};

struct RunConfig {
    std::string task;
    std::optional<std::string> model;
    std::optional<FormConfig> form;
    GridConfig grid;
    double tolerance = 1e-9;
    long long seed = 0;
    std::optional<std::string> json_path;
    std::optional<std::string> csv_path;

    long long p = 0;
    long long q = 0;
    BranchConfig branch;
    FlowConfig flow;
    LensConfig lens;
};

inline const std::set<std::string>& task_names() {
    static const std::set<std::string> names{"verify-form", "surgery-plan", "branch-lift", "flow-orbits", "lens-cover"};
    return names;
}

namespace detail {

inline Json yaml_to_json(const YAML::Node& n) {
    switch (n.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined: return nullptr;
    case YAML::NodeType::Sequence: {
        Json a = Json::array();
        for (const auto& e : n) a.push_back(yaml_to_json(e));
        return a;
    }
    case YAML::NodeType::Map: {
        Json o = Json::object();
        for (const auto& kv : n) {
            const std::string key = kv.first.as<std::string>();
            if (o.contains(key)) throw ConfigError("duplicate key '" + key + "'");
            o[key] = yaml_to_json(kv.second);
        }
        return o;
    }
    case YAML::NodeType::Scalar: {
        const std::string s = n.Scalar();
        if (n.Tag() == "!") return s;  // quoted
        long long i = 0;
        if (YAML::convert<long long>::decode(n, i)) return i;
        double d = 0.0;
        if (YAML::convert<double>::decode(n, d)) return d;
        bool b = false;
        if (YAML::convert<bool>::decode(n, b)) return b;
        return s;
    }
    }
    return nullptr;
}

class Reader {
public:
    Reader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError(where_ + " must be a table");
    }

    /// Fail on any key outside `allowed`.
    void only(const std::set<std::string>& allowed) const {
        for (const auto& [k, v] : j_.items())
            if (!allowed.count(k)) throw ConfigError("unknown key '" + path(k) + "'");
    }

    bool has(const std::string& k) const { return j_.contains(k) && !j_.at(k).is_null(); }

    std::string string(const std::string& k) const {
        const Json& v = j_.at(k);
        if (v.is_string()) return v.get<std::string>();
        if (v.is_number_integer()) return std::to_string(v.get<long long>());
        throw ConfigError(path(k) + " must be a string");
    }

    long long integer(const std::string& k) const {
        const Json& v = j_.at(k);
        if (!v.is_number_integer()) throw ConfigError(path(k) + " must be an integer");
        return v.get<long long>();
    }

    double number(const std::string& k) const {
        const Json& v = j_.at(k);
        if (!v.is_number()) throw ConfigError(path(k) + " must be a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ConfigError(path(k) + " must be finite");
        return d;
    }

    Reader table(const std::string& k) const { return Reader(j_.at(k), path(k)); }
    const Json& raw(const std::string& k) const { return j_.at(k); }
    std::string path(const std::string& k) const { return where_.empty() ? k : where_ + "." + k; }

private:
    const Json& j_;
    std::string where_;
};

inline BranchData read_branch_data(const Reader& r, BranchData d) {
    r.only({"m", "k", "l"});
    if (r.has("m")) d.m = r.integer("m");
    if (r.has("k")) d.k = r.integer("k");
    if (r.has("l")) d.l = r.integer("l");
    try {
        d.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    return d;
}

inline Json branch_json(const BranchData& d) { return Json{{"m", d.m}, {"k", d.k}, {"l", d.l}}; }

} // namespace detail

/// Validate a parsed document and apply defaults.
inline RunConfig config_from_json(const Json& doc) {
    using detail::Reader;
    const Reader top(doc, "");
    top.only({"task", "model", "form", "grid", "tolerance", "seed", "output", "surgery", "branch", "flow", "lens"});
    RunConfig c;
    if (!top.has("task")) throw ConfigError("missing key 'task'");
    c.task = top.string("task");
    if (!task_names().count(c.task)) throw ConfigError("unknown task '" + c.task + "'");
    if (top.has("model")) c.model = top.string("model");
    if (top.has("form")) {
        if (c.model) throw ConfigError("give either 'model' or 'form', not both");
        const Reader f = top.table("form");
        f.only({"chart", "coefficients"});
        FormConfig fc;
        if (f.has("chart")) fc.chart = f.string("chart");
        if (fc.chart != "solid_torus" && fc.chart != "T3") throw ConfigError("form.chart must be solid_torus or T3");
        const Json& co = f.raw("coefficients");
        if (!co.is_array() || co.size() != 3) throw ConfigError("form.coefficients must list three expressions");
        for (std::size_t i = 0; i < 3; ++i) {
            if (!co[i].is_string() && !co[i].is_number()) throw ConfigError("form.coefficients entries must be expressions");
            fc.coefficients[i] = co[i].is_string() ? co[i].get<std::string>() : co[i].dump();
        }
        c.form = fc;
    }
    if (top.has("grid")) {
        const Reader g = top.table("grid");
        g.only({"rho", "theta", "phi", "rho_max"});
        for (auto [key, slot] : {std::pair{"rho", &c.grid.rho}, {"theta", &c.grid.theta}, {"phi", &c.grid.phi}})
            if (g.has(key)) {
                const long long n = g.integer(key);
                if (n < 1 || n > 100000) throw ConfigError(g.path(key) + " must be in [1, 100000]");
                *slot = static_cast<int>(n);
            }
        if (g.has("rho_max")) {
            c.grid.rho_max = g.number("rho_max");
            if (!(*c.grid.rho_max > 0.0)) throw ConfigError("grid.rho_max must be positive");
        }
    }
    if (top.has("tolerance")) {
        c.tolerance = top.number("tolerance");
        if (!(c.tolerance > 0.0)) throw ConfigError("tolerance must be positive");
    }
    if (top.has("seed")) c.seed = top.integer("seed");
    if (top.has("output")) {
        const Reader o = top.table("output");
        o.only({"json", "csv"});
        if (o.has("json")) c.json_path = o.string("json");
        if (o.has("csv")) c.csv_path = o.string("csv");
    }
    if (top.has("surgery")) {
        const Reader s = top.table("surgery");
        s.only({"p", "q"});
        if (!s.has("p") || !s.has("q")) throw ConfigError("surgery needs p and q");
        c.p = s.integer("p");
        c.q = s.integer("q");
    } else if (c.task == "surgery-plan") {
        throw ConfigError("task surgery-plan needs a 'surgery' table");
    }
    if (top.has("branch")) {
        const Reader b = top.table("branch");
        b.only({"m", "k", "l", "case", "epsilon", "bump", "f"});
        Json mkl = Json::object();
        for (const char* key : {"m", "k", "l"})
            if (b.has(key)) mkl[key] = b.raw(key);
        c.branch.data = detail::read_branch_data(Reader(mkl, "branch"), c.branch.data);
        if (b.has("case")) c.branch.kind = b.string("case");
        if (c.branch.kind != "1" && c.branch.kind != "2" && c.branch.kind != "hyp")
            throw ConfigError("branch.case must be 1, 2 or hyp");
        if (b.has("epsilon")) {
            c.branch.epsilon = b.number("epsilon");
            if (!(c.branch.epsilon >= 0.0)) throw ConfigError("branch.epsilon must be non-negative");
        }
        if (b.has("bump")) {
            const Json& v = b.raw("bump");
            if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
                throw ConfigError("branch.bump must be [r0, r1]");
            const double r0 = v[0].get<double>(), r1 = v[1].get<double>();
            if (!(r0 > 0.0 && r1 > r0)) throw ConfigError("branch.bump needs 0 < r0 < r1");
            c.branch.bump = std::array<double, 2>{r0, r1};
        }
        if (b.has("f")) c.branch.f = b.string("f");
    }
    if (top.has("flow")) {
        const Reader f = top.table("flow");
        f.only({"seeds", "field"});
        if (f.has("seeds")) c.flow.seeds = f.string("seeds");
        if (f.has("field")) c.flow.field = f.string("field");
        if (c.flow.field != "reeb" && c.flow.field != "model") throw ConfigError("flow.field must be reeb or model");
    }
    if (top.has("lens")) {
        const Reader l = top.table("lens");
        l.only({"p", "q", "core1", "core2"});
        if (!l.has("p") || !l.has("q")) throw ConfigError("lens needs p and q");
        c.lens.p = l.integer("p");
        c.lens.q = l.integer("q");
        if (l.has("core1")) c.lens.core1 = detail::read_branch_data(l.table("core1"), {});
        if (l.has("core2")) c.lens.core2 = detail::read_branch_data(l.table("core2"), {});
    } else if (c.task == "lens-cover") {
        throw ConfigError("task lens-cover needs a 'lens' table");
    }
    const bool needs_form = c.task == "verify-form" || c.task == "flow-orbits";
    if (needs_form && !c.model && !c.form) throw ConfigError("task " + c.task + " needs 'model' or 'form'");
    if (c.task == "branch-lift" && c.form) throw ConfigError("branch-lift takes a registry model, not an inline form");
    return c;
}

/// The config with every default filled in, for the report echo.
inline Json config_to_json(const RunConfig& c) {
    Json j;
    j["task"] = c.task;
    if (c.model) j["model"] = *c.model;
    if (c.form) j["form"] = {{"chart", c.form->chart}, {"coefficients", c.form->coefficients}};
    Json grid{{"rho", c.grid.rho}, {"theta", c.grid.theta}, {"phi", c.grid.phi}};
    if (c.grid.rho_max) grid["rho_max"] = *c.grid.rho_max;
    j["grid"] = grid;
    j["tolerance"] = c.tolerance;
    j["seed"] = c.seed;
    if (c.json_path || c.csv_path) {
        Json out = Json::object();
        if (c.json_path) out["json"] = *c.json_path;
        if (c.csv_path) out["csv"] = *c.csv_path;
        j["output"] = out;
    }
    if (c.task == "surgery-plan") j["surgery"] = {{"p", c.p}, {"q", c.q}};
    if (c.task == "branch-lift") {
        Json b = detail::branch_json(c.branch.data);
        b["case"] = c.branch.kind;
        b["epsilon"] = c.branch.epsilon;
        if (c.branch.bump) b["bump"] = *c.branch.bump;
        b["f"] = c.branch.f;
        j["branch"] = b;
    }
    if (c.task == "flow-orbits") j["flow"] = {{"seeds", c.flow.seeds}, {"field", c.flow.field}};
    if (c.task == "lens-cover")
        j["lens"] = {{"p", c.lens.p},
                     {"q", c.lens.q},
                     {"core1", detail::branch_json(c.lens.core1)},
                     {"core2", detail::branch_json(c.lens.core2)}};
    return j;
}

/// Parse YAML (or JSON, which the YAML reader also accepts) text.
inline RunConfig parse_config(const std::string& text, bool json = false) {
    Json doc;
    try {
        if (json) {
            doc = Json::parse(text);
        } else {
            const YAML::Node n = YAML::Load(text);
            if (!n.IsMap()) throw ConfigError("config must be a table of keys");
            doc = detail::yaml_to_json(n);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("JSON syntax: ") + e.what());
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("YAML syntax: ") + e.what());
    }
    return config_from_json(doc);
}

/// Load a config file; a ".json" suffix selects the JSON reader.
inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    const bool json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
    return parse_config(ss.str(), json);
}

} // namespace reebkit::cli

#endif
