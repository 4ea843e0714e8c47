#include "reebkit/cli/run.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace reebkit;
using namespace reebkit::cli;

namespace {

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("reebkit_test_" + std::to_string(::getpid()) + "_" + name);
}

std::string write_temp(const std::string& name, const std::string& text) {
    const auto p = temp_path(name);
    std::ofstream(p) << text;
    return p.string();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int tool(const std::string& args) {
    const std::string cmd = std::string(REEBKIT_TOOL) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(Config, MinimalFileGetsDefaults) {
    const RunConfig c = load_config(write_temp("min.yaml", "task: verify-form\nmodel: tube\n"));
    EXPECT_EQ(c.task, "verify-form");
    EXPECT_EQ(c.grid.rho, 50);
    EXPECT_EQ(c.grid.theta, 16);
    EXPECT_EQ(c.grid.phi, 16);
    EXPECT_EQ(c.tolerance, 1e-9);
    EXPECT_EQ(c.seed, 0);
}

TEST(Config, UnknownKeysAreNamed) {
    try {
        parse_config("task: verify-form\nmodel: tube\ngridd: {rho: 3}\n");
        FAIL() << "no error";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("gridd"), std::string::npos);
    }
    try {
        parse_config("task: branch-lift\nbranch: {m: 2, kk: 1}\n");
        FAIL() << "no error";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("branch.kk"), std::string::npos);
    }
}

TEST(Config, OverridesAndJsonInput) {
    const RunConfig c = parse_config("task: verify-form\nmodel: t3\ntolerance: 1e-12\ngrid: {rho: 4, rho_max: 0.5}\n");
    EXPECT_EQ(c.tolerance, 1e-12);
    EXPECT_EQ(config_to_json(c)["tolerance"].get<double>(), 1e-12);
    EXPECT_EQ(c.grid.rho, 4);
    EXPECT_EQ(*c.grid.rho_max, 0.5);

    const RunConfig j = load_config(write_temp("cfg.json", R"({"task": "surgery-plan", "surgery": {"p": -2, "q": 1}})"));
    EXPECT_EQ(j.p, -2);
    EXPECT_EQ(j.q, 1);
    const RunConfig lens = parse_config("task: lens-cover\nlens: {p: 5, q: 2, core1: {m: 2}}\n");
    EXPECT_EQ(lens.lens.core1.m, 2);
    EXPECT_EQ(lens.lens.core1.l, 1);
}

TEST(Config, SchemaViolations) {
    EXPECT_THROW(parse_config("model: tube\n"), ConfigError);
    EXPECT_THROW(parse_config("task: fly\n"), ConfigError);
    EXPECT_THROW(parse_config("task: verify-form\n"), ConfigError);
    EXPECT_THROW(parse_config("task: verify-form\nmodel: tube\ntolerance: -1\n"), ConfigError);
    EXPECT_THROW(parse_config("task: verify-form\nmodel: tube\ngrid: {rho: 0}\n"), ConfigError);
    EXPECT_THROW(parse_config("task: surgery-plan\nsurgery: {p: 1.5, q: 1}\n"), ConfigError);
    EXPECT_THROW(parse_config("task: surgery-plan\n"), ConfigError);
    EXPECT_THROW(parse_config("task: branch-lift\nbranch: {m: 0}\n"), ConfigError);
    EXPECT_THROW(parse_config("task: branch-lift\nbranch: {case: 3}\n"), ConfigError);
    EXPECT_THROW(parse_config("task: [unclosed\n"), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/reebkit.yaml"), ConfigError);
    EXPECT_THROW(run(parse_config("task: verify-form\nmodel: alpha_r:q=2\n")), ConfigError);
}

TEST(Config, InlineFormsParseOrFail) {
    const RunConfig ok = parse_config("task: verify-form\nform: {chart: solid_torus, coefficients: ['0', 'rho^2', '1']}\n"
                                      "grid: {rho: 6, theta: 4, phi: 4}\n");
    EXPECT_TRUE(run(ok).passed());
    const RunConfig bad = parse_config("task: verify-form\nform: {coefficients: ['0', 'rho^^2', '1']}\n");
    EXPECT_THROW(run(bad), ParseError);
}

TEST(Report, SurgeryPlanContents) {
    const Report r = run(parse_config("task: surgery-plan\nsurgery: {p: -2, q: 1}\n"));
    EXPECT_TRUE(r.passed());
    EXPECT_EQ(r.results["s"].get<long long>(), 1);
    EXPECT_EQ(r.results["t"].get<long long>(), -1);
    EXPECT_EQ(r.results["euler"].get<long long>(), 2);
    for (const char* key : {"p", "q", "s", "t", "r2", "rho_star", "n", "rbar", "euler"}) EXPECT_TRUE(r.results.contains(key));
}

TEST(Report, VerdictsRederiveAfterRoundTrip) {
    const std::vector<std::string> configs{
        "task: verify-form\nmodel: alpha_r:r=1.414\ngrid: {rho: 10, theta: 6, phi: 6}\n",
        "task: surgery-plan\nsurgery: {p: 7, q: -3}\n",
        "task: branch-lift\nmodel: alpha_r:r=2\nbranch: {m: 3, k: 2, l: 4}\ngrid: {rho: 8, theta: 4, phi: 4}\n",
        "task: branch-lift\nbranch: {case: hyp, m: 2, l: 1}\n",
        "task: flow-orbits\nmodel: t3\nflow: {seeds: 'grid:4x4', field: model}\n",
        "task: lens-cover\nlens: {p: 5, q: 2, core1: {m: 2}, core2: {l: 2}}\n",
    };
    for (const auto& text : configs) {
        const Report r = run(parse_config(text));
        const Report back = report_from_json(Json::parse(to_json(r).dump()));
        ASSERT_EQ(back.checks.size(), r.checks.size());
        EXPECT_TRUE(verdicts_consistent(back)) << text;
        for (std::size_t i = 0; i < r.checks.size(); ++i) {
            EXPECT_EQ(back.checks[i].passed, r.checks[i].passed);
            EXPECT_EQ(back.checks[i].name, r.checks[i].name);
        }
        EXPECT_TRUE(r.passed()) << text << r.first_failure();
        EXPECT_EQ(to_json(back, false).dump(), to_json(r, false).dump());
    }
}

TEST(Report, TamperedVerdictIsDetected) {
    Report r = run(parse_config("task: surgery-plan\nsurgery: {p: 3, q: 1}\n"));
    Json j = to_json(r);
    j["checks"][1]["margin"] = -1.0;
    EXPECT_FALSE(verdicts_consistent(report_from_json(j)));
    j["checks"][1]["margin"] = nullptr;
    EXPECT_FALSE(verdicts_consistent(report_from_json(j)));
    EXPECT_FALSE(Check::make("x", std::numeric_limits<double>::infinity(), Comparison::Greater, 0.0).passed);
}

TEST(Report, RunsAreDeterministic) {
    const RunConfig c = parse_config("task: flow-orbits\nmodel: t3\nflow: {seeds: 'grid:3x3'}\n");
    const std::string a = to_json(run(c), false).dump(2);
    const std::string b = to_json(run(c), false).dump(2);
    EXPECT_EQ(a, b);
}

TEST(Report, FailingChecksFailTheRun) {
    const Report r = run(parse_config("task: verify-form\nform: {coefficients: ['0', '0', '1']}\ngrid: {rho: 4, theta: 4, phi: 4}\n"));
    EXPECT_FALSE(r.passed());
    EXPECT_EQ(r.first_failure(), "contact");
    EXPECT_TRUE(verdicts_consistent(r));
}

TEST(Tool, ExitCodes) {
    const std::string out = temp_path("plan.json").string();
    EXPECT_EQ(tool("surgery plan -p -2 -q 1 --json " + out), 0);
    const Json plan = Json::parse(read_file(out));
    EXPECT_EQ(plan["results"]["s"].get<long long>(), 1);
    EXPECT_EQ(plan["results"]["t"].get<long long>(), -1);
    EXPECT_EQ(plan["results"]["euler"].get<long long>(), 2);
    EXPECT_EQ(tool("surgery-plan -p 5 -q 2"), 0);
    EXPECT_EQ(tool("verify-form --model alpha_r:r=1.414"), 0);
    EXPECT_EQ(tool("verify-form --form '0; rho^; 1'"), 2);
    EXPECT_EQ(tool("verify-form --model nope"), 2);
    EXPECT_EQ(tool("surgery plan -p 4 -q 2"), 1);
    EXPECT_EQ(tool("surgery plan -p 0 -q 1"), 1);
    EXPECT_EQ(tool("lens cover -p 5 -q 2 --core1 2,0,1 --core2 1,0,1"), 1);
    EXPECT_EQ(tool("run --config /nonexistent.yaml"), 2);
    EXPECT_EQ(tool("bogus"), 2);
    EXPECT_EQ(tool("verify-form --form '0; 0; 1' --grid 4x4x4"), 1);
    EXPECT_EQ(tool("run --config " + write_temp("typo.yaml", "task: verify-form\nmodel: tube\ngridd: 1\n")), 2);
    const std::string csv = temp_path("orbit.csv").string();
    EXPECT_EQ(tool("flow orbits --model t3 --seeds grid:4x4 --csv " + csv + " --seed 7 --json " + out), 0);
    EXPECT_EQ(read_file(csv).substr(0, 20), "t,x,y,z,winding_x,wi");
    EXPECT_EQ(Json::parse(read_file(out))["seed"].get<long long>(), 7);
}
