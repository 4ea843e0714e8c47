// reebkit command-line front end.
//
// Exit status: 0 when every check passes, 1 when a check fails or a
// computation raises, 2 for usage, config and expression errors.

#include "reebkit/cli/run.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace {

using reebkit::cli::Json;

struct Common {
    std::string json_path;
    std::string csv_path;
    long long seed = 0;
    double tolerance = 0.0;
    std::string grid;
    double rho_max = 0.0;
};

void add_common(CLI::App* app, Common& c, bool csv) {
    app->add_option("--json", c.json_path, "Write the JSON report here");
    if (csv) app->add_option("--csv", c.csv_path, "Write CSV data here");
    app->add_option("--seed", c.seed, "Recorded in the report; all computations are deterministic");
    app->add_option("--tolerance", c.tolerance, "Override the default tolerance 1e-9");
    app->add_option("--grid", c.grid, "Sample grid NRHOxNTHETAxNPHI (default 50x16x16)");
    app->add_option("--rho-max", c.rho_max, "Largest sampled radius");
}

/// Fold the common flags into a config document.
void apply_common(const Common& c, Json& doc) {
    if (!c.json_path.empty()) doc["output"]["json"] = c.json_path;
    if (!c.csv_path.empty()) doc["output"]["csv"] = c.csv_path;
    if (c.seed != 0) doc["seed"] = c.seed;
    if (c.tolerance != 0.0) doc["tolerance"] = c.tolerance;
    if (!c.grid.empty()) {
        std::array<long long, 3> n{};
        char x1 = 0, x2 = 0;
        std::istringstream in(c.grid);
        if (!(in >> n[0] >> x1 >> n[1] >> x2 >> n[2]) || x1 != 'x' || x2 != 'x' || !in.eof())
            throw reebkit::ConfigError("--grid must look like 50x16x16");
        doc["grid"] = {{"rho", n[0]}, {"theta", n[1]}, {"phi", n[2]}};
    }
    if (c.rho_max != 0.0) doc["grid"]["rho_max"] = c.rho_max;
}

std::array<long long, 3> parse_mkl(const std::string& s) {
    std::array<long long, 3> v{};
    char c1 = 0, c2 = 0;
    std::istringstream in(s);
    if (!(in >> v[0] >> c1 >> v[1] >> c2 >> v[2]) || c1 != ',' || c2 != ',' || !in.eof())
        throw reebkit::ConfigError("branch data must look like m,k,l, got '" + s + "'");
    return v;
}

/// "a; b; c" into three coefficient strings.
Json split_form(const std::string& s) {
    Json out = Json::array();
    std::string part;
    std::istringstream in(s);
    while (std::getline(in, part, ';')) out.push_back(part);
    if (out.size() != 3) throw reebkit::ConfigError("--form needs three expressions separated by ';'");
    return out;
}

void print_summary(const reebkit::cli::Report& r) {
    std::cout << r.task << ": " << (r.passed() ? "PASS" : "FAIL") << '\n';
    for (const auto& c : r.checks)
        std::cout << "  " << (c.passed ? "pass" : "FAIL") << "  " << c.name << "  margin " << c.margin << ' '
                  << to_string(c.comparison) << ' ' << c.tolerance << '\n';
    for (const auto& a : r.artifacts) std::cout << "  wrote " << a << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"reebkit: contact forms, tight surgery, branched covers and Reeb dynamics"};
    app.require_subcommand(1);

    Json doc;
    std::string config_path;

    Common vf_c;
    std::string vf_model, vf_form, vf_chart = "solid_torus";
    auto* vf = app.add_subcommand("verify-form", "Contact and Reeb checks on a grid");
    vf->add_option("--model", vf_model, "Registry model: alpha_r:r=R, alpha_r:r2=R2, tube, t3");
    vf->add_option("--form", vf_form, "Inline form 'a_0; a_1; a_2' in chart coordinates");
    vf->add_option("--chart", vf_chart, "Chart for --form: solid_torus or T3");
    add_common(vf, vf_c, true);

    Common sp_c;
    long long sp_p = 0, sp_q = 0;
    auto* surgery = app.add_subcommand("surgery", "Tight Dehn surgery");
    auto* plan = surgery->add_subcommand("plan", "Plan a tight surgery on the core");
    auto* plan_alias = app.add_subcommand("surgery-plan", "Same as 'surgery plan'");
    for (auto* cmd : {plan, plan_alias}) {
        cmd->add_option("-p", sp_p, "Meridian coefficient")->required();
        cmd->add_option("-q", sp_q, "Longitude coefficient")->required();
        add_common(cmd, sp_c, false);
    }
    surgery->require_subcommand(1);

    Common bl_c;
    std::string bl_model, bl_case = "2", bl_f, bl_bump;
    long long bl_m = 1, bl_k = 0, bl_l = 1;
    double bl_eps = -1.0;
    auto* branch = app.add_subcommand("branch", "Branched covers");
    auto* lift = branch->add_subcommand("lift", "Lift a form through a branch map and verify it");
    lift->add_option("--model", bl_model, "Registry model");
    lift->add_option("--m", bl_m, "Meridional degree");
    lift->add_option("--k", bl_k, "Shear");
    lift->add_option("--l", bl_l, "Longitudinal degree");
    lift->add_option("--case", bl_case, "1, 2 or hyp");
    lift->add_option("--epsilon", bl_eps, "Requested twist for case hyp");
    lift->add_option("--bump", bl_bump, "Bump radii r0,r1");
    lift->add_option("--f", bl_f, "Conformal factor for case 1");
    add_common(lift, bl_c, false);
    branch->require_subcommand(1);

    Common fo_c;
    std::string fo_model, fo_seeds, fo_field;
    auto* flow = app.add_subcommand("flow", "Reeb dynamics");
    auto* orbits = flow->add_subcommand("orbits", "Search for periodic orbits and classify them");
    orbits->add_option("--model", fo_model, "Registry model")->required();
    orbits->add_option("--seeds", fo_seeds, "Seed grid, grid:AxB");
    orbits->add_option("--field", fo_field, "reeb or model");
    add_common(orbits, fo_c, true);
    flow->require_subcommand(1);

    Common lc_c;
    long long lc_p = 1, lc_q = 0;
    std::string lc_core1 = "1,0,1", lc_core2 = "1,0,1";
    auto* lens = app.add_subcommand("lens", "Lens spaces");
    auto* cover = lens->add_subcommand("cover", "Cover of L(p,q) branched over the two cores");
    cover->add_option("-p", lc_p, "Lens p")->required();
    cover->add_option("-q", lc_q, "Lens q")->required();
    cover->add_option("--core1", lc_core1, "Branch data m,k,l over the first core");
    cover->add_option("--core2", lc_core2, "Branch data m,k,l over the second core");
    add_common(cover, lc_c, false);
    lens->require_subcommand(1);

    Common rn_c;
    auto* runcmd = app.add_subcommand("run", "Run a YAML or JSON config file");
    runcmd->add_option("--config", config_path, "Config file")->required();
    runcmd->add_option("--json", rn_c.json_path, "Write the JSON report here (overrides the config)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    std::string task = "config";
    try {
        reebkit::cli::RunConfig cfg;
        if (runcmd->parsed()) {
            cfg = reebkit::cli::load_config(config_path);
            if (!rn_c.json_path.empty()) cfg.json_path = rn_c.json_path;
        } else {
            if (vf->parsed()) {
                doc["task"] = "verify-form";
                if (!vf_model.empty()) doc["model"] = vf_model;
                if (!vf_form.empty()) doc["form"] = {{"chart", vf_chart}, {"coefficients", split_form(vf_form)}};
                apply_common(vf_c, doc);
            } else if (plan->parsed() || plan_alias->parsed()) {
                doc["task"] = "surgery-plan";
                doc["surgery"] = {{"p", sp_p}, {"q", sp_q}};
                apply_common(sp_c, doc);
            } else if (lift->parsed()) {
                doc["task"] = "branch-lift";
                if (!bl_model.empty()) doc["model"] = bl_model;
                doc["branch"] = {{"m", bl_m}, {"k", bl_k}, {"l", bl_l}, {"case", bl_case}};
                if (bl_eps >= 0.0) doc["branch"]["epsilon"] = bl_eps;
                if (!bl_f.empty()) doc["branch"]["f"] = bl_f;
                if (!bl_bump.empty()) {
                    double r0 = 0.0, r1 = 0.0;
                    char comma = 0;
                    std::istringstream in(bl_bump);
                    if (!(in >> r0 >> comma >> r1) || comma != ',') throw reebkit::ConfigError("--bump must look like r0,r1");
                    doc["branch"]["bump"] = {r0, r1};
                }
                apply_common(bl_c, doc);
            } else if (orbits->parsed()) {
                doc["task"] = "flow-orbits";
                doc["model"] = fo_model;
                doc["flow"] = Json::object();
                if (!fo_seeds.empty()) doc["flow"]["seeds"] = fo_seeds;
                if (!fo_field.empty()) doc["flow"]["field"] = fo_field;
                apply_common(fo_c, doc);
            } else if (cover->parsed()) {
                doc["task"] = "lens-cover";
                const auto a = parse_mkl(lc_core1), b = parse_mkl(lc_core2);
                doc["lens"] = {{"p", lc_p},
                               {"q", lc_q},
                               {"core1", {{"m", a[0]}, {"k", a[1]}, {"l", a[2]}}},
                               {"core2", {{"m", b[0]}, {"k", b[1]}, {"l", b[2]}}}};
                apply_common(lc_c, doc);
            }
            cfg = reebkit::cli::config_from_json(doc);
        }
        task = cfg.task;
        const reebkit::cli::Report report = reebkit::cli::run_and_write(cfg);
        print_summary(report);
        if (!report.passed()) {
            std::cerr << "failed check: " << report.first_failure() << '\n';
            return 1;
        }
        return 0;
    } catch (const reebkit::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const reebkit::ParseError& e) {
        std::cerr << "expression error: " << e.what() << '\n';
        return 2;
    } catch (const reebkit::Error& e) {
        std::cerr << "error in " << task << ": " << e.what() << '\n';
        return 1;
    }
}
