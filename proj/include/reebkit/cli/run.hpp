#ifndef REEBKIT_CLI_RUN_HPP
#define REEBKIT_CLI_RUN_HPP

// Task dispatch: one RunConfig in, one Report out.

#include "reebkit/branched_cover.hpp"
#include "reebkit/cli/config.hpp"
#include "reebkit/cli/report.hpp"
#include "reebkit/dynamics.hpp"
#include "reebkit/models.hpp"
#include "reebkit/parallel.hpp"
#include "reebkit/parse.hpp"
#include "reebkit/surgery.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <limits>
#include <regex>
#include <string>
#include <vector>

namespace reebkit::cli {

struct ResolvedForm {
    std::string name;
    OneForm form;
    std::optional<VectorField> model_field;
};

/// Registry model or inline form. Unknown models are config errors;
/// malformed expressions raise ParseError.
inline ResolvedForm resolve_form(const RunConfig& c, const std::string& fallback = "") {
    if (c.form) {
        const Chart chart = c.form->chart == "T3" ? Chart::three_torus() : Chart::solid_torus();
        std::array<ScalarField, 3> coeffs;
        for (std::size_t i = 0; i < 3; ++i) coeffs[i] = parse_expression(c.form->coefficients[i], chart.coords());
        return {"inline", OneForm(chart, coeffs), std::nullopt};
    }
    const std::string name = c.model.value_or(fallback);
    try {
        NamedModel m = model_by_name(name);
        return {m.name, std::move(m.form), std::move(m.model_field)};
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
}

/// Sample grid for a chart: midpoints, radius over (0, rho_max), periodic
/// coordinates over one period, other coordinates over [-1, 1].
inline Grid grid_for(const Chart& chart, const GridConfig& g) {
    const std::array<int, 3> counts{g.rho, g.theta, g.phi};
    Grid grid;
    for (int i = 0; i < 3; ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (chart.radial() && chart.radial()->radius == i) {
            const auto& mx = chart.radial()->max;
            const double hi = g.rho_max.value_or(mx ? *mx - 0.05 : 2.0);
            grid.axes[k] = {0.0, hi, counts[k]};
        } else if (const auto& p = chart.period(i)) {
            grid.axes[k] = {0.0, *p, counts[k]};
        } else {
            grid.axes[k] = {-1.0, 1.0, counts[k]};
        }
    }
    return grid;
}

namespace detail {

inline Json vec_json(const Vec3& v) { return Json::array({number(v[0]), number(v[1]), number(v[2])}); }

inline void require_no_csv(const RunConfig& c) {
    if (c.csv_path) throw ConfigError("CSV output is not available for task " + c.task);
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IntegrationError("cannot write '" + path + "'");
    return out;
}

// ---------------------------------------------------------------------------

inline void run_verify_form(const RunConfig& c, Report& r) {
    const ResolvedForm rf = resolve_form(c);
    const Grid grid = grid_for(rf.form.chart(), c.grid);
    const ContactReport cr = contact_check(rf.form, grid);

    struct Partial {
        double normalization = 0.0, kernel = 0.0, model = 0.0;
    };
    const auto parts = parallel_chunks(grid.size(), [&](std::size_t begin, std::size_t end) {
        Partial s;
        for (std::size_t i = begin; i < end; ++i) {
            const Vec3 x = grid.point(i);
            try {
                const Vec3 X = reeb_at(rf.form, x);
                const ReebResiduals res = reeb_residuals(rf.form, x, X);
                s.normalization = std::max(s.normalization, res.normalization);
                s.kernel = std::max(s.kernel, res.kernel / std::max(1.0, res.dalpha_scale));
                if (rf.model_field) {
                    const Vec3 Y = rf.model_field->value(x);
                    const double a = dot(rf.form.value(x), Y);
                    Vec3 d{};
                    for (std::size_t k = 0; k < 3; ++k) d[k] = X[k] - Y[k] / a;
                    s.model = std::max(s.model, norm(d) / std::max(1.0, norm(X)));
                }
            } catch (const Error&) {
                s.normalization = std::numeric_limits<double>::infinity();
            }
        }
        return s;
    });
    Partial all;
    for (const auto& p : parts) {
        all.normalization = std::max(all.normalization, p.normalization);
        all.kernel = std::max(all.kernel, p.kernel);
        all.model = std::max(all.model, p.model);
    }

    r.add("contact", cr.margin(), Comparison::Greater, c.tolerance);
    if (cr.axis_margin) r.add("axis_contact", *cr.axis_margin, Comparison::Greater, c.tolerance);
    r.add("singular_points", static_cast<double>(cr.singular_points.size()), Comparison::LessEqual, 0.0);
    r.add("reeb_normalization", all.normalization, Comparison::LessEqual, c.tolerance);
    r.add("reeb_kernel", all.kernel, Comparison::LessEqual, c.tolerance);
    if (rf.model_field) r.add("reeb_parallel_to_model_field", all.model, Comparison::LessEqual, c.tolerance);

    r.results = {{"model", rf.name},
                 {"chart", rf.form.chart().name()},
                 {"samples", cr.samples},
                 {"sign", to_string(cr.sign)},
                 {"min_margin", number(cr.margin())},
                 {"min_wedge", number(cr.min_wedge)},
                 {"max_wedge", number(cr.max_wedge)},
                 {"axis_margin", cr.axis_margin ? number(*cr.axis_margin) : Json(nullptr)}};

    if (c.csv_path) {
        std::ofstream out = open_output(*c.csv_path);
        const auto& n = rf.form.chart().coords();
        out << n[0] << ',' << n[1] << ',' << n[2] << ",wedge\n";
        out.precision(17);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const Vec3 x = grid.point(i);
            out << x[0] << ',' << x[1] << ',' << x[2] << ',';
            try {
                out << wedge_alpha_dalpha(rf.form, x);
            } catch (const Error&) {
                out << "nan";
            }
            out << '\n';
        }
        r.artifacts.push_back(*c.csv_path);
    }
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

inline void run_surgery_plan(const RunConfig& c, Report& r) {
    require_no_csv(c);
    const SurgeryPlan plan = plan_tight_surgery(c.p, c.q);
    const GluingReport g = verify_gluing(plan, c.tolerance);
    const SurgeryMatrix& a = plan.matrix;
    r.add("determinant", static_cast<double>(std::llabs(a.p * a.t - a.q * a.s - 1)), Comparison::LessEqual, 0.0);
    r.add("rbar_positive", plan.rbar, Comparison::Greater, 0.0);
    r.add("n_negative", -plan.n_slope, Comparison::Greater, 0.0);
    r.add("foliation_match", std::max(rel_diff(g.outer_n, g.inner_n), rel_diff(g.outer_n, plan.n_slope)),
          Comparison::LessEqual, c.tolerance);
    r.add("reeb_match", std::max(rel_diff(g.outer_reeb, g.inner_reeb), rel_diff(g.outer_reeb, plan.rbar)),
          Comparison::LessEqual, c.tolerance);
    r.add("wedge_positive", std::min(g.outer_wedge_min, g.inner_wedge_min), Comparison::Greater, 0.0);

    r.results = {{"p", a.p},
                 {"q", a.q},
                 {"s", a.s},
                 {"t", a.t},
                 {"r2", plan.r_squared},
                 {"rho_star", plan.rho_star},
                 {"n", plan.n_slope},
                 {"rbar", plan.rbar},
                 {"euler", plan.euler},
                 {"lens", lens_from_surgery(c.p, c.q).to_string()},
                 {"gluing",
                  {{"outer_n", g.outer_n},
                   {"inner_n", g.inner_n},
                   {"outer_reeb", g.outer_reeb},
                   {"inner_reeb", g.inner_reeb},
                   {"rho_inner", g.rho_inner},
                   {"needs_involution", g.needs_involution},
                   {"mismatches", g.mismatches}}}};
}

inline Json perturbation_json(const PerturbationReport& p) {
    return {{"r0", p.r0},
            {"r1", p.r1},
            {"epsilon", p.epsilon ? number(*p.epsilon) : Json(nullptr)},
            {"min_g", number(p.min_g)},
            {"min_numerator", number(p.min_numerator)},
            {"min_wedge", number(p.min_wedge)},
            {"axis_margin", p.axis_margin ? number(*p.axis_margin) : Json(nullptr)},
            {"equivariance_defect", number(p.equivariance_defect)},
            {"failures", p.failures}};
}

inline void run_branch_lift(const RunConfig& c, Report& r) {
    require_no_csv(c);
    const BranchData& d = c.branch.data;
    Json res{{"m", d.m}, {"k", d.k}, {"l", d.l}, {"case", c.branch.kind}};
    if (c.branch.kind == "2") {
        const ResolvedForm rf = resolve_form(c, "alpha_r:r=1.4142135623730951");
        const auto& co = rf.form.coeffs();
        const Grid grid = grid_for(rf.form.chart(), c.grid);
        const ScalingReport s = verify_contact_scaling(co[1], co[2], co[0], d, grid, c.tolerance);
        const ContactReport lifted = contact_check(pullback_integrable(co[1], co[2], co[0], d, rf.form.chart()), grid);
        r.add("scaling_identity", s.max_rel_error, Comparison::LessEqual, c.tolerance);
        r.add("scaling_failures", static_cast<double>(s.failures.size()), Comparison::LessEqual, 0.0);
        r.add("lifted_contact", lifted.margin(), Comparison::Greater, c.tolerance);
        res["model"] = rf.name;
        res["expected_ratio"] = s.expected;
        res["min_ratio"] = number(s.min_ratio);
        res["max_ratio"] = number(s.max_ratio);
        res["max_rel_error"] = number(s.max_rel_error);
        res["samples"] = s.samples;
        res["lifted_min_margin"] = number(lifted.margin());
    } else if (c.branch.kind == "1") {
        const auto bump = c.branch.bump.value_or(std::array<double, 2>{0.1, 0.3});
        const ScalarField f = parse_expression(c.branch.f, Chart::solid_torus().coords());
        const EquivariantPerturbation e = equivariant_perturbation(f, BumpFunction(bump[0], bump[1]));
        const PerturbationReport& p = e.report;
        r.add("g_positive", p.min_g, Comparison::Greater, p.tolerance);
        r.add("reeb_numerator_positive", p.min_numerator, Comparison::Greater, p.tolerance);
        r.add("contact", p.min_wedge, Comparison::Greater, p.tolerance);
        r.add("equivariance", p.equivariance_defect, Comparison::LessEqual, c.tolerance);
        r.add("perturbation_failures", static_cast<double>(p.failures.size()), Comparison::LessEqual, 0.0);
        res["f"] = c.branch.f;
        res["perturbation"] = perturbation_json(p);
    } else {
        const ResolvedForm rf = resolve_form(c, "tube");
        const auto bump = c.branch.bump.value_or(std::array<double, 2>{0.2, 0.4});
        const OneForm beta = pullback(branch_map(d, true, rf.form.chart()), rf.form);
        const HyperbolicPerturbation h = hyperbolic_perturbation(beta, BumpFunction(bump[0], bump[1]), c.branch.epsilon);
        const PerturbationReport& p = h.report;
        r.add("admissible_epsilon", p.epsilon ? *p.epsilon : std::numeric_limits<double>::quiet_NaN(),
              Comparison::GreaterEqual, 0.0);
        r.add("contact", p.min_wedge, Comparison::Greater, p.tolerance);
        if (p.axis_margin) r.add("axis_contact", *p.axis_margin, Comparison::Greater, p.tolerance);
        res["model"] = rf.name;
        res["requested_epsilon"] = c.branch.epsilon;
        res["perturbation"] = perturbation_json(p);
    }
    r.results = res;
}

/// "grid:AxB" seeds: on polar charts A radii from the axis out and B polar
/// angles at the other coordinate 0; elsewhere an A x B grid over the first
/// and last coordinates at middle coordinate 0.
inline std::vector<Vec3> seeds_from(const std::string& spec, const Chart& chart, const GridConfig& g) {
    static const std::regex re(R"(grid:(\d+)x(\d+))");
    std::smatch m;
    if (!std::regex_match(spec, m, re)) throw ConfigError("seeds must look like grid:AxB, got '" + spec + "'");
    const int a = std::stoi(m[1]), b = std::stoi(m[2]);
    if (a < 1 || b < 1 || a * b > 100000) throw ConfigError("seed grid must have between 1 and 100000 points");
    const auto span = [&](int i) -> std::pair<double, bool> {
        if (chart.radial() && chart.radial()->radius == i) {
            const auto& mx = chart.radial()->max;
            return {g.rho_max.value_or(mx ? *mx - 0.05 : 2.0), true};
        }
        if (const auto& p = chart.period(i)) return {*p, false};
        return {2.0, false};
    };
    std::array<int, 2> idx{0, 2};
    if (const auto& r = chart.radial()) idx = {r->radius, r->angle};
    std::vector<Vec3> seeds;
    for (int i = 0; i < a; ++i)
        for (int j = 0; j < b; ++j) {
            Vec3 x{};
            const std::array<int, 2> ij{i, j};
            const std::array<int, 2> n{a, b};
            for (std::size_t k = 0; k < 2; ++k) {
                const auto [len, radial] = span(idx[k]);
                const bool periodic = chart.periodic(idx[k]);
                const double lo = (periodic || radial) ? 0.0 : -1.0;
                // Radii start on the axis; other coordinates use cell midpoints.
                const double off = radial ? 0.0 : 0.5;
                x[static_cast<std::size_t>(idx[k])] = lo + (ij[k] + off) * len / n[k];
            }
            seeds.push_back(x);
        }
    return seeds;
}

inline Json orbit_json(const OrbitRecord& o, const Chart& chart, const std::optional<bool>& finite) {
    Json w = Json::array();
    for (long long v : o.winding) w.push_back(v);
    return {{"seed", vec_json(o.seed)},
            {"point", vec_json(o.point)},
            {"section", chart.coords()[static_cast<std::size_t>(o.section)]},
            {"period", o.period},
            {"multipliers",
             Json::array({Json::array({o.multipliers[0].real(), o.multipliers[0].imag()}),
                          Json::array({o.multipliers[1].real(), o.multipliers[1].imag()})})},
            {"classification", to_string(o.type)},
            {"borderline", o.borderline},
            {"winding", w},
            {"finite_order", finite ? Json(*finite) : Json("undecidable here")},
            {"residual", o.residual},
            {"iterations", o.iterations}};
}

inline void run_flow_orbits(const RunConfig& c, Report& r) {
    const ResolvedForm rf = resolve_form(c);
    const Chart& chart = rf.form.chart();
    std::optional<FlowSpec> spec;
    if (c.flow.field == "model") {
        if (!rf.model_field) throw ConfigError("model " + rf.name + " has no explicit field; use flow.field: reeb");
        spec = FlowSpec::field(*rf.model_field);
    } else {
        spec = FlowSpec::reeb(rf.form);
    }
    OrbitOptions opt;
    opt.tolerance = c.tolerance;
    const std::vector<Vec3> seeds = seeds_from(c.flow.seeds, chart, c.grid);
    const std::vector<OrbitRecord> orbits = find_orbits(*spec, seeds, opt);
    const TightnessHypothesisReport hyp = hypothesis_report(chart, orbits);

    double product = 0.0, residual = 0.0;
    Json list = Json::array();
    for (std::size_t i = 0; i < orbits.size(); ++i) {
        product = std::max(product, std::abs(orbits[i].multipliers[0] * orbits[i].multipliers[1] - 1.0));
        residual = std::max(residual, orbits[i].residual);
        list.push_back(orbit_json(orbits[i], chart, hyp.orbits[i].finite_order));
    }
    r.add("orbits_found", static_cast<double>(orbits.size()), Comparison::GreaterEqual, 1.0);
    r.add("multiplier_product", orbits.empty() ? std::numeric_limits<double>::quiet_NaN() : product,
          Comparison::LessEqual, kFloquetTolerance);
    r.add("closure_residual", orbits.empty() ? std::numeric_limits<double>::quiet_NaN() : residual,
          Comparison::LessEqual, c.tolerance);

    r.results = {{"model", rf.name},
                 {"field", c.flow.field},
                 {"seeds", seeds.size()},
                 {"orbits", list},
                 {"hypotheses",
                  {{"label", hyp.label},
                   {"consistent_with_no_finite_order_orbits", hyp.consistent_no_finite_order},
                   {"consistent_with_no_degenerate_or_finite_order_hyperbolic", hyp.consistent_nondegenerate},
                   {"undecidable_orbits", hyp.any_undecidable},
                   {"violations", hyp.violations}}}};

    if (c.csv_path && !orbits.empty()) {
        std::ofstream out = open_output(*c.csv_path);
        write_trajectory_csv(out, integrate(*spec, orbits.front().point, orbits.front().period), chart);
        r.artifacts.push_back(*c.csv_path);
    }
}

inline void run_lens_cover(const RunConfig& c, Report& r) {
    require_no_csv(c);
    const LensSpace base = LensSpace::normalized(c.lens.p, c.lens.q);
    const auto g = lens_cover_gluing(base, c.lens.core1, c.lens.core2);
    const LensSpace cover = LensSpace::normalized(g[1][0], g[0][0]);
    // H1 of V1 u_g V2 is presented by the single relation g(meridian); its order is |g[1][0]|.
    const long long det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    r.add("gluing_determinant", static_cast<double>(std::llabs(det - 1)), Comparison::LessEqual, 0.0);
    r.add("h1_order", static_cast<double>(std::llabs(cover.p - std::llabs(g[1][0]))), Comparison::LessEqual, 0.0);
    r.results = {{"base", base.to_string()},
                 {"core1", detail::branch_json(c.lens.core1)},
                 {"core2", detail::branch_json(c.lens.core2)},
                 {"gluing", Json::array({Json::array({g[0][0], g[0][1]}), Json::array({g[1][0], g[1][1]})})},
                 {"cover", cover.to_string()},
                 {"p", cover.p},
                 {"q", cover.q}};
}

} // namespace detail

/// Dispatch to the owning module. Config problems raise ConfigError or
/// ParseError; failures inside a computation propagate as other Errors.
inline Report run(const RunConfig& c) {
    const auto start = std::chrono::steady_clock::now();
    Report r;
    r.task = c.task;
    r.config = config_to_json(c);
    r.seed = c.seed;
    if (c.task == "verify-form") detail::run_verify_form(c, r);
    else if (c.task == "surgery-plan") detail::run_surgery_plan(c, r);
    else if (c.task == "branch-lift") detail::run_branch_lift(c, r);
    else if (c.task == "flow-orbits") detail::run_flow_orbits(c, r);
    else if (c.task == "lens-cover") detail::run_lens_cover(c, r);
    else throw ConfigError("unknown task '" + c.task + "'");
    if (c.json_path) r.artifacts.push_back(*c.json_path);
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

/// Run and write the JSON report if requested.
inline Report run_and_write(const RunConfig& c) {
    Report r = run(c);
    if (c.json_path) {
        std::ofstream out = detail::open_output(*c.json_path);
        out << to_json(r).dump(2) << '\n';
    }
    return r;
}

} // namespace reebkit::cli

#endif
