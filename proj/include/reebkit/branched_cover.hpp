#ifndef REEBKIT_BRANCHED_COVER_HPP
#define REEBKIT_BRANCHED_COVER_HPP

// Branched covers of solid tori: the branch maps, pullbacks of rotationally
// symmetric forms, the two perturbations that keep lifted forms contact near
// the branch locus, and the lens-space bookkeeping of covers.

#include "reebkit/chart.hpp"
#include "reebkit/errors.hpp"
#include "reebkit/forms.hpp"
#include "reebkit/surgery.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace reebkit {

/// Cover of the boundary torus (theta, phi) -> (m theta + k phi, l phi).
struct BranchData {
    long long m = 1;
    long long k = 0;
    long long l = 1;

    void validate() const {
        if (m < 1 || l < 1) throw InvalidArgument("branch data needs m >= 1 and l >= 1");
    }
};

/// (rho, theta, phi) -> (rho, m theta + k phi, l phi); the smooth variant
/// uses rho^2 in the first slot.
inline ChartMap branch_map(const BranchData& d, bool smooth, const Chart& chart = Chart::solid_torus()) {
    d.validate();
    const auto rho = ScalarField::coordinate(0);
    const auto th = ScalarField::coordinate(1);
    const auto ph = ScalarField::coordinate(2);
    const auto c = [](long long v) { return static_cast<double>(v); };
    return ChartMap(chart, chart, {smooth ? pow(rho, 2) : rho, c(d.m) * th + c(d.k) * ph, c(d.l) * ph},
                    IntMatrix3{{{1, 0, 0}, {0, d.m, d.k}, {0, 0, d.l}}});
}

namespace detail {
inline void require_radial(const ScalarField& f, const char* what) {
    if (f.depends_on(1) || f.depends_on(2)) throw InvalidArgument(std::string(what) + " must depend on rho only");
}
} // namespace detail

/// Lift of f dtheta + g dphi + h drho: m f dtheta + (k f + l g) dphi + h drho.
inline OneForm pullback_integrable(const ScalarField& f, const ScalarField& g, const ScalarField& h, const BranchData& d,
                                   const Chart& chart = Chart::solid_torus()) {
    d.validate();
    detail::require_radial(f, "f");
    detail::require_radial(g, "g");
    detail::require_radial(h, "h");
    const auto c = [](long long v) { return static_cast<double>(v); };
    return OneForm(chart, {h, c(d.m) * f, c(d.k) * f + c(d.l) * g});
}

struct ScalingReport {
    double expected = 1.0;  // m l
    std::size_t samples = 0;
    double max_rel_error = 0.0;
    double min_ratio = std::numeric_limits<double>::infinity();
    double max_ratio = -std::numeric_limits<double>::infinity();
    std::vector<PointFailure> failures;
    double tolerance = 1e-9;

    bool passed() const { return failures.empty() && samples > 0 && max_rel_error <= tolerance; }
};

/// Compare alpha~ ^ dalpha~ with m l alpha ^ dalpha over the grid.
inline ScalingReport verify_contact_scaling(const ScalarField& f, const ScalarField& g, const ScalarField& h,
                                            const BranchData& d, const Grid& grid, double tolerance = 1e-9) {
    grid.validate();
    const Chart chart = Chart::solid_torus();
    const OneForm base(chart, {h, f, g});
    const OneForm lifted = pullback_integrable(f, g, h, d, chart);
    const double ml = static_cast<double>(d.m * d.l);

    struct Partial {
        std::size_t samples = 0;
        double max_rel = 0.0, min_ratio = std::numeric_limits<double>::infinity(),
               max_ratio = -std::numeric_limits<double>::infinity();
        std::vector<PointFailure> failures;
    };
    const auto parts = parallel_chunks(grid.size(), [&](std::size_t begin, std::size_t end) {
        Partial s;
        for (std::size_t i = begin; i < end; ++i) {
            const Vec3 x = grid.point(i);
            try {
                const double w = wedge_alpha_dalpha(base, x);
                const double wt = wedge_alpha_dalpha(lifted, x);
                const double ref = ml * w;
                if (ref == 0.0) throw SingularEvaluation("base wedge vanishes");
                const double ratio = wt / w;
                s.max_rel = std::max(s.max_rel, std::abs(wt - ref) / std::abs(ref));
                s.min_ratio = std::min(s.min_ratio, ratio);
                s.max_ratio = std::max(s.max_ratio, ratio);
                ++s.samples;
            } catch (const SingularEvaluation& e) {
                s.failures.push_back({x, e.what()});
            }
        }
        return s;
    });
    ScalingReport rep;
    rep.expected = ml;
    rep.tolerance = tolerance;
    for (const auto& p : parts) {
        rep.samples += p.samples;
        rep.max_rel_error = std::max(rep.max_rel_error, p.max_rel);
        rep.min_ratio = std::min(rep.min_ratio, p.min_ratio);
        rep.max_ratio = std::max(rep.max_ratio, p.max_ratio);
        rep.failures.insert(rep.failures.end(), p.failures.begin(), p.failures.end());
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Perturbations.

/// C^2 bump in rho: 1 on [0, r0], 0 on [r1, inf).
struct BumpFunction {
    double r0 = 0.1;
    double r1 = 0.3;

    BumpFunction(double inner, double outer) : r0(inner), r1(outer) {
        if (!(r0 > 0.0 && r1 > r0)) throw InvalidArgument("bump needs 0 < r0 < r1");
    }

    ScalarField field() const { return ScalarField::bump(ScalarField::coordinate(0), r0, r1); }
    double value(double rho) const { return field().value({rho, 0.0, 0.0}); }
};

struct PerturbationReport {
    double r0 = 0.0;
    double r1 = 0.0;
    std::optional<double> epsilon;
    double min_g = std::numeric_limits<double>::infinity();
    double min_numerator = std::numeric_limits<double>::infinity();  // 2g + rho g_rho
    double min_wedge = std::numeric_limits<double>::infinity();      // wedge / rho
    std::optional<double> axis_margin;
    double equivariance_defect = 0.0;
    double tolerance = 1e-8;
    std::vector<std::string> failures;

    bool valid() const { return failures.empty(); }
};

struct EquivariantPerturbation {
    ScalarField f0;
    ScalarField g;
    OneForm beta;
    PerturbationReport report;
};

inline Grid neighborhood_grid(double rho_max, int n_rho = 40, int n_angle = 16) {
    return Grid{{GridAxis{0.0, rho_max, n_rho}, GridAxis{0.0, kTwoPi, n_angle}, GridAxis{0.0, kTwoPi, n_angle}}};
}

/// g = f0 + (1 - chi) (f - f0) with f0 = f(0, 0, phi) + rho * mean_theta d_rho f(0, theta, phi),
/// and beta = g (dphi + rho^2 dtheta). The report samples the support of chi.
inline EquivariantPerturbation equivariant_perturbation(const ScalarField& f, const BumpFunction& chi,
                                                        double tolerance = 1e-8) {
    const auto rho = ScalarField::coordinate(0);
    const auto phi = ScalarField::coordinate(2);
    constexpr int kAverage = 64;
    const ScalarField f_axis = f.substitute({ScalarField(0.0), ScalarField(0.0), phi});
    const ScalarField fr = f.derivative(0);
    ScalarField slope(0.0);
    for (int j = 0; j < kAverage; ++j)
        slope = slope + fr.substitute({ScalarField(0.0), ScalarField(kTwoPi * j / kAverage), phi});
    const ScalarField f0 = f_axis + rho * (slope / static_cast<double>(kAverage));
    const ScalarField g = f0 + (1.0 - chi.field()) * (f - f0);
    const OneForm beta(Chart::solid_torus(std::nullopt, "tube"), {ScalarField(0.0), g * pow(rho, 2), g});

    PerturbationReport rep;
    rep.r0 = chi.r0;
    rep.r1 = chi.r1;
    rep.tolerance = tolerance;
    const Grid grid = neighborhood_grid(chi.r1);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Vec3 x = grid.point(i);
        const Jet1 j = g.jet1(x);
        rep.min_g = std::min(rep.min_g, j.v);
        rep.min_numerator = std::min(rep.min_numerator, 2.0 * j.v + x[0] * j.g[0]);
    }
    for (double r : axis_collar_radii()) {
        for (int a = 0; a < 16; ++a)
            for (int b = 0; b < 16; ++b) {
                const Vec3 x{r, kTwoPi * (a + 0.5) / 16, kTwoPi * (b + 0.5) / 16};
                const Jet1 j = g.jet1(x);
                rep.min_g = std::min(rep.min_g, j.v);
                rep.min_numerator = std::min(rep.min_numerator, 2.0 * j.v + r * j.g[0]);
            }
    }
    // g must not see theta inside the flat zone of chi.
    for (int i = 0; i <= 20; ++i) {
        const double r = chi.r0 * i / 20.0;
        for (int b = 0; b < 16; ++b) {
            const double ph = kTwoPi * b / 16.0;
            const double g0 = g.value({r, 0.0, ph});
            for (int a = 1; a < 16; ++a)
                rep.equivariance_defect = std::max(rep.equivariance_defect, std::abs(g.value({r, kTwoPi * a / 16.0, ph}) - g0));
        }
    }
    const ContactReport c = contact_check(beta, grid);
    rep.min_wedge = c.margin();
    rep.axis_margin = c.axis_margin;

    if (!(rep.min_g > tolerance)) rep.failures.push_back("g is not positive on the neighbourhood");
    if (!(rep.min_numerator > tolerance)) rep.failures.push_back("2g + rho g_rho is not positive on the neighbourhood");
    if (!c.passed() || c.sign != ContactSign::Positive) rep.failures.push_back("beta is not a positive contact form");
    if (rep.equivariance_defect != 0.0) rep.failures.push_back("g depends on theta inside the flat zone");
    return {f0, g, beta, rep};
}

struct HyperbolicPerturbation {
    OneForm abar;
    PerturbationReport report;
};

namespace detail {

inline OneForm add_twist(const OneForm& beta, const BumpFunction& u, double epsilon) {
    const auto rho = ScalarField::coordinate(0);
    const auto& c = beta.coeffs();
    return OneForm(beta.chart(), {c[0], c[1] + epsilon * u.field() * pow(rho, 2), c[2]});
}

inline double twist_margin(const ContactReport& c) {
    if (c.sign != ContactSign::Positive || !c.singular_points.empty()) return -std::numeric_limits<double>::infinity();
    return std::min(c.margin(), c.axis_margin.value_or(std::numeric_limits<double>::infinity()));
}

} // namespace detail

/// abar = beta + eps u(rho) rho^2 dtheta. Tries `epsilon` first, then
/// bisects (0, epsilon) for the largest admissible value. The margin is the
/// smallest wedge / rho over `grid` and the axis collar.
inline HyperbolicPerturbation hyperbolic_perturbation(const OneForm& beta, const BumpFunction& u, double epsilon,
                                                      std::optional<Grid> grid = std::nullopt,
                                                      double tolerance = 1e-8, int iterations = 20) {
    if (!beta.chart().radial()) throw InvalidArgument("hyperbolic_perturbation needs a polar chart");
    if (!(epsilon >= 0.0)) throw InvalidArgument("epsilon must be non-negative");
    const Grid g = grid.value_or(neighborhood_grid(2.0 * u.r1));

    const auto margin_at = [&](double eps) {
        const ContactReport c = contact_check(detail::add_twist(beta, u, eps), g);
        return std::make_pair(detail::twist_margin(c), c);
    };

    PerturbationReport rep;
    rep.r0 = u.r0;
    rep.r1 = u.r1;
    rep.tolerance = tolerance;
    auto [m, c] = margin_at(epsilon);
    double chosen = epsilon;
    if (!(m > tolerance)) {
        double lo = 0.0, hi = epsilon;
        std::optional<std::pair<double, ContactReport>> best;
        for (int i = 0; i < iterations; ++i) {
            const double mid = 0.5 * (lo + hi);
            auto [mm, cc] = margin_at(mid);
            if (mm > tolerance) {
                lo = mid;
                best = std::make_pair(mm, cc);
            } else {
                hi = mid;
            }
        }
        if (best) {
            chosen = lo;
            m = best->first;
            c = best->second;
        }
    }
    rep.min_wedge = c.margin();
    rep.axis_margin = c.axis_margin;
    if (m > tolerance) {
        rep.epsilon = chosen;
    } else {
        rep.failures.push_back("no admissible epsilon in (0, " + std::to_string(epsilon) + "]");
    }
    return {detail::add_twist(beta, u, rep.epsilon.value_or(epsilon)), rep};
}

// ---------------------------------------------------------------------------
// Lens-space covers.

namespace detail {

using IntMat2 = std::array<std::array<long long, 2>, 2>;

inline IntMat2 mul(const IntMat2& a, const IntMat2& b) {
    IntMat2 c{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
    return c;
}

} // namespace detail

/// Gluing matrix of the cover of L(p, q) = V1 u_A V2 branched over the two
/// cores, with the torus covers `b1` (seen from V1) and `b2` (seen from V2):
/// P1^-1 A T^j P2, for the first Dehn twist T^j along the V2 meridian that
/// makes it integral.
inline std::array<std::array<long long, 2>, 2> lens_cover_gluing(const LensSpace& space, const BranchData& b1,
                                                                 const BranchData& b2) {
    b1.validate();
    b2.validate();
    const LensSpace base = LensSpace::normalized(space.p, space.q);
    if (b1.m * b1.l != b2.m * b2.l)
        throw IncompatibleBranching("the two torus covers have different degrees (m1 l1 != m2 l2)");
    // A (1, 0) = (q, p), completed to determinant one: q y - p x = 1.
    const auto [x, y] = solve_st(base.q, base.p);
    const detail::IntMat2 a{{{base.q, x}, {base.p, y}}};
    // P1^-1 = adj(P1) / (m1 l1).
    const long long d = b1.m * b1.l;
    const detail::IntMat2 adj1{{{b1.l, -b1.k}, {0, b1.m}}};
    const detail::IntMat2 p2{{{b2.m, b2.k}, {0, b2.l}}};
    for (long long j = 0; j < d * b2.m * b2.l; ++j) {
        const detail::IntMat2 twist{{{1, j}, {0, 1}}};
        const detail::IntMat2 n = detail::mul(detail::mul(adj1, detail::mul(a, twist)), p2);
        if (n[0][0] % d != 0 || n[0][1] % d != 0 || n[1][0] % d != 0 || n[1][1] % d != 0) continue;
        const detail::IntMat2 g{{{n[0][0] / d, n[0][1] / d}, {n[1][0] / d, n[1][1] / d}}};
        if (g[0][0] * g[1][1] - g[0][1] * g[1][0] != 1) continue;
        return g;
    }
    throw IncompatibleBranching("branch data do not glue to a torus cover of " + base.to_string());
}

inline LensSpace lens_branched_cover(const LensSpace& space, const BranchData& b1, const BranchData& b2) {
    const auto g = lens_cover_gluing(space, b1, b2);
    return LensSpace::normalized(g[1][0], g[0][0]);
}

} // namespace reebkit

#endif
