#ifndef REEBKIT_SURGERY_HPP
#define REEBKIT_SURGERY_HPP

// Dehn surgery on the core of the model solid torus: slope arithmetic, a
// planner for the tight regluing and lens-space bookkeeping.
//
// A surgery matrix (p, q, s, t) acts on the boundary angles by
// Psi(rho, theta, phi) = (rho, p theta + s phi, q theta + t phi). Slopes are
// dphi/dtheta.

#include "reebkit/errors.hpp"
#include "reebkit/forms.hpp"
#include "reebkit/models.hpp"
#include "reebkit/rational.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace reebkit {

struct SurgeryMatrix {
    long long p = 1, q = 0, s = 0, t = 1;

    long long det() const { return p * t - q * s; }

    void validate() const {
        if (det() != 1) throw InvalidArgument("surgery matrix needs pt - qs = 1");
    }

    static SurgeryMatrix identity() { return {}; }

    /// Product of [[p, q], [s, t]] arrays: (b * a) is "a, then b" on slopes.
    friend SurgeryMatrix operator*(const SurgeryMatrix& b, const SurgeryMatrix& a) {
        return {b.p * a.p + b.q * a.s, b.p * a.q + b.q * a.t, b.s * a.p + b.t * a.s, b.s * a.q + b.t * a.t};
    }

    friend bool operator==(const SurgeryMatrix&, const SurgeryMatrix&) = default;
};

/// (s, t) with pt - qs = 1 and |s| minimal (ties: smaller t). For p = 0 the
/// value of s is forced and t = 0.
inline std::pair<long long, long long> solve_st(long long p, long long q) {
    if (std::gcd(p, q) != 1) throw NonCoprime("solve_st needs gcd(p, q) = 1");
    if (p == 0) return {-q, 0};  // q = +-1
    // Extended Euclid: p x + q y = 1, so (s, t) = (-y, x).
    long long r0 = p, r1 = q, x0 = 1, x1 = 0, y0 = 0, y1 = 1;
    while (r1 != 0) {
        const long long k = r0 / r1;
        r0 = std::exchange(r1, r0 - k * r1);
        x0 = std::exchange(x1, x0 - k * x1);
        y0 = std::exchange(y1, y0 - k * y1);
    }
    if (r0 < 0) {
        x0 = -x0;
        y0 = -y0;
    }
    long long s = -y0, t = x0;
    // Shift along (s + k p, t + k q) to the minimal |s|.
    const long long ap = std::llabs(p);
    const long long k0 = ((((s % ap) + ap) % ap) - s) / p;  // brings s into [0, |p|)
    s += k0 * p;
    t += k0 * q;
    long long best_s = s, best_t = t;
    for (long long k : {-1LL, 1LL}) {
        const long long cs = s + k * p, ct = t + k * q;
        if (std::llabs(cs) < std::llabs(best_s) || (std::llabs(cs) == std::llabs(best_s) && ct < best_t)) {
            best_s = cs;
            best_t = ct;
        }
    }
    return {best_s, best_t};
}

/// n = -(p m - q) / (s m - t).
inline Rational transformed_foliation_slope(const SurgeryMatrix& a, const Rational& m) {
    const Rational den = a.s * m - a.t;
    if (den == 0) throw SlopeAtInfinity("slope at infinity (meridional)");
    return -(a.p * m - a.q) / den;
}

inline double transformed_foliation_slope(const SurgeryMatrix& a, double m) {
    const double den = static_cast<double>(a.s) * m - static_cast<double>(a.t);
    if (std::abs(den) <= 1e-12 * std::max(1.0, std::abs(m))) throw SlopeAtInfinity("slope at infinity (meridional)");
    return -(static_cast<double>(a.p) * m - static_cast<double>(a.q)) / den;
}

/// rbar = -(p - q r^2) / (s - t r^2): the Reeb slope 1/r^2 seen through the matrix.
inline Rational transformed_reeb_slope(const SurgeryMatrix& a, const Rational& r_squared) {
    const Rational den = a.s - a.t * r_squared;
    if (den == 0) throw SlopeAtInfinity("Reeb slope at infinity");
    return -(a.p - a.q * r_squared) / den;
}

inline double transformed_reeb_slope(const SurgeryMatrix& a, double r_squared) {
    const double den = static_cast<double>(a.s) - static_cast<double>(a.t) * r_squared;
    if (std::abs(den) <= 1e-12 * std::max(1.0, std::abs(r_squared))) throw SlopeAtInfinity("Reeb slope at infinity");
    return -(static_cast<double>(a.p) - static_cast<double>(a.q) * r_squared) / den;
}

/// True when x is within `tol` of some rational with denominator <= max_den.
inline bool near_rational(double x, int max_den = 50, double tol = 1e-6) {
    for (int d = 1; d <= max_den; ++d)
        if (std::abs(x - std::round(x * d) / d) <= tol) return true;
    return false;
}

// ---------------------------------------------------------------------------
// Planner.

struct SurgeryPlan {
    long long p = 1, q = 0;
    SurgeryMatrix matrix;
    double r_squared = 1.0;
    double rho_star = 0.0;
    double n_slope = 0.0;
    double rbar = 1.0;
    long long euler = 1;
};

namespace detail {

/// Open subintervals of (0, inf) cut at the given breakpoints.
inline std::vector<std::pair<double, double>> pieces(std::vector<double> cuts) {
    std::vector<double> c{0.0};
    std::sort(cuts.begin(), cuts.end());
    for (double x : cuts)
        if (x > 0.0 && std::isfinite(x) && x > c.back()) c.push_back(x);
    c.push_back(std::numeric_limits<double>::infinity());
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i + 1 < c.size(); ++i) out.emplace_back(c[i], c[i + 1]);
    return out;
}

inline double interior(const std::pair<double, double>& iv) {
    return std::isfinite(iv.second) ? 0.5 * (iv.first + iv.second) : iv.first + 1.0;
}

inline double ratio(long long num, long long den) {
    return den == 0 ? std::numeric_limits<double>::infinity() : static_cast<double>(num) / static_cast<double>(den);
}

/// Widest (in rho) interval of tan^2 rho on which n < 0; midpoint in rho.
inline std::optional<double> negative_rho(const SurgeryMatrix& a) {
    // With tau = tan^2 rho, n = -(p tau + q) / (s tau + t).
    const auto iv = pieces({-ratio(a.q, a.p), -ratio(a.t, a.s)});
    std::optional<double> best;
    double width = 0.0;
    for (const auto& i : iv) {
        const double tau = interior(i);
        const double n = -(static_cast<double>(a.p) * tau + static_cast<double>(a.q)) /
                         (static_cast<double>(a.s) * tau + static_cast<double>(a.t));
        if (!(n < 0.0)) continue;
        const double lo = std::atan(std::sqrt(i.first));
        const double hi = std::isfinite(i.second) ? std::atan(std::sqrt(i.second)) : std::numbers::pi / 2;
        if (hi - lo > width) {
            width = hi - lo;
            best = 0.5 * (lo + hi);
        }
    }
    return best;
}

/// First r^2 of the form (j + 1/phi^2) 2^-e, e = 0, 1, ..., inside an
/// interval of (0, inf) where rbar > 0, skipping values near small rationals.
inline std::optional<std::pair<double, double>> positive_reeb(const SurgeryMatrix& a) {
    const double frac = 1.0 / (std::numbers::phi * std::numbers::phi);
    const auto iv = pieces({ratio(a.p, a.q), ratio(a.s, a.t)});
    for (int e = 0; e <= 40; ++e) {
        const double scale = std::ldexp(1.0, -e);
        for (const auto& i : iv) {
            const double r2 = interior(i);
            const double den = static_cast<double>(a.s) - static_cast<double>(a.t) * r2;
            if (!(-(static_cast<double>(a.p) - static_cast<double>(a.q) * r2) / den > 0.0)) continue;
            for (double j = std::max(0.0, std::ceil(i.first / scale - frac)); j < std::ceil(i.first / scale - frac) + 64; ++j) {
                const double c = (j + frac) * scale;
                if (!(c > i.first) || !(c < i.second)) break;
                if (near_rational(c)) continue;
                const double rbar = transformed_reeb_slope(a, c);
                if (rbar > 1e-6 && rbar < 1e6) return std::make_pair(c, rbar);
            }
        }
    }
    return std::nullopt;
}

} // namespace detail

inline long long euler_class(long long q) { return q + 1; }

inline long long euler_class(long long p, long long q) {
    if (std::gcd(p, q) != 1) throw NonCoprime("euler_class needs gcd(p, q) = 1");
    return euler_class(q);
}

/// Search (s + k p, t + k q), k = 0, 1, -1, 2, -2, ..., for a matrix admitting
/// rbar > 0 at an r^2 on the quadratic-irrational grid and a torus with n < 0.
inline SurgeryPlan plan_tight_surgery(long long p, long long q, int max_k = 64) {
    const auto [s0, t0] = solve_st(p, q);
    for (int i = 0; i <= 2 * max_k; ++i) {
        const long long k = (i % 2 == 1) ? (i + 1) / 2 : -(i / 2);
        const SurgeryMatrix a{p, q, s0 + k * p, t0 + k * q};
        a.validate();
        const auto rho = detail::negative_rho(a);
        if (!rho) continue;
        const auto reeb = detail::positive_reeb(a);
        if (!reeb) continue;
        const double tau = std::pow(std::tan(*rho), 2);
        const double n = transformed_foliation_slope(a, -tau);
        if (!(n < 0.0)) continue;
        return {p, q, a, reeb->first, *rho, n, reeb->second, euler_class(q)};
    }
    throw SearchExhausted("no tight surgery plan for (" + std::to_string(p) + ", " + std::to_string(q) +
                          ") within the search bounds");
}

// ---------------------------------------------------------------------------
// Boundary matching.

struct GluingReport {
    bool foliation_match = false;
    bool reeb_match = false;
    bool wedge_positive = false;
    /// Outer and inner Reeb fields point in opposite theta directions, so the
    /// gluing map has to compose with (theta, phi) -> (-theta, -phi).
    bool needs_involution = false;
    /// n < 0 with rho* strictly inside the removed tube.
    bool large_torus = false;

    double outer_n = 0.0;
    double inner_n = 0.0;
    double outer_reeb = 0.0;
    double inner_reeb = 0.0;
    double outer_wedge_min = 0.0;
    double inner_wedge_min = 0.0;
    double rho_inner = 0.0;
    std::vector<std::string> mismatches;

    bool passed() const { return foliation_match && reeb_match && wedge_positive; }
};

inline ChartMap surgery_map(const Chart& chart, const SurgeryMatrix& a) {
    const auto rho = ScalarField::coordinate(0);
    const auto th = ScalarField::coordinate(1);
    const auto ph = ScalarField::coordinate(2);
    const auto d = [](long long v) { return static_cast<double>(v); };
    return ChartMap(chart, chart, {rho, d(a.p) * th + d(a.s) * ph, d(a.q) * th + d(a.t) * ph},
                    IntMatrix3{{{1, 0, 0}, {0, a.p, a.s}, {0, a.q, a.t}}});
}

namespace detail {

inline double ring_min_wedge(const OneForm& form, double rho) {
    double w = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) w = std::min(w, wedge_alpha_dalpha(form, {rho, kTwoPi * i / 8.0, kTwoPi * j / 8.0}));
    return w;
}

inline bool agree(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

} // namespace detail

/// Compare Psi^* alpha_r on T_{rho*} with the inner model alpha_{1/sqrt(rbar)}
/// on its torus of slope n.
inline GluingReport verify_gluing(const SurgeryPlan& plan, double tol = 1e-9) {
    plan.matrix.validate();
    GluingReport rep;
    const ModelTorusForm outer_model = alpha_r_squared(plan.r_squared);
    const OneForm outer = pullback(surgery_map(outer_model.form.chart(), plan.matrix), outer_model.form);
    const Vec3 x{plan.rho_star, 0.0, 0.0};

    rep.outer_n = char_slope_of(outer, x);
    const Vec3 X = reeb_at(outer, x);
    rep.outer_reeb = X[2] / X[1];
    rep.needs_involution = X[1] < 0.0;
    rep.outer_wedge_min = detail::ring_min_wedge(outer, plan.rho_star);
    rep.large_torus = plan.n_slope < 0.0 && plan.rho_star > 0.0 && plan.rho_star < std::numbers::pi / 2;

    if (!detail::agree(rep.outer_n, plan.n_slope, tol)) rep.mismatches.push_back("outer foliation slope differs from the plan");
    if (!detail::agree(rep.outer_reeb, plan.rbar, tol)) rep.mismatches.push_back("outer Reeb slope differs from the plan");

    bool inner_ok = true;
    if (!(plan.n_slope < 0.0)) {
        rep.mismatches.push_back("n >= 0: no model torus has this characteristic slope");
        inner_ok = false;
    }
    if (!(plan.rbar > 0.0)) {
        rep.mismatches.push_back("rbar <= 0: no inner model alpha_{1/sqrt(rbar)}");
        inner_ok = false;
    }
    if (inner_ok) {
        const ModelTorusForm inner = alpha_r_squared(1.0 / plan.rbar);
        rep.rho_inner = std::atan(std::sqrt(-plan.n_slope));
        const Vec3 y{rep.rho_inner, 0.0, 0.0};
        rep.inner_n = char_slope_of(inner.form, y);
        const Vec3 Y = reeb_at(inner.form, y);
        rep.inner_reeb = Y[2] / Y[1];
        rep.inner_wedge_min = detail::ring_min_wedge(inner.form, rep.rho_inner);
        rep.foliation_match = detail::agree(rep.outer_n, rep.inner_n, tol) && detail::agree(rep.outer_n, plan.n_slope, tol);
        rep.reeb_match = detail::agree(rep.outer_reeb, rep.inner_reeb, tol) && detail::agree(rep.outer_reeb, plan.rbar, tol);
        if (!rep.foliation_match) rep.mismatches.push_back("characteristic foliations differ on the matching torus");
        if (!rep.reeb_match) rep.mismatches.push_back("Reeb directions differ on the matching torus");
    }
    rep.wedge_positive = inner_ok && rep.outer_wedge_min > 0.0 && rep.inner_wedge_min > 0.0;
    if (!rep.wedge_positive) rep.mismatches.push_back("a wedge coefficient is not positive on the matching torus");
    return rep;
}

// ---------------------------------------------------------------------------
// Lens spaces.

struct LensSpace {
    long long p = 1, q = 0;

    /// p >= 0, q reduced into [0, p); L(0, q) becomes L(0, 1).
    static LensSpace normalized(long long p, long long q) {
        if (p < 0) {
            p = -p;
            q = -q;
        }
        if (p == 0) {
            if (std::llabs(q) != 1) throw NonCoprime("L(0, q) needs q = +-1");
            return {0, 1};
        }
        if (std::gcd(p, q) != 1) throw NonCoprime("lens space needs gcd(p, q) = 1");
        return {p, ((q % p) + p) % p};
    }

    std::string to_string() const { return "L(" + std::to_string(p) + "," + std::to_string(q) + ")"; }

    friend bool operator==(const LensSpace&, const LensSpace&) = default;
};

/// -p/q surgery on the unknot gives L(p, q).
inline LensSpace lens_from_surgery(long long p, long long q) {
    if (std::gcd(p, q) != 1) throw NonCoprime("lens_from_surgery needs gcd(p, q) = 1");
    return LensSpace::normalized(p, q);
}

} // namespace reebkit

#endif
