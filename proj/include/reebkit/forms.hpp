#ifndef REEBKIT_FORMS_HPP
#define REEBKIT_FORMS_HPP

// One-forms on a three-dimensional chart and the pointwise exterior calculus
// needed to test the contact condition and extract Reeb fields.
//
// Conventions: coordinates x0, x1, x2 in chart order define the positive
// volume dx0^dx1^dx2. A two-form value stores M[i][j] = coefficient of
// dxi^dxj (i < j), so d(sum a_j dx_j) has M[i][j] = d_i a_j - d_j a_i and
// alpha^dalpha = (a0 M12 - a1 M02 + a2 M01) dx0^dx1^dx2.

#include "reebkit/chart.hpp"
#include "reebkit/errors.hpp"
#include "reebkit/jet.hpp"
#include "reebkit/parallel.hpp"
#include "reebkit/scalar_field.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace reebkit {

using Matrix3 = std::array<Vec3, 3>;

/// Contact degeneracy threshold on the (radius-normalized) wedge coefficient.
inline constexpr double kContactThreshold = 1e-9;
/// Reeb normalization refuses when |alpha(kernel vector)| falls below this.
inline constexpr double kReebThreshold = 1e-9;
/// On polar charts, points closer to the axis than this are evaluated at
/// this radius (the limit along the ray).
inline constexpr double kAxisEpsilon = 1e-9;

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

/// Pointwise value of a two-form. Only the three independent entries are
/// stored, so antisymmetry holds by construction.
class TwoFormValue {
public:
    TwoFormValue() = default;
    TwoFormValue(double m01, double m02, double m12) : c_{m01, m02, m12} {}

    double operator()(int i, int j) const {
        if (i == j) return 0.0;
        if (i > j) return -(*this)(j, i);
        return c_[static_cast<std::size_t>(i + j - 1)];
    }

    /// (M12, -M02, M01): spans the kernel whenever the form is nonzero.
    Vec3 kernel_vector() const { return {c_[2], -c_[1], c_[0]}; }

    /// The covector M(v, .) with components sum_i v_i M[i][j].
    Vec3 contract(const Vec3& v) const {
        Vec3 r{};
        for (int j = 0; j < 3; ++j)
            for (int i = 0; i < 3; ++i) r[static_cast<std::size_t>(j)] += v[static_cast<std::size_t>(i)] * (*this)(i, j);
        return r;
    }

    double max_abs() const { return std::max({std::abs(c_[0]), std::abs(c_[1]), std::abs(c_[2])}); }

private:
    std::array<double, 3> c_{};
};

/// A one-form sum_i a_i dx_i on a chart.
class OneForm {
public:
    OneForm(Chart chart, std::array<ScalarField, 3> coeffs) : chart_(std::move(chart)), coeffs_(std::move(coeffs)) {}

    const Chart& chart() const { return chart_; }
    const std::array<ScalarField, 3>& coeffs() const { return coeffs_; }
    const ScalarField& coeff(int i) const { return coeffs_[static_cast<std::size_t>(i)]; }

    Vec3 value(const Vec3& x) const { return {coeffs_[0].value(x), coeffs_[1].value(x), coeffs_[2].value(x)}; }

    std::array<Jet1, 3> jets(const Vec3& x) const {
        return {coeffs_[0].jet1(x), coeffs_[1].jet1(x), coeffs_[2].jet1(x)};
    }

    std::string to_string() const {
        const auto& n = chart_.coords();
        std::string out;
        for (std::size_t i = 0; i < 3; ++i) {
            if (!out.empty()) out += " + ";
            out += "(" + coeffs_[i].to_string(n) + ") d" + n[i];
        }
        return out;
    }

private:
    Chart chart_;
    std::array<ScalarField, 3> coeffs_;
};

/// An explicit vector field sum_i v_i d/dx_i on a chart.
struct VectorField {
    Chart chart;
    std::array<ScalarField, 3> components;

    Vec3 value(const Vec3& x) const {
        return {components[0].value(x), components[1].value(x), components[2].value(x)};
    }
};

inline TwoFormValue exterior_derivative_from_jets(const std::array<Jet1, 3>& a) {
    return {a[1].g[0] - a[0].g[1], a[2].g[0] - a[0].g[2], a[2].g[1] - a[1].g[2]};
}

/// d(alpha) at `x`.
inline TwoFormValue eval_exterior_derivative(const OneForm& form, const Vec3& x) {
    return exterior_derivative_from_jets(form.jets(x));
}

inline double wedge_from(const Vec3& a, const TwoFormValue& m) {
    return a[0] * m(1, 2) - a[1] * m(0, 2) + a[2] * m(0, 1);
}

/// Coefficient of dx0^dx1^dx2 in alpha^dalpha at `x`.
inline double wedge_alpha_dalpha(const OneForm& form, const Vec3& x) {
    const auto jets = form.jets(x);
    return wedge_from({jets[0].v, jets[1].v, jets[2].v}, exterior_derivative_from_jets(jets));
}

namespace detail {
inline Vec3 off_axis(const Chart& chart, Vec3 x) {
    if (const auto& r = chart.radial()) {
        auto& rho = x[static_cast<std::size_t>(r->radius)];
        if (rho < kAxisEpsilon) rho = kAxisEpsilon;
    }
    return x;
}
} // namespace detail

/// Reeb vector field at `x`: the kernel vector of d(alpha) scaled so that
/// alpha(X) = 1. On polar charts the degeneracy test is applied to the
/// radius-normalized value and points on the axis evaluate the limit along
/// the ray.
inline Vec3 reeb_at(const OneForm& form, const Vec3& point) {
    const Vec3 x = detail::off_axis(form.chart(), point);
    const auto jets = form.jets(x);
    const Vec3 a{jets[0].v, jets[1].v, jets[2].v};
    const Vec3 v = exterior_derivative_from_jets(jets).kernel_vector();
    const double av = dot(a, v);
    if (!(std::abs(av) / form.chart().radial_weight(x) >= kReebThreshold))
        throw DegeneratePoint("contact condition fails: alpha(ker dalpha) ~ 0");
    return {v[0] / av, v[1] / av, v[2] / av};
}

struct ReebResiduals {
    double normalization = 0.0;  // |alpha(X) - 1|
    double kernel = 0.0;         // ||dalpha(X, .)||
    double dalpha_scale = 0.0;   // max |M_ij|, to make `kernel` relative
};

inline ReebResiduals reeb_residuals(const OneForm& form, const Vec3& point, const Vec3& field) {
    const Vec3 x = detail::off_axis(form.chart(), point);
    const TwoFormValue m = eval_exterior_derivative(form, x);
    return {std::abs(dot(form.value(x), field) - 1.0), norm(m.contract(field)), m.max_abs()};
}

// ---------------------------------------------------------------------------
// Contact check over a sampling grid.

/// `count` cell-centred samples of [lo, hi]; the endpoints themselves are
/// never sampled, so open intervals such as (0, pi/2) are safe.
struct GridAxis {
    double lo = 0.0;
    double hi = 1.0;
    int count = 1;

    double at(int i) const { return lo + (static_cast<double>(i) + 0.5) * (hi - lo) / count; }
};

struct Grid {
    std::array<GridAxis, 3> axes;

    std::size_t size() const {
        return static_cast<std::size_t>(axes[0].count) * static_cast<std::size_t>(axes[1].count) *
               static_cast<std::size_t>(axes[2].count);
    }

    Vec3 point(std::size_t k) const {
        const auto n1 = static_cast<std::size_t>(axes[1].count);
        const auto n2 = static_cast<std::size_t>(axes[2].count);
        return {axes[0].at(static_cast<int>(k / (n1 * n2))), axes[1].at(static_cast<int>((k / n2) % n1)),
                axes[2].at(static_cast<int>(k % n2))};
    }

    void validate() const {
        for (const auto& a : axes)
            if (a.count < 1 || !(a.hi >= a.lo)) throw InvalidArgument("grid axes need count >= 1 and hi >= lo");
    }
};

enum class ContactSign { Positive, Negative, NotContact };

inline const char* to_string(ContactSign s) {
    switch (s) {
    case ContactSign::Positive: return "positive";
    case ContactSign::Negative: return "negative";
    case ContactSign::NotContact: return "not a contact form on this chart";
    }
    return "?";
}

struct PointFailure {
    Vec3 point{};
    std::string reason;
};

struct ContactReport {
    std::size_t samples = 0;
    double min_wedge = std::numeric_limits<double>::infinity();
    double max_wedge = -std::numeric_limits<double>::infinity();
    /// Extremes of the wedge divided by the radius on polar charts (equal to
    /// the raw extremes elsewhere). The degeneracy threshold applies here.
    double min_normalized = std::numeric_limits<double>::infinity();
    double max_normalized = -std::numeric_limits<double>::infinity();
    ContactSign sign = ContactSign::NotContact;
    /// Polar charts only: min over the axis collar 0 < radius <= 0.05 of
    /// sign * wedge / radius.
    std::optional<double> axis_margin;
    std::vector<PointFailure> singular_points;

    bool passed() const {
        return sign != ContactSign::NotContact && singular_points.empty() &&
               (!axis_margin || *axis_margin > kContactThreshold);
    }

    /// Smallest signed normalized wedge value: the quantity compared with
    /// the threshold for the sign verdict.
    double margin() const {
        if (sign == ContactSign::Negative) return -max_normalized;
        return min_normalized;
    }
};

/// Radii sampled for the axis-regularity criterion on polar charts.
inline std::vector<double> axis_collar_radii() {
    std::vector<double> r{1e-6, 1e-4, 1e-3};
    for (int j = 1; j <= 10; ++j) r.push_back(0.005 * j);
    return r;
}

namespace detail {

struct WedgeStats {
    std::size_t samples = 0;
    std::size_t positive = 0;
    std::size_t negative = 0;
    double min_w = std::numeric_limits<double>::infinity();
    double max_w = -std::numeric_limits<double>::infinity();
    double min_n = std::numeric_limits<double>::infinity();
    double max_n = -std::numeric_limits<double>::infinity();
    std::vector<PointFailure> failures;

    void merge(const WedgeStats& o) {
        samples += o.samples;
        positive += o.positive;
        negative += o.negative;
        min_w = std::min(min_w, o.min_w);
        max_w = std::max(max_w, o.max_w);
        min_n = std::min(min_n, o.min_n);
        max_n = std::max(max_n, o.max_n);
        failures.insert(failures.end(), o.failures.begin(), o.failures.end());
    }
};

template <class PointAt>
WedgeStats sweep_wedge(const OneForm& form, std::size_t n, PointAt point_at) {
    auto chunks = parallel_chunks(n, [&](std::size_t begin, std::size_t end) {
        WedgeStats s;
        for (std::size_t k = begin; k < end; ++k) {
            const Vec3 x = point_at(k);
            try {
                const double w = wedge_alpha_dalpha(form, x);
                const double wn = w / form.chart().radial_weight(x);
                if (!std::isfinite(wn)) throw SingularEvaluation("non-finite wedge");
                ++s.samples;
                s.min_w = std::min(s.min_w, w);
                s.max_w = std::max(s.max_w, w);
                s.min_n = std::min(s.min_n, wn);
                s.max_n = std::max(s.max_n, wn);
                if (wn > kContactThreshold) ++s.positive;
                if (wn < -kContactThreshold) ++s.negative;
            } catch (const SingularEvaluation& e) {
                s.failures.push_back({x, e.what()});
            }
        }
        return s;
    });
    WedgeStats total;
    for (const auto& c : chunks) total.merge(c);
    return total;
}

} // namespace detail

/// Sample alpha^dalpha over `grid` and decide whether the form is a contact
/// form of a definite sign there. Mixed signs or near-zero values give the
/// NotContact verdict; singular evaluations are collected per point.
inline ContactReport contact_check(const OneForm& form, const Grid& grid) {
    grid.validate();
    const Chart& chart = form.chart();
    if (const auto& r = chart.radial()) {
        if (grid.axes[static_cast<std::size_t>(r->radius)].lo < 0.0)
            throw InvalidArgument("grid leaves the chart: negative radius");
    }

    const detail::WedgeStats main = detail::sweep_wedge(form, grid.size(), [&](std::size_t k) { return grid.point(k); });

    ContactReport rep;
    rep.samples = main.samples;
    rep.min_wedge = main.min_w;
    rep.max_wedge = main.max_w;
    rep.min_normalized = main.min_n;
    rep.max_normalized = main.max_n;
    rep.singular_points = main.failures;
    if (main.samples > 0 && main.positive == main.samples)
        rep.sign = ContactSign::Positive;
    else if (main.samples > 0 && main.negative == main.samples)
        rep.sign = ContactSign::Negative;

    if (const auto& r = chart.radial()) {
        const auto radius = static_cast<std::size_t>(r->radius);
        const std::vector<double> radii = axis_collar_radii();
        std::array<int, 2> others{};
        for (int i = 0, j = 0; i < 3; ++i)
            if (static_cast<std::size_t>(i) != radius) others[static_cast<std::size_t>(j++)] = i;
        const auto& ax = grid.axes[static_cast<std::size_t>(others[0])];
        const auto& bx = grid.axes[static_cast<std::size_t>(others[1])];
        const std::size_t per = static_cast<std::size_t>(ax.count) * static_cast<std::size_t>(bx.count);
        const detail::WedgeStats collar = detail::sweep_wedge(form, radii.size() * per, [&](std::size_t k) {
            Vec3 x{};
            x[radius] = radii[k / per];
            x[static_cast<std::size_t>(others[0])] = ax.at(static_cast<int>((k % per) / static_cast<std::size_t>(bx.count)));
            x[static_cast<std::size_t>(others[1])] = bx.at(static_cast<int>(k % static_cast<std::size_t>(bx.count)));
            return x;
        });
        rep.singular_points.insert(rep.singular_points.end(), collar.failures.begin(), collar.failures.end());
        if (collar.samples > 0)
            rep.axis_margin = rep.sign == ContactSign::Negative ? -collar.max_n : collar.min_n;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Chart maps and pullbacks.

using IntMatrix3 = std::array<std::array<long long, 3>, 3>;
using Winding = std::array<long long, 3>;

/// A smooth map between charts given by closed-form components on the
/// source. When the map is integer-linear in the angle coordinates,
/// `angle_matrix` records that part exactly (row = target coordinate) and
/// winding vectors are pushed forward in integer arithmetic.
class ChartMap {
public:
    ChartMap(Chart source, Chart target, std::array<ScalarField, 3> components,
             std::optional<IntMatrix3> angle_matrix = std::nullopt)
        : source_(std::move(source)), target_(std::move(target)), components_(std::move(components)),
          angle_matrix_(angle_matrix) {
        if (angle_matrix_) {
            // A full period of a source coordinate must land on the target's period lattice.
            for (int i = 0; i < 3; ++i) {
                const auto& ps = source_.period(i);
                if (!ps) continue;
                for (int j = 0; j < 3; ++j) {
                    const double shift =
                        static_cast<double>((*angle_matrix_)[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]) * *ps;
                    const auto& pt = target_.period(j);
                    const double q = pt ? shift / *pt : shift;
                    if (std::abs(q - std::round(q)) > 1e-12 || (!pt && shift != 0.0))
                        throw InvalidArgument("chart map does not respect the declared periods");
                }
            }
        }
    }

    static ChartMap identity(const Chart& chart) {
        return ChartMap(chart, chart,
                        {ScalarField::coordinate(0), ScalarField::coordinate(1), ScalarField::coordinate(2)},
                        IntMatrix3{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}});
    }

    const Chart& source() const { return source_; }
    const Chart& target() const { return target_; }
    const std::array<ScalarField, 3>& components() const { return components_; }
    const std::optional<IntMatrix3>& angle_matrix() const { return angle_matrix_; }
    bool exact() const { return angle_matrix_.has_value(); }

    Vec3 apply(const Vec3& x) const {
        return {components_[0].value(x), components_[1].value(x), components_[2].value(x)};
    }

    /// J[j][i] = d(target_j)/d(source_i).
    Matrix3 jacobian(const Vec3& x) const {
        Matrix3 j{};
        for (std::size_t r = 0; r < 3; ++r) j[r] = components_[r].jet1(x).g;
        return j;
    }

    /// Push a winding vector forward (exact maps only).
    Winding map_winding(const Winding& w) const {
        if (!angle_matrix_) throw InvalidArgument("winding data needs an exact (integer-linear) chart map");
        Winding out{};
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t i = 0; i < 3; ++i) out[j] += (*angle_matrix_)[j][i] * w[i];
        return out;
    }

private:
    Chart source_;
    Chart target_;
    std::array<ScalarField, 3> components_;
    std::optional<IntMatrix3> angle_matrix_;
};

/// (map^* alpha)(x) = J(x)^T alpha(map(x)).
inline Vec3 pullback(const ChartMap& map, const OneForm& form, const Vec3& x) {
    const Vec3 a = form.value(map.apply(x));
    const Matrix3 j = map.jacobian(x);
    Vec3 out{};
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t k = 0; k < 3; ++k) out[i] += j[k][i] * a[k];
    return out;
}

/// Closed-form pullback: coefficient i is sum_j a_j(map(x)) d(map_j)/dx_i.
inline OneForm pullback(const ChartMap& map, const OneForm& form) {
    std::array<ScalarField, 3> composed;
    for (std::size_t k = 0; k < 3; ++k) composed[k] = form.coeffs()[k].substitute(map.components());
    std::array<ScalarField, 3> out;
    for (int i = 0; i < 3; ++i) {
        ScalarField c;
        for (std::size_t k = 0; k < 3; ++k) c = c + composed[k] * map.components()[k].derivative(i);
        out[static_cast<std::size_t>(i)] = c;
    }
    return OneForm(map.source(), out);
}

/// (map^* beta)(x) for a two-form value beta given at map(x).
inline TwoFormValue pullback(const Matrix3& jac, const TwoFormValue& beta) {
    auto entry = [&](int i, int j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k)
            for (int l = 0; l < 3; ++l)
                s += beta(k, l) * jac[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] *
                     jac[static_cast<std::size_t>(l)][static_cast<std::size_t>(j)];
        return s;
    };
    return {entry(0, 1), entry(0, 2), entry(1, 2)};
}

} // namespace reebkit

#endif
