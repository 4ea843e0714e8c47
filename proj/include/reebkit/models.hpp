#ifndef REEBKIT_MODELS_HPP
#define REEBKIT_MODELS_HPP

// Concrete contact forms: the model solid-torus family alpha_r, the standard
// transverse tube and the three-torus example, with their closed-form slope
// data.
//
// Slopes on a torus T_rho of a solid-torus chart (rho, theta, phi) are
// dphi/dtheta throughout.

#include "reebkit/chart.hpp"
#include "reebkit/errors.hpp"
#include "reebkit/forms.hpp"
#include "reebkit/rational.hpp"
#include "reebkit/scalar_field.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

namespace reebkit {

struct ModelTorusForm {
    double r = 1.0;
    double r_squared = 1.0;
    OneForm form;
};

namespace detail {

inline ModelTorusForm make_alpha(double r, double r2) {
    if (!(r > 0.0) || !std::isfinite(r)) throw InvalidArgument("alpha_r needs r > 0");
    const auto rho = ScalarField::coordinate(0);
    const ScalarField s2 = pow(sin(rho), 2);
    const ScalarField c2 = pow(cos(rho), 2);
    const ScalarField F = 1.0 / (s2 + (1.0 / r2) * c2);
    Chart chart = Chart::solid_torus(std::numbers::pi / 2, "alpha_r");
    return {r, r2, OneForm(std::move(chart), {ScalarField(0.0), F * s2, F * c2})};
}

} // namespace detail

/// alpha_r = F (sin^2 rho dtheta + cos^2 rho dphi), F = 1/(sin^2 rho + cos^2 rho / r^2),
/// on the solid torus 0 <= rho < pi/2.
inline ModelTorusForm alpha_r(double r) { return detail::make_alpha(r, r * r); }

/// Same family parametrized by r^2, so that r^2 is represented exactly.
inline ModelTorusForm alpha_r_squared(double r_squared) {
    if (!(r_squared > 0.0)) throw InvalidArgument("alpha_r needs r^2 > 0");
    return detail::make_alpha(std::sqrt(r_squared), r_squared);
}

/// alpha_r near its second core rho = pi/2, written in the chart
/// (rho', theta', phi') = (pi/2 - rho, phi, theta). There it equals
/// r^2 * alpha_{1/r}.
inline ModelTorusForm alpha_r_opposite_core(double r_squared) {
    if (!(r_squared > 0.0)) throw InvalidArgument("alpha_r needs r^2 > 0");
    ModelTorusForm inner = alpha_r_squared(1.0 / r_squared);
    const auto& c = inner.form.coeffs();
    Chart chart = Chart::solid_torus(std::numbers::pi / 2, "alpha_r_opposite");
    return {std::sqrt(r_squared), r_squared, OneForm(std::move(chart), {c[0], r_squared * c[1], r_squared * c[2]})};
}

/// Characteristic slope of alpha_r on T_rho: -tan^2 rho.
inline double char_slope_model(double rho) {
    if (!(rho >= 0.0) || !(rho < std::numbers::pi / 2)) throw InvalidArgument("char_slope_model needs 0 <= rho < pi/2");
    const double t = std::tan(rho);
    return -t * t;
}

/// The same slope read off a solid-torus form: -coeff_theta / coeff_phi.
inline double char_slope_of(const OneForm& form, const Vec3& x) {
    const Vec3 a = form.value(x);
    if (std::abs(a[2]) < 1e-14) throw SlopeAtInfinity("characteristic foliation is meridional here");
    return -a[1] / a[2];
}

/// Reeb slope of alpha_r on every torus: 1/r^2.
inline double reeb_slope_model(double r) {
    if (!(r > 0.0)) throw InvalidArgument("reeb_slope_model needs r > 0");
    return 1.0 / (r * r);
}

/// dphi + rho^2 dtheta on an open solid torus.
inline OneForm standard_tube_form() {
    const auto rho = ScalarField::coordinate(0);
    return OneForm(Chart::solid_torus(std::nullopt, "tube"), {ScalarField(0.0), pow(rho, 2), ScalarField(1.0)});
}

inline double tube_char_slope(double rho) { return -rho * rho; }

/// Exact tube slope from an exact rho^2.
inline Rational tube_char_slope_exact(const Rational& rho_squared) {
    if (rho_squared < 0) throw InvalidArgument("rho^2 must be non-negative");
    return -rho_squared;
}

// ---------------------------------------------------------------------------

/// Rotationally symmetric form h drho + f dtheta + g dphi with Reeb field
/// a d/dtheta + b d/dphi.
struct ActionAngleProfile {
    ScalarField a, b, f, g, h;

    /// Largest |a f + b g - 1| over `samples` interior radii of (lo, hi).
    double max_defect(double lo, double hi, int samples = 1000) const {
        double worst = 0.0;
        for (int i = 0; i < samples; ++i) {
            const Vec3 x{lo + (i + 0.5) * (hi - lo) / samples, 0.0, 0.0};
            worst = std::max(worst, std::abs(a.value(x) * f.value(x) + b.value(x) * g.value(x) - 1.0));
        }
        return worst;
    }

    /// Reeb components from the form coefficients: with D = g f' - f g',
    /// a = -g'/D and b = f'/D.
    static ActionAngleProfile from_coefficients(const ScalarField& f, const ScalarField& g, const ScalarField& h) {
        for (const auto* c : {&f, &g, &h})
            if (c->depends_on(1) || c->depends_on(2)) throw InvalidArgument("profile coefficients must depend on rho only");
        const ScalarField fp = f.derivative(0), gp = g.derivative(0);
        const ScalarField d = g * fp - f * gp;
        return {-gp / d, fp / d, f, g, h};
    }
};

inline ActionAngleProfile action_angle_profile(const ModelTorusForm& m) {
    const auto& c = m.form.coeffs();
    return {ScalarField(1.0), ScalarField(1.0 / m.r_squared), c[1], c[2], c[0]};
}

// ---------------------------------------------------------------------------

struct T3Form {
    OneForm form;
    VectorField model_field;

    /// alpha(X) = 5/2 + 2 sin x cos z.
    static double alpha_of_field(const Vec3& p) { return 2.5 + 2.0 * std::sin(p[0]) * std::cos(p[2]); }
};

/// (sin z dx + cos z dy) + (sin x dy + cos x dz)/2 on T^3 with the field
/// X = (2 sin z, sin x + 2 cos z, cos x).
inline T3Form t3_example() {
    const auto x = ScalarField::coordinate(0);
    const auto z = ScalarField::coordinate(2);
    Chart chart = Chart::three_torus();
    OneForm form(chart, {sin(z), cos(z) + 0.5 * sin(x), 0.5 * cos(x)});
    VectorField field{chart, {2.0 * sin(z), sin(x) + 2.0 * cos(z), cos(x)}};
    return {std::move(form), std::move(field)};
}

// ---------------------------------------------------------------------------
// Named registry.

struct NamedModel {
    std::string name;
    OneForm form;
    std::optional<VectorField> model_field;
    std::optional<double> r_squared;
};

/// "alpha_r:r=<value>", "alpha_r:r2=<value>", "tube" or "t3".
inline NamedModel model_by_name(const std::string& spec) {
    if (spec == "tube") return {spec, standard_tube_form(), std::nullopt, std::nullopt};
    if (spec == "t3") {
        T3Form t = t3_example();
        return {spec, std::move(t.form), std::move(t.model_field), std::nullopt};
    }
    const std::string prefix = "alpha_r:";
    if (spec.rfind(prefix, 0) == 0) {
        const std::string arg = spec.substr(prefix.size());
        const auto eq = arg.find('=');
        if (eq != std::string::npos) {
            const std::string key = arg.substr(0, eq);
            const std::string text = arg.substr(eq + 1);
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(text, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == text.size() && used > 0) {
                if (key == "r") {
                    ModelTorusForm m = alpha_r(v);
                    return {spec, std::move(m.form), std::nullopt, m.r_squared};
                }
                if (key == "r2") {
                    ModelTorusForm m = alpha_r_squared(v);
                    return {spec, std::move(m.form), std::nullopt, m.r_squared};
                }
            }
        }
    }
    throw InvalidArgument("unknown model '" + spec + "' (expected alpha_r:r=<r>, alpha_r:r2=<r^2>, tube or t3)");
}

} // namespace reebkit

#endif
