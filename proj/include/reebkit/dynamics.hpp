#ifndef REEBKIT_DYNAMICS_HPP
#define REEBKIT_DYNAMICS_HPP

// Reeb-flow analysis: integration with unreduced angles, Poincare return
// maps, periodic orbits by Newton shooting, Floquet classification, rotation
// numbers on invariant tori and the finite-order bookkeeping of orbits.
//
// On polar charts trajectories are integrated in the Cartesian lift
// (rho cos theta, rho sin theta, other), which is regular on the axis; the
// polar angle is recovered by continuous unwrapping.

#include "reebkit/chart.hpp"
#include "reebkit/errors.hpp"
#include "reebkit/forms.hpp"
#include "reebkit/parallel.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace reebkit {

struct IntegratorSettings {
    double abs_tol = 1e-12;
    double rel_tol = 1e-12;
    double max_step = 0.1;
    double initial_step = 1e-3;
    double max_time = 1000.0;
};

/// The field being flowed: the Reeb field of a form or an explicit field.
class FlowSpec {
public:
    static FlowSpec reeb(OneForm form, IntegratorSettings s = {}) {
        Chart c = form.chart();
        return FlowSpec(std::move(c), std::move(form), std::nullopt, s);
    }

    static FlowSpec field(VectorField f, IntegratorSettings s = {}) {
        Chart c = f.chart;
        return FlowSpec(std::move(c), std::nullopt, std::move(f), s);
    }

    const Chart& chart() const { return chart_; }
    const IntegratorSettings& settings() const { return settings_; }
    const std::optional<OneForm>& form() const { return form_; }

    FlowSpec with_settings(IntegratorSettings s) const {
        FlowSpec out = *this;
        out.settings_ = s;
        return out;
    }

    Vec3 velocity(const Vec3& x) const {
        try {
            if (form_) return reeb_at(*form_, x);
            return field_->value(x);
        } catch (const DegeneratePoint& e) {
            throw IntegrationError(std::string("field singular along the path: ") + e.what());
        } catch (const SingularEvaluation& e) {
            throw IntegrationError(std::string("field singular along the path: ") + e.what());
        }
    }

private:
    FlowSpec(Chart c, std::optional<OneForm> form, std::optional<VectorField> field, IntegratorSettings s)
        : chart_(std::move(c)), form_(std::move(form)), field_(std::move(field)), settings_(s) {}

    Chart chart_;
    std::optional<OneForm> form_;
    std::optional<VectorField> field_;
    IntegratorSettings settings_;
};

struct Trajectory {
    std::vector<double> t;
    std::vector<Vec3> x;  // chart coordinates, angles unreduced
};

namespace detail {

using State = std::array<double, 3>;

/// Chart coordinates <-> integration state.
class Lift {
public:
    explicit Lift(const Chart& c) : chart_(c) {
        if (const auto& r = c.radial()) {
            polar_ = true;
            r_ = static_cast<std::size_t>(r->radius);
            a_ = static_cast<std::size_t>(r->angle);
            o_ = 3 - r_ - a_;
        }
    }

    State to_state(const Vec3& x) const {
        if (!polar_) return x;
        return {x[r_] * std::cos(x[a_]), x[r_] * std::sin(x[a_]), x[o_]};
    }

    /// Chart point of a state, with the polar angle chosen nearest `angle_ref`.
    Vec3 to_chart(const State& s, double angle_ref) const {
        if (!polar_) return s;
        Vec3 x{};
        x[r_] = std::hypot(s[0], s[1]);
        double th = std::atan2(s[1], s[0]);
        th += kTwoPi * std::round((angle_ref - th) / kTwoPi);
        x[a_] = th;
        x[o_] = s[2];
        return x;
    }

    State velocity(const FlowSpec& spec, const State& s) const {
        if (!polar_) return spec.velocity(s);
        const double rho = std::hypot(s[0], s[1]);
        const double th = std::atan2(s[1], s[0]);
        Vec3 x{};
        x[r_] = rho;
        x[a_] = th;
        x[o_] = s[2];
        const Vec3 v = spec.velocity(x);
        const double c = std::cos(th), sn = std::sin(th);
        return {v[r_] * c - rho * sn * v[a_], v[r_] * sn + rho * c * v[a_], v[o_]};
    }

    bool polar() const { return polar_; }
    std::size_t angle() const { return a_; }
    std::size_t radius() const { return r_; }

private:
    const Chart& chart_;
    bool polar_ = false;
    std::size_t r_ = 0, a_ = 1, o_ = 2;
};

namespace odeint = boost::numeric::odeint;

/// Dense-output dopri5 driver in chart coordinates.
class Driver {
public:
    Driver(const FlowSpec& spec, const Vec3& start)
        : spec_(spec), lift_(spec.chart()),
          stepper_(odeint::make_dense_output(spec.settings().abs_tol, spec.settings().rel_tol, spec.settings().max_step,
                                             odeint::runge_kutta_dopri5<State>())),
          x_(start) {
        stepper_.initialize(lift_.to_state(start), 0.0, spec.settings().initial_step);
    }

    /// Advance one adaptive step; returns the new time.
    double step() {
        const auto sys = [this](const State& s, State& ds, double) { ds = lift_.velocity(spec_, s); };
        prev_x_ = x_;
        prev_t_ = stepper_.current_time();
        stepper_.do_step(sys);
        const State& s = stepper_.current_state();
        for (double v : s)
            if (!std::isfinite(v)) throw IntegrationError("non-finite state during integration");
        x_ = lift_.to_chart(s, angle_of(prev_x_));
        return stepper_.current_time();
    }

    /// Chart point at a time inside the last step.
    Vec3 at(double t) const {
        State s{};
        stepper_.calc_state(t, s);
        return lift_.to_chart(s, angle_of(prev_x_));
    }

    double time() const { return stepper_.current_time(); }
    double prev_time() const { return prev_t_; }
    const Vec3& point() const { return x_; }
    const Vec3& prev_point() const { return prev_x_; }

private:
    double angle_of(const Vec3& x) const { return lift_.polar() ? x[lift_.angle()] : 0.0; }

    const FlowSpec& spec_;
    Lift lift_;
    using Stepper = decltype(odeint::make_dense_output(1.0, 1.0, 1.0, odeint::runge_kutta_dopri5<State>()));
    Stepper stepper_;
    Vec3 x_;
    Vec3 prev_x_{};
    double prev_t_ = 0.0;
};

} // namespace detail

/// Flow `start` for `time`, recording every accepted step.
inline Trajectory integrate(const FlowSpec& spec, const Vec3& start, double time) {
    if (!(time >= 0.0)) throw InvalidArgument("integration time must be non-negative");
    if (time > spec.settings().max_time) throw IntegrationError("requested time exceeds the maximum integration time");
    Trajectory tr;
    tr.t.push_back(0.0);
    tr.x.push_back(start);
    if (time == 0.0) return tr;
    detail::Driver d(spec, start);
    while (true) {
        const double t = d.step();
        if (t >= time) {
            tr.t.push_back(time);
            tr.x.push_back(d.at(time));
            return tr;
        }
        tr.t.push_back(t);
        tr.x.push_back(d.point());
    }
}

// ---------------------------------------------------------------------------
// Poincare sections.

/// The hypersurface {x_coord = value}; for a periodic coordinate the
/// section is taken modulo the period.
struct Section {
    int coord = 0;
    double value = 0.0;
};

struct ReturnResult {
    Vec3 point{};   // unreduced chart coordinates on the section
    double time = 0.0;
};

namespace detail {

inline ReturnResult first_return(const FlowSpec& spec, const Section& sec, Vec3 x,
                                 const std::function<void(const Vec3&)>& observe = {}, bool snap = true) {
    const Chart& chart = spec.chart();
    const auto c = static_cast<std::size_t>(sec.coord);
    if (sec.coord < 0 || sec.coord > 2) throw InvalidArgument("section coordinate out of range");
    if (snap) x[c] = sec.value;
    const Vec3 v = spec.velocity(x);
    double vc = v[c];
    if (chart.is_polar_angle(sec.coord)) {
        const double rho = chart.radial_weight(x);
        if (rho < 1e-9) throw TransversalityError("a polar-angle section degenerates on the axis");
        vc *= rho;
    }
    if (!(std::abs(vc) > 1e-9 * std::max(norm(v), 1e-300)))
        throw TransversalityError("the field is tangent to the section at this point");
    const double dir = vc > 0 ? 1.0 : -1.0;
    const auto& period = chart.period(sec.coord);
    double level = sec.value;
    if (period) {
        // The next copy of the section strictly ahead of x.
        level = sec.value + *period * std::floor((x[c] - sec.value) / *period);
        while (dir * (level - x[c]) <= 0.0) level += dir * *period;
    }
    const auto h = [&](const Vec3& p) { return dir * (p[c] - level); };

    Driver d(spec, x);
    const double max_time = spec.settings().max_time;
    while (d.time() < max_time) {
        d.step();
        if (observe) observe(d.point());
        const double h0 = h(d.prev_point()), h1 = h(d.point());
        if (h0 < 0.0 && h1 >= 0.0) {
            double lo = d.prev_time(), hi = d.time();
            for (int i = 0; i < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++i) {
                const double mid = 0.5 * (lo + hi);
                (h(d.at(mid)) < 0.0 ? lo : hi) = mid;
            }
            const double t = 0.5 * (lo + hi);
            Vec3 p = d.at(t);
            p[c] = level;
            return {p, t};
        }
    }
    throw NoReturn("no return to the section within the maximum time");
}

} // namespace detail

/// First return of `point` to `section` in the direction of the flow.
inline ReturnResult poincare_return(const FlowSpec& spec, const Section& section, const Vec3& point) {
    return detail::first_return(spec, section, point);
}

// ---------------------------------------------------------------------------
// Floquet data.

enum class OrbitType { Elliptic, Hyperbolic, Degenerate };

inline const char* to_string(OrbitType t) {
    switch (t) {
    case OrbitType::Elliptic: return "elliptic";
    case OrbitType::Hyperbolic: return "hyperbolic";
    case OrbitType::Degenerate: return "degenerate";
    }
    return "?";
}

using Multipliers = std::array<std::complex<double>, 2>;

struct FloquetClass {
    OrbitType type = OrbitType::Elliptic;
    bool borderline = false;
};

inline constexpr double kFloquetTolerance = 1e-6;

/// Degenerate if a multiplier or the trace is within `tol` of 1 or 2 (the
/// trace catches Jordan blocks, whose eigenvalues are ill-conditioned),
/// elliptic if both lie within `tol` of the unit circle, hyperbolic
/// otherwise. Real elliptic pairs (at -1) are flagged borderline.
inline FloquetClass classify_floquet(const Multipliers& m, double tol = kFloquetTolerance) {
    if (std::abs(m[0] * m[1] - 1.0) > tol) throw InvalidArgument("multiplier product is not 1: not an area-preserving return map");
    if (std::abs(m[0] - 1.0) < tol || std::abs(m[1] - 1.0) < tol || std::abs(m[0] + m[1] - 2.0) < tol)
        return {OrbitType::Degenerate, false};
    if (std::abs(std::abs(m[0]) - 1.0) < tol && std::abs(std::abs(m[1]) - 1.0) < tol)
        return {OrbitType::Elliptic, std::abs(m[0].imag()) < tol};
    return {OrbitType::Hyperbolic, false};
}

inline Multipliers multipliers_of(const std::array<std::array<double, 2>, 2>& j) {
    const double tr = j[0][0] + j[1][1];
    const double det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    const std::complex<double> root = std::sqrt(std::complex<double>(tr * tr - 4.0 * det, 0.0));
    return {(tr + root) / 2.0, (tr - root) / 2.0};
}

// ---------------------------------------------------------------------------
// Periodic orbits.

struct OrbitRecord {
    Vec3 seed{};
    Vec3 point{};  // on the orbit, on the section
    int section = 0;
    double period = 0.0;
    Multipliers multipliers{};
    OrbitType type = OrbitType::Elliptic;
    bool borderline = false;
    Winding winding{};
    double residual = 0.0;
    int iterations = 0;
};

struct OrbitOptions {
    std::optional<int> section;
    double tolerance = 1e-9;
    int max_iterations = 50;
    double fd_step = 1e-6;
    /// Step for the Richardson-combined Jacobian behind reported multipliers.
    double multiplier_step = 1e-3;
    /// Seeds closer to the axis than this use Cartesian transverse coordinates.
    double cartesian_radius = 0.05;
};

namespace detail {

using Mat2 = std::array<std::array<double, 2>, 2>;
using Vec2 = std::array<double, 2>;

/// Coordinates on a section: two chart coordinates, or the Cartesian pair
/// around the axis of a polar chart.
struct SectionFrame {
    Section section;
    bool cartesian = false;
    std::array<std::size_t, 2> idx{};
    std::size_t r = 0, a = 1;

    Vec3 embed(const Vec2& u) const {
        Vec3 x{};
        x[static_cast<std::size_t>(section.coord)] = section.value;
        if (cartesian) {
            x[r] = std::hypot(u[0], u[1]);
            x[a] = std::atan2(u[1], u[0]);
        } else {
            x[idx[0]] = u[0];
            x[idx[1]] = u[1];
        }
        return x;
    }

    Vec2 project(const Vec3& x) const {
        if (cartesian) return {x[r] * std::cos(x[a]), x[r] * std::sin(x[a])};
        return {x[idx[0]], x[idx[1]]};
    }
};

inline int choose_section(const FlowSpec& spec, const Vec3& seed, double cartesian_radius) {
    const Chart& chart = spec.chart();
    const Vec3 v = spec.velocity(seed);
    const bool near_axis = chart.radial() && chart.radial_weight(seed) < cartesian_radius;
    int best = -1;
    double best_v = 0.0;
    for (int i = 0; i < 3; ++i) {
        if (chart.radial() && chart.radial()->radius == i) continue;
        if (chart.is_polar_angle(i) && near_axis) continue;
        double w = std::abs(v[static_cast<std::size_t>(i)]);
        if (chart.is_polar_angle(i)) w *= chart.radial_weight(seed);
        if (w > best_v) {
            best_v = w;
            best = i;
        }
    }
    if (best < 0) throw TransversalityError("no coordinate section is transverse at the seed");
    return best;
}

inline double det2(const Mat2& m) { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }

} // namespace detail

/// Newton shooting on the first-return displacement.
inline OrbitRecord find_periodic_orbit(const FlowSpec& spec, const Vec3& seed, const OrbitOptions& opt = {}) {
    const Chart& chart = spec.chart();
    const int sc = opt.section ? *opt.section : detail::choose_section(spec, seed, opt.cartesian_radius);
    detail::SectionFrame frame;
    frame.section = {sc, seed[static_cast<std::size_t>(sc)]};
    if (const auto& r = chart.radial()) {
        frame.r = static_cast<std::size_t>(r->radius);
        frame.a = static_cast<std::size_t>(r->angle);
        frame.cartesian = chart.radial_weight(seed) < opt.cartesian_radius && sc != r->radius && sc != r->angle;
    }
    for (std::size_t i = 0, j = 0; i < 3; ++i)
        if (static_cast<int>(i) != sc) frame.idx[j++] = i;

    // Period offsets of the transverse chart coordinates, fixed at the seed.
    std::array<double, 2> shift{0.0, 0.0};
    bool shift_set = false;
    const auto displacement = [&](const detail::Vec2& u, ReturnResult* out) {
        const ReturnResult ret = poincare_return(spec, frame.section, frame.embed(u));
        if (out) *out = ret;
        const detail::Vec2 w = frame.project(ret.point);
        detail::Vec2 d{w[0] - u[0], w[1] - u[1]};
        if (!frame.cartesian) {
            for (std::size_t k = 0; k < 2; ++k) {
                const auto& p = chart.period(static_cast<int>(frame.idx[k]));
                if (!p) continue;
                if (!shift_set) shift[k] = *p * std::round(d[k] / *p);
                d[k] -= shift[k];
            }
            shift_set = true;
        }
        return d;
    };
    const auto jacobian = [&](const detail::Vec2& u, double h) {
        detail::Mat2 j{};
        for (std::size_t k = 0; k < 2; ++k) {
            detail::Vec2 up = u, um = u;
            up[k] += h;
            um[k] -= h;
            const detail::Vec2 dp = displacement(up, nullptr), dm = displacement(um, nullptr);
            // Return map derivative = displacement derivative + identity.
            for (std::size_t i = 0; i < 2; ++i) j[i][k] = (dp[i] - dm[i]) / (2 * h) + (i == k ? 1.0 : 0.0);
        }
        return j;
    };
    const auto richardson = [&](const detail::Vec2& u, double h) {
        const detail::Mat2 a = jacobian(u, h), b = jacobian(u, 2 * h);
        detail::Mat2 j{};
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t k = 0; k < 2; ++k) j[i][k] = (4 * a[i][k] - b[i][k]) / 3;
        return j;
    };
    // Richardson estimates on decreasing steps; keep the pair that agrees best.
    const auto fine_jacobian = [&](const detail::Vec2& u) {
        std::vector<detail::Mat2> est;
        for (double h = std::max(opt.multiplier_step, opt.fd_step); h >= opt.fd_step * (1 - 1e-12); h /= 10) {
            try {
                est.push_back(richardson(u, h));
            } catch (const Error&) {
                if (!est.empty()) break;
            }
        }
        if (est.empty()) return richardson(u, opt.fd_step);
        std::size_t best = 0;
        double best_gap = std::numeric_limits<double>::infinity();
        for (std::size_t n = 0; n + 1 < est.size(); ++n) {
            double gap = 0.0;
            for (std::size_t i = 0; i < 2; ++i)
                for (std::size_t k = 0; k < 2; ++k) gap = std::max(gap, std::abs(est[n][i][k] - est[n + 1][i][k]));
            if (gap < best_gap) {
                best_gap = gap;
                best = n + 1;
            }
        }
        return est[best];
    };

    const detail::Vec2 u0 = frame.project(frame.embed(frame.project(seed)));
    detail::Vec2 u = u0;
    ReturnResult ret;
    detail::Vec2 d{};
    int it = 0;
    try {
        d = displacement(u, &ret);
        while (std::hypot(d[0], d[1]) > opt.tolerance) {
            if (++it > opt.max_iterations) throw NonConvergence("Newton iteration did not converge");
            detail::Mat2 a = jacobian(u, opt.fd_step);
            a[0][0] -= 1.0;
            a[1][1] -= 1.0;
            const double det = detail::det2(a);
            const double scale = std::max({std::abs(a[0][0]), std::abs(a[0][1]), std::abs(a[1][0]), std::abs(a[1][1]), 1e-300});
            if (std::abs(det) < 1e-10 * scale * scale)
                throw NonConvergence("return map has a fixed direction (singular DP - I): no isolated orbit nearby");
            detail::Vec2 du{-(a[1][1] * d[0] - a[0][1] * d[1]) / det, -(-a[1][0] * d[0] + a[0][0] * d[1]) / det};
            const double len = std::hypot(du[0], du[1]);
            if (len > 0.5) {
                du[0] *= 0.5 / len;
                du[1] *= 0.5 / len;
            }
            u = {u[0] + du[0], u[1] + du[1]};
            // Keep periodic coordinates within half a period of the seed; large values cost precision.
            if (!frame.cartesian)
                for (std::size_t k = 0; k < 2; ++k)
                    if (const auto& p = chart.period(static_cast<int>(frame.idx[k])))
                        u[k] -= *p * std::round((u[k] - u0[k]) / *p);
            d = displacement(u, &ret);
        }
    } catch (const NoReturn& e) {
        throw NonConvergence(std::string("shooting failed: ") + e.what());
    } catch (const TransversalityError& e) {
        throw NonConvergence(std::string("shooting failed: ") + e.what());
    }

    OrbitRecord rec;
    rec.seed = seed;
    rec.point = frame.embed(u);
    rec.section = sc;
    rec.period = ret.time;
    rec.residual = std::hypot(d[0], d[1]);
    rec.iterations = it;
    rec.multipliers = multipliers_of(fine_jacobian(u));
    const FloquetClass fc = classify_floquet(rec.multipliers);
    rec.type = fc.type;
    rec.borderline = fc.borderline;

    const bool on_axis = chart.radial() && chart.radial_weight(rec.point) < 1e-6;
    for (int i = 0; i < 3; ++i) {
        const auto& p = chart.period(i);
        if (!p) continue;
        const auto k = static_cast<std::size_t>(i);
        if (on_axis && chart.is_polar_angle(i)) continue;
        const double w = (ret.point[k] - rec.point[k]) / *p;
        if (std::abs(w - std::round(w)) > 1e-6) throw NonConvergence("orbit does not close in the periodic coordinates");
        rec.winding[k] = static_cast<long long>(std::llround(w));
    }
    return rec;
}

/// Orbits found from each seed, deduplicated in seed order. Seeds that do
/// not converge are skipped.
inline std::vector<OrbitRecord> find_orbits(const FlowSpec& spec, const std::vector<Vec3>& seeds, const OrbitOptions& opt = {}) {
    const auto found = parallel_chunks(seeds.size(), [&](std::size_t begin, std::size_t end) {
        std::vector<std::optional<OrbitRecord>> out;
        for (std::size_t i = begin; i < end; ++i) {
            try {
                out.push_back(find_periodic_orbit(spec, seeds[i], opt));
            } catch (const NonConvergence&) {
                out.push_back(std::nullopt);
            } catch (const IntegrationError&) {
                out.push_back(std::nullopt);
            } catch (const TransversalityError&) {
                out.push_back(std::nullopt);
            } catch (const InvalidArgument&) {
                out.push_back(std::nullopt);
            }
        }
        return out;
    });
    const Chart& chart = spec.chart();
    const auto same_orbit = [&](const OrbitRecord& o, const OrbitRecord& n) {
        if (o.winding != n.winding || std::abs(o.period - n.period) > 1e-6 * std::max(1.0, o.period)) return false;
        const auto sc = static_cast<std::size_t>(o.section);
        Vec3 p = n.point;
        try {
            if (!chart.periodic(o.section) || std::abs(std::remainder(p[sc] - o.point[sc], *chart.period(o.section))) > 1e-12)
                p = detail::first_return(spec, {o.section, o.point[sc]}, p, {}, false).point;
        } catch (const Error&) {
            return false;
        }
        const Vec3 a = chart.reduced(o.point), b = chart.reduced(p);
        for (std::size_t i = 0; i < 3; ++i) {
            double diff = std::abs(a[i] - b[i]);
            if (const auto& per = chart.period(static_cast<int>(i))) diff = std::min(diff, *per - diff);
            if (chart.is_polar_angle(static_cast<int>(i))) diff *= chart.radial_weight(a);
            if (diff > 1e-6) return false;
        }
        return true;
    };
    std::vector<OrbitRecord> orbits;
    for (const auto& chunk : found)
        for (const auto& rec : chunk) {
            if (!rec) continue;
            const bool dup = std::any_of(orbits.begin(), orbits.end(), [&](const OrbitRecord& o) { return same_orbit(o, *rec); });
            if (!dup) orbits.push_back(*rec);
        }
    return orbits;
}

// ---------------------------------------------------------------------------
// Rotation numbers.

struct RotationResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int returns = 0;
    double max_drift = 0.0;
};

struct RotationOptions {
    int section_angle = -1;   // default: the polar angle
    int measured_angle = -1;  // default: the remaining periodic coordinate
    double drift_tolerance = 1e-6;
};

/// Average advance of `measured_angle` per turn of `section_angle` over
/// `returns` returns to {section_angle = seed value}.
inline RotationResult rotation_number(const FlowSpec& spec, const Vec3& seed, int returns, const RotationOptions& opt = {}) {
    const Chart& chart = spec.chart();
    if (returns < 2) throw InvalidArgument("rotation_number needs at least two returns");
    int sa = opt.section_angle, ma = opt.measured_angle;
    if (sa < 0) {
        if (!chart.radial()) throw InvalidArgument("rotation_number needs a section angle on charts without a polar angle");
        sa = chart.radial()->angle;
    }
    if (ma < 0)
        for (int i = 0; i < 3; ++i)
            if (i != sa && chart.periodic(i)) ma = i;
    if (ma < 0 || !chart.periodic(sa)) throw InvalidArgument("rotation_number needs two periodic coordinates");
    const int rc = chart.radial() ? chart.radial()->radius : -1;
    const double rho0 = rc >= 0 ? seed[static_cast<std::size_t>(rc)] : 0.0;

    RotationResult res;
    const auto observe = [&](const Vec3& x) {
        if (rc >= 0) res.max_drift = std::max(res.max_drift, std::abs(x[static_cast<std::size_t>(rc)] - rho0));
    };
    Vec3 x = seed;
    const auto s = static_cast<std::size_t>(sa), m = static_cast<std::size_t>(ma);
    std::vector<Vec3> hits{x};
    for (int n = 0; n < returns; ++n) {
        x = detail::first_return(spec, {sa, x[s]}, x, observe).point;
        if (res.max_drift > opt.drift_tolerance) throw TorusDrift("trajectory leaves the invariant torus");
        hits.push_back(x);
    }
    const auto avg = [&](int n) {
        return (hits[static_cast<std::size_t>(n)][m] - seed[m]) / (hits[static_cast<std::size_t>(n)][s] - seed[s]);
    };
    res.value = avg(returns);
    res.error_estimate = std::abs(res.value - avg(returns / 2));
    res.returns = returns;
    return res;
}

// ---------------------------------------------------------------------------
// Finite order and the tightness hypotheses.

struct OrbitVerdict {
    OrbitRecord orbit;
    std::optional<bool> finite_order;  // empty: undecidable on this chart
};

struct TightnessHypothesisReport {
    std::string label = "sampled evidence, not a proof";
    std::vector<OrbitVerdict> orbits;
    /// (1): no closed orbits of finite order among those found.
    bool consistent_no_finite_order = true;
    /// (2): no degenerate orbits and no hyperbolic orbits of finite order.
    bool consistent_nondegenerate = true;
    bool any_undecidable = false;
    std::vector<std::string> violations;
};

/// Chart-level finite-order test: the orbit is null in the chart's
/// fundamental group iff it does not wind around any periodic coordinate
/// other than a polar angle.
inline std::optional<bool> finite_order(const Chart& chart, const Winding& w) {
    bool any = false;
    for (int i = 0; i < 3; ++i) {
        if (!chart.periodic(i) || chart.is_polar_angle(i)) continue;
        any = true;
        if (w[static_cast<std::size_t>(i)] != 0) return false;
    }
    if (!any) return std::nullopt;
    return true;
}

inline TightnessHypothesisReport hypothesis_report(const Chart& chart, const std::vector<OrbitRecord>& orbits) {
    TightnessHypothesisReport rep;
    for (std::size_t k = 0; k < orbits.size(); ++k) {
        const OrbitRecord& o = orbits[k];
        OrbitVerdict v{o, finite_order(chart, o.winding)};
        const std::string tag = "orbit " + std::to_string(k);
        if (!v.finite_order) {
            rep.any_undecidable = true;
        } else if (*v.finite_order) {
            rep.consistent_no_finite_order = false;
            rep.violations.push_back(tag + ": closed orbit of finite order");
            if (o.type == OrbitType::Hyperbolic) {
                rep.consistent_nondegenerate = false;
                rep.violations.push_back(tag + ": hyperbolic orbit of finite order");
            }
        }
        if (o.type == OrbitType::Degenerate) {
            rep.consistent_nondegenerate = false;
            rep.violations.push_back(tag + ": degenerate orbit");
        }
        rep.orbits.push_back(std::move(v));
    }
    return rep;
}

/// A flow with a contractible hyperbolic closed orbit: the unit circle in
/// (x, y) at z = 0, period 2 pi, multipliers exp(-pi/2) and exp(pi/2). Used
/// as a negative control for the hypothesis report.
inline VectorField hyperbolic_control_field() {
    const auto x = ScalarField::coordinate(0);
    const auto y = ScalarField::coordinate(1);
    const auto z = ScalarField::coordinate(2);
    const auto shrink = 0.125 * (1.0 - x * x - y * y);
    Chart chart("control", {"x", "y", "z"}, {std::nullopt, std::nullopt, kTwoPi});
    return {std::move(chart), {x * shrink - y, x + y * shrink, 0.25 * sin(z)}};
}

/// CSV rows t, coordinates, and the whole number of turns made by each
/// periodic coordinate since the start.
inline void write_trajectory_csv(std::ostream& out, const Trajectory& tr, const Chart& chart) {
    const auto& n = chart.coords();
    out << "t," << n[0] << ',' << n[1] << ',' << n[2];
    for (int i = 0; i < 3; ++i)
        if (chart.periodic(i)) out << ",winding_" << n[static_cast<std::size_t>(i)];
    out << '\n';
    out.precision(17);
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
        const Vec3& x = tr.x[k];
        out << tr.t[k] << ',' << x[0] << ',' << x[1] << ',' << x[2];
        for (int i = 0; i < 3; ++i)
            if (const auto& p = chart.period(i)) {
                const auto j = static_cast<std::size_t>(i);
                out << ',' << static_cast<long long>(std::trunc((x[j] - tr.x[0][j]) / *p));
            }
        out << '\n';
    }
}

} // namespace reebkit

#endif
