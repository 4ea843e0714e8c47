// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "random_fields.hpp"
#include "reebkit/branched_cover.hpp"
#include "reebkit/dynamics.hpp"
#include "reebkit/models.hpp"
#include "reebkit/surgery.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

using namespace reebkit;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) detail << "[" << what << "] ";
        ok = ok && cond;
    }
};

int failures = 0;

void criterion(int n, const char* title, double time_limit, const std::function<void(Outcome&)>& body) {
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    try {
        body(out);
    } catch (const std::exception& e) {
        out.ok = false;
        out.detail << "exception: " << e.what() << ' ';
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (time_limit > 0 && secs >= time_limit) {
        out.ok = false;
        out.detail << "[runtime " << secs << " s >= " << time_limit << " s] ";
    }
    if (!out.ok) ++failures;
    std::printf("%s %2d %s (%.2f s) %s\n", out.ok ? "PASS" : "FAIL", n, title, secs, out.detail.str().c_str());
    std::fflush(stdout);
}

std::vector<OrbitRecord> all_orbits;
double max_torus_drift = 0.0;

} // namespace

int main() {
    criterion(1, "contact positivity of alpha_r", 5.0, [](Outcome& o) {
        for (double r : {0.7, 1.0, std::numbers::sqrt2, 2.3}) {
            const Grid grid{{GridAxis{0.0, kPi / 2 - 0.05, 50}, GridAxis{0.0, kTwoPi, 16}, GridAxis{0.0, kTwoPi, 16}}};
            const ContactReport c = contact_check(alpha_r(r).form, grid);
            o.require(c.passed(), "contact_check r=" + std::to_string(r));
            o.require(c.axis_margin && *c.axis_margin >= 0.1, "axis margin r=" + std::to_string(r));
            o.detail << "r=" << r << " axis margin " << c.axis_margin.value_or(-1) << "; ";
        }
    });

    criterion(2, "Reeb field of alpha_r matches the closed form", 0.0, [](Outcome& o) {
        std::mt19937 rng(11);
        std::uniform_real_distribution<double> rho(1e-3, kPi / 2 - 1e-3), ang(0.0, kTwoPi), rr(0.5, 3.0);
        double worst = 0.0;
        for (int i = 0; i < 10000; ++i) {
            const double r = rr(rng);
            const Vec3 x{rho(rng), ang(rng), ang(rng)};
            const Vec3 X = reeb_at(alpha_r(r).form, x);
            const Vec3 Y{0.0, 1.0, 1.0 / (r * r)};
            for (std::size_t k = 0; k < 3; ++k) worst = std::max(worst, std::abs(X[k] - Y[k]));
        }
        o.require(worst <= 1e-9, "deviation");
        o.detail << "max deviation " << worst << " over 10000 points";
    });

    criterion(3, "tight surgery plans for small coprime pairs", 10.0, [](Outcome& o) {
        int spec_set = 0, all = 0;
        for (long long p = -20; p <= 20; ++p)
            for (long long q = -20; q <= 20; ++q) {
                if (p == 0 || std::gcd(p, q) != 1) continue;
                const SurgeryPlan plan = plan_tight_surgery(p, q);
                const SurgeryMatrix& a = plan.matrix;
                const bool ok = a.p * a.t - a.q * a.s == 1 && plan.rbar > 0.0 && plan.n_slope < 0.0 &&
                                verify_gluing(plan).passed();
                o.require(ok, "pair " + std::to_string(p) + "," + std::to_string(q));
                ++all;
                if (p >= 2 && std::llabs(q) < p) ++spec_set;
            }
        bool zero_rejected = false;
        try {
            plan_tight_surgery(0, 1);
        } catch (const SearchExhausted&) {
            zero_rejected = true;
        }
        o.require(spec_set == 254, "254-pair set");
        o.detail << spec_set << " pairs with 2<=p<=20, 1<=|q|<p; " << all << " pairs with p != 0, |p|,|q| <= 20; "
                 << "p = 0 reported as SearchExhausted: " << (zero_rejected ? "yes" : "no");
    });

    criterion(4, "exact slope formulas for (-2,1,1,-1)", 0.0, [](Outcome& o) {
        const SurgeryMatrix a{-2, 1, 1, -1};
        const Rational n = transformed_foliation_slope(a, make_rational(-3, 4));
        const Rational rb = transformed_reeb_slope(a, make_rational(3, 1));
        o.require(n == make_rational(-2, 1), "n(-3/4)");
        o.require(rb == make_rational(5, 4), "rbar(3)");
        o.detail << "n(-3/4) = " << to_string(n) << ", rbar(3) = " << to_string(rb);
    });

    criterion(5, "Euler class q + 1", 0.0, [](Outcome& o) {
        for (long long q = -5; q <= 5; ++q) o.require(euler_class(q) == q + 1, "q=" + std::to_string(q));
        o.detail << "q in [-5, 5]";
    });

    criterion(6, "branched-cover scaling identity", 30.0, [](Outcome& o) {
        const ModelTorusForm model = alpha_r(std::numbers::sqrt2);
        const auto& c = model.form.coeffs();
        const Grid grid{{GridAxis{0.0, kPi / 2 - 0.05, 40}, GridAxis{0.0, kTwoPi, 12}, GridAxis{0.0, kTwoPi, 12}}};
        double worst = 0.0;
        int cases = 0;
        for (long long m = 1; m <= 4; ++m)
            for (long long l = 1; l <= 4; ++l)
                for (long long k = -3; k <= 3; ++k) {
                    const ScalingReport s = verify_contact_scaling(c[1], c[2], c[0], {m, k, l}, grid);
                    o.require(s.passed(), "m,k,l=" + std::to_string(m) + "," + std::to_string(k) + "," + std::to_string(l));
                    worst = std::max(worst, s.max_rel_error);
                    ++cases;
                }
        o.detail << cases << " cases, max relative deviation " << worst;
    });

    criterion(7, "T3 elliptic orbit", 5.0, [](Outcome& o) {
        const FlowSpec f = FlowSpec::field(t3_example().model_field);
        const OrbitRecord r = find_periodic_orbit(f, {kPi / 2, 0.1, 0.05});
        o.require(std::abs(r.period - 2 * kPi / 3) <= 1e-6, "period");
        o.require(r.winding == Winding{0, 1, 0}, "winding");
        o.require(r.type == OrbitType::Elliptic, "classification");
        for (const auto& m : r.multipliers) o.require(std::abs(std::abs(m) - 1.0) <= 1e-6, "unit circle");
        o.require(std::abs(r.point[0] - kPi / 2) <= 1e-6 && std::abs(r.point[2]) <= 1e-6, "curve x = pi/2, z = 0");
        o.detail << "period " << r.period << ", winding (" << r.winding[0] << "," << r.winding[1] << "," << r.winding[2]
                 << "), |lambda| = " << std::abs(r.multipliers[0]) << ", " << to_string(r.type);
        all_orbits.push_back(r);
    });

    criterion(8, "rotation numbers 1/r^2 on alpha_r tori", 0.0, [](Outcome& o) {
        for (double r2 : {2.0, 3.0, std::numbers::phi}) {
            const FlowSpec f = FlowSpec::reeb(alpha_r_squared(r2).form);
            double lo = 1e9, hi = -1e9;
            for (double rho : {0.3, 0.6, 0.9, 1.2}) {
                const RotationResult rot = rotation_number(f, {rho, 0.0, 0.0}, 100);
                o.require(std::abs(rot.value - 1.0 / r2) <= 1e-6, "value r2=" + std::to_string(r2));
                lo = std::min(lo, rot.value);
                hi = std::max(hi, rot.value);
                max_torus_drift = std::max(max_torus_drift, rot.max_drift);
            }
            o.require(hi - lo <= 1e-6, "seed independence");
            o.detail << "r2=" << r2 << " spread " << hi - lo << "; ";
        }
    });

    criterion(9, "standard tube slope at rho = sqrt 2", 0.0, [](Outcome& o) {
        const Rational s = tube_char_slope_exact(make_rational(2, 1));
        o.require(s == make_rational(-2, 1), "slope");
        o.detail << "slope " << to_string(s);
    });

    criterion(10, "perturbation validity", 0.0, [](Outcome& o) {
        const auto rho = ScalarField::coordinate(0);
        const auto th = ScalarField::coordinate(1);
        const EquivariantPerturbation e = equivariant_perturbation(1.0 + rho * sin(th), BumpFunction(0.1, 0.3));
        o.require(e.report.valid(), "equivariant report");
        o.require(e.report.min_g > 0.5, "g > 0.5");
        o.require(e.report.min_numerator > 0.5, "2g + rho g_rho > 0.5");
        const OneForm tube = standard_tube_form();
        const OneForm beta = pullback(branch_map({2, 0, 1}, true, tube.chart()), tube);
        const HyperbolicPerturbation h = hyperbolic_perturbation(beta, BumpFunction(0.2, 0.4), 0.1);
        o.require(h.report.valid() && h.report.epsilon && *h.report.epsilon >= 0.05, "epsilon >= 0.05");
        o.require(h.report.min_wedge > 0.0 && h.report.axis_margin && *h.report.axis_margin > 0.0, "contact margin");
        o.detail << "min g " << e.report.min_g << ", min numerator " << e.report.min_numerator << ", epsilon "
                 << h.report.epsilon.value_or(-1) << ", margin " << h.report.min_wedge;
    });

    criterion(11, "cross-cutting invariants", 0.0, [](Outcome& o) {
        testing::RandomFields gen(2718);
        const Chart c = testing::euclidean_chart();
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const ChartMap map(c, c, {gen.field(3), gen.field(3), gen.field(3)});
            const OneForm f(c, {gen.field(3), gen.field(3), gen.field(3)});
            const Vec3 x = gen.point();
            const TwoFormValue lhs = eval_exterior_derivative(pullback(map, f), x);
            const TwoFormValue rhs = pullback(map.jacobian(x), eval_exterior_derivative(f, map.apply(x)));
            const double scale = std::max(1.0, rhs.max_abs());
            for (int i = 0; i < 3; ++i)
                for (int j = i + 1; j < 3; ++j) worst = std::max(worst, std::abs(lhs(i, j) - rhs(i, j)) / scale);
        }
        o.require(worst <= 1e-8, "pullback commutes with d");

        // Every orbit the searches detect.
        const T3Form t3 = t3_example();
        std::vector<Vec3> seeds;
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) seeds.push_back({(i + 0.5) * kTwoPi / 8, 0.0, (j + 0.5) * kTwoPi / 8});
        // find_orbits skips seeds whose classification rejects the product; count those here.
        int rejected = 0;
        for (const FlowSpec& f : {FlowSpec::field(t3.model_field), FlowSpec::reeb(t3.form)}) {
            for (const auto& s : seeds) {
                try {
                    find_periodic_orbit(f, s);
                } catch (const InvalidArgument&) {
                    ++rejected;
                } catch (const Error&) {
                }
            }
            for (const auto& r : find_orbits(f, seeds)) all_orbits.push_back(r);
        }
        for (double r2 : {std::numbers::sqrt2, std::numbers::phi}) {
            all_orbits.push_back(find_periodic_orbit(FlowSpec::reeb(alpha_r_squared(r2).form), {0.0, 0.0, 0.0}));
            all_orbits.push_back(find_periodic_orbit(FlowSpec::reeb(alpha_r_opposite_core(r2).form), {0.0, 0.0, 0.0}));
        }
        all_orbits.push_back(find_periodic_orbit(FlowSpec::field(hyperbolic_control_field()), {1.05, 0.0, 0.02}));
        double product = 0.0;
        for (const auto& r : all_orbits) product = std::max(product, std::abs(r.multipliers[0] * r.multipliers[1] - 1.0));
        o.require(product <= 1e-6 && rejected == 0, "multiplier product");

        if (max_torus_drift == 0.0) {
            const FlowSpec f = FlowSpec::reeb(alpha_r_squared(2.0).form);
            for (double rho : {0.3, 0.6, 0.9, 1.2})
                max_torus_drift = std::max(max_torus_drift, rotation_number(f, {rho, 0.0, 0.0}, 100).max_drift);
        }
        o.require(max_torus_drift <= 1e-7, "torus drift");
        o.detail << "pullback/d deviation " << worst << "; " << all_orbits.size() << " orbits, max |l1 l2 - 1| " << product << ", rejected " << rejected
                 << "; max rho drift over 100 periods " << max_torus_drift;
    });

    std::printf("%s: %d of 11 criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
