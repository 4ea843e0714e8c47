#ifndef REEBKIT_CHART_HPP
#define REEBKIT_CHART_HPP

#include "reebkit/errors.hpp"
#include "reebkit/jet.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>

namespace reebkit {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// A polar pair inside a chart: `radius` runs over [0, max) and the axis
/// radius == 0 is a coordinate singularity; `angle` is its periodic partner.
struct RadialAxis {
    int radius = 0;
    int angle = 1;
    std::optional<double> max;
};

/// Three named coordinates, each either periodic or not, with at most one
/// polar (radius, angle) pair.
class Chart {
public:
    Chart(std::string name, std::array<std::string, 3> coords, std::array<std::optional<double>, 3> periods,
          std::optional<RadialAxis> radial = std::nullopt)
        : name_(std::move(name)), coords_(std::move(coords)), periods_(periods), radial_(radial) {
        for (const auto& p : periods_)
            if (p && !(*p > 0.0)) throw InvalidArgument("chart periods must be positive");
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = i + 1; j < 3; ++j)
                if (coords_[i] == coords_[j]) throw InvalidArgument("chart coordinate names must differ");
        if (radial_) {
            const auto& r = *radial_;
            if (r.radius < 0 || r.radius > 2 || r.angle < 0 || r.angle > 2 || r.radius == r.angle)
                throw InvalidArgument("radial axis needs two distinct coordinate indices");
            if (periods_[static_cast<std::size_t>(r.radius)])
                throw InvalidArgument("a radial coordinate cannot be periodic");
            if (!periods_[static_cast<std::size_t>(r.angle)])
                throw InvalidArgument("the polar angle must be periodic");
            if (r.max && !(*r.max > 0.0)) throw InvalidArgument("radial maximum must be positive");
        }
    }

    /// (rho, theta, phi) with theta the meridional and phi the longitudinal angle.
    static Chart solid_torus(std::optional<double> rho_max = std::nullopt, std::string name = "solid_torus") {
        return Chart(std::move(name), {"rho", "theta", "phi"}, {std::nullopt, kTwoPi, kTwoPi},
                     RadialAxis{0, 1, rho_max});
    }

    static Chart three_torus(std::string name = "T3") {
        return Chart(std::move(name), {"x", "y", "z"}, {kTwoPi, kTwoPi, kTwoPi});
    }

    const std::string& name() const { return name_; }
    const std::array<std::string, 3>& coords() const { return coords_; }
    const std::optional<double>& period(int i) const { return periods_[static_cast<std::size_t>(i)]; }
    bool periodic(int i) const { return period(i).has_value(); }
    const std::optional<RadialAxis>& radial() const { return radial_; }

    bool is_polar_angle(int i) const { return radial_ && radial_->angle == i; }

    /// Index of `name` among the coordinates, or -1.
    int index_of(const std::string& name) const {
        for (int i = 0; i < 3; ++i)
            if (coords_[static_cast<std::size_t>(i)] == name) return i;
        return -1;
    }

    /// Radius of `x` on a polar chart, 1 otherwise: the factor by which the
    /// coordinate volume degenerates at the axis.
    double radial_weight(const Vec3& x) const {
        return radial_ ? x[static_cast<std::size_t>(radial_->radius)] : 1.0;
    }

    /// Reduce periodic coordinates into [0, period). Display only; all
    /// computation keeps unreduced values so windings survive.
    Vec3 reduced(Vec3 x) const {
        for (std::size_t i = 0; i < 3; ++i)
            if (periods_[i]) {
                x[i] = std::fmod(x[i], *periods_[i]);
                if (x[i] < 0) x[i] += *periods_[i];
            }
        return x;
    }

private:
    std::string name_;
    std::array<std::string, 3> coords_;
    std::array<std::optional<double>, 3> periods_;
    std::optional<RadialAxis> radial_;
};

} // namespace reebkit

#endif
