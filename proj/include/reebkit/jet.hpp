#ifndef REEBKIT_JET_HPP
#define REEBKIT_JET_HPP

// Forward-mode derivative propagation in three variables.
//
// Jet1 carries value and gradient, Jet2 additionally the six independent
// second partials (00, 01, 02, 11, 12, 22). Every elementary function is
// applied through the chain rule of its scalar derivatives, so results are
// exact up to rounding.

#include <array>
#include <cmath>
#include <cstddef>
#include <type_traits>

namespace reebkit {

using Vec3 = std::array<double, 3>;

/// Index of the (i, j) entry in the packed symmetric Hessian.
constexpr std::size_t hess_index(std::size_t i, std::size_t j) {
    if (i > j) {
        std::size_t t = i;
        i = j;
        j = t;
    }
    constexpr std::size_t offset[3] = {0, 3, 5};
    return offset[i] + (j - i);
}

struct Jet1 {
    double v = 0.0;
    Vec3 g{};

    static Jet1 constant(double c) { return Jet1{c, {}}; }
    static Jet1 variable(double x, std::size_t i) {
        Jet1 j{x, {}};
        j.g[i] = 1.0;
        return j;
    }

    /// phi(this) given phi, phi', phi'' at the current value.
    Jet1 chain(double f0, double f1, double /*f2*/) const {
        Jet1 r{f0, {}};
        for (std::size_t i = 0; i < 3; ++i) r.g[i] = f1 * g[i];
        return r;
    }

    friend Jet1 operator+(const Jet1& a, const Jet1& b) {
        Jet1 r{a.v + b.v, {}};
        for (std::size_t i = 0; i < 3; ++i) r.g[i] = a.g[i] + b.g[i];
        return r;
    }
    friend Jet1 operator-(const Jet1& a, const Jet1& b) {
        Jet1 r{a.v - b.v, {}};
        for (std::size_t i = 0; i < 3; ++i) r.g[i] = a.g[i] - b.g[i];
        return r;
    }
    friend Jet1 operator-(const Jet1& a) {
        Jet1 r{-a.v, {}};
        for (std::size_t i = 0; i < 3; ++i) r.g[i] = -a.g[i];
        return r;
    }
    friend Jet1 operator*(const Jet1& a, const Jet1& b) {
        Jet1 r{a.v * b.v, {}};
        for (std::size_t i = 0; i < 3; ++i) r.g[i] = a.v * b.g[i] + b.v * a.g[i];
        return r;
    }
};

struct Jet2 {
    double v = 0.0;
    Vec3 g{};
    std::array<double, 6> h{};

    static Jet2 constant(double c) { return Jet2{c, {}, {}}; }
    static Jet2 variable(double x, std::size_t i) {
        Jet2 j{x, {}, {}};
        j.g[i] = 1.0;
        return j;
    }

    double hessian(std::size_t i, std::size_t j) const { return h[hess_index(i, j)]; }

    Jet2 chain(double f0, double f1, double f2) const {
        Jet2 r{f0, {}, {}};
        for (std::size_t i = 0; i < 3; ++i) r.g[i] = f1 * g[i];
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = i; j < 3; ++j) {
                const std::size_t k = hess_index(i, j);
                r.h[k] = f1 * h[k] + f2 * g[i] * g[j];
            }
        return r;
    }

    friend Jet2 operator+(const Jet2& a, const Jet2& b) {
        Jet2 r{a.v + b.v, {}, {}};
        for (std::size_t i = 0; i < 3; ++i) r.g[i] = a.g[i] + b.g[i];
        for (std::size_t k = 0; k < 6; ++k) r.h[k] = a.h[k] + b.h[k];
        return r;
    }
    friend Jet2 operator-(const Jet2& a, const Jet2& b) {
        Jet2 r{a.v - b.v, {}, {}};
        for (std::size_t i = 0; i < 3; ++i) r.g[i] = a.g[i] - b.g[i];
        for (std::size_t k = 0; k < 6; ++k) r.h[k] = a.h[k] - b.h[k];
        return r;
    }
    friend Jet2 operator-(const Jet2& a) {
        Jet2 r{-a.v, {}, {}};
        for (std::size_t i = 0; i < 3; ++i) r.g[i] = -a.g[i];
        for (std::size_t k = 0; k < 6; ++k) r.h[k] = -a.h[k];
        return r;
    }
    friend Jet2 operator*(const Jet2& a, const Jet2& b) {
        Jet2 r{a.v * b.v, {}, {}};
        for (std::size_t i = 0; i < 3; ++i) r.g[i] = a.v * b.g[i] + b.v * a.g[i];
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = i; j < 3; ++j) {
                const std::size_t k = hess_index(i, j);
                r.h[k] = a.v * b.h[k] + b.v * a.h[k] + a.g[i] * b.g[j] + a.g[j] * b.g[i];
            }
        return r;
    }
};

// Uniform access so the expression evaluator can be written once.
inline double value_of(double x) { return x; }
inline double value_of(const Jet1& x) { return x.v; }
inline double value_of(const Jet2& x) { return x.v; }

template <class T>
T lift_constant(double c) {
    if constexpr (std::is_same_v<T, double>) {
        return c;
    } else {
        return T::constant(c);
    }
}

template <class T>
T lift_variable(double x, std::size_t i) {
    if constexpr (std::is_same_v<T, double>) {
        return x;
    } else {
        return T::variable(x, i);
    }
}

template <class T>
T apply_chain(const T& x, double f0, double f1, double f2) {
    if constexpr (std::is_same_v<T, double>) {
        return f0;
    } else {
        return x.chain(f0, f1, f2);
    }
}

} // namespace reebkit

#endif
