#ifndef REEBKIT_SCALAR_FIELD_HPP
#define REEBKIT_SCALAR_FIELD_HPP

// Closed-form scalar fields over the three coordinates of a chart.
//
// A ScalarField is an immutable expression tree (shared, so copies are cheap
// and safe across threads). It evaluates to a plain value, to a Jet1 (value
// and gradient) or to a Jet2 (value, gradient, Hessian). Symbolic
// differentiation and substitution exist for constructions that need a new
// field (pullbacks, Taylor splits); numerical derivatives always go through
// the jets.

#include "reebkit/errors.hpp"
#include "reebkit/jet.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

namespace reebkit {

namespace detail {

enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Sin, Cos, Tan, Bump };

struct Node {
    Op op = Op::Const;
    double value = 0.0;  // Const
    int index = 0;       // Var
    int exponent = 0;    // Pow
    double r0 = 0.0;     // Bump: flat-one radius
    double r1 = 0.0;     // Bump: zero radius
    int order = 0;       // Bump: derivative order
    std::shared_ptr<const Node> a;
    std::shared_ptr<const Node> b;
};

using NodePtr = std::shared_ptr<const Node>;

constexpr double kDivisionFloor = 1e-14;
constexpr double kPoleFloor = 1e-12;

/// k-th derivative of the quintic step 10t^3 - 15t^4 + 6t^5 at t.
inline double smoothstep_derivative(int k, double t) {
    std::array<double, 6> c{0.0, 0.0, 0.0, 10.0, -15.0, 6.0};
    for (int d = 0; d < k; ++d) {
        for (std::size_t i = 0; i + 1 < c.size(); ++i) c[i] = c[i + 1] * static_cast<double>(i + 1);
        c.back() = 0.0;
    }
    double r = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) r = r * t + c[i];
    return r;
}

/// k-th derivative of the C^2 bump that is 1 on [0, r0] and 0 on [r1, inf).
inline double bump_derivative(int k, double u, double r0, double r1) {
    if (u <= r0) return k == 0 ? 1.0 : 0.0;
    if (u >= r1) return 0.0;
    const double w = r1 - r0;
    const double t = (u - r0) / w;
    const double s = smoothstep_derivative(k, t);
    return (k == 0 ? 1.0 - s : -s / std::pow(w, k));
}

inline double checked(double x, const char* what) {
    if (!std::isfinite(x)) throw SingularEvaluation(std::string("non-finite value in ") + what);
    return x;
}

template <class T>
T eval_node(const Node& n, const std::array<T, 3>& vars) {
    switch (n.op) {
    case Op::Const:
        return lift_constant<T>(n.value);
    case Op::Var:
        return vars[static_cast<std::size_t>(n.index)];
    case Op::Add:
        return eval_node(*n.a, vars) + eval_node(*n.b, vars);
    case Op::Sub:
        return eval_node(*n.a, vars) - eval_node(*n.b, vars);
    case Op::Neg:
        return -eval_node(*n.a, vars);
    case Op::Mul:
        return eval_node(*n.a, vars) * eval_node(*n.b, vars);
    case Op::Div: {
        const T num = eval_node(*n.a, vars);
        const T den = eval_node(*n.b, vars);
        const double d = value_of(den);
        if (!(std::abs(d) >= kDivisionFloor)) throw SingularEvaluation("division by ~0");
        return num * apply_chain(den, 1.0 / d, -1.0 / (d * d), 2.0 / (d * d * d));
    }
    case Op::Pow: {
        const T base = eval_node(*n.a, vars);
        const double x = value_of(base);
        const int e = n.exponent;
        if (e < 0 && std::abs(x) < kDivisionFloor) throw SingularEvaluation("negative power of ~0");
        auto ipow = [x](int k) { return k == 0 ? 1.0 : std::pow(x, k); };
        const double f0 = ipow(e);
        const double f1 = e == 0 ? 0.0 : e * ipow(e - 1);
        const double f2 = (e == 0 || e == 1) ? 0.0 : e * (e - 1) * ipow(e - 2);
        return apply_chain(base, checked(f0, "power"), f1, f2);
    }
    case Op::Sin: {
        const T u = eval_node(*n.a, vars);
        const double s = std::sin(value_of(u));
        return apply_chain(u, s, std::cos(value_of(u)), -s);
    }
    case Op::Cos: {
        const T u = eval_node(*n.a, vars);
        const double c = std::cos(value_of(u));
        return apply_chain(u, c, -std::sin(value_of(u)), -c);
    }
    case Op::Tan: {
        const T u = eval_node(*n.a, vars);
        const double c = std::cos(value_of(u));
        if (std::abs(c) < kPoleFloor) throw SingularEvaluation("tan at a pole");
        const double t = std::tan(value_of(u));
        const double sec2 = 1.0 + t * t;
        return apply_chain(u, t, sec2, 2.0 * t * sec2);
    }
    case Op::Bump: {
        const T u = eval_node(*n.a, vars);
        const double x = value_of(u);
        return apply_chain(u, bump_derivative(n.order, x, n.r0, n.r1),
                           bump_derivative(n.order + 1, x, n.r0, n.r1),
                           bump_derivative(n.order + 2, x, n.r0, n.r1));
    }
    }
    throw Error("corrupt expression node");
}

} // namespace detail

class ScalarField {
public:
    /// The zero field.
    ScalarField() : ScalarField(0.0) {}
    ScalarField(double c) : node_(make_const(c)) {}  // NOLINT: implicit by intent

    static ScalarField constant(double c) { return ScalarField(c); }

    static ScalarField coordinate(int i) {
        if (i < 0 || i > 2) throw InvalidArgument("coordinate index must be 0, 1 or 2");
        auto n = std::make_shared<detail::Node>();
        n->op = detail::Op::Var;
        n->index = i;
        return ScalarField(std::move(n));
    }

    /// C^2 bump of `arg`: 1 for arg <= r0, 0 for arg >= r1, quintic smoothstep between.
    static ScalarField bump(const ScalarField& arg, double r0, double r1, int order = 0) {
        if (!(r0 > 0.0 && r1 > r0)) throw InvalidArgument("bump needs 0 < r0 < r1");
        auto n = std::make_shared<detail::Node>();
        n->op = detail::Op::Bump;
        n->a = arg.node_;
        n->r0 = r0;
        n->r1 = r1;
        n->order = order;
        return ScalarField(std::move(n));
    }

    bool is_constant() const { return node_->op == detail::Op::Const; }
    double constant_value() const { return node_->value; }

    template <class T>
    T evaluate_with(const std::array<T, 3>& vars) const {
        return detail::eval_node(*node_, vars);
    }

    double value(const Vec3& x) const { return evaluate_with<double>(x); }

    Jet1 jet1(const Vec3& x) const {
        return evaluate_with<Jet1>({Jet1::variable(x[0], 0), Jet1::variable(x[1], 1), Jet1::variable(x[2], 2)});
    }

    Jet2 jet2(const Vec3& x) const {
        return evaluate_with<Jet2>({Jet2::variable(x[0], 0), Jet2::variable(x[1], 1), Jet2::variable(x[2], 2)});
    }

    /// Symbolic partial derivative with respect to coordinate i.
    ScalarField derivative(int i) const { return ScalarField(differentiate(node_, i)); }

    /// Replace coordinate j by replacement[j] everywhere.
    ScalarField substitute(const std::array<ScalarField, 3>& replacement) const {
        return ScalarField(subst(node_, replacement));
    }

    bool depends_on(int i) const { return depends(node_, i); }

    std::string to_string(const std::array<std::string, 3>& names = {"x0", "x1", "x2"}) const {
        return print(node_, names, 0);
    }

    friend ScalarField operator+(const ScalarField& a, const ScalarField& b) {
        if (a.is_zero()) return b;
        if (b.is_zero()) return a;
        if (a.is_constant() && b.is_constant()) return a.constant_value() + b.constant_value();
        return binary(detail::Op::Add, a, b);
    }
    friend ScalarField operator-(const ScalarField& a, const ScalarField& b) {
        if (b.is_zero()) return a;
        if (a.is_zero()) return -b;
        if (a.is_constant() && b.is_constant()) return a.constant_value() - b.constant_value();
        return binary(detail::Op::Sub, a, b);
    }
    friend ScalarField operator-(const ScalarField& a) {
        if (a.is_constant()) return -a.constant_value();
        if (a.node_->op == detail::Op::Neg) return ScalarField(a.node_->a);
        auto n = std::make_shared<detail::Node>();
        n->op = detail::Op::Neg;
        n->a = a.node_;
        return ScalarField(std::move(n));
    }
    friend ScalarField operator*(const ScalarField& a, const ScalarField& b) {
        if (a.is_zero() || b.is_zero()) return 0.0;
        if (a.is_one()) return b;
        if (b.is_one()) return a;
        if (a.is_constant() && b.is_constant()) return a.constant_value() * b.constant_value();
        return binary(detail::Op::Mul, a, b);
    }
    friend ScalarField operator/(const ScalarField& a, const ScalarField& b) {
        if (b.is_zero()) throw SingularEvaluation("division by the zero field");
        if (a.is_zero()) return 0.0;
        if (b.is_one()) return a;
        if (a.is_constant() && b.is_constant()) return a.constant_value() / b.constant_value();
        return binary(detail::Op::Div, a, b);
    }

    friend ScalarField pow(const ScalarField& a, int e) {
        if (e == 0) return 1.0;
        if (e == 1) return a;
        if (a.is_constant()) return std::pow(a.constant_value(), e);
        auto n = std::make_shared<detail::Node>();
        n->op = detail::Op::Pow;
        n->a = a.node_;
        n->exponent = e;
        return ScalarField(std::move(n));
    }
    friend ScalarField sin(const ScalarField& a) { return unary(detail::Op::Sin, a); }
    friend ScalarField cos(const ScalarField& a) { return unary(detail::Op::Cos, a); }
    friend ScalarField tan(const ScalarField& a) { return unary(detail::Op::Tan, a); }

private:
    using NodePtr = detail::NodePtr;
    using Op = detail::Op;

    explicit ScalarField(NodePtr n) : node_(std::move(n)) {}

    static NodePtr make_const(double c) {
        auto n = std::make_shared<detail::Node>();
        n->op = Op::Const;
        n->value = c;
        return n;
    }

    bool is_zero() const { return is_constant() && constant_value() == 0.0; }
    bool is_one() const { return is_constant() && constant_value() == 1.0; }

    static ScalarField binary(Op op, const ScalarField& a, const ScalarField& b) {
        auto n = std::make_shared<detail::Node>();
        n->op = op;
        n->a = a.node_;
        n->b = b.node_;
        return ScalarField(std::move(n));
    }

    static ScalarField unary(Op op, const ScalarField& a) {
        if (a.is_constant()) {
            const double x = a.constant_value();
            switch (op) {
            case Op::Sin: return std::sin(x);
            case Op::Cos: return std::cos(x);
            case Op::Tan:
                if (std::abs(std::cos(x)) < detail::kPoleFloor) throw SingularEvaluation("tan at a pole");
                return std::tan(x);
            default: break;
            }
        }
        auto n = std::make_shared<detail::Node>();
        n->op = op;
        n->a = a.node_;
        return ScalarField(std::move(n));
    }

    static NodePtr differentiate(const NodePtr& n, int i) {
        const ScalarField a = n->a ? ScalarField(n->a) : ScalarField();
        const ScalarField b = n->b ? ScalarField(n->b) : ScalarField();
        auto da = [&] { return a.derivative(i); };
        auto db = [&] { return b.derivative(i); };
        switch (n->op) {
        case Op::Const: return make_const(0.0);
        case Op::Var: return make_const(n->index == i ? 1.0 : 0.0);
        case Op::Add: return (da() + db()).node_;
        case Op::Sub: return (da() - db()).node_;
        case Op::Neg: return (-da()).node_;
        case Op::Mul: return (da() * b + a * db()).node_;
        case Op::Div: return (da() / b - a * db() / pow(b, 2)).node_;
        case Op::Pow: return (static_cast<double>(n->exponent) * pow(a, n->exponent - 1) * da()).node_;
        case Op::Sin: return (cos(a) * da()).node_;
        case Op::Cos: return (-(sin(a) * da())).node_;
        case Op::Tan: return ((1.0 + pow(tan(a), 2)) * da()).node_;
        case Op::Bump: return (bump(a, n->r0, n->r1, n->order + 1) * da()).node_;
        }
        throw Error("corrupt expression node");
    }

    static NodePtr subst(const NodePtr& n, const std::array<ScalarField, 3>& r) {
        const auto sa = [&] { return ScalarField(subst(n->a, r)); };
        const auto sb = [&] { return ScalarField(subst(n->b, r)); };
        switch (n->op) {
        case Op::Const: return n;
        case Op::Var: return r[static_cast<std::size_t>(n->index)].node_;
        case Op::Add: return (sa() + sb()).node_;
        case Op::Sub: return (sa() - sb()).node_;
        case Op::Neg: return (-sa()).node_;
        case Op::Mul: return (sa() * sb()).node_;
        case Op::Div: return (sa() / sb()).node_;
        case Op::Pow: return pow(sa(), n->exponent).node_;
        case Op::Sin: return sin(sa()).node_;
        case Op::Cos: return cos(sa()).node_;
        case Op::Tan: return tan(sa()).node_;
        case Op::Bump: {
            const ScalarField arg = sa();
            if (arg.is_constant())
                return make_const(detail::bump_derivative(n->order, arg.constant_value(), n->r0, n->r1));
            return bump(arg, n->r0, n->r1, n->order).node_;
        }
        }
        throw Error("corrupt expression node");
    }

    static bool depends(const NodePtr& n, int i) {
        if (!n) return false;
        if (n->op == Op::Var) return n->index == i;
        return depends(n->a, i) || depends(n->b, i);
    }

    static std::string number(double x) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return buf;
    }

    // Precedence: 1 additive, 2 multiplicative, 3 unary minus, 4 power, 5 atom.
    static std::string print(const NodePtr& n, const std::array<std::string, 3>& names, int parent) {
        auto wrap = [parent](int prec, std::string s) { return prec < parent ? "(" + s + ")" : s; };
        switch (n->op) {
        case Op::Const: return n->value < 0 ? wrap(3, number(n->value)) : number(n->value);
        case Op::Var: return names[static_cast<std::size_t>(n->index)];
        case Op::Add: return wrap(1, print(n->a, names, 1) + " + " + print(n->b, names, 2));
        case Op::Sub: return wrap(1, print(n->a, names, 1) + " - " + print(n->b, names, 2));
        case Op::Mul: return wrap(2, print(n->a, names, 2) + "*" + print(n->b, names, 3));
        case Op::Div: return wrap(2, print(n->a, names, 2) + "/" + print(n->b, names, 3));
        case Op::Neg: return wrap(3, "-" + print(n->a, names, 3));
        case Op::Pow: return wrap(4, print(n->a, names, 5) + "^" + (n->exponent < 0 ? "-" : "") +
                                         std::to_string(std::abs(n->exponent)));
        case Op::Sin: return "sin(" + print(n->a, names, 0) + ")";
        case Op::Cos: return "cos(" + print(n->a, names, 0) + ")";
        case Op::Tan: return "tan(" + print(n->a, names, 0) + ")";
        case Op::Bump:
            return "bump(" + print(n->a, names, 0) + ", " + number(n->r0) + ", " + number(n->r1) +
                   (n->order ? ", " + std::to_string(n->order) : std::string()) + ")";
        }
        throw Error("corrupt expression node");
    }

    NodePtr node_;
};

} // namespace reebkit

#endif
