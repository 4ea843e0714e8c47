#ifndef REEBKIT_RATIONAL_HPP
#define REEBKIT_RATIONAL_HPP

#include <boost/multiprecision/cpp_int.hpp>

#include <string>

namespace reebkit {

/// Exact arbitrary-precision rational, used for slope arithmetic.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

inline std::string to_string(const Rational& q) { return q.str(); }

inline Rational make_rational(long long num, long long den = 1) {
    return den < 0 ? Rational(BigInt(-num), BigInt(-den)) : Rational(BigInt(num), BigInt(den));
}

} // namespace reebkit

#endif
