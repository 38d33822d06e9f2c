#pragma once

#include <complex>

namespace liouville {

using cplx = std::complex<double>;
inline constexpr cplx kI{0.0, 1.0};

/// Forward-mode dual number over the complex field: value + eps * deriv, eps^2 = 0.
/// All model formulas are holomorphic in the fields, so one complex direction
/// gives the exact directional (complex) derivative.
struct Dual {
    cplx v{};
    cplx d{};

    Dual() = default;
    Dual(cplx value) : v(value) {}
    Dual(double value) : v(value) {}
    Dual(cplx value, cplx deriv) : v(value), d(deriv) {}

    Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
    Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
    Dual& operator*=(const Dual& o) { d = d * o.v + v * o.d; v *= o.v; return *this; }
    Dual& operator/=(const Dual& o) {
        d = (d * o.v - v * o.d) / (o.v * o.v);
        v /= o.v;
        return *this;
    }
};

inline Dual operator+(Dual a, const Dual& b) { return a += b; }
inline Dual operator-(Dual a, const Dual& b) { return a -= b; }
inline Dual operator*(Dual a, const Dual& b) { return a *= b; }
inline Dual operator/(Dual a, const Dual& b) { return a /= b; }
inline Dual operator-(const Dual& a) { return {-a.v, -a.d}; }

inline Dual operator+(Dual a, cplx b) { a.v += b; return a; }
inline Dual operator+(cplx b, Dual a) { a.v += b; return a; }
inline Dual operator-(Dual a, cplx b) { a.v -= b; return a; }
inline Dual operator-(cplx b, const Dual& a) { return {b - a.v, -a.d}; }
inline Dual operator*(Dual a, cplx b) { return {a.v * b, a.d * b}; }
inline Dual operator*(cplx b, Dual a) { return {a.v * b, a.d * b}; }
inline Dual operator/(Dual a, cplx b) { return {a.v / b, a.d / b}; }
inline Dual operator/(cplx b, const Dual& a) { return Dual(b) / a; }
inline Dual operator*(Dual a, double b) { return {a.v * b, a.d * b}; }
inline Dual operator*(double b, Dual a) { return {a.v * b, a.d * b}; }
inline Dual operator/(Dual a, double b) { return {a.v / b, a.d / b}; }
inline Dual operator+(Dual a, double b) { a.v += b; return a; }
inline Dual operator-(Dual a, double b) { a.v -= b; return a; }
inline Dual operator-(double b, const Dual& a) { return {b - a.v, -a.d}; }
inline Dual operator/(double b, const Dual& a) { return Dual(b) / a; }

inline Dual exp(const Dual& a) {
    const cplx e = std::exp(a.v);
    return {e, e * a.d};
}
inline Dual log(const Dual& a) { return {std::log(a.v), a.d / a.v}; }
inline Dual sinh(const Dual& a) { return {std::sinh(a.v), std::cosh(a.v) * a.d}; }
inline Dual cosh(const Dual& a) { return {std::cosh(a.v), std::sinh(a.v) * a.d}; }

inline cplx value_of(const cplx& a) { return a; }
inline cplx value_of(const Dual& a) { return a.v; }
inline cplx deriv_of(const Dual& a) { return a.d; }

}  // namespace liouville
