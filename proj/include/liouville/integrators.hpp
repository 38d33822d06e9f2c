#pragma once

#include <cmath>
#include <complex>
#include <vector>

namespace liouville {

using CVec = std::vector<std::complex<double>>;

inline CVec axpy(const CVec& y, double h, const CVec& k) {
    CVec r(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) r[i] = y[i] + h * k[i];
    return r;
}

/// One classic fourth-order Runge-Kutta step for y' = f(t, y).
template <class F>
CVec rk4_step(const F& f, double t, const CVec& y, double h) {
    const CVec k1 = f(t, y);
    const CVec k2 = f(t + 0.5 * h, axpy(y, 0.5 * h, k1));
    const CVec k3 = f(t + 0.5 * h, axpy(y, 0.5 * h, k2));
    const CVec k4 = f(t + h, axpy(y, h, k3));
    CVec r(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) r[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return r;
}

inline bool all_finite(const CVec& y) {
    for (const auto& c : y)
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
    return true;
}

/// Number of fixed steps of size dt covering [0, t_end]; the last step is shortened
/// only when t_end is not a multiple of dt.
inline std::size_t step_count(double dt, double t_end) {
    const double n = t_end / dt;
    const double rounded = std::round(n);
    if (std::abs(n - rounded) < 1e-9 * std::max(1.0, n)) return static_cast<std::size_t>(rounded);
    return static_cast<std::size_t>(std::ceil(n));
}

}  // namespace liouville
