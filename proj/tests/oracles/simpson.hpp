#pragma once
// Adaptive Simpson quadrature, used as an independent check on Gauss-Kronrod results.

#include <cmath>
#include <functional>

namespace oracles {

namespace detail {
inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                           double whole, double tol, int depth) {
    const double m = 0.5 * (a + b), lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm), right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) return left + right + (left + right - whole) / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
} // namespace detail

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-13) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    return detail::simpson_step(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50);
}

} // namespace oracles
