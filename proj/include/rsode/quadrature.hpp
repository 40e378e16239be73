#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace rsode {

/// Adaptive Gauss-Kronrod (61 points) on [a, b]; infinite bounds allowed.
template <class F>
[[nodiscard]] double integrate(F&& f, double a, double b, double rel_tol = 1e-10) {
    if (a == b) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, rel_tol);
}

}  // namespace rsode
