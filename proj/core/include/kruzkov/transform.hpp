#pragma once

#include <limits>

namespace kruzkov {

/// Marker for an infinite value (V = +inf, i.e. x outside Dom(V)).
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Psi(v) = 1 - exp(-v), mapping [0, +inf] onto [0, 1]. Throws DomainError
/// for negative v.
double kruzkov(double v);

/// Psi^{-1}(W) = -log(1 - W); returns kInfinity for W >= 1 - tol_dom.
/// Throws DomainError for W outside [0, 1].
double inv_kruzkov(double W, double tol_dom = 1e-6);

}  // namespace kruzkov
