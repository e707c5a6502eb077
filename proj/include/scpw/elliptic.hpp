#pragma once

namespace scpw {

/// Complete elliptic integral of the first kind,
///
///   K(k) = int_0^{pi/2} dtheta / sqrt(1 - k^2 sin^2(theta)).
///
/// The argument is the MODULUS k, not the parameter m = k^2. Mixing the two
/// conventions is a classic source of silent errors; callers holding a
/// parameter m must pass sqrt(m).
///
/// Computed by the arithmetic-geometric mean, accurate to better than 1e-14
/// relative over [0, 0.999]. Throws DomainError for k < 0, k >= 1, or NaN.
double elliptic_k(double modulus);

}  // namespace scpw
