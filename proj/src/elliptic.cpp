#include "scpw/elliptic.hpp"

#include <cmath>
#include <numbers>

#include "scpw/errors.hpp"

namespace scpw {

double elliptic_k(double modulus) {
  if (!(modulus >= 0.0) || modulus >= 1.0) {
    throw DomainError("elliptic_k: modulus must lie in [0, 1)");
  }
  double a = 1.0;
  double b = std::sqrt((1.0 - modulus) * (1.0 + modulus));
  // AGM converges quadratically; 6 iterations suffice for any k <= 0.999,
  // the cap only guards pathological rounding cycles.
  for (int i = 0; i < 64 && std::abs(a - b) > 1e-17 * a; ++i) {
    const double am = 0.5 * (a + b);
    b = std::sqrt(a * b);
    a = am;
  }
  return std::numbers::pi / (2.0 * a);
}

}  // namespace scpw
