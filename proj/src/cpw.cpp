#include "scpw/cpw.hpp"

#include "scpw/constants.hpp"
#include "scpw/elliptic.hpp"

namespace scpw {

double cpw_capacitance(const CpwGeometry& geom, const Material& mat) {
  geom.validate();
  mat.validate();
  const double k = geom.modulus();
  const double kp = geom.complementary_modulus();
  return 2.0 * constants::eps0 * (mat.eps_r + 1.0) * elliptic_k(k) / elliptic_k(kp);
}

double cpw_geometric_inductance(const CpwGeometry& geom) {
  geom.validate();
  const double k = geom.modulus();
  const double kp = geom.complementary_modulus();
  return 0.25 * constants::mu0 * elliptic_k(kp) / elliptic_k(k);
}

}  // namespace scpw
