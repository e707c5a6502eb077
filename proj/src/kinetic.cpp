#include "scpw/kinetic.hpp"

#include <cmath>

#include "scpw/constants.hpp"
#include "scpw/cpw.hpp"
#include "scpw/elliptic.hpp"
#include "scpw/errors.hpp"

namespace scpw {

double effective_penetration_depth(double thickness, double lambda0) {
  if (!(thickness > 0.0)) throw DomainError("effective_penetration_depth: thickness must be > 0");
  if (!(lambda0 > 0.0)) throw DomainError("effective_penetration_depth: lambda0 must be > 0");
  // coth(x) = 1 + 2 / (exp(2x) - 1), stable both for x >> 1 and x << 1.
  const double x = thickness / lambda0;
  return lambda0 * (1.0 + 2.0 / std::expm1(2.0 * x));
}

double kinetic_geometry_factor(const CpwGeometry& geom) {
  geom.validate();
  if (!(geom.thickness < geom.width)) {
    throw DomainError("kinetic_geometry_factor: requires thickness < width");
  }
  const double w = geom.width;
  const double s = geom.gap;
  const double d = geom.thickness;
  const double k = geom.modulus();
  const double kk = elliptic_k(k);
  const double bracket = -std::log(d / (4.0 * w)) - k * std::log(d / (4.0 * (w + 2.0 * s))) +
                         (2.0 * (w + s) / (w + 2.0 * s)) * std::log(s / (w + s));
  return bracket / (2.0 * k * k * kk * kk);
}

double kinetic_inductance(const CpwGeometry& geom, const Material& mat) {
  mat.validate();
  const double g = kinetic_geometry_factor(geom);
  const double lambda = effective_penetration_depth(geom.thickness, mat.lambda0);
  return constants::mu0 * lambda * lambda / (geom.thickness * geom.width) * g;
}

double kinetic_fraction(const CpwGeometry& geom, const Material& mat) {
  const double lk = kinetic_inductance(geom, mat);
  const double lm = cpw_geometric_inductance(geom);
  return lk / (lm + lk);
}

KineticParams kinetic_params(const CpwGeometry& geom, const Material& mat) {
  KineticParams p;
  p.lambda_eff = effective_penetration_depth(geom.thickness, mat.lambda0);
  p.g_factor = kinetic_geometry_factor(geom);
  p.lk_per_len = constants::mu0 * p.lambda_eff * p.lambda_eff /
                 (geom.thickness * geom.width) * p.g_factor;
  const double lm = cpw_geometric_inductance(geom);
  p.kinetic_fraction = p.lk_per_len / (lm + p.lk_per_len);
  p.valid_thin_film = geom.thickness < 2.0 * p.lambda_eff;
  return p;
}

TransmissionLine make_transmission_line(const CpwGeometry& geom, const Material& mat,
                                        bool include_kinetic) {
  TransmissionLine tl;
  tl.c_per_len = cpw_capacitance(geom, mat);
  tl.lm_per_len = cpw_geometric_inductance(geom);
  tl.lk_per_len = include_kinetic ? kinetic_inductance(geom, mat) : 0.0;
  return tl;
}

}  // namespace scpw
