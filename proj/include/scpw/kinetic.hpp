#pragma once

#include "scpw/types.hpp"

namespace scpw {

/// Effective magnetic penetration depth of a film of thickness d,
///
///   lambda(d) = lambda0 * coth(d / lambda0).
///
/// Strictly decreasing in d; tends to lambda0 for thick films and to
/// lambda0^2 / d for very thin ones.
double effective_penetration_depth(double thickness, double lambda0);

/// Geometric factor of the thin-film CPW kinetic inductance,
///
///   g(s, w, d) = 1 / (2 k^2 K(k)^2) *
///                [ -ln(d / 4w) - k ln(d / 4(w + 2s))
///                  + (2 (w + s) / (w + 2s)) ln(s / (w + s)) ],
///
/// with k = w / (w + 2s). Dimensionless and scale invariant under
/// (s, w, d) -> (a s, a w, a d). Requires d < w.
double kinetic_geometry_factor(const CpwGeometry& geom);

/// Kinetic inductance per unit length,
///
///   L_k = mu0 * lambda^2 / (d w) * g(s, w, d),
///
/// with lambda the thickness-dependent effective penetration depth.
double kinetic_inductance(const CpwGeometry& geom, const Material& mat);

/// L_k / (L_m + L_k), strictly in (0, 1) for valid inputs.
double kinetic_fraction(const CpwGeometry& geom, const Material& mat);

struct KineticParams {
  double lambda_eff = 0.0;        // [m]
  double g_factor = 0.0;          // dimensionless
  double lk_per_len = 0.0;        // [H/m]
  double kinetic_fraction = 0.0;  // L_k / (L_m + L_k)
  // The thin-film expression assumes d < 2 lambda; outside that regime the
  // numbers are an extrapolation kept for guidance and flagged here.
  bool valid_thin_film = false;
};

KineticParams kinetic_params(const CpwGeometry& geom, const Material& mat);

/// Assembles the full per-unit-length line description. With
/// include_kinetic = false, lk_per_len is exactly 0.
TransmissionLine make_transmission_line(const CpwGeometry& geom, const Material& mat,
                                        bool include_kinetic = true);

}  // namespace scpw
