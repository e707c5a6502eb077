#pragma once

#include "scpw/types.hpp"

namespace scpw {

/// Capacitance per unit length of a zero-thickness CPW on an infinite
/// substrate with vacuum above:
///
///   C = 2 eps0 (eps_r + 1) K(k) / K(k'),   k = w / (w + 2s).
///
/// The film thickness does not enter; C depends on (w, s) only through k.
double cpw_capacitance(const CpwGeometry& geom, const Material& mat);

/// Geometric (external magnetic) inductance per unit length:
///
///   L_m = (mu0 / 4) K(k') / K(k).
///
/// Together with cpw_capacitance this obeys C * L_m = eps_eff / c0^2 with
/// eps_eff = (eps_r + 1) / 2.
double cpw_geometric_inductance(const CpwGeometry& geom);

}  // namespace scpw
