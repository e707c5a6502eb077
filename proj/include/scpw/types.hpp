#pragma once

namespace scpw {

/// Cross section of a coplanar waveguide plus (optionally) the resonator
/// length. All lengths are in meters. `width` is the center conductor,
/// `gap` the spacing to each ground plane, `thickness` the film thickness.
struct CpwGeometry {
  double width = 0.0;
  double gap = 0.0;
  double thickness = 0.0;
  double length = 0.0;  // 0 means unset; per-unit-length operations ignore it

  /// Conformal-mapping modulus k = w / (w + 2s), in (0, 1) for valid inputs.
  double modulus() const { return width / (width + 2.0 * gap); }

  /// Complementary modulus computed as sqrt((1-k)(1+k)) to keep precision
  /// for k near 1.
  double complementary_modulus() const;

  void validate(bool require_length = false) const;
};

/// Superconductor film and substrate parameters.
struct Material {
  double lambda0 = 0.0;      // bulk penetration depth [m]
  double eps_r = 1.0;        // substrate relative permittivity
  double temperature = 0.0;  // [K]

  void validate() const;
};

/// Per-unit-length transmission line parameters of a CPW cross section.
struct TransmissionLine {
  double c_per_len = 0.0;   // capacitance [F/m]
  double lm_per_len = 0.0;  // geometric inductance [H/m]
  double lk_per_len = 0.0;  // kinetic inductance [H/m], 0 in the geometric-only model

  double total_inductance() const { return lm_per_len + lk_per_len; }
  double kinetic_fraction() const { return lk_per_len / (lm_per_len + lk_per_len); }
  double phase_velocity() const;
};

}  // namespace scpw
