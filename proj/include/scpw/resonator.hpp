#pragma once

#include "scpw/types.hpp"

namespace scpw {

/// Quarter-wave resonance frequency f = 1 / (4 l sqrt(C L)) for a line of
/// length l with total inductance L per unit length.
double quarter_wave_frequency(double length, double c_per_len, double l_per_len);

/// Length that puts the quarter-wave resonance at f_target. Exact inverse of
/// quarter_wave_frequency.
double solve_length(double f_target, double c_per_len, double l_per_len);

/// A single resonator evaluated at a fixed length: the frequency with the
/// kinetic term (f_full) and without it (f_geometric, same length).
struct ResonatorModel {
  CpwGeometry geom;  // length populated
  Material mat;
  TransmissionLine tl;
  double f_geometric = 0.0;  // [Hz], L_k = 0
  double f_full = 0.0;       // [Hz], L_k included
};

/// Evaluates a resonator whose geometry carries a length.
ResonatorModel resonator_at_length(const CpwGeometry& geom, const Material& mat);

/// Solves the length so that the kinetic-free frequency equals f_target
/// (the usual design flow: electromagnetic design ignores L_k).
ResonatorModel design_for_geometric_frequency(double f_target, CpwGeometry geom,
                                              const Material& mat);

/// Solves the length so that the frequency including L_k equals f_target.
ResonatorModel design_for_full_frequency(double f_target, CpwGeometry geom,
                                         const Material& mat);

/// f_full - f_geometric; negative whenever L_k > 0.
double frequency_shift(const ResonatorModel& model);

/// d f_full / d thickness at fixed length, by central finite difference with
/// relative step 1e-4. Exactly 0 when include_kinetic is false.
double thickness_sensitivity(const ResonatorModel& model, bool include_kinetic = true);

}  // namespace scpw
