#include "scpw/resonator.hpp"

#include <cmath>

#include "scpw/errors.hpp"
#include "scpw/kinetic.hpp"

namespace scpw {

double quarter_wave_frequency(double length, double c_per_len, double l_per_len) {
  if (!(length > 0.0) || !(c_per_len > 0.0) || !(l_per_len > 0.0)) {
    throw DomainError("quarter_wave_frequency: all inputs must be > 0");
  }
  return 1.0 / (4.0 * length * std::sqrt(c_per_len * l_per_len));
}

double solve_length(double f_target, double c_per_len, double l_per_len) {
  if (!(f_target > 0.0) || !(c_per_len > 0.0) || !(l_per_len > 0.0)) {
    throw DomainError("solve_length: all inputs must be > 0");
  }
  return 1.0 / (4.0 * f_target * std::sqrt(c_per_len * l_per_len));
}

ResonatorModel resonator_at_length(const CpwGeometry& geom, const Material& mat) {
  geom.validate(/*require_length=*/true);
  ResonatorModel m;
  m.geom = geom;
  m.mat = mat;
  m.tl = make_transmission_line(geom, mat);
  m.f_geometric = quarter_wave_frequency(geom.length, m.tl.c_per_len, m.tl.lm_per_len);
  m.f_full = quarter_wave_frequency(geom.length, m.tl.c_per_len, m.tl.total_inductance());
  return m;
}

ResonatorModel design_for_geometric_frequency(double f_target, CpwGeometry geom,
                                              const Material& mat) {
  const TransmissionLine tl = make_transmission_line(geom, mat);
  geom.length = solve_length(f_target, tl.c_per_len, tl.lm_per_len);
  return resonator_at_length(geom, mat);
}

ResonatorModel design_for_full_frequency(double f_target, CpwGeometry geom,
                                         const Material& mat) {
  const TransmissionLine tl = make_transmission_line(geom, mat);
  geom.length = solve_length(f_target, tl.c_per_len, tl.total_inductance());
  return resonator_at_length(geom, mat);
}

double frequency_shift(const ResonatorModel& model) {
  return model.f_full - model.f_geometric;
}

double thickness_sensitivity(const ResonatorModel& model, bool include_kinetic) {
  const double d = model.geom.thickness;
  const double h = 1e-4 * d;
  CpwGeometry up = model.geom;
  CpwGeometry down = model.geom;
  up.thickness = d + h;
  down.thickness = d - h;
  const TransmissionLine tu = make_transmission_line(up, model.mat, include_kinetic);
  const TransmissionLine td = make_transmission_line(down, model.mat, include_kinetic);
  const double fu = quarter_wave_frequency(model.geom.length, tu.c_per_len, tu.total_inductance());
  const double fd = quarter_wave_frequency(model.geom.length, td.c_per_len, td.total_inductance());
  return (fu - fd) / (2.0 * h);
}

}  // namespace scpw
