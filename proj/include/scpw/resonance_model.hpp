#pragma once

#include <cmath>
#include <complex>

namespace scpw {

/// Notch-type resonance description used both to synthesize traces and as
/// the fit target. phi is the impedance-mismatch angle of the complex
/// coupling quality factor Qc_hat = Qc exp(-i phi).
struct NotchParams {
  double f0 = 0.0;          // [Hz]
  double q_internal = 0.0;  // Qi
  double q_coupling = 0.0;  // |Qc|
  double phi = 0.0;         // [rad]
};

/// Loaded quality factor: 1/Q = 1/Qi + cos(phi)/Qc.
inline double loaded_q(double q_internal, double q_coupling, double phi) {
  return 1.0 / (1.0 / q_internal + std::cos(phi) / q_coupling);
}

/// Internal quality factor defined by 1/Qi = 1/Q - cos(phi)/Qc.
inline double internal_q(double q_loaded, double q_coupling, double phi) {
  return 1.0 / (1.0 / q_loaded - std::cos(phi) / q_coupling);
}

/// Transmission past a notch resonator:
///
///   S21(f) = 1 - (Q / Qc) e^{i phi} / (1 + 2 i Q (f - f0) / f0)
inline std::complex<double> notch_s21(double f, double f0, double q_loaded,
                                      double q_coupling, double phi) {
  const std::complex<double> numer =
      (q_loaded / q_coupling) * std::polar(1.0, phi);
  const std::complex<double> denom(1.0, 2.0 * q_loaded * (f - f0) / f0);
  return 1.0 - numer / denom;
}

inline std::complex<double> notch_s21(double f, const NotchParams& p) {
  const double q = loaded_q(p.q_internal, p.q_coupling, p.phi);
  return notch_s21(f, p.f0, q, p.q_coupling, p.phi);
}

}  // namespace scpw
