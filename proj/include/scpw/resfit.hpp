#pragma once

#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "scpw/resonance_model.hpp"

namespace scpw {

/// One measured (or synthesized) S21 scan.
struct S21Trace {
  std::vector<double> freq;               // [Hz], strictly increasing
  std::vector<std::complex<double>> s21;  // same length as freq
  std::optional<double> power_dbm;        // drive power at the source, if known

  void validate() const;  // shape and ordering only
};

struct PreprocessOptions {
  /// Fraction of points at EACH end treated as off-resonance baseline.
  double wing_fraction = 0.1;
};

/// Removes the instrument baseline: an amplitude slope plus offset and a
/// cable-delay phase ramp, both fitted on the trace wings; the trace is
/// divided by the fitted baseline so |S21| is about 1 far from resonance.
S21Trace preprocess_trace(const S21Trace& trace, const PreprocessOptions& options = {});

struct ResonanceFit {
  double f0 = 0.0;
  double q_loaded = 0.0;
  double q_coupling = 0.0;  // |Qc|
  double phi = 0.0;
  double q_internal = 0.0;  // defined by 1/Qi = 1/Q - cos(phi)/Qc

  // One-standard-deviation uncertainties from the local covariance.
  double f0_err = 0.0;
  double q_loaded_err = 0.0;
  double q_coupling_err = 0.0;
  double phi_err = 0.0;
  double q_internal_err = 0.0;

  double residual_rms = 0.0;
};

struct FitResonanceOptions {
  PreprocessOptions preprocess;
  bool apply_preprocess = true;
};

/// Full complex fit of a notch resonance. Initial guesses come from the
/// trace itself (dip position, 3 dB width, dip depth); a residual complex
/// prefactor and delay left over from preprocessing are co-fitted and
/// discarded. Throws DataError when no dip is present and ConvergenceError
/// when the optimizer gives up.
ResonanceFit fit_resonance(const S21Trace& trace, const FitResonanceOptions& options = {});

/// Input attenuation chain between source and chip.
struct AttenuationChain {
  std::vector<std::pair<std::string, double>> stages;  // (label, dB)
  double cable_loss = 0.0;                             // dB

  void validate() const;
};

/// Power reaching the chip: source power minus every stage and cable loss.
double power_at_chip(double p_source_dbm, const AttenuationChain& chain);

/// Mean photon number stored in a notch resonator driven at resonance,
///
///   <n> = impedance_ratio * 2 Q^2 P / (Qc hbar omega0^2),
///
/// with P the on-chip drive power in watts. The impedance_ratio knob covers
/// line/resonator impedance mismatch corrections and defaults to 1.
double photon_number(double p_chip_dbm, double f0, double q_loaded, double q_coupling,
                     double impedance_ratio = 1.0);

/// One point of a power sweep: photon number, fitted Qi and its 1-sigma.
struct TlsPoint {
  double n_photon = 0.0;
  double q_internal = 0.0;
  double sigma_qi = 0.0;  // <= 0 means unweighted
};

struct TlsFit {
  double f_delta0 = 0.0;  // filling-factor times low-power TLS loss tangent
  double n_c = 0.0;       // critical photon number
  double q_others = 0.0;  // power-independent losses

  double f_delta0_err = 0.0;
  double n_c_err = 0.0;
  double q_others_err = 0.0;

  double temperature = 0.0;  // [K], input, not fitted
  double frequency = 0.0;    // [Hz], input, not fitted
  double residual_rms = 0.0;
  bool degenerate = false;  // sweep shows no power dependence
};

/// Two-level-system loss model:
///
///   Qi(n) = [ F delta0 * tanh(hbar omega / 2 kB T) / sqrt(1 + n / n_c)
///             + 1 / Q_others ]^-1
double tls_qi_model(double n_photon, double f_delta0, double n_c, double q_others,
                    double temperature, double frequency);

/// Weighted fit of (F delta0, n_c, Q_others) to a power sweep. The thermal
/// tanh factor is computed from the supplied temperature and frequency, not
/// fitted. Requires at least 5 points spanning at least 3 decades in <n>.
TlsFit fit_tls(const std::vector<TlsPoint>& sweep, double temperature, double frequency);

}  // namespace scpw
