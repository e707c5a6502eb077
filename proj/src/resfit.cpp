#include "scpw/resfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "scpw/constants.hpp"
#include "scpw/errors.hpp"
#include "scpw/nlls.hpp"

namespace scpw {

using std::numbers::pi;

void S21Trace::validate() const {
  if (freq.size() != s21.size()) {
    throw DataError("S21Trace: frequency and S21 arrays differ in length");
  }
  for (std::size_t i = 0; i < freq.size(); ++i) {
    if (!std::isfinite(freq[i]) || !std::isfinite(s21[i].real()) ||
        !std::isfinite(s21[i].imag())) {
      throw DataError("S21Trace: non-finite sample");
    }
    if (i > 0 && !(freq[i] > freq[i - 1])) {
      throw DataError("S21Trace: frequency must be strictly increasing");
    }
  }
}

namespace {

// Instrument baseline estimated from the off-resonance wings: linear
// amplitude, constant phase, and a linear phase slope (cable delay).
struct WingBaseline {
  double f_mid = 0.0;
  double amp_offset = 1.0;   // a0 at f_mid
  double amp_slope = 0.0;    // per Hz
  double phase_offset = 0.0; // at f_mid
  double phase_slope = 0.0;  // per Hz

  std::complex<double> at(double f) const {
    const double x = f - f_mid;
    return (amp_offset + amp_slope * x) * std::polar(1.0, phase_offset + phase_slope * x);
  }
};

WingBaseline fit_wing_baseline(const S21Trace& trace, double wing_fraction) {
  const std::size_t n = trace.freq.size();
  const std::size_t nw = static_cast<std::size_t>(std::floor(wing_fraction * n));
  if (nw < 3) {
    throw DataError("preprocess_trace: insufficient off-resonance points in the wings");
  }

  std::vector<std::size_t> wing;
  for (std::size_t i = 0; i < nw; ++i) wing.push_back(i);
  for (std::size_t i = n - nw; i < n; ++i) wing.push_back(i);

  WingBaseline b;
  b.f_mid = 0.5 * (trace.freq.front() + trace.freq.back());

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i : wing) {
    const double x = trace.freq[i] - b.f_mid;
    const double y = std::abs(trace.s21[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double wn = static_cast<double>(wing.size());
  const double det = wn * sxx - sx * sx;
  b.amp_slope = (wn * sxy - sx * sy) / det;
  b.amp_offset = (sy - b.amp_slope * sx) / wn;
  if (!(b.amp_offset > 0.0)) throw DataError("preprocess_trace: non-positive baseline amplitude");

  // Phase slope from pairwise increments inside each wing; each increment
  // stays in (-pi, pi], so no global unwrap is needed.
  double dtheta_sum = 0.0;
  double df_sum = 0.0;
  const auto accumulate_wing = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin + 1; i < end; ++i) {
      dtheta_sum += std::arg(trace.s21[i] * std::conj(trace.s21[i - 1]));
      df_sum += trace.freq[i] - trace.freq[i - 1];
    }
  };
  accumulate_wing(0, nw);
  accumulate_wing(n - nw, n);
  b.phase_slope = df_sum != 0.0 ? dtheta_sum / df_sum : 0.0;

  std::complex<double> mean_dir(0.0, 0.0);
  for (std::size_t i : wing) {
    const double x = trace.freq[i] - b.f_mid;
    mean_dir += trace.s21[i] / std::abs(trace.s21[i]) * std::polar(1.0, -b.phase_slope * x);
  }
  b.phase_offset = std::arg(mean_dir);
  return b;
}

struct InitialGuess {
  double f0 = 0.0;
  double q_loaded = 0.0;
  double q_coupling = 0.0;
};

InitialGuess guess_from_dip(const std::vector<double>& freq, const std::vector<double>& amp) {
  const std::size_t n = freq.size();
  std::size_t imin = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (amp[i] < amp[imin]) imin = i;
  }
  if (amp[imin] > 0.99) throw DataError("fit_resonance: no resonance dip found");

  const double depth = 1.0 - amp[imin];
  const double half_level = 1.0 - 0.5 * depth;
  std::size_t left = imin;
  while (left > 0 && amp[left] < half_level) --left;
  std::size_t right = imin;
  while (right + 1 < n && amp[right] < half_level) ++right;
  double fwhm = freq[right] - freq[left];
  if (!(fwhm > 0.0)) fwhm = (freq.back() - freq.front()) / 10.0;

  InitialGuess g;
  g.f0 = freq[imin];
  g.q_loaded = g.f0 / fwhm;
  g.q_coupling = g.q_loaded / depth;
  return g;
}

}  // namespace

S21Trace preprocess_trace(const S21Trace& trace, const PreprocessOptions& options) {
  trace.validate();
  const WingBaseline baseline = fit_wing_baseline(trace, options.wing_fraction);
  S21Trace out = trace;
  for (std::size_t i = 0; i < trace.freq.size(); ++i) {
    out.s21[i] = trace.s21[i] / baseline.at(trace.freq[i]);
  }
  return out;
}

ResonanceFit fit_resonance(const S21Trace& trace, const FitResonanceOptions& options) {
  trace.validate();
  const std::size_t n = trace.freq.size();
  if (n < 20) {
    throw DataError("fit_resonance: need at least 20 points across the resonance");
  }

  // The wing fit initializes the baseline parameters; the baseline itself is
  // co-fitted below so its tail contamination cannot bias the resonance.
  WingBaseline baseline;
  baseline.f_mid = 0.5 * (trace.freq.front() + trace.freq.back());
  if (options.apply_preprocess) {
    baseline = fit_wing_baseline(trace, options.preprocess.wing_fraction);
  }
  std::vector<double> norm_amp(n);
  for (std::size_t i = 0; i < n; ++i) {
    norm_amp[i] = std::abs(trace.s21[i] / baseline.at(trace.freq[i]));
  }
  const InitialGuess guess = guess_from_dip(trace.freq, norm_amp);

  const double f_mid = baseline.f_mid;
  const double half_span = 0.5 * (trace.freq.back() - trace.freq.front());
  const double fwhm0 = guess.f0 / guess.q_loaded;
  if (2.0 * half_span < 3.0 * fwhm0) {
    throw DataError("fit_resonance: trace must span at least 3 linewidths");
  }

  // Parameters: f0, Q, Qc, phi, baseline (re, im) at f_mid, relative
  // amplitude tilt across the half span, and delay [s].
  Eigen::VectorXd p0(8);
  const std::complex<double> a0 = std::polar(baseline.amp_offset, baseline.phase_offset);
  p0 << guess.f0, guess.q_loaded, guess.q_coupling, 0.0, a0.real(), a0.imag(),
      baseline.amp_slope * half_span / baseline.amp_offset,
      baseline.phase_slope / (2.0 * pi);
  Eigen::VectorXd lo(8), hi(8);
  lo << trace.freq.front(), 1.0, 1.0, -0.5 * pi, -1e3, -1e3, -10.0, -1e-5;
  hi << trace.freq.back(), 1e12, 1e12, 0.5 * pi, 1e3, 1e3, 10.0, 1e-5;
  NllsOptions nopt;
  nopt.step_scale.resize(8);
  nopt.step_scale << fwhm0, guess.q_loaded, guess.q_coupling, 0.1,
      std::max(baseline.amp_offset, 0.1), std::max(baseline.amp_offset, 0.1), 0.1, 1e-9;

  const auto model_at = [&](const Eigen::VectorXd& p, double f) {
    const double x = f - f_mid;
    const std::complex<double> pre =
        std::complex<double>(p[4], p[5]) * (1.0 + p[6] * x / half_span) *
        std::polar(1.0, 2.0 * pi * p[7] * x);
    const std::complex<double> numer = (p[1] / p[2]) * std::polar(1.0, p[3]);
    const std::complex<double> denom(1.0, 2.0 * p[1] * (f - p[0]) / p[0]);
    return pre * (1.0 - numer / denom);
  };
  const auto residual = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::complex<double> diff = model_at(p, trace.freq[i]) - trace.s21[i];
      r[2 * i] = diff.real();
      r[2 * i + 1] = diff.imag();
    }
    return r;
  };

  const NllsResult res = nlls_fit(residual, p0, lo, hi, nopt);
  if (!res.converged) {
    throw ConvergenceError("fit_resonance: optimizer did not converge (best rms " +
                           std::to_string(res.residual_rms) + ")");
  }

  ResonanceFit fit;
  fit.f0 = res.params[0];
  fit.q_loaded = res.params[1];
  fit.q_coupling = res.params[2];
  fit.phi = res.params[3];
  fit.residual_rms = res.residual_rms;

  if (2.0 * half_span < 3.0 * fit.f0 / fit.q_loaded) {
    throw DataError("fit_resonance: trace must span at least 3 linewidths");
  }

  const double inv_qi = 1.0 / fit.q_loaded - std::cos(fit.phi) / fit.q_coupling;
  if (!(inv_qi > 0.0)) {
    throw ConvergenceError("fit_resonance: fitted loss is non-physical (1/Qi <= 0)");
  }
  fit.q_internal = 1.0 / inv_qi;

  fit.f0_err = std::sqrt(std::max(res.covariance(0, 0), 0.0));
  fit.q_loaded_err = std::sqrt(std::max(res.covariance(1, 1), 0.0));
  fit.q_coupling_err = std::sqrt(std::max(res.covariance(2, 2), 0.0));
  fit.phi_err = std::sqrt(std::max(res.covariance(3, 3), 0.0));

  // First-order propagation of (Q, Qc, phi) onto Qi, including covariances.
  const double qi2 = fit.q_internal * fit.q_internal;
  Eigen::Vector3d grad;
  grad << qi2 / (fit.q_loaded * fit.q_loaded),
      -qi2 * std::cos(fit.phi) / (fit.q_coupling * fit.q_coupling),
      -qi2 * std::sin(fit.phi) / fit.q_coupling;
  const Eigen::Matrix3d sub = res.covariance.block<3, 3>(1, 1);
  fit.q_internal_err = std::sqrt(std::max(grad.dot(sub * grad), 0.0));
  return fit;
}

void AttenuationChain::validate() const {
  for (const auto& [label, db] : stages) {
    if (db < 0.0) throw DomainError("AttenuationChain: stage '" + label + "' is negative");
  }
  if (cable_loss < 0.0) throw DomainError("AttenuationChain: cable loss must be >= 0");
}

double power_at_chip(double p_source_dbm, const AttenuationChain& chain) {
  chain.validate();
  double p = p_source_dbm;
  for (const auto& [label, db] : chain.stages) p -= db;
  return p - chain.cable_loss;
}

double photon_number(double p_chip_dbm, double f0, double q_loaded, double q_coupling,
                     double impedance_ratio) {
  if (!(f0 > 0.0) || !(q_loaded > 0.0) || !(q_coupling > 0.0) || !(impedance_ratio > 0.0)) {
    throw DomainError("photon_number: f0, Q, Qc, impedance_ratio must be > 0");
  }
  const double p_watts = 1e-3 * std::pow(10.0, p_chip_dbm / 10.0);
  const double omega0 = 2.0 * pi * f0;
  return impedance_ratio * 2.0 * q_loaded * q_loaded * p_watts /
         (q_coupling * constants::hbar * omega0 * omega0);
}

double tls_qi_model(double n_photon, double f_delta0, double n_c, double q_others,
                    double temperature, double frequency) {
  const double omega = 2.0 * pi * frequency;
  const double thermal =
      std::tanh(constants::hbar * omega / (2.0 * constants::k_boltzmann * temperature));
  return 1.0 / (f_delta0 * thermal / std::sqrt(1.0 + n_photon / n_c) + 1.0 / q_others);
}

TlsFit fit_tls(const std::vector<TlsPoint>& sweep, double temperature, double frequency) {
  if (sweep.size() < 5) throw DomainError("fit_tls: need at least 5 sweep points");
  if (!(temperature > 0.0) || !(frequency > 0.0)) {
    throw DomainError("fit_tls: temperature and frequency must be > 0");
  }
  double n_min = std::numeric_limits<double>::infinity();
  double n_max = 0.0;
  double qi_min = std::numeric_limits<double>::infinity();
  double qi_max = 0.0;
  for (const auto& pt : sweep) {
    if (!(pt.n_photon > 0.0) || !(pt.q_internal > 0.0)) {
      throw DomainError("fit_tls: photon numbers and Qi must be > 0");
    }
    n_min = std::min(n_min, pt.n_photon);
    n_max = std::max(n_max, pt.n_photon);
    qi_min = std::min(qi_min, pt.q_internal);
    qi_max = std::max(qi_max, pt.q_internal);
  }
  if (n_max / n_min < 1e3) {
    throw DomainError("fit_tls: sweep must span at least 3 decades in photon number");
  }

  TlsFit fit;
  fit.temperature = temperature;
  fit.frequency = frequency;
  fit.degenerate = (qi_max - qi_min) < 1e-3 * qi_min;

  // Initial guesses straight from the asymptotes: the high-power plateau is
  // Q_others, the low-to-high loss difference is the TLS scale.
  const double fd0_init = std::max(1.0 / qi_min - 1.0 / qi_max, 1e-10);
  const double qo_init = qi_max;
  double nc_init = std::sqrt(n_min * n_max);
  {
    // Nearest sweep point to where the TLS loss has dropped by 1/sqrt(2).
    const double target = fd0_init / std::numbers::sqrt2;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& pt : sweep) {
      const double tls_loss = std::max(1.0 / pt.q_internal - 1.0 / qo_init, 1e-14);
      const double miss = std::abs(std::log(tls_loss / target));
      if (miss < best) {
        best = miss;
        nc_init = pt.n_photon;
      }
    }
  }

  Eigen::VectorXd p0(3), lo(3), hi(3);
  p0 << fd0_init, nc_init, qo_init;
  lo << 1e-12, 1e-9, 1e2;
  hi << 1e-2, 1e15, 1e12;
  NllsOptions nopt;
  nopt.step_scale.resize(3);
  nopt.step_scale << fd0_init, nc_init, qo_init;

  const auto residual = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(sweep.size()));
    for (std::size_t i = 0; i < sweep.size(); ++i) {
      const double w = sweep[i].sigma_qi > 0.0 ? 1.0 / sweep[i].sigma_qi : 1.0;
      const double model = tls_qi_model(sweep[i].n_photon, p[0], p[1], p[2], temperature,
                                        frequency);
      r[static_cast<Eigen::Index>(i)] = w * (model - sweep[i].q_internal);
    }
    return r;
  };

  const NllsResult res = nlls_fit(residual, p0, lo, hi, nopt);
  if (!res.converged && !fit.degenerate) {
    throw ConvergenceError("fit_tls: optimizer did not converge");
  }
  fit.f_delta0 = res.params[0];
  fit.n_c = res.params[1];
  fit.q_others = res.params[2];
  fit.f_delta0_err = std::sqrt(std::max(res.covariance(0, 0), 0.0));
  fit.n_c_err = std::sqrt(std::max(res.covariance(1, 1), 0.0));
  fit.q_others_err = std::sqrt(std::max(res.covariance(2, 2), 0.0));
  fit.residual_rms = res.residual_rms;
  if (res.singular_jacobian) fit.degenerate = true;
  return fit;
}

}  // namespace scpw
