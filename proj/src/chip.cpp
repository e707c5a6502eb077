#include "scpw/chip.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "scpw/errors.hpp"
#include "scpw/kinetic.hpp"
#include "scpw/resonator.hpp"
#include "scpw/rng.hpp"

namespace scpw {

std::vector<double> ChipDesign::target_frequencies() const {
  std::vector<double> f(static_cast<std::size_t>(n_resonators));
  for (int i = 0; i < n_resonators; ++i) {
    f[static_cast<std::size_t>(i)] = f_mean + (i - 0.5 * (n_resonators - 1)) * f_gap;
  }
  return f;
}

void ChipDesign::validate() const {
  if (n_resonators < 2) throw DomainError("ChipDesign: need at least 2 resonators");
  if (!(f_gap > 0.0)) throw DomainError("ChipDesign: f_gap must be > 0");
  if (!(f_mean - 0.5 * (n_resonators - 1) * f_gap > 0.0)) {
    throw DomainError("ChipDesign: lowest target frequency must be > 0");
  }
  if (!(q_c_nominal > 0.0)) throw DomainError("ChipDesign: q_c_nominal must be > 0");
  geom.validate();
  mat.validate();
}

LinearFit linear_fit_mse(std::span<const double> y) {
  const std::size_t n = y.size();
  if (n < 2) throw DomainError("linear_fit_mse: need at least 2 points");
  const double xbar = 0.5 * static_cast<double>(n - 1);
  const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = static_cast<double>(i) - xbar;
    sxx += dx * dx;
    sxy += dx * (y[i] - ybar);
  }
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * static_cast<double>(i));
    ss += r * r;
  }
  fit.mse = ss / static_cast<double>(n);
  return fit;
}

double McResult::mean_mse() const {
  return std::accumulate(mse_samples.begin(), mse_samples.end(), 0.0) /
         static_cast<double>(mse_samples.size());
}

double McResult::mean_delta_f() const {
  return std::accumulate(delta_f_samples.begin(), delta_f_samples.end(), 0.0) /
         static_cast<double>(delta_f_samples.size());
}

namespace {

struct TrialContext {
  const ChipDesign& chip;
  const ThicknessModel& tm;
  std::uint64_t seed;
  double c_per_len = 0.0;
  double lm_per_len = 0.0;
  std::vector<double> lengths;

  double lk_at(double d) const {
    CpwGeometry g = chip.geom;
    g.thickness = d;
    return kinetic_inductance(g, chip.mat);
  }

  void run_trial(int trial, double& mse_out, double& delta_f_out) const {
    const int n = chip.n_resonators;
    GaussianSampler gauss{substream(seed, static_cast<std::uint64_t>(trial))};
    std::vector<double> f_mhz(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      double d = tm.d_nominal + tm.gradient_d * (i - 0.5 * (n - 1));
      if (tm.sigma_d > 0.0) {
        double cand = d + tm.sigma_d * gauss.next();
        int rejected = 0;
        while (!(cand > 0.0 && cand < chip.geom.width)) {
          if (++rejected > 100) {
            throw DomainError("run_monte_carlo: 100 consecutive thickness draws rejected");
          }
          cand = d + tm.sigma_d * gauss.next();
        }
        d = cand;
      } else if (!(d > 0.0 && d < chip.geom.width)) {
        throw DomainError("run_monte_carlo: deterministic thickness outside (0, width)");
      }
      const double f = quarter_wave_frequency(lengths[static_cast<std::size_t>(i)], c_per_len,
                                              lm_per_len + lk_at(d));
      f_mhz[static_cast<std::size_t>(i)] = f * 1e-6;
    }
    mse_out = linear_fit_mse(f_mhz).mse;
    const double mean =
        std::accumulate(f_mhz.begin(), f_mhz.end(), 0.0) / static_cast<double>(n);
    delta_f_out = mean - chip.f_mean * 1e-6;
  }
};

}  // namespace

McResult run_monte_carlo(const ChipDesign& chip, const ThicknessModel& tm, int n_trials,
                         std::uint64_t seed, int n_threads) {
  chip.validate();
  if (n_trials < 1) throw DomainError("run_monte_carlo: n_trials must be >= 1");
  if (!(tm.d_nominal > 0.0)) throw DomainError("run_monte_carlo: d_nominal must be > 0");
  if (tm.sigma_d < 0.0) throw DomainError("run_monte_carlo: sigma_d must be >= 0");

  TrialContext ctx{chip, tm, seed, 0.0, 0.0, {}};
  CpwGeometry nominal = chip.geom;
  nominal.thickness = tm.d_nominal;
  const TransmissionLine tl = make_transmission_line(nominal, chip.mat);
  ctx.c_per_len = tl.c_per_len;
  ctx.lm_per_len = tl.lm_per_len;
  for (double f : chip.target_frequencies()) {
    ctx.lengths.push_back(solve_length(f, tl.c_per_len, tl.total_inductance()));
  }

  McResult result;
  result.seed = seed;
  result.n_trials = n_trials;
  result.mse_samples.resize(static_cast<std::size_t>(n_trials));
  result.delta_f_samples.resize(static_cast<std::size_t>(n_trials));

  n_threads = std::clamp(n_threads, 1, n_trials);
  if (n_threads == 1) {
    for (int t = 0; t < n_trials; ++t) {
      ctx.run_trial(t, result.mse_samples[static_cast<std::size_t>(t)],
                    result.delta_f_samples[static_cast<std::size_t>(t)]);
    }
  } else {
    // Trials are keyed by index, so each worker writes disjoint slots and the
    // outcome matches the serial order exactly.
    std::vector<std::thread> workers;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (int widx = 0; widx < n_threads; ++widx) {
      workers.emplace_back([&, widx] {
        try {
          for (int t = widx; t < n_trials; t += n_threads) {
            ctx.run_trial(t, result.mse_samples[static_cast<std::size_t>(t)],
                          result.delta_f_samples[static_cast<std::size_t>(t)]);
          }
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    if (first_error) std::rethrow_exception(first_error);
  }
  return result;
}

std::vector<GeometryCandidate> optimize_geometry(double total_width, double thickness,
                                                 const Material& mat, double grid_step,
                                                 double min_gap) {
  if (!(total_width > 0.0)) throw DomainError("optimize_geometry: total_width must be > 0");
  if (!(grid_step > 0.0)) throw DomainError("optimize_geometry: grid_step must be > 0");
  if (!(min_gap > 0.0)) throw DomainError("optimize_geometry: min_gap must be > 0");

  std::vector<GeometryCandidate> out;
  for (int i = 0;; ++i) {
    const double s = min_gap + i * grid_step;
    const double w = total_width - 2.0 * s;
    if (!(w > thickness)) break;  // grid walks toward shrinking w
    CpwGeometry geom{.width = w, .gap = s, .thickness = thickness};
    out.push_back({s, w, kinetic_fraction(geom, mat)});
  }
  if (out.empty()) throw DomainError("optimize_geometry: empty feasible set");
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.kinetic_fraction < b.kinetic_fraction;
  });
  return out;
}

SynthResult synthesize_s21(std::span<const NotchParams> resonators,
                           std::span<const double> freq_grid, double noise_sigma,
                           std::uint64_t seed) {
  for (std::size_t i = 1; i < freq_grid.size(); ++i) {
    if (!(freq_grid[i] > freq_grid[i - 1])) {
      throw DataError("synthesize_s21: frequency grid must be strictly increasing");
    }
  }

  SynthResult result;
  if (resonators.size() >= 2) {
    std::vector<double> f0s;
    double mean_fwhm = 0.0;
    for (const auto& r : resonators) {
      f0s.push_back(r.f0);
      mean_fwhm += r.f0 / loaded_q(r.q_internal, r.q_coupling, r.phi);
    }
    mean_fwhm /= static_cast<double>(resonators.size());
    std::sort(f0s.begin(), f0s.end());
    for (std::size_t i = 1; i < f0s.size(); ++i) {
      if (f0s[i] - f0s[i - 1] < 10.0 * mean_fwhm) result.overlap_warning = true;
    }
  }

  result.s21.reserve(freq_grid.size());
  for (double f : freq_grid) {
    std::complex<double> v(1.0, 0.0);
    for (const auto& r : resonators) v *= notch_s21(f, r);
    result.s21.push_back(v);
  }
  if (noise_sigma > 0.0) {
    GaussianSampler gauss{substream(seed, 0)};
    for (auto& v : result.s21) {
      v += std::complex<double>(noise_sigma * gauss.next(), noise_sigma * gauss.next());
    }
  }
  return result;
}

}  // namespace scpw
