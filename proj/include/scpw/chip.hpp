#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "scpw/resonance_model.hpp"
#include "scpw/types.hpp"

namespace scpw {

/// N resonators on a shared feedline with linearly spaced target frequencies
/// f_i = f_mean + (i - (n-1)/2) * f_gap. All resonators share one cross
/// section and material.
struct ChipDesign {
  int n_resonators = 0;
  double f_mean = 0.0;  // [Hz]
  double f_gap = 0.0;   // [Hz]
  CpwGeometry geom;     // length unset; solved per resonator
  Material mat;
  double q_c_nominal = 0.0;

  std::vector<double> target_frequencies() const;
  void validate() const;
};

/// Film-thickness disorder: independent Gaussian per resonator plus an
/// optional linear cross-chip gradient, centered on the middle of the chip.
struct ThicknessModel {
  double d_nominal = 0.0;   // [m]
  double sigma_d = 0.0;     // [m], i.i.d. std dev
  double gradient_d = 0.0;  // [m per resonator index]
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double mse = 0.0;  // mean squared residual, divisor n
};

/// Ordinary least squares of y against index 0..n-1. Throws on fewer than
/// two points.
LinearFit linear_fit_mse(std::span<const double> y);

struct McResult {
  std::vector<double> mse_samples;      // [MHz^2] per trial
  std::vector<double> delta_f_samples;  // [MHz] per trial, mean shift from f_mean
  std::uint64_t seed = 0;
  int n_trials = 0;

  double mean_mse() const;
  double mean_delta_f() const;
};

/// Monte Carlo propagation of thickness disorder to frequency statistics.
///
/// Lengths are solved once so every resonator hits its target at d_nominal
/// (kinetic term included); each trial then redraws d per resonator,
/// recomputes the frequencies and records the linear-fit MSE and the mean
/// shift, both in MHz. Draws outside (0, width) are rejection-resampled;
/// 100 consecutive rejections abort. Results are bit-identical for a fixed
/// seed regardless of n_threads; with sigma_d = 0 no randomness is consumed.
McResult run_monte_carlo(const ChipDesign& chip, const ThicknessModel& tm, int n_trials,
                         std::uint64_t seed, int n_threads = 1);

struct GeometryCandidate {
  double gap = 0.0;               // s [m]
  double width = 0.0;             // w [m]
  double kinetic_fraction = 0.0;  // objective, smaller is better
};

/// Exhaustive sweep of the gap s under the footprint constraint
/// w + 2s = total_width, keeping w > thickness. Returns candidates sorted by
/// ascending kinetic fraction. Throws if no grid point is feasible.
std::vector<GeometryCandidate> optimize_geometry(double total_width, double thickness,
                                                 const Material& mat, double grid_step,
                                                 double min_gap = 1e-6);

struct SynthResult {
  std::vector<std::complex<double>> s21;
  // Set when adjacent resonances sit within ten mean linewidths of each
  // other; the product-of-notches model degrades there.
  bool overlap_warning = false;
};

/// Composite transmission of several notch resonators on one feedline:
/// the pointwise product of the individual responses, plus optional complex
/// Gaussian noise (noise_sigma per quadrature). The grid must be strictly
/// increasing.
SynthResult synthesize_s21(std::span<const NotchParams> resonators,
                           std::span<const double> freq_grid, double noise_sigma,
                           std::uint64_t seed);

}  // namespace scpw
