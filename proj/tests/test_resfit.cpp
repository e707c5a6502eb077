#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "scpw/chip.hpp"
#include "scpw/constants.hpp"
#include "scpw/errors.hpp"
#include "scpw/resfit.hpp"
#include "scpw/rng.hpp"

using namespace scpw;

namespace {

double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

// Isolated-notch trace on a window of +-span/2 linewidths around f0.
S21Trace make_notch_trace(const NotchParams& p, int n_points = 2001, double span_linewidths = 60.0,
                          double noise_sigma = 0.0, std::uint64_t seed = 0) {
  const double q = loaded_q(p.q_internal, p.q_coupling, p.phi);
  const double fwhm = p.f0 / q;
  const double half = 0.5 * span_linewidths * fwhm;
  S21Trace t;
  for (int i = 0; i < n_points; ++i) {
    t.freq.push_back(p.f0 - half + 2.0 * half * i / (n_points - 1));
  }
  const auto r = synthesize_s21(std::vector<NotchParams>{p}, t.freq, noise_sigma, seed);
  t.s21 = r.s21;
  return t;
}

S21Trace distort(const S21Trace& clean, double amplitude, double phase_offset, double delay) {
  S21Trace out = clean;
  for (std::size_t i = 0; i < out.freq.size(); ++i) {
    out.s21[i] *= amplitude * std::polar(1.0, phase_offset -
                                                  2.0 * std::numbers::pi * out.freq[i] * delay);
  }
  return out;
}

const NotchParams kReferenceNotch{.f0 = 6.636e9, .q_internal = 2.5e6, .q_coupling = 0.7e6, .phi = 0.1};

}  // namespace

TEST_CASE("preprocess leaves a pure-baseline trace unchanged") {
  S21Trace flat;
  for (int i = 0; i < 400; ++i) {
    flat.freq.push_back(6.6e9 + i * 1e4);
    flat.s21.emplace_back(1.0, 0.0);
  }
  const S21Trace out = preprocess_trace(flat);
  for (std::size_t i = 0; i < flat.freq.size(); ++i) {
    CHECK(std::abs(out.s21[i] - std::complex<double>(1.0, 0.0)) < 1e-10);
  }
}

TEST_CASE("preprocess inverts amplitude, phase offset and delay") {
  S21Trace flat;
  for (int i = 0; i < 800; ++i) {
    flat.freq.push_back(6.6e9 + i * 1e4);
    flat.s21.emplace_back(1.0, 0.0);
  }
  const S21Trace distorted = distort(flat, 0.5, 0.3, 10e-9);
  const S21Trace out = preprocess_trace(distorted);
  for (std::size_t i = 0; i < flat.freq.size(); ++i) {
    CHECK(std::abs(out.s21[i] - std::complex<double>(1.0, 0.0)) < 1e-6);
  }
}

TEST_CASE("preprocess flattens a 1% amplitude tilt") {
  S21Trace tilted = make_notch_trace(kReferenceNotch);
  const double f_lo = tilted.freq.front();
  const double f_hi = tilted.freq.back();
  for (std::size_t i = 0; i < tilted.freq.size(); ++i) {
    const double u = (tilted.freq[i] - f_lo) / (f_hi - f_lo);  // 0..1
    tilted.s21[i] *= 0.99 + 0.02 * u;                          // -1% .. +1%
  }
  const S21Trace out = preprocess_trace(tilted);
  const std::size_t nw = tilted.freq.size() / 10;
  for (std::size_t i = 0; i < nw; ++i) {
    CHECK(std::abs(std::abs(out.s21[i]) - 1.0) < 1e-3);
    CHECK(std::abs(std::abs(out.s21[out.s21.size() - 1 - i]) - 1.0) < 1e-3);
  }
}

TEST_CASE("preprocess needs wing points") {
  S21Trace tiny;
  for (int i = 0; i < 8; ++i) {
    tiny.freq.push_back(6.6e9 + i * 1e4);
    tiny.s21.emplace_back(1.0, 0.0);
  }
  CHECK_THROWS_AS(preprocess_trace(tiny), DataError);
}

TEST_CASE("noiseless round trip recovers the fit parameters") {
  const S21Trace clean = make_notch_trace(kReferenceNotch);
  const S21Trace distorted = distort(clean, 0.5, 0.3, 10e-9);
  const ResonanceFit fit = fit_resonance(distorted);
  CHECK(rel_err(fit.f0, kReferenceNotch.f0) < 1e-9);
  CHECK(rel_err(fit.q_internal, kReferenceNotch.q_internal) < 1e-6);
  CHECK(rel_err(fit.q_coupling, kReferenceNotch.q_coupling) < 1e-6);
  CHECK(std::abs(fit.phi - kReferenceNotch.phi) < 1e-6);

  // Diameter-correction identity: Qi is defined by the other three.
  const double lhs = 1.0 / fit.q_loaded;
  const double rhs = 1.0 / fit.q_internal + std::cos(fit.phi) / fit.q_coupling;
  CHECK(rel_err(lhs, rhs) < 1e-12);
}

TEST_CASE("phi = 0 on-resonance magnitude is 1 - Q/Qc") {
  NotchParams p = kReferenceNotch;
  p.phi = 0.0;
  const double q = loaded_q(p.q_internal, p.q_coupling, 0.0);
  S21Trace t;
  const double fwhm = p.f0 / q;
  for (int i = -1000; i <= 1000; ++i) t.freq.push_back(p.f0 + i * fwhm / 40.0);
  t.s21 = synthesize_s21(std::vector<NotchParams>{p}, t.freq, 0.0, 0).s21;
  CHECK(std::abs(std::abs(t.s21[1000]) - (1.0 - q / p.q_coupling)) < 1e-12);
  const ResonanceFit fit = fit_resonance(t);
  CHECK(rel_err(fit.q_internal, p.q_internal) < 1e-6);
}

TEST_CASE("noisy trace keeps Qi within 20%") {
  const S21Trace noisy = make_notch_trace(kReferenceNotch, 2001, 60.0, 0.01, 11);
  const ResonanceFit fit = fit_resonance(noisy);
  CHECK(rel_err(fit.q_internal, kReferenceNotch.q_internal) < 0.2);
  CHECK(fit.q_internal_err > 0.0);
}

TEST_CASE("flat trace has no dip to fit") {
  S21Trace flat;
  for (int i = 0; i < 200; ++i) {
    flat.freq.push_back(6.6e9 + i * 1e4);
    flat.s21.emplace_back(1.0, 1e-4 * (i % 3));
  }
  CHECK_THROWS_AS(fit_resonance(flat), DataError);
}

TEST_CASE("short traces are rejected") {
  S21Trace t = make_notch_trace(kReferenceNotch, 19, 10.0);
  CHECK_THROWS_AS(fit_resonance(t), DataError);
}

TEST_CASE("traces narrower than three linewidths are rejected") {
  S21Trace t = make_notch_trace(kReferenceNotch, 60, 2.0);
  CHECK_THROWS_AS(fit_resonance(t), DataError);
}

TEST_CASE("round-trip property over 50 random parameter draws") {
  SplitMix64 rng{20240903};
  for (int i = 0; i < 50; ++i) {
    NotchParams p;
    p.f0 = 4e9 + 4e9 * rng.next_unit();
    p.q_internal = 1e5 + (5e6 - 1e5) * rng.next_unit();
    p.q_coupling = 1e5 + (2e6 - 1e5) * rng.next_unit();
    p.phi = -0.3 + 0.6 * rng.next_unit();
    const S21Trace clean = make_notch_trace(p, 1201, 50.0);
    const double amp = 0.4 + 0.8 * rng.next_unit();
    const double theta = -0.5 + rng.next_unit();
    const double delay = 20e-9 * (rng.next_unit() - 0.5);
    const ResonanceFit fit = fit_resonance(distort(clean, amp, theta, delay));
    CHECK(rel_err(fit.q_internal, p.q_internal) < 0.01);
    CHECK(rel_err(fit.q_coupling, p.q_coupling) < 0.01);
    CHECK(rel_err(fit.f0, p.f0) < 1e-8);
  }
}

TEST_CASE("attenuation chain arithmetic") {
  AttenuationChain chain;
  chain.stages = {{"3K", 20.0}, {"still", 3.0}, {"cold plate", 6.0}, {"MXC", 40.0}};
  chain.cable_loss = 10.0;
  CHECK(power_at_chip(-60.0, chain) == -139.0);

  const AttenuationChain empty{};
  CHECK(power_at_chip(-31.5, empty) == -31.5);

  AttenuationChain shuffled;
  shuffled.stages = {{"MXC", 40.0}, {"cold plate", 6.0}, {"3K", 20.0}, {"still", 3.0}};
  shuffled.cable_loss = 10.0;
  CHECK(power_at_chip(-60.0, shuffled) == power_at_chip(-60.0, chain));

  AttenuationChain bad;
  bad.stages = {{"oops", -3.0}};
  CHECK_THROWS_AS(power_at_chip(0.0, bad), DomainError);
}

TEST_CASE("photon number scalings") {
  const double q = loaded_q(2.5e6, 0.7e6, 0.0);
  const double n0 = photon_number(-139.0, 6.636e9, q, 0.7e6);

  SUBCASE("linear in power") {
    CHECK(rel_err(photon_number(-139.0 + 10.0 * std::log10(0.5), 6.636e9, q, 0.7e6), 0.5 * n0) <
          1e-9);
    CHECK(rel_err(photon_number(-139.0 + 3.0103, 6.636e9, q, 0.7e6), 2.0 * n0) < 1e-6);
  }

  SUBCASE("scales as 1 / omega0^2") {
    const double n_half = photon_number(-139.0, 2.0 * 6.636e9, q, 0.7e6);
    CHECK(rel_err(n_half, n0 / 4.0) < 1e-12);
  }

  SUBCASE("single-photon power sits far below -130 dBm") {
    // P(n=1) = Qc hbar w0^2 / (2 Q^2)
    const double w0 = 2.0 * std::numbers::pi * 6.636e9;
    const double p_watts = 0.7e6 * constants::hbar * w0 * w0 / (2.0 * q * q);
    const double p_dbm = 10.0 * std::log10(p_watts / 1e-3);
    CHECK(p_dbm < -130.0);
    CHECK(rel_err(photon_number(p_dbm, 6.636e9, q, 0.7e6), 1.0) < 1e-9);
  }

  SUBCASE("impedance correction is a plain multiplier") {
    CHECK(rel_err(photon_number(-139.0, 6.636e9, q, 0.7e6, 1.3), 1.3 * n0) < 1e-12);
  }

  CHECK_THROWS_AS(photon_number(-139.0, -6e9, q, 0.7e6), DomainError);
}

TEST_CASE("thermal factor at 13 mK and 6.636 GHz is saturated") {
  const double w0 = 2.0 * std::numbers::pi * 6.636e9;
  const double x = constants::hbar * w0 / (2.0 * constants::k_boltzmann * 0.013);
  CHECK(x == doctest::Approx(12.2491).epsilon(1e-4));
  CHECK(std::tanh(x) > 1.0 - 1e-9);
}

TEST_CASE("TLS fit recovers synthetic parameters") {
  const double fd0 = 2e-7;
  const double nc = 10.0;
  const double qo = 5e6;
  std::vector<TlsPoint> sweep;
  for (int i = 0; i < 25; ++i) {
    const double n = std::pow(10.0, -1.0 + 7.0 * i / 24.0);  // 0.1 .. 1e6
    sweep.push_back({n, tls_qi_model(n, fd0, nc, qo, 0.013, 6.636e9), 0.0});
  }
  const TlsFit fit = fit_tls(sweep, 0.013, 6.636e9);
  CHECK(rel_err(fit.f_delta0, fd0) < 0.01);
  CHECK(rel_err(fit.n_c, nc) < 0.01);
  CHECK(rel_err(fit.q_others, qo) < 0.01);
  CHECK_FALSE(fit.degenerate);

  // Qi at single photon: frozen from direct evaluation of the model.
  const double qi1 = tls_qi_model(1.0, fit.f_delta0, fit.n_c, fit.q_others, 0.013, 6.636e9);
  CHECK(rel_err(qi1, 2559557.5915497313) < 0.01);

  // The fitted curve is monotone non-decreasing in photon number and tends
  // to q_others at high power.
  double prev = 0.0;
  for (double n = 1e-3; n < 1e12; n *= 10.0) {
    const double qi = tls_qi_model(n, fit.f_delta0, fit.n_c, fit.q_others, 0.013, 6.636e9);
    CHECK(qi >= prev);
    prev = qi;
  }
  CHECK(rel_err(tls_qi_model(1e14, fit.f_delta0, fit.n_c, fit.q_others, 0.013, 6.636e9),
                fit.q_others) < 1e-3);
}

TEST_CASE("TLS fit with noisy weighted points") {
  GaussianSampler noise{substream(99, 0)};
  std::vector<TlsPoint> sweep;
  for (int i = 0; i < 25; ++i) {
    const double n = std::pow(10.0, -1.0 + 7.0 * i / 24.0);
    const double qi = tls_qi_model(n, 2e-7, 10.0, 5e6, 0.013, 6.636e9);
    const double sigma = 0.01 * qi;
    sweep.push_back({n, qi + sigma * noise.next(), sigma});
  }
  const TlsFit fit = fit_tls(sweep, 0.013, 6.636e9);
  CHECK(rel_err(fit.f_delta0, 2e-7) < 0.1);
  CHECK(fit.f_delta0_err > 0.0);
}

TEST_CASE("TLS fit input validation and degenerate sweeps") {
  std::vector<TlsPoint> few{{1.0, 2e6, 0.0}, {10.0, 2e6, 0.0}, {100.0, 2e6, 0.0}};
  CHECK_THROWS_AS(fit_tls(few, 0.013, 6.636e9), DomainError);

  std::vector<TlsPoint> narrow;
  for (int i = 0; i < 6; ++i) narrow.push_back({1.0 + i, 2e6, 0.0});
  CHECK_THROWS_AS(fit_tls(narrow, 0.013, 6.636e9), DomainError);

  std::vector<TlsPoint> flat;
  for (int i = 0; i < 8; ++i) flat.push_back({std::pow(10.0, i - 1.0), 2e6, 0.0});
  const TlsFit fit = fit_tls(flat, 0.013, 6.636e9);
  CHECK(fit.degenerate);
}
