#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "scpw/constants.hpp"
#include "scpw/errors.hpp"
#include "scpw/kinetic.hpp"
#include "scpw/resonator.hpp"

using namespace scpw;

namespace {

double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

const Material kTantalum{.lambda0 = 150e-9, .eps_r = 10.55, .temperature = 0.013};

CpwGeometry geom_um(double s_um, double w_um, double d_nm) {
  return {.width = w_um * 1e-6, .gap = s_um * 1e-6, .thickness = d_nm * 1e-9};
}

}  // namespace

TEST_CASE("kinetic-free design length at 6.7 GHz on sapphire") {
  // l = c0 / (4 f sqrt(eps_eff)), frozen: 4.65489527359838e-3 m.
  const auto model = design_for_geometric_frequency(6.7e9, geom_um(3, 10, 300), kTantalum);
  const double expected = constants::c0 / (4.0 * 6.7e9 * std::sqrt(0.5 * (10.55 + 1.0)));
  CHECK(rel_err(model.geom.length, 4.65489527359838e-3) < 1e-12);
  CHECK(rel_err(model.geom.length, expected) < 1e-12);
  CHECK(rel_err(model.f_geometric, 6.7e9) < 1e-12);
}

TEST_CASE("doubling the length halves the frequency") {
  const double c = 1.6e-10;
  const double l = 4.4e-7;
  CHECK(rel_err(quarter_wave_frequency(2e-3, c, l), 2.0 * quarter_wave_frequency(4e-3, c, l)) <
        1e-15);
}

TEST_CASE("f_full / f_geometric = sqrt(1 - kinetic_fraction)") {
  for (auto [s, w, d] : {std::tuple{3.0, 10.0, 300.0}, {7.0, 2.0, 100.0}, {16.0, 16.0, 200.0}}) {
    const auto model = design_for_geometric_frequency(6.7e9, geom_um(s, w, d), kTantalum);
    const double x = model.tl.kinetic_fraction();
    CHECK(rel_err(model.f_full / model.f_geometric, std::sqrt(1.0 - x)) < 1e-12);
  }
}

TEST_CASE("solve_length round trip") {
  const double c = 1.7e-10;
  const double l = 4.1e-7;
  for (double f : {1.0e9, 6.7e9, 9.3e9}) {
    const double len = solve_length(f, c, l);
    CHECK(rel_err(quarter_wave_frequency(len, c, l), f) < 1e-12);
  }
}

TEST_CASE("kinetic loading shortens the solved length by sqrt(1-x)") {
  const double c = 1.6e-10;
  const double lm = 4.4e-7;
  const double x = 0.145;
  const double lk = lm * x / (1.0 - x);  // kinetic_fraction(lk) == x
  const double len_geo = solve_length(6.7e9, c, lm);
  const double len_full = solve_length(6.7e9, c, lm + lk);
  CHECK(rel_err(len_full / len_geo, std::sqrt(1.0 - x)) < 1e-12);
  CHECK(len_full / len_geo == doctest::Approx(0.9247).epsilon(1e-4));
}

TEST_CASE("frequency shift zero case and -500 MHz algebra") {
  const auto no_kinetic = [&] {
    CpwGeometry g = geom_um(3, 10, 300);
    const TransmissionLine tl = make_transmission_line(g, kTantalum, false);
    g.length = solve_length(6.7e9, tl.c_per_len, tl.total_inductance());
    ResonatorModel m;
    m.geom = g;
    m.mat = kTantalum;
    m.tl = tl;
    m.f_geometric = quarter_wave_frequency(g.length, tl.c_per_len, tl.lm_per_len);
    m.f_full = quarter_wave_frequency(g.length, tl.c_per_len, tl.total_inductance());
    return m;
  }();
  CHECK(frequency_shift(no_kinetic) == 0.0);

  // A fraction of exactly 1 - (6.2/6.7)^2 shifts a 6.7 GHz design by -500 MHz.
  const double x = 1.0 - (6.2 / 6.7) * (6.2 / 6.7);
  CHECK(x == doctest::Approx(0.1435).epsilon(2e-3));
  const double df = 6.7e9 * (std::sqrt(1.0 - x) - 1.0);
  CHECK(rel_err(df, -0.5e9) < 1e-12);
}

TEST_CASE("shift shrinks from the pre- to the post-optimization point") {
  const auto pre = design_for_geometric_frequency(6.7e9, geom_um(7, 2, 100), kTantalum);
  const auto post = design_for_geometric_frequency(6.7e9, geom_um(3, 10, 300), kTantalum);
  CHECK(frequency_shift(pre) < 0.0);
  CHECK(frequency_shift(post) < 0.0);
  CHECK(std::abs(frequency_shift(post)) < std::abs(frequency_shift(pre)));
}

TEST_CASE("thickness sensitivity") {
  const auto model = design_for_full_frequency(6.7e9, geom_um(16, 16, 100), kTantalum);

  SUBCASE("zero without the kinetic term") {
    CHECK(thickness_sensitivity(model, /*include_kinetic=*/false) == 0.0);
  }

  SUBCASE("positive, and larger at 100 nm than at 300 nm") {
    const auto thick = design_for_full_frequency(6.7e9, geom_um(16, 16, 300), kTantalum);
    const double s_thin = thickness_sensitivity(model);
    const double s_thick = thickness_sensitivity(thick);
    CHECK(s_thin > 0.0);
    CHECK(s_thick > 0.0);
    CHECK(s_thin > s_thick);
  }

  SUBCASE("matches a five-point stencil") {
    const auto f_of_d = [&](double d) {
      CpwGeometry g = model.geom;
      g.thickness = d;
      const TransmissionLine tl = make_transmission_line(g, kTantalum);
      return quarter_wave_frequency(g.length, tl.c_per_len, tl.total_inductance());
    };
    const double got = thickness_sensitivity(model);
    const double want = oracles::five_point_derivative(f_of_d, 100e-9, 1e-4 * 100e-9);
    CHECK(rel_err(got, want) < 1e-4);
  }
}

TEST_CASE("f(d) rises with thickness; concave above 100 nm") {
  // Below roughly 100 nm the kinetic fraction of the narrow geometries
  // approaches 1 and f(d) turns convex, so the concavity check starts there.
  for (auto [s, w] : {std::pair{7.0, 2.0}, {6.0, 4.0}, {5.0, 6.0}, {4.0, 8.0}, {3.0, 10.0}}) {
    const auto model = design_for_full_frequency(6.7e9, geom_um(s, w, 100), kTantalum);
    const auto f_of_d = [&](double d) {
      CpwGeometry g = model.geom;
      g.thickness = d;
      const TransmissionLine tl = make_transmission_line(g, kTantalum);
      return quarter_wave_frequency(g.length, tl.c_per_len, tl.total_inductance());
    };
    for (double d_nm = 50.0; d_nm <= 300.0; d_nm += 12.5) {
      const double d = d_nm * 1e-9;
      const double h = 1e-4 * d;
      const double deriv = oracles::five_point_derivative(f_of_d, d, h);
      CHECK(deriv > 0.0);
      if (d_nm >= 100.0) {
        const double second = (f_of_d(d + h) - 2.0 * f_of_d(d) + f_of_d(d - h)) / (h * h);
        CHECK(second < 0.0);
      }
    }
  }
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(quarter_wave_frequency(0.0, 1e-10, 1e-7), DomainError);
  CHECK_THROWS_AS(quarter_wave_frequency(1e-3, -1e-10, 1e-7), DomainError);
  CHECK_THROWS_AS(solve_length(6.7e9, 1e-10, 0.0), DomainError);
  CHECK_THROWS_AS(resonator_at_length(geom_um(3, 10, 300), kTantalum), DomainError);
}
