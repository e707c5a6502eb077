#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "scpw/elliptic.hpp"
#include "scpw/errors.hpp"

using scpw::elliptic_k;

namespace {
double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }
}  // namespace

TEST_CASE("K(0) is pi/2") {
  CHECK(elliptic_k(0.0) == doctest::Approx(std::numbers::pi / 2.0).epsilon(1e-15));
}

TEST_CASE("K(0.5) matches the quadrature value") {
  // Frozen from the quadrature oracle.
  const double expected = 1.6857503548125961;
  CHECK(rel_err(elliptic_k(0.5), expected) < 1e-13);
  CHECK(rel_err(oracles::elliptic_k_quadrature(0.5), expected) < 1e-13);
}

TEST_CASE("K(0.625), the w=10um s=3um modulus") {
  CHECK(rel_err(elliptic_k(0.625), oracles::elliptic_k_quadrature(0.625)) < 1e-12);
}

TEST_CASE("agrees with quadrature on a 50-point grid over [0, 0.999]") {
  for (int i = 0; i < 50; ++i) {
    const double k = 0.999 * i / 49.0;
    CHECK(rel_err(elliptic_k(k), oracles::elliptic_k_quadrature(k)) < 1e-12);
  }
}

TEST_CASE("strictly increasing on [0, 1)") {
  double prev = elliptic_k(0.0);
  for (int i = 1; i <= 60; ++i) {
    const double k = 0.9995 * i / 60.0;
    const double v = elliptic_k(k);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(elliptic_k(-1e-12), scpw::DomainError);
  CHECK_THROWS_AS(elliptic_k(1.0), scpw::DomainError);
  CHECK_THROWS_AS(elliptic_k(1.5), scpw::DomainError);
  CHECK_THROWS_AS(elliptic_k(std::nan("")), scpw::DomainError);
}
