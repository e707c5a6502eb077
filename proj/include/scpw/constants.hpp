#pragma once

namespace scpw::constants {

inline constexpr double c0 = 299792458.0;              // vacuum light speed [m/s], exact
inline constexpr double mu0 = 1.25663706212e-6;        // vacuum permeability [H/m], CODATA 2018
inline constexpr double eps0 = 1.0 / (mu0 * c0 * c0);  // vacuum permittivity [F/m], kept consistent with mu0
inline constexpr double hbar = 1.054571817e-34;        // reduced Planck constant [J s]
inline constexpr double k_boltzmann = 1.380649e-23;    // Boltzmann constant [J/K], exact

}  // namespace scpw::constants
