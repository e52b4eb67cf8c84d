#pragma once

// Physical constants and unit helpers. All internal quantities are SI:
// seconds, meters, kilograms; rates (g, kappa, gamma, Omega) are angular (rad/s).

namespace cavsim {

inline constexpr double pi = 3.1415926535897932384626433832795;
inline constexpr double two_pi = 2.0 * pi;
inline constexpr double speed_of_light = 299792458.0;       // m/s
inline constexpr double boltzmann_k = 1.380649e-23;         // J/K
inline constexpr double rb87_mass = 1.44316060e-25;         // kg
inline constexpr double rb_d2_wavelength = 780.24e-9;       // m
inline constexpr double standard_gravity = 9.81;            // m/s^2

// angular rate from a frequency quoted as "2pi x f MHz"
inline constexpr double mhz_2pi(double f_mhz) { return two_pi * f_mhz * 1e6; }

}  // namespace cavsim
