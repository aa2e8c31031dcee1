// constants.hpp — physical constants (CODATA 2018 exact values) and unit helpers.
//
// Unit conventions used throughout the library:
//   energies        E/h in GHz
//   fluxes          units of the flux quantum Phi0
//   phases          radians
//   rates           1/s
//   temperatures    kelvin
//   angular freqs   rad/s

#pragma once

#include <numbers>

namespace fluxsim::constants {

inline constexpr double planck_h = 6.62607015e-34;          // J s
inline constexpr double hbar = planck_h / (2.0 * std::numbers::pi);
inline constexpr double boltzmann_k = 1.380649e-23;         // J/K
inline constexpr double elementary_charge = 1.602176634e-19;  // C

// Flux quantum Phi0 = h/2e and reduced flux quantum phi0 = Phi0/2pi.
inline constexpr double flux_quantum = planck_h / (2.0 * elementary_charge);        // Wb
inline constexpr double reduced_flux_quantum = flux_quantum / (2.0 * std::numbers::pi);

// E/h in GHz -> angular frequency in rad/s.
inline constexpr double ghz_to_rad_s(double f_ghz) {
    return 2.0 * std::numbers::pi * f_ghz * 1e9;
}

// E/h in GHz -> energy in joules.
inline constexpr double ghz_to_joule(double f_ghz) {
    return planck_h * f_ghz * 1e9;
}

}  // namespace fluxsim::constants
