// decoherence.hpp — closed-form decoherence-rate models: dielectric / charge-TLS
// loss, one- and two-loop 1/f flux-noise relaxation, correlated spin-echo
// dephasing, detailed balance, and effective-temperature conversions.

#pragma once

#include "fluxsim/circuit.hpp"

namespace fluxsim::decoherence {

struct NoiseModel {
    // 1/f flux-noise amplitudes in Phi0/sqrt(Hz) (quoted externally in
    // micro-Phi0/sqrt(Hz); JSON I/O converts).
    double a_l = 0.0;
    double a_j = 0.0;
    double alpha = 1.0;          // flux-noise exponent
    double c_lj = 0.0;           // loop-noise correlation factor, |c_lj| <= 1
    double tan_delta_ref = 0.0;  // dielectric loss tangent at omega_r
    double epsilon = 0.0;        // loss-tangent exponent
    double gamma_exp = 2.0;      // dielectric spectral exponent (noise-spectra fits)
    double omega_r = 0.0;        // reference angular frequency, rad/s
    double t_eff_k = 0.0;        // effective temperature
    double t_a_k = 0.0;          // spectral-fit temperature

    static NoiseModel defaults();
    void validate() const;  // throws ConfigError
};

struct TlsMicroParams {
    double rho0 = 0.0;        // TLS density of states, 1/(J C m)
    double p_max = 0.0;       // maximum dipole moment, C m
    double x_norm = 0.0;      // normalized electrode distance
    double c_qubit = 0.0;     // qubit capacitance, F

    void validate() const;
};

// Flux-noise spectral density S(omega) = 2 pi a^2 / omega * (omega/omega_r)^(1-alpha)
// in Phi0^2/Hz. The power law is anchored at omega_r so that alpha = 1
// reproduces 2 pi a^2 / omega identically at every frequency.
double flux_psd(double a, double alpha, double omega, double omega_r);

// tan(delta_C) at omega: tan_delta_ref * (omega/omega_r)^epsilon.
double tan_delta_at(const NoiseModel& model, double omega);

// Phenomenological dielectric relaxation (thermal, coth factor).
double gamma1_dielectric(const circuit::SpectrumResult& spec, const NoiseModel& model);

// Single-loop 1/f flux-noise relaxation with the (1 + e^{-hw/kT}) factor.
double gamma1_flux_single(const circuit::SpectrumResult& spec, const NoiseModel& model);

// Two-loop correlated flux-noise relaxation from |<0|dH/dPhi_b|1>| couplings.
// Carries the same thermal factor as the single-loop form, so v_j = 0
// reduces exactly to gamma1_flux_single. Throws NegativeRateError if the
// correlation quadratic form goes negative.
double gamma1_flux_twoloop(const circuit::SpectrumResult& spec,
                           const circuit::FluxCouplings& couplings,
                           const NoiseModel& model);

// Gaussian spin-echo dephasing rate from correlated 1/f noise in both loops;
// the echo envelope is exp(-(Gamma_phi t)^2).
double gamma_phi_echo(const circuit::FluxGradient& derivs, const NoiseModel& model);

// Correlation factor predicted from uncorrelated loop fluxes: A_J / (2 A_L).
double clj_predicted(const NoiseModel& model);

struct TlsRates {
    double gamma_down = 0.0;  // |1> -> |0>
    double gamma_up = 0.0;    // |0> -> |1>
    double gamma1 = 0.0;      // gamma_down + gamma_up, temperature independent
};

// Golden-rule rates for a charge-TLS bath in thermal equilibrium. The rates
// obey detailed balance exactly and their sum is independent of T_eff.
TlsRates tls_golden_rule_rates(const circuit::SpectrumResult& spec,
                               const NoiseModel& model);

// Dielectric loss tangent from microscopic TLS parameters.
double tan_delta_from_micro(const TlsMicroParams& micro);

// Effective temperature from the equilibrium stray population:
// exp(-h w01 / kB T) = p / (1 - p). Requires 0 < p < 1/2.
double effective_temperature(double p_stray, double f01_ghz);

// Inverse of the above; t_k = 0 maps to zero population.
double stray_population(double t_k, double f01_ghz);

// Excited-state population from 1-2 Rabi amplitudes: A1 / (A1 + A0).
double rabi12_population(double a0, double a1);

}  // namespace fluxsim::decoherence
