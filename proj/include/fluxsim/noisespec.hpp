// noisespec.hpp — noise-spectroscopy analysis: joint exponential fits of
// up/down relaxation traces, conversion to two-sided flux-noise spectra
// (S+, S-), and the combined flux-noise + dielectric-loss spectral model fit.

#pragma once

#include "fluxsim/circuit.hpp"
#include "fluxsim/decoherence.hpp"

#include <string>
#include <vector>

namespace fluxsim::noisespec {

enum class PreparedState { Excited, Ground };

struct DecayTrace {
    std::vector<double> delay_us;  // strictly increasing
    std::vector<double> p1;        // in [0, 1]
    PreparedState prepared = PreparedState::Excited;

    void validate() const;  // throws ConfigError
};

struct RelaxationFit {
    double t1_us = 0.0;
    double p_stray = 0.0;
    double p0_excited = 0.0;  // fitted initial populations per trace
    double p0_ground = 0.0;
    double residual_rms = 0.0;
};

// Joint least-squares fit of P(t) = p_stray + (P0 - p_stray) exp(-t/T1) to a
// pair of traces (shared T1 and p_stray, per-trace P0). The amplitudes enter
// linearly, so T1 is found by a 1-D search over profiled linear fits.
// Throws FitError when T1 leaves (0, 100 ms].
RelaxationFit fit_relaxation_pair(const DecayTrace& up, const DecayTrace& down);

struct SpectraPoint {
    double f01_ghz = 0.0;
    double t1_us = 0.0;
    double p_stray = 0.0;
    double s_plus = 0.0;   // (uPhi0)^2/Hz
    double s_minus = 0.0;  // (uPhi0)^2/Hz
    double t_eff_k = 0.0;
};

// Two-sided spectra from a relaxation fit at one bias point:
//   S+ = (2e)^2 L^2 / (T1 |<0|phi|1>|^2),  L = phi0^2 / E_L,
//   S- = (1 - 2 p_stray) S+,
// with the effective temperature from detailed balance. Small negative fitted
// p_stray is clamped to zero; p_stray >= 1/2 is out of model scope.
SpectraPoint spectra_from_fit(const RelaxationFit& fit,
                              const circuit::SpectrumResult& spec);

// Spectral model evaluated in (uPhi0)^2/Hz at angular frequency omega:
//   S+ = S_flux(omega) (1 + e^{-hw/kT_A}) + S_diel(omega)
//   S- = S+ tanh(hw / 2 k T_A)
// where S_flux is the 1/f^alpha law of NoiseModel.a_l and S_diel is the
// charge-TLS golden-rule background tan_delta_ref (w/w_r)^(gamma-2) w^2
// expressed as effective flux noise through (E_C, E_L).
double splus_model(const decoherence::NoiseModel& m, double ec_ghz, double el_ghz,
                   double omega);
double sminus_model(const decoherence::NoiseModel& m, double ec_ghz, double el_ghz,
                    double omega);

struct NoiseFitErrors {
    double a_l = 0.0;  // Phi0/sqrt(Hz)
    double alpha = 0.0;
    double tan_delta = 0.0;
    double gamma_exp = 0.0;
    double t_a = 0.0;
};

struct NoiseFitResult {
    decoherence::NoiseModel model;
    NoiseFitErrors stderrs;
    double crossover_ghz = 0.0;  // flux term == dielectric term; NaN if none
    bool single_regime = false;  // identifiability warning
    double residual_rms = 0.0;   // in log-spectrum units
    int n_iterations = 0;
};

// Weighted nonlinear least squares of (log S+, log S-) over all points, with
// positive parameters log-parameterized. Requires at least 8 points.
NoiseFitResult fit_noise_model(const std::vector<SpectraPoint>& points,
                               double ec_ghz, double el_ghz);

}  // namespace fluxsim::noisespec
