// tlsbath.hpp — Monte Carlo model of qubit relaxation in a bath of two-level
// defects following the standard tunneling model. Each defect contributes a
// Lorentzian rate peaked at its transition energy; fixed-delay P1 sweeps over
// qubit frequency expose the defects as dips.

#pragma once

#include "fluxsim/circuit.hpp"

#include <cstdint>
#include <vector>

namespace fluxsim::tlsbath {

struct BathConfig {
    int n_defects = 10000;
    double delta_max_ghz = 3.0;        // asymmetry energy, uniform on (min, max]
    double delta_min_ghz = 3e-4;
    double delta0_max_ghz = 3.0;       // tunneling energy, log-uniform on (min, max]
    double delta0_min_ghz = 3e-4;
    double tls_t2_min_ns = 5.0;        // TLS dephasing time, uniform
    double tls_t2_max_ns = 100.0;
    double s_max_mhz = 0.5;            // coupling scale S_max (MHz * h)
    double qubit_t1_intrinsic_s = 1e-3;
    double qubit_t2_intrinsic_s = 50e-6;

    void validate() const;  // throws ConfigError
};

struct TlsDefect {
    double delta_ghz = 0.0;    // asymmetry energy
    double delta0_ghz = 0.0;   // tunneling energy
    double e_tls_ghz = 0.0;    // sqrt(delta^2 + delta0^2)
    double g_mhz = 0.0;        // qubit coupling (MHz * h); sample_bath stores the
                               // unit-matrix-element value S_max cos(eta) sin(theta)
    double gamma2_d = 0.0;     // TLS dephasing-limited linewidth, 1/s
    double eta = 0.0;          // dipole-field angle
    double theta = 0.0;        // mixing angle, tan(theta) = delta0/delta
};

struct TlsEnsemble {
    BathConfig config;
    std::uint64_t seed = 0;
    std::vector<TlsDefect> defects;
};

// Deterministic uniform double in [0, 1) from one 64-bit PRNG draw
// (top 53 bits). Used so that sampled ensembles are generator-portable.
double uniform01(std::uint64_t raw);

// Sample a defect bath with std::mt19937_64 seeded explicitly. Per defect the
// draw order is: delta, delta0, eta, TLS T2.
TlsEnsemble sample_bath(const BathConfig& config, std::uint64_t seed);

// Qubit-TLS coupling g = |<0|n|1>| * S_max * cos(eta) * sin(theta), in MHz * h.
double coupling(const TlsDefect& defect, double n01, double s_max_mhz);

// Lorentzian rate contribution of one defect, treating defect.g_mhz as the
// realized coupling: 2 g^2 Gamma / (Gamma^2 + detuning^2) with
// Gamma = qubit_gamma2 + defect linewidth, everything in angular units.
double rate_contribution(const TlsDefect& defect, double f01_ghz,
                         double qubit_gamma2);

struct FrequencyGrid {
    double f_start_ghz = 0.2;
    double f_stop_ghz = 2.0;
    int n_points = 0;
};

struct P1Curve {
    std::vector<double> f01_ghz;   // uniform target grid (achieved to ~1e-6 GHz)
    std::vector<double> phi_j;     // solved SQUID flux per point
    std::vector<double> p1;
    double tau_s = 0.0;
};

// Fixed-delay P1 over a uniform qubit-frequency grid realized by tuning Phi_J
// with Phi_ext held at Phi0/2. P1(f) = exp(-tau * Gamma_total(f)).
P1Curve p1_sweep(const TlsEnsemble& ensemble, const circuit::CircuitParams& params,
                 const FrequencyGrid& grid, double tau_s);

// Total relaxation rate at one already-diagonalized bias point.
double total_rate(const TlsEnsemble& ensemble, double f01_ghz, double n01);

struct Dip {
    int index = 0;
    double f01_ghz = 0.0;
    double prominence = 0.0;
};

// Local minima of the curve with topographic prominence >= threshold.
// Plateau ties resolve to the lowest-frequency sample.
std::vector<Dip> find_dips(const P1Curve& curve, double prominence);
std::vector<Dip> find_dips(const std::vector<double>& f01_ghz,
                           const std::vector<double>& p1, double prominence);

}  // namespace fluxsim::tlsbath
