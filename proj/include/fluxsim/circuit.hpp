// circuit.hpp — EJ-tunable fluxonium circuit model.
//
// The qubit is a fluxonium whose single junction is replaced by a DC SQUID,
// giving two flux controls: Phi_J threads the SQUID loop and tunes the
// effective Josephson energy, Phi_L threads the qubit loop. For any pair
// (Phi_J, Phi_L) the circuit reduces to a conventional fluxonium
//
//     H = 4 E_C n^2 + (E_L/2) (phi + 2 pi phi_ext)^2 - E_J(Phi_J) cos(phi)
//
// with a signed effective E_J and a Phi_J-dependent offset absorbed into
// phi_ext = phi_l - phi_l0(phi_j). Diagonalization uses the truncated
// harmonic-oscillator basis of the (E_C, E_L) oscillator.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace fluxsim::circuit {

struct CircuitParams {
    double ec_ghz = 0.0;   // charging energy E_C/h
    double el_ghz = 0.0;   // inductive energy E_L/h
    double ej1_ghz = 0.0;  // SQUID junction energies E_J1/h, E_J2/h
    double ej2_ghz = 0.0;
    int basis_dim = 120;   // oscillator-basis truncation (starting value)
    int max_basis_dim = 400;

    // Throws ConfigError. E_C and E_L must be strictly positive; the junction
    // energies may be zero (plain LC / single-junction limits) but not negative.
    void validate() const;
};

enum class FluxConvention {
    LoopFlux,       // value stores Phi_L
    EffectiveFlux,  // value stores Phi_ext = Phi_L - Phi_L0(Phi_J)
};

struct FluxBias {
    double phi_j = 0.0;  // Phi_J in units of Phi0
    double value = 0.5;  // Phi_L or Phi_ext in units of Phi0, per convention
    FluxConvention convention = FluxConvention::LoopFlux;

    static FluxBias loop(double phi_j, double phi_l) {
        return {phi_j, phi_l, FluxConvention::LoopFlux};
    }
    static FluxBias effective(double phi_j, double phi_ext) {
        return {phi_j, phi_ext, FluxConvention::EffectiveFlux};
    }
};

// Signed effective Josephson energy E_J(Phi_J)/h in GHz:
//   sgn[cos(phi_J/2)] * sqrt(EJ1^2 + EJ2^2 + 2 EJ1 EJ2 cos(phi_J)),
// phi_J = 2 pi phi_j. Evaluated on the principal branch phi_j in (-1/2, 1/2]
// and extended with period 1, so the sign factor is +1 everywhere; at
// phi_j = 1/2 exactly (where cos(phi_J/2) = 0) the sign is +1 by convention.
double effective_ej(const CircuitParams& params, double phi_j);

// Phi_J-dependent flux offset in the qubit loop, in units of Phi0:
//   Phi_L0/Phi0 = arctan(((EJ1-EJ2)/(EJ1+EJ2)) tan(phi_J/2)) / 2 pi,
// continuous on phi_j in (-1/2, 1/2), extended with period 1; at phi_j = 1/2
// the limiting value from below (sign(EJ1-EJ2)/4) is used.
double flux_offset(const CircuitParams& params, double phi_j);

double phi_ext_of(const CircuitParams& params, const FluxBias& bias);
double phi_l_of(const CircuitParams& params, const FluxBias& bias);

struct SpectrumResult {
    CircuitParams params;
    FluxBias bias;
    std::vector<double> energies_ghz;  // ascending eigenenergies E_k/h
    double f01_ghz = 0.0;
    Eigen::MatrixXd phi_mat;   // <i|phi|j>, real symmetric
    Eigen::MatrixXcd n_mat;    // <i|n|j>, Hermitian with purely imaginary entries
    int basis_dim_used = 0;

    double abs_phi01() const { return std::abs(phi_mat(0, 1)); }
    double abs_n01() const { return std::abs(n_mat(0, 1)); }
};

// Diagonalize at one bias point. The truncation is accepted once f01 moves by
// less than 1 kHz when the basis grows by 20 states; params.basis_dim is
// doubled up to params.max_basis_dim until that holds, else ConvergenceError.
// Returns at least the lowest `n_levels` states (n_levels >= 6 enforced).
SpectrumResult diagonalize(const CircuitParams& params, const FluxBias& bias,
                           int n_levels = 6);

// f01 alone, same convergence contract (cheaper: no eigenvectors).
double f01_only(const CircuitParams& params, const FluxBias& bias);

// f01 at a fixed truncation with no convergence check. Inner loops of model
// fits use this; the public contract stays with diagonalize()/f01_only().
double f01_fixed_dim(const CircuitParams& params, const FluxBias& bias, int dim);

struct FluxGradient {
    double d_phi_l = 0.0;  // d(omega01)/d(Phi_L), rad/s per Phi0
    double d_phi_j = 0.0;  // d(omega01)/d(Phi_J), rad/s per Phi0
};

// Central finite differences of omega01 with step 1e-5 Phi0 on each axis,
// holding the other loop flux fixed.
FluxGradient f01_derivatives(const CircuitParams& params, const FluxBias& bias);

struct FluxCouplings {
    double v_l_ghz = 0.0;  // |<0| dH/dPhi_L |1>|/h, GHz per Phi0
    double v_j_ghz = 0.0;  // |<0| dH/dPhi_J |1>|/h, GHz per Phi0
};

// Transition matrix elements of the flux derivatives of H, by central
// finite differences of the Hamiltonian at fixed basis.
FluxCouplings flux_couplings(const CircuitParams& params, const FluxBias& bias);

// Phi_L in [0.4, 0.6] minimizing f01 at the given phi_j, located to 1e-5 Phi0.
// Throws NoMinimumError when f01 is monotonic over the bracket.
double sweet_spot_locate(const CircuitParams& params, double phi_j);

}  // namespace fluxsim::circuit
