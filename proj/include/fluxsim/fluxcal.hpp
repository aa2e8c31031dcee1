// fluxcal.hpp — flux-control calibration: linear crosstalk correction, the
// six-parameter voltage-to-flux mapping, the combined fit of that mapping to
// flux-pulsed Ramsey frequency data, and FFT frequency extraction.

#pragma once

#include "fluxsim/circuit.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace fluxsim::fluxcal {

using Vec2 = std::array<double, 2>;  // (L, J) component pairs

// Two-loop geometry: phi_L = phi_1 + phi_2/2 gives a native 0.5 crosstalk
// from the SQUID-loop control into the qubit loop; default initial guesses
// seed o1 with this value.
inline constexpr double kNativeLjCrosstalk = 0.5;

struct CrosstalkMatrix {
    double o1 = 0.0;  // M = [[1, o1], [o2, 1]]
    double o2 = 0.0;

    double determinant() const { return 1.0 - o1 * o2; }
    void validate() const;  // SingularMatrixError if |det| < 1e-6
};

// Physical voltages from effective ones: solve M Z = Z_eff.
Vec2 apply_crosstalk_correction(const Vec2& z_eff, const CrosstalkMatrix& m);

struct FluxMapParams {
    double o1 = 0.0;   // crosstalk off-diagonals
    double o2 = 0.0;
    double z0_l = 0.0;  // voltage zero points, V
    double z0_j = 0.0;
    double s_l = 1.0;   // volts per Phi0
    double s_j = 1.0;

    void validate() const;
};

// (Phi_L, Phi_J) in Phi0 from applied voltages: fluxes = (M z - z0) / s.
Vec2 voltages_to_fluxes(const Vec2& z, const FluxMapParams& p);
// Exact inverse of the above.
Vec2 fluxes_to_voltages(const Vec2& fluxes, const FluxMapParams& p);

struct CalPoint {
    double z_l_v = 0.0;
    double z_j_v = 0.0;
    double f01_mhz = 0.0;
};

struct FluxMapFitOptions {
    bool co_fit_circuit = false;  // also fit (E_C, E_L, E_J1, E_J2)
    int fit_basis_dim = 100;      // truncation for inner-loop model evaluations
    int nm_max_evals = 400;       // L1 polish budget
};

struct FluxMapFit {
    FluxMapParams params;
    circuit::CircuitParams circuit_params;
    double mad_mhz = 0.0;                 // mean absolute deviation
    std::array<double, 6> param_stderr{};  // same order as FluxMapParams fields
    int n_evals = 0;
};

// Fit the six mapping parameters (optionally plus the circuit energies) to
// measured (Z_L, Z_J, f01) triples: Levenberg–Marquardt on the squared
// residuals for robustness, then a Nelder–Mead polish of the mean absolute
// deviation, which is the reported fit metric. Requires >= 20 points and an
// initial guess. Throws FitError on divergence.
FluxMapFit fit_flux_map(const std::vector<CalPoint>& data,
                        const circuit::CircuitParams& circuit,
                        const FluxMapParams& initial,
                        const FluxMapFitOptions& options = {});

// Dominant oscillation frequency (MHz) of a uniformly sampled Ramsey trace:
// maximum-magnitude non-DC FFT bin refined by quadratic interpolation.
// Throws DegenerateSignalError when no spectral peak rises above the DC bin,
// GridError for a non-uniform grid, ConfigError for fewer than 32 samples.
double frequency_from_ramsey_fft(std::span<const double> delay_us,
                                 std::span<const double> p1);

}  // namespace fluxsim::fluxcal
