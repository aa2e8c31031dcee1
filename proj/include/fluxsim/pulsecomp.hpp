// pulsecomp.hpp — flux-pulse distortion modelling and pre-compensation.
//
// The channel is modelled by its step response s(t) = 1 + sum_i a_i e^{-t/tau_i};
// each exponential settling component maps to one first-order recursive filter
// section by exact pole matching at the sample rate, and the pre-distortion
// cascade inverts the sampled channel exactly.

#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace fluxsim::pulsecomp {

struct ExpComponent {
    double amplitude = 0.0;  // settling amplitude a_i (fraction, |a| < 1)
    double tau_ns = 0.0;     // settling time
};

struct StepResponseModel {
    std::vector<ExpComponent> components;  // sorted by tau ascending
    double sample_rate = 1e9;              // samples per second

    double amplitude_sum() const;
    void validate() const;  // throws ConfigError
};

// Sampled channel output for an arbitrary waveform; exact for step inputs:
// a unit step maps to 1 + sum_i a_i exp(-n/(tau_i fs)).
std::vector<double> simulate_distortion(const StepResponseModel& model,
                                        std::span<const double> waveform);

struct FilterSection {
    double b0 = 1.0;  // transfer (b0 + b1 z^-1) / (1 + a1 z^-1)
    double b1 = 0.0;
    double a1 = 0.0;
};

struct PredistortionFilter {
    std::vector<FilterSection> sections;  // one per exponential component
    double sample_rate = 1e9;

    std::vector<double> apply(std::span<const double> waveform) const;
    // Gain of the cascade at zero frequency (z = 1).
    double dc_gain() const;
    // First-sample (instantaneous) gain; equals 1/(1 + sum a_i) for the
    // exact inverse of the channel model above.
    double instantaneous_gain() const;
};

// Exact discrete inverse of the sampled channel, as a cascade of first-order
// recursive sections (one per component). Throws InstabilityError when a
// section pole would have magnitude >= 1 or the inverse poles are not real.
PredistortionFilter design_predistortion(const StepResponseModel& model);

struct StepFitResult {
    StepResponseModel model;
    double residual_rms = 0.0;
    double bic = 0.0;
    std::string warning;  // set when two settling times lie within 10%
};

// Fit phase-error-versus-delay data with delta_phi(t) = scale * sum a_i e^{-t/tau_i}.
// The component count (up to max_components) is selected by BIC; a flat zero
// trace yields an empty model. Settling times are optimized over a profiled
// linear fit of the amplitudes.
StepFitResult fit_step_response(std::span<const double> delay_ns,
                                std::span<const double> phase_error,
                                double scale, int max_components = 4,
                                double sample_rate = 1e9);

struct P1Map {
    std::vector<double> z_l;  // strictly ascending voltage axis
    std::vector<double> t;    // arbitrary time axis
    Eigen::MatrixXd p1;       // rows follow t, columns follow z_l
};

// Undo the pulse-tail tilt: P1'(Z_L, t) = P1(Z_L + Z_c(t), t) with
// Z_c = a (1 - exp(b t)), by linear interpolation along the Z_L axis.
// Cells shifted outside the grid become NaN.
P1Map correct_p1_tilt(const P1Map& map, double a, double b);

}  // namespace fluxsim::pulsecomp
