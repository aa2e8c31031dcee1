#include "fluxsim/fluxcal.hpp"

#include "fluxsim/errors.hpp"
#include "fluxsim/numeric.hpp"
#include "fluxsim/parallel.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <vector>

namespace fluxsim::fluxcal {

namespace {
constexpr double kDetMargin = 1e-6;
}

void CrosstalkMatrix::validate() const {
    if (std::abs(determinant()) < kDetMargin) {
        throw SingularMatrixError("CrosstalkMatrix: 1 - o1*o2 within 1e-6 of zero");
    }
}

Vec2 apply_crosstalk_correction(const Vec2& z_eff, const CrosstalkMatrix& m) {
    m.validate();
    const double det = m.determinant();
    return {(z_eff[0] - m.o1 * z_eff[1]) / det,
            (z_eff[1] - m.o2 * z_eff[0]) / det};
}

void FluxMapParams::validate() const {
    CrosstalkMatrix{o1, o2}.validate();
    if (s_l == 0.0 || s_j == 0.0) {
        throw ConfigError("FluxMapParams: scale factors must be nonzero");
    }
}

Vec2 voltages_to_fluxes(const Vec2& z, const FluxMapParams& p) {
    p.validate();
    return {(z[0] + p.o1 * z[1] - p.z0_l) / p.s_l,
            (p.o2 * z[0] + z[1] - p.z0_j) / p.s_j};
}

Vec2 fluxes_to_voltages(const Vec2& fluxes, const FluxMapParams& p) {
    p.validate();
    const Vec2 rhs = {p.s_l * fluxes[0] + p.z0_l, p.s_j * fluxes[1] + p.z0_j};
    return apply_crosstalk_correction(rhs, CrosstalkMatrix{p.o1, p.o2});
}

namespace {

struct FitSpace {
    bool co_fit = false;
    circuit::CircuitParams base;

    int size() const { return co_fit ? 10 : 6; }

    Eigen::VectorXd pack(const FluxMapParams& p) const {
        Eigen::VectorXd x(size());
        x << p.o1, p.o2, p.z0_l, p.z0_j, p.s_l, p.s_j;
        if (co_fit) {
            x.conservativeResize(10);
            x(6) = base.ec_ghz;
            x(7) = base.el_ghz;
            x(8) = base.ej1_ghz;
            x(9) = base.ej2_ghz;
        }
        return x;
    }

    FluxMapParams map_of(const Eigen::VectorXd& x) const {
        return {x(0), x(1), x(2), x(3), x(4), x(5)};
    }

    circuit::CircuitParams circuit_of(const Eigen::VectorXd& x) const {
        circuit::CircuitParams c = base;
        if (co_fit) {
            c.ec_ghz = x(6);
            c.el_ghz = x(7);
            c.ej1_ghz = x(8);
            c.ej2_ghz = x(9);
        }
        return c;
    }
};

bool params_usable(const FluxMapParams& p, const circuit::CircuitParams& c) {
    if (std::abs(1.0 - p.o1 * p.o2) < kDetMargin) return false;
    if (std::abs(p.s_l) < 1e-9 || std::abs(p.s_j) < 1e-9) return false;
    if (!(c.ec_ghz > 0.0) || !(c.el_ghz > 0.0) || c.ej1_ghz < 0.0 || c.ej2_ghz < 0.0) {
        return false;
    }
    return true;
}

}  // namespace

FluxMapFit fit_flux_map(const std::vector<CalPoint>& data,
                        const circuit::CircuitParams& circuit_params,
                        const FluxMapParams& initial,
                        const FluxMapFitOptions& options) {
    if (data.size() < 20) {
        throw FitError("fit_flux_map: at least 20 calibration points required");
    }
    circuit_params.validate();
    initial.validate();

    FitSpace space{options.co_fit_circuit, circuit_params};
    const int n = static_cast<int>(data.size());
    int n_evals = 0;

    // Soft window keeping every data point within one flux quantum per axis;
    // wildly wrong scales alias the periodic spectrum into adjacent branches
    // and this barrier removes those spurious basins.
    auto window_penalty = [](double flux, double center) {
        const double excess = std::abs(flux - center) - 0.45;
        return excess > 0.0 ? 1e4 * excess : 0.0;
    };

    auto residuals = [&](const Eigen::VectorXd& x) {
        ++n_evals;
        Eigen::VectorXd r(3 * n);
        const FluxMapParams p = space.map_of(x);
        const circuit::CircuitParams c = space.circuit_of(x);
        if (!params_usable(p, c)) {
            r.setConstant(1e6);
            return r;
        }
        parallel_for(n, [&](std::size_t i) {
            const Vec2 fl = voltages_to_fluxes({data[i].z_l_v, data[i].z_j_v}, p);
            r(i) = 1e3 * circuit::f01_fixed_dim(
                             c, circuit::FluxBias::loop(fl[1], fl[0]),
                             options.fit_basis_dim) -
                   data[i].f01_mhz;
            r(n + i) = window_penalty(fl[0], 0.5);
            r(2 * n + i) = window_penalty(fl[1], 0.25);
        });
        return r;
    };

    // The spectrum is periodic and even in phi_j, so a poor initial guess can
    // slide into an aliased local minimum. Sequential multistart over scale
    // perturbations; a start is accepted once the rms residual is noise-scale.
    const double accept_ssr = n * 400.0;  // (20 MHz)^2 per point
    const std::array<std::pair<double, double>, 5> scale_starts{
        {{1.0, 1.0}, {1.2, 0.8}, {0.8, 1.2}, {0.8, 0.8}, {1.2, 1.2}}};
    numeric::LevMarOptions lm_opts;
    lm_opts.max_iter = 80;

    numeric::LevMarResult lm;
    bool have_lm = false;
    for (const auto& [ml, mj] : scale_starts) {
        FluxMapParams start = initial;
        start.s_l *= ml;
        start.s_j *= mj;
        auto trial = numeric::levenberg_marquardt(residuals, space.pack(start), lm_opts);
        if (!trial.x.allFinite() || !std::isfinite(trial.ssr)) continue;
        if (!have_lm || trial.ssr < lm.ssr) {
            lm = trial;
            have_lm = true;
        }
        if (have_lm && lm.ssr <= accept_ssr) break;
    }
    if (!have_lm) {
        throw FitError("fit_flux_map: least-squares stage diverged");
    }
    // full-precision pass from the winning start
    auto polished = numeric::levenberg_marquardt(residuals, lm.x);
    if (polished.x.allFinite() && polished.ssr <= lm.ssr) lm = polished;

    // The spectrum is even about phi_ext = 1/2 and in phi_j, so reflected
    // parameter sets form near-degenerate basins (split only by the weak
    // phi_j dependence of the qubit-loop offset). Probe each reflection of
    // the winner and refit if one is better.
    {
        const FluxMapParams w = space.map_of(lm.x);
        const circuit::CircuitParams wc = space.circuit_of(lm.x);
        double mean_pj = 0.0;
        for (const auto& d : data) {
            mean_pj += voltages_to_fluxes({d.z_l_v, d.z_j_v}, w)[1];
        }
        mean_pj /= n;
        const double c_l = 1.0 + 2.0 * circuit::flux_offset(wc, mean_pj);

        std::vector<FluxMapParams> reflections;
        auto flip_l = [&](FluxMapParams v) {
            v.z0_l += c_l * v.s_l;
            v.s_l = -v.s_l;
            return v;
        };
        auto flip_j_sign = [](FluxMapParams v) {
            v.s_j = -v.s_j;
            return v;
        };
        auto flip_j_half = [](FluxMapParams v) {
            v.z0_j += v.s_j;
            v.s_j = -v.s_j;
            return v;
        };
        reflections.push_back(flip_l(w));
        reflections.push_back(flip_j_sign(w));
        reflections.push_back(flip_j_half(w));
        reflections.push_back(flip_j_sign(flip_l(w)));
        reflections.push_back(flip_j_half(flip_l(w)));

        Eigen::VectorXd best_x;
        double best_ssr = lm.ssr;
        for (const auto& v : reflections) {
            Eigen::VectorXd x = lm.x;
            x(0) = v.o1;
            x(1) = v.o2;
            x(2) = v.z0_l;
            x(3) = v.z0_j;
            x(4) = v.s_l;
            x(5) = v.s_j;
            const double ssr = residuals(x).squaredNorm();
            if (ssr < best_ssr) {
                best_ssr = ssr;
                best_x = x;
            }
        }
        if (best_x.size() > 0) {
            auto refit = numeric::levenberg_marquardt(residuals, best_x);
            if (refit.x.allFinite() && refit.ssr < lm.ssr) lm = refit;
        }
    }

    // polish the reported metric directly: mean absolute deviation over the
    // frequency residuals (the window terms stay as a barrier)
    auto mad_objective = [&](const Eigen::VectorXd& x) {
        const Eigen::VectorXd r = residuals(x);
        return r.head(n).array().abs().mean() + r.tail(2 * n).array().abs().sum();
    };
    Eigen::VectorXd steps = Eigen::VectorXd::Zero(space.size());
    for (int i = 0; i < space.size(); ++i) {
        steps(i) = std::max(1e-4, 1e-3 * std::abs(lm.x(i)));
    }
    numeric::NelderMeadOptions nm_opts;
    nm_opts.max_evals = options.nm_max_evals;
    auto nm = numeric::nelder_mead(mad_objective, lm.x, steps, nm_opts);
    const Eigen::VectorXd best = (nm.fx <= mad_objective(lm.x)) ? nm.x : lm.x;

    FluxMapFit fit;
    fit.params = space.map_of(best);
    fit.circuit_params = space.circuit_of(best);
    if (!params_usable(fit.params, fit.circuit_params)) {
        throw FitError("fit_flux_map: fit left the valid parameter region");
    }

    // final metric with the convergence-checked diagonalizer
    double abs_sum = 0.0;
    for (const auto& d : data) {
        const Vec2 fl = voltages_to_fluxes({d.z_l_v, d.z_j_v}, fit.params);
        const double f = 1e3 * circuit::f01_only(fit.circuit_params,
                                                 circuit::FluxBias::loop(fl[1], fl[0]));
        abs_sum += std::abs(f - d.f01_mhz);
    }
    fit.mad_mhz = abs_sum / n;
    fit.n_evals = n_evals;

    Eigen::VectorXd se = numeric::standard_errors(lm);
    for (int i = 0; i < 6; ++i) fit.param_stderr[i] = se(i);
    return fit;
}

double frequency_from_ramsey_fft(std::span<const double> delay_us,
                                 std::span<const double> p1) {
    const std::size_t n = delay_us.size();
    if (n != p1.size()) {
        throw GridError("frequency_from_ramsey_fft: arrays differ in length");
    }
    if (n < 32) {
        throw ConfigError("frequency_from_ramsey_fft: at least 32 samples required");
    }
    const double dt = delay_us[1] - delay_us[0];
    if (!(dt > 0.0)) {
        throw GridError("frequency_from_ramsey_fft: delays must increase");
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (std::abs((delay_us[i + 1] - delay_us[i]) - dt) > 1e-6 * dt) {
            throw GridError("frequency_from_ramsey_fft: non-uniform delay grid");
        }
    }

    std::vector<double> in(p1.begin(), p1.end());
    std::vector<std::complex<double>> out(n / 2 + 1);
    {
        // FFTW plan creation is not thread-safe; execution is
        static std::mutex plan_mutex;
        std::lock_guard<std::mutex> lock(plan_mutex);
        fftw_plan plan = fftw_plan_dft_r2c_1d(
            static_cast<int>(n), in.data(),
            reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
        fftw_execute(plan);
        fftw_destroy_plan(plan);
    }

    const std::size_t n_bins = out.size();
    std::size_t peak = 1;
    double peak_mag = 0.0;
    for (std::size_t k = 1; k < n_bins; ++k) {
        double m = std::abs(out[k]);
        if (m > peak_mag) {
            peak_mag = m;
            peak = k;
        }
    }
    double signal_scale = 0.0;
    for (double v : in) signal_scale += std::abs(v);
    if (peak_mag <= 1e-10 * std::max(signal_scale, 1e-300)) {
        throw DegenerateSignalError(
            "frequency_from_ramsey_fft: no spectral peak above the DC bin");
    }

    double k_refined = static_cast<double>(peak);
    if (peak > 1 && peak + 1 < n_bins) {
        const double ml = std::abs(out[peak - 1]);
        const double mc = std::abs(out[peak]);
        const double mr = std::abs(out[peak + 1]);
        const double denom = ml - 2.0 * mc + mr;
        if (denom < 0.0) {
            k_refined += 0.5 * (ml - mr) / denom;
        }
    }
    return k_refined / (static_cast<double>(n) * dt);  // 1/us = MHz
}

}  // namespace fluxsim::fluxcal
