#include "fluxsim/noisespec.hpp"

#include "fluxsim/constants.hpp"
#include "fluxsim/errors.hpp"
#include "fluxsim/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace fluxsim::noisespec {

namespace k = fluxsim::constants;

void DecayTrace::validate() const {
    if (delay_us.size() != p1.size()) {
        throw ConfigError("DecayTrace: delay and p1 arrays differ in length");
    }
    if (delay_us.size() < 6) {
        throw ConfigError("DecayTrace: at least 6 points required");
    }
    for (std::size_t i = 0; i + 1 < delay_us.size(); ++i) {
        if (!(delay_us[i + 1] > delay_us[i])) {
            throw ConfigError("DecayTrace: delays must be strictly increasing");
        }
    }
    for (double v : p1) {
        if (!(v >= 0.0) || !(v <= 1.0)) {
            throw ConfigError("DecayTrace: p1 values must lie in [0, 1]");
        }
    }
}

namespace {

constexpr double kT1MaxUs = 1e5;  // 100 ms
constexpr double kT1MinUs = 1e-2;

struct ProfiledFit {
    double ssr = std::numeric_limits<double>::infinity();
    double p_stray = 0.0;
    double p0_up = 0.0;
    double p0_down = 0.0;
};

// For fixed T1 the model is linear in (p_stray, q_up, q_down) with
// P(t) = p_stray + q exp(-t/T1); solve the joint linear least squares.
ProfiledFit profiled_linear_fit(const DecayTrace& up, const DecayTrace& down,
                                double t1_us) {
    const int nu = static_cast<int>(up.delay_us.size());
    const int nd = static_cast<int>(down.delay_us.size());
    Eigen::MatrixXd design = Eigen::MatrixXd::Zero(nu + nd, 3);
    Eigen::VectorXd y(nu + nd);
    for (int i = 0; i < nu; ++i) {
        design(i, 0) = 1.0;
        design(i, 1) = std::exp(-up.delay_us[i] / t1_us);
        y(i) = up.p1[i];
    }
    for (int i = 0; i < nd; ++i) {
        design(nu + i, 0) = 1.0;
        design(nu + i, 2) = std::exp(-down.delay_us[i] / t1_us);
        y(nu + i) = down.p1[i];
    }
    Eigen::VectorXd coef = design.colPivHouseholderQr().solve(y);
    ProfiledFit out;
    out.ssr = (design * coef - y).squaredNorm();
    out.p_stray = coef(0);
    out.p0_up = coef(0) + coef(1);
    out.p0_down = coef(0) + coef(2);
    return out;
}

}  // namespace

RelaxationFit fit_relaxation_pair(const DecayTrace& up, const DecayTrace& down) {
    up.validate();
    down.validate();

    auto ssr_of_log_t1 = [&](double log_t1) {
        return profiled_linear_fit(up, down, std::exp(log_t1)).ssr;
    };

    // coarse log scan, then golden-section refinement of the bracket
    constexpr int n_scan = 90;
    const double lo = std::log(kT1MinUs);
    const double hi = std::log(kT1MaxUs);
    int best = 0;
    double best_ssr = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_scan; ++i) {
        double lg = lo + (hi - lo) * i / (n_scan - 1);
        double s = ssr_of_log_t1(lg);
        if (s < best_ssr) {
            best_ssr = s;
            best = i;
        }
    }
    if (best == 0 || best == n_scan - 1) {
        throw FitError("fit_relaxation_pair: T1 outside (0.01 us, 100 ms)");
    }
    const double step = (hi - lo) / (n_scan - 1);
    auto min1d = numeric::golden_section(ssr_of_log_t1, lo + (best - 1) * step,
                                         lo + (best + 1) * step, 1e-12);

    const double t1_us = std::exp(min1d.x);
    ProfiledFit pf = profiled_linear_fit(up, down, t1_us);
    if (!std::isfinite(pf.ssr)) {
        throw FitError("fit_relaxation_pair: degenerate least-squares system");
    }
    RelaxationFit fit;
    fit.t1_us = t1_us;
    fit.p_stray = pf.p_stray;
    fit.p0_excited = pf.p0_up;
    fit.p0_ground = pf.p0_down;
    fit.residual_rms =
        std::sqrt(pf.ssr / static_cast<double>(up.p1.size() + down.p1.size()));
    return fit;
}

SpectraPoint spectra_from_fit(const RelaxationFit& fit,
                              const circuit::SpectrumResult& spec) {
    if (!(fit.t1_us > 0.0)) {
        throw DomainError("spectra_from_fit: requires T1 > 0");
    }
    const double phi01 = spec.abs_phi01();
    if (phi01 < 1e-6) {
        throw DomainError("spectra_from_fit: |<0|phi|1>| below 1e-6, spectrum ill-conditioned");
    }
    double p = fit.p_stray;
    if (p > 0.5) {
        throw DomainError("spectra_from_fit: p_stray > 0.5 (negative-temperature regime)");
    }
    p = std::max(p, 0.0);

    const double el_j = k::ghz_to_joule(spec.params.el_ghz);
    const double inductance = k::reduced_flux_quantum * k::reduced_flux_quantum / el_j;
    const double two_e = 2.0 * k::elementary_charge;
    const double t1_s = fit.t1_us * 1e-6;
    const double s_plus_wb = two_e * two_e * inductance * inductance /
                             (t1_s * phi01 * phi01);  // Wb^2/Hz

    SpectraPoint pt;
    pt.f01_ghz = spec.f01_ghz;
    pt.t1_us = fit.t1_us;
    pt.p_stray = p;
    pt.s_plus = s_plus_wb / (k::flux_quantum * k::flux_quantum) * 1e12;
    pt.s_minus = (1.0 - 2.0 * p) * pt.s_plus;
    if (p == 0.0) {
        pt.t_eff_k = 0.0;
    } else if (p == 0.5) {
        pt.t_eff_k = std::numeric_limits<double>::infinity();
    } else {
        pt.t_eff_k = decoherence::effective_temperature(p, spec.f01_ghz);
    }
    return pt;
}

namespace {

// dielectric golden-rule background as effective flux noise, Phi0^2/Hz
double diel_term_phi0sq(double tan_delta_ref, double gamma_exp, double omega,
                        double omega_r, double ec_j, double el_j) {
    const double pref = k::hbar * k::hbar * k::hbar * k::reduced_flux_quantum *
                        k::reduced_flux_quantum / (4.0 * ec_j * el_j * el_j);
    const double w2 = omega * omega * std::pow(omega / omega_r, gamma_exp - 2.0);
    return pref * tan_delta_ref * w2 / (k::flux_quantum * k::flux_quantum);
}

double flux_term_phi0sq(const decoherence::NoiseModel& m, double omega) {
    const double thermal =
        (m.t_a_k > 0.0)
            ? 1.0 + std::exp(-k::hbar * omega / (k::boltzmann_k * m.t_a_k))
            : 1.0;
    return decoherence::flux_psd(m.a_l, m.alpha, omega, m.omega_r) * thermal;
}

}  // namespace

double splus_model(const decoherence::NoiseModel& m, double ec_ghz, double el_ghz,
                   double omega) {
    const double flux = flux_term_phi0sq(m, omega);
    const double diel = diel_term_phi0sq(m.tan_delta_ref, m.gamma_exp, omega,
                                         m.omega_r, k::ghz_to_joule(ec_ghz),
                                         k::ghz_to_joule(el_ghz));
    return (flux + diel) * 1e12;  // (uPhi0)^2/Hz
}

double sminus_model(const decoherence::NoiseModel& m, double ec_ghz, double el_ghz,
                    double omega) {
    const double th = (m.t_a_k > 0.0)
                          ? std::tanh(k::hbar * omega / (2.0 * k::boltzmann_k * m.t_a_k))
                          : 1.0;
    return splus_model(m, ec_ghz, el_ghz, omega) * th;
}

NoiseFitResult fit_noise_model(const std::vector<SpectraPoint>& points,
                               double ec_ghz, double el_ghz) {
    if (points.size() < 8) {
        throw FitError("fit_noise_model: at least 8 spectra points required");
    }
    for (const auto& p : points) {
        if (!(p.f01_ghz > 0.0) || !(p.s_plus > 0.0) || !(p.s_minus > 0.0)) {
            throw FitError("fit_noise_model: spectra must be positive with f01 > 0");
        }
    }

    const double omega_r = 2.0 * std::numbers::pi * 1e9;
    std::vector<double> omega(points.size());
    double w_min = std::numeric_limits<double>::infinity(), w_max = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        omega[i] = k::ghz_to_rad_s(points[i].f01_ghz);
        w_min = std::min(w_min, omega[i]);
        w_max = std::max(w_max, omega[i]);
    }

    auto model_of = [&](const Eigen::VectorXd& x) {
        decoherence::NoiseModel m = decoherence::NoiseModel::defaults();
        m.a_l = std::exp(x(0));
        m.alpha = std::clamp(x(1), -1.0, 6.0);
        m.tan_delta_ref = std::exp(x(2));
        m.gamma_exp = std::clamp(x(3), -1.0, 6.0);
        m.omega_r = omega_r;
        m.t_a_k = std::exp(x(4));
        return m;
    };

    auto residuals = [&](const Eigen::VectorXd& x) {
        decoherence::NoiseModel m = model_of(x);
        Eigen::VectorXd r(2 * points.size());
        for (std::size_t i = 0; i < points.size(); ++i) {
            r(2 * i) = std::log(splus_model(m, ec_ghz, el_ghz, omega[i])) -
                       std::log(points[i].s_plus);
            r(2 * i + 1) = std::log(sminus_model(m, ec_ghz, el_ghz, omega[i])) -
                           std::log(points[i].s_minus);
        }
        return r;
    };

    // data-driven initial guess: flux amplitude from the lowest-frequency
    // point, loss tangent from the highest-frequency point
    const double t_a0 = 0.015;
    std::size_t i_lo = 0, i_hi = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (omega[i] < omega[i_lo]) i_lo = i;
        if (omega[i] > omega[i_hi]) i_hi = i;
    }
    const double s_lo_phi0 = points[i_lo].s_plus * 1e-12;
    const double thermal_lo =
        1.0 + std::exp(-k::hbar * omega[i_lo] / (k::boltzmann_k * t_a0));
    double a0 = std::sqrt(std::max(
        s_lo_phi0 * omega[i_lo] / (2.0 * std::numbers::pi * thermal_lo), 1e-24));
    const double diel_unit = diel_term_phi0sq(1.0, 2.0, omega[i_hi], omega_r,
                                              k::ghz_to_joule(ec_ghz),
                                              k::ghz_to_joule(el_ghz));
    double td0 = std::max(points[i_hi].s_plus * 1e-12 / diel_unit, 1e-12);

    // two seeds for the dielectric exponent; the likelihood occasionally has a
    // shallow secondary minimum along the alpha-gamma trade-off
    numeric::LevMarResult lm;
    bool have = false;
    for (double gamma0 : {2.0, 3.0}) {
        Eigen::VectorXd x0(5);
        x0 << std::log(a0), 1.0, std::log(td0), gamma0, std::log(t_a0);
        auto trial = numeric::levenberg_marquardt(residuals, x0);
        if (!trial.x.allFinite()) continue;
        if (!have || trial.ssr < lm.ssr) {
            lm = trial;
            have = true;
        }
    }
    if (!have) {
        throw FitError("fit_noise_model: optimizer failed");
    }

    NoiseFitResult out;
    out.model = model_of(lm.x);
    out.n_iterations = lm.n_iter;
    out.residual_rms = std::sqrt(lm.ssr / lm.n_residuals);

    Eigen::VectorXd se = numeric::standard_errors(lm);
    out.stderrs.a_l = out.model.a_l * se(0);  // delta method for log params
    out.stderrs.alpha = se(1);
    out.stderrs.tan_delta = out.model.tan_delta_ref * se(2);
    out.stderrs.gamma_exp = se(3);
    out.stderrs.t_a = out.model.t_a_k * se(4);

    // crossover: flux term equals dielectric term
    const double ec_j = k::ghz_to_joule(ec_ghz);
    const double el_j = k::ghz_to_joule(el_ghz);
    auto imbalance = [&](double lw) {
        const double w = std::exp(lw);
        return std::log(flux_term_phi0sq(out.model, w)) -
               std::log(diel_term_phi0sq(out.model.tan_delta_ref, out.model.gamma_exp,
                                         w, omega_r, ec_j, el_j));
    };
    const double lw_lo = std::log(2.0 * std::numbers::pi * 1e7);
    const double lw_hi = std::log(2.0 * std::numbers::pi * 5e9);
    if (imbalance(lw_lo) * imbalance(lw_hi) < 0.0) {
        double lw = numeric::bisect_root(imbalance, lw_lo, lw_hi, 1e-10);
        out.crossover_ghz = std::exp(lw) / (2.0 * std::numbers::pi * 1e9);
        const double wc = std::exp(lw);
        out.single_regime = (wc < w_min || wc > w_max);
    } else {
        out.crossover_ghz = std::numeric_limits<double>::quiet_NaN();
        out.single_regime = true;
    }
    return out;
}

}  // namespace fluxsim::noisespec
