#include "fluxsim/tlsbath.hpp"

#include "fluxsim/constants.hpp"
#include "fluxsim/errors.hpp"
#include "fluxsim/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace fluxsim::tlsbath {

namespace k = fluxsim::constants;

void BathConfig::validate() const {
    if (n_defects < 0) {
        throw ConfigError("BathConfig: n_defects must be non-negative");
    }
    if (!(delta_min_ghz > 0.0) || !(delta_max_ghz > delta_min_ghz) ||
        !(delta0_min_ghz > 0.0) || !(delta0_max_ghz > delta0_min_ghz)) {
        throw ConfigError("BathConfig: energy bounds must be positive with max > min");
    }
    if (!(tls_t2_min_ns > 0.0) || !(tls_t2_max_ns > tls_t2_min_ns)) {
        throw ConfigError("BathConfig: TLS T2 bounds must be positive with max > min");
    }
    if (!(s_max_mhz >= 0.0)) {
        throw ConfigError("BathConfig: s_max must be non-negative");
    }
    if (!(qubit_t1_intrinsic_s > 0.0) || !(qubit_t2_intrinsic_s > 0.0)) {
        throw ConfigError("BathConfig: intrinsic qubit times must be positive");
    }
}

double uniform01(std::uint64_t raw) {
    return static_cast<double>(raw >> 11) * 0x1.0p-53;
}

TlsEnsemble sample_bath(const BathConfig& config, std::uint64_t seed) {
    config.validate();
    TlsEnsemble ens;
    ens.config = config;
    ens.seed = seed;
    ens.defects.resize(config.n_defects);

    std::mt19937_64 rng(seed);
    const double log_d0_min = std::log(config.delta0_min_ghz);
    const double log_d0_max = std::log(config.delta0_max_ghz);

    for (auto& d : ens.defects) {
        const double u1 = uniform01(rng());
        const double u2 = uniform01(rng());
        const double u3 = uniform01(rng());
        const double u4 = uniform01(rng());
        // (min, max] so the stated half-open supports hold exactly
        d.delta_ghz = config.delta_max_ghz -
                      (config.delta_max_ghz - config.delta_min_ghz) * u1;
        d.delta0_ghz = std::exp(log_d0_max - (log_d0_max - log_d0_min) * u2);
        const double cos_eta = 1.0 - 2.0 * u3;
        const double t2_ns =
            config.tls_t2_max_ns - (config.tls_t2_max_ns - config.tls_t2_min_ns) * u4;

        d.e_tls_ghz = std::hypot(d.delta_ghz, d.delta0_ghz);
        d.eta = std::acos(cos_eta);
        d.theta = std::atan2(d.delta0_ghz, d.delta_ghz);
        d.gamma2_d = 1.0 / (t2_ns * 1e-9);
        d.g_mhz = config.s_max_mhz * cos_eta * (d.delta0_ghz / d.e_tls_ghz);
    }
    return ens;
}

double coupling(const TlsDefect& defect, double n01, double s_max_mhz) {
    if (n01 < 0.0) {
        throw DomainError("coupling: n01 must be non-negative");
    }
    return n01 * s_max_mhz * std::cos(defect.eta) * std::sin(defect.theta);
}

namespace {

inline double lorentzian_rate(double g_mhz, double e_tls_ghz, double gamma2_d,
                              double f01_ghz, double qubit_gamma2) {
    const double g_rad = 2.0 * std::numbers::pi * g_mhz * 1e6;
    const double gamma = qubit_gamma2 + gamma2_d;
    const double detuning = k::ghz_to_rad_s(f01_ghz - e_tls_ghz);
    return 2.0 * g_rad * g_rad * gamma / (gamma * gamma + detuning * detuning);
}

}  // namespace

double rate_contribution(const TlsDefect& defect, double f01_ghz,
                         double qubit_gamma2) {
    if (!(qubit_gamma2 + defect.gamma2_d > 0.0)) {
        throw DomainError("rate_contribution: total linewidth must be positive");
    }
    return lorentzian_rate(defect.g_mhz, defect.e_tls_ghz, defect.gamma2_d, f01_ghz,
                           qubit_gamma2);
}

double total_rate(const TlsEnsemble& ensemble, double f01_ghz, double n01) {
    const double qubit_gamma2 = 1.0 / ensemble.config.qubit_t2_intrinsic_s;
    double rate = 1.0 / ensemble.config.qubit_t1_intrinsic_s;
    for (const auto& d : ensemble.defects) {
        const double g = n01 * ensemble.config.s_max_mhz * std::cos(d.eta) *
                         std::sin(d.theta);
        rate += lorentzian_rate(g, d.e_tls_ghz, d.gamma2_d, f01_ghz, qubit_gamma2);
    }
    return rate;
}

namespace {

// Monotone table of f01 versus phi_j at the Phi_ext = Phi0/2 sweet line,
// used to invert the frequency grid onto phi_j.
struct SweetLineTable {
    std::vector<double> phi_j;
    std::vector<double> f01;
};

SweetLineTable build_sweet_line_table(const circuit::CircuitParams& params) {
    constexpr int n = 96;
    constexpr double lo = 1e-3, hi = 0.4995;
    SweetLineTable tab;
    tab.phi_j.resize(n);
    tab.f01.resize(n);
    parallel_for(n, [&](std::size_t i) {
        tab.phi_j[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
        tab.f01[i] = circuit::f01_only(params, circuit::FluxBias::effective(tab.phi_j[i], 0.5));
    });
    // keep the longest increasing run containing the upper end
    int start = 0;
    for (int i = n - 1; i > 0; --i) {
        if (tab.f01[i] <= tab.f01[i - 1]) {
            start = i;
            break;
        }
    }
    tab.phi_j.erase(tab.phi_j.begin(), tab.phi_j.begin() + start);
    tab.f01.erase(tab.f01.begin(), tab.f01.begin() + start);
    return tab;
}

double solve_phi_j(const circuit::CircuitParams& params, const SweetLineTable& tab,
                   double f_target) {
    if (f_target < tab.f01.front() || f_target > tab.f01.back()) {
        throw ConfigError("p1_sweep: target frequency outside the tunable range");
    }
    auto it = std::lower_bound(tab.f01.begin(), tab.f01.end(), f_target);
    std::size_t j = std::min<std::size_t>(it - tab.f01.begin(), tab.f01.size() - 1);
    std::size_t i = (j == 0) ? 0 : j - 1;

    double lo = tab.phi_j[i], hi = tab.phi_j[j];
    double x0 = lo, x1 = hi;
    if (hi > lo) {
        double t = (f_target - tab.f01[i]) /
                   std::max(tab.f01[j] - tab.f01[i], 1e-300);
        x1 = lo + t * (hi - lo);
        x0 = std::clamp(x1 - 1e-4, lo, hi);
    }

    // fixed-dim evaluations during iteration; the caller re-diagonalizes with
    // the full convergence contract at the solution
    const int dim = params.basis_dim + 20;
    auto f01 = [&](double pj) {
        return circuit::f01_fixed_dim(params, circuit::FluxBias::effective(pj, 0.5), dim);
    };
    double y0 = f01(x0) - f_target;
    double y1 = f01(x1) - f_target;
    for (int it2 = 0; it2 < 40; ++it2) {
        if (std::abs(y1) < 2e-6) return x1;
        double denom = y1 - y0;
        double x2;
        if (std::abs(denom) > 1e-300) {
            x2 = x1 - y1 * (x1 - x0) / denom;
        } else {
            x2 = 0.5 * (x0 + x1);
        }
        if (!(x2 > lo - 0.01) || !(x2 < hi + 0.01)) {
            x2 = 0.5 * (x0 + x1);  // secant left the bracket region
        }
        x0 = x1;
        y0 = y1;
        x1 = x2;
        y1 = f01(x1) - f_target;
    }
    if (std::abs(y1) > 1e-4) {
        throw ConvergenceError("p1_sweep: phi_j inversion did not converge");
    }
    return x1;
}

}  // namespace

P1Curve p1_sweep(const TlsEnsemble& ensemble, const circuit::CircuitParams& params,
                 const FrequencyGrid& grid, double tau_s) {
    ensemble.config.validate();
    if (grid.n_points < 2 || !(grid.f_stop_ghz > grid.f_start_ghz)) {
        throw ConfigError("p1_sweep: grid must have at least two ascending points");
    }
    if (!(tau_s > 0.0)) {
        throw ConfigError("p1_sweep: tau must be positive");
    }

    const SweetLineTable tab = build_sweet_line_table(params);

    P1Curve curve;
    curve.tau_s = tau_s;
    curve.f01_ghz.resize(grid.n_points);
    curve.phi_j.resize(grid.n_points);
    curve.p1.resize(grid.n_points);

    // per-defect dipole weight cos(eta) sin(theta), shared across grid points
    std::vector<double> weight(ensemble.defects.size());
    for (std::size_t i = 0; i < ensemble.defects.size(); ++i) {
        const auto& d = ensemble.defects[i];
        weight[i] = std::cos(d.eta) * std::sin(d.theta);
    }
    const double qubit_gamma2 = 1.0 / ensemble.config.qubit_t2_intrinsic_s;

    parallel_for(grid.n_points, [&](std::size_t i) {
        const double f_target =
            grid.f_start_ghz + (grid.f_stop_ghz - grid.f_start_ghz) *
                                   static_cast<double>(i) / (grid.n_points - 1);
        const double pj = solve_phi_j(params, tab, f_target);
        const auto spec =
            circuit::diagonalize(params, circuit::FluxBias::effective(pj, 0.5));
        const double n01 = spec.abs_n01();

        double rate = 1.0 / ensemble.config.qubit_t1_intrinsic_s;
        for (std::size_t di = 0; di < ensemble.defects.size(); ++di) {
            const auto& d = ensemble.defects[di];
            const double g = n01 * ensemble.config.s_max_mhz * weight[di];
            rate += lorentzian_rate(g, d.e_tls_ghz, d.gamma2_d, spec.f01_ghz,
                                    qubit_gamma2);
        }
        curve.f01_ghz[i] = f_target;
        curve.phi_j[i] = pj;
        curve.p1[i] = std::exp(-tau_s * rate);
    });
    return curve;
}

std::vector<Dip> find_dips(const std::vector<double>& f01_ghz,
                           const std::vector<double>& p1, double prominence) {
    if (f01_ghz.size() != p1.size()) {
        throw GridError("find_dips: frequency and P1 arrays differ in length");
    }
    const int n = static_cast<int>(p1.size());
    std::vector<Dip> dips;
    for (int i = 1; i + 1 < n; ++i) {
        // candidate dip: strictly below the left neighbor, plateau allowed on
        // the right (leftmost plateau sample wins the tie)
        if (!(p1[i] < p1[i - 1] && p1[i] <= p1[i + 1])) continue;

        double left_base = p1[i];
        for (int j = i - 1; j >= 0 && p1[j] >= p1[i]; --j) {
            left_base = std::max(left_base, p1[j]);
        }
        double right_base = p1[i];
        for (int j = i + 1; j < n && p1[j] >= p1[i]; ++j) {
            right_base = std::max(right_base, p1[j]);
        }
        const double prom = std::min(left_base, right_base) - p1[i];
        if (prom >= prominence) {
            dips.push_back({i, f01_ghz[i], prom});
        }
    }
    return dips;
}

std::vector<Dip> find_dips(const P1Curve& curve, double prominence) {
    return find_dips(curve.f01_ghz, curve.p1, prominence);
}

}  // namespace fluxsim::tlsbath
