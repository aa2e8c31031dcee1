#include "fluxsim/decoherence.hpp"

#include "fluxsim/constants.hpp"
#include "fluxsim/errors.hpp"

#include <cmath>
#include <numbers>

namespace fluxsim::decoherence {

namespace k = fluxsim::constants;

NoiseModel NoiseModel::defaults() {
    NoiseModel m;
    m.omega_r = 2.0 * std::numbers::pi * 1e9;
    return m;
}

void NoiseModel::validate() const {
    if (a_l < 0.0 || a_j < 0.0) {
        throw ConfigError("NoiseModel: flux-noise amplitudes must be non-negative");
    }
    if (std::abs(c_lj) > 1.0) {
        throw ConfigError("NoiseModel: |c_lj| must not exceed 1");
    }
    if (tan_delta_ref < 0.0) {
        throw ConfigError("NoiseModel: tan_delta_ref must be non-negative");
    }
    if (!(omega_r > 0.0)) {
        throw ConfigError("NoiseModel: omega_r must be positive");
    }
    if (t_eff_k < 0.0 || t_a_k < 0.0) {
        throw ConfigError("NoiseModel: temperatures must be non-negative");
    }
}

void TlsMicroParams::validate() const {
    if (!(rho0 > 0.0) || !(p_max > 0.0) || !(x_norm > 0.0) || !(c_qubit > 0.0)) {
        throw ConfigError("TlsMicroParams: all parameters must be strictly positive");
    }
}

double flux_psd(double a, double alpha, double omega, double omega_r) {
    return 2.0 * std::numbers::pi * a * a / omega *
           std::pow(omega / omega_r, 1.0 - alpha);
}

double tan_delta_at(const NoiseModel& model, double omega) {
    return model.tan_delta_ref * std::pow(omega / model.omega_r, model.epsilon);
}

namespace {

double require_positive_f01(const circuit::SpectrumResult& spec, const char* who) {
    if (!(spec.f01_ghz > 0.0)) {
        throw DomainError(std::string(who) + ": requires f01 > 0");
    }
    return k::ghz_to_rad_s(spec.f01_ghz);
}

}  // namespace

double gamma1_dielectric(const circuit::SpectrumResult& spec, const NoiseModel& model) {
    const double w = require_positive_f01(spec, "gamma1_dielectric");
    const double ec_j = k::ghz_to_joule(spec.params.ec_ghz);
    const double phi01_sq = spec.abs_phi01() * spec.abs_phi01();
    const double coth =
        (model.t_eff_k > 0.0)
            ? 1.0 / std::tanh(k::hbar * w / (2.0 * k::boltzmann_k * model.t_eff_k))
            : 1.0;
    return (k::hbar * w * w / (4.0 * ec_j)) * phi01_sq * tan_delta_at(model, w) * coth;
}

double gamma1_flux_single(const circuit::SpectrumResult& spec, const NoiseModel& model) {
    const double w = require_positive_f01(spec, "gamma1_flux_single");
    const double el_over_hbar = k::ghz_to_rad_s(spec.params.el_ghz);  // E_L/hbar
    const double phi01_sq = spec.abs_phi01() * spec.abs_phi01();
    const double s_l = flux_psd(model.a_l, model.alpha, w, model.omega_r);
    const double thermal =
        (model.t_eff_k > 0.0)
            ? 1.0 + std::exp(-k::hbar * w / (k::boltzmann_k * model.t_eff_k))
            : 1.0;
    // S is in Phi0^2/Hz; the 1/phi0^2 of the rate formula leaves (Phi0/phi0)^2 = (2 pi)^2
    const double two_pi_sq = 4.0 * std::numbers::pi * std::numbers::pi;
    return el_over_hbar * el_over_hbar * two_pi_sq * phi01_sq * s_l * thermal;
}

double gamma1_flux_twoloop(const circuit::SpectrumResult& spec,
                           const circuit::FluxCouplings& couplings,
                           const NoiseModel& model) {
    const double w = require_positive_f01(spec, "gamma1_flux_twoloop");
    const double s_l = flux_psd(model.a_l, model.alpha, w, model.omega_r);
    const double s_j = flux_psd(model.a_j, model.alpha, w, model.omega_r);
    // V/hbar in rad/s per Phi0
    const double vl = k::ghz_to_rad_s(couplings.v_l_ghz);
    const double vj = k::ghz_to_rad_s(couplings.v_j_ghz);
    const double quad = vl * vl * s_l + vj * vj * s_j +
                        2.0 * model.c_lj * vl * vj * std::sqrt(s_l * s_j);
    if (quad < 0.0) {
        throw NegativeRateError("gamma1_flux_twoloop: negative quadratic form");
    }
    const double thermal =
        (model.t_eff_k > 0.0)
            ? 1.0 + std::exp(-k::hbar * w / (k::boltzmann_k * model.t_eff_k))
            : 1.0;
    return quad * thermal;
}

double gamma_phi_echo(const circuit::FluxGradient& derivs, const NoiseModel& model) {
    const double dl = derivs.d_phi_l;
    const double dj = derivs.d_phi_j;
    const double quad = dl * dl * model.a_l * model.a_l + dj * dj * model.a_j * model.a_j +
                        2.0 * model.c_lj * dl * dj * model.a_l * model.a_j;
    if (quad < 0.0) {
        throw NegativeRateError("gamma_phi_echo: negative quadratic form");
    }
    return std::sqrt(std::numbers::ln2 * quad);
}

double clj_predicted(const NoiseModel& model) {
    if (!(model.a_l > 0.0)) {
        throw DomainError("clj_predicted: requires a_l > 0");
    }
    return 0.5 * model.a_j / model.a_l;
}

TlsRates tls_golden_rule_rates(const circuit::SpectrumResult& spec,
                               const NoiseModel& model) {
    const double w = require_positive_f01(spec, "tls_golden_rule_rates");
    const double ec_j = k::ghz_to_joule(spec.params.ec_ghz);
    const double phi01_sq = spec.abs_phi01() * spec.abs_phi01();
    TlsRates r;
    r.gamma1 = (k::hbar * w * w / (4.0 * ec_j)) * phi01_sq * tan_delta_at(model, w);
    const double boltzmann =
        (model.t_eff_k > 0.0)
            ? std::exp(-k::hbar * w / (k::boltzmann_k * model.t_eff_k))
            : 0.0;
    r.gamma_down = r.gamma1 / (1.0 + boltzmann);
    r.gamma_up = r.gamma1 * boltzmann / (1.0 + boltzmann);
    return r;
}

double tan_delta_from_micro(const TlsMicroParams& micro) {
    micro.validate();
    const double two_e = 2.0 * k::elementary_charge;
    const double dip = k::hbar * micro.p_max / (k::reduced_flux_quantum * micro.x_norm);
    return std::numbers::pi * micro.rho0 / (24.0 * two_e * two_e * micro.c_qubit) *
           dip * dip;
}

double effective_temperature(double p_stray, double f01_ghz) {
    if (!(p_stray > 0.0) || p_stray >= 0.5) {
        throw DomainError("effective_temperature: requires 0 < p_stray < 0.5");
    }
    if (!(f01_ghz > 0.0)) {
        throw DomainError("effective_temperature: requires f01 > 0");
    }
    const double w = k::ghz_to_rad_s(f01_ghz);
    return k::hbar * w / (k::boltzmann_k * std::log((1.0 - p_stray) / p_stray));
}

double stray_population(double t_k, double f01_ghz) {
    if (t_k < 0.0) {
        throw DomainError("stray_population: requires T >= 0");
    }
    if (!(f01_ghz > 0.0)) {
        throw DomainError("stray_population: requires f01 > 0");
    }
    if (t_k == 0.0) return 0.0;
    const double x = k::hbar * k::ghz_to_rad_s(f01_ghz) / (k::boltzmann_k * t_k);
    return 1.0 / (1.0 + std::exp(x));
}

double rabi12_population(double a0, double a1) {
    if (a0 < 0.0 || a1 < 0.0) {
        throw DomainError("rabi12_population: amplitudes must be non-negative");
    }
    if (a0 == 0.0 && a1 == 0.0) {
        throw DomainError("rabi12_population: amplitudes must not both vanish");
    }
    return a1 / (a0 + a1);
}

}  // namespace fluxsim::decoherence
