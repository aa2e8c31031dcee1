#include "fluxsim/decoherence.hpp"

#include "fluxsim/constants.hpp"
#include "fluxsim/errors.hpp"

#include "test_helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

using namespace fluxsim;
namespace k = fluxsim::constants;
using Catch::Approx;
using testutil::paper_device;
using testutil::synthetic_spectrum;

namespace {

decoherence::NoiseModel paper_noise() {
    auto m = decoherence::NoiseModel::defaults();
    m.a_l = 14e-6;
    m.a_j = 7.6e-6;
    m.alpha = 1.0;
    m.c_lj = 0.51;
    m.tan_delta_ref = 2.0e-6;
    m.epsilon = 0.2;
    m.t_eff_k = 0.015;
    m.t_a_k = 0.013;
    return m;
}

}  // namespace

TEST_CASE("flux PSD unit anchor") {
    // 2 pi A^2 / omega at omega = 2 pi * 1 Hz with alpha = 1 equals A^2
    auto m = paper_noise();
    const double a = 3.7e-6;
    CHECK(decoherence::flux_psd(a, 1.0, 2.0 * std::numbers::pi, m.omega_r) ==
          Approx(a * a).epsilon(1e-14));
}

TEST_CASE("gamma1_dielectric against a frozen scalar evaluation") {
    auto m = decoherence::NoiseModel::defaults();
    m.tan_delta_ref = 2.0e-6;
    m.epsilon = 0.0;
    m.t_eff_k = 0.015;
    auto spec = synthetic_spectrum(1.49, 0.65, 1.0, std::sqrt(2.0));
    CHECK(decoherence::gamma1_dielectric(spec, m) ==
          Approx(4575.480724186957).epsilon(1e-10));
    // T1 of roughly 0.22 ms
    CHECK(1.0 / decoherence::gamma1_dielectric(spec, m) ==
          Approx(0.22e-3).margin(0.01e-3));
}

TEST_CASE("gamma1_dielectric limits and linearity") {
    auto m = decoherence::NoiseModel::defaults();
    m.tan_delta_ref = 2.0e-6;
    m.epsilon = 0.3;
    m.t_eff_k = 0.0;  // coth -> 1
    auto spec = synthetic_spectrum(1.49, 0.65, 0.7, 1.3);
    CHECK(decoherence::gamma1_dielectric(spec, m) ==
          Approx(decoherence::tls_golden_rule_rates(spec, m).gamma1).epsilon(1e-12));

    m.t_eff_k = 0.015;
    auto spec2 = synthetic_spectrum(1.49, 0.65, 0.7, 1.3 * std::numbers::sqrt2);
    CHECK(decoherence::gamma1_dielectric(spec2, m) ==
          Approx(2.0 * decoherence::gamma1_dielectric(spec, m)).epsilon(1e-12));

    // monotone in T_eff
    auto m_cold = m, m_warm = m;
    m_cold.t_eff_k = 0.010;
    m_warm.t_eff_k = 0.030;
    CHECK(decoherence::gamma1_dielectric(spec, m_warm) >
          decoherence::gamma1_dielectric(spec, m_cold));
}

TEST_CASE("gamma1_flux_single thermal factor and zero amplitude") {
    auto spec = synthetic_spectrum(1.49, 0.65, 0.5, 2.0);
    auto m = paper_noise();
    m.a_l = 0.0;
    CHECK(decoherence::gamma1_flux_single(spec, m) == 0.0);

    m.a_l = 14e-6;
    const double w = k::ghz_to_rad_s(spec.f01_ghz);
    auto m_cold = m;
    m_cold.t_eff_k = 0.0;
    auto m_match = m;
    m_match.t_eff_k = k::hbar * w / k::boltzmann_k;  // hbar w = k T
    const double ratio = decoherence::gamma1_flux_single(spec, m_match) /
                         decoherence::gamma1_flux_single(spec, m_cold);
    CHECK(ratio == Approx(1.3678794411714423).epsilon(1e-12));
}

TEST_CASE("two-loop relaxation reduces to the single-loop form") {
    auto p = paper_device();
    auto spec = circuit::diagonalize(p, circuit::FluxBias::effective(0.36, 0.52));
    auto m = paper_noise();

    auto couplings = circuit::flux_couplings(p, spec.bias);
    // dH/dPhi_L = 2 pi E_L (phi + 2 pi phi_ext) so V_L = 2 pi E_L |<0|phi|1>|
    CHECK(couplings.v_l_ghz ==
          Approx(2.0 * std::numbers::pi * p.el_ghz * spec.abs_phi01()).epsilon(1e-5));

    circuit::FluxCouplings l_only{couplings.v_l_ghz, 0.0};
    CHECK(decoherence::gamma1_flux_twoloop(spec, l_only, m) ==
          Approx(decoherence::gamma1_flux_single(spec, m)).epsilon(1e-9));
}

TEST_CASE("two-loop perfect correlation quadruples a single term") {
    auto spec = synthetic_spectrum(1.49, 0.65, 0.5, 2.0);
    auto m = paper_noise();
    m.a_j = m.a_l;
    m.c_lj = 1.0;
    circuit::FluxCouplings both{3.0, 3.0};
    circuit::FluxCouplings l_only{3.0, 0.0};
    CHECK(decoherence::gamma1_flux_twoloop(spec, both, m) ==
          Approx(4.0 * decoherence::gamma1_flux_twoloop(spec, l_only, m))
              .epsilon(1e-12));
}

TEST_CASE("SQUID-loop noise contributes little along the sweet line") {
    auto p = paper_device();
    auto m = paper_noise();
    m.a_l = 12e-6;  // dephasing-fit values
    for (double pj : {0.30, 0.36, 0.42}) {
        auto bias = circuit::FluxBias::effective(pj, 0.5);
        auto spec = circuit::diagonalize(p, bias);
        auto c = circuit::flux_couplings(p, bias);
        const double full = decoherence::gamma1_flux_twoloop(spec, c, m);
        const double l_only =
            decoherence::gamma1_flux_twoloop(spec, {c.v_l_ghz, 0.0}, m);
        CHECK((full - l_only) / full < 0.05);
    }
}

TEST_CASE("negative quadratic form is rejected") {
    auto spec = synthetic_spectrum(1.49, 0.65, 0.5, 2.0);
    auto m = paper_noise();
    m.c_lj = -1.5;  // invalid by construction; validate() would refuse it
    circuit::FluxCouplings c{2.0, 2.0};
    m.a_j = m.a_l;
    CHECK_THROWS_AS(decoherence::gamma1_flux_twoloop(spec, c, m), NegativeRateError);
    circuit::FluxGradient g{1e9, 1e9};
    CHECK_THROWS_AS(decoherence::gamma_phi_echo(g, m), NegativeRateError);
}

TEST_CASE("echo dephasing closed forms") {
    auto m = paper_noise();
    CHECK(decoherence::gamma_phi_echo({0.0, 0.0}, m) == 0.0);

    circuit::FluxGradient dl_only{4.2e9, 0.0};
    auto m0 = m;
    m0.c_lj = 0.0;
    CHECK(decoherence::gamma_phi_echo(dl_only, m0) ==
          Approx(std::sqrt(std::numbers::ln2) * 4.2e9 * m.a_l).epsilon(1e-12));

    // cross term vanishes with D_L = 0 regardless of the correlation
    circuit::FluxGradient dj_only{0.0, -3.1e9};
    CHECK(decoherence::gamma_phi_echo(dj_only, m) ==
          Approx(std::sqrt(std::numbers::ln2) * 3.1e9 * m.a_j).epsilon(1e-12));
}

TEST_CASE("echo quadratic form is positive semidefinite for |c| <= 1") {
    testutil::Rng rng(1234);
    for (int i = 0; i < 200; ++i) {
        auto m = paper_noise();
        m.a_l = rng.uniform(1e-7, 3e-5);
        m.a_j = rng.uniform(1e-7, 3e-5);
        m.c_lj = rng.uniform(-1.0, 1.0);
        circuit::FluxGradient g{rng.uniform(-1e10, 1e10), rng.uniform(-1e10, 1e10)};
        CHECK(decoherence::gamma_phi_echo(g, m) >= 0.0);
    }
}

TEST_CASE("maximum T_phi point shifts away from half flux as E_J decreases") {
    auto p = paper_device();
    auto m = paper_noise();
    m.a_l = 12e-6;

    auto shift_of = [&](double pj) {
        const double sweet = 0.5 + circuit::flux_offset(p, pj);
        double best_pl = sweet, best_tphi = -1.0;
        for (int i = -8; i <= 8; ++i) {
            const double pl = sweet + 4.0e-4 * i;
            auto g = circuit::f01_derivatives(p, circuit::FluxBias::loop(pj, pl));
            const double rate = decoherence::gamma_phi_echo(g, m);
            const double tphi = 1.0 / std::max(rate, 1e-12);
            if (tphi > best_tphi) {
                best_tphi = tphi;
                best_pl = pl;
            }
        }
        return std::abs(circuit::phi_ext_of(p, circuit::FluxBias::loop(pj, best_pl)) - 0.5);
    };

    // larger phi_j means smaller E_J
    CHECK(shift_of(0.45) > shift_of(0.30));
}

TEST_CASE("clj prediction from uncorrelated loop fluxes") {
    auto m = paper_noise();
    m.a_j = 7.6e-6;
    m.a_l = 12.0e-6;
    CHECK(decoherence::clj_predicted(m) == Approx(0.31666666666666665).margin(5e-4));
    m.a_j = 0.0;
    CHECK(decoherence::clj_predicted(m) == 0.0);
    m.a_j = 2.0 * m.a_l;
    CHECK(decoherence::clj_predicted(m) == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("golden-rule rates obey detailed balance and T-independence") {
    auto m = paper_noise();
    for (double f : {0.1, 0.385, 1.0, 2.0}) {
        auto spec = synthetic_spectrum(1.49, 0.65, f, 1.7);
        double gamma1_ref = 0.0;
        for (double t : {0.005, 0.015, 0.05, 0.3}) {
            m.t_eff_k = t;
            auto r = decoherence::tls_golden_rule_rates(spec, m);
            const double x = k::hbar * k::ghz_to_rad_s(f) / (k::boltzmann_k * t);
            CHECK(r.gamma_down / r.gamma_up == Approx(std::exp(x)).epsilon(1e-12));
            CHECK(r.gamma_down + r.gamma_up == Approx(r.gamma1).epsilon(1e-14));
            if (gamma1_ref == 0.0) gamma1_ref = r.gamma1;
            CHECK(r.gamma1 == Approx(gamma1_ref).epsilon(1e-14));
        }
    }
}

TEST_CASE("golden-rule temperature limits") {
    auto m = paper_noise();
    auto spec = synthetic_spectrum(1.49, 0.65, 0.385, 2.59);
    m.t_eff_k = 1e9;
    auto hot = decoherence::tls_golden_rule_rates(spec, m);
    CHECK(hot.gamma_down == Approx(hot.gamma1 / 2.0).epsilon(1e-6));
    CHECK(hot.gamma_up == Approx(hot.gamma1 / 2.0).epsilon(1e-6));
    m.t_eff_k = 0.0;
    auto cold = decoherence::tls_golden_rule_rates(spec, m);
    CHECK(cold.gamma_up == 0.0);
    CHECK(cold.gamma_down == Approx(cold.gamma1).epsilon(1e-14));
}

TEST_CASE("golden-rule rate equals its charge-operator form") {
    auto p = paper_device();
    auto spec = circuit::diagonalize(p, circuit::FluxBias::effective(0.376, 0.5));
    auto m = paper_noise();
    m.epsilon = 0.0;
    auto r = decoherence::tls_golden_rule_rates(spec, m);
    // Gamma1 = 2 (2e)^2 tan(delta) / (hbar C) |<0|d/dphi|1>|^2 with C = e^2/(2 E_C)
    const double cap = k::elementary_charge * k::elementary_charge /
                       (2.0 * k::ghz_to_joule(p.ec_ghz));
    const double two_e = 2.0 * k::elementary_charge;
    const double n01 = spec.abs_n01();
    const double charge_form =
        2.0 * two_e * two_e * m.tan_delta_ref / (k::hbar * cap) * n01 * n01;
    CHECK(r.gamma1 == Approx(charge_form).epsilon(1e-6));
}

TEST_CASE("rates scale linearly in the phase matrix element squared") {
    auto m = paper_noise();
    auto s1 = synthetic_spectrum(1.49, 0.65, 0.6, 1.0);
    auto s2 = synthetic_spectrum(1.49, 0.65, 0.6, 3.0);
    const double scale = 9.0;
    CHECK(decoherence::gamma1_dielectric(s2, m) ==
          Approx(scale * decoherence::gamma1_dielectric(s1, m)).epsilon(1e-12));
    CHECK(decoherence::gamma1_flux_single(s2, m) ==
          Approx(scale * decoherence::gamma1_flux_single(s1, m)).epsilon(1e-12));
    CHECK(decoherence::tls_golden_rule_rates(s2, m).gamma1 ==
          Approx(scale * decoherence::tls_golden_rule_rates(s1, m).gamma1)
              .epsilon(1e-12));
}

TEST_CASE("loss tangent from microscopic TLS parameters") {
    decoherence::TlsMicroParams micro{1e41, 2.0e-29, 0.3, 1.3e-14};
    const double base = decoherence::tan_delta_from_micro(micro);
    auto m2 = micro;
    m2.rho0 *= 2.0;
    CHECK(decoherence::tan_delta_from_micro(m2) == Approx(2.0 * base).epsilon(1e-12));
    auto m3 = micro;
    m3.p_max *= 2.0;
    CHECK(decoherence::tan_delta_from_micro(m3) == Approx(4.0 * base).epsilon(1e-12));

    // invert the closed form to land on the measured loss tangent
    auto m4 = micro;
    m4.rho0 = micro.rho0 * (2.0e-6 / base);
    CHECK(decoherence::tan_delta_from_micro(m4) == Approx(2.0e-6).epsilon(1e-10));
}

TEST_CASE("effective temperature matches the measured stray population") {
    CHECK(decoherence::effective_temperature(0.2314, 0.385) ==
          Approx(0.0154).margin(1e-4));
    // p = 1/(1+e) gives T = hbar w / kB exactly
    const double p = 1.0 / (1.0 + std::numbers::e);
    const double f = 0.725;
    CHECK(decoherence::effective_temperature(p, f) ==
          Approx(k::hbar * k::ghz_to_rad_s(f) / k::boltzmann_k).epsilon(1e-12));
    // p -> 0 sends T -> 0 (logarithmically slowly)
    CHECK(decoherence::effective_temperature(1e-6, 0.385) <
          decoherence::effective_temperature(1e-3, 0.385));
    CHECK(decoherence::effective_temperature(1e-300, 0.385) < 3e-5);
}

TEST_CASE("effective temperature round trips with stray_population") {
    for (double p : {0.01, 0.1, 0.2314, 0.45}) {
        const double t = decoherence::effective_temperature(p, 0.385);
        CHECK(decoherence::stray_population(t, 0.385) == Approx(p).epsilon(1e-12));
    }
    CHECK(decoherence::stray_population(0.0, 0.385) == 0.0);
    CHECK_THROWS_AS(decoherence::effective_temperature(0.5, 0.385), DomainError);
    CHECK_THROWS_AS(decoherence::effective_temperature(0.62, 0.385), DomainError);
    CHECK_THROWS_AS(decoherence::effective_temperature(0.0, 0.385), DomainError);
}

TEST_CASE("1-2 Rabi population estimate") {
    CHECK(decoherence::rabi12_population(1.3, 1.3) == Approx(0.5).epsilon(1e-14));
    CHECK(decoherence::rabi12_population(0.9, 0.0) == 0.0);
    CHECK(decoherence::rabi12_population(0.7686, 0.2314) ==
          Approx(0.2314).epsilon(1e-12));
    CHECK_THROWS_AS(decoherence::rabi12_population(0.0, 0.0), DomainError);
    CHECK_THROWS_AS(decoherence::rabi12_population(-0.1, 0.5), DomainError);
}

TEST_CASE("noise model validation") {
    auto m = paper_noise();
    m.c_lj = 1.4;
    CHECK_THROWS_AS(m.validate(), ConfigError);
    m = paper_noise();
    m.a_l = -1e-6;
    CHECK_THROWS_AS(m.validate(), ConfigError);
    CHECK_NOTHROW(paper_noise().validate());
}
