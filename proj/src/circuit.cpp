#include "fluxsim/circuit.hpp"

#include "fluxsim/constants.hpp"
#include "fluxsim/errors.hpp"
#include "fluxsim/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>
#include <memory>
#include <mutex>
#include <numbers>

namespace fluxsim::circuit {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void CircuitParams::validate() const {
    if (!(ec_ghz > 0.0) || !(el_ghz > 0.0)) {
        throw ConfigError("CircuitParams: E_C and E_L must be strictly positive");
    }
    if (ej1_ghz < 0.0 || ej2_ghz < 0.0) {
        throw ConfigError("CircuitParams: junction energies must be non-negative");
    }
    if (basis_dim < 10) {
        throw ConfigError("CircuitParams: basis_dim must be at least 10");
    }
    if (max_basis_dim < basis_dim) {
        throw ConfigError("CircuitParams: max_basis_dim below basis_dim");
    }
}

namespace {

// Wrap to the principal branch phi_j in (-1/2, 1/2].
double wrap_half(double phi_j) {
    return phi_j - std::ceil(phi_j - 0.5);
}

// Operator blocks of the oscillator basis that only depend on the truncation
// and on (E_C, E_L): cached so that assembling H at a new bias is O(dim^2).
struct OscillatorOps {
    MatrixXd phi_op;    // phi_zpf (a + a^T)
    MatrixXd n_imag;    // n = i * n_imag, n_imag = n_zpf (a - a^T)
    MatrixXd h_static;  // 4 E_C n^2 + (E_L/2) phi^2
    MatrixXd cos_phi;
};

std::shared_ptr<const OscillatorOps> oscillator_ops(const CircuitParams& params,
                                                    int dim) {
    using Key = std::tuple<int, double, double>;
    static std::mutex mutex;
    static std::map<Key, std::shared_ptr<const OscillatorOps>> cache;
    const Key key{dim, params.ec_ghz, params.el_ghz};
    {
        std::lock_guard<std::mutex> lock(mutex);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }

    const double phi_zpf = std::pow(2.0 * params.ec_ghz / params.el_ghz, 0.25);
    const double n_zpf = 0.5 / phi_zpf;

    MatrixXd x = MatrixXd::Zero(dim, dim);
    for (int k = 0; k < dim - 1; ++k) {
        double s = std::sqrt(static_cast<double>(k + 1));
        x(k, k + 1) = s;  // <k|a|k+1>
        x(k + 1, k) = s;
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(x);
    if (es.info() != Eigen::Success) {
        throw ConvergenceError("oscillator_ops: eigendecomposition of x failed");
    }

    auto ops = std::make_shared<OscillatorOps>();
    ops->phi_op = phi_zpf * x;
    ops->n_imag = MatrixXd::Zero(dim, dim);
    for (int k = 0; k < dim - 1; ++k) {
        double s = n_zpf * std::sqrt(static_cast<double>(k + 1));
        ops->n_imag(k, k + 1) = s;
        ops->n_imag(k + 1, k) = -s;
    }
    VectorXd cos_l = (phi_zpf * es.eigenvalues().array()).cos();
    ops->cos_phi = es.eigenvectors() * cos_l.asDiagonal() * es.eigenvectors().transpose();
    ops->cos_phi = 0.5 * (ops->cos_phi + ops->cos_phi.transpose()).eval();

    ops->h_static = -4.0 * params.ec_ghz * (ops->n_imag * ops->n_imag) +
                    0.5 * params.el_ghz * (ops->phi_op * ops->phi_op);
    ops->h_static = 0.5 * (ops->h_static + ops->h_static.transpose()).eval();

    std::lock_guard<std::mutex> lock(mutex);
    auto [it, inserted] = cache.emplace(key, std::move(ops));
    return it->second;
}

struct HamiltonianBuild {
    MatrixXd h;        // GHz units
    const OscillatorOps* ops = nullptr;
};

HamiltonianBuild build_hamiltonian(const CircuitParams& params, double ej_ghz,
                                   double phi_ext, int dim,
                                   std::shared_ptr<const OscillatorOps>& keepalive) {
    keepalive = oscillator_ops(params, dim);
    const auto& ops = *keepalive;
    const double pe = 2.0 * std::numbers::pi * phi_ext;

    HamiltonianBuild b;
    // (phi + pe)^2 = phi^2 + 2 pe phi + pe^2
    b.h = ops.h_static + (params.el_ghz * pe) * ops.phi_op - ej_ghz * ops.cos_phi;
    b.h.diagonal().array() += 0.5 * params.el_ghz * pe * pe;
    b.ops = &ops;
    return b;
}

double f01_at_dim(const CircuitParams& params, double ej_ghz, double phi_ext,
                  int dim) {
    std::shared_ptr<const OscillatorOps> keep;
    HamiltonianBuild b = build_hamiltonian(params, ej_ghz, phi_ext, dim, keep);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(b.h, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        throw ConvergenceError("diagonalize: eigensolver failed");
    }
    return es.eigenvalues()(1) - es.eigenvalues()(0);
}

constexpr double kF01ConvergenceGhz = 1e-6;  // 1 kHz
constexpr int kBasisProbeStep = 20;

// Find the truncation satisfying the 1 kHz contract; returns the accepted
// working dimension (the probe uses dim and dim + 20).
int converged_dim(const CircuitParams& params, double ej_ghz, double phi_ext) {
    int dim = params.basis_dim;
    for (;;) {
        double fa = f01_at_dim(params, ej_ghz, phi_ext, dim);
        double fb = f01_at_dim(params, ej_ghz, phi_ext, dim + kBasisProbeStep);
        if (std::abs(fb - fa) < kF01ConvergenceGhz) {
            return dim + kBasisProbeStep;
        }
        if (dim >= params.max_basis_dim) {
            throw ConvergenceError(
                "diagonalize: f01 not converged to 1 kHz at max_basis_dim = " +
                std::to_string(params.max_basis_dim));
        }
        dim = std::min(2 * dim, params.max_basis_dim);
    }
}

}  // namespace

double effective_ej(const CircuitParams& params, double phi_j) {
    const double x = wrap_half(phi_j);
    const double phi_big_j = 2.0 * std::numbers::pi * x;
    const double mag =
        std::sqrt(params.ej1_ghz * params.ej1_ghz + params.ej2_ghz * params.ej2_ghz +
                  2.0 * params.ej1_ghz * params.ej2_ghz * std::cos(phi_big_j));
    // cos(phi_J/2) >= 0 on the principal branch; the tie at phi_j = 1/2 is +1
    const double c = std::cos(0.5 * phi_big_j);
    const double sign = (c < 0.0) ? -1.0 : 1.0;
    return sign * mag;
}

double flux_offset(const CircuitParams& params, double phi_j) {
    const double x = wrap_half(phi_j);
    const double num = params.ej1_ghz - params.ej2_ghz;
    const double den = params.ej1_ghz + params.ej2_ghz;
    if (den == 0.0 || num == 0.0) return 0.0;
    const double r = num / den;
    if (x == 0.5) {
        // limit from below of arctan(r tan(pi x))
        return (r > 0.0 ? 0.25 : -0.25);
    }
    return std::atan(r * std::tan(std::numbers::pi * x)) / (2.0 * std::numbers::pi);
}

double phi_ext_of(const CircuitParams& params, const FluxBias& bias) {
    if (bias.convention == FluxConvention::EffectiveFlux) return bias.value;
    return bias.value - flux_offset(params, bias.phi_j);
}

double phi_l_of(const CircuitParams& params, const FluxBias& bias) {
    if (bias.convention == FluxConvention::LoopFlux) return bias.value;
    return bias.value + flux_offset(params, bias.phi_j);
}

SpectrumResult diagonalize(const CircuitParams& params, const FluxBias& bias,
                           int n_levels) {
    params.validate();
    n_levels = std::max(n_levels, 6);
    const double ej = effective_ej(params, bias.phi_j);
    const double pe = phi_ext_of(params, bias);
    const int dim = converged_dim(params, ej, pe);
    if (n_levels > dim) {
        throw ConfigError("diagonalize: n_levels exceeds basis dimension");
    }

    std::shared_ptr<const OscillatorOps> keep;
    HamiltonianBuild b = build_hamiltonian(params, ej, pe, dim, keep);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(b.h);
    if (es.info() != Eigen::Success) {
        throw ConvergenceError("diagonalize: eigensolver failed");
    }

    SpectrumResult out;
    out.params = params;
    out.bias = bias;
    out.basis_dim_used = dim;
    out.energies_ghz.assign(es.eigenvalues().data(),
                            es.eigenvalues().data() + n_levels);
    out.f01_ghz = out.energies_ghz[1] - out.energies_ghz[0];

    const MatrixXd states = es.eigenvectors().leftCols(n_levels);
    out.phi_mat = states.transpose() * b.ops->phi_op * states;
    MatrixXd n_im = states.transpose() * b.ops->n_imag * states;
    out.n_mat = std::complex<double>(0.0, 1.0) * n_im.cast<std::complex<double>>();
    return out;
}

double f01_only(const CircuitParams& params, const FluxBias& bias) {
    params.validate();
    const double ej = effective_ej(params, bias.phi_j);
    const double pe = phi_ext_of(params, bias);
    const int dim = converged_dim(params, ej, pe);
    return f01_at_dim(params, ej, pe, dim);
}

double f01_fixed_dim(const CircuitParams& params, const FluxBias& bias, int dim) {
    const double ej = effective_ej(params, bias.phi_j);
    const double pe = phi_ext_of(params, bias);
    return f01_at_dim(params, ej, pe, dim);
}

FluxGradient f01_derivatives(const CircuitParams& params, const FluxBias& bias) {
    constexpr double h = 1e-5;  // Phi0
    const double phi_l = phi_l_of(params, bias);
    auto f01 = [&](double pj, double pl) {
        return f01_only(params, FluxBias::loop(pj, pl));
    };
    FluxGradient g;
    g.d_phi_l = constants::ghz_to_rad_s(
        (f01(bias.phi_j, phi_l + h) - f01(bias.phi_j, phi_l - h)) / (2.0 * h));
    g.d_phi_j = constants::ghz_to_rad_s(
        (f01(bias.phi_j + h, phi_l) - f01(bias.phi_j - h, phi_l)) / (2.0 * h));
    return g;
}

FluxCouplings flux_couplings(const CircuitParams& params, const FluxBias& bias) {
    constexpr double h = 1e-5;  // Phi0
    const double phi_l = phi_l_of(params, bias);
    const double ej0 = effective_ej(params, bias.phi_j);
    const double pe0 = phi_ext_of(params, bias);
    const int dim = converged_dim(params, ej0, pe0);

    std::shared_ptr<const OscillatorOps> keep;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(
        build_hamiltonian(params, ej0, pe0, dim, keep).h);
    if (es.info() != Eigen::Success) {
        throw ConvergenceError("flux_couplings: eigensolver failed");
    }
    const VectorXd v0 = es.eigenvectors().col(0);
    const VectorXd v1 = es.eigenvectors().col(1);

    auto h_at = [&](double pj, double pl) {
        FluxBias fb = FluxBias::loop(pj, pl);
        std::shared_ptr<const OscillatorOps> k2;
        return build_hamiltonian(params, effective_ej(params, pj),
                                 phi_ext_of(params, fb), dim, k2)
            .h;
    };
    MatrixXd dh_l = (h_at(bias.phi_j, phi_l + h) - h_at(bias.phi_j, phi_l - h)) / (2.0 * h);
    MatrixXd dh_j = (h_at(bias.phi_j + h, phi_l) - h_at(bias.phi_j - h, phi_l)) / (2.0 * h);

    FluxCouplings c;
    c.v_l_ghz = std::abs(v0.dot(dh_l * v1));
    c.v_j_ghz = std::abs(v0.dot(dh_j * v1));
    return c;
}

double sweet_spot_locate(const CircuitParams& params, double phi_j) {
    params.validate();
    constexpr double lo = 0.4, hi = 0.6;
    constexpr int n_scan = 41;

    auto f01 = [&](double pl) { return f01_only(params, FluxBias::loop(phi_j, pl)); };

    int best = 0;
    double best_f = std::numeric_limits<double>::infinity();
    std::array<double, n_scan> xs{};
    for (int i = 0; i < n_scan; ++i) {
        xs[i] = lo + (hi - lo) * i / (n_scan - 1);
        double f = f01(xs[i]);
        if (f < best_f) {
            best_f = f;
            best = i;
        }
    }
    if (best == 0 || best == n_scan - 1) {
        throw NoMinimumError("sweet_spot_locate: f01 monotonic over [0.4, 0.6]");
    }
    auto result = numeric::golden_section(f01, xs[best - 1], xs[best + 1], 1e-7);
    return result.x;
}

}  // namespace fluxsim::circuit
