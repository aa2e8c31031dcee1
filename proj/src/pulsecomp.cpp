#include "fluxsim/pulsecomp.hpp"

#include "fluxsim/errors.hpp"
#include "fluxsim/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fluxsim::pulsecomp {

double StepResponseModel::amplitude_sum() const {
    double s = 0.0;
    for (const auto& c : components) s += c.amplitude;
    return s;
}

void StepResponseModel::validate() const {
    if (!(sample_rate > 0.0)) {
        throw ConfigError("StepResponseModel: sample_rate must be positive");
    }
    for (std::size_t i = 0; i < components.size(); ++i) {
        if (!(components[i].tau_ns > 0.0)) {
            throw ConfigError("StepResponseModel: settling times must be positive");
        }
        if (!(std::abs(components[i].amplitude) < 1.0)) {
            throw ConfigError("StepResponseModel: |amplitude| must be below 1");
        }
        if (i > 0 && components[i].tau_ns < components[i - 1].tau_ns) {
            throw ConfigError("StepResponseModel: components must be sorted by tau");
        }
    }
    if (std::abs(1.0 + amplitude_sum()) < 1e-9) {
        throw ConfigError("StepResponseModel: 1 + sum(a_i) must not vanish");
    }
}

namespace {

// discrete pole of one exponential component
double pole_of(const ExpComponent& c, double sample_rate) {
    return std::exp(-1.0 / (c.tau_ns * 1e-9 * sample_rate));
}

}  // namespace

std::vector<double> simulate_distortion(const StepResponseModel& model,
                                        std::span<const double> waveform) {
    model.validate();
    const std::size_t n = waveform.size();
    const std::size_t m = model.components.size();
    std::vector<double> pole(m), drive(m), state(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        pole[i] = pole_of(model.components[i], model.sample_rate);
        drive[i] = model.components[i].amplitude * (pole[i] - 1.0);
    }
    const double direct = 1.0 + model.amplitude_sum();

    std::vector<double> out(n);
    double x_prev = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double tail = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            state[i] = pole[i] * state[i] + drive[i] * x_prev;
            tail += state[i];
        }
        out[k] = direct * waveform[k] + tail;
        x_prev = waveform[k];
    }
    return out;
}

std::vector<double> PredistortionFilter::apply(std::span<const double> waveform) const {
    std::vector<double> y(waveform.begin(), waveform.end());
    for (const auto& s : sections) {
        double in_prev = 0.0, out_prev = 0.0;
        for (double& v : y) {
            const double in = v;
            v = s.b0 * in + s.b1 * in_prev - s.a1 * out_prev;
            in_prev = in;
            out_prev = v;
        }
    }
    return y;
}

double PredistortionFilter::dc_gain() const {
    double g = 1.0;
    for (const auto& s : sections) g *= (s.b0 + s.b1) / (1.0 + s.a1);
    return g;
}

double PredistortionFilter::instantaneous_gain() const {
    double g = 1.0;
    for (const auto& s : sections) g *= s.b0;
    return g;
}

namespace {

// Eigenvalues of the companion matrix of a monic polynomial
// w^d + c_{d-1} w^{d-1} + ... + c_0.
std::vector<std::complex<double>> poly_roots(const std::vector<double>& coeff) {
    const int d = static_cast<int>(coeff.size()) - 1;
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i) comp(i, d - 1) = -coeff[i] / coeff[d];
    for (int i = 1; i < d; ++i) comp(i, i - 1) = 1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(comp);
    std::vector<std::complex<double>> roots(d);
    for (int i = 0; i < d; ++i) roots[i] = es.eigenvalues()(i);
    return roots;
}

}  // namespace

PredistortionFilter design_predistortion(const StepResponseModel& model) {
    model.validate();
    PredistortionFilter filter;
    filter.sample_rate = model.sample_rate;
    const std::size_t m = model.components.size();
    if (m == 0) {
        return filter;  // identity
    }

    std::vector<double> pole(m);
    for (std::size_t i = 0; i < m; ++i) pole[i] = pole_of(model.components[i], model.sample_rate);
    const double direct = 1.0 + model.amplitude_sum();

    // numerator of the channel in powers of w = z^-1:
    //   B(w) = direct * prod_i (1 - p_i w) + sum_i a_i (p_i - 1) w prod_{j!=i} (1 - p_j w)
    std::vector<double> b{direct};
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<double> next(b.size() + 1, 0.0);
        for (std::size_t k = 0; k < b.size(); ++k) {
            next[k] += b[k];
            next[k + 1] -= pole[i] * b[k];
        }
        b = std::move(next);
    }
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<double> term{model.components[i].amplitude * (pole[i] - 1.0)};
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i) continue;
            std::vector<double> next(term.size() + 1, 0.0);
            for (std::size_t k = 0; k < term.size(); ++k) {
                next[k] += term[k];
                next[k + 1] -= pole[j] * term[k];
            }
            term = std::move(next);
        }
        for (std::size_t k = 0; k < term.size(); ++k) b[k + 1] += term[k];
    }

    auto poly_eval = [&](double w, const std::vector<double>& c) {
        double v = 0.0;
        for (std::size_t i = c.size(); i-- > 0;) v = v * w + c[i];
        return v;
    };
    std::vector<double> db(b.size() - 1);
    for (std::size_t i = 1; i < b.size(); ++i) db[i - 1] = i * b[i];

    std::vector<double> q;  // inverse-filter poles: reciprocals of roots of B(w)
    for (const auto& w : poly_roots(b)) {
        if (std::abs(w.imag()) > 1e-8 * (1.0 + std::abs(w.real()))) {
            throw InstabilityError(
                "design_predistortion: inverse poles are not real; the cascade "
                "cannot be realized with first-order sections");
        }
        // Newton polish: companion-matrix eigenvalues lose accuracy for the
        // clustered roots near w = 1
        double wr = w.real();
        for (int it = 0; it < 4; ++it) {
            const double d = poly_eval(wr, db);
            if (d == 0.0) break;
            wr -= poly_eval(wr, b) / d;
        }
        q.push_back(1.0 / wr);
    }
    for (double qi : q) {
        if (!(std::abs(qi) < 1.0)) {
            throw InstabilityError("design_predistortion: section pole magnitude >= 1");
        }
    }
    std::sort(q.begin(), q.end());
    std::vector<double> p_sorted = pole;
    std::sort(p_sorted.begin(), p_sorted.end());

    for (std::size_t i = 0; i < m; ++i) {
        FilterSection s;
        s.b0 = (i == 0) ? 1.0 / direct : 1.0;
        s.b1 = -p_sorted[i] * s.b0;
        s.a1 = -q[i];
        filter.sections.push_back(s);
    }
    return filter;
}

namespace {

struct ProfiledExpFit {
    double ssr = std::numeric_limits<double>::infinity();
    Eigen::VectorXd coeffs;  // linear amplitudes (scale included)
};

ProfiledExpFit profiled_exp_fit(std::span<const double> t, std::span<const double> y,
                                const Eigen::VectorXd& log_tau) {
    const int n = static_cast<int>(t.size());
    const int m = static_cast<int>(log_tau.size());
    Eigen::MatrixXd design(n, m);
    for (int j = 0; j < m; ++j) {
        const double tau = std::exp(log_tau(j));
        for (int i = 0; i < n; ++i) design(i, j) = std::exp(-t[i] / tau);
    }
    Eigen::Map<const Eigen::VectorXd> rhs(y.data(), n);
    ProfiledExpFit out;
    out.coeffs = design.colPivHouseholderQr().solve(rhs);
    out.ssr = (design * out.coeffs - rhs).squaredNorm();
    return out;
}

}  // namespace

StepFitResult fit_step_response(std::span<const double> delay_ns,
                                std::span<const double> phase_error,
                                double scale, int max_components,
                                double sample_rate) {
    const int n = static_cast<int>(delay_ns.size());
    if (n != static_cast<int>(phase_error.size())) {
        throw ConfigError("fit_step_response: arrays differ in length");
    }
    if (n < 10) {
        throw ConfigError("fit_step_response: at least 10 points required");
    }
    if (scale == 0.0) {
        throw ConfigError("fit_step_response: scale must be nonzero");
    }
    for (double t : delay_ns) {
        if (!(t > 0.0)) throw ConfigError("fit_step_response: delays must be positive");
    }
    max_components = std::clamp(max_components, 0, 4);

    double ssr0 = 0.0;
    for (double v : phase_error) ssr0 += v * v;
    // SSR below the numerical floor counts as a perfect fit, so BIC cannot
    // reward extra components on noiseless data
    const double ssr_floor = std::max(1e-24 * ssr0, 1e-300);
    auto bic_of = [&](double ssr, int k) {
        return n * std::log(std::max(ssr, ssr_floor) / n) + 2.0 * k * std::log(n);
    };

    StepFitResult best;
    best.bic = bic_of(ssr0, 0);
    best.residual_rms = std::sqrt(ssr0 / n);
    best.model.sample_rate = sample_rate;

    const double t_min = *std::min_element(delay_ns.begin(), delay_ns.end());
    const double t_max = *std::max_element(delay_ns.begin(), delay_ns.end());

    for (int k = 1; k <= max_components; ++k) {
        if (n < 5 * 2 * k) break;  // not enough points for 2k free parameters

        auto objective = [&](const Eigen::VectorXd& lt) {
            return profiled_exp_fit(delay_ns, phase_error, lt).ssr;
        };

        // multistart over log-spaced settling-time seeds
        numeric::NelderMeadResult winner;
        winner.fx = std::numeric_limits<double>::infinity();
        for (double spread : {1.0, 0.5, 2.0}) {
            Eigen::VectorXd lt0(k);
            for (int j = 0; j < k; ++j) {
                double frac = (k == 1) ? 0.5 : static_cast<double>(j) / (k - 1);
                lt0(j) = std::log(t_min * spread) +
                         frac * (std::log(t_max / 2.0) - std::log(t_min * spread));
            }
            numeric::NelderMeadOptions opts;
            opts.max_evals = 3000;
            auto r = numeric::nelder_mead(objective, lt0,
                                          Eigen::VectorXd::Constant(k, 0.4), opts);
            if (r.fx < winner.fx) winner = r;
        }

        if (bic_of(winner.fx, k) < best.bic) {
            auto lin = profiled_exp_fit(delay_ns, phase_error, winner.x);
            StepResponseModel model;
            model.sample_rate = sample_rate;
            for (int j = 0; j < k; ++j) {
                model.components.push_back(
                    {lin.coeffs(j) / scale, std::exp(winner.x(j))});
            }
            std::sort(model.components.begin(), model.components.end(),
                      [](const ExpComponent& a, const ExpComponent& b) {
                          return a.tau_ns < b.tau_ns;
                      });
            best.model = model;
            best.bic = bic_of(winner.fx, k);
            best.residual_rms = std::sqrt(winner.fx / n);
        }
    }

    for (std::size_t i = 0; i + 1 < best.model.components.size(); ++i) {
        const double ratio = best.model.components[i + 1].tau_ns /
                             best.model.components[i].tau_ns;
        if (ratio < 1.1) {
            best.warning = "two settling times within 10%; amplitudes are degenerate";
        }
    }
    return best;
}

P1Map correct_p1_tilt(const P1Map& map, double a, double b) {
    const int nz = static_cast<int>(map.z_l.size());
    const int nt = static_cast<int>(map.t.size());
    if (map.p1.rows() != nt || map.p1.cols() != nz) {
        throw GridError("correct_p1_tilt: map dimensions do not match axes");
    }
    for (int j = 0; j + 1 < nz; ++j) {
        if (!(map.z_l[j + 1] > map.z_l[j])) {
            throw GridError("correct_p1_tilt: Z_L axis must be strictly ascending");
        }
    }

    P1Map out = map;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (int i = 0; i < nt; ++i) {
        const double shift = a * (1.0 - std::exp(b * map.t[i]));
        for (int j = 0; j < nz; ++j) {
            const double z = map.z_l[j] + shift;
            if (z < map.z_l.front() || z > map.z_l.back()) {
                out.p1(i, j) = nan;
                continue;
            }
            auto it = std::upper_bound(map.z_l.begin(), map.z_l.end(), z);
            int hi = std::clamp<int>(static_cast<int>(it - map.z_l.begin()), 1, nz - 1);
            int lo = hi - 1;
            const double w = (z - map.z_l[lo]) / (map.z_l[hi] - map.z_l[lo]);
            out.p1(i, j) = (1.0 - w) * map.p1(i, lo) + w * map.p1(i, hi);
        }
    }
    return out;
}

}  // namespace fluxsim::pulsecomp
