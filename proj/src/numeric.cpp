#include "fluxsim/numeric.hpp"

#include "fluxsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace fluxsim::numeric {

Minimum1D golden_section(const ScalarFn& f, double a, double b, double xtol,
                         int max_iter) {
    static const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    int n_evals = 0;
    auto eval = [&](double x) {
        ++n_evals;
        return f(x);
    };
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = eval(c);
    double fd = eval(d);
    for (int it = 0; it < max_iter && (b - a) > xtol; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = eval(d);
        }
    }
    double xm = 0.5 * (a + b);
    return {xm, eval(xm), n_evals};
}

double bisect_root(const ScalarFn& f, double lo, double hi, double xtol,
                   int max_iter) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (std::signbit(flo) == std::signbit(fhi)) {
        throw DomainError("bisect_root: interval does not bracket a root");
    }
    for (int it = 0; it < max_iter && (hi - lo) > xtol; ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if (fm == 0.0) return mid;
        if (std::signbit(fm) == std::signbit(flo)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

NelderMeadResult nelder_mead(const ObjectiveFn& f, const Eigen::VectorXd& x0,
                             const Eigen::VectorXd& steps,
                             const NelderMeadOptions& opts) {
    const int n = static_cast<int>(x0.size());
    int n_evals = 0;
    auto eval = [&](const Eigen::VectorXd& x) {
        ++n_evals;
        double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::max();
    };

    std::vector<Eigen::VectorXd> xs(n + 1, x0);
    std::vector<double> fs(n + 1);
    for (int i = 0; i < n; ++i) {
        xs[i + 1](i) += steps(i);
    }
    for (int i = 0; i <= n; ++i) fs[i] = eval(xs[i]);

    auto order = [&] {
        std::vector<int> idx(n + 1);
        for (int i = 0; i <= n; ++i) idx[i] = i;
        std::stable_sort(idx.begin(), idx.end(),
                         [&](int a, int b) { return fs[a] < fs[b]; });
        std::vector<Eigen::VectorXd> xs2;
        std::vector<double> fs2;
        for (int i : idx) {
            xs2.push_back(xs[i]);
            fs2.push_back(fs[i]);
        }
        xs.swap(xs2);
        fs.swap(fs2);
    };

    bool converged = false;
    while (n_evals < opts.max_evals) {
        order();
        double fspread = std::abs(fs[n] - fs[0]);
        double xspread = 0.0;
        for (int i = 1; i <= n; ++i) xspread = std::max(xspread, (xs[i] - xs[0]).norm());
        if (fspread <= opts.ftol * (std::abs(fs[0]) + opts.ftol) && xspread <= opts.xtol) {
            converged = true;
            break;
        }

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n; ++i) centroid += xs[i];
        centroid /= n;

        Eigen::VectorXd xr = centroid + (centroid - xs[n]);
        double fr = eval(xr);
        if (fr < fs[0]) {
            Eigen::VectorXd xe = centroid + 2.0 * (centroid - xs[n]);
            double fe = eval(xe);
            if (fe < fr) {
                xs[n] = xe;
                fs[n] = fe;
            } else {
                xs[n] = xr;
                fs[n] = fr;
            }
        } else if (fr < fs[n - 1]) {
            xs[n] = xr;
            fs[n] = fr;
        } else {
            Eigen::VectorXd xc = centroid + 0.5 * (xs[n] - centroid);
            double fc = eval(xc);
            if (fc < fs[n]) {
                xs[n] = xc;
                fs[n] = fc;
            } else {
                for (int i = 1; i <= n; ++i) {
                    xs[i] = xs[0] + 0.5 * (xs[i] - xs[0]);
                    fs[i] = eval(xs[i]);
                }
            }
        }
    }
    order();
    return {xs[0], fs[0], n_evals, converged};
}

namespace {

Eigen::MatrixXd numerical_jacobian(const ResidualFn& f, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& r0, double rel_step) {
    const int m = static_cast<int>(r0.size());
    const int n = static_cast<int>(x.size());
    Eigen::MatrixXd jac(m, n);
    for (int j = 0; j < n; ++j) {
        double h = rel_step * std::max(std::abs(x(j)), 1.0);
        Eigen::VectorXd xp = x, xm = x;
        xp(j) += h;
        xm(j) -= h;
        Eigen::VectorXd rp = f(xp);
        Eigen::VectorXd rm = f(xm);
        if (rp.size() != m || rm.size() != m || !rp.allFinite() || !rm.allFinite()) {
            // fall back to one-sided difference through the base point
            if (rp.size() == m && rp.allFinite()) {
                jac.col(j) = (rp - r0) / h;
                continue;
            }
            if (rm.size() == m && rm.allFinite()) {
                jac.col(j) = (r0 - rm) / h;
                continue;
            }
            jac.col(j).setZero();
            continue;
        }
        jac.col(j) = (rp - rm) / (2.0 * h);
    }
    return jac;
}

}  // namespace

LevMarResult levenberg_marquardt(const ResidualFn& f, const Eigen::VectorXd& x0,
                                 const LevMarOptions& opts) {
    Eigen::VectorXd x = x0;
    Eigen::VectorXd r = f(x);
    if (!r.allFinite()) {
        throw FitError("levenberg_marquardt: residuals not finite at the initial guess");
    }
    const int n = static_cast<int>(x.size());
    double ssr = r.squaredNorm();
    double lambda = 1e-3;

    LevMarResult result;
    result.n_residuals = static_cast<int>(r.size());

    Eigen::MatrixXd jac = numerical_jacobian(f, x, r, opts.fd_step);
    for (int it = 0; it < opts.max_iter; ++it) {
        result.n_iter = it + 1;
        Eigen::MatrixXd jtj = jac.transpose() * jac;
        Eigen::VectorXd jtr = jac.transpose() * r;

        bool stepped = false;
        for (int tries = 0; tries < 40; ++tries) {
            Eigen::MatrixXd damped = jtj;
            for (int k = 0; k < n; ++k) {
                damped(k, k) += lambda * std::max(jtj(k, k), 1e-30);
            }
            Eigen::VectorXd step = damped.ldlt().solve(-jtr);
            Eigen::VectorXd xt = x + step;
            Eigen::VectorXd rt = f(xt);
            double ssr_t = (rt.size() == r.size() && rt.allFinite())
                               ? rt.squaredNorm()
                               : std::numeric_limits<double>::infinity();
            if (ssr_t < ssr) {
                double rel_impr = (ssr - ssr_t) / std::max(ssr, 1e-300);
                double rel_step = step.norm() / std::max(x.norm(), 1e-300);
                x = xt;
                r = rt;
                ssr = ssr_t;
                lambda = std::max(lambda * 0.3, 1e-12);
                stepped = true;
                if (rel_impr < opts.ftol || rel_step < opts.xtol) {
                    result.converged = true;
                }
                break;
            }
            lambda *= 4.0;
            if (lambda > 1e14) break;
        }
        if (!stepped) {
            result.converged = true;  // no downhill direction left
            break;
        }
        if (result.converged) break;
        jac = numerical_jacobian(f, x, r, opts.fd_step);
    }

    jac = numerical_jacobian(f, x, r, opts.fd_step);
    result.x = x;
    result.ssr = ssr;
    result.jtj = jac.transpose() * jac;
    return result;
}

Eigen::VectorXd standard_errors(const LevMarResult& r) {
    const int p = static_cast<int>(r.x.size());
    const int dof = std::max(r.n_residuals - p, 1);
    double s2 = r.ssr / dof;
    Eigen::MatrixXd cov = r.jtj.completeOrthogonalDecomposition().pseudoInverse() * s2;
    Eigen::VectorXd se(p);
    for (int i = 0; i < p; ++i) {
        se(i) = std::sqrt(std::max(cov(i, i), 0.0));
    }
    return se;
}

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    const size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
    return 0.5 * (hi + v[mid - 1]);
}

std::vector<double> median_filter(const std::vector<double>& y, int window) {
    if (window < 1 || window % 2 == 0) {
        throw DomainError("median_filter: window must be a positive odd integer");
    }
    const int n = static_cast<int>(y.size());
    const int r = window / 2;
    std::vector<double> out(n);
    std::vector<double> buf;
    for (int i = 0; i < n; ++i) {
        int lo = std::max(0, i - r);
        int hi = std::min(n, i + r + 1);
        buf.assign(y.begin() + lo, y.begin() + hi);
        out[i] = median(std::move(buf));
    }
    return out;
}

}  // namespace fluxsim::numeric
