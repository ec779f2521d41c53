#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "serocontact/common.hpp"

namespace sero {

using Objective = std::function<double(const std::vector<double>&)>;
using Gradient = std::function<std::vector<double>(const std::vector<double>&)>;

struct OptimResult {
    std::vector<double> x;
    double f = std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
    int evaluations = 0;
};

/// Golden-section minimization of a unimodal function on [lo, hi].
inline double golden_section_min(const std::function<double(double)>& f, double lo, double hi,
                                 double tol = 1e-10, int max_iter = 500) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < max_iter && (b - a) > tol * (1.0 + std::fabs(a) + std::fabs(b)); ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

/// Brent's 1-D minimization (golden section with parabolic interpolation).
inline double brent_min(const std::function<double(double)>& f, double lo, double hi,
                        double tol = 1e-10, int max_iter = 200) {
    const double cgold = 0.3819660112501051;
    double a = lo, b = hi;
    double x = a + cgold * (b - a), w = x, v = x;
    double fx = f(x), fw = fx, fv = fx;
    double d = 0.0, e = 0.0;
    for (int iter = 0; iter < max_iter; ++iter) {
        double xm = 0.5 * (a + b);
        double tol1 = tol * std::fabs(x) + 1e-12;
        double tol2 = 2.0 * tol1;
        if (std::fabs(x - xm) <= tol2 - 0.5 * (b - a)) return x;
        bool parabolic = false;
        if (std::fabs(e) > tol1) {
            double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            q = std::fabs(q);
            double etemp = e;
            e = d;
            if (std::fabs(p) < std::fabs(0.5 * q * etemp) && p > q * (a - x) && p < q * (b - x)) {
                parabolic = true;
                d = p / q;
                double u = x + d;
                if (u - a < tol2 || b - u < tol2) d = (xm - x >= 0 ? tol1 : -tol1);
            }
        }
        if (!parabolic) {
            e = (x >= xm ? a - x : b - x);
            d = cgold * e;
        }
        double u = (std::fabs(d) >= tol1 ? x + d : x + (d >= 0 ? tol1 : -tol1));
        double fu = f(u);
        if (fu <= fx) {
            if (u >= x) a = x;
            else b = x;
            v = w; w = x; x = u;
            fv = fw; fw = fx; fx = fu;
        } else {
            if (u < x) a = u;
            else b = u;
            if (fu <= fw || w == x) {
                v = w; w = u;
                fv = fw; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u;
                fv = fu;
            }
        }
    }
    return x;
}

/// Root of a continuous function on a sign-changing bracket.
inline double bisect_root(const std::function<double(double)>& f, double lo, double hi,
                          double tol = 1e-12, int max_iter = 200) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0) == (fhi > 0))
        throw DomainError("bisect_root: no sign change on bracket");
    for (int i = 0; i < max_iter && (hi - lo) > tol * (1.0 + std::fabs(lo) + std::fabs(hi)); ++i) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Nelder-Mead simplex minimization.
inline OptimResult nelder_mead(const Objective& f, std::vector<double> x0,
                               double initial_step = 0.1, double ftol = 1e-10,
                               int max_iter = 2000) {
    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
    const std::size_t n = x0.size();
    OptimResult res;
    if (n == 0) throw DomainError("nelder_mead: empty start point");

    std::vector<std::vector<double>> simplex(n + 1, x0);
    for (std::size_t i = 0; i < n; ++i) {
        double step = initial_step * std::max(1.0, std::fabs(x0[i]));
        simplex[i + 1][i] += step;
    }
    std::vector<double> fvals(n + 1);
    for (std::size_t i = 0; i <= n; ++i) fvals[i] = f(simplex[i]);
    res.evaluations = static_cast<int>(n) + 1;

    std::vector<std::size_t> order(n + 1);
    for (int iter = 0; iter < max_iter; ++iter) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return fvals[a] < fvals[b]; });
        double fbest = fvals[order[0]], fworst = fvals[order[n]];
        res.iterations = iter;
        if (std::fabs(fworst - fbest) <= ftol * (std::fabs(fbest) + std::fabs(fworst) + 1e-12)) {
            res.converged = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t d = 0; d < n; ++d) centroid[d] += simplex[order[i]][d];
        for (double& c : centroid) c /= static_cast<double>(n);

        auto combine = [&](double coef) {
            std::vector<double> p(n);
            for (std::size_t d = 0; d < n; ++d)
                p[d] = centroid[d] + coef * (simplex[order[n]][d] - centroid[d]);
            return p;
        };

        std::vector<double> xr = combine(-alpha);
        double fr = f(xr);
        ++res.evaluations;
        if (fr < fvals[order[0]]) {
            std::vector<double> xe = combine(-alpha * gamma);
            double fe = f(xe);
            ++res.evaluations;
            if (fe < fr) {
                simplex[order[n]] = std::move(xe);
                fvals[order[n]] = fe;
            } else {
                simplex[order[n]] = std::move(xr);
                fvals[order[n]] = fr;
            }
        } else if (fr < fvals[order[n - 1]]) {
            simplex[order[n]] = std::move(xr);
            fvals[order[n]] = fr;
        } else {
            std::vector<double> xc = combine(fr < fvals[order[n]] ? -rho : rho);
            double fc = f(xc);
            ++res.evaluations;
            if (fc < std::min(fr, fvals[order[n]])) {
                simplex[order[n]] = std::move(xc);
                fvals[order[n]] = fc;
            } else {
                for (std::size_t i = 1; i <= n; ++i) {
                    for (std::size_t d = 0; d < n; ++d)
                        simplex[order[i]][d] =
                            simplex[order[0]][d] +
                            sigma * (simplex[order[i]][d] - simplex[order[0]][d]);
                    fvals[order[i]] = f(simplex[order[i]]);
                    ++res.evaluations;
                }
            }
        }
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (fvals[i] < fvals[best]) best = i;
    res.x = simplex[best];
    res.f = fvals[best];
    return res;
}

inline std::vector<double> finite_difference_gradient(const Objective& f,
                                                      const std::vector<double>& x,
                                                      double h = 1e-6) {
    std::vector<double> g(x.size());
    std::vector<double> xp = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double step = h * std::max(1.0, std::fabs(x[i]));
        xp[i] = x[i] + step;
        double fp = f(xp);
        xp[i] = x[i] - step;
        double fm = f(xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * step);
    }
    return g;
}

/// BFGS quasi-Newton minimization with Armijo backtracking. Pass an empty
/// gradient to fall back on central differences.
inline OptimResult bfgs(const Objective& f, const Gradient& grad, std::vector<double> x0,
                        double gtol = 1e-8, int max_iter = 500) {
    const std::size_t n = x0.size();
    OptimResult res;
    auto gradient = [&](const std::vector<double>& x) {
        return grad ? grad(x) : finite_difference_gradient(f, x);
    };

    std::vector<double> x = std::move(x0);
    double fx = f(x);
    std::vector<double> g = gradient(x);
    ++res.evaluations;

    // inverse Hessian approximation, identity start
    std::vector<double> H(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) H[i * n + i] = 1.0;

    auto inf_norm = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double e : v) m = std::max(m, std::fabs(e));
        return m;
    };

    for (int iter = 0; iter < max_iter; ++iter) {
        res.iterations = iter;
        if (inf_norm(g) <= gtol * (1.0 + std::fabs(fx))) {
            res.converged = true;
            break;
        }

        std::vector<double> p(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) p[i] -= H[i * n + j] * g[j];

        double slope = 0.0;
        for (std::size_t i = 0; i < n; ++i) slope += p[i] * g[i];
        if (slope >= 0.0) {
            // reset to steepest descent if curvature information went bad
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) H[i * n + j] = (i == j) ? 1.0 : 0.0;
            for (std::size_t i = 0; i < n; ++i) p[i] = -g[i];
            slope = 0.0;
            for (std::size_t i = 0; i < n; ++i) slope += p[i] * g[i];
            if (slope >= 0.0) {
                res.converged = inf_norm(g) <= 1e-6 * (1.0 + std::fabs(fx));
                break;
            }
        }

        double t = 1.0;
        double fnew = fx;
        std::vector<double> xnew = x;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t i = 0; i < n; ++i) xnew[i] = x[i] + t * p[i];
            fnew = f(xnew);
            ++res.evaluations;
            if (std::isfinite(fnew) && fnew <= fx + 1e-4 * t * slope) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            res.converged = inf_norm(g) <= 1e-5 * (1.0 + std::fabs(fx));
            break;
        }

        std::vector<double> gnew = gradient(xnew);
        std::vector<double> s(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = xnew[i] - x[i];
            y[i] = gnew[i] - g[i];
        }
        double sy = 0.0;
        for (std::size_t i = 0; i < n; ++i) sy += s[i] * y[i];
        if (sy > 1e-12) {
            // BFGS inverse update: H <- (I - s y'/sy) H (I - y s'/sy) + s s'/sy
            std::vector<double> Hy(n, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) Hy[i] += H[i * n + j] * y[j];
            double yHy = 0.0;
            for (std::size_t i = 0; i < n; ++i) yHy += y[i] * Hy[i];
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    H[i * n + j] += ((sy + yHy) * s[i] * s[j]) / (sy * sy) -
                                    (Hy[i] * s[j] + s[i] * Hy[j]) / sy;
        }
        x = std::move(xnew);
        fx = fnew;
        g = std::move(gnew);
    }

    res.x = std::move(x);
    res.f = fx;
    return res;
}

/// Simplex start refined by quasi-Newton, the default recipe for the
/// likelihood fits in this library.
inline OptimResult minimize(const Objective& f, const std::vector<double>& x0,
                            const Gradient& grad = nullptr, double ftol = 1e-11,
                            int max_iter = 4000) {
    OptimResult nm = nelder_mead(f, x0, 0.1, ftol, max_iter);
    OptimResult qn = bfgs(f, grad, nm.x, 1e-9, 500);
    qn.evaluations += nm.evaluations;
    qn.iterations += nm.iterations;
    if (qn.f <= nm.f) {
        qn.converged = qn.converged || nm.converged;
        return qn;
    }
    nm.evaluations = qn.evaluations;
    return nm;
}

} // namespace sero
