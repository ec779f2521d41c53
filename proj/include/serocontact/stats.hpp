#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "serocontact/common.hpp"

namespace sero {

/// Standard normal quantile, Wichura's AS241 rational approximation
/// (absolute error below 1e-15 over (0,1)).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0,1)");
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                   1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                 1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                   5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                 4.2313330701600911252e1) * r + 1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                  3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                  6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                  2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                  1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r + 1.0);
    }
    return q < 0.0 ? -val : val;
}

/// Chi-square quantile with one degree of freedom.
inline double chi2_quantile_1df(double p) {
    double z = normal_quantile(0.5 * (1.0 + p));
    return z * z;
}

/// Quantile by linear interpolation between order statistics
/// (h = (n-1)p + 1 on the sorted sample, the common spreadsheet/R default).
inline double quantile_type7(std::vector<double> values, double p) {
    if (values.empty()) throw DomainError("quantile: empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile: p must lie in [0,1]");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n == 1) return values[0];
    double h = (static_cast<double>(n) - 1.0) * p;
    std::size_t lo = static_cast<std::size_t>(std::floor(h));
    if (lo >= n - 1) return values[n - 1];
    double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

inline double mean(const std::vector<double>& v) {
    if (v.empty()) throw DomainError("mean: empty sample");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double log_factorial(double n) { return std::lgamma(n + 1.0); }

/// log Gamma(y+k) - log Gamma(k) - log Gamma(y+1), the negative-binomial
/// combinatorial term.
inline double negbin_log_comb(double y, double k) {
    return std::lgamma(y + k) - std::lgamma(k) - std::lgamma(y + 1.0);
}

/// Weighted negative-binomial log likelihood term for one observation with
/// mean m and dispersion k (variance m + m^2/k).
inline double negbin_loglik_term(double y, double m, double k) {
    m = std::max(m, 1e-300);
    return negbin_log_comb(y, k) + k * std::log(k / (k + m)) + y * std::log(m / (k + m));
}

struct PercentileInterval {
    double lower = 0.0;
    double upper = 0.0;
};

/// Equal-tailed percentile interval from simulation draws.
inline PercentileInterval percentile_ci(const std::vector<double>& draws, double level = 0.95) {
    if (draws.size() < 2) throw DomainError("percentile interval: need at least two draws");
    if (!(level > 0.0 && level < 1.0))
        throw DomainError("percentile interval: level must lie in (0,1)");
    double alpha = (1.0 - level) / 2.0;
    return {quantile_type7(draws, alpha), quantile_type7(draws, 1.0 - alpha)};
}

} // namespace sero
