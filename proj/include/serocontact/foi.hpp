#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "serocontact/age_grid.hpp"
#include "serocontact/common.hpp"
#include "serocontact/optim.hpp"
#include "serocontact/serology.hpp"

namespace sero {

/// Force of infection constant within each age class.
class PiecewiseFoi {
public:
    PiecewiseFoi(AgeGrid grid, std::vector<double> lambdas)
        : grid_(std::move(grid)), lambdas_(std::move(lambdas)) {
        if (lambdas_.size() != grid_.classes())
            throw DomainError("piecewise foi: lambda count does not match grid");
        for (double l : lambdas_)
            if (!(l >= 0.0) || !std::isfinite(l))
                throw DomainError("piecewise foi: rates must be finite and nonnegative");
    }

    const AgeGrid& grid() const { return grid_; }
    const std::vector<double>& lambdas() const { return lambdas_; }

    /// Integral of the rate from the bottom of the grid up to age a.
    double cumulative_hazard(double a) const {
        if (a <= grid_.lower()) return 0.0;
        if (a > grid_.upper())
            throw DomainError("cumulative hazard requested beyond the grid");
        double h = 0.0;
        const auto& b = grid_.breakpoints();
        for (std::size_t j = 0; j < grid_.classes(); ++j) {
            if (a >= b[j + 1]) {
                h += lambdas_[j] * (b[j + 1] - b[j]);
            } else {
                h += lambdas_[j] * (a - b[j]);
                break;
            }
        }
        return h;
    }

    /// Fraction already immune at age a; zero at and below the grid bottom.
    double prevalence(double a) const { return -std::expm1(-cumulative_hazard(a)); }

    /// Fraction still susceptible at age a.
    double susceptible(double a) const { return std::exp(-cumulative_hazard(a)); }

    /// Time an individual of age a has spent exposed to each class rate.
    std::vector<double> exposure_times(double a) const {
        std::vector<double> t(grid_.classes(), 0.0);
        const auto& b = grid_.breakpoints();
        for (std::size_t j = 0; j < grid_.classes(); ++j) {
            if (a >= b[j + 1]) t[j] = b[j + 1] - b[j];
            else if (a > b[j]) {
                t[j] = a - b[j];
                break;
            } else break;
        }
        return t;
    }

private:
    AgeGrid grid_;
    std::vector<double> lambdas_;
};

inline double prevalence_at_age(const PiecewiseFoi& foi, double a) { return foi.prevalence(a); }

inline std::vector<double> susceptible_profile(const PiecewiseFoi& foi,
                                               const std::vector<double>& ages) {
    std::vector<double> x(ages.size());
    for (std::size_t i = 0; i < ages.size(); ++i) x[i] = foi.susceptible(ages[i]);
    return x;
}

constexpr double kProbClampLo = 1e-12;
constexpr double kProbClampHi = 1.0 - 1e-12;

inline double clamp_probability(double p, std::size_t* clamp_events = nullptr) {
    if (p < kProbClampLo) {
        if (clamp_events) ++*clamp_events;
        return kProbClampLo;
    }
    if (p > kProbClampHi) {
        if (clamp_events) ++*clamp_events;
        return kProbClampHi;
    }
    return p;
}

/// Bernoulli log likelihood of serostatus under the given force of infection.
inline double bernoulli_loglik(const PiecewiseFoi& foi, const SerologyDataset& data,
                               std::size_t* clamp_events = nullptr) {
    if (data.size() == 0) throw DomainError("bernoulli loglik: empty dataset");
    double ll = 0.0;
    for (const auto& s : data.samples()) {
        double p = clamp_probability(foi.prevalence(s.age), clamp_events);
        ll += s.status ? std::log(p) : std::log1p(-p);
    }
    return ll;
}

/// Gradient of bernoulli_loglik with respect to each class rate.
inline std::vector<double> bernoulli_loglik_gradient(const PiecewiseFoi& foi,
                                                     const SerologyDataset& data) {
    if (data.size() == 0) throw DomainError("bernoulli loglik: empty dataset");
    std::vector<double> g(foi.grid().classes(), 0.0);
    for (const auto& s : data.samples()) {
        std::vector<double> t = foi.exposure_times(s.age);
        double e = std::exp(-foi.cumulative_hazard(s.age));
        double p = clamp_probability(1.0 - e);
        double c = s.status ? e / p : -e / (1.0 - p);
        for (std::size_t j = 0; j < g.size(); ++j) g[j] += c * t[j];
    }
    return g;
}

struct FoiFit {
    PiecewiseFoi foi;
    double loglik = 0.0;
    bool converged = false;
    std::size_t clamp_events = 0;
    int iterations = 0;
    /// Per class: any serology present in the class age range.
    std::vector<bool> has_data;
    /// Per class: no data at or past this class, rate copied from the last
    /// class that had observations.
    std::vector<bool> tied_to_last_observed;
};

namespace detail {

/// Shared machinery for likelihoods that are functions of the class rates.
/// Rates below this are treated as exact zeros when reporting.
constexpr double kLambdaZeroThreshold = 1e-8;

inline std::vector<double> zero_snapped(std::vector<double> lambdas) {
    for (double& l : lambdas)
        if (l < kLambdaZeroThreshold) l = 0.0;
    return lambdas;
}

} // namespace detail

/// Maximum-likelihood piecewise-constant force of infection. Nonnegativity
/// comes from optimizing the log rates; the prevalence curve implied by any
/// nonnegative rate vector is automatically non-decreasing.
inline FoiFit fit_piecewise_foi(const SerologyDataset& data, const AgeGrid& grid) {
    if (data.size() == 0) throw DomainError("fit_piecewise_foi: empty dataset");
    const std::size_t J = grid.classes();

    std::vector<std::size_t> count(J, 0), immune(J, 0);
    for (const auto& s : data.samples()) {
        if (!grid.contains(s.age))
            throw DomainError("fit_piecewise_foi: sample age " + std::to_string(s.age) +
                              " outside the grid");
        std::size_t j = grid.class_of(s.age);
        ++count[j];
        immune[j] += static_cast<std::size_t>(s.status);
    }

    std::size_t last_observed = 0;
    bool any = false;
    for (std::size_t j = 0; j < J; ++j)
        if (count[j] > 0) {
            last_observed = j;
            any = true;
        }
    if (!any) throw DomainError("fit_piecewise_foi: no observations inside the grid");
    for (std::size_t j = 0; j < last_observed; ++j)
        if (count[j] == 0)
            throw DomainError("fit_piecewise_foi: age class " + grid.label(j) +
                              " contains no observations");

    const std::size_t P = last_observed + 1;

    // cache per-sample exposure times once; they do not depend on the rates
    struct Obs {
        std::vector<double> t;
        int y;
    };
    std::vector<Obs> obs;
    obs.reserve(data.size());
    {
        PiecewiseFoi probe(grid, std::vector<double>(J, 0.0));
        for (const auto& s : data.samples())
            obs.push_back({probe.exposure_times(s.age), s.status});
    }

    auto expand = [&](const std::vector<double>& theta) {
        std::vector<double> lam(J);
        for (std::size_t j = 0; j < J; ++j)
            lam[j] = std::exp(theta[std::min(j, P - 1)]);
        return lam;
    };

    auto negloglik = [&](const std::vector<double>& theta) {
        std::vector<double> lam = expand(theta);
        double ll = 0.0;
        for (const auto& o : obs) {
            double h = 0.0;
            for (std::size_t j = 0; j < J; ++j) h += lam[j] * o.t[j];
            double p = clamp_probability(-std::expm1(-h));
            ll += o.y ? std::log(p) : std::log1p(-p);
        }
        return -ll;
    };

    auto neggrad = [&](const std::vector<double>& theta) {
        std::vector<double> lam = expand(theta);
        std::vector<double> g(P, 0.0);
        for (const auto& o : obs) {
            double h = 0.0;
            for (std::size_t j = 0; j < J; ++j) h += lam[j] * o.t[j];
            double e = std::exp(-h);
            double p = clamp_probability(1.0 - e);
            double c = o.y ? e / p : -e / (1.0 - p);
            for (std::size_t j = 0; j < P; ++j) g[j] -= c * o.t[j] * lam[j];
        }
        return g;
    };

    std::vector<double> theta0(P);
    for (std::size_t j = 0; j < P; ++j) {
        double phat = count[j] ? static_cast<double>(immune[j]) / count[j] : 0.5;
        phat = std::clamp(phat, 0.01, 0.99);
        theta0[j] = std::log(-std::log1p(-phat) / grid.width(j));
    }

    OptimResult opt = minimize(negloglik, theta0, neggrad);
    if (!opt.converged) {
        std::string trace = "best rates:";
        for (double l : detail::zero_snapped(expand(opt.x)))
            trace += " " + std::to_string(l);
        throw ConvergenceError("fit_piecewise_foi: optimizer did not converge", trace);
    }

    std::vector<double> lambdas = detail::zero_snapped(expand(opt.x));
    FoiFit fit{PiecewiseFoi(grid, lambdas), 0.0, true, 0, opt.iterations, {}, {}};
    fit.loglik = bernoulli_loglik(fit.foi, data, &fit.clamp_events);
    fit.has_data.resize(J);
    fit.tied_to_last_observed.resize(J);
    for (std::size_t j = 0; j < J; ++j) {
        fit.has_data[j] = count[j] > 0;
        fit.tied_to_last_observed[j] = j > last_observed;
    }
    return fit;
}

} // namespace sero
