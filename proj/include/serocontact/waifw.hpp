#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "serocontact/age_grid.hpp"
#include "serocontact/common.hpp"
#include "serocontact/demography.hpp"
#include "serocontact/foi.hpp"
#include "serocontact/optim.hpp"
#include "serocontact/serology.hpp"

namespace sero {

/// Which transmission-rate parameter each matrix cell shares, for the six
/// classical structures imposed on the transmission matrix. Cell values are
/// 0-based parameter indices; -1 marks a structural zero.
class MixingPattern {
public:
    static MixingPattern standard(const std::string& name) {
        using Row = std::array<int, 6>;
        std::array<Row, 6> s{};
        if (name == "W1") {
            for (auto& r : s) r.fill(5);
            for (int i = 0; i < 5; ++i) s[i][i] = i;
        } else if (name == "W2") {
            s = {Row{0, 0, 2, 3, 4, 5}, Row{0, 1, 2, 3, 4, 5}, Row{2, 2, 2, 3, 4, 5},
                 Row{3, 3, 3, 3, 4, 5}, Row{4, 4, 4, 4, 4, 5}, Row{5, 5, 5, 5, 5, 5}};
        } else if (name == "W3") {
            s = {Row{0, 0, 0, 3, 4, 5}, Row{0, 1, 2, 3, 4, 5}, Row{0, 2, 2, 3, 4, 5},
                 Row{3, 3, 3, 3, 4, 5}, Row{4, 4, 4, 4, 4, 5}, Row{5, 5, 5, 5, 5, 5}};
        } else if (name == "W4") {
            for (int i = 0; i < 6; ++i) s[i].fill(i);
        } else if (name == "W5") {
            for (auto& r : s) r.fill(5);
            for (int i = 0; i < 5; ++i) s[i][i] = i;
            s[5][5] = 4;
        } else if (name == "W6") {
            for (auto& r : s) r.fill(-1);
            for (int i = 0; i < 6; ++i) s[i][i] = i;
        } else {
            throw ConfigError("unknown mixing pattern '" + name + "'");
        }
        std::vector<std::vector<int>> idx(6, std::vector<int>(6));
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) idx[i][j] = s[i][j];
        return MixingPattern(name, std::move(idx));
    }

    /// Custom structure: 6x6 cell-to-parameter map, -1 for structural zeros.
    MixingPattern(std::string name, std::vector<std::vector<int>> index)
        : name_(std::move(name)), index_(std::move(index)) {
        if (index_.size() != 6) throw DomainError("mixing pattern: structure must be 6x6");
        int max_idx = -1;
        for (const auto& row : index_) {
            if (row.size() != 6) throw DomainError("mixing pattern: structure must be 6x6");
            for (int v : row) {
                if (v < -1) throw DomainError("mixing pattern: bad parameter index");
                max_idx = std::max(max_idx, v);
            }
        }
        if (max_idx < 0) throw DomainError("mixing pattern: no free parameters");
        params_ = static_cast<std::size_t>(max_idx) + 1;
        std::vector<bool> seen(params_, false);
        for (const auto& row : index_)
            for (int v : row)
                if (v >= 0) seen[static_cast<std::size_t>(v)] = true;
        for (std::size_t p = 0; p < params_; ++p)
            if (!seen[p])
                throw DomainError("mixing pattern: parameter " + std::to_string(p + 1) +
                                  " never used");
    }

    const std::string& name() const { return name_; }
    std::size_t param_count() const { return params_; }
    int cell(std::size_t i, std::size_t j) const { return index_[i][j]; }

    Eigen::MatrixXd expand(const std::vector<double>& params) const {
        if (params.size() != params_)
            throw DomainError("mixing pattern: expected " + std::to_string(params_) +
                              " parameters");
        for (double p : params)
            if (!(p >= 0.0) || !std::isfinite(p))
                throw DomainError("mixing pattern: parameters must be finite and nonnegative");
        Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(6, 6);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j)
                if (index_[i][j] >= 0) beta(i, j) = params[static_cast<std::size_t>(index_[i][j])];
        return beta;
    }

private:
    std::string name_;
    std::vector<std::vector<int>> index_;
    std::size_t params_ = 0;
};

/// Per-capita yearly effective-contact (transmission) rates between classes:
/// entry (i,j) is the rate at which one infective of class j transmits to a
/// given susceptible of class i.
struct WaifwMatrix {
    AgeGrid grid;
    Eigen::MatrixXd beta;

    WaifwMatrix(AgeGrid g, Eigen::MatrixXd b) : grid(std::move(g)), beta(std::move(b)) {
        const auto J = static_cast<Eigen::Index>(grid.classes());
        if (beta.rows() != J || beta.cols() != J)
            throw DomainError("waifw: shape does not match grid");
        for (Eigen::Index i = 0; i < J; ++i)
            for (Eigen::Index j = 0; j < J; ++j)
                if (!(beta(i, j) >= 0.0) || !std::isfinite(beta(i, j)))
                    throw DomainError("waifw: entries must be finite and nonnegative");
    }
};

inline WaifwMatrix build_waifw(const MixingPattern& pattern, const std::vector<double>& params,
                               const AgeGrid& grid) {
    if (grid.classes() != 6)
        throw DomainError("build_waifw: mixing patterns are defined on six classes");
    return WaifwMatrix(grid, pattern.expand(params));
}

/// Check that the analysis grid spans maternal-antibody age to life
/// expectancy, the range the equilibrium equations assume.
inline void check_analysis_grid(const AgeGrid& grid, const Demography& demo) {
    if (!nearly_equal(grid.lower(), demo.maternal_antibody_age(), 1e-12, 1e-12) ||
        !nearly_equal(grid.upper(), demo.life_expectancy(), 1e-12, 1e-12))
        throw DomainError("analysis grid must run from the maternal-antibody age to the life expectancy");
}

/// Endemic-equilibrium force of infection for each age class under the given
/// transmission matrix, by damped fixed-point iteration.
inline std::vector<double> solve_foi_fixed_point(const WaifwMatrix& waifw,
                                                 const Demography& demo,
                                                 double tol = 1e-10, int max_iter = 10000) {
    check_analysis_grid(waifw.grid, demo);
    const std::size_t J = waifw.grid.classes();
    const std::vector<double> w = waifw.grid.widths();
    const double factor = demo.nd_over_l();

    auto apply = [&](const std::vector<double>& lam) {
        // bracket j: susceptible fraction entering class j minus leaving it
        std::vector<double> out(J, 0.0);
        std::vector<double> surv(J + 1);
        surv[0] = 1.0;
        double h = 0.0;
        for (std::size_t k = 0; k < J; ++k) {
            h += lam[k] * w[k];
            surv[k + 1] = std::exp(-h);
        }
        for (std::size_t i = 0; i < J; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < J; ++j)
                s += waifw.beta(i, j) * (surv[j] - surv[j + 1]);
            out[i] = factor * s;
        }
        return out;
    };

    std::vector<double> lam(J, 0.1);
    for (int iter = 0; iter < max_iter; ++iter) {
        std::vector<double> next = apply(lam);
        double residual = 0.0;
        for (std::size_t i = 0; i < J; ++i) residual = std::max(residual, std::fabs(next[i] - lam[i]));
        if (residual < tol) return next;
        for (std::size_t i = 0; i < J; ++i) lam[i] = 0.5 * lam[i] + 0.5 * next[i];
    }
    std::vector<double> next = apply(lam);
    double residual = 0.0;
    for (std::size_t i = 0; i < J; ++i) residual = std::max(residual, std::fabs(next[i] - lam[i]));
    throw ConvergenceError("fixed point iteration did not converge, residual " +
                           std::to_string(residual));
}

struct MixingFit {
    MixingPattern pattern;
    std::vector<double> params;
    WaifwMatrix waifw;
    std::vector<double> lambdas;
    double loglik = 0.0;
    std::size_t n_params = 0;
    bool converged = false;
    bool non_identifiable = false;
    std::vector<std::size_t> flat_params;
    double info_singular_ratio = 1.0;
    std::size_t penalized_evaluations = 0;
};

namespace detail {

struct SeroCache {
    std::vector<std::vector<double>> t;
    std::vector<int> y;
};

inline SeroCache cache_exposures(const SerologyDataset& data, const AgeGrid& grid) {
    SeroCache cache;
    PiecewiseFoi probe(grid, std::vector<double>(grid.classes(), 0.0));
    cache.t.reserve(data.size());
    cache.y.reserve(data.size());
    for (const auto& s : data.samples()) {
        if (!grid.contains(s.age))
            throw DomainError("serology sample age " + std::to_string(s.age) +
                              " outside the analysis grid");
        cache.t.push_back(probe.exposure_times(s.age));
        cache.y.push_back(s.status);
    }
    return cache;
}

inline double cached_loglik(const SeroCache& cache, const std::vector<double>& lam) {
    double ll = 0.0;
    const std::size_t J = lam.size();
    for (std::size_t i = 0; i < cache.t.size(); ++i) {
        double h = 0.0;
        for (std::size_t j = 0; j < J; ++j) h += lam[j] * cache.t[i][j];
        double p = clamp_probability(-std::expm1(-h));
        ll += cache.y[i] ? std::log(p) : std::log1p(-p);
    }
    return ll;
}

} // namespace detail

/// Maximum-likelihood transmission parameters for an imposed mixing
/// structure. The likelihood of a candidate parameter vector is evaluated
/// through the equilibrium force of infection it implies.
inline MixingFit fit_mixing_pattern(const MixingPattern& pattern, const SerologyDataset& data,
                                    const Demography& demo, const AgeGrid& grid) {
    if (data.size() == 0) throw DomainError("fit_mixing_pattern: empty serology");
    check_analysis_grid(grid, demo);
    if (grid.classes() != 6)
        throw DomainError("fit_mixing_pattern: six age classes required");

    const std::size_t P = pattern.param_count();
    detail::SeroCache cache = detail::cache_exposures(data, grid);
    std::size_t penalized = 0;

    auto lambdas_for = [&](const std::vector<double>& beta_params) {
        return solve_foi_fixed_point(build_waifw(pattern, beta_params, grid), demo);
    };

    auto negloglik_beta = [&](const std::vector<double>& beta_params) {
        std::vector<double> lam;
        try {
            lam = lambdas_for(beta_params);
        } catch (const ConvergenceError&) {
            ++penalized;
            return 1e10;
        }
        return -detail::cached_loglik(cache, lam);
    };

    auto objective = [&](const std::vector<double>& theta) {
        std::vector<double> beta_params(P);
        for (std::size_t p = 0; p < P; ++p) beta_params[p] = std::exp(theta[p]);
        return negloglik_beta(beta_params);
    };

    // starting scale: homogeneous rate reproducing a unit-order force of
    // infection given the observed lifetime immune fraction
    double immune_frac =
        std::clamp(static_cast<double>(data.count_immune()) / data.size(), 0.05, 0.999);
    double beta0 = 0.1 / (demo.nd_over_l() * immune_frac);
    std::vector<double> theta0(P, std::log(beta0));

    OptimResult opt = minimize(objective, theta0, nullptr, 1e-11, 6000);
    if (!opt.converged)
        throw ConvergenceError("fit_mixing_pattern(" + pattern.name() + "): optimizer did not converge");

    std::vector<double> beta_hat(P);
    for (std::size_t p = 0; p < P; ++p) beta_hat[p] = std::exp(opt.x[p]);

    // snap numerically-vanished parameters to exact zero
    double scale = 0.0;
    for (double b : beta_hat) scale = std::max(scale, b);
    for (double& b : beta_hat)
        if (b < 1e-8 * scale) b = 0.0;

    double best = -negloglik_beta(beta_hat);

    MixingFit fit{pattern,
                  beta_hat,
                  build_waifw(pattern, beta_hat, grid),
                  lambdas_for(beta_hat),
                  best,
                  P,
                  true,
                  false,
                  {},
                  1.0,
                  0};

    // flat-ridge probe: a parameter whose value can move over the typical
    // parameter scale without changing the likelihood is not identified
    double mean_nonzero = 0.0;
    int nz = 0;
    for (double b : beta_hat)
        if (b > 0) {
            mean_nonzero += b;
            ++nz;
        }
    mean_nonzero = nz ? mean_nonzero / nz : 1e-4;
    for (std::size_t p = 0; p < P; ++p) {
        double saved = beta_hat[p];
        double delta = 0.0;
        for (double frac : {1e-4, 1e-3, 1e-2}) {
            std::vector<double> probe = beta_hat;
            probe[p] = saved + frac * mean_nonzero;
            delta = std::max(delta, std::fabs(-negloglik_beta(probe) - best));
        }
        if (delta < 1e-7) fit.flat_params.push_back(p);
    }

    // curvature of the remaining directions via the observed information
    std::vector<std::size_t> active;
    for (std::size_t p = 0; p < P; ++p)
        if (beta_hat[p] > 0 &&
            std::find(fit.flat_params.begin(), fit.flat_params.end(), p) == fit.flat_params.end())
            active.push_back(p);
    if (active.size() >= 2) {
        const double h = 1e-4;
        const std::size_t A = active.size();
        Eigen::MatrixXd info(A, A);
        auto f_at = [&](const std::vector<double>& th) {
            std::vector<double> bp = beta_hat;
            for (std::size_t a = 0; a < A; ++a) bp[active[a]] = std::exp(th[a]);
            return negloglik_beta(bp);
        };
        std::vector<double> th0(A);
        for (std::size_t a = 0; a < A; ++a) th0[a] = std::log(beta_hat[active[a]]);
        double f0 = f_at(th0);
        for (std::size_t a = 0; a < A; ++a) {
            for (std::size_t b = a; b < A; ++b) {
                std::vector<double> t1 = th0, t2 = th0, t3 = th0, t4 = th0;
                t1[a] += h; t1[b] += h;
                t2[a] += h; t2[b] -= h;
                t3[a] -= h; t3[b] += h;
                t4[a] -= h; t4[b] -= h;
                double v = (a == b)
                               ? (f_at(t1) - 2 * f0 + f_at(t4)) / (4 * h * h)
                               : (f_at(t1) - f_at(t2) - f_at(t3) + f_at(t4)) / (4 * h * h);
                info(a, b) = info(b, a) = v;
            }
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(info);
        const auto& sv = svd.singularValues();
        fit.info_singular_ratio = sv(sv.size() - 1) / std::max(sv(0), 1e-300);
    }

    fit.non_identifiable = !fit.flat_params.empty() || fit.info_singular_ratio < 1e-6;
    fit.penalized_evaluations = penalized;
    return fit;
}

} // namespace sero
