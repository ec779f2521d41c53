#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "serocontact/contact_matrix.hpp"
#include "serocontact/optim.hpp"
#include "serocontact/stats.hpp"
#include "serocontact/waifw.hpp"

namespace sero {

/// Expected infections in class i caused by one infective of class j over
/// the full infectious period, at total susceptibility.
struct NextGenMatrix {
    AgeGrid grid;
    Eigen::MatrixXd k;
};

inline NextGenMatrix next_generation_matrix(const WaifwMatrix& beta, const Demography& demo) {
    check_analysis_grid(beta.grid, demo);
    const std::size_t J = beta.grid.classes();
    Eigen::MatrixXd k(J, J);
    const double factor = demo.nd_over_l();
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t j = 0; j < J; ++j) k(i, j) = factor * beta.grid.width(i) * beta.beta(i, j);
    return NextGenMatrix{beta.grid, std::move(k)};
}

/// Spectral radius of a nonnegative matrix: power iteration from the ones
/// vector, sharpened by shifted inverse iteration; a dense eigensolve backs
/// the result when the two disagree.
inline double dominant_eigenvalue(const Eigen::MatrixXd& M) {
    const Eigen::Index n = M.rows();
    if (n == 0 || M.cols() != n) throw DomainError("dominant_eigenvalue: need a square matrix");
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (!(M(i, j) >= 0.0) || !std::isfinite(M(i, j)))
                throw DomainError("dominant_eigenvalue: entries must be finite and nonnegative");

    auto dense_radius = [&]() {
        Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
        double r = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) r = std::max(r, std::abs(es.eigenvalues()(i)));
        return r;
    };

    Eigen::VectorXd v = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
    double est = 0.0;
    bool power_ok = false;
    for (int iter = 0; iter < 500; ++iter) {
        Eigen::VectorXd u = M * v;
        double norm = u.norm();
        if (norm == 0.0) return 0.0;
        v = u / norm;
        double next = v.dot(M * v);
        if (iter > 0 && std::fabs(next - est) <= 1e-12 * std::max(1.0, std::fabs(next))) {
            est = next;
            power_ok = true;
            break;
        }
        est = next;
    }
    if (!(est > 0.0)) return power_ok ? std::max(est, 0.0) : dense_radius();

    // two steps of inverse iteration with a shift just above the estimate
    double mu = est * (1.0 + 1e-8) + 1e-14;
    Eigen::MatrixXd shifted = M - mu * Eigen::MatrixXd::Identity(n, n);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(shifted);
    Eigen::VectorXd z = v;
    double refined = est;
    bool refine_ok = true;
    for (int step = 0; step < 2; ++step) {
        Eigen::VectorXd zn = lu.solve(z);
        double norm = zn.norm();
        if (!std::isfinite(norm) || norm == 0.0) {
            refine_ok = false;
            break;
        }
        z = zn / norm;
        double r = z.dot(M * z);
        if (!std::isfinite(r)) {
            refine_ok = false;
            break;
        }
        refined = r;
    }
    if (refine_ok && std::fabs(refined - est) <= 1e-8 * std::max(1.0, std::fabs(est)))
        return refined;
    return dense_radius();
}

inline double basic_reproduction_number(const WaifwMatrix& beta, const Demography& demo) {
    return dominant_eigenvalue(next_generation_matrix(beta, demo).k);
}

/// How contact rates scale into transmission rates: a constant factor, a
/// two-block discrete structure, or a loglinear function of the susceptible
/// age a and/or the infectious age a'.
class ProportionalityModel {
public:
    enum class Kind { Constant, Discrete, Loglinear };

    static ProportionalityModel constant(double q) {
        return ProportionalityModel(Kind::Constant, "constant", {q}, 12.0);
    }

    static ProportionalityModel discrete(const std::string& name, double g1, double g2,
                                         double split_age = 12.0) {
        if (!(name >= "M1" && name <= "M5"))
            throw ConfigError("discrete proportionality models are M1..M5");
        return ProportionalityModel(Kind::Discrete, name, {g1, g2}, split_age);
    }

    static ProportionalityModel loglinear(const std::string& name, std::vector<double> gammas) {
        std::size_t want = (name == "M6" || name == "M8") ? 2
                           : (name == "M7" || name == "M9" || name == "M10") ? 3
                                                                            : 0;
        if (want == 0) throw ConfigError("loglinear proportionality models are M6..M10");
        if (gammas.size() != want)
            throw ConfigError(name + " takes " + std::to_string(want) + " parameters");
        return ProportionalityModel(Kind::Loglinear, name, std::move(gammas), 12.0);
    }

    /// Template with neutral starting parameters, by model name.
    static ProportionalityModel named(const std::string& name, double split_age = 12.0) {
        if (name == "constant") return constant(0.1);
        if (name >= "M1" && name <= "M5" && name.size() == 2)
            return discrete(name, 0.1, 0.1, split_age);
        if (name == "M6" || name == "M8") return loglinear(name, {std::log(0.1), 0.0});
        if (name == "M7" || name == "M9" || name == "M10")
            return loglinear(name, {std::log(0.1), 0.0, 0.0});
        throw ConfigError("unknown proportionality model '" + name + "'");
    }

    Kind kind() const { return kind_; }
    const std::string& name() const { return name_; }
    const std::vector<double>& params() const { return params_; }
    double split_age() const { return split_age_; }
    std::size_t param_count() const { return params_.size(); }

    ProportionalityModel with_params(std::vector<double> p) const {
        ProportionalityModel m = *this;
        if (p.size() != params_.size())
            throw DomainError("proportionality model: wrong parameter count");
        m.params_ = std::move(p);
        return m;
    }

    /// Whether parameters live on [0, inf) (true) or the whole line (false).
    bool nonnegative_params() const { return kind_ != Kind::Loglinear; }

    Eigen::MatrixXd factor_matrix(const AgeGrid& grid) const {
        const std::size_t J = grid.classes();
        Eigen::MatrixXd q(J, J);
        if (kind_ == Kind::Constant) {
            if (!(params_[0] >= 0)) throw DomainError("constant proportionality must be >= 0");
            q.setConstant(params_[0]);
            return q;
        }
        if (kind_ == Kind::Discrete) {
            if (!(params_[0] >= 0) || !(params_[1] >= 0))
                throw DomainError("discrete proportionality parameters must be >= 0");
            double g1 = params_[0], g2 = params_[1];
            double cell[2][2];
            if (name_ == "M1") {
                cell[0][0] = g1; cell[0][1] = g2; cell[1][0] = g2; cell[1][1] = g2;
            } else if (name_ == "M2") {
                cell[0][0] = g1; cell[0][1] = g1; cell[1][0] = g2; cell[1][1] = g2;
            } else if (name_ == "M3") {
                cell[0][0] = g1; cell[0][1] = g2; cell[1][0] = g2; cell[1][1] = g1;
            } else if (name_ == "M4") {
                cell[0][0] = g1; cell[0][1] = 0.0; cell[1][0] = 0.0; cell[1][1] = g2;
            } else {
                cell[0][0] = g1; cell[0][1] = g2; cell[1][0] = g1; cell[1][1] = g2;
            }
            for (std::size_t i = 0; i < J; ++i) {
                int bi = grid.midpoint(i) < split_age_ ? 0 : 1;
                for (std::size_t j = 0; j < J; ++j) {
                    int bj = grid.midpoint(j) < split_age_ ? 0 : 1;
                    q(i, j) = cell[bi][bj];
                }
            }
            return q;
        }
        for (std::size_t i = 0; i < J; ++i) {
            double a = grid.midpoint(i);
            for (std::size_t j = 0; j < J; ++j) {
                double ap = grid.midpoint(j);
                double e;
                if (name_ == "M6") e = params_[0] + params_[1] * a;
                else if (name_ == "M7") e = params_[0] + params_[1] * a + params_[2] * a * a;
                else if (name_ == "M8") e = params_[0] + params_[1] * ap;
                else if (name_ == "M9") e = params_[0] + params_[1] * ap + params_[2] * ap * ap;
                else e = params_[0] + params_[1] * a + params_[2] * ap;
                q(i, j) = std::exp(e);
            }
        }
        return q;
    }

private:
    ProportionalityModel(Kind kind, std::string name, std::vector<double> params, double split)
        : kind_(kind), name_(std::move(name)), params_(std::move(params)), split_age_(split) {}

    Kind kind_;
    std::string name_;
    std::vector<double> params_;
    double split_age_;
};

inline WaifwMatrix apply_proportionality(const ProportionalityModel& model,
                                         const ContactRates& c, const AgeGrid& grid) {
    if (!(c.grid == grid))
        throw DomainError("apply_proportionality: contact rates on a different grid");
    Eigen::MatrixXd q = model.factor_matrix(grid);
    return WaifwMatrix(grid, q.cwiseProduct(c.c));
}

struct ProfileCI {
    double lower = 0.0;
    double upper = 0.0;
    bool lower_open = false;
    bool upper_open = false;
};

/// Deviance-based confidence interval for one coordinate of a likelihood
/// optimum. The remaining coordinates are re-maximized at every probed
/// value; open flags mark sides where the profile never rises enough before
/// the domain ends or the search range is exhausted.
inline ProfileCI profile_likelihood_ci(
    const Objective& negloglik, const std::vector<double>& at_optimum, std::size_t index,
    double level = 0.95, double domain_lo = -std::numeric_limits<double>::infinity(),
    double domain_hi = std::numeric_limits<double>::infinity()) {
    if (index >= at_optimum.size()) throw DomainError("profile ci: parameter index out of range");
    if (!(level > 0.0 && level < 1.0)) throw DomainError("profile ci: level must lie in (0,1)");

    const std::size_t P = at_optimum.size();
    std::vector<double> nuisance0;
    for (std::size_t p = 0; p < P; ++p)
        if (p != index) nuisance0.push_back(at_optimum[p]);

    std::vector<double> warm = nuisance0;
    auto profile_value = [&](double v) {
        if (P == 1) return negloglik({v});
        auto restricted = [&](const std::vector<double>& nuis) {
            std::vector<double> full(P);
            std::size_t q = 0;
            for (std::size_t p = 0; p < P; ++p) full[p] = (p == index) ? v : nuis[q++];
            return negloglik(full);
        };
        OptimResult r = nelder_mead(restricted, warm, 0.05, 1e-9, 800);
        warm = r.x;
        return r.f;
    };

    double f0 = profile_value(at_optimum[index]);
    const double target = f0 + 0.5 * chi2_quantile_1df(level);

    ProfileCI ci;
    const double scale = std::max(std::fabs(at_optimum[index]), 1e-3);
    for (int side = 0; side < 2; ++side) {
        const double sign = side == 0 ? -1.0 : 1.0;
        const double dom = side == 0 ? domain_lo : domain_hi;
        warm = nuisance0;

        double prev = at_optimum[index];
        double step = 0.1 * scale;
        double bound = prev;
        bool bracketed = false, open = false;
        for (int k = 0; k < 200; ++k) {
            double next = prev + sign * step;
            bool clipped = false;
            if ((side == 0 && next < dom) || (side == 1 && next > dom)) {
                next = dom;
                clipped = true;
            }
            double fv = profile_value(next);
            if (fv > target) {
                // bisect between prev (inside) and next (outside)
                double lo = prev, hi = next;
                for (int b = 0; b < 80 && std::fabs(hi - lo) >
                                              1e-9 * (std::fabs(lo) + std::fabs(hi) + 1e-6);
                     ++b) {
                    double mid = 0.5 * (lo + hi);
                    if (profile_value(mid) > target) hi = mid;
                    else lo = mid;
                }
                bound = 0.5 * (lo + hi);
                bracketed = true;
                break;
            }
            prev = next;
            bound = next;
            if (clipped) {
                open = true;
                break;
            }
            step *= 1.6;
        }
        if (!bracketed && !open) open = true;
        if (side == 0) {
            ci.lower = bound;
            ci.lower_open = open;
        } else {
            ci.upper = bound;
            ci.upper_open = open;
        }
    }
    return ci;
}

struct ProportionalityFit {
    ProportionalityModel model;
    double loglik = 0.0;
    std::size_t n_params = 0;
    double r0 = 0.0;
    WaifwMatrix waifw;
    std::vector<double> lambdas;
    bool converged = false;
    bool non_identifiable = false;
    double info_singular_ratio = 1.0;
    bool increasing_in_infectious_age = false;
    bool increasing_in_susceptible_age = false;
    std::size_t penalized_evaluations = 0;
    /// Negative loglikelihood over the model's natural parameters, kept for
    /// profile intervals on the fit.
    std::function<double(const std::vector<double>&)> negloglik;

    ProfileCI profile_ci(std::size_t index, double level = 0.95) const {
        double lo = model.nonnegative_params() ? 0.0
                                               : -std::numeric_limits<double>::infinity();
        return profile_likelihood_ci(negloglik, model.params(), index, level, lo,
                                     std::numeric_limits<double>::infinity());
    }
};

/// Fit a proportionality structure to serology with the contact rates held
/// fixed at their estimates.
inline ProportionalityFit fit_proportionality(const ProportionalityModel& model_template,
                                              const ContactRates& c_hat,
                                              const SerologyDataset& data,
                                              const Demography& demo, const AgeGrid& grid) {
    if (data.size() == 0) throw DomainError("fit_proportionality: empty serology");
    check_analysis_grid(grid, demo);
    if (!(c_hat.grid == grid))
        throw DomainError("fit_proportionality: contact rates on a different grid");

    detail::SeroCache cache = detail::cache_exposures(data, grid);
    auto penalized = std::make_shared<std::size_t>(0);

    // self-contained natural-parameter objective, shared with profile CIs
    ProportionalityModel templ = model_template;
    ContactRates c = c_hat;
    Demography demo_copy = demo;
    auto negloglik = [templ, c, demo_copy, grid, cache, penalized](
                         const std::vector<double>& natural) -> double {
        try {
            ProportionalityModel m = templ.with_params(natural);
            WaifwMatrix beta = apply_proportionality(m, c, grid);
            std::vector<double> lam = solve_foi_fixed_point(beta, demo_copy);
            return -detail::cached_loglik(cache, lam);
        } catch (const Error&) {
            ++*penalized;
            return 1e10;
        }
    };

    const std::size_t P = model_template.param_count();
    const bool log_space = model_template.nonnegative_params();

    auto to_natural = [&](const std::vector<double>& x) {
        if (!log_space) return x;
        std::vector<double> nat(P);
        for (std::size_t p = 0; p < P; ++p) nat[p] = std::exp(x[p]);
        return nat;
    };
    auto objective = [&](const std::vector<double>& x) { return negloglik(to_natural(x)); };

    // starting scale: constant factor giving a unit-order force of infection
    double immune_frac =
        std::clamp(static_cast<double>(data.count_immune()) / data.size(), 0.05, 0.999);
    double cbar = std::max(c.c.mean(), 1e-12);
    double q0 = 0.1 / (demo.nd_over_l() * cbar * immune_frac);

    std::vector<double> x0;
    if (model_template.kind() == ProportionalityModel::Kind::Loglinear) {
        x0.assign(P, 0.0);
        x0[0] = std::log(q0);
    } else {
        x0.assign(P, std::log(q0));
    }

    OptimResult opt = minimize(objective, x0, nullptr, 1e-11, 6000);
    if (!opt.converged || opt.f >= 1e9) {
        std::string trace = "model " + model_template.name() + ", objective " +
                            std::to_string(opt.f) + " after " + std::to_string(opt.iterations) +
                            " iterations";
        throw ConvergenceError("fit_proportionality(" + model_template.name() +
                                   "): optimizer did not converge", trace);
    }

    std::vector<double> natural = to_natural(opt.x);
    if (log_space) {
        double scale = 0.0;
        for (double v : natural) scale = std::max(scale, v);
        for (double& v : natural)
            if (v < 1e-8 * scale) v = 0.0;
    }

    ProportionalityModel fitted = model_template.with_params(natural);
    WaifwMatrix beta = apply_proportionality(fitted, c, grid);
    std::vector<double> lam = solve_foi_fixed_point(beta, demo);

    ProportionalityFit fit{fitted,
                           detail::cached_loglik(cache, lam),
                           P,
                           basic_reproduction_number(beta, demo),
                           beta,
                           lam,
                           true,
                           false,
                           1.0,
                           false,
                           false,
                           0,
                           negloglik};

    // flat-ridge probe over each natural parameter
    double best = -fit.loglik;
    double typical = 0.0;
    for (double v : natural) typical = std::max(typical, std::fabs(v));
    if (typical == 0.0) typical = 1.0;
    std::vector<std::size_t> flat;
    for (std::size_t p = 0; p < P; ++p) {
        double delta = 0.0;
        for (double frac : {1e-4, 1e-3, 1e-2}) {
            std::vector<double> probe = natural;
            probe[p] = natural[p] + frac * typical;
            delta = std::max(delta, std::fabs(negloglik(probe) - best));
            if (!log_space || natural[p] > 0) {
                probe[p] = natural[p] - frac * typical;
                if (!log_space || probe[p] >= 0)
                    delta = std::max(delta, std::fabs(negloglik(probe) - best));
            }
        }
        if (delta < 1e-7) flat.push_back(p);
    }

    // observed-information curvature over the non-flat directions
    std::vector<std::size_t> active;
    for (std::size_t p = 0; p < P; ++p)
        if (std::find(flat.begin(), flat.end(), p) == flat.end() &&
            (!log_space || natural[p] > 0))
            active.push_back(p);
    if (active.size() >= 2) {
        const std::size_t A = active.size();
        Eigen::MatrixXd info(A, A);
        auto f_at = [&](const std::vector<double>& sub) {
            std::vector<double> nat = natural;
            for (std::size_t a = 0; a < A; ++a)
                nat[active[a]] = log_space ? std::exp(sub[a]) : sub[a];
            return negloglik(nat);
        };
        std::vector<double> s0(A);
        for (std::size_t a = 0; a < A; ++a)
            s0[a] = log_space ? std::log(natural[active[a]]) : natural[active[a]];
        const double h = 1e-4;
        double f0 = f_at(s0);
        for (std::size_t a = 0; a < A; ++a)
            for (std::size_t b = a; b < A; ++b) {
                std::vector<double> t1 = s0, t2 = s0, t3 = s0, t4 = s0;
                double ha = h * std::max(1.0, std::fabs(s0[a]));
                double hb = h * std::max(1.0, std::fabs(s0[b]));
                t1[a] += ha; t1[b] += hb;
                t2[a] += ha; t2[b] -= hb;
                t3[a] -= ha; t3[b] += hb;
                t4[a] -= ha; t4[b] -= hb;
                double v = (a == b) ? (f_at(t1) - 2 * f0 + f_at(t4)) / (4 * ha * hb)
                                    : (f_at(t1) - f_at(t2) - f_at(t3) + f_at(t4)) / (4 * ha * hb);
                info(a, b) = info(b, a) = v;
            }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(info);
        const auto& sv = svd.singularValues();
        fit.info_singular_ratio = sv(sv.size() - 1) / std::max(sv(0), 1e-300);
    }

    fit.non_identifiable = !flat.empty() || fit.info_singular_ratio < 1e-6;
    fit.penalized_evaluations = *penalized;

    const std::string& nm = fitted.name();
    if (nm == "M8" || nm == "M9" || nm == "M10") {
        Eigen::MatrixXd q = fitted.factor_matrix(grid);
        const auto J = static_cast<Eigen::Index>(grid.classes());
        fit.increasing_in_infectious_age = q(0, J - 1) > q(0, J - 2);
    }
    if (nm == "M6" || nm == "M7" || nm == "M10") {
        Eigen::MatrixXd q = fitted.factor_matrix(grid);
        const auto J = static_cast<Eigen::Index>(grid.classes());
        fit.increasing_in_susceptible_age = q(J - 1, 0) > q(J - 2, 0);
    }
    return fit;
}

} // namespace sero
