#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "serocontact/bspline.hpp"
#include "serocontact/common.hpp"
#include "serocontact/contact_matrix.hpp"
#include "serocontact/contact_survey.hpp"
#include "serocontact/optim.hpp"
#include "serocontact/stats.hpp"

namespace sero {

/// One observation for the count smoother: how many contacts a respondent
/// reported in one contact-age band, zeros included.
struct CountRecord {
    double respondent_age;
    std::size_t band;
    double count;
    double weight;
};

struct CountTable {
    AgeGrid grid;
    std::vector<CountRecord> records;
    std::size_t participants = 0;
    std::size_t skipped_participants = 0;
    std::size_t skipped_contacts = 0;
};

inline CountTable build_count_table(const ContactSurvey& survey, const AgeGrid& grid) {
    const std::size_t bands = grid.classes();
    CountTable out{grid, {}, 0, 0, 0};

    auto band_of = [&](double age) -> long {
        if (age < grid.lower() || age > grid.upper()) return -1;
        if (age <= grid.lower()) return 0;
        return static_cast<long>(grid.class_of(age));
    };

    const auto& parts = survey.participants();
    constexpr std::size_t skipped = static_cast<std::size_t>(-1);
    std::map<std::string, std::size_t> slot_of;
    std::vector<std::size_t> kept; // indexes into parts
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const auto& p = parts[i];
        if (p.age < grid.lower() || p.age > grid.upper()) {
            ++out.skipped_participants;
            slot_of[p.id] = skipped;
            continue;
        }
        if (p.weight < 0) throw DomainError("count table: negative participant weight");
        slot_of[p.id] = kept.size();
        kept.push_back(i);
    }

    std::vector<double> counts(kept.size() * bands, 0.0);
    for (const auto& c : survey.contacts()) {
        std::size_t slot = slot_of.at(c.participant_id);
        if (slot == skipped) continue;
        long b = band_of(c.age_mid());
        if (b < 0) {
            ++out.skipped_contacts;
            continue;
        }
        counts[slot * bands + static_cast<std::size_t>(b)] += 1.0;
    }

    out.records.reserve(kept.size() * bands);
    for (std::size_t s = 0; s < kept.size(); ++s) {
        const auto& p = parts[kept[s]];
        for (std::size_t b = 0; b < bands; ++b)
            out.records.push_back({p.age, b, counts[s * bands + b], p.weight});
    }
    out.participants = kept.size();
    return out;
}

/// Fitted negative-binomial contact surface on the log scale:
/// log m(a, a') = beta0 + sum_lp delta(l,p) b_l(a) d_p(a').
struct SmoothSurface {
    BsplineBasis basis;
    double beta0 = 0.0;
    Eigen::MatrixXd delta;
    double k = 1.0;
    bool k_capped = false;
    double lambda_a = 0.0;
    double lambda_b = 0.0;
    double edf = 0.0;
    double deviance = 0.0;
    double loglik = 0.0;
    double conditional_aic = 0.0;
    std::size_t irls_iterations = 0;
};

struct SurfaceOptions {
    std::vector<double> lambda_grid{0.1, 1.0, 10.0, 100.0, 1000.0, 10000.0};
    double fixed_lambda_a = -1.0;
    double fixed_lambda_b = -1.0;
    double fixed_k = -1.0;
    double k_lo = 1e-2;
    double k_hi = 1e3;
    std::size_t max_irls = 200;
    double deviance_tol = 1e-8;
};

inline double evaluate_surface_at(const SmoothSurface& s, double a, double ap) {
    std::array<double, 4> vb{}, vd{};
    std::size_t ib = s.basis.evaluate(a, vb);
    std::size_t id = s.basis.evaluate(ap, vd);
    double eta = s.beta0;
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c)
            eta += vb[r] * vd[c] *
                   s.delta(static_cast<Eigen::Index>(ib + r), static_cast<Eigen::Index>(id + c));
    return std::exp(eta);
}

inline SocialContactMatrix evaluate_surface(const SmoothSurface& s, const AgeGrid& grid) {
    const std::size_t J = grid.classes();
    Eigen::MatrixXd m(J, J);
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t j = 0; j < J; ++j)
            m(i, j) = evaluate_surface_at(s, grid.midpoint(i), grid.midpoint(j));
    return SocialContactMatrix(grid, std::move(m));
}

namespace detail {

struct GamGroup {
    std::size_t ib = 0, id = 0;
    std::array<double, 4> vb{}, vd{};
    double sw = 0.0, swy = 0.0;
};

struct GamRec {
    std::uint32_t group;
    double y, w;
};

struct GamData {
    std::vector<GamGroup> groups;
    std::vector<GamRec> recs;
    std::vector<std::pair<double, double>> ytab; // distinct count, total weight
    double wtot = 0.0;
    double lgam_fact = 0.0; // sum of w * lgamma(y+1)
    double ybar = 0.0;
};

inline GamData build_gam_data(const CountTable& counts, const BsplineBasis& basis) {
    if (counts.records.empty()) throw DomainError("surface fit: empty count table");
    GamData d;
    std::map<std::pair<double, std::size_t>, std::uint32_t> index;
    std::map<double, double> ytab;
    double swy_all = 0.0;
    for (const auto& r : counts.records) {
        if (r.weight < 0) throw DomainError("surface fit: negative weight");
        if (r.count < 0) throw DomainError("surface fit: negative count");
        auto key = std::make_pair(r.respondent_age, r.band);
        auto it = index.find(key);
        std::uint32_t g;
        if (it == index.end()) {
            g = static_cast<std::uint32_t>(d.groups.size());
            index.emplace(key, g);
            GamGroup grp;
            grp.ib = basis.evaluate(r.respondent_age, grp.vb);
            grp.id = basis.evaluate(counts.grid.midpoint(r.band), grp.vd);
            d.groups.push_back(grp);
        } else {
            g = it->second;
        }
        d.groups[g].sw += r.weight;
        d.groups[g].swy += r.weight * r.count;
        d.recs.push_back({g, r.count, r.weight});
        d.wtot += r.weight;
        d.lgam_fact += r.weight * std::lgamma(r.count + 1.0);
        ytab[r.count] += r.weight;
        swy_all += r.weight * r.count;
    }
    if (!(d.wtot > 0)) throw DomainError("surface fit: all weights are zero");
    if (!(swy_all > 0)) throw DomainError("surface fit: all contact counts are zero");
    d.ytab.assign(ytab.begin(), ytab.end());
    d.ybar = swy_all / d.wtot;
    return d;
}

inline double gam_loglik(const GamData& d, const std::vector<double>& mu, double k) {
    double ll = -d.lgam_fact - d.wtot * std::lgamma(k);
    for (const auto& [y, wy] : d.ytab) ll += wy * std::lgamma(y + k);
    for (std::size_t g = 0; g < d.groups.size(); ++g) {
        double m = std::max(mu[g], 1e-300);
        ll += k * std::log(k / (k + m)) * d.groups[g].sw +
              std::log(m / (k + m)) * d.groups[g].swy;
    }
    return ll;
}

inline double gam_deviance(const GamData& d, const std::vector<double>& mu, double k) {
    double dev = 0.0;
    for (const auto& r : d.recs) {
        double m = std::max(mu[r.group], 1e-300);
        double term = -(r.y + k) * std::log((r.y + k) / (m + k));
        if (r.y > 0) term += r.y * std::log(r.y / m);
        dev += 2.0 * r.w * term;
    }
    return dev;
}

/// Orthonormal basis of the sum-to-zero subspace for the tensor
/// coefficients; the dropped direction duplicates the explicit intercept.
inline Eigen::MatrixXd sum_zero_basis(std::size_t p) {
    const auto n = static_cast<Eigen::Index>(p);
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(p));
    v(0) -= 1.0;
    Eigen::MatrixXd h =
        Eigen::MatrixXd::Identity(n, n) - (2.0 / v.squaredNorm()) * (v * v.transpose());
    return h.rightCols(n - 1);
}

struct GamWork {
    const GamData* data;
    const BsplineBasis* basis;
    std::size_t kdim;   // marginal basis size
    std::size_t p;      // tensor dimension kdim^2
    Eigen::MatrixXd z;  // p x (p-1) constraint basis
    Eigen::MatrixXd pen_a, pen_b; // constrained marginal penalties

    explicit GamWork(const GamData& d, const BsplineBasis& b)
        : data(&d), basis(&b), kdim(b.size()), p(b.size() * b.size()) {
        z = sum_zero_basis(p);
        Eigen::MatrixXd s = b.penalty();
        const auto k = static_cast<Eigen::Index>(kdim);
        Eigen::MatrixXd kron_a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p),
                                                       static_cast<Eigen::Index>(p));
        Eigen::MatrixXd kron_b = kron_a;
        for (Eigen::Index l = 0; l < k; ++l)
            for (Eigen::Index l2 = 0; l2 < k; ++l2)
                for (Eigen::Index q = 0; q < k; ++q) {
                    kron_a(l * k + q, l2 * k + q) = s(l, l2); // penalty over respondent margin
                    kron_b(q * k + l, q * k + l2) = s(l, l2); // penalty over contact margin
                }
        pen_a = z.transpose() * kron_a * z;
        pen_b = z.transpose() * kron_b * z;
    }

    void group_columns(const GamGroup& g, std::array<std::size_t, 16>& cols,
                       std::array<double, 16>& vals) const {
        std::size_t n = 0;
        for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t c = 0; c < 4; ++c) {
                cols[n] = (g.ib + r) * kdim + (g.id + c);
                vals[n] = g.vb[r] * g.vd[c];
                ++n;
            }
    }
};

struct IrlsState {
    std::vector<double> eta, mu;
    Eigen::VectorXd delta;     // p-vector, sums to zero
    double beta0 = 0.0;
    double deviance = 0.0;
    std::size_t iterations = 0;
};

/// One penalized weighted least squares system at the current means.
/// Returns the constrained normal matrix (intercept block first) and rhs.
inline void gam_normal_equations(const GamWork& w, const IrlsState& st, double k, bool with_rhs,
                                 Eigen::MatrixXd& gmat, Eigen::VectorXd& rhs) {
    const auto p = static_cast<Eigen::Index>(w.p);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd xb = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(p);
    double s00 = 0.0, b0 = 0.0;

    std::array<std::size_t, 16> cols{};
    std::array<double, 16> vals{};
    const auto& groups = w.data->groups;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const auto& g = groups[gi];
        if (!(g.sw > 0)) continue;
        double m = st.mu[gi];
        double wg = g.sw * m / (1.0 + m / k);
        if (!(wg > 0)) continue;
        double zg = 0.0;
        if (with_rhs) {
            double ybar = g.swy / g.sw;
            zg = st.eta[gi] + (ybar - m) / m;
        }
        w.group_columns(g, cols, vals);
        s00 += wg;
        if (with_rhs) b0 += wg * zg;
        for (std::size_t r = 0; r < 16; ++r) {
            const auto cr = static_cast<Eigen::Index>(cols[r]);
            double wx = wg * vals[r];
            u(cr) += wx;
            if (with_rhs) xb(cr) += wx * zg;
            for (std::size_t c = r; c < 16; ++c) {
                const auto cc = static_cast<Eigen::Index>(cols[c]);
                a(cr, cc) += wx * vals[c];
            }
        }
    }
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < i; ++j) a(i, j) = a(j, i);

    const auto q = p - 1;
    gmat.resize(q + 1, q + 1);
    gmat(0, 0) = s00;
    Eigen::VectorXd zu = w.z.transpose() * u;
    gmat.block(1, 0, q, 1) = zu;
    gmat.block(0, 1, 1, q) = zu.transpose();
    gmat.block(1, 1, q, q) = w.z.transpose() * (a * w.z);
    if (with_rhs) {
        rhs.resize(q + 1);
        rhs(0) = b0;
        rhs.segment(1, q) = w.z.transpose() * xb;
    }
}

inline void gam_update_eta(const GamWork& w, IrlsState& st) {
    std::array<std::size_t, 16> cols{};
    std::array<double, 16> vals{};
    const auto& groups = w.data->groups;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        w.group_columns(groups[gi], cols, vals);
        double eta = st.beta0;
        for (std::size_t r = 0; r < 16; ++r)
            eta += vals[r] * st.delta(static_cast<Eigen::Index>(cols[r]));
        eta = std::clamp(eta, -30.0, 30.0);
        st.eta[gi] = eta;
        st.mu[gi] = std::exp(eta);
    }
}

inline void gam_irls(const GamWork& w, IrlsState& st, double k, const Eigen::MatrixXd& pen,
                     const SurfaceOptions& opt) {
    const auto q = static_cast<Eigen::Index>(w.p) - 1;
    Eigen::MatrixXd gmat;
    Eigen::VectorXd rhs;
    double dev_prev = 0.0;
    std::string trace;
    for (std::size_t it = 0; it < opt.max_irls; ++it) {
        gam_normal_equations(w, st, k, true, gmat, rhs);
        Eigen::MatrixXd m = gmat;
        m.block(1, 1, q, q) += pen;
        Eigen::VectorXd theta = m.ldlt().solve(rhs);
        st.beta0 = theta(0);
        st.delta = w.z * theta.segment(1, q);
        gam_update_eta(w, st);
        double dev = gam_deviance(*w.data, st.mu, k);
        st.iterations = it + 1;
        if (it < 12 || it + 2 >= opt.max_irls) {
            char buf[48];
            std::snprintf(buf, sizeof(buf), "it %zu dev %.8g; ", it + 1, dev);
            trace += buf;
        }
        if (!std::isfinite(dev))
            throw ConvergenceError("surface fit: deviance became non-finite", trace);
        if (it > 0 && std::fabs(dev - dev_prev) < opt.deviance_tol * (std::fabs(dev) + 0.1)) {
            st.deviance = dev;
            return;
        }
        dev_prev = dev;
    }
    throw ConvergenceError("surface fit: iterative reweighting did not converge", trace);
}

inline double gam_profile_k(const GamWork& w, const IrlsState& st, const SurfaceOptions& opt) {
    auto negll = [&](double logk) { return -gam_loglik(*w.data, st.mu, std::exp(logk)); };
    return std::exp(golden_section_min(negll, std::log(opt.k_lo), std::log(opt.k_hi), 1e-7, 400));
}

struct CellFit {
    IrlsState state;
    double k = 1.0;
    double edf = 0.0;
    double loglik = 0.0;
    double caic = 0.0;
};

inline CellFit gam_fit_cell(const GamWork& w, double lambda_a, double lambda_b,
                            const SurfaceOptions& opt, const IrlsState* warm) {
    Eigen::MatrixXd pen = lambda_a * w.pen_a + lambda_b * w.pen_b;
    const auto q = static_cast<Eigen::Index>(w.p) - 1;

    CellFit fit;
    if (warm && !warm->eta.empty()) {
        fit.state = *warm;
    } else {
        const std::size_t n = w.data->groups.size();
        fit.state.eta.assign(n, 0.0);
        fit.state.mu.assign(n, 0.0);
        fit.state.delta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(w.p));
        double eta0 = std::log(std::max(w.data->ybar, 1e-3));
        for (std::size_t g = 0; g < n; ++g) {
            fit.state.eta[g] = eta0;
            fit.state.mu[g] = std::exp(eta0);
        }
        fit.state.beta0 = eta0;
    }

    fit.k = opt.fixed_k > 0 ? opt.fixed_k : 1.0;
    double ll_prev = 0.0;
    std::size_t total_iters = 0;
    for (std::size_t round = 0; round < 25; ++round) {
        gam_irls(w, fit.state, fit.k, pen, opt);
        total_iters += fit.state.iterations;
        double k_next = opt.fixed_k > 0 ? opt.fixed_k : gam_profile_k(w, fit.state, opt);
        double ll = gam_loglik(*w.data, fit.state.mu, k_next);
        bool k_stable = std::fabs(std::log(k_next) - std::log(fit.k)) < 1e-7;
        fit.k = k_next;
        if (round > 0 && k_stable && std::fabs(ll - ll_prev) < 1e-9 * (std::fabs(ll) + 1.0)) {
            ll_prev = ll;
            break;
        }
        ll_prev = ll;
    }
    fit.state.iterations = total_iters;
    fit.loglik = ll_prev;

    Eigen::MatrixXd gmat;
    Eigen::VectorXd rhs;
    gam_normal_equations(w, fit.state, fit.k, false, gmat, rhs);
    Eigen::MatrixXd m = gmat;
    m.block(1, 1, q, q) += pen;
    fit.edf = (m.ldlt().solve(gmat)).trace();
    fit.caic = -2.0 * fit.loglik + 2.0 * fit.edf;
    return fit;
}

} // namespace detail

/// Weighted negative-binomial tensor-product spline fit to the count table.
/// Smoothing parameters come from a per-margin grid search minimizing the
/// conditional AIC unless fixed in the options; the dispersion is profiled
/// on a capped range.
inline SmoothSurface fit_negbin_tensor_gam(const CountTable& counts, const BsplineBasis& basis,
                                           const SurfaceOptions& opt = {}) {
    detail::GamData data = detail::build_gam_data(counts, basis);
    detail::GamWork work(data, basis);

    double la = opt.fixed_lambda_a, lb = opt.fixed_lambda_b;
    detail::CellFit best;
    bool have = false;
    if (la >= 0 && lb >= 0) {
        best = detail::gam_fit_cell(work, la, lb, opt, nullptr);
        have = true;
    } else {
        if (opt.lambda_grid.empty())
            throw ConfigError("surface fit: empty smoothing grid");
        detail::IrlsState warm;
        double best_la = 0, best_lb = 0;
        for (double ca : opt.lambda_grid) {
            if (opt.fixed_lambda_a >= 0) ca = opt.fixed_lambda_a;
            for (double cb : opt.lambda_grid) {
                if (opt.fixed_lambda_b >= 0) cb = opt.fixed_lambda_b;
                auto fit = detail::gam_fit_cell(work, ca, cb, opt,
                                               warm.eta.empty() ? nullptr : &warm);
                warm = fit.state;
                if (!have || fit.caic < best.caic) {
                    best = fit;
                    best_la = ca;
                    best_lb = cb;
                    have = true;
                }
                if (opt.fixed_lambda_b >= 0) break;
            }
            if (opt.fixed_lambda_a >= 0) break;
        }
        la = best_la;
        lb = best_lb;
    }

    SmoothSurface s{basis,
                    best.state.beta0,
                    Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(basis.size()),
                                          static_cast<Eigen::Index>(basis.size())),
                    best.k,
                    false,
                    la,
                    lb,
                    best.edf,
                    best.state.deviance,
                    best.loglik,
                    best.caic,
                    best.state.iterations};
    const auto k = static_cast<Eigen::Index>(basis.size());
    for (Eigen::Index l = 0; l < k; ++l)
        for (Eigen::Index p = 0; p < k; ++p) s.delta(l, p) = best.state.delta(l * k + p);
    double lk = std::log(best.k);
    s.k_capped = opt.fixed_k <= 0 && (lk > std::log(opt.k_hi) - 1e-4 ||
                                      lk < std::log(opt.k_lo) + 1e-4);
    return s;
}

/// Per-cell negative-binomial means on a coarse grid with reciprocity built
/// in: one total-contact parameter per unordered class pair.
struct SaturatedFit {
    SocialContactMatrix m;
    double k = 1.0;
    double loglik = 0.0;
    bool converged = false;
    std::size_t rounds = 0;
};

inline SaturatedFit saturated_contact_matrix(const ContactSurvey& survey, const AgeGrid& grid,
                                             const std::vector<double>& w) {
    const std::size_t J = grid.classes();
    check_population(w, J);

    // per-direction observations: counts of participants in class i toward
    // class j, diary-weighted
    struct Obs {
        double y, wt;
    };
    std::vector<std::vector<std::vector<Obs>>> obs(
        J, std::vector<std::vector<Obs>>(J));
    std::vector<std::size_t> present(J, 0);

    const auto& parts = survey.participants();
    constexpr std::size_t skipped = static_cast<std::size_t>(-1);
    std::map<std::string, std::size_t> slot_of;
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const auto& p = parts[i];
        if (p.age < grid.lower() || p.age > grid.upper()) {
            slot_of[p.id] = skipped;
            continue;
        }
        slot_of[p.id] = kept.size();
        kept.push_back(i);
    }
    std::vector<double> counts(kept.size() * J, 0.0);
    for (const auto& c : survey.contacts()) {
        std::size_t slot = slot_of.at(c.participant_id);
        if (slot == skipped) continue;
        double mid = c.age_mid();
        if (mid < grid.lower() || mid > grid.upper()) continue;
        counts[slot * J + (mid <= grid.lower() ? 0 : grid.class_of(mid))] += 1.0;
    }
    for (std::size_t s = 0; s < kept.size(); ++s) {
        const auto& p = parts[kept[s]];
        std::size_t ci = p.age <= grid.lower() ? 0 : grid.class_of(p.age);
        for (std::size_t j = 0; j < J; ++j) obs[ci][j].push_back({counts[s * J + j], p.weight});
        ++present[ci];
    }

    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t j = i; j < J; ++j)
            if (present[i] + present[j] == 0)
                throw DomainError("saturated model: no observations for classes " +
                                  grid.label(i) + " x " + grid.label(j));

    // parameters: log of the symmetric total T_ij = m_ij w_i = m_ji w_j
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t j = i; j < J; ++j) pairs.emplace_back(i, j);

    std::vector<double> logt(pairs.size());
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        auto [i, j] = pairs[p];
        double num = 0.0, den = 0.0;
        for (const auto& o : obs[i][j]) {
            num += o.wt * o.y * w[i];
            den += o.wt;
        }
        if (i != j)
            for (const auto& o : obs[j][i]) {
                num += o.wt * o.y * w[j];
                den += o.wt;
            }
        logt[p] = std::log(std::max(num / std::max(den, 1e-300), 1e-8));
    }

    auto pair_loglik = [&](std::size_t p, double lt, double k) {
        auto [i, j] = pairs[p];
        double t = std::exp(lt);
        double ll = 0.0;
        for (const auto& o : obs[i][j]) ll += o.wt * negbin_loglik_term(o.y, t / w[i], k);
        if (i != j)
            for (const auto& o : obs[j][i]) ll += o.wt * negbin_loglik_term(o.y, t / w[j], k);
        return ll;
    };
    auto total_loglik = [&](double k) {
        double ll = 0.0;
        for (std::size_t p = 0; p < pairs.size(); ++p) ll += pair_loglik(p, logt[p], k);
        return ll;
    };

    double k = 1.0;
    double ll = total_loglik(k);
    SaturatedFit out{SocialContactMatrix(grid, Eigen::MatrixXd::Zero(
                                                   static_cast<Eigen::Index>(J),
                                                   static_cast<Eigen::Index>(J))),
                     k, ll, false, 0};
    for (std::size_t round = 0; round < 100; ++round) {
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            auto neg = [&](double lt) { return -pair_loglik(p, lt, k); };
            logt[p] = brent_min(neg, logt[p] - 8.0, logt[p] + 8.0, 1e-10, 300);
        }
        auto negk = [&](double lk) { return -total_loglik(std::exp(lk)); };
        k = std::exp(golden_section_min(negk, std::log(1e-2), std::log(1e3), 1e-8, 400));
        double ll_next = total_loglik(k);
        out.rounds = round + 1;
        if (round > 0 && std::fabs(ll_next - ll) < 1e-9 * (std::fabs(ll_next) + 1.0)) {
            out.converged = true;
            ll = ll_next;
            break;
        }
        ll = ll_next;
    }

    Eigen::MatrixXd m(static_cast<Eigen::Index>(J), static_cast<Eigen::Index>(J));
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        auto [i, j] = pairs[p];
        double t = std::exp(logt[p]);
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t / w[i];
        m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = t / w[j];
    }
    out.m = SocialContactMatrix(grid, std::move(m));
    out.k = k;
    out.loglik = ll;
    return out;
}

} // namespace sero
