#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "serocontact/age_grid.hpp"
#include "serocontact/common.hpp"

namespace sero {

/// Mean daily contact counts: entry (i,j) is the average number of contacts
/// a respondent in age class i reports with persons in age class j per day.
struct SocialContactMatrix {
    AgeGrid grid;
    Eigen::MatrixXd m;

    SocialContactMatrix(AgeGrid g, Eigen::MatrixXd mat) : grid(std::move(g)), m(std::move(mat)) {
        const auto J = static_cast<Eigen::Index>(grid.classes());
        if (m.rows() != J || m.cols() != J)
            throw DomainError("contact matrix: shape does not match grid");
        for (Eigen::Index i = 0; i < J; ++i)
            for (Eigen::Index j = 0; j < J; ++j)
                if (!(m(i, j) >= 0.0) || !std::isfinite(m(i, j)))
                    throw DomainError("contact matrix: entries must be finite and nonnegative");
    }
};

/// Per-capita yearly contact rates c_ij = 365 * m_ji / w_i.
struct ContactRates {
    AgeGrid grid;
    Eigen::MatrixXd c;
};

inline void check_population(const std::vector<double>& w, std::size_t classes) {
    if (w.size() != classes)
        throw DomainError("population vector length does not match grid");
    for (double v : w)
        if (!(v > 0.0)) throw DomainError("population classes must all be positive");
}

/// Project onto the reciprocity constraint m'_ij w_i = m'_ji w_j by averaging
/// the two directed total-contact estimates; total contacts are conserved.
inline SocialContactMatrix symmetrize_reciprocal(const SocialContactMatrix& m,
                                                 const std::vector<double>& w) {
    const std::size_t J = m.grid.classes();
    check_population(w, J);
    Eigen::MatrixXd out(J, J);
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t j = 0; j < J; ++j)
            out(i, j) = (m.m(i, j) * w[i] + m.m(j, i) * w[j]) / (2.0 * w[i]);
    return SocialContactMatrix(m.grid, std::move(out));
}

inline double reciprocity_residual(const SocialContactMatrix& m, const std::vector<double>& w) {
    const std::size_t J = m.grid.classes();
    check_population(w, J);
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t j = 0; j < J; ++j) {
            worst = std::max(worst, std::fabs(m.m(i, j) * w[i] - m.m(j, i) * w[j]));
            scale = std::max(scale, m.m(i, j) * w[i]);
        }
    return scale > 0 ? worst / scale : 0.0;
}

inline double total_contacts(const SocialContactMatrix& m, const std::vector<double>& w) {
    const std::size_t J = m.grid.classes();
    check_population(w, J);
    double total = 0.0;
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t j = 0; j < J; ++j) total += m.m(i, j) * w[i];
    return total;
}

inline ContactRates contact_rates_from_matrix(const SocialContactMatrix& m,
                                              const std::vector<double>& w) {
    const std::size_t J = m.grid.classes();
    check_population(w, J);
    Eigen::MatrixXd c(J, J);
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t j = 0; j < J; ++j) c(i, j) = 365.0 * m.m(j, i) / w[i];
    return ContactRates{m.grid, std::move(c)};
}

/// Coarsen a matrix on fine bands to the target classes: contact bands are
/// summed, respondent bands averaged with population weights. Fine bands
/// whose midpoints fall outside the target grid are dropped.
inline SocialContactMatrix aggregate_matrix(const SocialContactMatrix& fine,
                                            const std::vector<double>& w_fine,
                                            const AgeGrid& coarse) {
    const std::size_t n = fine.grid.classes();
    check_population(w_fine, n);
    const std::size_t J = coarse.classes();

    std::vector<int> member(n, -1);
    std::vector<double> w_class(J, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double mid = fine.grid.midpoint(i);
        if (!coarse.contains(mid)) continue;
        member[i] = static_cast<int>(coarse.class_of(mid));
        w_class[static_cast<std::size_t>(member[i])] += w_fine[i];
    }
    for (std::size_t c = 0; c < J; ++c)
        if (!(w_class[c] > 0))
            throw DomainError("aggregate_matrix: no fine bands map into class " + coarse.label(c));

    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(J, J);
    for (std::size_t i = 0; i < n; ++i) {
        if (member[i] < 0) continue;
        for (std::size_t j = 0; j < n; ++j) {
            if (member[j] < 0) continue;
            out(member[i], member[j]) += w_fine[i] * fine.m(i, j);
        }
    }
    for (std::size_t ci = 0; ci < J; ++ci)
        for (std::size_t cj = 0; cj < J; ++cj) out(ci, cj) /= w_class[ci];
    return SocialContactMatrix(coarse, std::move(out));
}

/// Population per coarse class implied by the same midpoint-membership rule.
inline std::vector<double> aggregate_population(const AgeGrid& fine,
                                                const std::vector<double>& w_fine,
                                                const AgeGrid& coarse) {
    check_population(w_fine, fine.classes());
    std::vector<double> w_class(coarse.classes(), 0.0);
    for (std::size_t i = 0; i < fine.classes(); ++i) {
        double mid = fine.midpoint(i);
        if (!coarse.contains(mid)) continue;
        w_class[coarse.class_of(mid)] += w_fine[i];
    }
    return w_class;
}

} // namespace sero
