#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstddef>

#include "serocontact/common.hpp"

namespace sero {

/// Cubic B-spline basis of dimension K on an equally spaced knot grid
/// spanning [lo, hi]. The basis forms a partition of unity on the whole
/// interval and every point is covered by exactly four members.
class BsplineBasis {
public:
    BsplineBasis(std::size_t k, double lo, double hi) : k_(k), lo_(lo), hi_(hi) {
        if (k < 4) throw DomainError("bspline basis: need at least 4 basis functions");
        if (!(hi > lo)) throw DomainError("bspline basis: empty age range");
        h_ = (hi - lo) / static_cast<double>(k - 3);
    }

    std::size_t size() const { return k_; }
    double lower() const { return lo_; }
    double upper() const { return hi_; }
    double spacing() const { return h_; }

    bool covers(double x) const { return x >= lo_ && x <= hi_; }

    double knot(std::size_t i) const { return lo_ + (static_cast<double>(i) - 3.0) * h_; }

    /// Index of the first of the four basis functions active at x, and their
    /// values in order.
    std::size_t evaluate(double x, std::array<double, 4>& values) const {
        if (!covers(x))
            throw DomainError("bspline basis: point " + std::to_string(x) +
                              " outside the fitted age range");
        auto span = static_cast<std::size_t>((x - lo_) / h_);
        if (span > k_ - 4) span = k_ - 4;
        const std::size_t s = span + 3;

        std::array<double, 4> left{}, right{};
        values[0] = 1.0;
        for (std::size_t j = 1; j <= 3; ++j) {
            left[j] = x - knot(s + 1 - j);
            right[j] = knot(s + j) - x;
            double saved = 0.0;
            for (std::size_t r = 0; r < j; ++r) {
                double temp = values[r] / (right[r + 1] + left[j - r]);
                values[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            values[j] = saved;
        }
        return s - 3;
    }

    /// Greville abscissa of basis function l: the age at which a coefficient
    /// vector linear in the abscissae reproduces the identity function.
    double greville(std::size_t l) const {
        return (knot(l + 1) + knot(l + 2) + knot(l + 3)) / 3.0;
    }

    /// Second-order difference penalty S = D2' D2 on the coefficient vector;
    /// constant and linear coefficient sequences are unpenalized.
    Eigen::MatrixXd penalty() const {
        const auto k = static_cast<Eigen::Index>(k_);
        Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(k - 2, k);
        for (Eigen::Index r = 0; r < k - 2; ++r) {
            d2(r, r) = 1.0;
            d2(r, r + 1) = -2.0;
            d2(r, r + 2) = 1.0;
        }
        return d2.transpose() * d2;
    }

private:
    std::size_t k_;
    double lo_, hi_, h_;
};

} // namespace sero
