#pragma once

#include <string>
#include <vector>

#include "serocontact/common.hpp"

namespace sero {

/// Partition of an age range into J contiguous classes.
/// Breakpoints are strictly increasing; class j covers [break[j], break[j+1])
/// with the very first class open at its lower end (ages at or below the
/// first breakpoint belong to no class).
class AgeGrid {
public:
    explicit AgeGrid(std::vector<double> breakpoints) : breaks_(std::move(breakpoints)) {
        if (breaks_.size() < 2)
            throw DomainError("AgeGrid: need at least two breakpoints");
        for (std::size_t i = 1; i < breaks_.size(); ++i)
            if (!(breaks_[i] > breaks_[i - 1]))
                throw DomainError("AgeGrid: breakpoints must be strictly increasing");
    }

    /// One-year bands [lo, lo+1), ..., [hi-1, hi).
    static AgeGrid one_year(double lo, double hi) {
        std::vector<double> b;
        for (double a = lo; a < hi + 0.5; a += 1.0) b.push_back(a);
        return AgeGrid(std::move(b));
    }

    std::size_t classes() const { return breaks_.size() - 1; }
    double lower() const { return breaks_.front(); }
    double upper() const { return breaks_.back(); }
    const std::vector<double>& breakpoints() const { return breaks_; }
    double width(std::size_t j) const { return breaks_[j + 1] - breaks_[j]; }
    double midpoint(std::size_t j) const { return 0.5 * (breaks_[j] + breaks_[j + 1]); }

    std::vector<double> widths() const {
        std::vector<double> w(classes());
        for (std::size_t j = 0; j < w.size(); ++j) w[j] = width(j);
        return w;
    }

    bool contains(double age) const { return age > lower() && age <= upper(); }

    /// Index of the class holding `age`. The top breakpoint is inclusive.
    std::size_t class_of(double age) const {
        if (!contains(age))
            throw DomainError("age " + std::to_string(age) + " outside grid [" +
                              std::to_string(lower()) + ", " + std::to_string(upper()) + "]");
        if (age >= breaks_[classes() - 1]) return classes() - 1;
        std::size_t j = 0;
        while (age >= breaks_[j + 1]) ++j;
        return j;
    }

    std::string label(std::size_t j) const {
        auto fmt = [](double v) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%g", v);
            return std::string(buf);
        };
        return fmt(breaks_[j]) + "-" + fmt(breaks_[j + 1]);
    }

    bool operator==(const AgeGrid& other) const { return breaks_ == other.breaks_; }

private:
    std::vector<double> breaks_;
};

} // namespace sero
