#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "serocontact/age_grid.hpp"
#include "serocontact/common.hpp"
#include "serocontact/csv.hpp"

namespace sero {

/// One census record: persons of integer age `age` living in households of
/// size `household_size`.
struct CensusRow {
    int age = 0;
    int household_size = 0;
    double count = 0.0;
};

class CensusTable {
public:
    CensusTable() = default;
    explicit CensusTable(std::vector<CensusRow> rows) : rows_(std::move(rows)) {
        for (const auto& r : rows_) {
            if (r.age < 0) throw DomainError("census: negative age");
            if (r.household_size < 1) throw DomainError("census: household size must be >= 1");
            if (r.count < 0) throw DomainError("census: negative count");
        }
    }

    static CensusTable load(const std::string& path) {
        csv::Table t = csv::read_table(path, {"age", "household_size", "count"});
        std::vector<CensusRow> rows;
        rows.reserve(t.rows.size());
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            CensusRow r;
            r.age = static_cast<int>(csv::parse_long(t, i, 0));
            r.household_size = static_cast<int>(csv::parse_long(t, i, 1));
            r.count = csv::parse_double(t, i, 2);
            rows.push_back(r);
        }
        return CensusTable(std::move(rows));
    }

    void write(const std::string& path) const {
        csv::Writer w(path, {"age", "household_size", "count"});
        for (const auto& r : rows_)
            w.row({std::to_string(r.age), std::to_string(r.household_size),
                   csv::format_double(r.count)});
    }

    const std::vector<CensusRow>& rows() const { return rows_; }
    bool empty() const { return rows_.empty(); }

    double total() const {
        double s = 0.0;
        for (const auto& r : rows_) s += r.count;
        return s;
    }

    int max_age() const {
        int m = 0;
        for (const auto& r : rows_) m = std::max(m, r.age);
        return m;
    }

    int max_household_size() const {
        int m = 1;
        for (const auto& r : rows_) m = std::max(m, r.household_size);
        return m;
    }

    /// Counts per one-year age band, band i covering [i, i+1).
    std::vector<double> population_by_age() const {
        std::vector<double> pop(static_cast<std::size_t>(max_age()) + 1, 0.0);
        for (const auto& r : rows_) pop[static_cast<std::size_t>(r.age)] += r.count;
        return pop;
    }

    /// Dense counts matrix, row = one-year age band, column = household size - 1.
    std::vector<std::vector<double>> household_size_by_age() const {
        std::size_t na = static_cast<std::size_t>(max_age()) + 1;
        std::size_t nh = static_cast<std::size_t>(max_household_size());
        std::vector<std::vector<double>> m(na, std::vector<double>(nh, 0.0));
        for (const auto& r : rows_)
            m[static_cast<std::size_t>(r.age)][static_cast<std::size_t>(r.household_size - 1)] += r.count;
        return m;
    }

private:
    std::vector<CensusRow> rows_;
};

/// Population constants and age structure for a closed population in which
/// everyone survives to exactly the life expectancy L.
class Demography {
public:
    Demography(double population_total, double life_expectancy, double infectious_duration,
               double maternal_antibody_age, std::vector<double> population_by_age,
               std::vector<std::vector<double>> household_size_by_age = {})
        : N_(population_total),
          L_(life_expectancy),
          D_(infectious_duration),
          A_(maternal_antibody_age),
          pop_(std::move(population_by_age)),
          household_(std::move(household_size_by_age)) {
        if (!(N_ > 0)) throw DomainError("demography: population total must be positive");
        if (!(L_ > 0)) throw DomainError("demography: life expectancy must be positive");
        if (!(D_ > 0 && D_ < 1)) throw DomainError("demography: infectious duration must be in (0,1) years");
        if (!(A_ >= 0 && A_ < L_)) throw DomainError("demography: maternal antibody age must be in [0,L)");
        if (pop_.empty()) throw DomainError("demography: population_by_age is empty");
        for (double p : pop_)
            if (p < 0) throw DomainError("demography: negative population band");
        double below_l = 0.0;
        for (std::size_t i = 0; i < pop_.size(); ++i)
            if (i + 0.5 < L_) below_l += pop_[i];
        double tol = 0.5 * static_cast<double>(pop_.size()) + 1e-6 * N_;
        if (std::abs(below_l - N_) > tol)
            throw DomainError("demography: population_by_age over [0,L) does not sum to the population total");
    }

    /// Flat age profile: N/L persons per one-year band over [0, L).
    static Demography uniform(double population_total, double life_expectancy,
                              double infectious_duration, double maternal_antibody_age) {
        std::size_t bands = static_cast<std::size_t>(std::ceil(life_expectancy));
        std::vector<double> pop(bands, population_total / life_expectancy);
        if (bands * 1.0 != life_expectancy)
            pop.back() = population_total / life_expectancy * (life_expectancy - (double)(bands - 1));
        return Demography(population_total, life_expectancy, infectious_duration,
                          maternal_antibody_age, std::move(pop));
    }

    static Demography from_census(const CensusTable& census, double life_expectancy,
                                  double infectious_duration, double maternal_antibody_age) {
        if (census.empty()) throw DomainError("demography: census table is empty");
        std::vector<double> pop = census.population_by_age();
        double n = 0.0;
        for (std::size_t i = 0; i < pop.size(); ++i)
            if (i + 0.5 < life_expectancy) n += pop[i];
        if (!(n > 0)) throw DomainError("demography: census has no population below life expectancy");
        return Demography(n, life_expectancy, infectious_duration, maternal_antibody_age,
                          std::move(pop), census.household_size_by_age());
    }

    double population_total() const { return N_; }
    double life_expectancy() const { return L_; }
    double infectious_duration() const { return D_; }
    double maternal_antibody_age() const { return A_; }
    const std::vector<double>& population_by_age() const { return pop_; }
    const std::vector<std::vector<double>>& household_size_by_age() const { return household_; }
    bool has_household_structure() const { return !household_.empty(); }

    /// N * D / L, the factor converting per-capita rates to new infections.
    double nd_over_l() const { return N_ * D_ / L_; }

    /// Population in one-year bands whose midpoint falls inside class j of the
    /// grid; bands past the top breakpoint contribute nowhere.
    std::vector<double> band_population(const AgeGrid& grid) const {
        std::vector<double> out(grid.classes(), 0.0);
        for (std::size_t i = 0; i < pop_.size(); ++i) {
            double mid = static_cast<double>(i) + 0.5;
            if (!grid.contains(mid)) continue;
            out[grid.class_of(mid)] += pop_[i];
        }
        return out;
    }

private:
    double N_, L_, D_, A_;
    std::vector<double> pop_;
    std::vector<std::vector<double>> household_;
};

} // namespace sero
