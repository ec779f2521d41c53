#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "serocontact/common.hpp"
#include "serocontact/demography.hpp"
#include "serocontact/foi.hpp"
#include "serocontact/rng.hpp"
#include "serocontact/serology.hpp"

namespace sero {

/// Bernoulli serostatus draws at fixed ages under an age-dependent prevalence.
inline SerologyDataset simulate_serology(const PiecewiseFoi& foi,
                                         const std::vector<double>& ages, Rng& rng,
                                         const std::string& id_prefix = "sim") {
    std::vector<SerologySample> samples;
    samples.reserve(ages.size());
    for (std::size_t i = 0; i < ages.size(); ++i) {
        SerologySample s;
        s.id = id_prefix + std::to_string(i);
        s.age = ages[i];
        s.status = rng.bernoulli(foi.prevalence(ages[i])) ? 1 : 0;
        s.age_known_exactly = s.age != std::floor(s.age);
        samples.push_back(std::move(s));
    }
    return SerologyDataset(std::move(samples));
}

/// Same with a flat prevalence.
inline SerologyDataset simulate_serology_constant(double prevalence,
                                                  const std::vector<double>& ages, Rng& rng,
                                                  const std::string& id_prefix = "sim") {
    if (!(prevalence >= 0.0 && prevalence <= 1.0))
        throw DomainError("simulate_serology: prevalence must lie in [0,1]");
    std::vector<SerologySample> samples;
    samples.reserve(ages.size());
    for (std::size_t i = 0; i < ages.size(); ++i) {
        SerologySample s;
        s.id = id_prefix + std::to_string(i);
        s.age = ages[i];
        s.status = rng.bernoulli(prevalence) ? 1 : 0;
        s.age_known_exactly = s.age != std::floor(s.age);
        samples.push_back(std::move(s));
    }
    return SerologyDataset(std::move(samples));
}

/// Split n sample slots over the one-year age bands intersecting [lo, hi),
/// proportionally to band population, fractional parts resolved by largest
/// remainder. Returns per-band counts keyed by band lower age.
inline std::vector<std::pair<int, std::size_t>> allocate_by_population(
    const Demography& demo, double lo, double hi, std::size_t n) {
    if (!(hi > lo)) throw DomainError("allocate_by_population: empty age range");
    const auto& pop = demo.population_by_age();
    std::vector<int> bands;
    double total = 0.0;
    for (std::size_t i = 0; i < pop.size(); ++i) {
        double mid = static_cast<double>(i) + 0.5;
        if (mid >= lo && mid < hi && pop[i] > 0) {
            bands.push_back(static_cast<int>(i));
            total += pop[i];
        }
    }
    if (bands.empty() || !(total > 0))
        throw DomainError("allocate_by_population: no population in the age range");

    std::vector<std::size_t> counts(bands.size(), 0);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t b = 0; b < bands.size(); ++b) {
        double share = static_cast<double>(n) * pop[static_cast<std::size_t>(bands[b])] / total;
        counts[b] = static_cast<std::size_t>(std::floor(share));
        assigned += counts[b];
        remainders.push_back({share - std::floor(share), b});
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++counts[remainders[i % remainders.size()].second];

    std::vector<std::pair<int, std::size_t>> out;
    for (std::size_t b = 0; b < bands.size(); ++b)
        if (counts[b] > 0) out.push_back({bands[b], counts[b]});
    return out;
}

/// Ages for n simulated subjects over [lo, hi), spread over bands by
/// population share with uniform placement within each band.
inline std::vector<double> draw_ages_by_population(const Demography& demo, double lo, double hi,
                                                   std::size_t n, Rng& rng) {
    std::vector<double> ages;
    ages.reserve(n);
    for (const auto& [band, count] : allocate_by_population(demo, lo, hi, n)) {
        double b_lo = std::max(lo, static_cast<double>(band));
        double b_hi = std::min(hi, static_cast<double>(band) + 1.0);
        for (std::size_t i = 0; i < count; ++i) ages.push_back(rng.uniform(b_lo, b_hi));
    }
    return ages;
}

} // namespace sero
