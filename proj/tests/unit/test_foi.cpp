#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "serocontact/foi.hpp"
#include "serocontact/rng.hpp"
#include "serocontact/simulate.hpp"

using namespace sero;

static const AgeGrid kSixClasses({0.5, 2, 6, 12, 19, 31, 80});
static const std::vector<double> kFittedRates = {0.313, 0.304, 0.246, 0.0, 0.082, 0.0};

// independent direct evaluation of the prevalence formula, written against
// the closed form rather than the class implementation
static double prevalence_oracle(const std::vector<double>& breaks,
                                const std::vector<double>& lambdas, double a) {
    double hazard = 0.0;
    for (std::size_t j = 0; j + 1 < breaks.size(); ++j) {
        if (a >= breaks[j + 1])
            hazard += lambdas[j] * (breaks[j + 1] - breaks[j]);
        else if (a > breaks[j])
            hazard += lambdas[j] * (a - breaks[j]);
    }
    return 1.0 - std::exp(-hazard);
}

TEST_CASE("zero rates give zero prevalence everywhere") {
    PiecewiseFoi foi(kSixClasses, std::vector<double>(6, 0.0));
    for (double a : {0.6, 2.0, 10.0, 79.9, 80.0}) REQUIRE(foi.prevalence(a) == 0.0);
    REQUIRE(foi.prevalence(0.2) == 0.0);
}

TEST_CASE("single class log-two rate gives one half after one year") {
    PiecewiseFoi foi(AgeGrid({0.5, 1.5}), {std::log(2.0)});
    REQUIRE_THAT(foi.prevalence(1.5), Catch::Matchers::WithinAbs(0.5, 1e-15));
}

TEST_CASE("prevalence at age six matches the direct formula oracle") {
    PiecewiseFoi foi(kSixClasses, kFittedRates);
    double expected = 1.0 - std::exp(-(0.313 * 1.5 + 0.304 * 4.0));
    REQUIRE_THAT(foi.prevalence(6.0), Catch::Matchers::WithinAbs(expected, 1e-12));
    REQUIRE_THAT(foi.prevalence(6.0), Catch::Matchers::WithinAbs(0.8146, 5e-5));
    REQUIRE_THAT(foi.susceptible(6.0), Catch::Matchers::WithinAbs(0.1854, 5e-5));

    Rng rng(41u);
    for (int i = 0; i < 100; ++i) {
        double a = rng.uniform(0.51, 80.0);
        REQUIRE_THAT(foi.prevalence(a),
                     Catch::Matchers::WithinAbs(
                         prevalence_oracle(kSixClasses.breakpoints(), kFittedRates, a), 1e-12));
    }
}

TEST_CASE("susceptible and immune fractions are complementary") {
    PiecewiseFoi foi(kSixClasses, kFittedRates);
    Rng rng(43u);
    std::vector<double> ages;
    for (int i = 0; i < 100; ++i) ages.push_back(rng.uniform(0.51, 80.0));
    auto x = susceptible_profile(foi, ages);
    for (std::size_t i = 0; i < ages.size(); ++i)
        REQUIRE_THAT(x[i] + foi.prevalence(ages[i]), Catch::Matchers::WithinAbs(1.0, 1e-14));
}

TEST_CASE("prevalence is non-decreasing for random nonnegative rates") {
    Rng rng(47u);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> lam(6);
        for (double& l : lam) l = rng.bernoulli(0.3) ? 0.0 : rng.uniform(0.0, 0.6);
        PiecewiseFoi foi(kSixClasses, lam);
        double prev = 0.0;
        for (double a = 0.51; a <= 80.0; a += 0.25) {
            double p = foi.prevalence(a);
            REQUIRE(p >= prev - 1e-15);
            REQUIRE(p >= 0.0);
            REQUIRE(p < 1.0);
            prev = p;
        }
    }
}

TEST_CASE("prevalence beyond the grid is a domain error") {
    PiecewiseFoi foi(kSixClasses, kFittedRates);
    REQUIRE_THROWS_AS(foi.prevalence(80.5), DomainError);
}

TEST_CASE("bernoulli loglik on constant one-half prevalence") {
    // rate log 2 in (0.5, 1.5), zero after: prevalence is exactly 0.5 for ages >= 1.5
    PiecewiseFoi foi(AgeGrid({0.5, 1.5, 80}), {std::log(2.0), 0.0});
    std::vector<SerologySample> samples;
    for (int i = 0; i < 10; ++i)
        samples.push_back({"s" + std::to_string(i), 2.0 + i, i % 2, true});
    SerologyDataset data(std::move(samples));
    REQUIRE_THAT(bernoulli_loglik(foi, data),
                 Catch::Matchers::WithinAbs(10.0 * std::log(0.5), 1e-12));
}

TEST_CASE("degenerate likelihood is clamped and counted") {
    PiecewiseFoi foi(kSixClasses, std::vector<double>(6, 0.0));
    SerologyDataset data({{"a", 10.0, 1, true}, {"b", 12.0, 0, true}});
    std::size_t clamps = 0;
    double ll = bernoulli_loglik(foi, data, &clamps);
    REQUIRE(std::isfinite(ll));
    // both samples have probability 0, below the floor; only the immune one
    // contributes a large penalty
    REQUIRE(clamps == 2);
    REQUIRE_THAT(ll, Catch::Matchers::WithinAbs(std::log(1e-12), 1e-6));
}

TEST_CASE("loglik gradient matches finite differences") {
    Rng rng(53u);
    std::vector<double> ages;
    for (int i = 0; i < 200; ++i) ages.push_back(rng.uniform(0.51, 79.9));
    PiecewiseFoi truth(kSixClasses, {0.3, 0.25, 0.2, 0.05, 0.08, 0.02});
    SerologyDataset data = simulate_serology(truth, ages, rng);

    for (int rep = 0; rep < 20; ++rep) {
        // rates kept moderate: once probabilities saturate against the
        // floating-point spacing at 1, finite differences stop being a
        // usable reference
        std::vector<double> lam(6);
        for (double& l : lam) l = rng.uniform(0.01, 0.2);
        PiecewiseFoi foi(kSixClasses, lam);
        auto analytic = bernoulli_loglik_gradient(foi, data);
        auto central = [&](std::size_t j, double h) {
            std::vector<double> lp = lam, lm = lam;
            lp[j] += h;
            lm[j] -= h;
            return (bernoulli_loglik(PiecewiseFoi(kSixClasses, lp), data) -
                    bernoulli_loglik(PiecewiseFoi(kSixClasses, lm), data)) /
                   (2 * h);
        };
        for (std::size_t j = 0; j < 6; ++j) {
            // Richardson extrapolation keeps truncation error down where the
            // likelihood is nearly singular
            const double h = 2e-6;
            double fd = (4.0 * central(j, h / 2) - central(j, h)) / 3.0;
            REQUIRE_THAT(analytic[j],
                         Catch::Matchers::WithinRel(fd, 1e-6) ||
                             Catch::Matchers::WithinAbs(fd, 1e-6));
        }
    }
}

TEST_CASE("fit recovers a two-class force of infection") {
    AgeGrid grid({0.5, 12, 80});
    PiecewiseFoi truth(grid, {0.3, 0.1});
    Rng rng(20240815u);
    std::vector<double> ages;
    for (int i = 0; i < 5000; ++i)
        ages.push_back(i % 2 == 0 ? rng.uniform(0.5, 12.0) : rng.uniform(12.0, 80.0));
    SerologyDataset data = simulate_serology(truth, ages, rng);

    FoiFit fit = fit_piecewise_foi(data, grid);
    REQUIRE(fit.converged);
    REQUIRE_THAT(fit.foi.lambdas()[0], Catch::Matchers::WithinAbs(0.3, 0.05));
    REQUIRE_THAT(fit.foi.lambdas()[1], Catch::Matchers::WithinAbs(0.1, 0.05));
    REQUIRE(fit.loglik >= bernoulli_loglik(truth, data) - 1e-6);
}

TEST_CASE("all-susceptible data drives every rate to zero") {
    AgeGrid grid({0.5, 12, 80});
    std::vector<SerologySample> samples;
    for (int i = 0; i < 200; ++i)
        samples.push_back({"s" + std::to_string(i), 0.6 + i * 0.39, 0, true});
    FoiFit fit = fit_piecewise_foi(SerologyDataset(std::move(samples)), grid);
    REQUIRE(fit.foi.lambdas() == std::vector<double>{0.0, 0.0});
}

TEST_CASE("empty interior age class is an error, trailing classes are tied") {
    AgeGrid grid({0.5, 12, 40, 80});
    std::vector<SerologySample> young;
    for (int i = 0; i < 50; ++i) {
        young.push_back({"a" + std::to_string(i), 0.6 + i * 0.2, i % 3 == 0, true});
        young.push_back({"b" + std::to_string(i), 12.5 + i * 0.4, i % 2 == 0, true});
    }
    FoiFit fit = fit_piecewise_foi(SerologyDataset(young), grid);
    REQUIRE(fit.tied_to_last_observed == std::vector<bool>{false, false, true});
    REQUIRE(!fit.has_data[2]);
    REQUIRE(fit.foi.lambdas()[2] == fit.foi.lambdas()[1]);

    std::vector<SerologySample> gappy;
    for (int i = 0; i < 50; ++i) {
        gappy.push_back({"a" + std::to_string(i), 0.6 + i * 0.2, i % 3 == 0, true});
        gappy.push_back({"c" + std::to_string(i), 41.0 + i * 0.5, 1, true});
    }
    REQUIRE_THROWS_AS(fit_piecewise_foi(SerologyDataset(gappy), grid), DomainError);
}

TEST_CASE("monotone prevalence holds for fitted models") {
    Rng rng(61u);
    AgeGrid grid({0.5, 6, 19, 80});
    PiecewiseFoi truth(grid, {0.25, 0.1, 0.03});
    std::vector<double> ages;
    for (int i = 0; i < 1500; ++i) ages.push_back(rng.uniform(0.51, 79.9));
    FoiFit fit = fit_piecewise_foi(simulate_serology(truth, ages, rng), grid);
    double prev = 0.0;
    for (double a = 0.51; a <= 80.0; a += 0.1) {
        double p = fit.foi.prevalence(a);
        REQUIRE(p >= prev - 1e-15);
        prev = p;
    }
}
