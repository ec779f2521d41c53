#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "serocontact/foi.hpp"
#include "serocontact/rng.hpp"
#include "serocontact/simulate.hpp"
#include "serocontact/transmission.hpp"

using namespace sero;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const AgeGrid& six_classes() {
    static AgeGrid grid({0.5, 2.0, 6.0, 12.0, 19.0, 31.0, 80.0});
    return grid;
}

Demography reference_demo() { return Demography::uniform(9943749.0, 80.0, 7.0 / 365.0, 0.5); }

ContactRates example_rates() {
    Eigen::MatrixXd c(6, 6);
    c << 12.0, 4.0, 2.0, 1.5, 3.0, 1.0,
         4.0, 14.0, 5.0, 2.0, 3.5, 1.2,
         2.0, 5.0, 16.0, 4.0, 3.0, 1.5,
         1.5, 2.0, 4.0, 10.0, 4.0, 2.0,
         3.0, 3.5, 3.0, 4.0, 8.0, 3.0,
         1.0, 1.2, 1.5, 2.0, 3.0, 5.0;
    return ContactRates{six_classes(), c};
}

double dense_radius(const Eigen::MatrixXd& m) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
    double r = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) r = std::max(r, std::abs(es.eigenvalues()(i)));
    return r;
}

} // namespace

TEST_CASE("next generation matrix scales rates by class width and population") {
    auto demo = reference_demo();
    Eigen::MatrixXd beta = Eigen::MatrixXd::Constant(6, 6, 1.334e-4);
    auto ngm = next_generation_matrix(WaifwMatrix(six_classes(), beta), demo);

    CHECK_THAT(ngm.k(0, 0), WithinRel(0.4769934665856164, 1e-12));
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
            CHECK_THAT(ngm.k(i, j),
                       WithinRel(2383.7754452054796 * six_classes().width(i) * 1.334e-4, 1e-12));

    auto mismatched = Demography::uniform(1e6, 70.0, 7.0 / 365.0, 0.5);
    CHECK_THROWS_AS(next_generation_matrix(WaifwMatrix(six_classes(), beta), mismatched),
                    DomainError);
}

TEST_CASE("dominant eigenvalue handles closed-form cases") {
    Eigen::MatrixXd one(1, 1);
    one << 5.0;
    CHECK_THAT(dominant_eigenvalue(one), WithinRel(5.0, 1e-12));

    CHECK(dominant_eigenvalue(Eigen::MatrixXd::Zero(4, 4)) == 0.0);

    Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(3, 3);
    diag(0, 0) = 1.0;
    diag(1, 1) = 3.0;
    diag(2, 2) = 2.0;
    CHECK_THAT(dominant_eigenvalue(diag), WithinRel(3.0, 1e-10));

    Eigen::MatrixXd sym(2, 2);
    sym << 2.0, 1.0, 1.0, 2.0;
    CHECK_THAT(dominant_eigenvalue(sym), WithinRel(3.0, 1e-12));

    Eigen::MatrixXd nilpotent(2, 2);
    nilpotent << 0.0, 1.0, 0.0, 0.0;
    CHECK(dominant_eigenvalue(nilpotent) == 0.0);

    Eigen::MatrixXd swap(2, 2);
    swap << 0.0, 2.0, 2.0, 0.0;
    CHECK_THAT(dominant_eigenvalue(swap), WithinRel(2.0, 1e-12));

    Eigen::VectorXd u(3), v(3);
    u << 1.0, 2.0, 0.5;
    v << 0.3, 0.7, 1.1;
    CHECK_THAT(dominant_eigenvalue(u * v.transpose()), WithinRel(v.dot(u), 1e-10));

    Eigen::MatrixXd close = Eigen::MatrixXd::Identity(2, 2);
    close(1, 1) = 1.0 - 1e-13;
    CHECK_THAT(dominant_eigenvalue(close), WithinRel(1.0, 1e-10));

    Eigen::MatrixXd rect(2, 3);
    CHECK_THROWS_AS(dominant_eigenvalue(rect), DomainError);
    Eigen::MatrixXd neg(2, 2);
    neg << 1.0, -1.0, 0.0, 1.0;
    CHECK_THROWS_AS(dominant_eigenvalue(neg), DomainError);
}

TEST_CASE("dominant eigenvalue agrees with a dense solve on random matrices") {
    Rng rng(91001u);
    for (int rep = 0; rep < 200; ++rep) {
        int n = 2 + static_cast<int>(rng.uniform_index(7));
        Eigen::MatrixXd m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                m(i, j) = rng.uniform01() < 0.2 ? 0.0 : rng.uniform(0.0, 5.0);
        double ref = dense_radius(m);
        double got = dominant_eigenvalue(m);
        CHECK_THAT(got, WithinRel(ref, 1e-10) || WithinAbs(ref, 1e-10));
    }
}

TEST_CASE("reproduction number of separable rates has a closed form") {
    auto demo = reference_demo();
    const auto& grid = six_classes();
    std::vector<double> b{1.334e-4, 1.298e-4, 1.049e-4, 0.0, 0.349e-4, 0.0};
    Eigen::MatrixXd beta(6, 6);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) beta(i, j) = b[static_cast<std::size_t>(i)];

    double expect = 0.0;
    for (int i = 0; i < 6; ++i)
        expect += demo.nd_over_l() * grid.width(i) * b[static_cast<std::size_t>(i)];
    double r0 = basic_reproduction_number(WaifwMatrix(grid, beta), demo);
    CHECK_THAT(r0, WithinRel(expect, 1e-10));
    CHECK_THAT(r0, WithinAbs(4.21, 0.02));
}

TEST_CASE("reproduction number grows with any transmission rate") {
    auto demo = reference_demo();
    Rng rng(91002u);
    Eigen::MatrixXd beta(6, 6);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) beta(i, j) = rng.uniform(0.1e-4, 2e-4);
    double base = basic_reproduction_number(WaifwMatrix(six_classes(), beta), demo);
    for (int k = 0; k < 5; ++k) {
        Eigen::MatrixXd up = beta;
        int i = static_cast<int>(rng.uniform_index(6));
        int j = static_cast<int>(rng.uniform_index(6));
        up(i, j) *= 1.5;
        CHECK(basic_reproduction_number(WaifwMatrix(six_classes(), up), demo) >= base);
    }
}

TEST_CASE("discrete proportionality structures fill the two age blocks") {
    const auto& grid = six_classes();
    const double g1 = 0.7, g2 = 0.2;

    auto q1 = ProportionalityModel::discrete("M1", g1, g2).factor_matrix(grid);
    CHECK(q1(0, 0) == g1);
    CHECK(q1(2, 2) == g1);
    CHECK(q1(0, 3) == g2);
    CHECK(q1(3, 0) == g2);
    CHECK(q1(4, 5) == g2);

    auto q2 = ProportionalityModel::discrete("M2", g1, g2).factor_matrix(grid);
    CHECK(q2(0, 0) == g1);
    CHECK(q2(0, 5) == g1);
    CHECK(q2(3, 0) == g2);
    CHECK(q2(5, 5) == g2);

    auto q3 = ProportionalityModel::discrete("M3", g1, g2).factor_matrix(grid);
    CHECK(q3(0, 0) == g1);
    CHECK(q3(5, 5) == g1);
    CHECK(q3(0, 5) == g2);
    CHECK(q3(5, 0) == g2);

    auto q4 = ProportionalityModel::discrete("M4", g1, g2).factor_matrix(grid);
    CHECK(q4(0, 0) == g1);
    CHECK(q4(0, 5) == 0.0);
    CHECK(q4(5, 0) == 0.0);
    CHECK(q4(5, 5) == g2);

    auto q5 = ProportionalityModel::discrete("M5", g1, g2).factor_matrix(grid);
    CHECK(q5(0, 0) == g1);
    CHECK(q5(5, 0) == g1);
    CHECK(q5(0, 5) == g2);
    CHECK(q5(5, 5) == g2);

    CHECK_THROWS_AS(ProportionalityModel::discrete("M7", g1, g2), ConfigError);
}

TEST_CASE("loglinear proportionality uses class midpoints") {
    const auto& grid = six_classes();
    const double g0 = -8.0, ga = 0.03, gb = -0.01;

    auto q6 = ProportionalityModel::loglinear("M6", {g0, ga}).factor_matrix(grid);
    CHECK_THAT(q6(1, 4), WithinRel(std::exp(g0 + ga * 4.0), 1e-13));
    CHECK(q6(1, 0) == q6(1, 5));

    auto q8 = ProportionalityModel::loglinear("M8", {g0, ga}).factor_matrix(grid);
    CHECK_THAT(q8(1, 4), WithinRel(std::exp(g0 + ga * 25.0), 1e-13));
    CHECK(q8(0, 4) == q8(5, 4));

    auto q7 = ProportionalityModel::loglinear("M7", {g0, ga, gb}).factor_matrix(grid);
    CHECK_THAT(q7(2, 0), WithinRel(std::exp(g0 + ga * 9.0 + gb * 81.0), 1e-13));

    auto q9 = ProportionalityModel::loglinear("M9", {g0, ga, gb}).factor_matrix(grid);
    CHECK_THAT(q9(0, 2), WithinRel(std::exp(g0 + ga * 9.0 + gb * 81.0), 1e-13));

    auto q10 = ProportionalityModel::loglinear("M10", {g0, ga, gb}).factor_matrix(grid);
    CHECK_THAT(q10(2, 4), WithinRel(std::exp(g0 + ga * 9.0 + gb * 25.0), 1e-13));

    CHECK_THROWS_AS(ProportionalityModel::loglinear("M6", {g0, ga, gb}), ConfigError);
    CHECK_THROWS_AS(ProportionalityModel::loglinear("M3", {g0, ga}), ConfigError);
}

TEST_CASE("constant proportionality equals a tied two-block structure") {
    const auto& grid = six_classes();
    auto qc = ProportionalityModel::constant(0.3).factor_matrix(grid);
    auto qm3 = ProportionalityModel::discrete("M3", 0.3, 0.3).factor_matrix(grid);
    CHECK((qc - qm3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("proportionality applies elementwise to contact rates") {
    auto c = example_rates();
    auto model = ProportionalityModel::discrete("M1", 0.5, 0.1);
    auto beta = apply_proportionality(model, c, six_classes());
    auto q = model.factor_matrix(six_classes());
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
            CHECK_THAT(beta.beta(i, j), WithinRel(q(i, j) * c.c(i, j), 1e-13));

    AgeGrid other({0.5, 10.0, 80.0});
    CHECK_THROWS_AS(apply_proportionality(model, c, other), DomainError);
}

TEST_CASE("profile interval reproduces the normal-theory answer") {
    auto negll = [](const std::vector<double>& x) {
        double z = (x[0] - 0.5) / 0.1;
        return 0.5 * z * z;
    };
    auto ci = profile_likelihood_ci(negll, {0.5}, 0, 0.95);
    CHECK_FALSE(ci.lower_open);
    CHECK_FALSE(ci.upper_open);
    CHECK_THAT(ci.lower, WithinAbs(0.5 - 1.959963984540054 * 0.1, 1e-6));
    CHECK_THAT(ci.upper, WithinAbs(0.5 + 1.959963984540054 * 0.1, 1e-6));
}

TEST_CASE("profile interval re-maximizes correlated nuisance parameters") {
    // bivariate normal with unit variances and correlation 0.8: the profile
    // curvature recovers the marginal variance, not the conditional one
    Eigen::Matrix2d cov;
    cov << 1.0, 0.8, 0.8, 1.0;
    Eigen::Matrix2d prec = cov.inverse();
    auto negll = [prec](const std::vector<double>& x) {
        Eigen::Vector2d v(x[0], x[1]);
        return 0.5 * v.dot(prec * v);
    };
    auto ci = profile_likelihood_ci(negll, {0.0, 0.0}, 0, 0.95);
    CHECK_FALSE(ci.lower_open);
    CHECK_FALSE(ci.upper_open);
    CHECK_THAT(ci.lower, WithinAbs(-1.959963984540054, 2e-4));
    CHECK_THAT(ci.upper, WithinAbs(1.959963984540054, 2e-4));
}

TEST_CASE("profile interval flags open sides at the domain edge") {
    auto negll = [](const std::vector<double>& x) {
        double z = (x[0] - 0.05) / 0.1;
        return 0.5 * z * z;
    };
    auto ci = profile_likelihood_ci(negll, {0.05}, 0, 0.95, 0.0);
    CHECK(ci.lower_open);
    CHECK(ci.lower == 0.0);
    CHECK_FALSE(ci.upper_open);
    CHECK_THAT(ci.upper, WithinAbs(0.05 + 1.959963984540054 * 0.1, 1e-6));

    auto flat = [](const std::vector<double>&) { return 1.0; };
    auto ci2 = profile_likelihood_ci(flat, {0.0}, 0, 0.95);
    CHECK(ci2.lower_open);
    CHECK(ci2.upper_open);
}

TEST_CASE("constant proportionality fit recovers the generating factor") {
    auto demo = reference_demo();
    const auto& grid = six_classes();
    auto c = example_rates();

    const double q_true = 1.2e-5;
    auto waifw = apply_proportionality(ProportionalityModel::constant(q_true), c, grid);
    auto lam = solve_foi_fixed_point(waifw, demo);
    REQUIRE(lam[0] > 0.02);

    Rng rng(91003u);
    std::vector<double> ages;
    for (int i = 0; i < 3000; ++i) ages.push_back(rng.uniform(0.5, 80.0));
    auto data = simulate_serology(PiecewiseFoi(grid, lam), ages, rng);

    auto fit = fit_proportionality(ProportionalityModel::constant(1.0), c, data, demo, grid);
    CHECK(fit.converged);
    CHECK(fit.n_params == 1);
    CHECK_THAT(fit.model.params()[0], WithinRel(q_true, 0.15));
    CHECK(fit.r0 > 1.0);
    CHECK_FALSE(fit.non_identifiable);

    detail::SeroCache cache = detail::cache_exposures(data, grid);
    CHECK(fit.loglik >= detail::cached_loglik(cache, lam) - 1e-6);

    auto ci = fit.profile_ci(0, 0.95);
    CHECK_FALSE(ci.lower_open);
    CHECK_FALSE(ci.upper_open);
    CHECK(ci.lower < fit.model.params()[0]);
    CHECK(ci.upper > fit.model.params()[0]);
    CHECK((q_true > ci.lower && q_true < ci.upper));
}

TEST_CASE("two-block proportionality fit recovers both factors") {
    auto demo = reference_demo();
    const auto& grid = six_classes();
    auto c = example_rates();

    const double g1 = 2.0e-5, g2 = 0.8e-5;
    auto truth = ProportionalityModel::discrete("M3", g1, g2);
    auto lam = solve_foi_fixed_point(apply_proportionality(truth, c, grid), demo);

    Rng rng(91004u);
    std::vector<double> ages;
    for (int i = 0; i < 4000; ++i) ages.push_back(rng.uniform(0.5, 80.0));
    auto data = simulate_serology(PiecewiseFoi(grid, lam), ages, rng);

    auto fit = fit_proportionality(ProportionalityModel::discrete("M3", 1.0, 1.0), c, data,
                                   demo, grid);
    CHECK(fit.converged);
    CHECK(fit.n_params == 2);
    CHECK_THAT(fit.model.params()[0], WithinRel(g1, 0.3));
    CHECK_THAT(fit.model.params()[1], WithinRel(g2, 0.3));

    // the one-factor model is nested, so the two-factor optimum cannot be worse
    auto constant = fit_proportionality(ProportionalityModel::constant(1.0), c, data, demo, grid);
    CHECK(fit.loglik >= constant.loglik - 1e-6);
}

TEST_CASE("block-diagonal proportionality flags the idle factor") {
    auto demo = reference_demo();
    const auto& grid = six_classes();
    auto c = example_rates();

    // all transmission happens below the split, so the older-block factor
    // never moves the likelihood
    PiecewiseFoi gen(grid, {0.5, 0.45, 0.4, 0.0, 0.0, 0.0});
    Rng rng(91005u);
    std::vector<double> ages;
    for (int i = 0; i < 3000; ++i) ages.push_back(rng.uniform(0.5, 80.0));
    auto data = simulate_serology(gen, ages, rng);

    auto fit = fit_proportionality(ProportionalityModel::discrete("M4", 1.0, 1.0), c, data,
                                   demo, grid);
    CHECK(fit.converged);
    CHECK(fit.non_identifiable);
}

TEST_CASE("proportionality fit input validation") {
    auto demo = reference_demo();
    auto c = example_rates();
    SerologyDataset empty;
    CHECK_THROWS_AS(
        fit_proportionality(ProportionalityModel::constant(1.0), c, empty, demo, six_classes()),
        DomainError);

    ContactRates wrong{AgeGrid({0.5, 40.0, 80.0}), Eigen::MatrixXd::Ones(2, 2)};
    Rng rng(91006u);
    std::vector<double> ages{5.0, 30.0};
    auto data = simulate_serology_constant(0.5, ages, rng);
    CHECK_THROWS_AS(
        fit_proportionality(ProportionalityModel::constant(1.0), wrong, data, demo, six_classes()),
        DomainError);
}
