#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>

#include "serocontact/bspline.hpp"
#include "serocontact/rng.hpp"

using namespace sero;

TEST_CASE("cubic b-spline basis is a partition of unity") {
    BsplineBasis basis(11, 0.0, 101.0);
    REQUIRE(basis.size() == 11);
    Rng rng(61001u);
    std::array<double, 4> v{};
    for (int t = 0; t < 500; ++t) {
        double x = rng.uniform(0.0, 101.0);
        std::size_t first = basis.evaluate(x, v);
        REQUIRE(first <= basis.size() - 4);
        double sum = 0.0;
        for (double b : v) {
            CHECK(b >= 0.0);
            sum += b;
        }
        CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-12));
    }
    // endpoints included
    basis.evaluate(0.0, v);
    basis.evaluate(101.0, v);
}

TEST_CASE("b-spline values at interior knots are 1/6, 2/3, 1/6") {
    BsplineBasis basis(8, 0.0, 10.0);
    std::array<double, 4> v{};
    double knot = 10.0 / 5.0 * 2.0; // an interior knot
    basis.evaluate(knot, v);
    // at a knot only three basis functions are active
    bool seen = false;
    for (std::size_t i = 0; i < 4; ++i) {
        if (std::fabs(v[i] - 2.0 / 3.0) < 1e-12) seen = true;
    }
    CHECK(seen);
    double sum = v[0] + v[1] + v[2] + v[3];
    CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-12));
    int sixth = 0;
    for (std::size_t i = 0; i < 4; ++i)
        if (std::fabs(v[i] - 1.0 / 6.0) < 1e-12) ++sixth;
    CHECK(sixth == 2);
}

TEST_CASE("greville abscissae give linear precision") {
    BsplineBasis basis(9, -3.0, 47.0);
    Rng rng(61002u);
    std::array<double, 4> v{};
    for (int t = 0; t < 200; ++t) {
        double x = rng.uniform(-3.0, 47.0);
        std::size_t first = basis.evaluate(x, v);
        double recon = 0.0;
        for (std::size_t i = 0; i < 4; ++i) recon += v[i] * basis.greville(first + i);
        CHECK_THAT(recon, Catch::Matchers::WithinAbs(x, 1e-10));
    }
}

TEST_CASE("difference penalty vanishes exactly on constant and linear coefficients") {
    BsplineBasis basis(7, 0.0, 1.0);
    Eigen::MatrixXd s = basis.penalty();
    REQUIRE(s.rows() == 7);
    REQUIRE(s.cols() == 7);
    CHECK((s - s.transpose()).cwiseAbs().maxCoeff() == 0.0);

    Eigen::VectorXd ones = Eigen::VectorXd::Ones(7);
    Eigen::VectorXd lin(7);
    for (int i = 0; i < 7; ++i) lin(i) = 2.0 * i - 3.0;
    CHECK_THAT(ones.dot(s * ones), Catch::Matchers::WithinAbs(0.0, 1e-12));
    CHECK_THAT(lin.dot(s * lin), Catch::Matchers::WithinAbs(0.0, 1e-12));

    Eigen::VectorXd quad(7);
    for (int i = 0; i < 7; ++i) quad(i) = i * i;
    CHECK(quad.dot(s * quad) > 1.0);
}

TEST_CASE("b-spline domain is validated") {
    CHECK_THROWS_AS(BsplineBasis(3, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(BsplineBasis(6, 1.0, 1.0), DomainError);
    BsplineBasis basis(6, 0.0, 10.0);
    std::array<double, 4> v{};
    CHECK_THROWS_AS(basis.evaluate(-0.001, v), DomainError);
    CHECK_THROWS_AS(basis.evaluate(10.001, v), DomainError);
    CHECK(!basis.covers(10.5));
    CHECK(basis.covers(10.0));
}
