#include "catch_amalgamated.hpp"

#include "oracles.hpp"

using namespace kfpls;
using Catch::Approx;

TEST_CASE("rmse examples", "[metrics]") {
    CHECK(rmse(Matrix{{1.0}, {2.0}, {3.0}}, Matrix{{1.0}, {2.0}, {3.0}}) == 0.0);
    CHECK(rmse(Matrix{{0.0}, {0.0}}, Matrix{{3.0}, {4.0}}) == Approx(std::sqrt(12.5)));
    CHECK_THROWS_AS(rmse(Matrix::Zero(2, 1), Matrix::Zero(3, 1)), Error);
    CHECK_THROWS_AS(rmse(Matrix(0, 1), Matrix(0, 1)), Error);
}

TEST_CASE("nrmse is a percentage of the calibration range", "[metrics]") {
    CHECK(nrmse(0.5, -1.0, 9.0) == Approx(5.0));
    CHECK_THROWS_AS(nrmse(0.5, 1.0, 1.0), Error);
}

TEST_CASE("q2 examples", "[metrics]") {
    const Matrix cal{{0.0}, {2.0}};
    const Matrix test{{1.0}, {3.0}};
    CHECK(q2(test, test, cal) == 1.0);
    // predicting the calibration mean everywhere scores zero
    CHECK(q2(test, Matrix::Constant(2, 1, 1.0), cal) == Approx(0.0).margin(1e-15));
    CHECK(q2(test, Matrix{{2.0}, {2.0}}, cal) == Approx(1.0 - 2.0 / 4.0));
    CHECK_THROWS_AS(q2(test, test, Matrix::Ones(3, 1)), Error);
    CHECK(q2_literal(test, Matrix{{2.0}, {2.0}}, cal) == Approx(2.0 / 2.0));
}

TEST_CASE("q2 never exceeds one and falls with added error", "[metrics][property]") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Matrix cal = oracle::gaussian_matrix(30, 2, seed);
        const Matrix test = oracle::gaussian_matrix(10, 2, seed + 50);
        const Matrix noise = oracle::gaussian_matrix(10, 2, seed + 99);
        const double a = q2(test, test + 0.1 * noise, cal);
        const double b = q2(test, test + 0.5 * noise, cal);
        CHECK(a <= 1.0);
        CHECK(b < a);
    }
}

TEST_CASE("accuracy examples", "[metrics]") {
    CHECK(accuracy({0, 1, 2, 3}, {0, 1, 2, 3}) == 1.0);
    CHECK(accuracy({0, 1, 2, 3}, {0, 0, 2, 0}) == 0.5);
    CHECK_THROWS_AS(accuracy({0, 1}, {0}), Error);
    CHECK_THROWS_AS(accuracy({}, {}), Error);
}

TEST_CASE("evaluation reports", "[metrics]") {
    const Matrix cal{{0.0}, {4.0}, {2.0}};
    const Matrix test{{1.0}, {3.0}};
    const Matrix pred{{1.5}, {2.5}};
    const auto r = evaluate_regression(test, pred, cal);
    CHECK(r.rmse == Approx(0.5));
    CHECK(r.nrmse_percent == Approx(12.5));
    CHECK(r.y_range_cal == 4.0);
    CHECK(r.n_test == 2);
    CHECK(r.n_cal == 3);
    CHECK(!r.accuracy);

    const Matrix onehot{{1.0, 0.0}, {0.0, 1.0}};
    const auto c = evaluate_classification(onehot, Matrix{{0.9, 0.2}, {0.6, 0.4}}, onehot, {0, 1}, {0, 0});
    REQUIRE(c.accuracy);
    CHECK(*c.accuracy == 0.5);
}
