#include "catch_amalgamated.hpp"

#include "oracles.hpp"

using namespace kfpls;

TEST_CASE("K-PLS coefficients follow the centred-Gram recursion", "[kpls]") {
    const Matrix x = oracle::gaussian_matrix(18, 2, 1);
    const Matrix y = oracle::gaussian_matrix(18, 2, 2);
    const auto spec = KernelSpec::make({KernelFamily::gaussian}, 1.0, 0.1);
    const auto m = fit_kpls(x, y, 4, spec);
    const Matrix kc = oracle::center(oracle::ridge_gram(spec, x));
    const Matrix yc = y.rowwise() - y.colwise().mean();
    const Matrix b = oracle::simpls_coefficients(kc, yc, 4);
    CHECK((m.pls.coefficients - b).norm() <= 1e-8 * b.norm());
}

TEST_CASE("predictions use test centering and restore the mean", "[kpls]") {
    const Matrix x = oracle::gaussian_matrix(20, 3, 3);
    const Matrix y = oracle::gaussian_matrix(20, 1, 4).array() + 5.0;
    const auto spec = KernelSpec::make({KernelFamily::matern52}, 1.5, 0.05);
    const auto m = fit_kpls(x, y, 3, spec);
    const Matrix xt = oracle::gaussian_matrix(6, 3, 5);
    const Matrix kt = oracle::center_test(oracle::kernel(spec, xt, x), oracle::ridge_gram(spec, x));
    Matrix want = kt * m.pls.coefficients;
    want.array() += y.mean();
    CHECK((predict_kpls(m, xt) - want).norm() < 1e-10);
}

TEST_CASE("more latent variables never worsen the training fit", "[kpls][property]") {
    const Matrix x = oracle::gaussian_matrix(30, 2, 6);
    Matrix y(30, 1);
    for (Index i = 0; i < 30; ++i) y(i, 0) = std::sin(x(i, 0)) + x(i, 1) * x(i, 1);
    const auto spec = KernelSpec::make({KernelFamily::gaussian}, 1.0, 1e-3);
    double prev = std::numeric_limits<double>::infinity();
    for (Index a = 1; a <= 10; ++a) {
        const auto m = fit_kpls(x, y, a, spec);
        const double res = (predict_kpls(m, x) - y).squaredNorm();
        CHECK(res <= prev * (1 + 1e-9));
        prev = res;
    }
}

TEST_CASE("classification picks the largest score", "[kpls]") {
    const Dataset d = gen_circles(15, 3, 0.05, 9);
    const auto m = fit_kpls(d.x_cal, d.y_cal, 10, KernelSpec::make({KernelFamily::gaussian}, 0.3, 0.1));
    const auto labels = classify(m, d.x_cal);
    CHECK(labels == argmax_rows(predict_kpls(m, d.x_cal)));
    CHECK(accuracy(d.cal_labels(), labels) > 0.9);
    const Matrix scores{{0.1, 0.5, 0.5}, {2.0, -1.0, 0.0}};
    CHECK(argmax_rows(scores) == std::vector<int>{1, 0});
}

TEST_CASE("K-PLS input errors", "[kpls]") {
    const auto spec = KernelSpec::make({KernelFamily::gaussian});
    const Matrix x = oracle::gaussian_matrix(8, 2, 10);
    const Matrix y = oracle::gaussian_matrix(8, 1, 11);
    CHECK_THROWS_AS(fit_kpls(x, y, 0, spec), Error);
    CHECK_THROWS_AS(fit_kpls(x, y, 9, spec), Error);
    CHECK_THROWS_AS(fit_kpls(x, Matrix::Zero(7, 1), 2, spec), Error);
    const auto m = fit_kpls(x, y, 2, spec);
    CHECK_THROWS_AS(predict_kpls(m, Matrix::Zero(3, 3)), Error);
    CHECK(predict_kpls(m, Matrix::Zero(0, 2)).rows() == 0);
    CHECK_THROWS_AS(classify(m, x), Error);
}
