#include "catch_amalgamated.hpp"

#include "oracles.hpp"

using namespace kfpls;
using Catch::Approx;

TEST_CASE("family names round-trip", "[kernels]") {
    for (auto f : kAllFamilies) CHECK(parse_family(to_string(f)) == f);
    CHECK(parse_families("gaussian,cauchy") == std::vector{KernelFamily::gaussian, KernelFamily::cauchy});
    CHECK_THROWS_AS(parse_family("rbf"), Error);
}

TEST_CASE("theta layout and natural scale", "[kernels]") {
    const auto one = KernelSpec::make({KernelFamily::gaussian}, 2.0, 0.5);
    CHECK(one.dim() == 2);
    CHECK(one.parameter_names() == std::vector<std::string>{"sigma_gaussian", "delta"});
    CHECK(one.natural()(0) == Approx(2.0));
    CHECK(one.natural()(1) == Approx(0.5));

    const auto two = KernelSpec::make({KernelFamily::gaussian, KernelFamily::matern32});
    CHECK(two.dim() == 5);
    CHECK(two.gamma(0) == Approx(0.5));
    Vector t = two.theta();
    t(4) = std::log(0.25);
    CHECK(two.with_theta(t).delta() == Approx(0.25));
    CHECK_THROWS_AS(two.with_theta(Vector::Zero(3)), Error);
}

TEST_CASE("invalid specs are rejected", "[kernels]") {
    CHECK_THROWS_AS(KernelSpec::make({}), Error);
    CHECK_THROWS_AS(KernelSpec::make({KernelFamily::cauchy, KernelFamily::cauchy}), Error);
    KernelSpec s = KernelSpec::make({KernelFamily::gaussian, KernelFamily::cauchy});
    s.log_gamma.clear();
    CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("Gram matches direct evaluation for every family", "[kernels]") {
    const Matrix x = oracle::gaussian_matrix(12, 3, 5);
    for (auto f : kAllFamilies) {
        const auto spec = KernelSpec::make({f}, 1.3, 0.01);
        CHECK((gram_train(spec, x) - oracle::ridge_gram(spec, x)).norm() < 1e-12);
    }
    const auto mix = KernelSpec::make({KernelFamily::matern12, KernelFamily::matern52, KernelFamily::cauchy}, 0.7);
    CHECK((gram_train(mix, x) - oracle::ridge_gram(mix, x)).norm() < 1e-12);
}

TEST_CASE("kernel_eval agrees with the Gram entries", "[kernels]") {
    const Matrix x = oracle::gaussian_matrix(4, 2, 6);
    const auto spec = KernelSpec::make({KernelFamily::matern32}, 0.9, 0.1);
    const Matrix k = gram_train(spec, x);
    CHECK(kernel_eval(spec, x.row(0), x.row(2)) == Approx(k(0, 2)).epsilon(1e-14));
    CHECK(kernel_eval(spec, x.row(1), x.row(1)) + spec.delta() == Approx(k(1, 1)).epsilon(1e-14));
}

TEST_CASE("Gram is symmetric and PSD before the ridge", "[kernels][property]") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Index n = 5 + static_cast<Index>(seed);
        const Matrix x = oracle::gaussian_matrix(n, 1 + static_cast<Index>(seed % 4), 100 + seed);
        for (auto f : kAllFamilies) {
            const auto spec = KernelSpec::make({f}, 0.3 + 0.4 * static_cast<double>(seed), 1e-3);
            Matrix k = gram_train(spec, x);
            CHECK(k == k.transpose());
            k.diagonal().array() -= spec.delta();
            const double lmin = Eigen::SelfAdjointEigenSolver<Matrix>(k).eigenvalues()(0);
            CHECK(lmin >= -1e-10);
        }
    }
}

TEST_CASE("training centering equals H K H and is idempotent", "[kernels][property]") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Matrix x = oracle::gaussian_matrix(15, 2, 200 + seed);
        const auto spec = KernelSpec::make({KernelFamily::gaussian}, 0.8, 0.05);
        const Matrix k = gram_train(spec, x);
        const auto c = center_train(k);
        const double scale = k.norm();
        CHECK((c.gram - oracle::center(k)).norm() <= 1e-12 * scale);
        CHECK((center_train(c.gram).gram - c.gram).norm() <= 1e-10 * scale);
        CHECK(c.gram.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-10 * scale);
        CHECK(c.gram.colwise().sum().cwiseAbs().maxCoeff() <= 1e-10 * scale);
    }
}

TEST_CASE("test centering matches the explicit formula", "[kernels]") {
    const Matrix x = oracle::gaussian_matrix(10, 3, 300);
    const Matrix xt = oracle::gaussian_matrix(4, 3, 301);
    const auto spec = KernelSpec::make({KernelFamily::cauchy}, 1.1, 0.2);
    const Matrix k = gram_train(spec, x);
    const auto c = center_train(k);
    const Matrix got = gram_test(spec, xt, x, c.stats);
    const Matrix want = oracle::center_test(oracle::kernel(spec, xt, x), k);
    CHECK((got - want).norm() < 1e-12);
    // applied to the training rows it reproduces the centred training Gram
    // up to the ridge on the diagonal
    const Matrix self = gram_test(spec, x, x, c.stats);
    const Matrix ridge = oracle::center(spec.delta() * Matrix::Identity(10, 10));
    CHECK((self + ridge - c.gram).norm() < 1e-12);
}

TEST_CASE("kernel input errors", "[kernels]") {
    const auto spec = KernelSpec::make({KernelFamily::gaussian});
    CHECK_THROWS_AS(gram_train(spec, Matrix::Zero(1, 2)), Error);
    CHECK_THROWS_AS(squared_distances(Matrix::Zero(2, 2), Matrix::Zero(2, 3)), Error);
    CHECK_THROWS_AS(center_train(Matrix::Zero(2, 3)), Error);
    Matrix bad = Matrix::Zero(3, 2);
    bad(1, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(gram_train(spec, bad), Error);
}
