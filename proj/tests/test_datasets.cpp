#include "catch_amalgamated.hpp"

#include "oracles.hpp"

#include <set>
#include <sstream>

using namespace kfpls;
using Catch::Approx;

namespace {

ErrorCategory category_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.category();
    }
    FAIL("no error raised");
    return ErrorCategory::config;
}

CsvTable parse(const std::string& text) {
    std::istringstream in(text);
    return read_csv(in, "test.csv");
}

} // namespace

TEST_CASE("standardize round-trips", "[datasets][property]") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Matrix m = oracle::gaussian_matrix(25, 4, seed);
        m.col(1).array() = 1000.0 + 50.0 * m.col(1).array();
        const auto s = Standardizer::fit(m);
        const Matrix z = s.apply(m);
        CHECK(z.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
        for (Index j = 0; j < 4; ++j) {
            CHECK((z.col(j).squaredNorm() / 24.0) == Approx(1.0).epsilon(1e-12));
        }
        const Matrix back = destandardize(standardize(m, s), s);
        CHECK(((back - m).cwiseAbs().array() / m.cwiseAbs().array().max(1.0)).maxCoeff() < 1e-12);
    }
}

TEST_CASE("zero-variance columns are rejected", "[datasets]") {
    Matrix m = oracle::gaussian_matrix(5, 2, 1);
    m.col(1).setConstant(3.0);
    CHECK(category_of([&] { Standardizer::fit(m, {"a", "b"}); }) == ErrorCategory::invalid_argument);
}

TEST_CASE("splits are seeded, disjoint and 80/20", "[datasets]") {
    const auto [cal, test] = split_indices(50, 9);
    CHECK(cal.size() == 40);
    CHECK(test.size() == 10);
    std::set<Index> all(cal.begin(), cal.end());
    all.insert(test.begin(), test.end());
    CHECK(all.size() == 50);
    CHECK(split_indices(50, 9).first == cal);
    CHECK(split_indices(50, 10).first != cal);
}

TEST_CASE("datasets use calibration statistics only", "[datasets]") {
    const Matrix x = oracle::gaussian_matrix(30, 3, 2);
    const Matrix y = oracle::gaussian_matrix(30, 1, 3);
    const Dataset d = make_dataset(x, y, Task::regression, 4);
    CHECK(d.x_cal.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
    CHECK(d.x_test.rows() == 6);
    const Matrix raw_test = d.x_scaler.invert(d.x_test);
    CHECK((raw_test - x(d.test_index, Eigen::all)).norm() < 1e-12);
}

TEST_CASE("peaks data", "[datasets]") {
    CHECK(peaks(0.0, 0.0) == Approx(3.0 * std::exp(-1.0) - std::exp(-1.0) / 3.0));
    const auto s = sample_peaks(100, 0.1, 5);
    CHECK(s.x.minCoeff() >= -2.0);
    CHECK(s.x.maxCoeff() <= 2.0);
    const double sd = std::sqrt((s.y - s.y_true).squaredNorm() / 100.0);
    CHECK(sd == Approx(0.1).epsilon(0.3));
    // the noise level does not move the inputs
    CHECK(sample_peaks(100, 0.3, 5).x == s.x);
    const auto d = gen_peaks(200, 0.05, 5);
    REQUIRE(d.y_true_test);
    CHECK(d.x_cal.rows() == 160);
}

TEST_CASE("circles data", "[datasets]") {
    const auto d = gen_circles(100, 4, 0.1, 6);
    CHECK(d.task == Task::classification);
    CHECK(d.y_cal.cols() == 4);
    CHECK(d.class_names.size() == 4);
    CHECK((d.y_cal.rowwise().sum().array() == 1.0).all());
    const Matrix x = d.x_scaler.invert(d.x_cal);
    const auto labels = d.cal_labels();
    for (Index i = 0; i < x.rows(); ++i) {
        CHECK(std::abs(x.row(i).norm() - (labels[static_cast<std::size_t>(i)] + 1)) < 0.6);
    }
}

TEST_CASE("CSV parsing", "[datasets]") {
    const auto t = parse("\xEF\xBB\xBF" "a, b ,c\n1,2,3\n\n4,5e-1,+6\n");
    CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
    CHECK(t.data.rows() == 2);
    CHECK(t.data(1, 1) == 0.5);
    CHECK(t.data(1, 2) == 6.0);
}

TEST_CASE("CSV errors", "[datasets]") {
    CHECK(category_of([] { parse(""); }) == ErrorCategory::parse);
    CHECK(category_of([] { parse("a,b\n"); }) == ErrorCategory::parse);
    CHECK(category_of([] { parse("a,b\n1,2,3\n"); }) == ErrorCategory::parse);
    CHECK(category_of([] { parse("a,b\n1,\n"); }) == ErrorCategory::parse);
    CHECK(category_of([] { parse("a,b\n1,x\n"); }) == ErrorCategory::parse);
    CHECK(category_of([] { parse("a,b\n1,nan\n"); }) == ErrorCategory::parse);
    CHECK(category_of([] { read_csv(std::string("/nonexistent/file.csv")); }) == ErrorCategory::io);
}

TEST_CASE("response selection", "[datasets]") {
    const auto t = parse("x1,x2,label\n0,1,2\n1,0,1\n2,2,2\n3,1,1\n");
    CHECK(resolve_columns(t.header, {"label"}) == std::vector<Index>{2});
    CHECK(resolve_columns(t.header, {"0"}) == std::vector<Index>{0});
    CHECK(category_of([&] { resolve_columns(t.header, {"nope"}); }) == ErrorCategory::invalid_argument);
    CHECK(category_of([&] { resolve_columns(t.header, {"x1", "0"}); }) == ErrorCategory::invalid_argument);

    const auto s = select_columns(t, {"label"}, Task::classification);
    CHECK(s.x.cols() == 2);
    CHECK(s.y == Matrix{{0, 1}, {1, 0}, {0, 1}, {1, 0}});
    CHECK(s.y_names == std::vector<std::string>{"label=1", "label=2"});
}
