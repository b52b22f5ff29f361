#include "catch_amalgamated.hpp"

#include "oracles.hpp"

#include <sstream>

using namespace kfpls;

namespace {

PipelineConfig quick_config() {
    PipelineConfig c;
    c.init = KernelSpec::make({KernelFamily::gaussian}, 1.0, 0.5);
    c.flow.n_iter = 15;
    c.flow.n_subsamples = 2;
    c.flow.patience = 0;
    c.lv_max = 8;
    c.seed = 3;
    return c;
}

} // namespace

TEST_CASE("line search returns the best-scoring n_lv", "[pipeline]") {
    const auto d = gen_peaks(80, 0.05, 1);
    const auto s = search_n_lv(d.x_cal, d.y_cal, d.task, KernelSpec::make({KernelFamily::gaussian}, 0.7, 0.05), 1,
                               6, 2);
    REQUIRE(s.n_lv.size() == 6);
    const auto best = std::max_element(s.score.begin(), s.score.end());
    CHECK(s.best == s.n_lv[static_cast<std::size_t>(best - s.score.begin())]);
    CHECK_THROWS_AS(search_n_lv(d.x_cal, d.y_cal, d.task, KernelSpec::make({KernelFamily::gaussian}), 3, 2, 2),
                    Error);
}

TEST_CASE("linear PLS baseline reproduces least squares at full rank", "[pipeline]") {
    // predictors are expected standardised, so centre them
    Matrix x = oracle::gaussian_matrix(30, 3, 4);
    x = x.rowwise() - x.colwise().mean();
    const Matrix y = oracle::gaussian_matrix(30, 1, 5).array() + 2.0;
    const auto m = fit_linear_pls(x, y, 3);
    Matrix xa(30, 4);
    xa << x, Matrix::Ones(30, 1);
    const Matrix want = xa * oracle::least_squares(xa, y);
    CHECK((predict_linear_pls(m, x) - want).norm() < 1e-8 * want.norm());
}

TEST_CASE("pipeline runs and reports every model", "[pipeline]") {
    const auto d = gen_peaks(80, 0.05, 6);
    const auto r = run_pipeline(d, quick_config());
    REQUIRE(r.flow);
    REQUIRE(r.search);
    CHECK(r.optimized.name == "kf_kpls");
    CHECK(r.optimized.report_true);
    REQUIRE(r.baselines.size() == 2);
    CHECK(r.baselines[0].name == "pls");
    CHECK(r.baselines[1].name == "kpls_initial");
    CHECK(r.optimized.y_pred.rows() == d.x_test.rows());

    auto fixed = quick_config();
    fixed.n_lv = 4;
    fixed.optimize = false;
    const auto f = run_pipeline(d, fixed);
    CHECK(!f.flow);
    CHECK(!f.search);
    CHECK(f.optimized.n_lv == 4);
    CHECK(f.baselines.size() == 1);
}

TEST_CASE("case presets", "[pipeline]") {
    for (int id = 1; id <= 4; ++id) {
        const auto p = case_preset(id);
        CHECK(p.id == id);
        CHECK(p.needs_csv == (id >= 3));
    }
    CHECK(case_preset(2).task == Task::classification);
    CHECK_THROWS_AS(case_preset(5), Error);
    CHECK_THROWS_AS(case_dataset(case_preset(3), 0), Error);
}

TEST_CASE("sweeps give one row per grid value", "[pipeline][sweep]") {
    const auto preset = case_preset(1);
    SweepInput in;
    in.config = quick_config();
    in.data = gen_peaks(80, 0.05, 7);
    in.preset = &preset;
    in.data_seed = 7;

    const auto single = run_sweep(SweepAxis::init_theta, {0.8}, in, 1);
    CHECK(single.rows.size() == 1);
    CHECK(single.rows[0].size() == single.columns.size());

    const auto lv = run_sweep(SweepAxis::n_lv, {1, 2, 3}, in, 1);
    REQUIRE(lv.rows.size() == 3);
    CHECK(lv.at(2, "n_lv") == 3.0);

    const auto a = run_sweep(SweepAxis::noise, {0.05, 0.2}, in, 1);
    const auto b = run_sweep(SweepAxis::noise, {0.05, 0.2}, in, 1);
    std::ostringstream sa, sb;
    a.write_csv(sa);
    b.write_csv(sb);
    CHECK(sa.str() == sb.str());

    CHECK_THROWS_AS(run_sweep(SweepAxis::n_lv, {}, in, 1), Error);
    CHECK_THROWS_AS(run_sweep(SweepAxis::n_lv, {1.5}, in, 1), Error);
    in.preset = nullptr;
    CHECK_THROWS_AS(run_sweep(SweepAxis::noise, {0.1}, in, 1), Error);
    CHECK(parse_sweep_axis("learning_rate") == SweepAxis::learning_rate);
    CHECK_THROWS_AS(parse_sweep_axis("speed"), Error);
}

TEST_CASE("loss surface table is long format", "[pipeline][sweep]") {
    const auto d = gen_peaks(60, 0.05, 8);
    FlowConfig c;
    c.n_subsamples = 2;
    c.n_lv = 5;
    const auto t = loss_surface_table(d.x_cal, d.y_cal, {0.5, 1.0}, {0.01, 0.1, 1.0}, c,
                                      KernelSpec::make({KernelFamily::gaussian}), 2);
    CHECK(t.columns == std::vector<std::string>{"sigma", "delta", "mean", "std"});
    REQUIRE(t.rows.size() == 6);
    CHECK(t.rows[4][0] == 1.0);
    CHECK(t.rows[4][1] == 0.1);
    CHECK_THROWS_AS(loss_surface_table(d.x_cal, d.y_cal, {}, {0.1}, c, KernelSpec::make({KernelFamily::gaussian}), 2),
                    Error);
}
