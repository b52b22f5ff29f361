#include "catch_amalgamated.hpp"

#include "oracles.hpp"

#include <filesystem>
#include <sstream>

using namespace kfpls;

namespace {

ModelBundle fitted(Task task) {
    const Dataset d = task == Task::regression ? gen_peaks(60, 0.05, 1) : gen_circles(15, 3, 0.1, 1);
    const auto spec = KernelSpec::make({KernelFamily::gaussian, KernelFamily::cauchy}, 0.7, 0.03);
    return make_bundle(fit_kpls(d.x_cal, d.y_cal, 5, spec), d);
}

} // namespace

TEST_CASE("model JSON round-trips bit for bit", "[io]") {
    for (auto task : {Task::regression, Task::classification}) {
        const auto b = fitted(task);
        const auto back = model_from_json(Json::parse(model_to_json(b).dump()));
        CHECK(back.model.pls.coefficients == b.model.pls.coefficients);
        CHECK(back.model.x_train == b.model.x_train);
        CHECK(back.model.stats.row_means == b.model.stats.row_means);
        CHECK(back.model.stats.grand_mean == b.model.stats.grand_mean);
        CHECK(back.model.spec.theta() == b.model.spec.theta());
        CHECK(back.x_scaler.means == b.x_scaler.means);
        CHECK(back.class_names == b.class_names);
        const Matrix xn = oracle::gaussian_matrix(7, 2, 3);
        CHECK(predict_raw(back, xn) == predict_raw(b, xn));
        CHECK(model_to_json(back).dump() == model_to_json(b).dump());
    }
}

TEST_CASE("model files on disk", "[io]") {
    const auto path = (std::filesystem::temp_directory_path() / "kfpls_test_model.json").string();
    const auto b = fitted(Task::regression);
    save_model(b, path);
    const auto back = load_model(path);
    CHECK(back.model.pls.coefficients == b.model.pls.coefficients);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_model(path), Error);
}

TEST_CASE("corrupt model files are parse errors", "[io]") {
    auto j = model_to_json(fitted(Task::regression));
    auto category = [](const Json& doc) {
        try {
            model_from_json(doc);
        } catch (const Error& e) {
            return e.category();
        }
        return ErrorCategory::config;
    };
    Json wrong_version = j;
    wrong_version["format_version"] = 99;
    CHECK(category(wrong_version) == ErrorCategory::parse);
    Json missing = j;
    missing.erase("pls");
    CHECK(category(missing) == ErrorCategory::parse);
    Json bad_shape = j;
    bad_shape["x_train"]["rows"] = 3;
    CHECK(category(bad_shape) == ErrorCategory::parse);
    CHECK(category(Json::object()) == ErrorCategory::parse);
}

TEST_CASE("trace CSV has one row per recorded iteration", "[io]") {
    const auto d = gen_peaks(60, 0.05, 2);
    FlowConfig c;
    c.n_iter = 10;
    c.n_subsamples = 2;
    c.patience = 0;
    c.n_lv = 5;
    const auto r = run_kernel_flows(d.x_cal, d.y_cal, c, KernelSpec::make({KernelFamily::gaussian}, 1.0, 0.5));
    std::ostringstream out;
    write_trace_csv(r.trace, out);
    std::istringstream in(out.str());
    const auto t = read_csv(in);
    CHECK(t.header == std::vector<std::string>{"iteration", "loss", "smoothed_loss", "sigma_gaussian", "delta",
                                               "gradient_norm"});
    CHECK(t.data.rows() == static_cast<Index>(r.trace.records.size()));
    CHECK(t.data.allFinite());
    CHECK(t.data(0, 3) == 1.0);
    CHECK(t.data(0, 1) == r.trace.records[0].loss);
}
