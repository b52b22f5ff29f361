#ifndef KFPLS_IO_HPP
#define KFPLS_IO_HPP

// Persistence: fitted models as versioned JSON (doubles round-trip exactly),
// Kernel Flows traces and prediction tables as CSV.

#include "kfpls/datasets.hpp"
#include "kfpls/kernel_flows.hpp"
#include "kfpls/kpls.hpp"
#include "kfpls/metrics.hpp"
#include "kfpls/types.hpp"

#include "json.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace kfpls {

inline constexpr std::string_view kVersion = "1.0.0";
inline constexpr int kModelFormatVersion = 1;

using Json = nlohmann::json;

/// A fitted K-PLS model together with the preprocessing needed to apply it to
/// raw data.
struct ModelBundle {
    KplsModel model;
    Task task = Task::regression;
    Standardizer x_scaler, y_scaler;
    std::vector<std::string> class_names;
};

inline ModelBundle make_bundle(const KplsModel& model, const Dataset& d) {
    return {model, d.task, d.x_scaler, d.y_scaler, d.class_names};
}

/// Predictions in original response units.
inline Matrix predict_raw(const ModelBundle& b, const Matrix& x_raw) {
    return b.y_scaler.invert(predict_kpls(b.model, b.x_scaler.apply(x_raw)));
}

namespace detail {

inline Json to_json(const Matrix& m) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline Matrix matrix_from_json(const Json& j, const std::string& what) {
    try {
        const auto rows = j.at("rows").get<Index>();
        const auto cols = j.at("cols").get<Index>();
        const auto data = j.at("data").get<std::vector<double>>();
        require(rows >= 0 && cols >= 0 && static_cast<Index>(data.size()) == rows * cols, ErrorCategory::parse,
                "model file: '" + what + "' has inconsistent shape");
        Matrix m(rows, cols);
        for (Index i = 0; i < rows; ++i) {
            for (Index k = 0; k < cols; ++k) m(i, k) = data[static_cast<std::size_t>(i * cols + k)];
        }
        return m;
    } catch (const Json::exception& e) {
        throw Error(ErrorCategory::parse, "model file: bad matrix '" + what + "': " + e.what());
    }
}

inline Json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }
inline Json to_json(const RowVector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Vector vector_from_json(const Json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

inline Json to_json(const Standardizer& s) {
    return {{"means", to_json(s.means)}, {"stds", to_json(s.stds)}, {"names", s.names}};
}

inline Standardizer standardizer_from_json(const Json& j) {
    Standardizer s;
    s.means = vector_from_json(j.at("means")).transpose();
    s.stds = vector_from_json(j.at("stds")).transpose();
    s.names = j.at("names").get<std::vector<std::string>>();
    require(s.means.size() == s.stds.size(), ErrorCategory::parse, "model file: scaler size mismatch");
    return s;
}

} // namespace detail

inline Json kernel_to_json(const KernelSpec& s) {
    std::vector<std::string> fams;
    for (auto f : s.families) fams.emplace_back(to_string(f));
    Json natural = Json::object();
    const auto names = s.parameter_names();
    const Vector nat = s.natural();
    for (std::size_t i = 0; i < names.size(); ++i) natural[names[i]] = nat(static_cast<Index>(i));
    return {{"families", fams},
            {"log_sigma", s.log_sigma},
            {"log_gamma", s.log_gamma},
            {"log_delta", s.log_delta},
            {"natural", natural}};
}

inline KernelSpec kernel_from_json(const Json& j) {
    KernelSpec s;
    for (const auto& f : j.at("families")) s.families.push_back(parse_family(f.get<std::string>()));
    s.log_sigma = j.at("log_sigma").get<std::vector<double>>();
    s.log_gamma = j.at("log_gamma").get<std::vector<double>>();
    s.log_delta = j.at("log_delta").get<double>();
    s.validate();
    return s;
}

inline Json model_to_json(const ModelBundle& b) {
    using detail::to_json;
    const auto& m = b.model;
    Json pls = {{"weights", to_json(m.pls.weights)},
                {"x_loadings", to_json(m.pls.x_loadings)},
                {"y_loadings", to_json(m.pls.y_loadings)},
                {"coefficients", to_json(m.pls.coefficients)},
                {"n_lv", m.pls.n_lv},
                {"requested_lv", m.pls.requested_lv},
                {"clamped", m.pls.clamped},
                {"stopped_early", m.pls.stopped_early}};
    return {{"format", "kfpls-model"},
            {"format_version", kModelFormatVersion},
            {"version", std::string(kVersion)},
            {"task", std::string(to_string(b.task))},
            {"kernel", kernel_to_json(m.spec)},
            {"x_train", to_json(m.x_train)},
            {"centering", {{"row_means", to_json(m.stats.row_means)}, {"grand_mean", m.stats.grand_mean}}},
            {"pls", pls},
            {"y_means", to_json(m.y_means)},
            {"x_scaler", to_json(b.x_scaler)},
            {"y_scaler", to_json(b.y_scaler)},
            {"class_names", b.class_names}};
}

inline ModelBundle model_from_json(const Json& j) {
    try {
        detail::require(j.value("format", std::string()) == "kfpls-model", ErrorCategory::parse,
                        "model file: not a kfpls model");
        const int v = j.at("format_version").get<int>();
        detail::require(v == kModelFormatVersion, ErrorCategory::parse,
                        "model file: unsupported format version " + std::to_string(v));
        ModelBundle b;
        b.task = parse_task(j.at("task").get<std::string>());
        auto& m = b.model;
        m.spec = kernel_from_json(j.at("kernel"));
        m.x_train = detail::matrix_from_json(j.at("x_train"), "x_train");
        m.stats.row_means = detail::vector_from_json(j.at("centering").at("row_means"));
        m.stats.grand_mean = j.at("centering").at("grand_mean").get<double>();
        m.stats.n = m.stats.row_means.size();
        const auto& p = j.at("pls");
        m.pls.weights = detail::matrix_from_json(p.at("weights"), "weights");
        m.pls.x_loadings = detail::matrix_from_json(p.at("x_loadings"), "x_loadings");
        m.pls.y_loadings = detail::matrix_from_json(p.at("y_loadings"), "y_loadings");
        m.pls.coefficients = detail::matrix_from_json(p.at("coefficients"), "coefficients");
        m.pls.n_lv = p.at("n_lv").get<Index>();
        m.pls.requested_lv = p.at("requested_lv").get<Index>();
        m.pls.clamped = p.at("clamped").get<bool>();
        m.pls.stopped_early = p.at("stopped_early").get<bool>();
        m.y_means = detail::vector_from_json(j.at("y_means")).transpose();
        b.x_scaler = detail::standardizer_from_json(j.at("x_scaler"));
        b.y_scaler = detail::standardizer_from_json(j.at("y_scaler"));
        b.class_names = j.at("class_names").get<std::vector<std::string>>();

        detail::require(m.stats.n == m.x_train.rows() && m.pls.coefficients.rows() == m.x_train.rows() &&
                            m.pls.coefficients.cols() == m.y_means.size() &&
                            b.x_scaler.means.size() == m.x_train.cols() &&
                            b.y_scaler.means.size() == m.y_means.size(),
                        ErrorCategory::parse, "model file: inconsistent dimensions");
        return b;
    } catch (const Json::exception& e) {
        throw Error(ErrorCategory::parse, std::string("model file: ") + e.what());
    }
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    detail::require(static_cast<bool>(out), ErrorCategory::io, "cannot write '" + path + "'");
    out << text;
    detail::require(static_cast<bool>(out), ErrorCategory::io, "error while writing '" + path + "'");
}

inline void save_model(const ModelBundle& b, const std::string& path) {
    write_text(path, model_to_json(b).dump(2) + "\n");
}

inline ModelBundle load_model(const std::string& path) {
    std::ifstream in(path);
    detail::require(static_cast<bool>(in), ErrorCategory::io, "cannot open model '" + path + "'");
    Json j;
    try {
        in >> j;
    } catch (const Json::exception& e) {
        throw Error(ErrorCategory::parse, "model file '" + path + "': " + e.what());
    }
    return model_from_json(j);
}

/// Plain numeric CSV writer; doubles are printed with 17 significant digits.
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) { out_ << std::setprecision(17); }

    void header(const std::vector<std::string>& names) { row_of(names); }

    void row(const std::vector<double>& values) { row_of(values); }

private:
    template <typename T>
    void row_of(const std::vector<T>& values) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) out_ << ',';
            out_ << values[i];
        }
        out_ << '\n';
    }

    std::ostream& out_;
};

/// Trace as CSV: iteration, loss, smoothed loss, each parameter on its natural
/// scale, gradient norm.
inline void write_trace_csv(const FlowTrace& t, std::ostream& out) {
    CsvWriter w(out);
    std::vector<std::string> cols = {"iteration", "loss", "smoothed_loss"};
    cols.insert(cols.end(), t.parameter_names.begin(), t.parameter_names.end());
    cols.emplace_back("gradient_norm");
    w.header(cols);
    for (const auto& r : t.records) {
        std::vector<double> row = {static_cast<double>(r.iteration), r.loss, r.smoothed_loss};
        for (Index k = 0; k < r.theta.size(); ++k) row.push_back(std::exp(r.theta(k)));
        row.push_back(r.gradient_norm);
        w.row(row);
    }
}

inline Json report_to_json(const EvalReport& r) {
    Json j = {{"rmse", r.rmse},
              {"nrmse_percent", r.nrmse_percent},
              {"q2", r.q2},
              {"n_test", r.n_test},
              {"n_cal", r.n_cal},
              {"y_range_cal", r.y_range_cal}};
    if (r.accuracy) j["accuracy"] = *r.accuracy;
    return j;
}

inline Json trace_summary_json(const FlowTrace& t) {
    Json best = Json::object();
    for (std::size_t i = 0; i < t.parameter_names.size(); ++i) {
        best[t.parameter_names[i]] = std::exp(t.best_theta(static_cast<Index>(i)));
    }
    return {{"iterations_run", t.iterations_run},
            {"recorded", t.records.size()},
            {"skipped", t.skipped},
            {"converged", t.converged},
            {"best_iteration", t.best_iteration},
            {"best_smoothed_loss", t.best_smoothed_loss},
            {"best_theta", best}};
}

inline Json flow_config_json(const FlowConfig& c) {
    return {{"n_iter", c.n_iter},
            {"n_subsamples", c.n_subsamples},
            {"batch_fraction", c.batch_fraction},
            {"sub_fraction", c.sub_fraction},
            {"flow_n_lv", c.n_lv},
            {"learning_rate", c.learning_rate},
            {"momentum", c.momentum},
            {"nesterov_gamma", c.nesterov_gamma},
            {"update_rule", std::string(to_string(c.update_rule))},
            {"smoothing_window", c.smoothing_window},
            {"tolerance", c.tolerance},
            {"patience", c.patience},
            {"lr_decay", c.lr_decay},
            {"stratified", c.stratified},
            {"fd_step", c.fd_step},
            {"max_step", c.max_step}};
}

} // namespace kfpls

#endif // KFPLS_IO_HPP
