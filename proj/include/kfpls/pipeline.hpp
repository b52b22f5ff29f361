#ifndef KFPLS_PIPELINE_HPP
#define KFPLS_PIPELINE_HPP

// End-to-end runs: optional Kernel Flows, a line search over the number of
// latent variables on a held-out fifth of the calibration set, the final fit
// and its evaluation on the test partition, plus the two reference models
// (linear PLS and K-PLS with the initial kernel).

#include "kfpls/datasets.hpp"
#include "kfpls/kernel_flows.hpp"
#include "kfpls/kpls.hpp"
#include "kfpls/metrics.hpp"
#include "kfpls/pls.hpp"
#include "kfpls/random.hpp"

#include <chrono>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace kfpls {

struct PipelineConfig {
    KernelSpec init = KernelSpec::make({KernelFamily::gaussian});
    FlowConfig flow;
    bool optimize = true;
    // final number of latent variables; 0 runs the line search over [lv_min, lv_max]
    Index n_lv = 0;
    Index lv_min = 1;
    Index lv_max = 20;
    bool baselines = true;
    std::uint64_t seed = 0;
};

struct LvSearch {
    std::vector<Index> n_lv;
    std::vector<double> score;
    Index best = 0;
};

namespace detail {

struct HoldoutSplit {
    std::vector<Index> fit, check;
};

inline HoldoutSplit holdout_fifth(Index n, std::uint64_t seed) {
    auto [fit, check] = split_indices(n, derive_seed(seed, 11), 0.8);
    return {fit, check};
}

// Higher is better. Classification compares accuracy first and the one-hot
// residual second, so ties in accuracy favour sharper scores.
inline std::pair<double, double> holdout_score(Task task, const Matrix& y_check, const Matrix& y_pred,
                                               const Matrix& y_fit) {
    if (task == Task::classification) {
        return {accuracy(argmax_rows(y_check), argmax_rows(y_pred)), -rmse(y_check, y_pred)};
    }
    return {q2(y_check, y_pred, y_fit), 0.0};
}

} // namespace detail

/// Chooses the number of latent variables for `spec` by fitting on four
/// fifths of the calibration rows and scoring on the rest. Ties go to the
/// smaller model.
inline LvSearch search_n_lv(const Matrix& x, const Matrix& y, Task task, const KernelSpec& spec, Index lv_min,
                            Index lv_max, std::uint64_t seed) {
    detail::require(lv_min >= 1 && lv_max >= lv_min, ErrorCategory::config, "n_lv search range is empty");
    const auto split = detail::holdout_fifth(x.rows(), seed);
    detail::require(!split.check.empty() && split.fit.size() >= 2, ErrorCategory::invalid_argument,
                    "n_lv search: calibration set too small for a held-out fifth");
    const Matrix xf = detail::take_rows(x, split.fit), yf = detail::take_rows(y, split.fit);
    const Matrix xc = detail::take_rows(x, split.check), yc = detail::take_rows(y, split.check);
    const Index hi = std::min<Index>(lv_max, xf.rows() - 1);
    detail::require(hi >= lv_min, ErrorCategory::config, "n_lv search: lv_min exceeds the fitting subset size");

    LvSearch out;
    std::pair<double, double> best{-std::numeric_limits<double>::infinity(), 0.0};
    for (Index a = lv_min; a <= hi; ++a) {
        const auto model = fit_kpls(xf, yf, a, spec);
        const auto s = detail::holdout_score(task, yc, predict_kpls(model, xc), yf);
        out.n_lv.push_back(a);
        out.score.push_back(s.first);
        if (s > best) {
            best = s;
            out.best = a;
        }
    }
    return out;
}

/// Linear PLS on standardised predictors with centred responses.
struct LinearPls {
    PlsModel pls;
    RowVector y_means;
};

inline LinearPls fit_linear_pls(const Matrix& x, const Matrix& y, Index n_lv) {
    LinearPls m;
    m.y_means = y.colwise().mean();
    m.pls = fit_pls(x, y.rowwise() - m.y_means, n_lv);
    return m;
}

inline Matrix predict_linear_pls(const LinearPls& m, const Matrix& x) {
    Matrix out = predict_pls(m.pls, x);
    out.rowwise() += m.y_means;
    return out;
}

/// Metrics of one model on the test partition, in original response units.
struct ModelEvaluation {
    std::string name;
    Index n_lv = 0;
    EvalReport report;
    // against the noiseless test responses, when the dataset has them
    std::optional<EvalReport> report_true;
    Matrix y_pred;
};

inline ModelEvaluation evaluate_model(const std::string& name, Index n_lv, const Dataset& d,
                                      const Matrix& y_pred_std) {
    ModelEvaluation e;
    e.name = name;
    e.n_lv = n_lv;
    e.y_pred = d.y_scaler.invert(y_pred_std);
    const Matrix y_cal = d.y_scaler.invert(d.y_cal);
    const Matrix y_test = d.y_scaler.invert(d.y_test);
    if (d.task == Task::classification) {
        e.report = evaluate_classification(y_test, e.y_pred, y_cal, d.test_labels(), argmax_rows(e.y_pred));
    } else {
        e.report = evaluate_regression(y_test, e.y_pred, y_cal);
        if (d.y_true_test) {
            e.report_true = evaluate_regression(d.y_scaler.invert(*d.y_true_test), e.y_pred, y_cal);
        }
    }
    return e;
}

struct PipelineResult {
    KplsModel model;
    std::optional<FlowResult> flow;
    std::optional<LvSearch> search;
    ModelEvaluation optimized;
    std::vector<ModelEvaluation> baselines;
    double flow_seconds = 0.0;
    double total_seconds = 0.0;
};

inline PipelineResult run_pipeline(const Dataset& d, const PipelineConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    PipelineResult r;
    KernelSpec spec = cfg.init;
    if (cfg.optimize) {
        FlowConfig fc = cfg.flow;
        fc.seed = derive_seed(cfg.seed, 3);
        r.flow = run_kernel_flows(d.x_cal, d.y_cal, fc, cfg.init);
        spec = r.flow->spec;
    }
    r.flow_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    auto choose_lv = [&](const KernelSpec& s, std::optional<LvSearch>* keep) {
        if (cfg.n_lv > 0) return cfg.n_lv;
        auto found = search_n_lv(d.x_cal, d.y_cal, d.task, s, cfg.lv_min, cfg.lv_max, cfg.seed);
        const Index best = found.best;
        if (keep) *keep = std::move(found);
        return best;
    };

    const Index a = choose_lv(spec, &r.search);
    r.model = fit_kpls(d.x_cal, d.y_cal, a, spec);
    r.optimized = evaluate_model(cfg.optimize ? "kf_kpls" : "kpls", r.model.n_lv(), d, predict_kpls(r.model, d.x_test));

    if (cfg.baselines) {
        const Index lin_lv = std::min<Index>(d.x_cal.cols(), cfg.n_lv > 0 ? cfg.n_lv : d.x_cal.cols());
        const auto lin = fit_linear_pls(d.x_cal, d.y_cal, lin_lv);
        r.baselines.push_back(evaluate_model("pls", lin.pls.n_lv, d, predict_linear_pls(lin, d.x_test)));
        if (cfg.optimize) {
            const Index a0 = choose_lv(cfg.init, nullptr);
            const auto m0 = fit_kpls(d.x_cal, d.y_cal, a0, cfg.init);
            r.baselines.push_back(evaluate_model("kpls_initial", m0.n_lv(), d, predict_kpls(m0, d.x_test)));
        }
    }
    r.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

/// Built-in experiment settings. Cases 1 and 2 generate their data; 3
/// (concrete strength, Cauchy kernel) and 4 (soil moisture, Gaussian kernel)
/// take a user-supplied CSV.
struct CasePreset {
    int id = 1;
    std::string name;
    Task task = Task::regression;
    PipelineConfig config;
    // synthetic data parameters
    Index n = 0;
    double noise = 0.0;
    Index n_classes = 0;
    bool needs_csv = false;
};

inline CasePreset case_preset(int id) {
    CasePreset p;
    p.id = id;
    auto& c = p.config;
    c.flow.n_iter = 500;
    c.flow.n_subsamples = 20;
    c.flow.sub_fraction = 0.5;
    c.flow.n_lv = 20;
    switch (id) {
    case 1:
        p.name = "peaks";
        p.n = 200;
        p.noise = 0.05;
        c.init = KernelSpec::make({KernelFamily::gaussian}, 1.0, 1.0);
        c.flow.batch_fraction = 1.0;
        c.flow.update_rule = UpdateRule::polyak;
        c.flow.learning_rate = 0.1;
        c.flow.momentum = 0.5;
        c.flow.max_step = 0.2;
        break;
    case 2:
        p.name = "circles";
        p.task = Task::classification;
        p.n = 100;
        p.noise = 0.1;
        p.n_classes = 4;
        c.init = KernelSpec::make({KernelFamily::gaussian}, 1.0, 1.0);
        c.flow.batch_fraction = 0.5;
        c.flow.update_rule = UpdateRule::nesterov;
        c.flow.momentum = 0.9;
        c.flow.nesterov_gamma = 0.2;
        c.flow.max_step = 0.3;
        break;
    case 3:
    case 4:
        p.name = id == 3 ? "concrete" : "soil_moisture";
        p.needs_csv = true;
        c.init = KernelSpec::make({id == 3 ? KernelFamily::cauchy : KernelFamily::gaussian}, 1.0, 1.0);
        c.flow.batch_fraction = 0.25;
        c.flow.update_rule = UpdateRule::polyak;
        c.flow.momentum = 0.5;
        c.flow.max_step = 0.2;
        c.lv_max = 30;
        break;
    default:
        throw Error(ErrorCategory::invalid_argument, "unknown case " + std::to_string(id) + " (1, 2, 3, 4)");
    }
    return p;
}

/// Synthetic data of a built-in case (1 or 2).
inline Dataset case_dataset(const CasePreset& p, std::uint64_t seed) {
    detail::require(!p.needs_csv, ErrorCategory::invalid_argument,
                    "case " + std::to_string(p.id) + " needs a CSV file");
    if (p.id == 1) return gen_peaks(p.n, p.noise, seed);
    return gen_circles(p.n, p.n_classes, p.noise, seed);
}

} // namespace kfpls

#endif // KFPLS_PIPELINE_HPP
