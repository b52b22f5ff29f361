#ifndef KFPLS_EXPERIMENTS_HPP
#define KFPLS_EXPERIMENTS_HPP

// Sensitivity sweeps and loss maps as plain numeric tables.

#include "kfpls/io.hpp"
#include "kfpls/pipeline.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace kfpls {

enum class SweepAxis { n_lv, noise, learning_rate, n_subsamples, init_theta };

inline std::string_view to_string(SweepAxis a) {
    switch (a) {
    case SweepAxis::n_lv: return "n_lv";
    case SweepAxis::noise: return "noise";
    case SweepAxis::learning_rate: return "learning_rate";
    case SweepAxis::n_subsamples: return "n_subsamples";
    case SweepAxis::init_theta: return "init_theta";
    }
    return "unknown";
}

inline SweepAxis parse_sweep_axis(std::string_view s) {
    for (auto a : {SweepAxis::n_lv, SweepAxis::noise, SweepAxis::learning_rate, SweepAxis::n_subsamples,
                   SweepAxis::init_theta}) {
        if (s == to_string(a)) return a;
    }
    throw Error(ErrorCategory::invalid_argument,
                "unknown sweep axis '" + std::string(s) + "' (n_lv, noise, learning_rate, n_subsamples, init_theta)");
}

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    [[nodiscard]] double at(std::size_t row, const std::string& column) const {
        for (std::size_t j = 0; j < columns.size(); ++j) {
            if (columns[j] == column) return rows.at(row).at(j);
        }
        throw Error(ErrorCategory::invalid_argument, "table has no column '" + column + "'");
    }

    void write_csv(std::ostream& out) const {
        CsvWriter w(out);
        w.header(columns);
        for (const auto& r : rows) w.row(r);
    }
};

/// Standard deviation of the last `count` raw losses of a trace.
inline double tail_loss_std(const FlowTrace& t, std::size_t count = 100) {
    const auto& r = t.records;
    const std::size_t m = std::min(count, r.size());
    if (m < 2) return std::numeric_limits<double>::quiet_NaN();
    double mean = 0.0;
    for (std::size_t i = r.size() - m; i < r.size(); ++i) mean += r[i].loss;
    mean /= static_cast<double>(m);
    double ss = 0.0;
    for (std::size_t i = r.size() - m; i < r.size(); ++i) ss += (r[i].loss - mean) * (r[i].loss - mean);
    return std::sqrt(ss / static_cast<double>(m - 1));
}

/// What a sweep runs on. The noise axis regenerates the synthetic data of
/// `preset` at every grid point with the same data seed, so only the noise
/// amplitude changes between rows.
struct SweepInput {
    PipelineConfig config;
    Dataset data;
    const CasePreset* preset = nullptr;
    std::uint64_t data_seed = 0;
};

namespace detail {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline std::vector<std::string> metric_columns() {
    return {"n_lv", "q2", "rmse", "nrmse_percent", "accuracy", "q2_true", "rmse_true", "nrmse_true_percent"};
}

inline std::vector<double> metric_values(const ModelEvaluation& e) {
    const auto& r = e.report;
    std::vector<double> v = {static_cast<double>(e.n_lv), r.q2, r.rmse, r.nrmse_percent, r.accuracy.value_or(kNaN)};
    if (e.report_true) {
        v.insert(v.end(), {e.report_true->q2, e.report_true->rmse, e.report_true->nrmse_percent});
    } else {
        v.insert(v.end(), {kNaN, kNaN, kNaN});
    }
    return v;
}

} // namespace detail

/// One row per grid value, in grid order. Every point except on the n_lv
/// axis runs the whole pipeline with its own seed derived from `root_seed`.
/// The n_lv axis optimises the kernel once and refits at each grid value;
/// it also reports linear PLS at the same number of components.
inline Table run_sweep(SweepAxis axis, const std::vector<double>& grid, const SweepInput& in,
                       std::uint64_t root_seed) {
    detail::require(!grid.empty(), ErrorCategory::invalid_argument, "sweep: empty grid");
    Table t;
    t.columns = {"value"};
    const auto metrics = detail::metric_columns();
    t.columns.insert(t.columns.end(), metrics.begin(), metrics.end());

    if (axis == SweepAxis::n_lv) {
        for (double v : grid) {
            detail::require(v >= 1 && v == std::floor(v), ErrorCategory::invalid_argument,
                            "sweep: n_lv values must be positive integers");
        }
        PipelineConfig cfg = in.config;
        cfg.seed = root_seed;
        cfg.baselines = false;
        cfg.n_lv = 1;
        const auto base = run_pipeline(in.data, cfg);
        const KernelSpec spec = base.model.spec;
        const auto names = spec.parameter_names();
        t.columns.insert(t.columns.end(), {"pls_n_lv", "pls_q2", "pls_q2_true", "pls_accuracy"});
        t.columns.insert(t.columns.end(), names.begin(), names.end());
        const Vector nat = spec.natural();
        for (double v : grid) {
            const auto a = static_cast<Index>(v);
            const auto m = fit_kpls(in.data.x_cal, in.data.y_cal, a, spec);
            const auto e = evaluate_model("kf_kpls", m.n_lv(), in.data, predict_kpls(m, in.data.x_test));
            const auto lin = fit_linear_pls(in.data.x_cal, in.data.y_cal, std::min<Index>(a, in.data.x_cal.cols()));
            const auto el = evaluate_model("pls", lin.pls.n_lv, in.data, predict_linear_pls(lin, in.data.x_test));
            std::vector<double> row = {v};
            const auto mv = detail::metric_values(e);
            row.insert(row.end(), mv.begin(), mv.end());
            row.insert(row.end(), {static_cast<double>(el.n_lv), el.report.q2,
                                   el.report_true ? el.report_true->q2 : detail::kNaN,
                                   el.report.accuracy.value_or(detail::kNaN)});
            for (Index k = 0; k < nat.size(); ++k) row.push_back(nat(k));
            t.rows.push_back(std::move(row));
        }
        return t;
    }

    if (axis == SweepAxis::noise) {
        detail::require(in.preset && in.preset->id == 1, ErrorCategory::invalid_argument,
                        "sweep: the noise axis needs the synthetic regression case (case 1)");
        for (double v : grid) {
            detail::require(v >= 0.0, ErrorCategory::invalid_argument, "sweep: noise values must be >= 0");
        }
    }

    const auto names = in.config.init.parameter_names();
    t.columns.insert(t.columns.end(), {"iterations", "converged", "best_smoothed_loss", "loss_std_last100"});
    t.columns.insert(t.columns.end(), names.begin(), names.end());

    for (std::size_t g = 0; g < grid.size(); ++g) {
        const double v = grid[g];
        PipelineConfig cfg = in.config;
        cfg.seed = derive_seed(root_seed, g + 1);
        cfg.baselines = false;
        Dataset noisy;
        const Dataset* data = &in.data;
        switch (axis) {
        case SweepAxis::noise:
            noisy = gen_peaks(in.preset->n, v, in.data_seed);
            data = &noisy;
            break;
        case SweepAxis::learning_rate:
            cfg.flow.learning_rate = v;
            cfg.flow.nesterov_gamma = v;
            break;
        case SweepAxis::n_subsamples:
            detail::require(v >= 1 && v == std::floor(v), ErrorCategory::invalid_argument,
                            "sweep: n_subsamples values must be positive integers");
            cfg.flow.n_subsamples = static_cast<Index>(v);
            break;
        case SweepAxis::init_theta:
            detail::require(v > 0.0, ErrorCategory::invalid_argument, "sweep: init_theta values must be > 0");
            cfg.init = KernelSpec::make(cfg.init.families, v, v);
            break;
        case SweepAxis::n_lv: break;
        }
        cfg.optimize = true;
        const auto r = run_pipeline(*data, cfg);
        std::vector<double> row = {v};
        const auto mv = detail::metric_values(r.optimized);
        row.insert(row.end(), mv.begin(), mv.end());
        const auto& tr = r.flow->trace;
        row.insert(row.end(), {static_cast<double>(tr.iterations_run), tr.converged ? 1.0 : 0.0,
                               tr.best_smoothed_loss, tail_loss_std(tr)});
        const Vector nat = r.model.spec.natural();
        for (Index k = 0; k < nat.size(); ++k) row.push_back(nat(k));
        t.rows.push_back(std::move(row));
    }
    return t;
}

/// Long-format loss map over (sigma, delta). With several families every
/// sigma is set to the grid value and the weights stay as in `base`.
inline Table loss_surface_table(const Matrix& x, const Matrix& y, const std::vector<double>& sigmas,
                                const std::vector<double>& deltas, const FlowConfig& cfg, const KernelSpec& base,
                                Index repeats) {
    detail::require(!sigmas.empty() && !deltas.empty(), ErrorCategory::invalid_argument,
                    "loss surface: sigma and delta grids must be non-empty");
    std::vector<Vector> grid;
    for (double s : sigmas) {
        for (double d : deltas) {
            detail::require(s > 0.0 && d > 0.0, ErrorCategory::invalid_argument,
                            "loss surface: grid values must be > 0");
            KernelSpec k = base;
            for (auto& ls : k.log_sigma) ls = std::log(s);
            k.log_delta = std::log(d);
            grid.push_back(k.theta());
        }
    }
    const auto points = loss_surface(x, y, grid, cfg, base, repeats);
    Table t;
    t.columns = {"sigma", "delta", "mean", "std"};
    std::size_t g = 0;
    for (double s : sigmas) {
        for (double d : deltas) {
            t.rows.push_back({s, d, points[g].mean, points[g].std});
            ++g;
        }
    }
    return t;
}

} // namespace kfpls

#endif // KFPLS_EXPERIMENTS_HPP
