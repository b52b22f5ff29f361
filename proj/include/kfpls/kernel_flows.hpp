#ifndef KFPLS_KERNEL_FLOWS_HPP
#define KFPLS_KERNEL_FLOWS_HPP

// Kernel Flows for kernel PLS: the kernel parameters are moved along the
// gradient of the cross-validation loss
//
//     rho = 1 - tr(Bs' Ks Bs) / tr(Bb' Kb Bb),
//
// where (Bb, Kb) come from a K-PLS fit on a random minibatch and (Bs, Ks) from
// a fit on a random half (or other fraction) of that minibatch. The gradient
// is taken by central differences in log-parameter space with the sampled
// index sets held fixed.

#include "kfpls/kernels.hpp"
#include "kfpls/kpls.hpp"
#include "kfpls/random.hpp"
#include "kfpls/types.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kfpls {

enum class UpdateRule { vanilla, polyak, nesterov };

inline std::string_view to_string(UpdateRule r) {
    switch (r) {
    case UpdateRule::vanilla: return "vanilla";
    case UpdateRule::polyak: return "polyak";
    case UpdateRule::nesterov: return "nesterov";
    }
    return "unknown";
}

inline UpdateRule parse_update_rule(std::string_view s) {
    if (s == "vanilla") return UpdateRule::vanilla;
    if (s == "polyak") return UpdateRule::polyak;
    if (s == "nesterov") return UpdateRule::nesterov;
    throw Error(ErrorCategory::parse, "unknown update rule '" + std::string(s) + "' (vanilla, polyak, nesterov)");
}

inline constexpr Index kAutoFlowLv = 20;

struct FlowConfig {
    Index n_iter = 500;
    Index n_subsamples = 20;
    double batch_fraction = 0.5;
    double sub_fraction = 0.5;
    // latent variables of the K-PLS fits inside the loss; 0 picks
    // min(kAutoFlowLv, sub-batch size - 1)
    Index n_lv = 0;
    double learning_rate = 0.1;
    double momentum = 0.5;
    double nesterov_gamma = 0.1;
    UpdateRule update_rule = UpdateRule::polyak;
    std::uint64_t seed = 0;
    Index smoothing_window = 20;
    double tolerance = 1e-5;
    // 0 runs all n_iter iterations
    Index patience = 50;
    // alpha_t = alpha / sqrt(t + 1) when set
    bool lr_decay = false;
    // sample minibatches and sub-batches proportionally per class (one-hot Y)
    bool stratified = false;
    double fd_step = 1e-4;
    // largest change of any log-parameter in one update; 0 disables the cap
    double max_step = 0.2;

    [[nodiscard]] Index batch_size(Index n) const {
        return std::min(n, static_cast<Index>(std::ceil(batch_fraction * static_cast<double>(n))));
    }
    [[nodiscard]] Index sub_size(Index n) const {
        const Index b = batch_size(n);
        return std::min(b, static_cast<Index>(std::ceil(sub_fraction * static_cast<double>(b))));
    }

    [[nodiscard]] Index resolved_lv(Index n) const {
        return n_lv > 0 ? n_lv : std::max<Index>(1, std::min<Index>(kAutoFlowLv, sub_size(n) - 1));
    }

    void validate(Index n) const {
        using detail::require;
        constexpr auto cfg = ErrorCategory::config;
        require(n_iter >= 1, cfg, "n_iter must be >= 1");
        require(n_subsamples >= 1, cfg, "n_subsamples must be >= 1");
        require(batch_fraction > 0.0 && batch_fraction <= 1.0, cfg, "batch_fraction must be in (0, 1]");
        require(sub_fraction > 0.0 && sub_fraction <= 1.0, cfg, "sub_fraction must be in (0, 1]");
        require(n_lv >= 0, cfg, "n_lv must be >= 0 (0 = automatic)");
        require(learning_rate > 0.0, cfg, "learning_rate must be > 0");
        require(momentum >= 0.0 && momentum <= 1.0, cfg, "momentum must be in [0, 1]");
        require(nesterov_gamma > 0.0, cfg, "nesterov_gamma must be > 0");
        require(smoothing_window >= 1, cfg, "smoothing_window must be >= 1");
        require(tolerance >= 0.0, cfg, "tolerance must be >= 0");
        require(patience >= 0, cfg, "patience must be >= 0");
        require(fd_step > 0.0, cfg, "fd_step must be > 0");
        require(max_step >= 0.0, cfg, "max_step must be >= 0");
        require(sub_size(n) >= 2, cfg, "sub-batch has fewer than 2 samples");
        require(sub_size(n) >= resolved_lv(n) + 1, cfg,
                "sub-batch of " + std::to_string(sub_size(n)) + " samples cannot support " +
                    std::to_string(resolved_lv(n)) + " latent variables (need at least n_lv + 1)");
    }
};

/// One minibatch (indices into the data) and its sub-batches (indices into
/// the minibatch).
struct BatchSample {
    std::vector<Index> batch;
    std::vector<std::vector<Index>> subs;
};

/// tr(B' K B) of a K-PLS fit on a centred ridge Gram.
inline double kpls_norm(const Matrix& centered_gram, const Matrix& y, Index n_lv) {
    const auto fit = fit_centered(centered_gram, y, n_lv);
    const Matrix& b = fit.pls.coefficients;
    return (centered_gram * b).cwiseProduct(b).sum();
}

namespace detail {

inline double loss_from_norms(double norm_sub, double norm_batch) {
    require(std::isfinite(norm_batch) && norm_batch > 0.0, ErrorCategory::degenerate,
            "kernel flows: minibatch norm is zero or non-finite (degenerate kernel)");
    require(std::isfinite(norm_sub), ErrorCategory::degenerate, "kernel flows: non-finite sub-batch norm");
    return 1.0 - norm_sub / norm_batch;
}

} // namespace detail

/// Loss of one (minibatch, sub-batch) pair; each side gets its own Gram,
/// centring and K-PLS fit.
inline double kf_loss(const Matrix& xb, const Matrix& yb, const Matrix& xs, const Matrix& ys, Index n_lv,
                      const KernelSpec& spec) {
    detail::require(xb.rows() == yb.rows() && xs.rows() == ys.rows(), ErrorCategory::dimension_mismatch,
                    "kf_loss: X/Y row counts differ");
    detail::require(xb.cols() == xs.cols() && yb.cols() == ys.cols(), ErrorCategory::dimension_mismatch,
                    "kf_loss: minibatch and sub-batch shapes differ");
    const double nb = kpls_norm(center_train(gram_train(spec, xb)).gram, yb, n_lv);
    const double ns = kpls_norm(center_train(gram_train(spec, xs)).gram, ys, n_lv);
    return detail::loss_from_norms(ns, nb);
}

/// Averaged loss over a fixed set of sub-batches of one minibatch, as a
/// function of theta. Pairwise distances are computed once.
class BatchLoss {
public:
    BatchLoss(Matrix xb, Matrix yb, std::vector<std::vector<Index>> subs, Index n_lv, KernelSpec base)
        : yb_(std::move(yb)), subs_(std::move(subs)), n_lv_(n_lv), base_(std::move(base)) {
        detail::require(xb.rows() == yb_.rows(), ErrorCategory::dimension_mismatch, "BatchLoss: X/Y rows differ");
        detail::require(!subs_.empty(), ErrorCategory::invalid_argument, "BatchLoss: no sub-batches");
        d2_batch_ = squared_distances(xb);
        for (const auto& s : subs_) {
            d2_subs_.push_back(d2_batch_(s, s));
            y_subs_.push_back(detail::take_rows(yb_, s));
        }
    }

    [[nodiscard]] std::vector<double> per_subsample(const Vector& theta) const {
        const KernelSpec spec = base_.with_theta(theta);
        const double nb = kpls_norm(center_train(gram_from_distances(spec, d2_batch_)).gram, yb_, n_lv_);
        std::vector<double> out;
        out.reserve(subs_.size());
        for (std::size_t j = 0; j < subs_.size(); ++j) {
            const double ns = kpls_norm(center_train(gram_from_distances(spec, d2_subs_[j])).gram, y_subs_[j], n_lv_);
            out.push_back(detail::loss_from_norms(ns, nb));
        }
        return out;
    }

    double operator()(const Vector& theta) const {
        const auto l = per_subsample(theta);
        return std::accumulate(l.begin(), l.end(), 0.0) / static_cast<double>(l.size());
    }

private:
    Matrix yb_;
    std::vector<std::vector<Index>> subs_;
    Index n_lv_;
    KernelSpec base_;
    Matrix d2_batch_;
    std::vector<Matrix> d2_subs_;
    std::vector<Matrix> y_subs_;
};

/// Central-difference gradient of `f` at `theta`. A coordinate whose probes
/// fail (non-finite or degenerate) is retried once with half the step.
template <typename F>
Vector central_difference(F&& f, const Vector& theta, double h) {
    Vector g(theta.size());
    for (Index k = 0; k < theta.size(); ++k) {
        double step = h;
        bool ok = false;
        for (int attempt = 0; attempt < 2 && !ok; ++attempt, step *= 0.5) {
            Vector tp = theta, tm = theta;
            tp(k) += step;
            tm(k) -= step;
            double fp = 0.0, fm = 0.0;
            try {
                fp = f(tp);
                fm = f(tm);
            } catch (const Error& e) {
                if (e.category() != ErrorCategory::degenerate && e.category() != ErrorCategory::rank_exhausted &&
                    e.category() != ErrorCategory::ill_conditioned) {
                    throw;
                }
                continue;
            }
            if (std::isfinite(fp) && std::isfinite(fm)) {
                g(k) = (fp - fm) / (2.0 * step);
                ok = true;
            }
        }
        detail::require(ok, ErrorCategory::non_finite,
                        "finite-difference gradient: loss not finite around coordinate " + std::to_string(k));
    }
    return g;
}

using ProbeObserver = std::function<void(const Vector& theta, const std::vector<std::vector<Index>>& subs)>;

/// Gradient of the averaged loss w.r.t. log-theta with `subs` held fixed for
/// every probe.
inline Vector kf_gradient(const Matrix& xb, const Matrix& yb, const std::vector<std::vector<Index>>& subs, Index n_lv,
                          const KernelSpec& spec, double h = 1e-4, const ProbeObserver& observer = {}) {
    const BatchLoss loss(xb, yb, subs, n_lv, spec);
    return central_difference(
        [&](const Vector& t) {
            if (observer) observer(t, subs);
            return loss(t);
        },
        spec.theta(), h);
}

struct StepParams {
    double learning_rate = 0.1;
    double momentum = 0.0;
    double nesterov_gamma = 0.1;
};

/// Where the gradient has to be evaluated for this rule: theta itself, or the
/// Nesterov look-ahead theta + mu (theta - prev).
inline Vector gradient_point(const Vector& theta, const Vector& prev, UpdateRule rule, double momentum) {
    if (rule == UpdateRule::nesterov) {
        return theta + momentum * (theta - prev);
    }
    return theta;
}

/// One parameter update given the gradient taken at gradient_point(...).
///   vanilla:  theta - alpha g
///   polyak:   theta - alpha g + mu (theta - prev)
///   nesterov: theta + mu (theta - prev) - gamma g
inline Vector update_theta(const Vector& theta, const Vector& prev, const Vector& grad, UpdateRule rule,
                           const StepParams& p) {
    detail::require(theta.size() == prev.size() && theta.size() == grad.size(), ErrorCategory::dimension_mismatch,
                    "update_theta: shape mismatch");
    switch (rule) {
    case UpdateRule::vanilla: return theta - p.learning_rate * grad;
    case UpdateRule::polyak: return theta - p.learning_rate * grad + p.momentum * (theta - prev);
    case UpdateRule::nesterov: return theta + p.momentum * (theta - prev) - p.nesterov_gamma * grad;
    }
    return theta;
}

inline Vector update_theta(const Vector& theta, const Vector& prev, UpdateRule rule, const StepParams& p,
                           const std::function<Vector(const Vector&)>& gradient_at) {
    return update_theta(theta, prev, gradient_at(gradient_point(theta, prev, rule, p.momentum)), rule, p);
}

struct FlowRecord {
    Index iteration = 0;
    Vector theta;
    double loss = 0.0;
    double smoothed_loss = 0.0;
    Vector gradient;
    double gradient_norm = 0.0;
};

struct FlowTrace {
    std::vector<std::string> parameter_names;
    std::vector<FlowRecord> records;
    Vector best_theta;
    double best_smoothed_loss = 0.0;
    Index best_iteration = 0;
    Index iterations_run = 0;
    Index skipped = 0;
    bool converged = false;
};

struct FlowResult {
    KernelSpec spec;
    FlowTrace trace;
};

struct FlowHooks {
    // called for every loss evaluation of the gradient with the index sets it used
    ProbeObserver on_probe;
};

namespace detail {

inline std::vector<int> class_labels(const Matrix& y) {
    return argmax_rows(y);
}

inline BatchSample draw_sample(Index n, const FlowConfig& cfg, const std::vector<int>* labels, Rng& rng) {
    BatchSample s;
    const Index nb = cfg.batch_size(n);
    const Index ns = cfg.sub_size(n);
    if (labels) {
        s.batch = sample_stratified(*labels, nb, rng);
    } else {
        s.batch = sample_without_replacement(n, nb, rng);
    }
    std::vector<int> batch_labels;
    if (labels) {
        for (Index i : s.batch) batch_labels.push_back((*labels)[static_cast<std::size_t>(i)]);
    }
    for (Index j = 0; j < cfg.n_subsamples; ++j) {
        if (ns == nb) {
            std::vector<Index> all(static_cast<std::size_t>(nb));
            std::iota(all.begin(), all.end(), Index{0});
            s.subs.push_back(std::move(all));
        } else if (labels) {
            s.subs.push_back(sample_stratified(batch_labels, ns, rng));
        } else {
            s.subs.push_back(sample_without_replacement(nb, ns, rng));
        }
    }
    return s;
}

inline bool recoverable(const Error& e) {
    return e.category() == ErrorCategory::degenerate || e.category() == ErrorCategory::rank_exhausted ||
           e.category() == ErrorCategory::ill_conditioned || e.category() == ErrorCategory::non_finite;
}

} // namespace detail

/// Stochastic Kernel Flows optimisation of `spec0` on standardised (X, Y).
/// Returns the kernel at the best moving-average loss together with the trace.
inline FlowResult run_kernel_flows(const Matrix& x, const Matrix& y, const FlowConfig& cfg, const KernelSpec& spec0,
                                   const FlowHooks& hooks = {}) {
    detail::require(x.rows() == y.rows(), ErrorCategory::dimension_mismatch, "run_kernel_flows: X/Y rows differ");
    detail::require(detail::all_finite(x) && detail::all_finite(y), ErrorCategory::non_finite,
                    "run_kernel_flows: non-finite input");
    spec0.validate();
    cfg.validate(x.rows());
    detail::require(!cfg.stratified || y.cols() >= 2, ErrorCategory::config,
                    "stratified sampling needs a one-hot (multi-column) response");

    const Index n = x.rows();
    const Index n_lv = cfg.resolved_lv(n);
    const std::vector<int> labels = cfg.stratified ? detail::class_labels(y) : std::vector<int>{};
    const std::vector<int>* label_ptr = cfg.stratified ? &labels : nullptr;

    Rng rng(cfg.seed);
    FlowTrace trace;
    trace.parameter_names = spec0.parameter_names();
    trace.best_smoothed_loss = std::numeric_limits<double>::infinity();

    Vector theta = spec0.theta();
    Vector prev = theta;
    Index stall = 0;

    for (Index it = 0; it < cfg.n_iter; ++it) {
        trace.iterations_run = it + 1;

        StepParams step{cfg.learning_rate, cfg.momentum, cfg.nesterov_gamma};
        if (cfg.lr_decay) {
            const double scale = 1.0 / std::sqrt(static_cast<double>(it + 1));
            step.learning_rate *= scale;
            step.nesterov_gamma *= scale;
        }

        bool done = false;
        double loss = 0.0;
        Vector grad;
        for (int attempt = 0; attempt < 2 && !done; ++attempt) {
            const BatchSample sample = detail::draw_sample(n, cfg, label_ptr, rng);
            try {
                const BatchLoss objective(detail::take_rows(x, sample.batch), detail::take_rows(y, sample.batch),
                                          sample.subs, n_lv, spec0);
                loss = objective(theta);
                if (!std::isfinite(loss)) {
                    continue;
                }
                const Vector at = gradient_point(theta, prev, cfg.update_rule, cfg.momentum);
                grad = central_difference(
                    [&](const Vector& t) {
                        if (hooks.on_probe) hooks.on_probe(t, sample.subs);
                        return objective(t);
                    },
                    at, cfg.fd_step);
                done = true;
            } catch (const Error& e) {
                if (!detail::recoverable(e)) {
                    throw;
                }
            }
        }
        if (!done) {
            ++trace.skipped;
            detail::require(2 * trace.skipped <= cfg.n_iter, ErrorCategory::degenerate,
                            "kernel flows aborted: " + std::to_string(trace.skipped) + " of " +
                                std::to_string(cfg.n_iter) +
                                " iterations skipped for degenerate batches (check n_lv, fractions and kernel)");
            continue;
        }

        FlowRecord rec;
        rec.iteration = it;
        rec.theta = theta;
        rec.loss = loss;
        rec.gradient = grad;
        rec.gradient_norm = grad.norm();
        trace.records.push_back(std::move(rec));

        // Moving average over the trailing window of recorded losses.
        const auto nrec = static_cast<Index>(trace.records.size());
        const Index w = std::min(cfg.smoothing_window, nrec);
        double sum = 0.0;
        Vector theta_sum = Vector::Zero(theta.size());
        for (Index k = nrec - w; k < nrec; ++k) {
            sum += trace.records[static_cast<std::size_t>(k)].loss;
            theta_sum += trace.records[static_cast<std::size_t>(k)].theta;
        }
        const double smoothed = sum / static_cast<double>(w);
        trace.records.back().smoothed_loss = smoothed;

        if (smoothed < trace.best_smoothed_loss) {
            const bool material = smoothed < trace.best_smoothed_loss - cfg.tolerance;
            trace.best_smoothed_loss = smoothed;
            trace.best_theta = theta_sum / static_cast<double>(w);
            trace.best_iteration = it;
            stall = material ? 0 : stall + 1;
        } else {
            ++stall;
        }
        if (cfg.patience > 0 && nrec >= cfg.smoothing_window && stall >= cfg.patience) {
            trace.converged = true;
        }

        Vector next = update_theta(theta, prev, grad, cfg.update_rule, step);
        if (cfg.max_step > 0.0) {
            next = theta + (next - theta).cwiseMax(-cfg.max_step).cwiseMin(cfg.max_step);
        }
        detail::require(detail::all_finite(next), ErrorCategory::non_finite,
                        "kernel flows: parameters diverged at iteration " + std::to_string(it));
        prev = theta;
        theta = next;

        if (trace.converged) {
            break;
        }
    }

    detail::require(!trace.records.empty(), ErrorCategory::degenerate, "kernel flows: no iteration completed");
    return {spec0.with_theta(trace.best_theta), std::move(trace)};
}

struct SurfacePoint {
    Vector theta;
    double mean = 0.0;
    double std = 0.0;
};

/// Averaged loss over a grid of parameter vectors. Each point uses `repeats`
/// independent minibatches, each averaged over cfg.n_subsamples sub-batches;
/// `std` is the sample standard deviation across repeats.
inline std::vector<SurfacePoint> loss_surface(const Matrix& x, const Matrix& y, const std::vector<Vector>& grid,
                                              const FlowConfig& cfg, const KernelSpec& base, Index repeats = 5) {
    detail::require(!grid.empty(), ErrorCategory::invalid_argument, "loss_surface: empty grid");
    detail::require(repeats >= 1, ErrorCategory::invalid_argument, "loss_surface: repeats must be >= 1");
    cfg.validate(x.rows());
    const std::vector<int> labels = cfg.stratified ? detail::class_labels(y) : std::vector<int>{};

    std::vector<SurfacePoint> out;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        Rng rng(derive_seed(cfg.seed, g));
        std::vector<double> values;
        for (Index r = 0; r < repeats; ++r) {
            const auto sample = detail::draw_sample(x.rows(), cfg, cfg.stratified ? &labels : nullptr, rng);
            const BatchLoss objective(detail::take_rows(x, sample.batch), detail::take_rows(y, sample.batch),
                                      sample.subs, cfg.resolved_lv(x.rows()), base);
            try {
                values.push_back(objective(grid[g]));
            } catch (const Error& e) {
                if (!detail::recoverable(e)) throw;
                values.push_back(std::numeric_limits<double>::quiet_NaN());
            }
        }
        SurfacePoint p;
        p.theta = grid[g];
        p.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
        double ss = 0.0;
        for (double v : values) ss += (v - p.mean) * (v - p.mean);
        p.std = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
        out.push_back(std::move(p));
    }
    return out;
}

} // namespace kfpls

#endif // KFPLS_KERNEL_FLOWS_HPP
