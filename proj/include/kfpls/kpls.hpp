#ifndef KFPLS_KPLS_HPP
#define KFPLS_KPLS_HPP

#include "kfpls/kernels.hpp"
#include "kfpls/pls.hpp"
#include "kfpls/types.hpp"

#include <vector>

namespace kfpls {

/// Kernel PLS model. SIMPLS is fitted between the centred ridge Gram and the
/// column-centred responses; `y_means` restores the offset at prediction time.
struct KplsModel {
    KernelSpec spec;
    Matrix x_train;
    CenteringStats stats;
    PlsModel pls;
    RowVector y_means;

    [[nodiscard]] Index n_lv() const { return pls.n_lv; }
    [[nodiscard]] Index n_train() const { return x_train.rows(); }
    [[nodiscard]] Index n_features() const { return x_train.cols(); }
    [[nodiscard]] Index n_responses() const { return y_means.size(); }
};

/// Result of fitting on a precomputed centred Gram; used where the Gram is
/// needed again (the Kernel Flows norm B'KB).
struct CenteredFit {
    PlsModel pls;
    RowVector y_means;
};

inline CenteredFit fit_centered(const Matrix& centered_gram, const Matrix& y, Index n_lv) {
    CenteredFit fit;
    fit.y_means = y.colwise().mean();
    const Matrix yc = y.rowwise() - fit.y_means;
    fit.pls = fit_pls(centered_gram, yc, n_lv);
    return fit;
}

inline KplsModel fit_kpls(const Matrix& x, const Matrix& y, Index n_lv, const KernelSpec& spec) {
    spec.validate();
    detail::require(x.rows() == y.rows(), ErrorCategory::dimension_mismatch,
                    "fit_kpls: X has " + std::to_string(x.rows()) + " rows, Y has " + std::to_string(y.rows()));
    detail::require(x.rows() >= 2, ErrorCategory::invalid_argument, "fit_kpls: need at least 2 samples");
    detail::require(n_lv >= 1 && n_lv <= x.rows(), ErrorCategory::invalid_argument,
                    "fit_kpls: n_lv must be in [1, n]");

    auto centered = center_train(gram_train(spec, x));
    auto fit = fit_centered(centered.gram, y, n_lv);

    KplsModel model;
    model.spec = spec;
    model.x_train = x;
    model.stats = std::move(centered.stats);
    model.pls = std::move(fit.pls);
    model.y_means = std::move(fit.y_means);
    return model;
}

inline Matrix predict_kpls(const KplsModel& model, const Matrix& x_new) {
    detail::require(x_new.cols() == model.n_features(), ErrorCategory::dimension_mismatch,
                    "predict_kpls: expected " + std::to_string(model.n_features()) + " features, got " +
                        std::to_string(x_new.cols()));
    if (x_new.rows() == 0) {
        return Matrix(0, model.n_responses());
    }
    const Matrix kt = gram_test(model.spec, x_new, model.x_train, model.stats);
    Matrix yhat = kt * model.pls.coefficients;
    yhat.rowwise() += model.y_means;
    return yhat;
}

/// Row-wise argmax; ties go to the lowest column index.
inline std::vector<int> argmax_rows(const Matrix& scores) {
    std::vector<int> labels(static_cast<std::size_t>(scores.rows()));
    for (Index i = 0; i < scores.rows(); ++i) {
        Index best = 0;
        for (Index j = 1; j < scores.cols(); ++j) {
            if (scores(i, j) > scores(i, best)) {
                best = j;
            }
        }
        labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return labels;
}

/// PLS-DA decision: zero-based index of the largest predicted column.
inline std::vector<int> classify(const KplsModel& model, const Matrix& x_new) {
    detail::require(model.n_responses() >= 2, ErrorCategory::invalid_argument,
                    "classify: model was not fitted on a one-hot response");
    return argmax_rows(predict_kpls(model, x_new));
}

} // namespace kfpls

#endif // KFPLS_KPLS_HPP
