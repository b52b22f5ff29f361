#ifndef KFPLS_METRICS_HPP
#define KFPLS_METRICS_HPP

#include "kfpls/types.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace kfpls {

inline double rmse(const Matrix& y_true, const Matrix& y_pred) {
    detail::require(y_true.rows() == y_pred.rows() && y_true.cols() == y_pred.cols(),
                    ErrorCategory::dimension_mismatch, "rmse: shapes differ");
    detail::require(y_true.size() > 0, ErrorCategory::invalid_argument, "rmse: empty input");
    return std::sqrt((y_true - y_pred).squaredNorm() / static_cast<double>(y_true.size()));
}

/// RMSE as a percentage of the calibration response range.
inline double nrmse(double rmse_value, double y_cal_min, double y_cal_max) {
    detail::require(y_cal_max > y_cal_min, ErrorCategory::invalid_argument, "nrmse: calibration range is zero");
    return 100.0 * rmse_value / (y_cal_max - y_cal_min);
}

/// Goodness of prediction, 1 - SS_res / sum (y_test - mean(y_cal))^2, with the
/// calibration mean taken per response column.
inline double q2(const Matrix& y_test, const Matrix& y_pred, const Matrix& y_cal) {
    detail::require(y_test.rows() == y_pred.rows() && y_test.cols() == y_pred.cols(),
                    ErrorCategory::dimension_mismatch, "q2: prediction shape differs from test shape");
    detail::require(y_cal.cols() == y_test.cols(), ErrorCategory::dimension_mismatch,
                    "q2: calibration and test responses have different column counts");
    detail::require(y_cal.rows() >= 2 && y_test.rows() >= 1, ErrorCategory::invalid_argument, "q2: too few rows");
    const RowVector mean = y_cal.colwise().mean();
    detail::require((y_cal.rowwise() - mean).squaredNorm() > 0.0, ErrorCategory::invalid_argument,
                    "q2: calibration responses have zero variance");
    const double ss_res = (y_test - y_pred).squaredNorm();
    const double ss_tot = (y_test.rowwise() - mean).squaredNorm();
    detail::require(ss_tot > 0.0, ErrorCategory::invalid_argument, "q2: test responses equal the calibration mean");
    return 1.0 - ss_res / ss_tot;
}

/// The ratio exactly as printed in the source formula: SS_res(test) over the
/// calibration sum of squares. Kept for auditing only.
inline double q2_literal(const Matrix& y_test, const Matrix& y_pred, const Matrix& y_cal) {
    detail::require(y_test.rows() == y_pred.rows() && y_test.cols() == y_pred.cols(),
                    ErrorCategory::dimension_mismatch, "q2_literal: shapes differ");
    const RowVector mean = y_cal.colwise().mean();
    const double ss_cal = (y_cal.rowwise() - mean).squaredNorm();
    detail::require(ss_cal > 0.0, ErrorCategory::invalid_argument, "q2_literal: calibration variance is zero");
    return (y_test - y_pred).squaredNorm() / ss_cal;
}

inline double accuracy(const std::vector<int>& truth, const std::vector<int>& predicted) {
    detail::require(truth.size() == predicted.size(), ErrorCategory::dimension_mismatch,
                    "accuracy: label vectors differ in length");
    detail::require(!truth.empty(), ErrorCategory::invalid_argument, "accuracy: empty input");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        hits += truth[i] == predicted[i] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

struct EvalReport {
    double rmse = 0.0;
    double nrmse_percent = 0.0;
    double q2 = 0.0;
    std::optional<double> accuracy;
    Index n_test = 0;
    Index n_cal = 0;
    double y_range_cal = 0.0;
};

/// Regression report; responses must be on one common scale.
inline EvalReport evaluate_regression(const Matrix& y_test, const Matrix& y_pred, const Matrix& y_cal) {
    EvalReport r;
    r.rmse = rmse(y_test, y_pred);
    r.y_range_cal = y_cal.maxCoeff() - y_cal.minCoeff();
    r.nrmse_percent = nrmse(r.rmse, y_cal.minCoeff(), y_cal.maxCoeff());
    r.q2 = q2(y_test, y_pred, y_cal);
    r.n_test = y_test.rows();
    r.n_cal = y_cal.rows();
    return r;
}

/// Classification report: accuracy plus the regression metrics of the
/// one-hot predictions.
inline EvalReport evaluate_classification(const Matrix& y_test, const Matrix& y_pred, const Matrix& y_cal,
                                          const std::vector<int>& truth, const std::vector<int>& predicted) {
    EvalReport r = evaluate_regression(y_test, y_pred, y_cal);
    r.accuracy = accuracy(truth, predicted);
    return r;
}

} // namespace kfpls

#endif // KFPLS_METRICS_HPP
