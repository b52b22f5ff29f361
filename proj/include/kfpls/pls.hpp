#ifndef KFPLS_PLS_HPP
#define KFPLS_PLS_HPP

// SIMPLS: latent variables are extracted from the cross-covariance C = Y'X,
// which is deflated against the span of the accumulated X loadings.

#include "kfpls/types.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <string>
#include <vector>

namespace kfpls {

struct PlsModel {
    Matrix weights;      // W, p x a
    Matrix x_loadings;   // P, p x a
    Matrix y_loadings;   // Q, m x a
    Matrix x_scores;     // T, n x a
    Matrix y_scores;     // U, n x a
    Matrix coefficients; // B, p x m
    Index n_lv = 0;
    Index requested_lv = 0;
    // Set when the request exceeded min(n, p).
    bool clamped = false;
    // Set when extraction stopped before reaching the (clamped) request.
    bool stopped_early = false;

    [[nodiscard]] Index n_features() const { return coefficients.rows(); }
    [[nodiscard]] Index n_responses() const { return coefficients.cols(); }
};

/// Early-stop threshold on t't, scaled by the number of rows.
inline constexpr double kScoreNormFloor = 1e-12;
/// Largest accepted condition number of P'W.
inline constexpr double kMaxConditionNumber = 1e12;

/// Dominant right singular direction of `c` (m x p), unit length, with the
/// largest-magnitude entry made positive. Throws rank_exhausted when `c` is
/// identically zero.
inline Vector first_pc(const Matrix& c) {
    detail::require(c.size() > 0, ErrorCategory::invalid_argument, "first_pc: empty matrix");
    detail::require(detail::all_finite(c), ErrorCategory::non_finite, "first_pc: non-finite entries");
    detail::require(c.cwiseAbs().maxCoeff() > 0.0, ErrorCategory::rank_exhausted,
                    "first_pc: covariance matrix is all zero");

    Vector w;
    if (c.rows() == 1) {
        w = c.row(0).transpose() / c.row(0).norm();
    } else {
        Eigen::JacobiSVD<Matrix> svd(c, Eigen::ComputeThinV);
        w = svd.matrixV().col(0);
        w /= w.norm();
    }

    Index arg = 0;
    w.cwiseAbs().maxCoeff(&arg);
    if (w(arg) < 0.0) {
        w = -w;
    }
    return w;
}

/// Removes the column space of `loadings` (p x a) from the rows of `c`
/// (m x p): C <- C - C P (P'P)^-1 P'. Afterwards C P ~ 0.
inline Matrix deflate_covariance(const Matrix& c, const Matrix& loadings) {
    if (loadings.cols() == 0) {
        return c;
    }
    // P (P'P)^-1 P' equals QQ' for the thin Q factor of P.
    Eigen::HouseholderQR<Matrix> qr(loadings);
    const Matrix q = qr.householderQ() * Matrix::Identity(loadings.rows(), loadings.cols());
    return c - (c * q) * q.transpose();
}

namespace detail {

inline Matrix regression_coefficients(const Matrix& w, const Matrix& p, const Matrix& q) {
    const Matrix pw = p.transpose() * w;
    Eigen::JacobiSVD<Matrix> svd(pw);
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    require(smin > 0.0 && s(0) / smin <= kMaxConditionNumber, ErrorCategory::ill_conditioned,
            "SIMPLS: P'W is singular or ill-conditioned");
    return w * pw.partialPivLu().solve(q.transpose());
}

} // namespace detail

/// Fits SIMPLS with up to `n_lv` latent variables. The request is clamped to
/// min(n, p); extraction stops early when t't < 1e-12 n, the deflated
/// covariance vanishes or a new X loading is linearly dependent on the previous
/// ones. Throws rank_exhausted if not even one factor can be extracted.
inline PlsModel fit_pls(const Matrix& x, const Matrix& y, Index n_lv) {
    detail::require(x.rows() == y.rows(), ErrorCategory::dimension_mismatch,
                    "fit_pls: X is " + detail::shape(x.rows(), x.cols()) + " but Y is " +
                        detail::shape(y.rows(), y.cols()));
    detail::require(n_lv >= 1, ErrorCategory::invalid_argument, "fit_pls: n_lv must be >= 1");
    detail::require(x.rows() > 0 && x.cols() > 0 && y.cols() > 0, ErrorCategory::invalid_argument,
                    "fit_pls: empty input");
    detail::require(detail::all_finite(x) && detail::all_finite(y), ErrorCategory::non_finite,
                    "fit_pls: non-finite input");

    const Index n = x.rows();
    const Index p = x.cols();
    const Index m = y.cols();

    PlsModel model;
    model.requested_lv = n_lv;
    const Index cap = std::min(n, p);
    if (n_lv > cap) {
        model.clamped = true;
        n_lv = cap;
    }

    Matrix w_all(p, n_lv), p_all(p, n_lv), q_all(m, n_lv), t_all(n, n_lv), u_all(n, n_lv);
    // orthonormal basis of span(P); C is kept orthogonal to it, so each step
    // only has to remove the newest direction
    Matrix basis(p, n_lv);
    Matrix c = y.transpose() * x;
    const double c0 = c.norm();
    Index a = 0;

    for (; a < n_lv; ++a) {
        if (!(c.norm() > kScoreNormFloor * c0)) {
            break;
        }
        const Vector w = first_pc(c);
        const Vector t = x * w;
        const double tt = t.squaredNorm();
        if (tt < kScoreNormFloor * static_cast<double>(n)) {
            break;
        }
        const Vector q = y.transpose() * t / tt;
        const double qq = q.squaredNorm();
        const Vector u = qq > 0.0 ? Vector(y * q / qq) : Vector::Zero(n);
        const Vector pl = x.transpose() * t / tt;

        w_all.col(a) = w;
        p_all.col(a) = pl;
        q_all.col(a) = q;
        t_all.col(a) = t;
        u_all.col(a) = u;

        Vector v = pl;
        for (int pass = 0; pass < 2; ++pass) {
            v -= basis.leftCols(a) * (basis.leftCols(a).transpose() * v);
        }
        const double vn = v.norm();
        if (!(vn > kScoreNormFloor * pl.norm())) {
            break; // loading already in span(P); this factor adds nothing
        }
        basis.col(a) = v / vn;
        c -= (c * basis.col(a)) * basis.col(a).transpose();
    }

    detail::require(a > 0, ErrorCategory::rank_exhausted,
                    "fit_pls: no latent variable could be extracted (X'Y is zero)");

    model.n_lv = a;
    model.stopped_early = a < n_lv;
    model.weights = w_all.leftCols(a);
    model.x_loadings = p_all.leftCols(a);
    model.y_loadings = q_all.leftCols(a);
    model.x_scores = t_all.leftCols(a);
    model.y_scores = u_all.leftCols(a);
    model.coefficients = detail::regression_coefficients(model.weights, model.x_loadings, model.y_loadings);
    return model;
}

inline Matrix predict_pls(const PlsModel& model, const Matrix& x_new) {
    detail::require(x_new.cols() == model.n_features(), ErrorCategory::dimension_mismatch,
                    "predict_pls: expected " + std::to_string(model.n_features()) + " columns, got " +
                        std::to_string(x_new.cols()));
    return x_new * model.coefficients;
}

} // namespace kfpls

#endif // KFPLS_PLS_HPP
