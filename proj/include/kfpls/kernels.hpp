#ifndef KFPLS_KERNELS_HPP
#define KFPLS_KERNELS_HPP

#include "kfpls/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace kfpls {

enum class KernelFamily { gaussian, matern12, matern32, matern52, cauchy };

inline constexpr std::array<KernelFamily, 5> kAllFamilies = {
    KernelFamily::gaussian, KernelFamily::matern12, KernelFamily::matern32, KernelFamily::matern52,
    KernelFamily::cauchy};

inline std::string_view to_string(KernelFamily f) {
    switch (f) {
    case KernelFamily::gaussian: return "gaussian";
    case KernelFamily::matern12: return "matern12";
    case KernelFamily::matern32: return "matern32";
    case KernelFamily::matern52: return "matern52";
    case KernelFamily::cauchy: return "cauchy";
    }
    return "unknown";
}

inline KernelFamily parse_family(std::string_view name) {
    for (auto f : kAllFamilies) {
        if (to_string(f) == name) {
            return f;
        }
    }
    throw Error(ErrorCategory::parse, "unknown kernel family '" + std::string(name) +
                                          "' (expected gaussian, matern12, matern32, matern52 or cauchy)");
}

/// Parses a comma-separated family list such as "gaussian,cauchy".
inline std::vector<KernelFamily> parse_families(std::string_view list) {
    std::vector<KernelFamily> out;
    std::string item;
    std::istringstream in{std::string(list)};
    while (std::getline(in, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        out.push_back(parse_family(item));
    }
    detail::require(!out.empty(), ErrorCategory::parse, "empty kernel family list");
    return out;
}

inline std::string join_families(const std::vector<KernelFamily>& fs) {
    std::string s;
    for (std::size_t i = 0; i < fs.size(); ++i) {
        s += (i ? "," : "");
        s += to_string(fs[i]);
    }
    return s;
}

/// Value of one unit-weight kernel at squared distance `d2`.
inline double family_value(KernelFamily f, double d2, double sigma) {
    d2 = std::max(0.0, d2);
    switch (f) {
    case KernelFamily::gaussian:
        return std::exp(-d2 / (2.0 * sigma * sigma));
    case KernelFamily::matern12:
        return std::exp(-std::sqrt(d2) / sigma);
    case KernelFamily::matern32: {
        const double r = std::sqrt(3.0 * d2) / sigma;
        return (1.0 + r) * std::exp(-r);
    }
    case KernelFamily::matern52: {
        const double r = std::sqrt(5.0 * d2) / sigma;
        return (1.0 + r + r * r / 3.0) * std::exp(-r);
    }
    case KernelFamily::cauchy:
        return 1.0 / (1.0 + d2 / (sigma * sigma));
    }
    return 0.0;
}

/// Weighted additive kernel with ridge. All positive parameters are held as
/// logarithms; a single-family spec has an implicit unit weight.
///
/// The flat parameter vector (theta) is laid out as
///   [log_sigma_1 .. log_sigma_F, log_gamma_1 .. log_gamma_F (F > 1 only), log_delta].
struct KernelSpec {
    std::vector<KernelFamily> families;
    std::vector<double> log_sigma;
    std::vector<double> log_gamma;
    double log_delta = std::log(1e-3);

    /// Default initialisation: sigma = 1, gamma = 1/F, delta = 1e-3.
    static KernelSpec make(std::vector<KernelFamily> fams, double sigma = 1.0, double delta = 1e-3) {
        KernelSpec s;
        s.families = std::move(fams);
        s.log_sigma.assign(s.families.size(), std::log(sigma));
        if (s.families.size() > 1) {
            s.log_gamma.assign(s.families.size(), -std::log(static_cast<double>(s.families.size())));
        }
        s.log_delta = std::log(delta);
        s.validate();
        return s;
    }

    [[nodiscard]] std::size_t n_families() const { return families.size(); }
    [[nodiscard]] double sigma(std::size_t i) const { return std::exp(log_sigma.at(i)); }
    [[nodiscard]] double gamma(std::size_t i) const {
        return log_gamma.empty() ? 1.0 : std::exp(log_gamma.at(i));
    }
    [[nodiscard]] double delta() const { return std::exp(log_delta); }

    [[nodiscard]] double total_weight() const {
        double g = 0.0;
        for (std::size_t i = 0; i < families.size(); ++i) {
            g += gamma(i);
        }
        return g;
    }

    [[nodiscard]] Index dim() const {
        const auto f = static_cast<Index>(families.size());
        return f + (f > 1 ? f : 0) + 1;
    }

    [[nodiscard]] Vector theta() const {
        Vector t(dim());
        Index k = 0;
        for (double v : log_sigma) t(k++) = v;
        for (double v : log_gamma) t(k++) = v;
        t(k) = log_delta;
        return t;
    }

    [[nodiscard]] KernelSpec with_theta(const Vector& t) const {
        detail::require(t.size() == dim(), ErrorCategory::dimension_mismatch,
                        "KernelSpec: theta has " + std::to_string(t.size()) + " entries, expected " +
                            std::to_string(dim()));
        detail::require(detail::all_finite(t), ErrorCategory::non_finite, "KernelSpec: non-finite theta");
        KernelSpec s = *this;
        Index k = 0;
        for (double& v : s.log_sigma) v = t(k++);
        for (double& v : s.log_gamma) v = t(k++);
        s.log_delta = t(k);
        return s;
    }

    [[nodiscard]] std::vector<std::string> parameter_names() const {
        std::vector<std::string> names;
        for (auto f : families) names.push_back("sigma_" + std::string(to_string(f)));
        if (families.size() > 1) {
            for (auto f : families) names.push_back("kernel_weight_" + std::string(to_string(f)));
        }
        names.emplace_back("delta");
        return names;
    }

    /// Parameters on their natural (non-log) scale, in theta order.
    [[nodiscard]] Vector natural() const { return theta().array().exp().matrix(); }

    void validate() const {
        detail::require(!families.empty(), ErrorCategory::invalid_argument, "KernelSpec: no kernel families");
        for (std::size_t i = 0; i < families.size(); ++i) {
            for (std::size_t j = i + 1; j < families.size(); ++j) {
                detail::require(families[i] != families[j], ErrorCategory::invalid_argument,
                                "KernelSpec: duplicate family " + std::string(to_string(families[i])));
            }
        }
        detail::require(log_sigma.size() == families.size(), ErrorCategory::invalid_argument,
                        "KernelSpec: one length-scale per family required");
        detail::require(families.size() == 1 ? log_gamma.empty() : log_gamma.size() == families.size(),
                        ErrorCategory::invalid_argument,
                        "KernelSpec: kernel weights are required exactly when several families are combined");
        detail::require(detail::all_finite(theta()), ErrorCategory::non_finite, "KernelSpec: non-finite parameter");
    }
};

/// Kernel value without the ridge term.
template <typename A, typename B>
double kernel_eval(const KernelSpec& spec, const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
    detail::require(x.size() == y.size(), ErrorCategory::dimension_mismatch, "kernel_eval: dimension mismatch");
    detail::require(detail::all_finite(x) && detail::all_finite(y), ErrorCategory::non_finite,
                    "kernel_eval: non-finite input");
    const double d2 = (x - y).squaredNorm();
    double k = 0.0;
    for (std::size_t i = 0; i < spec.families.size(); ++i) {
        k += spec.gamma(i) * family_value(spec.families[i], d2, spec.sigma(i));
    }
    return k;
}

/// Pairwise squared Euclidean distances between rows of `a` (q x p) and rows
/// of `b` (n x p).
inline Matrix squared_distances(const Matrix& a, const Matrix& b) {
    detail::require(a.cols() == b.cols(), ErrorCategory::dimension_mismatch,
                    "squared_distances: column counts differ");
    Matrix d(a.rows(), b.rows());
    for (Index j = 0; j < b.rows(); ++j) {
        for (Index i = 0; i < a.rows(); ++i) {
            d(i, j) = (a.row(i) - b.row(j)).squaredNorm();
        }
    }
    return d;
}

/// Symmetric version of squared_distances(x, x); the lower triangle mirrors
/// the upper one so the result is bitwise symmetric.
inline Matrix squared_distances(const Matrix& x) {
    const Index n = x.rows();
    Matrix d(n, n);
    for (Index j = 0; j < n; ++j) {
        d(j, j) = 0.0;
        for (Index i = 0; i < j; ++i) {
            d(i, j) = (x.row(i) - x.row(j)).squaredNorm();
            d(j, i) = d(i, j);
        }
    }
    return d;
}

/// Applies the weighted kernel elementwise to a squared-distance matrix.
inline Matrix kernel_from_distances(const KernelSpec& spec, const Matrix& d2) {
    Matrix k = Matrix::Zero(d2.rows(), d2.cols());
    for (std::size_t f = 0; f < spec.families.size(); ++f) {
        const double g = spec.gamma(f);
        const double s = spec.sigma(f);
        const auto fam = spec.families[f];
        k += g * d2.unaryExpr([fam, s](double v) { return family_value(fam, v, s); });
    }
    return k;
}

/// Training Gram K + delta I from a symmetric squared-distance matrix. Only
/// the upper triangle is evaluated; the result is bitwise symmetric.
inline Matrix gram_from_distances(const KernelSpec& spec, const Matrix& d2) {
    detail::require(d2.rows() == d2.cols(), ErrorCategory::dimension_mismatch,
                    "gram_from_distances: distance matrix must be square");
    const Index n = d2.rows();
    const std::size_t nf = spec.families.size();
    std::vector<double> sig(nf), gam(nf);
    for (std::size_t f = 0; f < nf; ++f) {
        sig[f] = spec.sigma(f);
        gam[f] = spec.gamma(f);
    }
    Matrix k(n, n);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i <= j; ++i) {
            double v = 0.0;
            for (std::size_t f = 0; f < nf; ++f) {
                v += gam[f] * family_value(spec.families[f], d2(i, j), sig[f]);
            }
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    k.diagonal().array() += spec.delta();
    return k;
}

inline Matrix gram_train(const KernelSpec& spec, const Matrix& x) {
    detail::require(x.rows() >= 2, ErrorCategory::invalid_argument, "gram_train: need at least 2 rows");
    detail::require(detail::all_finite(x), ErrorCategory::non_finite, "gram_train: non-finite input");
    return gram_from_distances(spec, squared_distances(x));
}

struct CenteringStats {
    Index n = 0;
    Vector row_means; // column means of the (ridged) training Gram
    double grand_mean = 0.0;
};

struct CenteredGram {
    Matrix gram;
    CenteringStats stats;
};

/// Double centering (I - 11'/n) K (I - 11'/n).
inline CenteredGram center_train(const Matrix& k) {
    detail::require(k.rows() == k.cols() && k.rows() > 0, ErrorCategory::dimension_mismatch,
                    "center_train: kernel matrix must be square and non-empty");
    CenteredGram out;
    out.stats.n = k.rows();
    out.stats.row_means = k.colwise().mean().transpose();
    out.stats.grand_mean = out.stats.row_means.mean();
    const Vector r = k.rowwise().mean();
    out.gram = k;
    out.gram.rowwise() -= out.stats.row_means.transpose();
    out.gram.colwise() -= r;
    out.gram.array() += out.stats.grand_mean;
    return out;
}

/// Centres a raw test kernel (q x n, no ridge) with the training statistics:
/// (K_test - 1 1'K / n)(I - 11'/n).
inline Matrix center_test(const Matrix& k_test, const CenteringStats& stats) {
    detail::require(k_test.cols() == stats.n, ErrorCategory::dimension_mismatch,
                    "center_test: kernel has " + std::to_string(k_test.cols()) + " columns, expected " +
                        std::to_string(stats.n));
    Matrix out = k_test;
    out.rowwise() -= stats.row_means.transpose();
    const Vector r = out.rowwise().mean();
    out.colwise() -= r;
    return out;
}

inline Matrix gram_test(const KernelSpec& spec, const Matrix& x_test, const Matrix& x_train,
                        const CenteringStats& stats) {
    detail::require(x_test.cols() == x_train.cols(), ErrorCategory::dimension_mismatch,
                    "gram_test: feature dimension mismatch");
    detail::require(x_train.rows() == stats.n, ErrorCategory::dimension_mismatch,
                    "gram_test: centering statistics do not match the training set");
    detail::require(detail::all_finite(x_test), ErrorCategory::non_finite, "gram_test: non-finite input");
    return center_test(kernel_from_distances(spec, squared_distances(x_test, x_train)), stats);
}

} // namespace kfpls

#endif // KFPLS_KERNELS_HPP
