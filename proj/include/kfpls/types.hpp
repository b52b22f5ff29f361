#ifndef KFPLS_TYPES_HPP
#define KFPLS_TYPES_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kfpls {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

/// Broad failure classes. The CLI prints these as the machine-parseable
/// first token of its one-line error message.
enum class ErrorCategory {
    dimension_mismatch,
    non_finite,
    rank_exhausted,
    ill_conditioned,
    invalid_argument,
    degenerate,
    io,
    parse,
    config,
};

inline std::string_view to_string(ErrorCategory c) {
    switch (c) {
    case ErrorCategory::dimension_mismatch: return "dimension_mismatch";
    case ErrorCategory::non_finite: return "non_finite";
    case ErrorCategory::rank_exhausted: return "rank_exhausted";
    case ErrorCategory::ill_conditioned: return "ill_conditioned";
    case ErrorCategory::invalid_argument: return "invalid_argument";
    case ErrorCategory::degenerate: return "degenerate";
    case ErrorCategory::io: return "io";
    case ErrorCategory::parse: return "parse";
    case ErrorCategory::config: return "config";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    [[nodiscard]] ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

namespace detail {

inline void require(bool ok, ErrorCategory c, const std::string& msg) {
    if (!ok) {
        throw Error(c, msg);
    }
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
    return m.size() == 0 || m.allFinite();
}

inline std::string shape(Index r, Index c) {
    return std::to_string(r) + "x" + std::to_string(c);
}

/// Rows of `m` selected by `idx`, in the given order.
template <typename IndexRange>
Matrix take_rows(const Matrix& m, const IndexRange& idx) {
    Matrix out(static_cast<Index>(idx.size()), m.cols());
    Index r = 0;
    for (auto i : idx) {
        out.row(r++) = m.row(static_cast<Index>(i));
    }
    return out;
}

} // namespace detail
} // namespace kfpls

#endif // KFPLS_TYPES_HPP
