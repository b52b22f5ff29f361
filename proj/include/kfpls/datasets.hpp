#ifndef KFPLS_DATASETS_HPP
#define KFPLS_DATASETS_HPP

#include "kfpls/kpls.hpp"
#include "kfpls/random.hpp"
#include "kfpls/types.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <variant>
#include <vector>

namespace kfpls {

enum class Task { regression, classification };

inline std::string_view to_string(Task t) {
    return t == Task::regression ? "regression" : "classification";
}

inline Task parse_task(std::string_view s) {
    if (s == "regression") return Task::regression;
    if (s == "classification") return Task::classification;
    throw Error(ErrorCategory::parse, "unknown task '" + std::string(s) + "' (regression, classification)");
}

/// Column-wise affine scaling learned on calibration data.
struct Standardizer {
    RowVector means;
    RowVector stds;
    std::vector<std::string> names;

    /// Sample (n - 1) standard deviation; zero-variance columns are rejected.
    static Standardizer fit(const Matrix& m, std::vector<std::string> names = {}) {
        detail::require(m.rows() >= 2, ErrorCategory::invalid_argument, "standardize: need at least 2 rows");
        Standardizer s;
        s.names = std::move(names);
        s.means = m.colwise().mean();
        s.stds = ((m.rowwise() - s.means).colwise().squaredNorm() / static_cast<double>(m.rows() - 1))
                     .cwiseSqrt();
        for (Index j = 0; j < m.cols(); ++j) {
            if (!(s.stds(j) > 0.0)) {
                const auto name = j < static_cast<Index>(s.names.size()) ? "'" + s.names[static_cast<std::size_t>(j)] + "'"
                                                                         : std::to_string(j);
                throw Error(ErrorCategory::invalid_argument, "standardize: column " + name + " has zero variance");
            }
        }
        return s;
    }

    static Standardizer identity(Index cols) {
        Standardizer s;
        s.means = RowVector::Zero(cols);
        s.stds = RowVector::Ones(cols);
        return s;
    }

    [[nodiscard]] Matrix apply(const Matrix& m) const {
        detail::require(m.cols() == means.size(), ErrorCategory::dimension_mismatch, "standardize: column mismatch");
        return (m.rowwise() - means).array().rowwise() / stds.array();
    }

    [[nodiscard]] Matrix invert(const Matrix& m) const {
        detail::require(m.cols() == means.size(), ErrorCategory::dimension_mismatch, "destandardize: column mismatch");
        return (m.array().rowwise() * stds.array()).matrix().rowwise() + means;
    }
};

inline Matrix standardize(const Matrix& m, const Standardizer& s) { return s.apply(m); }
inline Matrix destandardize(const Matrix& m, const Standardizer& s) { return s.invert(m); }

/// Calibration/test partition. X is standardised with calibration statistics;
/// Y is standardised for regression and kept as 0/1 one-hot for
/// classification (its Standardizer is then the identity).
struct Dataset {
    Task task = Task::regression;
    Matrix x_cal, y_cal, x_test, y_test;
    Standardizer x_scaler, y_scaler;
    // noiseless responses of the test rows (synthetic regression only), standardised
    std::optional<Matrix> y_true_test;
    std::vector<Index> cal_index, test_index;
    std::vector<std::string> class_names;

    [[nodiscard]] std::vector<int> cal_labels() const { return argmax_rows(y_cal); }
    [[nodiscard]] std::vector<int> test_labels() const { return argmax_rows(y_test); }
};

/// Seeded shuffle; the first round(0.8 n) indices calibrate.
inline std::pair<std::vector<Index>, std::vector<Index>> split_indices(Index n, std::uint64_t seed,
                                                                       double cal_fraction = 0.8) {
    Rng rng(seed);
    auto perm = sample_without_replacement(n, n, rng);
    const auto n_cal = static_cast<Index>(std::llround(cal_fraction * static_cast<double>(n)));
    std::vector<Index> cal(perm.begin(), perm.begin() + n_cal);
    std::vector<Index> test(perm.begin() + n_cal, perm.end());
    return {cal, test};
}

/// Splits raw (X, Y) and standardises with calibration statistics.
inline Dataset make_dataset(const Matrix& x, const Matrix& y, Task task, std::uint64_t seed,
                            std::vector<std::string> x_names = {}, std::vector<std::string> y_names = {},
                            const Matrix* y_true = nullptr) {
    detail::require(x.rows() == y.rows(), ErrorCategory::dimension_mismatch, "dataset: X/Y row counts differ");
    detail::require(x.rows() >= 5, ErrorCategory::invalid_argument, "dataset: need at least 5 rows");
    Dataset d;
    d.task = task;
    std::tie(d.cal_index, d.test_index) = split_indices(x.rows(), seed);
    const Matrix xc = detail::take_rows(x, d.cal_index);
    const Matrix yc = detail::take_rows(y, d.cal_index);
    d.x_scaler = Standardizer::fit(xc, std::move(x_names));
    d.y_scaler = task == Task::regression ? Standardizer::fit(yc, y_names) : Standardizer::identity(y.cols());
    if (task == Task::regression) {
        d.y_scaler.names = std::move(y_names);
    } else {
        d.class_names = std::move(y_names);
    }
    d.x_cal = d.x_scaler.apply(xc);
    d.y_cal = d.y_scaler.apply(yc);
    d.x_test = d.x_scaler.apply(detail::take_rows(x, d.test_index));
    d.y_test = d.y_scaler.apply(detail::take_rows(y, d.test_index));
    if (y_true) {
        d.y_true_test = d.y_scaler.apply(detail::take_rows(*y_true, d.test_index));
    }
    return d;
}

/// The two-bump "peaks" surface on [-2, 2]^2.
inline double peaks(double x1, double x2) {
    return 3.0 * (1.0 - x1) * (1.0 - x1) * std::exp(-x1 * x1 - (x2 + 1.0) * (x2 + 1.0)) -
           10.0 * (x1 / 5.0 - x1 * x1 * x1 - std::pow(x2, 5)) * std::exp(-x1 * x1 - x2 * x2) -
           std::exp(-(x1 + 1.0) * (x1 + 1.0) - x2 * x2) / 3.0;
}

/// Raw (unsplit) peaks sample: X uniform on [-2, 2]^2, y = f + noise * N(0, 1).
struct PeaksSample {
    Matrix x;
    Matrix y;
    Matrix y_true;
};

inline PeaksSample sample_peaks(Index n, double noise, std::uint64_t seed) {
    detail::require(n >= 10, ErrorCategory::invalid_argument, "gen_peaks: n must be >= 10");
    detail::require(noise >= 0.0, ErrorCategory::invalid_argument, "gen_peaks: noise must be >= 0");
    Rng rng(seed);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::normal_distribution<double> z(0.0, 1.0);
    PeaksSample s{Matrix(n, 2), Matrix(n, 1), Matrix(n, 1)};
    for (Index i = 0; i < n; ++i) {
        s.x(i, 0) = u(rng);
        s.x(i, 1) = u(rng);
    }
    // noise drawn after all inputs so X does not depend on the noise level
    for (Index i = 0; i < n; ++i) {
        s.y_true(i, 0) = peaks(s.x(i, 0), s.x(i, 1));
        s.y(i, 0) = s.y_true(i, 0) + noise * z(rng);
    }
    return s;
}

inline Dataset gen_peaks(Index n, double noise, std::uint64_t seed) {
    const auto s = sample_peaks(n, noise, seed);
    return make_dataset(s.x, s.y, Task::regression, derive_seed(seed, 1), {"x1", "x2"}, {"y"}, &s.y_true);
}

/// Concentric circles: class c (1-based) at radius c plus N(0, radial_noise)
/// radial jitter, uniform angle. Y is one-hot.
inline Dataset gen_circles(Index n_per_class, Index n_classes, double radial_noise, std::uint64_t seed) {
    detail::require(n_classes >= 2, ErrorCategory::invalid_argument, "gen_circles: need at least 2 classes");
    detail::require(n_per_class >= 3, ErrorCategory::invalid_argument, "gen_circles: need at least 3 points per class");
    detail::require(radial_noise >= 0.0, ErrorCategory::invalid_argument, "gen_circles: noise must be >= 0");
    Rng rng(seed);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    std::normal_distribution<double> z(0.0, 1.0);
    const Index n = n_per_class * n_classes;
    Matrix x(n, 2);
    Matrix y = Matrix::Zero(n, n_classes);
    std::vector<std::string> names;
    for (Index c = 0; c < n_classes; ++c) {
        names.push_back("class" + std::to_string(c + 1));
        for (Index k = 0; k < n_per_class; ++k) {
            const Index i = c * n_per_class + k;
            const double r = static_cast<double>(c + 1) + radial_noise * z(rng);
            const double a = angle(rng);
            x(i, 0) = r * std::cos(a);
            x(i, 1) = r * std::sin(a);
            y(i, c) = 1.0;
        }
    }
    return make_dataset(x, y, Task::classification, derive_seed(seed, 1), {"x1", "x2"}, names);
}

/// Parsed CSV: header names and a dense numeric body.
struct CsvTable {
    std::vector<std::string> header;
    Matrix data;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

inline std::string trim(std::string s) {
    s.erase(0, s.find_first_not_of(" \t\r\n"));
    s.erase(s.find_last_not_of(" \t\r\n") + 1);
    return s;
}

} // namespace detail

inline CsvTable read_csv(std::istream& in, const std::string& source = "csv") {
    CsvTable t;
    std::string line;
    Index line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        for (auto& h : detail::split_csv_line(line)) t.header.push_back(detail::trim(h));
        break;
    }
    detail::require(!t.header.empty(), ErrorCategory::parse, source + ": missing header row");
    // strip a UTF-8 byte-order mark
    if (t.header[0].rfind("\xEF\xBB\xBF", 0) == 0) t.header[0].erase(0, 3);

    const auto cols = static_cast<Index>(t.header.size());
    std::vector<double> values;
    Index rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv_line(line);
        detail::require(static_cast<Index>(cells.size()) == cols, ErrorCategory::parse,
                        source + ": line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                            " fields, expected " + std::to_string(cols));
        for (Index j = 0; j < cols; ++j) {
            const std::string cell = detail::trim(cells[static_cast<std::size_t>(j)]);
            const std::string where = source + ": line " + std::to_string(line_no) + ", column " +
                                      std::to_string(j + 1) + " ('" + t.header[static_cast<std::size_t>(j)] + "')";
            detail::require(!cell.empty(), ErrorCategory::parse, where + ": missing value");
            double v = 0.0;
            const char* first = cell.data();
            const char* last = first + cell.size();
            if (*first == '+') ++first;
            const auto [ptr, ec] = std::from_chars(first, last, v);
            detail::require(ec == std::errc() && ptr == last && std::isfinite(v), ErrorCategory::parse,
                            where + ": non-numeric value '" + cell + "'");
            values.push_back(v);
        }
        ++rows;
    }
    detail::require(rows > 0, ErrorCategory::parse, source + ": no data rows after the header");
    t.data = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(), rows,
                                                                                                       cols);
    return t;
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    detail::require(static_cast<bool>(in), ErrorCategory::io, "cannot open '" + path + "'");
    return read_csv(in, path);
}

/// Resolves response selectors (column names, or zero-based indices when a
/// selector is all digits and no column carries that name).
inline std::vector<Index> resolve_columns(const std::vector<std::string>& header,
                                          const std::vector<std::string>& selectors) {
    std::vector<Index> out;
    for (const auto& sel : selectors) {
        Index found = -1;
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (header[j] == sel) found = static_cast<Index>(j);
        }
        if (found < 0 && !sel.empty() && sel.find_first_not_of("0123456789") == std::string::npos) {
            const Index j = std::stoll(sel);
            if (j < static_cast<Index>(header.size())) found = j;
        }
        detail::require(found >= 0, ErrorCategory::invalid_argument, "response column '" + sel + "' not found");
        for (Index prev : out) {
            detail::require(prev != found, ErrorCategory::invalid_argument, "response column '" + sel + "' given twice");
        }
        out.push_back(found);
    }
    detail::require(!out.empty(), ErrorCategory::invalid_argument, "no response column selected");
    return out;
}

/// Raw predictors/responses selected from a table. For classification a single
/// label column is one-hot encoded over its sorted distinct values; several
/// columns are taken as an existing one-hot coding.
struct SelectedColumns {
    Matrix x, y;
    std::vector<std::string> x_names, y_names;
};

inline SelectedColumns select_columns(const CsvTable& t, const std::vector<std::string>& response, Task task) {
    const auto ycols = resolve_columns(t.header, response);
    SelectedColumns s;
    std::vector<Index> xcols;
    for (Index j = 0; j < t.data.cols(); ++j) {
        if (std::find(ycols.begin(), ycols.end(), j) == ycols.end()) {
            xcols.push_back(j);
            s.x_names.push_back(t.header[static_cast<std::size_t>(j)]);
        }
    }
    detail::require(!xcols.empty(), ErrorCategory::invalid_argument, "no predictor columns left");
    s.x = t.data(Eigen::all, xcols);
    if (task == Task::classification && ycols.size() == 1) {
        const Vector labels = t.data.col(ycols[0]);
        std::set<double> distinct(labels.begin(), labels.end());
        detail::require(distinct.size() >= 2, ErrorCategory::invalid_argument, "classification needs >= 2 classes");
        std::map<double, Index> code;
        for (double v : distinct) {
            code.emplace(v, static_cast<Index>(code.size()));
            std::ostringstream os;
            os << t.header[static_cast<std::size_t>(ycols[0])] << "=" << v;
            s.y_names.push_back(os.str());
        }
        s.y = Matrix::Zero(t.data.rows(), static_cast<Index>(distinct.size()));
        for (Index i = 0; i < labels.size(); ++i) s.y(i, code[labels(i)]) = 1.0;
    } else {
        s.y = t.data(Eigen::all, ycols);
        for (Index j : ycols) s.y_names.push_back(t.header[static_cast<std::size_t>(j)]);
    }
    return s;
}

inline Dataset load_csv(const std::string& path, const std::vector<std::string>& response, Task task,
                        std::uint64_t seed) {
    const auto t = read_csv(path);
    auto s = select_columns(t, response, task);
    return make_dataset(s.x, s.y, task, seed, std::move(s.x_names), std::move(s.y_names));
}

} // namespace kfpls

#endif // KFPLS_DATASETS_HPP
