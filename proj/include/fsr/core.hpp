#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fsr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad argument or configuration (maps to CLI exit code 1 or 2).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Malformed input data (ragged CSV, grid mismatch, ...).
class DataError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure could not produce a result.
class NumericError : public Error {
public:
    using Error::Error;
};

/// No kernel weight is positive: bandwidth too small for this query.
class EmptyNeighborhood : public NumericError {
public:
    using NumericError::NumericError;
};

/// The identifiability constraint removed every candidate direction.
class EmptyThetaGrid : public NumericError {
public:
    using NumericError::NumericError;
};

struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    [[nodiscard]] double length() const noexcept { return hi - lo; }
    [[nodiscard]] bool contains(double t) const noexcept { return t >= lo && t <= hi; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

enum class SmootherKind { kernel, knn };

inline const char* to_string(SmootherKind k) { return k == SmootherKind::kernel ? "kernel" : "knn"; }

/// A bandwidth h (kernel) or a neighbour count k (kNN).
struct Tuning {
    SmootherKind kind = SmootherKind::kernel;
    double h = 0.0;
    int k = 0;

    static Tuning bandwidth(double h) { return {SmootherKind::kernel, h, 0}; }
    static Tuning neighbours(int k) { return {SmootherKind::knn, 0.0, k}; }
    [[nodiscard]] double value() const { return kind == SmootherKind::kernel ? h : static_cast<double>(k); }
    friend bool operator==(const Tuning&, const Tuning&) = default;
};

enum class CriterionKind { gcv, aic, bic, kfold_cv };

inline const char* to_string(CriterionKind c) {
    switch (c) {
        case CriterionKind::gcv: return "GCV";
        case CriterionKind::aic: return "AIC";
        case CriterionKind::bic: return "BIC";
        case CriterionKind::kfold_cv: return "k-fold-CV";
    }
    return "?";
}

inline CriterionKind criterion_from_string(const std::string& s) {
    if (s == "GCV") return CriterionKind::gcv;
    if (s == "AIC") return CriterionKind::aic;
    if (s == "BIC") return CriterionKind::bic;
    if (s == "k-fold-CV") return CriterionKind::kfold_cv;
    throw InvalidArgument("unknown criterion '" + s + "' (expected GCV, AIC, BIC or k-fold-CV)");
}

struct CriterionSpec {
    CriterionKind kind = CriterionKind::gcv;
    int nfolds = 10;
    unsigned long long seed = 123;

    void validate() const {
        if (kind == CriterionKind::kfold_cv && nfolds < 2)
            throw InvalidArgument("k-fold-CV needs nfolds >= 2");
    }
};

struct Diagnostics {
    double r_squared = 1.0;
    double var_res = 0.0;
    double df = 0.0;
    double ssr = 0.0;
};

/// r² = 1 - SSR/SST (1 when SST = 0); var_res = SSR/df.
inline Diagnostics diagnostics_from(const Vector& residuals, const Vector& y, double df) {
    if (!(df > 0.0)) throw InvalidArgument("diagnostics need df > 0");
    if (residuals.size() != y.size()) throw InvalidArgument("residuals and responses differ in length");
    Diagnostics d;
    d.ssr = residuals.squaredNorm();
    const double sst = (y.array() - y.mean()).square().sum();
    d.r_squared = sst > 0.0 ? 1.0 - d.ssr / sst : 1.0;
    d.var_res = d.ssr / df;
    d.df = df;
    return d;
}

inline double sample_variance(const Vector& y) {
    if (y.size() < 2) return 0.0;
    return (y.array() - y.mean()).square().sum() / static_cast<double>(y.size() - 1);
}

/// Rows of `m` selected by `rows` (0-based).
inline Matrix take_rows(const Matrix& m, const std::vector<int>& rows) {
    Matrix out(static_cast<Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
    return out;
}

inline Vector take(const Vector& v, const std::vector<int>& idx) {
    Vector out(static_cast<Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Index>(i)) = v(idx[i]);
    return out;
}

inline Matrix take_cols(const Matrix& m, const std::vector<int>& cols) {
    Matrix out(m.rows(), static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Index>(j)) = m.col(cols[j]);
    return out;
}

/// Mean squared error of prediction. NaN predictions (failed queries) are
/// skipped; throws if nothing is left.
inline double msep(const Vector& y_test, const Vector& y_hat) {
    if (y_test.size() != y_hat.size()) throw InvalidArgument("msep: vectors differ in length");
    double s = 0.0;
    Index used = 0;
    for (Index i = 0; i < y_test.size(); ++i) {
        if (std::isnan(y_hat(i))) continue;
        const double e = y_test(i) - y_hat(i);
        s += e * e;
        ++used;
    }
    if (used == 0) throw InvalidArgument("msep: no prediction to compare");
    return s / static_cast<double>(used);
}

struct PredictionReport {
    std::string option;  // "1", "2", "3a", "3b", "4"
    Vector predictions;  // NaN where the query failed
    std::optional<double> msep;
    std::vector<int> failed;
};

inline PredictionReport make_report(std::string option, Vector pred, std::vector<int> failed,
                                    const std::optional<Vector>& y_test) {
    PredictionReport r{std::move(option), std::move(pred), std::nullopt, std::move(failed)};
    if (y_test) {
        if (y_test->size() != r.predictions.size())
            throw DataError("y-test has " + std::to_string(y_test->size()) + " values for " +
                            std::to_string(r.predictions.size()) + " predictions");
        if (r.failed.size() < static_cast<std::size_t>(r.predictions.size())) r.msep = fsr::msep(*y_test, r.predictions);
    }
    return r;
}

}  // namespace fsr
