#pragma once

#include <cmath>
#include <string>

#include "basis.hpp"

namespace fsr {

enum class SemimetricKind { projection, deriv, pca };

inline const char* to_string(SemimetricKind k) {
    switch (k) {
        case SemimetricKind::projection: return "projection";
        case SemimetricKind::deriv: return "deriv";
        case SemimetricKind::pca: return "pca";
    }
    return "?";
}

inline SemimetricKind semimetric_from_string(const std::string& s) {
    if (s == "deriv") return SemimetricKind::deriv;
    if (s == "pca") return SemimetricKind::pca;
    if (s == "projection") return SemimetricKind::projection;
    throw InvalidArgument("unknown semimetric '" + s + "' (expected deriv or pca)");
}

/// Distances from n reference curves (rows) to m query curves (columns).
struct DistanceMatrix {
    Matrix values;
    SemimetricKind kind = SemimetricKind::projection;
    int q = 0;
};

/// Euclidean distances between feature rows. Computed entry by entry so that
/// self-distances are exactly symmetric with an exactly zero diagonal.
inline Matrix feature_distances(const Matrix& ref, const Matrix& query) {
    if (ref.cols() != query.cols()) throw InvalidArgument("feature dimension mismatch");
    Matrix d(ref.rows(), query.rows());
    if (ref.cols() == 1) {
        for (Index j = 0; j < query.rows(); ++j)
            for (Index i = 0; i < ref.rows(); ++i) d(i, j) = std::abs(ref(i, 0) - query(j, 0));
        return d;
    }
    for (Index j = 0; j < query.rows(); ++j)
        for (Index i = 0; i < ref.rows(); ++i) d(i, j) = (ref.row(i) - query.row(j)).norm();
    return d;
}

/// Maps curves to vectors whose Euclidean distance is the semimetric.
/// Built once from the reference sample (the PCA kind needs it) and then
/// applied to any sample on the same grid.
class FeatureMap {
public:
    /// d(x, chi) = ||D^(q)(x - chi)||_L2 on the B-spline representation.
    static FeatureMap deriv(const BSplineBasis& basis, int q) {
        if (q < 0) throw InvalidArgument("derivative order q must be >= 0");
        if (q >= basis.order())
            throw InvalidArgument("derivative order q=" + std::to_string(q) + " must be below the B-spline order " +
                                  std::to_string(basis.order()));
        FeatureMap f;
        f.kind_ = SemimetricKind::deriv;
        f.q_ = q;
        f.basis_ = basis;
        Eigen::SelfAdjointEigenSolver<Matrix> es(derivative_gram(basis, q));
        const Vector lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        f.transform_ = es.eigenvectors() * lam.asDiagonal();
        return f;
    }

    /// Scores on the top-q eigenvectors of the reference covariance,
    /// centered by the reference mean, with grid weight (b-a)/(p-1).
    static FeatureMap pca(const FunctionalSample& ref, int q) {
        const Index n = ref.size(), p = ref.points();
        if (q < 1 || q > std::min(n, p))
            throw InvalidArgument("pca semimetric: q=" + std::to_string(q) + " outside [1, " +
                                  std::to_string(std::min(n, p)) + "]");
        FeatureMap f;
        f.kind_ = SemimetricKind::pca;
        f.q_ = q;
        f.mean_ = ref.values.colwise().mean().transpose();
        const double w = ref.domain.length() / static_cast<double>(p - 1);
        const Matrix xc = ref.values.rowwise() - f.mean_.transpose();
        const Matrix cov = (xc.transpose() * xc) * (w / static_cast<double>(n));
        Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
        Matrix v(p, q);
        for (int k = 0; k < q; ++k) v.col(k) = es.eigenvectors().col(p - 1 - k);
        f.transform_ = v * std::sqrt(w);
        f.grid_ = ref.grid;
        return f;
    }

    [[nodiscard]] Matrix features(const FunctionalSample& x) const {
        if (kind_ == SemimetricKind::deriv) return project_curves(x, basis_).coefs * transform_;
        if (x.points() != grid_.size()) throw DataError("pca semimetric: query grid differs from the reference grid");
        return (x.values.rowwise() - mean_.transpose()) * transform_;
    }

    [[nodiscard]] SemimetricKind kind() const { return kind_; }
    [[nodiscard]] int q() const { return q_; }

private:
    SemimetricKind kind_ = SemimetricKind::deriv;
    int q_ = 0;
    BSplineBasis basis_;
    Matrix transform_;
    Vector mean_;
    Vector grid_;
};

/// |<theta, x_i - chi_j>|.
inline DistanceMatrix semimetric_projection(const IndexCoefficients& theta, const CurveCoefficients& ref,
                                            const CurveCoefficients& query, const Matrix& gram) {
    if (!(ref.basis == query.basis)) throw InvalidArgument("projection semimetric: curves use different bases");
    const Vector a = inner_product(theta, ref, gram);
    const Vector b = inner_product(theta, query, gram);
    return {feature_distances(a, b), SemimetricKind::projection, 0};
}

inline DistanceMatrix semimetric_deriv(const FunctionalSample& ref, const FunctionalSample& query, int q,
                                       const BSplineBasis& basis) {
    if (!ref.same_grid(query)) throw DataError("deriv semimetric: samples live on different grids");
    const FeatureMap f = FeatureMap::deriv(basis, q);
    return {feature_distances(f.features(ref), f.features(query)), SemimetricKind::deriv, q};
}

inline DistanceMatrix semimetric_pca(const FunctionalSample& ref, const FunctionalSample& query, int q) {
    if (!ref.same_grid(query)) throw DataError("pca semimetric: samples live on different grids");
    const FeatureMap f = FeatureMap::pca(ref, q);
    return {feature_distances(f.features(ref), f.features(query)), SemimetricKind::pca, q};
}

}  // namespace fsr
