#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"

namespace fsr {

/// n curves observed on a common, strictly increasing grid over [a,b].
struct FunctionalSample {
    Matrix values;  // n x p
    Vector grid;    // p
    Interval domain;

    FunctionalSample() = default;
    FunctionalSample(Matrix v, Vector g, Interval d) : values(std::move(v)), grid(std::move(g)), domain(d) {
        validate();
    }

    /// Equispaced grid over the domain, endpoints included.
    static FunctionalSample equispaced(Matrix v, Interval d) {
        const Index p = v.cols();
        if (p < 2) throw DataError("a functional sample needs at least 2 grid points");
        Vector g = Vector::LinSpaced(p, d.lo, d.hi);
        return FunctionalSample(std::move(v), std::move(g), d);
    }

    [[nodiscard]] Index size() const { return values.rows(); }
    [[nodiscard]] Index points() const { return values.cols(); }

    [[nodiscard]] FunctionalSample subset(const std::vector<int>& rows) const {
        FunctionalSample s;
        s.values = take_rows(values, rows);
        s.grid = grid;
        s.domain = domain;
        return s;
    }

    void validate() const {
        if (values.rows() < 1) throw DataError("a functional sample needs at least one curve");
        if (values.cols() < 2) throw DataError("a functional sample needs at least 2 grid points");
        if (grid.size() != values.cols())
            throw DataError("grid has " + std::to_string(grid.size()) + " points but curves have " +
                            std::to_string(values.cols()));
        if (!(domain.lo < domain.hi)) throw DataError("degenerate curve domain");
        for (Index j = 1; j < grid.size(); ++j)
            if (!(grid(j) > grid(j - 1))) throw DataError("grid is not strictly increasing");
        if (!values.allFinite()) throw DataError("curve values contain NaN or infinity");
    }

    [[nodiscard]] bool same_grid(const FunctionalSample& o, double tol = 1e-9) const {
        if (grid.size() != o.grid.size()) return false;
        const double scale = std::max(1.0, domain.length());
        return (grid - o.grid).cwiseAbs().maxCoeff() <= tol * scale &&
               std::abs(domain.lo - o.domain.lo) <= tol * scale && std::abs(domain.hi - o.domain.hi) <= tol * scale;
    }
};

/// B-spline basis of order l (degree l-1) with n_r equispaced interior knots on
/// an open knot vector.
class BSplineBasis {
public:
    BSplineBasis() : BSplineBasis(1, 0, Interval{0.0, 1.0}) {}

    BSplineBasis(int order, int n_interior_knots, Interval domain)
        : order_(order), nr_(n_interior_knots), domain_(domain) {
        if (order < 1) throw InvalidArgument("B-spline order must be >= 1");
        if (n_interior_knots < 0) throw InvalidArgument("interior knot count must be >= 0");
        if (!(domain.lo < domain.hi)) throw InvalidArgument("degenerate B-spline domain");
        knots_.reserve(static_cast<std::size_t>(2 * order + n_interior_knots));
        for (int i = 0; i < order; ++i) knots_.push_back(domain.lo);
        for (int i = 1; i <= n_interior_knots; ++i)
            knots_.push_back(domain.lo + domain.length() * i / (n_interior_knots + 1));
        for (int i = 0; i < order; ++i) knots_.push_back(domain.hi);
    }

    [[nodiscard]] int order() const { return order_; }
    [[nodiscard]] int interior_knots() const { return nr_; }
    [[nodiscard]] int dimension() const { return order_ + nr_; }
    [[nodiscard]] const Interval& domain() const { return domain_; }
    [[nodiscard]] const std::vector<double>& knots() const { return knots_; }

    /// Distinct knot values a = u_0 < ... < u_{n_r+1} = b.
    [[nodiscard]] std::vector<double> breakpoints() const {
        std::vector<double> u(knots_.begin() + order_ - 1, knots_.end() - order_ + 1);
        return u;
    }

    /// Values of all d basis functions (or their q-th derivatives) at t.
    [[nodiscard]] Vector eval(double t, int deriv = 0) const {
        check_point(t);
        if (deriv < 0) throw InvalidArgument("derivative order must be >= 0");
        const int d = dimension();
        if (deriv >= order_) return Vector::Zero(d);
        const int m = static_cast<int>(knots_.size());
        const int span = find_span(t);
        const int low = order_ - deriv;

        // Cox-de Boor over every index; 0/0 terms vanish.
        std::vector<double> b(static_cast<std::size_t>(m - 1), 0.0);
        b[static_cast<std::size_t>(span)] = 1.0;
        for (int k = 2; k <= low; ++k) {
            for (int j = 0; j < m - k; ++j) {
                double v = 0.0;
                const double d1 = knots_[j + k - 1] - knots_[j];
                const double d2 = knots_[j + k] - knots_[j + 1];
                if (d1 > 0.0) v += (t - knots_[j]) / d1 * b[j];
                if (d2 > 0.0) v += (knots_[j + k] - t) / d2 * b[j + 1];
                b[j] = v;
            }
        }
        for (int k = low + 1; k <= order_; ++k) {
            for (int j = 0; j < m - k; ++j) {
                double v = 0.0;
                const double d1 = knots_[j + k - 1] - knots_[j];
                const double d2 = knots_[j + k] - knots_[j + 1];
                if (d1 > 0.0) v += b[j] / d1;
                if (d2 > 0.0) v -= b[j + 1] / d2;
                b[j] = (k - 1) * v;
            }
        }
        Vector out(d);
        for (int j = 0; j < d; ++j) out(j) = b[j];
        return out;
    }

    /// Evaluates the expansion sum_j coefs_j B_j^{(deriv)}(t).
    [[nodiscard]] double eval_expansion(const Vector& coefs, double t, int deriv = 0) const {
        if (coefs.size() != dimension()) throw InvalidArgument("coefficient length differs from basis dimension");
        return eval(t, deriv).dot(coefs);
    }

    friend bool operator==(const BSplineBasis& a, const BSplineBasis& b) {
        return a.order_ == b.order_ && a.nr_ == b.nr_ && a.domain_ == b.domain_;
    }

private:
    void check_point(double t) const {
        const double slack = 1e-12 * std::max(1.0, domain_.length());
        if (!(t >= domain_.lo - slack && t <= domain_.hi + slack))
            throw InvalidArgument("evaluation point " + std::to_string(t) + " outside the basis domain");
    }

    // Index i with knots[i] <= t < knots[i+1]; t = b goes to the last nonempty span.
    [[nodiscard]] int find_span(double t) const {
        const int last = dimension() - 1;
        if (t >= knots_[static_cast<std::size_t>(last) + 1]) return last;
        if (t <= knots_[static_cast<std::size_t>(order_) - 1]) return order_ - 1;
        auto it = std::upper_bound(knots_.begin() + order_ - 1, knots_.begin() + last + 2, t);
        return static_cast<int>(it - knots_.begin()) - 1;
    }

    int order_;
    int nr_;
    Interval domain_;
    std::vector<double> knots_;
};

inline BSplineBasis build_basis(int order, int n_interior_knots, Interval domain) {
    return BSplineBasis(order, n_interior_knots, domain);
}

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussLegendre(int n) : nodes(static_cast<std::size_t>(n)), weights(static_cast<std::size_t>(n)) {
        if (n < 1) throw InvalidArgument("Gauss-Legendre needs at least one node");
        for (int i = 0; i < (n + 1) / 2; ++i) {
            double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                const auto [pn, pm] = legendre(n, x);
                dp = n * (x * pn - pm) / (x * x - 1.0);
                const double dx = pn / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            const auto [pn, pm] = legendre(n, x);
            dp = n * (x * pn - pm) / (x * x - 1.0);
            const double w = 2.0 / ((1.0 - x * x) * dp * dp);
            const auto lo = static_cast<std::size_t>(i), hi = static_cast<std::size_t>(n - 1 - i);
            nodes[lo] = -x;
            nodes[hi] = x;
            weights[lo] = weights[hi] = w;
        }
        if (n % 2 == 1) nodes[static_cast<std::size_t>(n / 2)] = 0.0;
    }

private:
    // (P_n(x), P_{n-1}(x)) by the three-term recurrence.
    static std::pair<double, double> legendre(int n, double x) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        return {p1, p0};
    }
};

namespace detail {

inline std::vector<double> merged_breakpoints(const BSplineBasis& a, const BSplineBasis& b) {
    if (!(a.domain() == b.domain())) throw InvalidArgument("bases live on different domains");
    std::vector<double> u = a.breakpoints();
    const auto v = b.breakpoints();
    u.insert(u.end(), v.begin(), v.end());
    std::sort(u.begin(), u.end());
    const double tol = 1e-12 * std::max(1.0, a.domain().length());
    std::vector<double> out;
    for (double x : u)
        if (out.empty() || x - out.back() > tol) out.push_back(x);
    return out;
}

}  // namespace detail

/// G[i][j] = int e_i^{(qa)} f_j^{(qb)} over the shared domain, by Gauss-Legendre
/// on every span of the merged knot set. Exact for spline products.
inline Matrix cross_gram(const BSplineBasis& a, const BSplineBasis& b, int qa = 0, int qb = 0) {
    const auto u = detail::merged_breakpoints(a, b);
    const GaussLegendre gl(std::max(a.order(), b.order()) + 1);
    Matrix g = Matrix::Zero(a.dimension(), b.dimension());
    for (std::size_t s = 0; s + 1 < u.size(); ++s) {
        const double half = 0.5 * (u[s + 1] - u[s]);
        const double mid = 0.5 * (u[s + 1] + u[s]);
        for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
            const double t = mid + half * gl.nodes[k];
            const Vector ea = a.eval(t, qa);
            const Vector eb = b.eval(t, qb);
            g.noalias() += (half * gl.weights[k]) * ea * eb.transpose();
        }
    }
    return g;
}

inline Matrix gram_matrix(const BSplineBasis& basis) {
    Matrix g = cross_gram(basis, basis);
    return 0.5 * (g + g.transpose());
}

/// Gram matrix of q-th derivatives.
inline Matrix derivative_gram(const BSplineBasis& basis, int q) {
    Matrix g = cross_gram(basis, basis, q, q);
    return 0.5 * (g + g.transpose());
}

/// p x d matrix of basis values at the grid points.
inline Matrix design_matrix(const BSplineBasis& basis, const Vector& grid) {
    Matrix b(grid.size(), basis.dimension());
    for (Index j = 0; j < grid.size(); ++j) b.row(j) = basis.eval(grid(j)).transpose();
    return b;
}

/// Basis coefficients of each curve (rows).
struct CurveCoefficients {
    Matrix coefs;  // n x d
    BSplineBasis basis;
};

/// Coefficients of a direction theta in a B-spline basis.
struct IndexCoefficients {
    Vector alpha;
    BSplineBasis basis;

    [[nodiscard]] double operator()(double t) const { return basis.eval_expansion(alpha, t); }
};

/// Least-squares fit of every curve against the grid design matrix.
inline CurveCoefficients project_curves(const FunctionalSample& sample, const BSplineBasis& basis) {
    const auto& dom = basis.domain();
    const double tol = 1e-9 * std::max(1.0, dom.length());
    if (std::abs(dom.lo - sample.domain.lo) > tol || std::abs(dom.hi - sample.domain.hi) > tol)
        throw InvalidArgument("basis domain differs from the sample domain");
    if (basis.dimension() > sample.points())
        throw NumericError("basis dimension " + std::to_string(basis.dimension()) + " exceeds the " +
                           std::to_string(sample.points()) + " grid points");
    const Matrix b = design_matrix(basis, sample.grid);
    Eigen::ColPivHouseholderQR<Matrix> qr(b);
    if (qr.rank() < basis.dimension()) throw NumericError("rank-deficient basis design on this grid");
    CurveCoefficients out{qr.solve(sample.values.transpose()).transpose(), basis};
    return out;
}

/// <theta, x_i> for every curve; gram is the cross Gram of the theta basis
/// against the curve basis.
inline Vector inner_product(const IndexCoefficients& theta, const CurveCoefficients& curves, const Matrix& gram) {
    if (gram.rows() != theta.alpha.size() || gram.cols() != curves.coefs.cols())
        throw InvalidArgument("inner_product: dimension mismatch between theta, curves and Gram matrix");
    return curves.coefs * (gram.transpose() * theta.alpha);
}

}  // namespace fsr
