#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "parallel.hpp"

namespace fsr {

/// Asymmetric Epanechnikov ("quad") kernel on [0, 1].
inline double kernel_quad(double u) noexcept { return (u >= 0.0 && u <= 1.0) ? 1.5 * (1.0 - u * u) : 0.0; }

inline constexpr double kKnnInflation = 1e-9;

/// k-th smallest distance (1-based k).
inline double knn_bandwidth(const Vector& distances, int k) {
    if (k < 1 || k > distances.size())
        throw InvalidArgument("k=" + std::to_string(k) + " outside [1, " + std::to_string(distances.size()) + "]");
    std::vector<double> d(distances.data(), distances.data() + distances.size());
    std::nth_element(d.begin(), d.begin() + (k - 1), d.end());
    return d[static_cast<std::size_t>(k - 1)];
}

/// Unnormalized kernel weights K(d_i / h).
inline Vector kernel_weights(const Vector& distances, double h) {
    if (!(h > 0.0)) throw InvalidArgument("bandwidth must be positive");
    Vector w(distances.size());
    for (Index i = 0; i < distances.size(); ++i) w(i) = kernel_quad(distances(i) / h);
    if (!(w.sum() > 0.0)) throw EmptyNeighborhood("no curve within bandwidth h=" + std::to_string(h));
    return w;
}

/// Unnormalized kNN weights: quad kernel with local bandwidth (1+eps) times the
/// k-th nearest distance. If that distance is zero the zero-distance points
/// share equal weight.
inline Vector knn_weights(const Vector& distances, int k, double eps = kKnnInflation) {
    const double hk = knn_bandwidth(distances, k);
    Vector w(distances.size());
    if (hk == 0.0) {
        for (Index i = 0; i < distances.size(); ++i) w(i) = distances(i) == 0.0 ? 1.0 : 0.0;
        return w;
    }
    const double h = (1.0 + eps) * hk;
    for (Index i = 0; i < distances.size(); ++i) w(i) = kernel_quad(distances(i) / h);
    return w;
}

inline Vector smoother_weights(const Vector& distances, const Tuning& t, double eps = kKnnInflation) {
    return t.kind == SmootherKind::kernel ? kernel_weights(distances, t.h) : knn_weights(distances, t.k, eps);
}

inline double weighted_mean(const Vector& w, const Vector& y) { return w.dot(y) / w.sum(); }

inline double nw_estimate(const Vector& distances, const Vector& responses, double h) {
    if (distances.size() != responses.size()) throw InvalidArgument("distances and responses differ in length");
    return weighted_mean(kernel_weights(distances, h), responses);
}

inline double knn_estimate(const Vector& distances, const Vector& responses, int k, double eps = kKnnInflation) {
    if (distances.size() != responses.size()) throw InvalidArgument("distances and responses differ in length");
    return weighted_mean(knn_weights(distances, k, eps), responses);
}

/// Estimates at m queries from an n x m train-to-query distance matrix.
/// Queries whose neighbourhood is empty get NaN and are listed in `failed`.
struct SmoothPrediction {
    Vector values;
    std::vector<int> failed;
};

inline SmoothPrediction smooth_predict(const Matrix& dist, const Vector& y, const Tuning& t,
                                       double eps = kKnnInflation) {
    if (dist.rows() != y.size()) throw InvalidArgument("distance rows differ from the response length");
    SmoothPrediction out{Vector(dist.cols()), {}};
    for (Index j = 0; j < dist.cols(); ++j) {
        try {
            out.values(j) = weighted_mean(smoother_weights(dist.col(j), t, eps), y);
        } catch (const EmptyNeighborhood&) {
            out.values(j) = std::numeric_limits<double>::quiet_NaN();
            out.failed.push_back(static_cast<int>(j));
        }
    }
    return out;
}

/// Row j holds the normalized weights used to estimate at query j (m x n).
inline Matrix smoother_matrix(const Matrix& dist, const Tuning& t, double eps = kKnnInflation) {
    Matrix s(dist.cols(), dist.rows());
    for (Index j = 0; j < dist.cols(); ++j) {
        const Vector w = smoother_weights(dist.col(j), t, eps);
        s.row(j) = (w / w.sum()).transpose();
    }
    return s;
}

/// Leave-one-out weights on a self-distance matrix: row j excludes point j.
inline Matrix loo_weight_matrix(const Matrix& self_dist, const Tuning& t, double eps = kKnnInflation) {
    const Index n = self_dist.rows();
    if (self_dist.cols() != n) throw InvalidArgument("leave-one-out needs a square self-distance matrix");
    if (t.kind == SmootherKind::knn && (t.k < 1 || t.k > n - 1))
        throw InvalidArgument("leave-one-out kNN needs 1 <= k <= n-1");
    Matrix w(n, n);
    for (Index j = 0; j < n; ++j) {
        Vector d = self_dist.col(j);
        d(j) = kInf;
        const Vector k = smoother_weights(d, t, eps);
        w.row(j) = (k / k.sum()).transpose();
    }
    return w;
}

/// Mean squared leave-one-out error for one bandwidth; +inf when some left-out
/// point has an empty neighbourhood.
inline double loocv_kernel(const Matrix& self_dist, const Vector& y, double h) {
    const Index n = y.size();
    if (n < 2) throw InvalidArgument("leave-one-out needs at least 2 observations");
    if (!(h > 0.0)) throw InvalidArgument("bandwidth must be positive");
    double sse = 0.0;
    for (Index j = 0; j < n; ++j) {
        double num = 0.0, den = 0.0;
        for (Index i = 0; i < n; ++i) {
            if (i == j) continue;
            const double k = kernel_quad(self_dist(i, j) / h);
            num += k * y(i);
            den += k;
        }
        if (!(den > 0.0)) return kInf;
        const double e = y(j) - num / den;
        sse += e * e;
    }
    return sse / static_cast<double>(n);
}

/// LOOCV scores for a list of k values. Each column is sorted once.
inline std::vector<double> loocv_knn_scores(const Matrix& self_dist, const Vector& y, const std::vector<int>& ks,
                                            double eps = kKnnInflation) {
    const Index n = y.size();
    if (n < 2) throw InvalidArgument("leave-one-out needs at least 2 observations");
    for (int k : ks)
        if (k < 1 || k > n - 1) throw InvalidArgument("leave-one-out kNN needs 1 <= k <= n-1");
    std::vector<double> sse(ks.size(), 0.0);
    std::vector<std::pair<double, Index>> row(static_cast<std::size_t>(n - 1));
    for (Index j = 0; j < n; ++j) {
        std::size_t c = 0;
        for (Index i = 0; i < n; ++i)
            if (i != j) row[c++] = {self_dist(i, j), i};
        std::sort(row.begin(), row.end());
        for (std::size_t g = 0; g < ks.size(); ++g) {
            const double hk = row[static_cast<std::size_t>(ks[g] - 1)].first;
            double num = 0.0, den = 0.0;
            if (hk == 0.0) {
                for (std::size_t i = 0; i < row.size() && row[i].first == 0.0; ++i) {
                    num += y(row[i].second);
                    den += 1.0;
                }
            } else {
                const double h = (1.0 + eps) * hk;
                for (std::size_t i = 0; i < row.size() && row[i].first < h; ++i) {
                    const double k = kernel_quad(row[i].first / h);
                    num += k * y(row[i].second);
                    den += k;
                }
            }
            const double e = y(j) - num / den;
            sse[g] += e * e;
        }
    }
    for (auto& s : sse) s /= static_cast<double>(n);
    return sse;
}

inline double loocv_knn(const Matrix& self_dist, const Vector& y, int k, double eps = kKnnInflation) {
    return loocv_knn_scores(self_dist, y, {k}, eps).front();
}

struct TuningGridConfig {
    double min_q_h = 0.05;
    double max_q_h = 0.5;
    int num_h = 10;
    std::vector<double> h_seq;
    int min_knn = 2;
    int max_knn = 0;  // 0: floor(n/5)
    int step = 0;     // 0: ceil(n/100)
    std::vector<int> knearest;
    double knn_eps = kKnnInflation;

    void validate() const {
        if (h_seq.empty()) {
            if (!(min_q_h > 0.0 && min_q_h < 1.0 && max_q_h > 0.0 && max_q_h <= 1.0))
                throw InvalidArgument("min.q.h and max.q.h must be quantile orders in (0,1)");
            if (!(min_q_h < max_q_h)) throw InvalidArgument("min.q.h must be below max.q.h");
            if (num_h < 1) throw InvalidArgument("num.h must be >= 1");
        }
        if (knearest.empty()) {
            if (min_knn < 1) throw InvalidArgument("min.knn must be >= 1");
            if (step < 0 || max_knn < 0) throw InvalidArgument("step and max.knn must be positive");
        }
        if (!(knn_eps >= 0.0)) throw InvalidArgument("kNN inflation must be >= 0");
    }
};

/// Type-7 (linear interpolation) quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& x, double prob) {
    if (x.empty()) throw InvalidArgument("quantile of an empty set");
    const double h = (static_cast<double>(x.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= x.size()) return x.back();
    return x[lo] + (h - static_cast<double>(lo)) * (x[lo + 1] - x[lo]);
}

/// num_h bandwidths equally spaced between two quantiles of the off-diagonal
/// distances; an explicit h_seq overrides. Nonpositive values are dropped.
inline std::vector<double> bandwidth_grid(const Matrix& self_dist, const TuningGridConfig& cfg) {
    std::vector<double> out;
    if (!cfg.h_seq.empty()) {
        for (double h : cfg.h_seq)
            if (h > 0.0) out.push_back(h);
        if (out.empty()) throw InvalidArgument("h.seq has no positive bandwidth");
        return out;
    }
    const Index n = self_dist.rows();
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Index j = 1; j < n; ++j)
        for (Index i = 0; i < j; ++i) d.push_back(self_dist(i, j));
    if (d.empty()) throw InvalidArgument("bandwidth grid needs at least two curves");
    std::sort(d.begin(), d.end());
    if (!(d.back() > 0.0)) throw NumericError("all distances are zero; no bandwidth grid");
    const double hi = quantile_sorted(d, cfg.max_q_h);
    if (cfg.num_h == 1) {
        if (hi > 0.0) out.push_back(hi);
    } else {
        const double lo = quantile_sorted(d, cfg.min_q_h);
        for (int i = 0; i < cfg.num_h; ++i) {
            const double h = (i == cfg.num_h - 1) ? hi : lo + (hi - lo) * i / (cfg.num_h - 1);
            if (h > 0.0) out.push_back(h);
        }
    }
    if (out.empty()) throw NumericError("bandwidth quantiles are zero; raise max.q.h");
    return out;
}

/// min_knn, min_knn+step, ... up to max_knn, never above n-1.
inline std::vector<int> knn_grid(Index n, const TuningGridConfig& cfg) {
    const int cap = static_cast<int>(n) - 1;
    if (!cfg.knearest.empty()) {
        for (int k : cfg.knearest)
            if (k < 1 || k > cap)
                throw InvalidArgument("knearest value " + std::to_string(k) + " outside [1, " + std::to_string(cap) +
                                      "]");
        return cfg.knearest;
    }
    const int max_k = std::min(cfg.max_knn > 0 ? cfg.max_knn : static_cast<int>(n / 5), cap);
    const int step = cfg.step > 0 ? cfg.step : static_cast<int>((n + 99) / 100);
    std::vector<int> ks;
    for (int k = cfg.min_knn; k <= max_k; k += step) ks.push_back(k);
    if (ks.empty())
        throw InvalidArgument("empty kNN grid: min.knn=" + std::to_string(cfg.min_knn) + " exceeds max " +
                              std::to_string(max_k) + " for n=" + std::to_string(n));
    return ks;
}

inline std::vector<Tuning> tuning_grid(SmootherKind kind, const Matrix& self_dist, const TuningGridConfig& cfg) {
    std::vector<Tuning> g;
    if (kind == SmootherKind::kernel) {
        for (double h : bandwidth_grid(self_dist, cfg)) g.push_back(Tuning::bandwidth(h));
    } else {
        for (int k : knn_grid(self_dist.rows(), cfg)) g.push_back(Tuning::neighbours(k));
    }
    return g;
}

/// LOOCV score of every candidate (same order as `grid`).
inline std::vector<double> loocv_scores(const Matrix& self_dist, const Vector& y, const std::vector<Tuning>& grid,
                                        double eps = kKnnInflation) {
    std::vector<double> scores(grid.size(), kInf);
    std::vector<int> ks;
    std::vector<std::size_t> knn_pos;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        if (grid[g].kind == SmootherKind::kernel) {
            scores[g] = loocv_kernel(self_dist, y, grid[g].h);
        } else {
            ks.push_back(grid[g].k);
            knn_pos.push_back(g);
        }
    }
    if (!ks.empty()) {
        const auto s = loocv_knn_scores(self_dist, y, ks, eps);
        for (std::size_t i = 0; i < s.size(); ++i) scores[knn_pos[i]] = s[i];
    }
    return scores;
}

struct TuningSelection {
    Tuning tuning;
    double cv = kInf;
    std::vector<Tuning> grid;
    std::vector<double> scores;
};

/// Grid minimizer of LOOCV; ties go to the earlier (smaller) candidate.
inline TuningSelection select_tuning(const Matrix& self_dist, const Vector& y, SmootherKind kind,
                                     const TuningGridConfig& cfg) {
    TuningSelection s;
    s.grid = tuning_grid(kind, self_dist, cfg);
    s.scores = loocv_scores(self_dist, y, s.grid, cfg.knn_eps);
    const std::size_t best = argmin_first(s.scores);
    if (best == s.scores.size() || !std::isfinite(s.scores[best]))
        throw EmptyNeighborhood("every bandwidth leaves some curve without neighbours");
    s.tuning = s.grid[best];
    s.cv = s.scores[best];
    return s;
}

}  // namespace fsr
