#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fsim.hpp"
#include "penalty.hpp"

namespace fsr {

struct PlmConfig {
    TuningGridConfig grid;
    IndexBasisConfig basis;  // curve basis; direction basis for the single-index model
    SemimetricKind semimetric = SemimetricKind::deriv;
    int q = -1;  // -1: 0 for deriv, 2 for pca
    PenaltySpec penalty;
    std::vector<int> vn;  // candidate group counts; empty: one group per column
    LambdaPathConfig lambda;
    CriterionSpec criterion;
    PelsOptions pels;

    [[nodiscard]] int semimetric_q() const { return q >= 0 ? q : (semimetric == SemimetricKind::pca ? 2 : 0); }
};

struct SfplFit {
    SmootherKind kind = SmootherKind::kernel;
    bool single_index = false;
    Vector beta;
    Tuning tuning;
    double lambda = 0.0;
    double ic = kInf;
    double q = kInf;
    int vn = 0;
    bool converged = true;
    std::optional<IndexCoefficients> theta;
    Vector fitted;
    Vector residuals;
    Diagnostics diag;
    int candidates = 0;
    // per tuning candidate at the selected direction
    std::vector<Tuning> grid;
    std::vector<double> grid_ic;
    // training snapshot
    FunctionalSample x;
    Matrix z;
    Vector y;
    PlmConfig config;

    [[nodiscard]] std::vector<int> selected() const {
        std::vector<int> s;
        for (Index j = 0; j < beta.size(); ++j)
            if (beta(j) != 0.0) s.push_back(static_cast<int>(j));
        return s;
    }
};

/// Leave-one-out partialling out: (y - W y, Z - W Z).
inline std::pair<Vector, Matrix> partial_out(const Matrix& self_dist, const Matrix& z, const Vector& y,
                                             const Tuning& t, double eps = kKnnInflation) {
    const Matrix w = loo_weight_matrix(self_dist, t, eps);
    return {y - w * y, z - w * z};
}

namespace detail {

struct LinearStep {
    bool ok = false;
    Tuning tuning;
    Vector beta;
    double lambda = 0.0;
    double ic = kInf;
    double q = kInf;
    int vn = 0;
    bool converged = true;
    std::vector<Tuning> grid;
    std::vector<double> grid_ic;
};

// PeLS on the partialled-out data for one tuning candidate; ties between
// group counts go to more groups.
inline LinearStep linear_candidate(const Matrix& self_dist, const Matrix& z, const Vector& y, const Tuning& t,
                                   const PlmConfig& cfg) {
    LinearStep s;
    s.tuning = t;
    Vector yt;
    Matrix zt;
    try {
        std::tie(yt, zt) = partial_out(self_dist, z, y, t, cfg.grid.knn_eps);
    } catch (const EmptyNeighborhood&) {
        return s;
    }
    const Index n = y.size(), p = z.cols();
    if (p == 0) {
        const double rss = yt.squaredNorm();
        s.beta = Vector(0);
        s.q = 0.5 * rss;
        s.ic = cfg.criterion.kind == CriterionKind::kfold_cv ? rss / static_cast<double>(n)
                                                             : criterion_value(rss, n, 0.0, cfg.criterion.kind);
        s.ok = std::isfinite(s.ic) || s.ic == -1e308;
        return s;
    }
    std::vector<int> vns = cfg.vn.empty() ? std::vector<int>{static_cast<int>(p)} : cfg.vn;
    std::sort(vns.begin(), vns.end(), std::greater<>());
    for (int vn : vns) {
        PenaltySpec spec = cfg.penalty;
        spec.groups = contiguous_groups(static_cast<int>(p), vn);
        PelsFit f;
        try {
            f = pels_select(zt, yt, spec, cfg.lambda, cfg.criterion, cfg.pels, false);
        } catch (const NumericError&) {
            continue;
        }
        const auto& sol = f.selected();
        if (!s.ok || sol.criterion < s.ic) {
            s.ok = true;
            s.beta = sol.beta;
            s.lambda = sol.lambda;
            s.ic = sol.criterion;
            s.q = sol.objective;
            s.vn = vn;
            s.converged = sol.converged;
        }
    }
    return s;
}

// Best tuning candidate by criterion (ties: earlier candidate).
inline LinearStep linear_step(const Matrix& self_dist, const Matrix& z, const Vector& y, SmootherKind kind,
                              const PlmConfig& cfg, bool parallel) {
    const auto grid = tuning_grid(kind, self_dist, cfg.grid);
    std::vector<LinearStep> cand(grid.size());
    auto run = [&](std::size_t g) { cand[g] = linear_candidate(self_dist, z, y, grid[g], cfg); };
    if (parallel)
        parallel_for(grid.size(), run);
    else
        for (std::size_t g = 0; g < grid.size(); ++g) run(g);
    std::vector<double> ic(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) ic[g] = cand[g].ok ? cand[g].ic : kInf;
    std::size_t best = grid.size();
    for (std::size_t g = 0; g < grid.size(); ++g)
        if (cand[g].ok && (best == grid.size() || cand[g].ic < cand[best].ic)) best = g;
    if (best == grid.size()) return {};
    LinearStep out = std::move(cand[best]);
    out.grid = grid;
    out.grid_ic = std::move(ic);
    return out;
}

inline void check_plm(const FunctionalSample& x, const Matrix& z, const Vector& y) {
    check_xy(x, y);
    if (z.rows() != y.size())
        throw DataError("z has " + std::to_string(z.rows()) + " rows but y has " + std::to_string(y.size()) +
                        " values");
    if (!z.allFinite()) throw DataError("scalar covariates contain NaN or infinity");
}

inline FeatureMap plm_feature_map(const FunctionalSample& x, const PlmConfig& cfg) {
    const int q = cfg.semimetric_q();
    switch (cfg.semimetric) {
        case SemimetricKind::deriv:
            return FeatureMap::deriv(BSplineBasis(cfg.basis.order, cfg.basis.curve_knots(x.points()), x.domain), q);
        case SemimetricKind::pca:
            return FeatureMap::pca(x, q);
        case SemimetricKind::projection:
            break;
    }
    throw InvalidArgument("the partial linear model needs the deriv or pca semimetric");
}

// Distances from training curves (rows) to query curves (columns).
inline Matrix plm_distances(const SfplFit& fit, const FunctionalSample& query) {
    if (fit.single_index) {
        const IndexContext ctx = IndexContext::build(fit.x, fit.config.basis);
        return projection_distances(ctx.projections_of(fit.x, fit.theta->alpha),
                                    ctx.projections_of(query, fit.theta->alpha));
    }
    const FeatureMap f = plm_feature_map(fit.x, fit.config);
    return feature_distances(f.features(fit.x), f.features(query));
}

// Smooths the partial residuals at the winning tuning and fills fitted values.
inline void finish_plm(SfplFit& fit, const Matrix& self_dist) {
    const Vector partial = fit.y - fit.z * fit.beta;
    const double eps = fit.config.grid.knn_eps;
    const auto sm = smooth_predict(self_dist, partial, fit.tuning, eps);
    fit.fitted = fit.z * fit.beta + sm.values;
    fit.residuals = fit.y - fit.fitted;
    const double tr = smoother_matrix(self_dist, fit.tuning, eps).trace();
    const double df = static_cast<double>(fit.y.size()) - tr - static_cast<double>(fit.selected().size());
    fit.diag = diagnostics_from(fit.residuals, fit.y, std::max(df, 1.0));  // clipped for tiny samples
}

inline void store(SfplFit& fit, LinearStep&& s) {
    fit.beta = std::move(s.beta);
    fit.tuning = s.tuning;
    fit.lambda = s.lambda;
    fit.ic = s.ic;
    fit.q = s.q;
    fit.vn = s.vn;
    fit.converged = s.converged;
    fit.grid = std::move(s.grid);
    fit.grid_ic = std::move(s.grid_ic);
}

inline void check_vn(const PlmConfig& cfg, Index p) {
    for (int vn : cfg.vn)
        if (vn < 1 || vn > p)
            throw InvalidArgument("vn value " + std::to_string(vn) + " outside [1, " + std::to_string(p) + "]");
}

}  // namespace detail

/// Semi-functional partial linear model: partial out, penalized linear step
/// per tuning candidate, then smooth the partial residuals.
inline SfplFit sfplm_fit(const FunctionalSample& x, const Matrix& z, const Vector& y, SmootherKind kind,
                         const PlmConfig& cfg) {
    detail::check_plm(x, z, y);
    cfg.grid.validate();
    detail::check_vn(cfg, z.cols());
    const FeatureMap f = detail::plm_feature_map(x, cfg);
    const Matrix feats = f.features(x);
    const Matrix self_dist = feature_distances(feats, feats);
    auto step = detail::linear_step(self_dist, z, y, kind, cfg, true);
    if (!step.ok) throw NumericError("every tuning candidate is infeasible");
    SfplFit fit;
    fit.kind = kind;
    fit.candidates = static_cast<int>(step.grid.size());
    fit.x = x;
    fit.z = z;
    fit.y = y;
    fit.config = cfg;
    detail::store(fit, std::move(step));
    detail::finish_plm(fit, self_dist);
    return fit;
}

/// Semi-functional partial linear single-index model: the linear step for every
/// direction in the seed grid; the direction minimizing Q wins (ties: first).
inline SfplFit sfplsim_fit(const FunctionalSample& x, const Matrix& z, const Vector& y, SmootherKind kind,
                           const PlmConfig& cfg) {
    detail::check_plm(x, z, y);
    cfg.grid.validate();
    detail::check_vn(cfg, z.cols());
    const IndexContext ctx = IndexContext::build(x, cfg.basis);
    const auto thetas = enumerate_theta_grid(cfg.basis.seed_coeff, ctx.theta_basis, ctx.theta_gram, ctx.t0);
    std::vector<detail::LinearStep> steps(thetas.size());
    parallel_for(thetas.size(), [&](std::size_t i) {
        const Vector u = ctx.projections(thetas[i]);
        try {
            steps[i] = detail::linear_step(projection_distances(u, u), z, y, kind, cfg, false);
        } catch (const NumericError&) {
            steps[i] = {};
        }
    });
    std::vector<double> q(thetas.size());
    for (std::size_t i = 0; i < thetas.size(); ++i) q[i] = steps[i].ok ? steps[i].q : kInf;
    const std::size_t best = argmin_first(q);
    if (best == q.size() || !std::isfinite(q[best])) throw NumericError("every (theta, tuning) candidate is infeasible");
    SfplFit fit;
    fit.kind = kind;
    fit.single_index = true;
    fit.theta = IndexCoefficients{thetas[best], ctx.theta_basis};
    fit.candidates = static_cast<int>(thetas.size());
    fit.x = x;
    fit.z = z;
    fit.y = y;
    fit.config = cfg;
    detail::store(fit, std::move(steps[best]));
    const Vector u = ctx.projections_of(x, fit.theta->alpha);
    detail::finish_plm(fit, projection_distances(u, u));
    return fit;
}

/// Option 1 reuses every estimate; option 2 keeps beta (and theta) and
/// reselects the tuning by LOOCV on the training partial residuals.
inline PredictionReport plm_predict(const SfplFit& fit, const FunctionalSample& new_x, const Matrix& new_z,
                                    const std::optional<Vector>& y_test = std::nullopt, int option = 1,
                                    const std::optional<TuningGridConfig>& reselect = std::nullopt) {
    if (option != 1 && option != 2) throw InvalidArgument("partial linear prediction option must be 1 or 2");
    if (!fit.x.same_grid(new_x)) throw DataError("new curves are not on the training grid");
    if (new_z.rows() != new_x.size() || new_z.cols() != fit.z.cols())
        throw DataError("new scalar covariates have shape " + std::to_string(new_z.rows()) + "x" +
                        std::to_string(new_z.cols()) + ", expected " + std::to_string(new_x.size()) + "x" +
                        std::to_string(fit.z.cols()));
    const Vector partial = fit.y - fit.z * fit.beta;
    const double eps = fit.config.grid.knn_eps;
    Tuning t = fit.tuning;
    if (option == 2) {
        const Matrix self_dist = detail::plm_distances(fit, fit.x);
        t = select_tuning(self_dist, partial, fit.kind, reselect.value_or(fit.config.grid)).tuning;
    }
    const auto sm = smooth_predict(detail::plm_distances(fit, new_x), partial, t, eps);
    return make_report(std::to_string(option), new_z * fit.beta + sm.values, sm.failed, y_test);
}

}  // namespace fsr
