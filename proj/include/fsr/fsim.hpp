#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "basis.hpp"
#include "metrics.hpp"
#include "nelder_mead.hpp"
#include "parallel.hpp"
#include "smooth.hpp"

namespace fsr {

/// B-spline settings shared by every single-index fitter.
struct IndexBasisConfig {
    int order = 3;         // order.Bspline
    int nknot_theta = 3;   // interior knots of the direction basis
    int nknot = -1;        // interior knots of the curve basis; -1: floor((p - order - 1) / 2)
    std::vector<double> seed_coeff{-1.0, 0.0, 1.0};
    std::optional<double> t0;  // identifiability point, midpoint by default

    [[nodiscard]] int curve_knots(Index p) const {
        return nknot >= 0 ? nknot : std::max(0, static_cast<int>((p - order - 1) / 2));
    }
    [[nodiscard]] double t0_for(const Interval& dom) const { return t0 ? *t0 : 0.5 * (dom.lo + dom.hi); }
};

/// Curves in their B-spline representation plus the Gram machinery needed to
/// turn direction coefficients into projections <theta, x_i>.
struct IndexContext {
    BSplineBasis curve_basis;
    BSplineBasis theta_basis;
    CurveCoefficients curves;
    Matrix cross;  // theta basis x curve basis
    Matrix theta_gram;
    double t0 = 0.0;

    static IndexContext build(const FunctionalSample& x, const IndexBasisConfig& cfg) {
        IndexContext c;
        c.curve_basis = BSplineBasis(cfg.order, cfg.curve_knots(x.points()), x.domain);
        c.theta_basis = BSplineBasis(cfg.order, cfg.nknot_theta, x.domain);
        c.curves = project_curves(x, c.curve_basis);
        c.cross = cross_gram(c.theta_basis, c.curve_basis);
        c.theta_gram = gram_matrix(c.theta_basis);
        c.t0 = cfg.t0_for(x.domain);
        if (!x.domain.contains(c.t0)) throw InvalidArgument("t0 lies outside the curve domain");
        return c;
    }

    [[nodiscard]] Vector projections(const Vector& alpha) const {
        return inner_product(IndexCoefficients{alpha, theta_basis}, curves, cross);
    }
    [[nodiscard]] Vector projections_of(const FunctionalSample& x, const Vector& alpha) const {
        return inner_product(IndexCoefficients{alpha, theta_basis}, project_curves(x, curve_basis), cross);
    }
};

/// Unit-norm direction with theta(t0) > 0; a zero theta(t0) keeps its sign.
inline Vector calibrate_direction(const Vector& gamma, const Matrix& gram, const BSplineBasis& basis, double t0) {
    const double q = gamma.dot(gram * gamma);
    if (!(q > 0.0)) throw NumericError("direction has zero norm");
    Vector a = gamma / std::sqrt(q);
    if (basis.eval_expansion(a, t0) < 0.0) a = -a;
    return a;
}

/// Every seed vector beta in C^d with theta(t0) > 0, normalized to unit L2
/// norm, without duplicates, in lexicographic order of beta.
inline std::vector<Vector> enumerate_theta_grid(const std::vector<double>& seed_coeff, const BSplineBasis& basis,
                                                const Matrix& gram, double t0) {
    if (seed_coeff.empty()) throw InvalidArgument("seed.coeff is empty");
    const int d = basis.dimension();
    const int J = static_cast<int>(seed_coeff.size());
    const Vector e0 = basis.eval(t0);
    std::vector<Vector> out;
    std::map<std::vector<long long>, bool> seen;
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    Vector beta(d);
    for (;;) {
        for (int j = 0; j < d; ++j) beta(j) = seed_coeff[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
        if (beta.cwiseAbs().maxCoeff() > 0.0 && e0.dot(beta) > 1e-10) {
            const Vector a = beta / std::sqrt(beta.dot(gram * beta));
            std::vector<long long> key(static_cast<std::size_t>(d));
            for (int j = 0; j < d; ++j) key[static_cast<std::size_t>(j)] = std::llround(a(j) * 1e10);
            if (seen.emplace(std::move(key), true).second) out.push_back(a);
        }
        int pos = d - 1;
        while (pos >= 0 && ++idx[static_cast<std::size_t>(pos)] == J) idx[static_cast<std::size_t>(pos--)] = 0;
        if (pos < 0) break;
    }
    if (out.empty()) throw EmptyThetaGrid("no seed direction satisfies theta(t0) > 0");
    return out;
}

inline Matrix projection_distances(const Vector& ref, const Vector& query) { return feature_distances(ref, query); }

struct FsimConfig {
    IndexBasisConfig basis;
    TuningGridConfig grid;
    // iterative procedure
    std::vector<double> gamma;  // empty: all ones
    double threshold = 5e-3;
    int max_outer = 50;
    NelderMeadOptions nm{1e-4, 1000, 0.05, 0.00025};
};

struct FsimFit {
    SmootherKind kind = SmootherKind::kernel;
    bool iterative = false;
    IndexCoefficients theta;
    Tuning tuning;
    double cv_opt = kInf;
    Vector fitted;
    Vector residuals;
    Diagnostics diag;
    int candidates = 0;
    int iterations = 0;
    std::vector<double> cv_trace;  // accepted CV values (iterative)
    // training snapshot
    FunctionalSample x;
    Vector y;
    FsimConfig config;
};

namespace detail {

inline double smoother_df(const Matrix& self_dist, const Tuning& t, double eps) {
    const Matrix s = smoother_matrix(self_dist, t, eps);
    return static_cast<double>(s.rows()) - s.trace();
}

/// Leave-in estimates at queries given projections.
inline SmoothPrediction index_predict(const Vector& train_proj, const Vector& y, const Vector& query_proj,
                                      const Tuning& t, double eps) {
    return smooth_predict(projection_distances(train_proj, query_proj), y, t, eps);
}

inline void finish_fsim(FsimFit& fit, const IndexContext& ctx) {
    const Vector u = ctx.projections_of(fit.x, fit.theta.alpha);
    const double eps = fit.config.grid.knn_eps;
    fit.fitted = index_predict(u, fit.y, u, fit.tuning, eps).values;
    fit.residuals = fit.y - fit.fitted;
    fit.diag = diagnostics_from(fit.residuals, fit.y, smoother_df(projection_distances(u, u), fit.tuning, eps));
}

inline void check_xy(const FunctionalSample& x, const Vector& y) {
    if (x.size() != y.size())
        throw DataError("x has " + std::to_string(x.size()) + " curves but y has " + std::to_string(y.size()) +
                        " values");
    if (y.size() < 3) throw InvalidArgument("at least 3 observations are needed");
    if (!y.allFinite()) throw DataError("response contains NaN or infinity");
}

}  // namespace detail

/// Joint grid minimization of LOOCV over (theta, h) or (theta, k).
inline FsimFit fsim_fit_grid(const FunctionalSample& x, const Vector& y, SmootherKind kind, const FsimConfig& cfg) {
    detail::check_xy(x, y);
    cfg.grid.validate();
    const IndexContext ctx = IndexContext::build(x, cfg.basis);
    const auto thetas = enumerate_theta_grid(cfg.basis.seed_coeff, ctx.theta_basis, ctx.theta_gram, ctx.t0);

    std::vector<double> cv(thetas.size(), kInf);
    std::vector<Tuning> tun(thetas.size());
    parallel_for(thetas.size(), [&](std::size_t i) {
        const Vector u = ctx.projections(thetas[i]);
        try {
            const auto sel = select_tuning(projection_distances(u, u), y, kind, cfg.grid);
            cv[i] = sel.cv;
            tun[i] = sel.tuning;
        } catch (const NumericError&) {
            cv[i] = kInf;
        }
    });
    const std::size_t best = argmin_first(cv);
    if (best == cv.size() || !std::isfinite(cv[best]))
        throw NumericError("every (theta, tuning) candidate is infeasible");

    FsimFit fit;
    fit.kind = kind;
    fit.theta = {thetas[best], ctx.theta_basis};
    fit.tuning = tun[best];
    fit.cv_opt = cv[best];
    fit.candidates = static_cast<int>(thetas.size());
    fit.x = x;
    fit.y = y;
    fit.config = cfg;
    detail::finish_fsim(fit, ctx);
    return fit;
}

/// Alternates LOOCV tuning selection with Nelder-Mead over the direction
/// coefficients at fixed tuning.
inline FsimFit fsim_fit_iterative(const FunctionalSample& x, const Vector& y, SmootherKind kind,
                                  const FsimConfig& cfg) {
    detail::check_xy(x, y);
    cfg.grid.validate();
    const IndexContext ctx = IndexContext::build(x, cfg.basis);
    const int d = ctx.theta_basis.dimension();
    Vector gamma = Vector::Ones(d);
    if (!cfg.gamma.empty()) {
        if (static_cast<int>(cfg.gamma.size()) != d)
            throw InvalidArgument("gamma has " + std::to_string(cfg.gamma.size()) + " entries; the direction basis has " +
                                  std::to_string(d));
        for (int j = 0; j < d; ++j) gamma(j) = cfg.gamma[static_cast<std::size_t>(j)];
    }
    if (!(cfg.threshold >= 0.0)) throw InvalidArgument("threshold must be >= 0");
    const double vy = sample_variance(y);
    const double eps = cfg.grid.knn_eps;

    auto select_at = [&](const Vector& alpha) {
        const Vector u = ctx.projections(alpha);
        return select_tuning(projection_distances(u, u), y, kind, cfg.grid);
    };

    Vector alpha = calibrate_direction(gamma, ctx.theta_gram, ctx.theta_basis, ctx.t0);
    TuningSelection sel;
    try {
        sel = select_at(alpha);
    } catch (const NumericError& e) {
        throw NumericError(std::string("initial direction has no finite CV: ") + e.what());
    }
    FsimFit fit;
    fit.cv_trace.push_back(sel.cv);

    int it = 0;
    while (it < cfg.max_outer) {
        ++it;
        const Tuning fixed = sel.tuning;
        auto objective = [&](const Vector& g) {
            Vector a;
            try {
                a = calibrate_direction(g, ctx.theta_gram, ctx.theta_basis, ctx.t0);
            } catch (const NumericError&) {
                return kInf;
            }
            const Vector u = ctx.projections(a);
            return loocv_scores(projection_distances(u, u), y, {fixed}, eps).front();
        };
        const auto nm = nelder_mead(objective, alpha, cfg.nm);
        Vector next;
        TuningSelection next_sel;
        try {
            next = calibrate_direction(nm.x, ctx.theta_gram, ctx.theta_basis, ctx.t0);
            next_sel = select_at(next);
        } catch (const NumericError&) {
            break;
        }
        const double delta = vy > 0.0 ? (sel.cv - next_sel.cv) / vy : 0.0;
        if (!(delta > 0.0)) break;
        alpha = next;
        sel = next_sel;
        fit.cv_trace.push_back(sel.cv);
        if (delta < cfg.threshold) break;
    }

    fit.kind = kind;
    fit.iterative = true;
    fit.theta = {alpha, ctx.theta_basis};
    fit.tuning = sel.tuning;
    fit.cv_opt = sel.cv;
    fit.iterations = it;
    fit.x = x;
    fit.y = y;
    fit.config = cfg;
    detail::finish_fsim(fit, ctx);
    return fit;
}

inline FsimFit fsim_fit(const FunctionalSample& x, const Vector& y, SmootherKind kind, const FsimConfig& cfg,
                        bool iterative) {
    return iterative ? fsim_fit_iterative(x, y, kind, cfg) : fsim_fit_grid(x, y, kind, cfg);
}

/// Runs `fitter` for each candidate n_r and keeps the smallest score; ties go to
/// the earlier (smaller) candidate.
template <class Fit, class Fitter, class Score>
std::pair<int, Fit> select_nknot_theta(const std::vector<int>& candidates, Fitter&& fitter, Score&& score) {
    if (candidates.empty()) throw InvalidArgument("nknot.theta candidate list is empty");
    std::vector<int> sorted = candidates;
    std::sort(sorted.begin(), sorted.end());
    std::optional<Fit> best;
    int best_nr = sorted.front();
    for (int nr : sorted) {
        Fit f = fitter(nr);
        if (!best || score(f) < score(*best)) {
            best = std::move(f);
            best_nr = nr;
        }
    }
    return {best_nr, std::move(*best)};
}

inline std::pair<int, FsimFit> fsim_select_nknot_theta(const FunctionalSample& x, const Vector& y, SmootherKind kind,
                                                       FsimConfig cfg, const std::vector<int>& candidates,
                                                       bool iterative) {
    return select_nknot_theta<FsimFit>(
        candidates,
        [&](int nr) {
            cfg.basis.nknot_theta = nr;
            return fsim_fit(x, y, kind, cfg, iterative);
        },
        [](const FsimFit& f) { return f.cv_opt; });
}

/// Predictions at new curves with the stored direction and tuning.
inline PredictionReport fsim_predict(const FsimFit& fit, const FunctionalSample& new_x,
                                     const std::optional<Vector>& y_test = std::nullopt) {
    if (!fit.x.same_grid(new_x)) throw DataError("new curves are not on the training grid");
    const IndexContext ctx = IndexContext::build(fit.x, fit.config.basis);
    const auto pred = detail::index_predict(ctx.projections_of(fit.x, fit.theta.alpha), fit.y,
                                            ctx.projections_of(new_x, fit.theta.alpha), fit.tuning,
                                            fit.config.grid.knn_eps);
    return make_report("1", pred.values, pred.failed, y_test);
}

}  // namespace fsr
