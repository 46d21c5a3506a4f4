#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace fsr {

enum class PenaltyKind { grLASSO, grSCAD };

inline const char* to_string(PenaltyKind k) { return k == PenaltyKind::grLASSO ? "grLASSO" : "grSCAD"; }

inline PenaltyKind penalty_from_string(const std::string& s) {
    if (s == "grLASSO" || s == "LASSO") return PenaltyKind::grLASSO;
    if (s == "grSCAD" || s == "SCAD") return PenaltyKind::grSCAD;
    throw InvalidArgument("unknown penalty '" + s + "' (expected grSCAD or grLASSO)");
}

/// Three-branch SCAD value at |b|.
inline double scad_penalty(double b, double lambda, double a = 3.7) {
    if (!(a > 2.0)) throw InvalidArgument("SCAD needs a > 2");
    if (lambda < 0.0) throw InvalidArgument("lambda must be >= 0");
    const double t = std::abs(b);
    if (t < lambda) return lambda * t;
    if (t < a * lambda) return ((a * a - 1.0) * lambda * lambda - (t - a * lambda) * (t - a * lambda)) / (2.0 * (a - 1.0));
    return (a + 1.0) * lambda * lambda / 2.0;
}

/// Contiguous group sizes summing to p: `groups` blocks, the first
/// p - groups*floor(p/groups) of them one larger.
inline std::vector<int> contiguous_groups(int p, int groups) {
    if (groups < 1 || groups > p)
        throw InvalidArgument("group count " + std::to_string(groups) + " outside [1, " + std::to_string(p) + "]");
    const int q = p / groups, extra = p - groups * q;
    std::vector<int> sizes(static_cast<std::size_t>(groups), q);
    for (int m = 0; m < extra; ++m) ++sizes[static_cast<std::size_t>(m)];
    return sizes;
}

struct PenaltySpec {
    PenaltyKind kind = PenaltyKind::grSCAD;
    double a = 3.7;
    std::vector<int> groups;  // contiguous sizes; empty: one group per column
    bool ols_scale = true;    // lambda_j = lambda * sd(beta_j, OLS)

    [[nodiscard]] std::vector<int> sizes_for(int p) const {
        if (groups.empty()) return std::vector<int>(static_cast<std::size_t>(p), 1);
        if (std::accumulate(groups.begin(), groups.end(), 0) != p)
            throw InvalidArgument("group sizes do not add up to the number of covariates");
        for (int g : groups)
            if (g < 1) throw InvalidArgument("group sizes must be positive");
        return groups;
    }
    void validate() const {
        if (kind == PenaltyKind::grSCAD && !(a > 2.0)) throw InvalidArgument("SCAD needs a > 2");
    }
};

/// grLASSO: lambda * sum sqrt(v_m) ||beta_m||; grSCAD: sum SCAD(||beta_m||; lambda sqrt(v_m)).
inline double group_penalty(const Vector& beta, const PenaltySpec& spec, double lambda) {
    const auto sizes = spec.sizes_for(static_cast<int>(beta.size()));
    double s = 0.0;
    Index start = 0;
    for (int v : sizes) {
        const double norm = beta.segment(start, v).norm();
        const double lm = lambda * std::sqrt(static_cast<double>(v));
        s += spec.kind == PenaltyKind::grLASSO ? lm * norm : scad_penalty(norm, lm, spec.a);
        start += v;
    }
    return s;
}

struct LambdaPathConfig {
    std::optional<double> lambda_min;
    double lambda_min_h = 0.05;
    double lambda_min_l = 1e-5;
    double factor_pn = 1.0;
    int nlambda = 100;
    std::vector<double> lambda_seq;

    void validate() const {
        if (lambda_seq.empty()) {
            if (nlambda < 1) throw InvalidArgument("nlambda must be >= 1");
            for (double f : {lambda_min.value_or(0.5), lambda_min_h, lambda_min_l})
                if (!(f > 0.0 && f < 1.0)) throw InvalidArgument("lambda.min fractions must lie in (0,1)");
        }
        for (double l : lambda_seq)
            if (!(l >= 0.0) || !std::isfinite(l)) throw InvalidArgument("lambda.seq values must be >= 0");
    }

    [[nodiscard]] double min_fraction(Index n, Index p) const {
        if (lambda_min) return *lambda_min;
        return static_cast<double>(n) < factor_pn * static_cast<double>(p) ? lambda_min_h : lambda_min_l;
    }
};

struct PelsOptions {
    int max_iter = 1000;  // sweeps, shared across a whole path
    double tol = 1e-7;
    bool trace = false;
};

/// Design and response on the working scale: columns (centered when there is
/// an intercept) scaled to ||z||^2 = n, each group orthonormalized so that
/// U_m' U_m = n I. Zero columns are dropped.
class PelsProblem {
public:
    struct Group {
        std::vector<int> cols;  // active original columns
        int size = 0;           // v_m, original group size
        Matrix u;               // n x r
        Matrix t;               // active cols x r, maps eta to standardized beta
        double scale = 1.0;     // per-group sigma for lambda_m
    };

    PelsProblem(const Matrix& x, const Vector& y, const PenaltySpec& spec, bool intercept)
        : n_(x.rows()), p_(x.cols()), intercept_(intercept), spec_(spec) {
        if (y.size() != n_) throw InvalidArgument("design rows and response length differ");
        if (n_ < 2) throw InvalidArgument("penalized regression needs at least 2 observations");
        if (!x.allFinite() || !y.allFinite()) throw InvalidArgument("NaN or infinity in the design or response");
        spec.validate();
        const double nd = static_cast<double>(n_);
        x_mean_ = intercept ? Vector(x.colwise().mean().transpose()) : Vector::Zero(p_);
        y_mean_ = intercept ? y.mean() : 0.0;
        xc_ = x.rowwise() - x_mean_.transpose();
        yw_ = y.array() - y_mean_;
        col_scale_ = Vector::Zero(p_);
        for (Index j = 0; j < p_; ++j) col_scale_(j) = xc_.col(j).norm() / std::sqrt(nd);
        const double big = col_scale_.size() ? col_scale_.maxCoeff() : 0.0;

        const auto sizes = spec.sizes_for(static_cast<int>(p_));
        int start = 0;
        for (int v : sizes) {
            Group g;
            g.size = v;
            for (int j = start; j < start + v; ++j)
                if (col_scale_(j) > 1e-12 * std::max(1.0, big)) g.cols.push_back(j);
            start += v;
            if (g.cols.empty()) continue;
            Matrix zs(n_, static_cast<Index>(g.cols.size()));
            for (std::size_t c = 0; c < g.cols.size(); ++c)
                zs.col(static_cast<Index>(c)) = xc_.col(g.cols[c]) / col_scale_(g.cols[c]);
            Eigen::SelfAdjointEigenSolver<Matrix> es(zs.transpose() * zs / nd);
            const Vector ev = es.eigenvalues();
            const double top = ev.maxCoeff();
            std::vector<Index> keep;
            for (Index k = ev.size() - 1; k >= 0; --k)
                if (ev(k) > 1e-10 * top) keep.push_back(k);
            g.t = Matrix(zs.cols(), static_cast<Index>(keep.size()));
            for (std::size_t k = 0; k < keep.size(); ++k)
                g.t.col(static_cast<Index>(k)) = es.eigenvectors().col(keep[k]) / std::sqrt(ev(keep[k]));
            g.u = zs * g.t;
            groups_.push_back(std::move(g));
        }
        set_scales(spec.ols_scale);
    }

    [[nodiscard]] Index n() const { return n_; }
    [[nodiscard]] Index p() const { return p_; }
    [[nodiscard]] bool intercept() const { return intercept_; }
    [[nodiscard]] const std::vector<Group>& groups() const { return groups_; }
    [[nodiscard]] const PenaltySpec& spec() const { return spec_; }
    [[nodiscard]] bool ols_scaled() const { return ols_scaled_; }

    /// Smallest lambda at which every group is zero.
    [[nodiscard]] double lambda_max() const {
        const double nd = static_cast<double>(n_);
        std::vector<double> zn;
        double lm = 0.0;
        for (const auto& g : groups_) {
            zn.push_back(Vector(g.u.transpose() * yw_ / nd).norm());  // as in the first sweep from zero
            lm = std::max(lm, zn.back() / (std::sqrt(static_cast<double>(g.size)) * g.scale));
        }
        // round up so that every group thresholds to zero at lambda_max itself
        for (std::size_t m = 0; m < groups_.size(); ++m)
            while (group_lambda(groups_[m], lm) < zn[m]) lm = std::nextafter(lm, kInf);
        return lm;
    }

    [[nodiscard]] double group_lambda(const Group& g, double lambda) const {
        return lambda * std::sqrt(static_cast<double>(g.size)) * g.scale;
    }

    /// The group's penalty at working-scale norm t.
    [[nodiscard]] double penalty_at(const Group& g, double t, double lambda) const {
        const double lm = group_lambda(g, lambda);
        return spec_.kind == PenaltyKind::grLASSO ? lm * t : scad_penalty(t, lm, spec_.a);
    }

    /// Original-scale coefficients from working coordinates.
    void to_original(const std::vector<Vector>& eta, Vector& beta, double& b0) const {
        beta = Vector::Zero(p_);
        for (std::size_t m = 0; m < groups_.size(); ++m) {
            const auto& g = groups_[m];
            const Vector bs = g.t * eta[m];
            for (std::size_t c = 0; c < g.cols.size(); ++c)
                beta(g.cols[c]) = bs(static_cast<Index>(c)) / col_scale_(g.cols[c]);
        }
        b0 = intercept_ ? y_mean_ - x_mean_.dot(beta) : 0.0;
    }

    /// Q(beta) = RSS/2 + n sum_m P(||Xc_m beta_m|| / sqrt(n); lambda_m).
    [[nodiscard]] double objective(const Vector& beta, double lambda) const {
        const double rss = (yw_ - xc_ * beta).squaredNorm();
        double pen = 0.0;
        const double rn = std::sqrt(static_cast<double>(n_));
        for (const auto& g : groups_) {
            Vector fit = Vector::Zero(n_);
            for (int j : g.cols) fit += xc_.col(j) * beta(j);
            pen += penalty_at(g, fit.norm() / rn, lambda);
        }
        return 0.5 * rss + static_cast<double>(n_) * pen;
    }

    [[nodiscard]] const Vector& working_response() const { return yw_; }
    [[nodiscard]] const Matrix& centered_design() const { return xc_; }

private:
    void set_scales(bool want_ols) {
        ols_scaled_ = false;
        for (auto& g : groups_) g.scale = 1.0;
        if (!want_ols || groups_.empty()) return;
        std::vector<int> active;
        for (const auto& g : groups_) active.insert(active.end(), g.cols.begin(), g.cols.end());
        const Index pa = static_cast<Index>(active.size());
        const Index resid_df = n_ - pa - (intercept_ ? 1 : 0);
        if (resid_df < 1) return;
        Matrix zs(n_, pa);
        for (Index c = 0; c < pa; ++c) zs.col(c) = xc_.col(active[static_cast<std::size_t>(c)]) / col_scale_(active[static_cast<std::size_t>(c)]);
        Eigen::ColPivHouseholderQR<Matrix> qr(zs);
        if (qr.rank() < pa) return;
        const Vector b = qr.solve(yw_);
        const double s2 = (yw_ - zs * b).squaredNorm() / static_cast<double>(resid_df);
        if (!(s2 > 1e-24 * std::max(1.0, yw_.squaredNorm()))) return;
        const Matrix inv = (zs.transpose() * zs).inverse();
        std::size_t c = 0;
        for (auto& g : groups_) {
            double s = 0.0;
            for (std::size_t k = 0; k < g.cols.size(); ++k, ++c) s += std::sqrt(s2 * inv(static_cast<Index>(c), static_cast<Index>(c)));
            g.scale = s / static_cast<double>(g.cols.size());
        }
        ols_scaled_ = true;
    }

    Index n_, p_;
    bool intercept_;
    PenaltySpec spec_;
    Vector x_mean_;
    double y_mean_ = 0.0;
    Matrix xc_;
    Vector yw_;
    Vector col_scale_;
    std::vector<Group> groups_;
    bool ols_scaled_ = false;
};

struct PelsSolution {
    Vector beta;
    double intercept = 0.0;
    double lambda = 0.0;
    int iterations = 0;
    bool converged = true;
    double objective = 0.0;
    double rss = 0.0;
    double df = 0.0;
    double criterion = 0.0;
    std::vector<double> trace;  // Q after every sweep when requested

    [[nodiscard]] std::vector<int> support() const {
        std::vector<int> s;
        for (Index j = 0; j < beta.size(); ++j)
            if (beta(j) != 0.0) s.push_back(static_cast<int>(j));
        return s;
    }
};

namespace detail {

inline double soft(double z, double l) { return z > l ? z - l : 0.0; }

// Minimizer of (t - z)^2 / 2 + P(t) over t >= 0.
inline double threshold_norm(double z, double lm, const PenaltySpec& spec) {
    if (spec.kind == PenaltyKind::grLASSO) return soft(z, lm);
    const double a = spec.a;
    if (z <= 2.0 * lm) return soft(z, lm);
    if (z <= a * lm) return (a - 1.0) / (a - 2.0) * soft(z, a * lm / (a - 1.0));
    return z;
}

inline double working_objective(const PelsProblem& pb, const Vector& r, const std::vector<Vector>& eta, double lambda) {
    double pen = 0.0;
    for (std::size_t m = 0; m < eta.size(); ++m) pen += pb.penalty_at(pb.groups()[m], eta[m].norm(), lambda);
    return 0.5 * r.squaredNorm() + static_cast<double>(pb.n()) * pen;
}

}  // namespace detail

/// Group coordinate descent from a warm start. `budget` counts sweeps and is
/// decremented; the solve stops unconverged when it runs out.
inline PelsSolution pels_solve_warm(const PelsProblem& pb, double lambda, std::vector<Vector>& eta, int& budget,
                                    const PelsOptions& opts = {}) {
    if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be >= 0");
    const auto& groups = pb.groups();
    const double nd = static_cast<double>(pb.n());
    PelsSolution sol;
    sol.lambda = lambda;
    if (eta.size() != groups.size()) {
        eta.clear();
        for (const auto& g : groups) eta.push_back(Vector::Zero(g.u.cols()));
    }
    if (lambda == 0.0) {
        // unpenalized: least squares on the working design
        Index r = 0;
        for (const auto& g : groups) r += g.u.cols();
        Matrix u(pb.n(), r);
        Index c = 0;
        for (const auto& g : groups) {
            u.middleCols(c, g.u.cols()) = g.u;
            c += g.u.cols();
        }
        const Vector all = r > 0 ? Vector(Eigen::CompleteOrthogonalDecomposition<Matrix>(u).solve(pb.working_response()))
                                 : Vector();
        c = 0;
        for (std::size_t m = 0; m < groups.size(); ++m) {
            eta[m] = all.segment(c, groups[m].u.cols());
            c += groups[m].u.cols();
        }
        sol.iterations = 0;
    } else {
        Vector r = pb.working_response();
        for (std::size_t m = 0; m < groups.size(); ++m) r -= groups[m].u * eta[m];
        sol.converged = false;
        while (budget > 0) {
            --budget;
            ++sol.iterations;
            double change = 0.0;
            for (std::size_t m = 0; m < groups.size(); ++m) {
                const auto& g = groups[m];
                const Vector z = g.u.transpose() * r / nd + eta[m];
                const double zn = z.norm();
                const double tn = detail::threshold_norm(zn, pb.group_lambda(g, lambda), pb.spec());
                const Vector next = zn > 0.0 ? Vector(z * (tn / zn)) : Vector(Vector::Zero(z.size()));
                const Vector delta = next - eta[m];
                if (delta.size() > 0) {
                    const double dm = delta.cwiseAbs().maxCoeff();
                    if (dm > 0.0) {
                        r -= g.u * delta;
                        eta[m] = next;
                    }
                    change = std::max(change, dm);
                }
            }
            if (opts.trace) sol.trace.push_back(detail::working_objective(pb, r, eta, lambda));
            if (change < opts.tol) {
                sol.converged = true;
                break;
            }
        }
    }
    pb.to_original(eta, sol.beta, sol.intercept);
    sol.objective = pb.objective(sol.beta, lambda);
    sol.rss = (pb.working_response() - pb.centered_design() * sol.beta).squaredNorm();
    sol.df = static_cast<double>(sol.support().size()) + (pb.intercept() ? 1.0 : 0.0);
    return sol;
}

inline PelsSolution pels_solve(const Matrix& x, const Vector& y, const PenaltySpec& spec, double lambda,
                               const PelsOptions& opts = {}, bool intercept = false) {
    if (opts.max_iter < 1) throw InvalidArgument("max.iter must be >= 1");
    const PelsProblem pb(x, y, spec, intercept);
    std::vector<Vector> eta;
    int budget = opts.max_iter;
    return pels_solve_warm(pb, lambda, eta, budget, opts);
}

/// Q recomputed from data and coefficients.
inline double pels_objective(const Matrix& x, const Vector& y, const PenaltySpec& spec, double lambda,
                             const Vector& beta, bool intercept = false) {
    return PelsProblem(x, y, spec, intercept).objective(beta, lambda);
}

/// Decreasing lambda values: explicit lambda_seq, or nlambda log-spaced values
/// from lambda_max down to f * lambda_max.
inline std::vector<double> lambda_path(const PelsProblem& pb, const LambdaPathConfig& cfg) {
    cfg.validate();
    if (!cfg.lambda_seq.empty()) {
        std::vector<double> s = cfg.lambda_seq;
        std::sort(s.begin(), s.end(), std::greater<>());
        s.erase(std::unique(s.begin(), s.end()), s.end());
        return s;
    }
    const double lmax = pb.lambda_max();
    if (!(lmax > 0.0)) throw NumericError("the response has no variation left to explain; lambda path is empty");
    const double f = cfg.min_fraction(pb.n(), pb.p());
    std::vector<double> path;
    if (cfg.nlambda == 1) return {lmax};
    for (int i = 0; i < cfg.nlambda; ++i) path.push_back(lmax * std::exp(std::log(f) * i / (cfg.nlambda - 1)));
    return path;
}

inline std::vector<double> lambda_path(const Matrix& x, const Vector& y, const PenaltySpec& spec,
                                       const LambdaPathConfig& cfg, bool intercept = false) {
    return lambda_path(PelsProblem(x, y, spec, intercept), cfg);
}

/// Warm-started solutions for a decreasing path. The sweep budget is shared;
/// the path stops at the first lambda where it runs out.
inline std::vector<PelsSolution> pels_path(const PelsProblem& pb, const std::vector<double>& lambdas,
                                           const PelsOptions& opts = {}) {
    if (opts.max_iter < 1) throw InvalidArgument("max.iter must be >= 1");
    std::vector<PelsSolution> out;
    std::vector<Vector> eta;
    int budget = opts.max_iter;
    for (double l : lambdas) {
        out.push_back(pels_solve_warm(pb, l, eta, budget, opts));
        if (!out.back().converged) break;
    }
    return out;
}

/// GCV / AIC / BIC. AIC and BIC return -1e308 when rss = 0; GCV is +inf once df >= n.
inline double criterion_value(double rss, Index n, double df, CriterionKind kind) {
    const double nd = static_cast<double>(n);
    switch (kind) {
        case CriterionKind::gcv: {
            if (df >= nd) return kInf;
            const double s = 1.0 - df / nd;
            return rss / (nd * s * s);
        }
        case CriterionKind::aic:
            return rss > 0.0 ? nd * std::log(rss / nd) + 2.0 * df : -1e308;
        case CriterionKind::bic:
            return rss > 0.0 ? nd * std::log(rss / nd) + std::log(nd) * df : -1e308;
        case CriterionKind::kfold_cv:
            break;
    }
    throw InvalidArgument("k-fold-CV is not a closed-form criterion");
}

/// Fold label of each observation: a seeded shuffle dealt round-robin.
inline std::vector<int> kfold_assignment(Index n, int nfolds, std::uint64_t seed) {
    if (nfolds < 2 || nfolds > n) throw InvalidArgument("nfolds must lie in [2, n]");
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    rng.shuffle(perm);
    std::vector<int> fold(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < perm.size(); ++i) fold[static_cast<std::size_t>(perm[i])] = static_cast<int>(i % static_cast<std::size_t>(nfolds));
    return fold;
}

/// Held-out mean squared error per lambda, folds refit on the same lambda values.
inline std::vector<double> kfold_errors(const Matrix& x, const Vector& y, const PenaltySpec& spec, bool intercept,
                                        const std::vector<double>& lambdas, const CriterionSpec& crit,
                                        const PelsOptions& opts) {
    const Index n = y.size();
    const auto fold = kfold_assignment(n, crit.nfolds, crit.seed);
    std::vector<double> sse(lambdas.size(), 0.0);
    for (int f = 0; f < crit.nfolds; ++f) {
        std::vector<int> tr, te;
        for (Index i = 0; i < n; ++i) (fold[static_cast<std::size_t>(i)] == f ? te : tr).push_back(static_cast<int>(i));
        const PelsProblem pb(take_rows(x, tr), take(y, tr), spec, intercept);
        const auto sols = pels_path(pb, lambdas, opts);
        const Matrix xt = take_rows(x, te);
        const Vector yt = take(y, te);
        for (std::size_t l = 0; l < lambdas.size(); ++l) {
            if (l >= sols.size()) {
                sse[l] = kInf;
                continue;
            }
            sse[l] += (yt - xt * sols[l].beta - Vector::Constant(yt.size(), sols[l].intercept)).squaredNorm();
        }
    }
    for (auto& s : sse) s /= static_cast<double>(n);
    return sse;
}

struct PelsFit {
    std::vector<double> lambdas;
    std::vector<PelsSolution> path;
    std::size_t best = 0;
    bool ols_scaled = false;

    [[nodiscard]] const PelsSolution& selected() const { return path.at(best); }
};

/// Path plus criterion-based choice of lambda. Criterion values within 1e-9
/// (relative) count as tied and the lower objective wins; then the larger lambda.
inline PelsFit pels_select(const Matrix& x, const Vector& y, const PenaltySpec& spec, const LambdaPathConfig& lcfg,
                           const CriterionSpec& crit, const PelsOptions& opts = {}, bool intercept = false) {
    crit.validate();
    const PelsProblem pb(x, y, spec, intercept);
    PelsFit fit;
    fit.ols_scaled = pb.ols_scaled();
    fit.lambdas = lambda_path(pb, lcfg);
    fit.path = pels_path(pb, fit.lambdas, opts);
    if (fit.path.empty()) throw NumericError("penalized path produced no solution");
    std::vector<double> cv;
    if (crit.kind == CriterionKind::kfold_cv) cv = kfold_errors(x, y, spec, intercept, fit.lambdas, crit, opts);
    std::vector<double> score(fit.path.size());
    for (std::size_t l = 0; l < fit.path.size(); ++l) {
        auto& s = fit.path[l];
        s.criterion = crit.kind == CriterionKind::kfold_cv ? cv[l] : criterion_value(s.rss, y.size(), s.df, crit.kind);
        score[l] = s.criterion;
    }
    fit.best = argmin_first(score);
    if (fit.best == score.size()) throw NumericError("criterion is undefined along the whole path");
    // near-ties in the criterion (same fit up to solver tolerance) go to the lower objective
    const double c0 = score[fit.best];
    for (std::size_t l = 0; l < score.size(); ++l)
        if (std::abs(score[l] - c0) <= 1e-9 * std::max(1.0, std::abs(c0)) &&
            fit.path[l].objective < fit.path[fit.best].objective)
            fit.best = l;
    return fit;
}

}  // namespace fsr
