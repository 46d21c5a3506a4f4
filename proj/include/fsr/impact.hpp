#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "plm.hpp"

namespace fsr {

/// Contiguous blocks of the p discretization points with one representative each.
struct PartitionPlan {
    int p = 0;
    int w = 0;
    std::vector<int> sizes;            // q_{n,k}
    std::vector<int> starts;           // 0-based first index of each block
    std::vector<int> representatives;  // 0-based

    [[nodiscard]] std::vector<int> block(int k) const {
        std::vector<int> b(static_cast<std::size_t>(sizes.at(static_cast<std::size_t>(k))));
        std::iota(b.begin(), b.end(), starts[static_cast<std::size_t>(k)]);
        return b;
    }
};

/// The first p - w floor(p/w) blocks get floor(p/w)+1 points, the rest
/// floor(p/w); the representative sits at within-block position ceil(q/2).
inline PartitionPlan partition_sizes(int p, int w) {
    if (w < 1 || w > p)
        throw InvalidArgument("wn=" + std::to_string(w) + " must lie in [1, " + std::to_string(p) + "]");
    PartitionPlan plan;
    plan.p = p;
    plan.w = w;
    plan.sizes = contiguous_groups(p, w);
    int start = 0;
    for (int q : plan.sizes) {
        plan.starts.push_back(start);
        plan.representatives.push_back(start + (q + 1) / 2 - 1);
        start += q;
    }
    return plan;
}

enum class ImpactModel { mlm, mfplm, mfplsim };

inline const char* to_string(ImpactModel m) {
    switch (m) {
        case ImpactModel::mlm: return "MLM";
        case ImpactModel::mfplm: return "MFPLM";
        case ImpactModel::mfplsim: return "MFPLSIM";
    }
    return "?";
}

struct ImpactConfig {
    PlmConfig plm;  // smoothing, basis, penalty, lambda path, criterion
    std::vector<int> wn{10, 15, 20};
    std::vector<int> train1;  // 0-based; empty: first ceil(n/2)
    std::vector<int> train2;  // 0-based; empty: the rest
};

struct ImpactFit {
    ImpactModel model = ImpactModel::mlm;
    std::string algorithm;  // PVS, FASSMR, IASSMR
    SmootherKind kind = SmootherKind::kernel;
    bool two_step = true;
    std::vector<int> impact;  // 0-based discretization indices
    Vector beta;              // length p, zero off the impact set
    double intercept = 0.0;   // MLM only
    int w_opt = 0;
    PartitionPlan plan;
    std::vector<int> step1_selected;  // selected representatives
    std::vector<int> candidates;      // R, the step-2 candidate set
    bool empty_step1 = false;
    double lambda = 0.0;
    double ic = kInf;
    double q = kInf;
    Tuning tuning;
    std::optional<IndexCoefficients> theta;
    std::vector<int> train1, train2;
    std::vector<std::pair<int, double>> w_scores;  // step-1 criterion per wn candidate
    std::optional<SfplFit> step1, step2;
    std::vector<int> columns;  // zeta columns of the final step, in the order of its z
    Vector fitted;  // on the sample of the final step
    Vector residuals;
    // full training sample
    std::optional<FunctionalSample> x;
    Matrix z;
    Vector y;
    ImpactConfig config;

    [[nodiscard]] const SfplFit& final_plm() const {
        if (step2) return *step2;
        if (step1) return *step1;
        throw InvalidArgument("the linear impact model has no functional component");
    }
};

namespace detail {

inline void default_splits(Index n, std::vector<int>& t1, std::vector<int>& t2) {
    const int half = static_cast<int>((n + 1) / 2);
    if (t1.empty()) {
        t1.resize(static_cast<std::size_t>(half));
        std::iota(t1.begin(), t1.end(), 0);
    }
    if (t2.empty()) {
        std::vector<bool> used(static_cast<std::size_t>(n), false);
        for (int i : t1) used[static_cast<std::size_t>(i)] = true;
        for (int i = 0; i < n; ++i)
            if (!used[static_cast<std::size_t>(i)]) t2.push_back(i);
    }
    for (const auto* t : {&t1, &t2}) {
        if (t->size() < 3) throw InvalidArgument("each training split needs at least 3 observations");
        for (int i : *t)
            if (i < 0 || i >= n) throw InvalidArgument("training split index outside the sample");
    }
}

inline void check_impact_data(const Matrix& z, const Vector& y, const ImpactConfig& cfg) {
    if (z.rows() != y.size())
        throw DataError("zeta has " + std::to_string(z.rows()) + " rows but y has " + std::to_string(y.size()) +
                        " values");
    if (!z.allFinite() || !y.allFinite()) throw DataError("NaN or infinity in zeta or y");
    if (cfg.wn.empty()) throw InvalidArgument("wn candidate list is empty");
    for (int w : cfg.wn)
        if (w < 1 || w > z.cols())
            throw InvalidArgument("wn=" + std::to_string(w) + " must lie in [1, " + std::to_string(z.cols()) + "]");
}

inline std::vector<int> sorted_wn(const ImpactConfig& cfg) {
    std::vector<int> w = cfg.wn;
    std::sort(w.begin(), w.end());
    w.erase(std::unique(w.begin(), w.end()), w.end());
    return w;
}

inline std::vector<int> union_of_blocks(const PartitionPlan& plan, const std::vector<int>& selected_reps) {
    std::vector<int> r;
    for (int k = 0; k < plan.w; ++k)
        if (std::find(selected_reps.begin(), selected_reps.end(), plan.representatives[static_cast<std::size_t>(k)]) !=
            selected_reps.end()) {
            const auto b = plan.block(k);
            r.insert(r.end(), b.begin(), b.end());
        }
    return r;
}

inline std::vector<int> map_indices(const std::vector<int>& local, const std::vector<int>& global) {
    std::vector<int> out;
    for (int j : local) out.push_back(global[static_cast<std::size_t>(j)]);
    return out;
}

inline void scatter_beta(ImpactFit& fit, const Vector& local_beta, const std::vector<int>& cols) {
    fit.beta = Vector::Zero(fit.z.cols());
    fit.impact.clear();
    for (std::size_t c = 0; c < cols.size(); ++c) {
        fit.beta(cols[c]) = local_beta(static_cast<Index>(c));
        if (local_beta(static_cast<Index>(c)) != 0.0) fit.impact.push_back(cols[c]);
    }
}


// Step-1 outcome for one wn candidate.
struct StepOne {
    PartitionPlan plan;
    std::vector<int> selected;  // 0-based discretization indices
    double ic = kInf;
    std::optional<SfplFit> plm;
    PelsSolution mlm;
    bool ok = false;
};

// Runs step 1 for every wn candidate (ascending) and keeps the smallest
// criterion; ties go to the smaller wn.
template <class Step>
StepOne best_w(const ImpactConfig& cfg, Index p, Step&& step, std::vector<std::pair<int, double>>& scores) {
    const auto ws = sorted_wn(cfg);
    std::vector<StepOne> res(ws.size());
    std::vector<std::string> errors(ws.size());
    parallel_for(ws.size(), [&](std::size_t i) {
        res[i].plan = partition_sizes(static_cast<int>(p), ws[i]);
        try {
            step(res[i]);
            res[i].ok = true;
        } catch (const NumericError& e) {
            errors[i] = e.what();
        }
    });
    scores.clear();
    std::vector<double> ic(ws.size());
    for (std::size_t i = 0; i < ws.size(); ++i) {
        ic[i] = res[i].ok ? res[i].ic : kInf;
        scores.emplace_back(ws[i], ic[i]);
    }
    std::size_t best = argmin_first(ic);
    if (best == ic.size() || !res[best].ok) {
        std::size_t first_ok = ws.size();
        for (std::size_t i = 0; i < ws.size(); ++i)
            if (res[i].ok) {
                first_ok = i;
                break;
            }
        if (first_ok == ws.size()) throw NumericError("step 1 failed for every wn candidate: " + errors.front());
        best = first_ok;
    }
    return std::move(res[best]);
}

inline PlmConfig singleton_config(const PlmConfig& cfg) {
    PlmConfig c = cfg;
    c.vn.clear();
    c.penalty.groups.clear();
    return c;
}

inline ImpactFit start_fit(ImpactModel model, std::string algorithm, const Matrix& z, const Vector& y,
                           const ImpactConfig& cfg, bool two_step) {
    check_impact_data(z, y, cfg);
    cfg.plm.criterion.validate();
    ImpactFit fit;
    fit.model = model;
    fit.algorithm = std::move(algorithm);
    fit.two_step = two_step;
    fit.z = z;
    fit.y = y;
    fit.config = cfg;
    if (two_step) {
        fit.train1 = cfg.train1;
        fit.train2 = cfg.train2;
        default_splits(y.size(), fit.train1, fit.train2);
    }
    return fit;
}

inline void take_step_one(ImpactFit& fit, StepOne& one) {
    fit.w_opt = one.plan.w;
    fit.plan = one.plan;
    fit.step1_selected = one.selected;
    fit.candidates = union_of_blocks(one.plan, one.selected);
    fit.empty_step1 = one.selected.empty();
}

// Copies the final functional fit's estimates into the impact fit.
inline void take_plm(ImpactFit& fit, const SfplFit& s, const std::vector<int>& cols) {
    fit.columns = cols;
    scatter_beta(fit, s.beta, cols);
    fit.lambda = s.lambda;
    fit.ic = s.ic;
    fit.q = s.q;
    fit.tuning = s.tuning;
    fit.theta = s.theta;
    fit.fitted = s.fitted;
    fit.residuals = s.residuals;
}

}  // namespace detail

/// Partitioning variable selection for the linear model with intercept.
inline ImpactFit pvs_fit(const Matrix& z, const Vector& y, const ImpactConfig& cfg) {
    ImpactFit fit = detail::start_fit(ImpactModel::mlm, "PVS", z, y, cfg, true);
    const Matrix z1 = take_rows(z, fit.train1), z2 = take_rows(z, fit.train2);
    const Vector y1 = take(y, fit.train1), y2 = take(y, fit.train2);
    PenaltySpec spec = cfg.plm.penalty;
    spec.groups.clear();
    auto pels = [&](const Matrix& zz, const Vector& yy) {
        return pels_select(zz, yy, spec, cfg.plm.lambda, cfg.plm.criterion, cfg.plm.pels, true).selected();
    };
    auto one = detail::best_w(
        cfg, z.cols(),
        [&](detail::StepOne& s) {
            s.mlm = pels(take_cols(z1, s.plan.representatives), y1);
            s.ic = s.mlm.criterion;
            s.selected = detail::map_indices(s.mlm.support(), s.plan.representatives);
        },
        fit.w_scores);
    detail::take_step_one(fit, one);
    fit.columns = fit.candidates;
    if (fit.empty_step1) {
        fit.beta = Vector::Zero(z.cols());
        fit.intercept = y2.mean();
        fit.lambda = one.mlm.lambda;
        fit.ic = one.ic;
    } else {
        const auto s = pels(take_cols(z2, fit.candidates), y2);
        detail::scatter_beta(fit, s.beta, fit.candidates);
        fit.intercept = s.intercept;
        fit.lambda = s.lambda;
        fit.ic = s.criterion;
        fit.q = s.objective;
    }
    fit.fitted = z2 * fit.beta + Vector::Constant(z2.rows(), fit.intercept);
    fit.residuals = y2 - fit.fitted;
    return fit;
}

/// Two-step selection for the multi-functional partial linear model: each
/// step is a semi-functional partial linear fit on its own subsample.
inline ImpactFit pvs_functional_fit(const FunctionalSample& x, const Matrix& z, const Vector& y, SmootherKind kind,
                                    const ImpactConfig& cfg) {
    detail::check_xy(x, y);
    ImpactFit fit = detail::start_fit(ImpactModel::mfplm, "PVS", z, y, cfg, true);
    fit.kind = kind;
    fit.x = x;
    const PlmConfig pc = detail::singleton_config(cfg.plm);
    const FunctionalSample x1 = x.subset(fit.train1), x2 = x.subset(fit.train2);
    const Matrix z1 = take_rows(z, fit.train1), z2 = take_rows(z, fit.train2);
    const Vector y1 = take(y, fit.train1), y2 = take(y, fit.train2);
    auto one = detail::best_w(
        cfg, z.cols(),
        [&](detail::StepOne& s) {
            s.plm = sfplm_fit(x1, take_cols(z1, s.plan.representatives), y1, kind, pc);
            s.ic = s.plm->ic;
            s.selected = detail::map_indices(s.plm->selected(), s.plan.representatives);
        },
        fit.w_scores);
    detail::take_step_one(fit, one);
    fit.step1 = std::move(one.plm);
    fit.step2 = sfplm_fit(x2, take_cols(z2, fit.candidates), y2, kind, pc);
    detail::take_plm(fit, *fit.step2, fit.candidates);
    return fit;
}

/// One-step selection for the multi-functional partial linear single-index
/// model on the whole sample: the representatives' coefficients are the estimates.
inline ImpactFit fassmr_fit(const FunctionalSample& x, const Matrix& z, const Vector& y, SmootherKind kind,
                            const ImpactConfig& cfg) {
    detail::check_xy(x, y);
    ImpactFit fit = detail::start_fit(ImpactModel::mfplsim, "FASSMR", z, y, cfg, false);
    fit.kind = kind;
    fit.x = x;
    const PlmConfig pc = detail::singleton_config(cfg.plm);
    auto one = detail::best_w(
        cfg, z.cols(),
        [&](detail::StepOne& s) {
            s.plm = sfplsim_fit(x, take_cols(z, s.plan.representatives), y, kind, pc);
            s.ic = s.plm->ic;
            s.selected = detail::map_indices(s.plm->selected(), s.plan.representatives);
        },
        fit.w_scores);
    detail::take_step_one(fit, one);
    fit.step1 = std::move(one.plm);
    detail::take_plm(fit, *fit.step1, fit.plan.representatives);
    return fit;
}

/// FASSMR on train.1, then the single-index partial linear fit on train.2
/// restricted to the blocks of the selected representatives.
inline ImpactFit iassmr_fit(const FunctionalSample& x, const Matrix& z, const Vector& y, SmootherKind kind,
                            const ImpactConfig& cfg) {
    detail::check_xy(x, y);
    ImpactFit fit = detail::start_fit(ImpactModel::mfplsim, "IASSMR", z, y, cfg, true);
    fit.kind = kind;
    fit.x = x;
    ImpactConfig c1 = cfg;
    c1.train1.clear();
    c1.train2.clear();
    const ImpactFit first =
        fassmr_fit(x.subset(fit.train1), take_rows(z, fit.train1), take(y, fit.train1), kind, c1);
    fit.w_scores = first.w_scores;
    fit.w_opt = first.w_opt;
    fit.plan = first.plan;
    fit.step1_selected = first.step1_selected;
    fit.candidates = first.candidates;
    fit.empty_step1 = first.empty_step1;
    fit.step1 = first.step1;
    const PlmConfig pc = detail::singleton_config(cfg.plm);
    fit.step2 = sfplsim_fit(x.subset(fit.train2), take_cols(take_rows(z, fit.train2), fit.candidates),
                            take(y, fit.train2), kind, pc);
    detail::take_plm(fit, *fit.step2, fit.candidates);
    return fit;
}

namespace detail {

inline void check_new_data(const ImpactFit& fit, const FunctionalSample* new_x, const Matrix& new_z) {
    if (new_z.cols() != fit.z.cols())
        throw DataError("new zeta has " + std::to_string(new_z.cols()) + " columns, expected " +
                        std::to_string(fit.z.cols()));
    if (new_x) {
        if (!fit.x->same_grid(*new_x)) throw DataError("new curves are not on the training grid");
        if (new_x->size() != new_z.rows())
            throw DataError(std::to_string(new_x->size()) + " new curves but " + std::to_string(new_z.rows()) +
                            " zeta rows");
    }
}

// The final functional estimates moved onto the full training sample.
inline SfplFit full_sample_plm(const ImpactFit& fit) {
    SfplFit full = fit.final_plm();
    full.x = *fit.x;
    full.z = take_cols(fit.z, fit.columns);
    full.y = fit.y;
    return full;
}

// kNN with a per-curve k: each training curve gets the k minimizing its own
// leave-one-out error; a query uses the k of its nearest training curve.
inline PredictionReport local_knn_report(const Matrix& self_dist, const Vector& partial, const Matrix& query_dist,
                                         const Vector& linear, const TuningGridConfig& grid,
                                         const std::optional<Vector>& y_test) {
    const Index n = partial.size();
    const auto ks = knn_grid(n, grid);
    Matrix err(static_cast<Index>(ks.size()), n);
    parallel_for(ks.size(), [&](std::size_t g) {
        const Matrix w = loo_weight_matrix(self_dist, Tuning::neighbours(ks[g]), grid.knn_eps);
        err.row(static_cast<Index>(g)) = (partial - w * partial).array().square().matrix().transpose();
    });
    std::vector<int> k_of(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        std::vector<double> e(ks.size());
        for (std::size_t g = 0; g < ks.size(); ++g) e[g] = err(static_cast<Index>(g), i);
        const std::size_t b = argmin_first(e);
        k_of[static_cast<std::size_t>(i)] = ks[b == e.size() ? 0 : b];
    }
    Vector pred(query_dist.cols());
    std::vector<int> failed;
    for (Index j = 0; j < query_dist.cols(); ++j) {
        Index nearest = 0;
        query_dist.col(j).minCoeff(&nearest);
        try {
            const Vector w = knn_weights(query_dist.col(j), k_of[static_cast<std::size_t>(nearest)], grid.knn_eps);
            pred(j) = linear(j) + weighted_mean(w, partial);
        } catch (const EmptyNeighborhood&) {
            pred(j) = std::numeric_limits<double>::quiet_NaN();
            failed.push_back(static_cast<int>(j));
        }
    }
    return make_report("4", pred, failed, y_test);
}

}  // namespace detail

/// Predictions for new data. Returns one report, or two (3a, 3b) for option 3.
/// Options: 1 step-2 estimates; 2 tuning reselected on the full training
/// sample; 3 unpenalized refit on the impact points (two-step fits); 4 local
/// kNN selection (kNN fits). The linear model supports option 1 only.
inline std::vector<PredictionReport> impact_predict(const ImpactFit& fit, const std::optional<FunctionalSample>& new_x,
                                                    const Matrix& new_z,
                                                    const std::optional<Vector>& y_test = std::nullopt,
                                                    int option = 1) {
    if (option < 1 || option > 4) throw InvalidArgument("prediction option must be 1, 2, 3 or 4");
    if (fit.model == ImpactModel::mlm) {
        if (option != 1) throw InvalidArgument("the linear impact model supports prediction option 1 only");
        detail::check_new_data(fit, nullptr, new_z);
        const Vector pred = new_z * fit.beta + Vector::Constant(new_z.rows(), fit.intercept);
        return {make_report("1", pred, {}, y_test)};
    }
    if (!new_x) throw InvalidArgument("functional impact models need new curves");
    detail::check_new_data(fit, &*new_x, new_z);
    if (option == 3 && !fit.two_step) throw InvalidArgument("option 3 needs a two-step fit (PVS or IASSMR)");
    if (option == 4 && fit.kind != SmootherKind::knn) throw InvalidArgument("option 4 needs a kNN fit");
    const Matrix zr = take_cols(new_z, fit.columns);
    if (option == 1 || option == 2) {
        const SfplFit plm = option == 1 ? fit.final_plm() : detail::full_sample_plm(fit);
        auto r = plm_predict(plm, *new_x, zr, y_test, option);
        return {r};
    }
    if (option == 4) {
        const SfplFit full = detail::full_sample_plm(fit);
        const Vector partial = full.y - full.z * full.beta;
        return {detail::local_knn_report(detail::plm_distances(full, full.x), partial,
                                         detail::plm_distances(full, *new_x), zr * full.beta, full.config.grid,
                                         y_test)};
    }
    PlmConfig pc = detail::singleton_config(fit.config.plm);
    pc.lambda.lambda_seq = {0.0};
    const Matrix zi = take_cols(fit.z, fit.impact);
    const SfplFit refit = fit.model == ImpactModel::mfplm ? sfplm_fit(*fit.x, zi, fit.y, fit.kind, pc)
                                                          : sfplsim_fit(*fit.x, zi, fit.y, fit.kind, pc);
    const Matrix qi = take_cols(new_z, fit.impact);
    auto a = plm_predict(refit, *new_x, qi, y_test, 1);
    auto b = plm_predict(refit, *new_x, qi, y_test, 2);
    a.option = "3a";
    b.option = "3b";
    return {a, b};
}

}  // namespace fsr
