#include <gtest/gtest.h>

#include <fsr/predict.hpp>
#include <fsr/rng.hpp>
#include <fsr/synth.hpp>

using namespace fsr;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

FsimConfig small_fsim() {
    FsimConfig c;
    c.basis = synth_detail::planted_basis();
    c.grid.num_h = 6;
    c.grid.max_knn = 12;
    return c;
}

PlmConfig small_plm() {
    PlmConfig c;
    c.basis.nknot_theta = 2;
    c.basis.nknot = 12;
    c.grid.num_h = 6;
    c.grid.max_knn = 12;
    c.criterion.kind = CriterionKind::bic;
    return c;
}

}  // namespace

TEST(Msep, Examples) {
    EXPECT_EQ(msep(vec({1, 2}), vec({1, 2})), 0.0);
    EXPECT_EQ(msep(vec({0, 0}), vec({1, 1})), 1.0);
    EXPECT_NEAR(msep(vec({1, 2, 3}), vec({2, 2, 2})), 2.0 / 3.0, 1e-15);
    EXPECT_THROW(msep(vec({1, 2}), vec({1})), InvalidArgument);
}

TEST(Msep, TranslationInvariant) {
    Rng rng(5);
    for (int rep = 0; rep < 100; ++rep) {
        Vector a(20), b(20);
        for (Index i = 0; i < 20; ++i) {
            a(i) = rng.normal();
            b(i) = rng.normal();
        }
        const double c = 10.0 * rng.normal();
        EXPECT_NEAR(msep(a, b), msep(a.array() + c, b.array() + c), 1e-9);
    }
}

TEST(Msep, FailedQueriesExcluded) {
    const Vector y = vec({1, 2, 3});
    const Vector p = vec({1, std::numeric_limits<double>::quiet_NaN(), 4});
    const auto r = make_report("1", p, {1}, y);
    ASSERT_TRUE(r.msep);
    EXPECT_DOUBLE_EQ(*r.msep, 0.5);
    EXPECT_EQ(r.failed, std::vector<int>{1});
    EXPECT_FALSE(make_report("1", p, {1}, std::nullopt).msep);
}

TEST(PredictAny, TrainingInputsReproduceFittedValues) {
    const auto a = synth_fsim(60, 40, 2);
    const FitResult f1 = fsim_fit_grid(a.x, a.y, SmootherKind::knn, small_fsim());
    const auto r1 = predict_any(f1, a.x, Matrix(), a.y, 1);
    EXPECT_EQ(r1[0].predictions, fitted_values(f1));
    EXPECT_EQ(fit_kind(f1), "fsim");

    const auto b = synth_sfplm(60, 40, 3);
    const FitResult f2 = sfplm_fit(b.x, b.z, b.y, SmootherKind::kernel, small_plm());
    EXPECT_EQ(predict_any(f2, b.x, b.z, std::nullopt, 1)[0].predictions, fitted_values(f2));
    EXPECT_EQ(fit_kind(f2), "sfplm");

    const auto c = synth_impact(60, 30, 4, {10}, 0.1);
    ImpactConfig ic;
    ic.plm = small_plm();
    ic.wn = {5};
    const auto pf = pvs_fit(c.z, c.y, ic);
    const FitResult f3 = pf;
    EXPECT_EQ(predict_any(f3, std::nullopt, take_rows(c.z, pf.train2), std::nullopt, 1)[0].predictions,
              fitted_values(f3));
    EXPECT_EQ(fit_kind(f3), "PVS");
}

TEST(PredictAny, SingletonReselectionEqualsOptionOne) {
    const auto b = synth_sfplm(60, 40, 6);
    const auto fit = sfplm_fit(b.x, b.z, b.y, SmootherKind::knn, small_plm());
    TuningGridConfig only;
    only.knearest = {fit.tuning.k};
    const auto one = plm_predict(fit, b.x, b.z, b.y, 1);
    const auto two = plm_predict(fit, b.x, b.z, b.y, 2, only);
    EXPECT_EQ(one.predictions, two.predictions);
}

TEST(PredictAny, ImpactOptionThreeGivesTwoMseps) {
    const auto d = synth_impact(80, 30, 7, {10}, 0.1);
    ImpactConfig ic;
    ic.plm = small_plm();
    ic.wn = {5};
    const FitResult fit = pvs_functional_fit(d.x, d.z, d.y, SmootherKind::knn, ic);
    const auto r = predict_any(fit, d.x, d.z, d.y, 3);
    ASSERT_EQ(r.size(), 2u);
    EXPECT_TRUE(r[0].msep && r[1].msep);
}

TEST(PredictAny, UnsupportedPairs) {
    const auto a = synth_fsim(40, 30, 2);
    const FitResult f = fsim_fit_grid(a.x, a.y, SmootherKind::kernel, small_fsim());
    EXPECT_THROW(predict_any(f, a.x, Matrix(), std::nullopt, 2), InvalidArgument);
    EXPECT_THROW(predict_any(f, std::nullopt, Matrix(), std::nullopt, 1), InvalidArgument);
    EXPECT_THROW(predict_any(f, a.x, Matrix(), a.y.head(5), 1), DataError);
}
