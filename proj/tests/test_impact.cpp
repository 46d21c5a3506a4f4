#include <gtest/gtest.h>

#include <set>

#include <fsr/impact.hpp>
#include <fsr/synth.hpp>

using namespace fsr;

namespace {

ImpactConfig small_config(std::vector<int> wn = {5, 10}) {
    ImpactConfig c;
    c.wn = std::move(wn);
    c.plm.basis.nknot_theta = 2;
    c.plm.basis.nknot = 12;
    c.plm.grid.num_h = 6;
    c.plm.grid.max_knn = 10;
    c.plm.criterion.kind = CriterionKind::bic;
    c.plm.lambda.nlambda = 40;
    return c;
}

bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

void check_support(const ImpactFit& fit) {
    for (int j = 0; j < fit.beta.size(); ++j) EXPECT_EQ(fit.beta(j) != 0.0, contains(fit.impact, j)) << j;
    const std::vector<int>& pool = fit.two_step ? fit.candidates : fit.plan.representatives;
    for (int j : fit.impact) EXPECT_TRUE(contains(pool, j)) << j;
    if (fit.two_step) {
        int card = 0;
        for (int k = 0; k < fit.plan.w; ++k)
            if (contains(fit.step1_selected, fit.plan.representatives[static_cast<std::size_t>(k)]))
                card += fit.plan.sizes[static_cast<std::size_t>(k)];
        EXPECT_EQ(static_cast<int>(fit.candidates.size()), card);
    }
}

}  // namespace

TEST(Partition, ExhaustiveSweep) {
    for (int p = 1; p <= 600; ++p)
        for (int w = 1; w <= p; ++w) {
            const auto plan = partition_sizes(p, w);
            ASSERT_EQ(static_cast<int>(plan.sizes.size()), w);
            const int fl = p / w, big = p - w * fl;
            int next = 0;
            for (int k = 0; k < w; ++k) {
                const int q = plan.sizes[static_cast<std::size_t>(k)];
                ASSERT_EQ(q, k < big ? fl + 1 : fl) << p << " " << w;
                ASSERT_EQ(plan.starts[static_cast<std::size_t>(k)], next);
                const int r = plan.representatives[static_cast<std::size_t>(k)];
                ASSERT_GE(r, next);
                ASSERT_LT(r, next + q);
                ASSERT_EQ(r - next + 1, (q + 1) / 2);
                next += q;
            }
            ASSERT_EQ(next, p);
        }
}

TEST(Partition, Examples) {
    const auto a = partition_sizes(100, 10);
    for (int k = 0; k < 10; ++k) {
        EXPECT_EQ(a.sizes[static_cast<std::size_t>(k)], 10);
        EXPECT_EQ(a.representatives[static_cast<std::size_t>(k)] + 1, 5 + 10 * k);
    }
    const auto b = partition_sizes(571, 10);
    EXPECT_EQ(b.sizes.front(), 58);
    for (int k = 1; k < 10; ++k) EXPECT_EQ(b.sizes[static_cast<std::size_t>(k)], 57);
    EXPECT_EQ(partition_sizes(7, 3).sizes, (std::vector<int>{3, 2, 2}));
    EXPECT_EQ(partition_sizes(7, 3).block(1), (std::vector<int>{3, 4}));
    EXPECT_THROW(partition_sizes(5, 6), InvalidArgument);
    EXPECT_THROW(partition_sizes(5, 0), InvalidArgument);
}

TEST(Pvs, PlantedImpactPoint) {
    const auto d = synth_impact(200, 100, 11, {20}, 0.1);
    const auto fit = pvs_fit(d.z, d.y, small_config({10}));
    EXPECT_EQ(fit.w_opt, 10);
    EXPECT_TRUE(contains(fit.step1_selected, 14));  // block 11..20
    ASSERT_FALSE(fit.impact.empty());
    bool near = false;
    for (int j : fit.impact) near |= (j >= 10 && j <= 19);
    EXPECT_TRUE(near);
    check_support(fit);
    EXPECT_EQ(fit.train1.size(), 100u);
    EXPECT_EQ(fit.train2.front(), 100);
}

TEST(Pvs, ExactRepresentativeSelectedInStepOne) {
    const auto d = synth_impact(120, 100, 3, {25}, 0.0);
    const auto plan = partition_sizes(100, 10);
    const Vector y = 2.0 * d.z.col(plan.representatives[3]);  // index 34
    const auto fit = pvs_fit(d.z, y, small_config({10}));
    EXPECT_TRUE(contains(fit.step1_selected, 34));
    EXPECT_TRUE(contains(fit.impact, 34));
    EXPECT_NEAR(fit.beta(34), 2.0, 1e-6);
    check_support(fit);
}

TEST(Pvs, EmptyStepOneGivesInterceptOnly) {
    const auto d = synth_impact(60, 40, 5, {10}, 0.1);
    auto cfg = small_config({4});
    cfg.plm.lambda.lambda_seq = {1e6};
    const auto fit = pvs_fit(d.z, d.y, cfg);
    EXPECT_TRUE(fit.empty_step1);
    EXPECT_TRUE(fit.impact.empty());
    EXPECT_TRUE(fit.candidates.empty());
    EXPECT_NEAR(fit.intercept, take(d.y, fit.train2).mean(), 1e-12);
    EXPECT_EQ(fit.beta.cwiseAbs().sum(), 0.0);
}

TEST(Pvs, LargerWnListNeverWorse) {
    const auto d = synth_impact(100, 60, 8, {20, 45}, 0.2);
    const auto small = pvs_fit(d.z, d.y, small_config({6}));
    const auto large = pvs_fit(d.z, d.y, small_config({6, 10, 15}));
    auto best = [](const ImpactFit& f) {
        double b = kInf;
        for (const auto& [w, s] : f.w_scores) b = std::min(b, s);
        return b;
    };
    EXPECT_LE(best(large), best(small));
    EXPECT_EQ(large.w_scores.front().second, small.w_scores.front().second);
    EXPECT_EQ(large.w_scores.size(), 3u);
}

TEST(Pvs, OptionOneReproducesFittedAndErrors) {
    const auto d = synth_impact(80, 50, 2, {20}, 0.1);
    const auto fit = pvs_fit(d.z, d.y, small_config({5}));
    const Matrix z2 = take_rows(d.z, fit.train2);
    const auto r = impact_predict(fit, std::nullopt, z2, fit.fitted, 1);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_LT((r[0].predictions - fit.fitted).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(*r[0].msep, 0.0);
    EXPECT_THROW(impact_predict(fit, std::nullopt, z2, std::nullopt, 2), InvalidArgument);
    EXPECT_THROW(impact_predict(fit, std::nullopt, z2, std::nullopt, 5), InvalidArgument);
    EXPECT_THROW(impact_predict(fit, std::nullopt, z2.leftCols(10), std::nullopt, 1), DataError);
    auto bad = small_config({60});
    EXPECT_THROW(pvs_fit(d.z, d.y, bad), InvalidArgument);
    EXPECT_THROW(pvs_fit(d.z, d.y.head(10), small_config()), DataError);
}

TEST(PvsFunctional, RecoversPointsNearTruth) {
    const auto d = synth_impact(120, 60, 4, {15, 45}, 0.1);
    const auto fit = pvs_functional_fit(d.x, d.z, d.y, SmootherKind::knn, small_config({6}));
    ASSERT_TRUE(fit.step1 && fit.step2);
    check_support(fit);
    auto near = [&](int truth) {
        for (int j : fit.impact)
            if (std::abs(j - (truth - 1)) <= 3) return true;
        return false;
    };
    EXPECT_TRUE(near(15));
    EXPECT_TRUE(near(45));
    // option 1 on the train.2 curves reproduces the step-2 fitted values
    const auto r = impact_predict(fit, d.x.subset(fit.train2), take_rows(d.z, fit.train2), std::nullopt, 1);
    EXPECT_LT((r[0].predictions - fit.fitted).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(PvsFunctional, PredictionOptions) {
    const auto d = synth_impact(100, 40, 6, {12}, 0.1);
    const auto test = synth_impact(30, 40, 60, {12}, 0.1);
    const auto fit = pvs_functional_fit(d.x, d.z, d.y, SmootherKind::knn, small_config({4, 8}));
    for (int option : {1, 2, 4}) {
        const auto r = impact_predict(fit, test.x, test.z, test.y, option);
        ASSERT_EQ(r.size(), 1u);
        EXPECT_EQ(r[0].option, std::to_string(option));
        ASSERT_TRUE(r[0].msep);
        EXPECT_TRUE(std::isfinite(*r[0].msep));
    }
    const auto three = impact_predict(fit, test.x, test.z, test.y, 3);
    ASSERT_EQ(three.size(), 2u);
    EXPECT_EQ(three[0].option, "3a");
    EXPECT_EQ(three[1].option, "3b");
    // 3a is the unpenalized refit on the impact points over the full training sample
    auto pc = fit.config.plm;
    pc.lambda.lambda_seq = {0.0};
    const auto refit = sfplm_fit(d.x, take_cols(d.z, fit.impact), d.y, SmootherKind::knn, pc);
    const auto direct = plm_predict(refit, test.x, take_cols(test.z, fit.impact), test.y, 1);
    EXPECT_LT((direct.predictions - three[0].predictions).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PvsFunctional, LocalKnnWithSingleKEqualsOptionTwo) {
    const auto d = synth_impact(80, 30, 9, {10}, 0.1);
    const auto test = synth_impact(20, 30, 90, {10}, 0.1);
    auto cfg = small_config({5});
    cfg.plm.grid.knearest = {4};
    const auto fit = pvs_functional_fit(d.x, d.z, d.y, SmootherKind::knn, cfg);
    const auto two = impact_predict(fit, test.x, test.z, test.y, 2);
    const auto four = impact_predict(fit, test.x, test.z, test.y, 4);
    EXPECT_LT((two[0].predictions - four[0].predictions).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PvsFunctional, KernelRejectsOptionFour) {
    const auto d = synth_impact(60, 30, 2, {10}, 0.1);
    const auto fit = pvs_functional_fit(d.x, d.z, d.y, SmootherKind::kernel, small_config({5}));
    EXPECT_THROW(impact_predict(fit, d.x, d.z, std::nullopt, 4), InvalidArgument);
    EXPECT_THROW(impact_predict(fit, std::nullopt, d.z, std::nullopt, 1), InvalidArgument);
    check_support(fit);
}

TEST(Fassmr, SupportOnRepresentativesAndOptions) {
    const auto d = synth_mfplsim(80, 40, 3, {10, 30}, 0.1);
    const auto fit = fassmr_fit(d.x, d.z, d.y, SmootherKind::kernel, small_config({4, 8}));
    check_support(fit);
    ASSERT_TRUE(fit.theta);
    EXPECT_FALSE(fit.two_step);
    EXPECT_EQ(fit.columns, fit.plan.representatives);
    const auto r = impact_predict(fit, d.x, d.z, std::nullopt, 1);
    EXPECT_LT((r[0].predictions - fit.fitted).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NO_THROW(impact_predict(fit, d.x, d.z, std::nullopt, 2));
    EXPECT_THROW(impact_predict(fit, d.x, d.z, std::nullopt, 3), InvalidArgument);
}

TEST(Iassmr, StepOneEqualsFassmrOnTrainOne) {
    const auto d = synth_mfplsim(80, 40, 7, {10, 30}, 0.1);
    const auto cfg = small_config({4, 8});
    const auto fit = iassmr_fit(d.x, d.z, d.y, SmootherKind::knn, cfg);
    const auto f = fassmr_fit(d.x.subset(fit.train1), take_rows(d.z, fit.train1), take(d.y, fit.train1),
                              SmootherKind::knn, cfg);
    EXPECT_EQ(fit.w_opt, f.w_opt);
    EXPECT_EQ(fit.step1_selected, f.step1_selected);
    EXPECT_EQ(fit.step1->beta, f.step1->beta);
    EXPECT_EQ(fit.step1->theta->alpha, f.theta->alpha);
    EXPECT_EQ(fit.step1->tuning, f.tuning);
    EXPECT_EQ(fit.w_scores, f.w_scores);
    check_support(fit);
    ASSERT_TRUE(fit.theta);
    EXPECT_EQ(fit.theta->alpha, fit.step2->theta->alpha);
    const auto r = impact_predict(fit, d.x.subset(fit.train2), take_rows(d.z, fit.train2), std::nullopt, 1);
    EXPECT_LT((r[0].predictions - fit.fitted).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_EQ(impact_predict(fit, d.x, d.z, d.y, 3).size(), 2u);
    EXPECT_NO_THROW(impact_predict(fit, d.x, d.z, d.y, 4));
}

TEST(Iassmr, DeterministicAcrossThreads) {
    const auto d = synth_mfplsim(60, 30, 1, {8, 22}, 0.1);
    const auto cfg = small_config({3, 6});
    set_threads(1);
    const auto a = iassmr_fit(d.x, d.z, d.y, SmootherKind::kernel, cfg);
    set_threads(4);
    const auto b = iassmr_fit(d.x, d.z, d.y, SmootherKind::kernel, cfg);
    set_threads(1);
    EXPECT_EQ(a.beta, b.beta);
    EXPECT_EQ(a.impact, b.impact);
    EXPECT_EQ(a.tuning, b.tuning);
    EXPECT_EQ(a.fitted, b.fitted);
}
