#include <gtest/gtest.h>

#include <fsr/core.hpp>

using namespace fsr;

TEST(Diagnostics, ZeroResiduals) {
    Vector y(3);
    y << 1, 2, 4;
    const auto d = diagnostics_from(Vector::Zero(3), y, 2.0);
    EXPECT_EQ(d.r_squared, 1.0);
    EXPECT_EQ(d.var_res, 0.0);
}

TEST(Diagnostics, NullModelHasZeroRSquared) {
    Vector y(5);
    y << 1, 3, 2, 7, 5;
    const Vector r = y.array() - y.mean();
    const auto d = diagnostics_from(r, y, 4.0);
    EXPECT_NEAR(d.r_squared, 0.0, 1e-14);
    EXPECT_NEAR(d.var_res, sample_variance(y), 1e-14);
}

TEST(Diagnostics, ResidualVarianceArithmetic) {
    // var_res 3.323535 on 132.9207 degrees of freedom
    const double df = 132.9207;
    const double ssr = 3.323535 * df;
    EXPECT_NEAR(ssr, 441.766, 1e-3);
    Vector r = Vector::Constant(160, std::sqrt(ssr / 160.0));
    Vector y = Vector::LinSpaced(160, 0.0, 10.0);
    EXPECT_NEAR(diagnostics_from(r, y, df).var_res, 3.323535, 1e-9);
}

TEST(Diagnostics, ConstantResponseConvention) {
    const Vector y = Vector::Constant(4, 2.0);
    EXPECT_EQ(diagnostics_from(Vector::Constant(4, 0.1), y, 3.0).r_squared, 1.0);
}

TEST(Diagnostics, NegativeRSquaredIsNotClamped) {
    Vector y(3);
    y << 0, 1, 2;
    Vector r(3);
    r << 5, -5, 5;
    EXPECT_LT(diagnostics_from(r, y, 2.0).r_squared, 0.0);
}

TEST(Diagnostics, RejectsNonPositiveDf) {
    Vector y = Vector::Ones(3);
    EXPECT_THROW(diagnostics_from(y, y, 0.0), InvalidArgument);
    EXPECT_THROW(diagnostics_from(y, y, -1.0), InvalidArgument);
}

TEST(Criterion, NamesRoundTrip) {
    for (auto c : {CriterionKind::gcv, CriterionKind::aic, CriterionKind::bic, CriterionKind::kfold_cv})
        EXPECT_EQ(criterion_from_string(to_string(c)), c);
    EXPECT_THROW(criterion_from_string("Cp"), InvalidArgument);
    CriterionSpec s{CriterionKind::kfold_cv, 1, 1};
    EXPECT_THROW(s.validate(), InvalidArgument);
}
