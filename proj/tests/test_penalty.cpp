#include <gtest/gtest.h>

#include <fsr/penalty.hpp>

using namespace fsr;

namespace {

Matrix gaussian(Rng& rng, Index n, Index p) {
    Matrix x(n, p);
    for (Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
    return x;
}

// Columns with ||x_j||^2 = n so the working scale is the identity.
Matrix unit_columns(Matrix x) {
    const double n = static_cast<double>(x.rows());
    for (Index j = 0; j < x.cols(); ++j) x.col(j) *= std::sqrt(n) / x.col(j).norm();
    return x;
}

// X' X = n I.
Matrix orthonormal(Rng& rng, Index n, Index p) {
    Eigen::HouseholderQR<Matrix> qr(gaussian(rng, n, p));
    return Matrix(qr.householderQ() * Matrix::Identity(n, p)) * std::sqrt(static_cast<double>(n));
}

Vector ols(const Matrix& x, const Vector& y) { return x.colPivHouseholderQr().solve(y); }

PenaltySpec lasso_spec(std::vector<int> groups = {}) {
    PenaltySpec s;
    s.kind = PenaltyKind::grLASSO;
    s.groups = std::move(groups);
    s.ols_scale = false;
    return s;
}

// Largest KKT violation for a group-LASSO solution whose penalty is
// lambda_m * ||X_m b_m|| / sqrt(n) (columns already at unit scale).
double kkt_violation(const Matrix& x, const Vector& y, const Vector& beta, const std::vector<int>& sizes,
                     const std::vector<double>& lambda_m) {
    const double n = static_cast<double>(x.rows());
    const Vector r = y - x * beta;
    double worst = 0.0;
    Index start = 0;
    for (std::size_t m = 0; m < sizes.size(); ++m) {
        const Index v = sizes[m];
        const Matrix xm = x.middleCols(start, v);
        const Matrix g = xm.transpose() * xm / n;
        const Vector grad = xm.transpose() * r / n;
        const Vector bm = beta.segment(start, v);
        if (bm.norm() == 0.0) {
            const double dual = std::sqrt(grad.dot(g.ldlt().solve(grad)));
            worst = std::max(worst, dual - lambda_m[m]);
        } else {
            const Vector sub = lambda_m[m] * g * bm / std::sqrt(bm.dot(g * bm));
            worst = std::max(worst, (grad - sub).cwiseAbs().maxCoeff());
        }
        start += v;
    }
    return worst;
}

// Plain cyclic LASSO: min RSS/2 + n lambda sum |b_j| for unit-scale columns.
Vector reference_lasso(const Matrix& x, const Vector& y, double lambda) {
    const double n = static_cast<double>(x.rows());
    Vector b = Vector::Zero(x.cols());
    Vector r = y;
    for (int it = 0; it < 100000; ++it) {
        double change = 0.0;
        for (Index j = 0; j < x.cols(); ++j) {
            const double z = x.col(j).dot(r) / n + b(j);
            const double nb = z > lambda ? z - lambda : (z < -lambda ? z + lambda : 0.0);
            r -= x.col(j) * (nb - b(j));
            change = std::max(change, std::abs(nb - b(j)));
            b(j) = nb;
        }
        if (change < 1e-13) break;
    }
    return b;
}

}  // namespace

TEST(Scad, ThreeBranches) {
    EXPECT_DOUBLE_EQ(scad_penalty(0.5, 1.0, 3.7), 0.5);
    EXPECT_NEAR(scad_penalty(2.0, 1.0, 3.7), (12.69 - 2.89) / 5.4, 1e-12);
    EXPECT_NEAR(scad_penalty(2.0, 1.0, 3.7), 1.8148148, 1e-7);
    EXPECT_DOUBLE_EQ(scad_penalty(5.0, 1.0, 3.7), 2.35);
    EXPECT_DOUBLE_EQ(scad_penalty(-5.0, 1.0, 3.7), 2.35);
    EXPECT_THROW(scad_penalty(1.0, 1.0, 2.0), InvalidArgument);
}

TEST(Scad, ContinuousAtBreakpoints) {
    for (double l : {0.3, 1.0, 2.5}) {
        EXPECT_NEAR(scad_penalty(l * (1 - 1e-12), l), scad_penalty(l * (1 + 1e-12), l), 1e-9);
        EXPECT_NEAR(scad_penalty(3.7 * l * (1 - 1e-12), l), scad_penalty(3.7 * l * (1 + 1e-12), l), 1e-9);
    }
}

TEST(GroupPenalty, Examples) {
    Vector b(3);
    b << 3, 4, -2;
    EXPECT_NEAR(group_penalty(b, lasso_spec({2, 1}), 1.0), std::sqrt(2.0) * 5 + 2, 1e-12);
    EXPECT_NEAR(group_penalty(b, lasso_spec({2, 1}), 1.0), 9.0710678, 1e-7);
    EXPECT_DOUBLE_EQ(group_penalty(b, lasso_spec(), 0.7), 0.7 * 9);
    EXPECT_EQ(group_penalty(Vector::Zero(3), lasso_spec({2, 1}), 1.0), 0.0);
    EXPECT_THROW(group_penalty(b, lasso_spec({2, 2}), 1.0), InvalidArgument);
    PenaltySpec s = lasso_spec();
    s.kind = PenaltyKind::grSCAD;
    EXPECT_NEAR(group_penalty(b, s, 1.0), scad_penalty(3, 1) + 2.35 + scad_penalty(2, 1), 1e-12);
}

TEST(Groups, ContiguousSizes) {
    EXPECT_EQ(contiguous_groups(7, 3), (std::vector<int>{3, 2, 2}));
    EXPECT_EQ(contiguous_groups(6, 6), (std::vector<int>(6, 1)));
    EXPECT_THROW(contiguous_groups(3, 4), InvalidArgument);
}

TEST(Pels, LambdaZeroIsOls) {
    Rng rng(1);
    for (int rep = 0; rep < 10; ++rep) {
        const Matrix x = gaussian(rng, 40, 6) * 3.0;
        const Vector y = gaussian(rng, 40, 1).col(0);
        for (auto kind : {PenaltyKind::grLASSO, PenaltyKind::grSCAD}) {
            PenaltySpec s = lasso_spec({2, 3, 1});
            s.kind = kind;
            const auto sol = pels_solve(x, y, s, 0.0);
            EXPECT_LT((sol.beta - ols(x, y)).cwiseAbs().maxCoeff(), 1e-6);
            // with intercept
            Matrix xi(40, 7);
            xi << Matrix::Ones(40, 1), x;
            const Vector full = ols(xi, y);
            const auto si = pels_solve(x, y, s, 0.0, {}, true);
            EXPECT_NEAR(si.intercept, full(0), 1e-6);
            EXPECT_LT((si.beta - full.tail(6)).cwiseAbs().maxCoeff(), 1e-6);
        }
    }
}

TEST(Pels, AboveLambdaMaxIsZero) {
    Rng rng(2);
    for (int rep = 0; rep < 40; ++rep) {
        const Matrix x = gaussian(rng, 30, 5);
        const Vector y = x.col(0) + gaussian(rng, 30, 1).col(0);
        for (bool scale : {false, true}) {
            PenaltySpec s = lasso_spec({2, 2, 1});
            s.ols_scale = scale;
            const PelsProblem pb(x, y, s, true);
            const double lmax = pb.lambda_max();
            std::vector<Vector> eta;
            int budget = 1000;
            EXPECT_EQ(pels_solve_warm(pb, lmax * (1 + 1e-9), eta, budget).beta.norm(), 0.0);
            budget = 1000;
            eta.clear();
            EXPECT_EQ(pels_solve_warm(pb, lmax, eta, budget).beta.norm(), 0.0);
            budget = 1000;
            eta.clear();
            EXPECT_GT(pels_solve_warm(pb, lmax * 0.99, eta, budget).beta.norm(), 0.0);
        }
    }
}

TEST(Pels, SingleOrthonormalPredictorSoftThreshold) {
    Rng rng(3);
    const Index n = 50;
    const Matrix z = orthonormal(rng, n, 1);
    const Vector y = 0.8 * z.col(0) + gaussian(rng, n, 1).col(0);
    const double c = z.col(0).dot(y) / n;
    EXPECT_NEAR(PelsProblem(z, y, lasso_spec(), false).lambda_max(), std::abs(c), 1e-12);
    for (double l : {0.0, 0.1 * std::abs(c), 0.5 * std::abs(c), 2 * std::abs(c)}) {
        const double expect = std::copysign(std::max(std::abs(c) - l, 0.0), c);
        EXPECT_NEAR(pels_solve(z, y, lasso_spec(), l).beta(0), expect, 1e-10);
    }
}

TEST(Pels, GroupLassoKktOnRandomInstances) {
    Rng rng(4);
    for (int rep = 0; rep < 50; ++rep) {
        const Index n = 30 + static_cast<Index>(rng.below(40));
        const std::vector<int> sizes = {1, 3, 2, 2, 1};
        Matrix x = gaussian(rng, n, 9);
        x.col(2) += 0.7 * x.col(1);  // correlation inside a group
        x = unit_columns(x);
        Vector beta0 = Vector::Zero(9);
        beta0(1) = 1.0, beta0(2) = -0.5, beta0(8) = 0.7;
        const Vector y = x * beta0 + 0.5 * gaussian(rng, n, 1).col(0);
        const PelsProblem pb(x, y, lasso_spec(sizes), false);
        const double lambda = pb.lambda_max() * rng.uniform(0.02, 0.9);
        PelsOptions o;
        o.max_iter = 100000;
        o.tol = 1e-12;
        const auto sol = pels_solve(x, y, lasso_spec(sizes), lambda, o);
        ASSERT_TRUE(sol.converged);
        std::vector<double> lm;
        for (int v : sizes) lm.push_back(lambda * std::sqrt(static_cast<double>(v)));
        EXPECT_LE(kkt_violation(x, y, sol.beta, sizes, lm), 1e-6) << "instance " << rep;
    }
}

TEST(Pels, GroupLassoKktOnOrthonormalGroups) {
    Rng rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        const Index n = 60;
        const Matrix x = orthonormal(rng, n, 6);
        const Vector y = x.col(0) - 0.4 * x.col(1) + 0.3 * x.col(4) + gaussian(rng, n, 1).col(0);
        const std::vector<int> sizes = {2, 2, 2};
        const double lambda = 0.1;
        const auto sol = pels_solve(x, y, lasso_spec(sizes), lambda);
        const Vector r = y - x * sol.beta;
        for (int m = 0; m < 3; ++m) {
            const Vector g = x.middleCols(2 * m, 2).transpose() * r / n;
            const Vector bm = sol.beta.segment(2 * m, 2);
            if (bm.norm() == 0.0)
                EXPECT_LE(g.norm(), lambda * std::sqrt(2.0) + 1e-6);
            else
                EXPECT_LE((g - lambda * std::sqrt(2.0) * bm / bm.norm()).norm(), 1e-6);
        }
    }
}

TEST(Pels, ObjectiveNonincreasingEverySweep) {
    Rng rng(6);
    for (int rep = 0; rep < 30; ++rep) {
        const Index n = 25 + static_cast<Index>(rng.below(30));
        Matrix x = gaussian(rng, n, 8);
        x.col(1) += x.col(0);
        const Vector y = x.col(0) * 2 - x.col(5) + gaussian(rng, n, 1).col(0);
        for (auto kind : {PenaltyKind::grLASSO, PenaltyKind::grSCAD}) {
            PenaltySpec s;
            s.kind = kind;
            s.groups = {2, 3, 1, 2};
            s.ols_scale = rep % 2 == 0;
            const PelsProblem pb(x, y, s, rep % 3 == 0);
            const double lambda = pb.lambda_max() * rng.uniform(0.01, 0.8);
            PelsOptions o;
            o.trace = true;
            std::vector<Vector> eta;
            int budget = 1000;
            const auto sol = pels_solve_warm(pb, lambda, eta, budget, o);
            double prev = pb.objective(Vector::Zero(8), lambda);
            for (double q : sol.trace) {
                EXPECT_LE(q, prev + 1e-12 * std::max(1.0, std::abs(prev)));
                prev = q;
            }
            EXPECT_NEAR(sol.objective, sol.trace.back(), 1e-9 * std::max(1.0, sol.objective));
        }
    }
}

TEST(Pels, ObjectiveMatchesIndependentFormula) {
    Rng rng(7);
    const Index n = 40;
    const Matrix x = gaussian(rng, n, 5) * 2.0 + Matrix::Constant(n, 5, 1.0);
    const Vector y = x.col(0) + gaussian(rng, n, 1).col(0);
    PenaltySpec s = lasso_spec({3, 2});
    const double lambda = 0.05;
    const auto sol = pels_solve(x, y, s, lambda, {}, true);
    // centered, unit-scale columns: the group norm is ||Xc_m b_m|| / sqrt(n)
    const Matrix xc = x.rowwise() - x.colwise().mean();
    const double rss = (y - x * sol.beta - Vector::Constant(n, sol.intercept)).squaredNorm();
    const double g1 = (xc.leftCols(3) * sol.beta.head(3)).norm() / std::sqrt(double(n));
    const double g2 = (xc.rightCols(2) * sol.beta.tail(2)).norm() / std::sqrt(double(n));
    const double q = 0.5 * rss + n * lambda * (std::sqrt(3.0) * g1 + std::sqrt(2.0) * g2);
    EXPECT_NEAR(sol.objective, q, 1e-10 * std::max(1.0, q));
    EXPECT_NEAR(pels_objective(x, y, s, lambda, sol.beta, true), q, 1e-10 * std::max(1.0, q));
}

TEST(Pels, SingletonGroupLassoIsLasso) {
    Rng rng(8);
    for (int rep = 0; rep < 10; ++rep) {
        const Index n = 50;
        Matrix x = gaussian(rng, n, 6);
        x.col(3) += 0.5 * x.col(2);
        x = unit_columns(x);
        const Vector y = x.col(2) - x.col(0) + gaussian(rng, n, 1).col(0);
        const double lambda = 0.05 + 0.02 * rep;
        PelsOptions o;
        o.tol = 1e-12;
        o.max_iter = 100000;
        const auto sol = pels_solve(x, y, lasso_spec(), lambda, o);
        EXPECT_LT((sol.beta - reference_lasso(x, y, lambda)).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(Pels, ScadLargeCoefficientsUnpenalized) {
    Rng rng(9);
    const Index n = 80;
    const Matrix x = orthonormal(rng, n, 5);
    const Vector y = 4 * x.col(0) - 3 * x.col(2) + 0.05 * gaussian(rng, n, 1).col(0);
    PenaltySpec s = lasso_spec();
    s.kind = PenaltyKind::grSCAD;
    const double lambda = 0.3;  // a * lambda = 1.11 < 3
    const auto sol = pels_solve(x, y, s, lambda);
    const Vector bols = x.transpose() * y / n;
    EXPECT_NEAR(sol.beta(0), bols(0), 1e-10);
    EXPECT_NEAR(sol.beta(2), bols(2), 1e-10);
    EXPECT_EQ(sol.support(), (std::vector<int>{0, 2}));
}

TEST(Pels, SparsityMonotoneOnOrthonormalDesigns) {
    Rng rng(10);
    for (int rep = 0; rep < 10; ++rep) {
        const Index n = 60;
        const Matrix x = orthonormal(rng, n, 10);
        const Vector y = x * gaussian(rng, 10, 1).col(0) * 0.3 + gaussian(rng, n, 1).col(0);
        for (auto kind : {PenaltyKind::grLASSO, PenaltyKind::grSCAD}) {
            PenaltySpec s = lasso_spec();
            s.kind = kind;
            const PelsProblem pb(x, y, s, false);
            LambdaPathConfig lc;
            lc.nlambda = 30;
            const auto path = pels_path(pb, lambda_path(pb, lc));
            for (std::size_t l = 1; l < path.size(); ++l) {
                const auto big = path[l - 1].support(), small = path[l].support();
                EXPECT_TRUE(std::includes(small.begin(), small.end(), big.begin(), big.end()));
            }
        }
    }
}

TEST(Pels, OlsScaleActsAsCoefficientLambdas) {
    Rng rng(11);
    for (int rep = 0; rep < 10; ++rep) {
        const Index n = 40;
        Matrix x = gaussian(rng, n, 4);
        x.col(1) += 1.5 * x.col(0);  // unequal standard errors
        x = unit_columns(x);
        const Vector y = x.col(0) + 0.5 * x.col(3) + gaussian(rng, n, 1).col(0);
        PenaltySpec s = lasso_spec();
        s.ols_scale = true;
        // standard errors from closed-form OLS
        const Vector b = ols(x, y);
        const double s2 = (y - x * b).squaredNorm() / double(n - 4);
        const Matrix inv = (x.transpose() * x).inverse();
        const double lambda = 0.5;
        PelsOptions o;
        o.tol = 1e-12;
        o.max_iter = 100000;
        const auto sol = pels_solve(x, y, s, lambda, o);
        std::vector<double> lm;
        for (Index j = 0; j < 4; ++j) lm.push_back(lambda * std::sqrt(s2 * inv(j, j)));
        EXPECT_LE(kkt_violation(x, y, sol.beta, {1, 1, 1, 1}, lm), 1e-6);
    }
}

TEST(Pels, OlsScaleFallsBackWhenWide) {
    Rng rng(12);
    const Matrix x = gaussian(rng, 10, 12);
    const Vector y = gaussian(rng, 10, 1).col(0);
    PenaltySpec s;
    EXPECT_FALSE(PelsProblem(x, y, s, true).ols_scaled());
    EXPECT_TRUE(PelsProblem(x.leftCols(3), y, s, true).ols_scaled());
}

TEST(Pels, ZeroColumnsAndRankDeficientGroups) {
    Rng rng(13);
    Matrix x = gaussian(rng, 30, 4);
    x.col(1) = Vector::Zero(30);
    x.col(3) = 2 * x.col(2);
    const Vector y = x.col(0) + x.col(2) + 0.1 * gaussian(rng, 30, 1).col(0);
    const auto sol = pels_solve(x, y, lasso_spec({2, 2}), 0.0);
    EXPECT_EQ(sol.beta(1), 0.0);
    const Matrix red = take_cols(x, {0, 2});
    EXPECT_NEAR((y - x * sol.beta).squaredNorm(), (y - red * ols(red, y)).squaredNorm(), 1e-9);
    EXPECT_NEAR(sol.beta(2) + 2 * sol.beta(3), 1.0, 0.1);
}

TEST(Pels, Errors) {
    Matrix x = Matrix::Ones(5, 2);
    x(0, 0) = 2;
    Vector y = Vector::LinSpaced(5, 0, 1);
    EXPECT_THROW(pels_solve(x, Vector::Zero(4), lasso_spec(), 0.1), InvalidArgument);
    Vector bad = y;
    bad(2) = std::nan("");
    EXPECT_THROW(pels_solve(x, bad, lasso_spec(), 0.1), InvalidArgument);
    EXPECT_THROW(pels_solve(x, y, lasso_spec(), -1), InvalidArgument);
    PelsOptions o;
    o.max_iter = 0;
    EXPECT_THROW(pels_solve(x, y, lasso_spec(), 0.1, o), InvalidArgument);
    EXPECT_THROW(lambda_path(x, Vector::Constant(5, 3.0), lasso_spec(), {}, true), NumericError);
}

TEST(Pels, NonConvergenceIsAFlag) {
    Rng rng(14);
    Matrix x = gaussian(rng, 30, 6);
    x.col(1) = x.col(0) + 1e-3 * x.col(1);
    const Vector y = x.col(0) + gaussian(rng, 30, 1).col(0);
    PelsOptions o;
    o.max_iter = 1;
    const auto sol = pels_solve(x, y, lasso_spec(), 1e-4, o);
    EXPECT_FALSE(sol.converged);
    EXPECT_EQ(sol.iterations, 1);
}

TEST(LambdaPath, Defaults) {
    Rng rng(15);
    const Matrix x = gaussian(rng, 200, 5);
    const Vector y = x.col(0) + gaussian(rng, 200, 1).col(0);
    const PelsProblem pb(x, y, PenaltySpec{}, true);
    const auto path = lambda_path(pb, LambdaPathConfig{});
    ASSERT_EQ(path.size(), 100u);
    EXPECT_DOUBLE_EQ(path.front(), pb.lambda_max());
    EXPECT_NEAR(path.back(), 1e-5 * pb.lambda_max(), 1e-12 * pb.lambda_max());
    for (std::size_t i = 1; i < path.size(); ++i) EXPECT_LT(path[i], path[i - 1]);
    std::vector<Vector> eta;
    int budget = 10;
    EXPECT_EQ(pels_solve_warm(pb, path.front(), eta, budget).beta.norm(), 0.0);
}

TEST(LambdaPath, HighDimensionalFraction) {
    Rng rng(16);
    const Matrix x = gaussian(rng, 20, 30);
    const Vector y = gaussian(rng, 20, 1).col(0);
    const PelsProblem pb(x, y, lasso_spec(), true);
    LambdaPathConfig c;
    c.nlambda = 5;
    auto path = lambda_path(pb, c);
    EXPECT_NEAR(path.back() / path.front(), 0.05, 1e-12);
    c.lambda_min = 0.2;
    path = lambda_path(pb, c);
    EXPECT_NEAR(path.back() / path.front(), 0.2, 1e-12);
    c.lambda_min.reset();
    c.factor_pn = 0.5;  // n = 20 >= 0.5 * 30
    path = lambda_path(pb, c);
    EXPECT_NEAR(path.back() / path.front(), 1e-5, 1e-12);
}

TEST(LambdaPath, ExplicitSequence) {
    Rng rng(17);
    const Matrix x = gaussian(rng, 20, 3);
    const Vector y = gaussian(rng, 20, 1).col(0);
    LambdaPathConfig c;
    c.lambda_seq = {0};
    EXPECT_EQ(lambda_path(x, y, lasso_spec(), c), std::vector<double>{0.0});
    c.lambda_seq = {0.1, 0.5, 0.1, 0.2};
    EXPECT_EQ(lambda_path(x, y, lasso_spec(), c), (std::vector<double>{0.5, 0.2, 0.1}));
    c.lambda_seq = {-1};
    EXPECT_THROW(lambda_path(x, y, lasso_spec(), c), InvalidArgument);
}

TEST(LambdaPath, WarmStartMatchesColdSolve) {
    Rng rng(18);
    const Matrix x = gaussian(rng, 50, 6);
    const Vector y = x.col(0) - x.col(1) + gaussian(rng, 50, 1).col(0);
    const PelsProblem pb(x, y, lasso_spec({2, 2, 2}), true);
    LambdaPathConfig c;
    c.nlambda = 20;
    const auto lambdas = lambda_path(pb, c);
    PelsOptions o;
    o.tol = 1e-12;
    o.max_iter = 1000000;
    const auto path = pels_path(pb, lambdas, o);
    ASSERT_EQ(path.size(), lambdas.size());
    for (std::size_t l = 0; l < lambdas.size(); l += 5) {
        std::vector<Vector> eta;
        int budget = 1000000;
        const auto cold = pels_solve_warm(pb, lambdas[l], eta, budget, o);
        EXPECT_LT((cold.beta - path[l].beta).cwiseAbs().maxCoeff(), 1e-7);
    }
}

TEST(LambdaPath, BudgetIsShared) {
    Rng rng(19);
    const Matrix x = gaussian(rng, 50, 6);
    const Vector y = x.col(0) + gaussian(rng, 50, 1).col(0);
    const PelsProblem pb(x, y, lasso_spec(), true);
    LambdaPathConfig c;
    c.nlambda = 50;
    PelsOptions o;
    o.max_iter = 20;
    const auto path = pels_path(pb, lambda_path(pb, c), o);
    int total = 0;
    for (const auto& s : path) total += s.iterations;
    EXPECT_LE(total, 20);
    EXPECT_LT(path.size(), 50u);
    EXPECT_FALSE(path.back().converged);
}

TEST(Criterion, Values) {
    EXPECT_EQ(criterion_value(0.0, 10, 2, CriterionKind::gcv), 0.0);
    EXPECT_EQ(criterion_value(0.0, 10, 2, CriterionKind::aic), -1e308);
    EXPECT_EQ(criterion_value(0.0, 10, 2, CriterionKind::bic), -1e308);
    EXPECT_DOUBLE_EQ(criterion_value(5.0, 10, 0, CriterionKind::gcv), 0.5);
    EXPECT_DOUBLE_EQ(criterion_value(5.0, 10, 2, CriterionKind::gcv), 5.0 / (10 * 0.64));
    EXPECT_EQ(criterion_value(5.0, 10, 10, CriterionKind::gcv), kInf);
    EXPECT_NEAR(criterion_value(5.0, 10, 3, CriterionKind::aic), 10 * std::log(0.5) + 6, 1e-12);
    EXPECT_NEAR(criterion_value(5.0, 10, 3, CriterionKind::bic), 10 * std::log(0.5) + std::log(10.0) * 3, 1e-12);
    for (double df : {1.0, 2.0, 5.0})
        EXPECT_GT(criterion_value(3.0, 20, df + 1, CriterionKind::bic) - criterion_value(3.0, 20, df, CriterionKind::bic),
                  criterion_value(3.0, 20, df + 1, CriterionKind::aic) - criterion_value(3.0, 20, df, CriterionKind::aic));
    EXPECT_THROW(criterion_value(1, 10, 1, CriterionKind::kfold_cv), InvalidArgument);
}

TEST(Criterion, FoldsAreBalancedAndSeeded) {
    const auto f = kfold_assignment(23, 5, 123);
    std::vector<int> count(5, 0);
    for (int v : f) ++count[static_cast<std::size_t>(v)];
    for (int c : count) EXPECT_TRUE(c == 4 || c == 5);
    EXPECT_EQ(f, kfold_assignment(23, 5, 123));
    EXPECT_NE(f, kfold_assignment(23, 5, 124));
    EXPECT_THROW(kfold_assignment(5, 6, 1), InvalidArgument);
}

TEST(Select, PicksTruthOnEasyProblem) {
    Rng rng(20);
    const Index n = 150;
    const Matrix x = gaussian(rng, n, 8);
    const Vector y = 2 * x.col(0) - x.col(1) + 0.5 * gaussian(rng, n, 1).col(0);
    for (auto crit : {CriterionKind::bic, CriterionKind::gcv, CriterionKind::kfold_cv}) {
        CriterionSpec cs;
        cs.kind = crit;
        const auto fit = pels_select(x, y, PenaltySpec{}, {}, cs, {}, true);
        const auto supp = fit.selected().support();
        EXPECT_TRUE(std::find(supp.begin(), supp.end(), 0) != supp.end());
        EXPECT_TRUE(std::find(supp.begin(), supp.end(), 1) != supp.end());
        if (crit == CriterionKind::bic) EXPECT_EQ(supp, (std::vector<int>{0, 1}));
        EXPECT_NEAR(fit.selected().beta(0), 2.0, 0.2);
        const double c = fit.selected().criterion, tol = 1e-9 * std::max(1.0, std::abs(c));
        for (const auto& s : fit.path) {
            EXPECT_GE(s.criterion, c - tol);
            if (std::abs(s.criterion - c) <= tol) EXPECT_GE(s.objective, fit.selected().objective);
        }
    }
}
