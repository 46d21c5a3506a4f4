#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "basis.hpp"
#include "fsim.hpp"
#include "rng.hpp"

namespace fsr {

/// Planted model and a sample drawn from it.
struct SynthData {
    std::string kind;
    FunctionalSample x;  // curves entering the nonparametric / single-index part
    Matrix z;            // scalar covariates, or the discretized curve zeta for impact kinds
    Vector y;
    Vector signal;  // noiseless response
    double sigma = 0.0;
    // ground truth
    std::vector<double> theta_alpha;  // in the basis order 3, nknot_theta = 2
    std::vector<double> beta;
    std::vector<int> impact;  // 1-based grid indices
};

namespace synth_detail {

// Smooth random curves: a Fourier mixture with decaying random amplitudes.
// Amplitudes are uniform with unit variance, so every index has bounded support.
inline Matrix fourier_curves(Rng& rng, Index n, const Vector& t) {
    const double r = std::sqrt(3.0);
    Matrix x(n, t.size());
    for (Index i = 0; i < n; ++i) {
        const double a0 = rng.uniform(-r, r);
        double c[3], s[3];
        for (int k = 0; k < 3; ++k) {
            c[k] = rng.uniform(-r, r) / (k + 1);
            s[k] = rng.uniform(-r, r) / (k + 1);
        }
        const double slope = rng.uniform(-r, r);
        for (Index j = 0; j < t.size(); ++j) {
            double v = a0 + slope * t(j);
            for (int k = 0; k < 3; ++k) {
                const double w = 2.0 * std::numbers::pi * (k + 1) * t(j);
                v += c[k] * std::cos(w) + s[k] * std::sin(w);
            }
            x(i, j) = v;
        }
    }
    return x;
}

// Brownian-motion paths on the grid points of [0,1] (zeta(t_1) ~ N(0, t_1)).
inline Matrix brownian_curves(Rng& rng, Index n, Index p) {
    Matrix z(n, p);
    const double dt = 1.0 / static_cast<double>(p);
    for (Index i = 0; i < n; ++i) {
        double b = 0.0;
        for (Index j = 0; j < p; ++j) {
            b += std::sqrt(dt) * rng.normal();
            z(i, j) = b;
        }
    }
    return z;
}

inline double sd(const Vector& v) { return std::sqrt(sample_variance(v)); }

inline IndexBasisConfig planted_basis() {
    IndexBasisConfig b;
    b.order = 3;
    b.nknot_theta = 2;
    b.nknot = 12;
    return b;
}

// A seed-grid direction (1, 0, 1, -1, 0), normalized.
inline Vector planted_alpha(const IndexContext& ctx) {
    Vector beta(5);
    beta << 1, 0, 1, -1, 0;
    return calibrate_direction(beta, ctx.theta_gram, ctx.theta_basis, ctx.t0);
}

inline double link(double u) { return 2.0 * std::sin(1.5 * u) + u * u; }

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace synth_detail

/// Y = r(<theta*, X>) + eps with theta* in the seed grid; sigma = noise_ratio * sd(signal).
inline SynthData synth_fsim(Index n, Index p, std::uint64_t seed, double noise_ratio = 0.1) {
    using namespace synth_detail;
    Rng rng(seed);
    SynthData d;
    d.kind = "fsim";
    d.x = FunctionalSample::equispaced(fourier_curves(rng, n, Vector::LinSpaced(p, 0, 1)), {0, 1});
    const IndexContext ctx = IndexContext::build(d.x, planted_basis());
    const Vector alpha = planted_alpha(ctx);
    const Vector u = ctx.projections(alpha);
    d.signal = u.unaryExpr([](double v) { return link(v); });
    d.sigma = noise_ratio * sd(d.signal);
    d.y = d.signal;
    for (Index i = 0; i < n; ++i) d.y(i) += d.sigma * rng.normal();
    d.theta_alpha = to_std(alpha);
    d.z = Matrix(n, 0);
    return d;
}

/// Y = 2 z1 - z2 + m(X) + eps with five null covariates; m(X) = int X^2.
inline SynthData synth_sfplm(Index n, Index p, std::uint64_t seed, double sigma = 0.25) {
    using namespace synth_detail;
    Rng rng(seed);
    SynthData d;
    d.kind = "sfplm";
    const Vector t = Vector::LinSpaced(p, 0, 1);
    d.x = FunctionalSample::equispaced(fourier_curves(rng, n, t), {0, 1});
    d.beta = {2, -1, 0, 0, 0, 0, 0};
    d.z = Matrix(n, 7);
    for (Index i = 0; i < d.z.size(); ++i) d.z(i) = rng.normal();
    d.signal = Vector(n);
    for (Index i = 0; i < n; ++i) {
        const Vector xi = d.x.values.row(i).transpose();
        double m = 0.0;
        for (Index j = 0; j + 1 < p; ++j) m += 0.5 * (xi(j) * xi(j) + xi(j + 1) * xi(j + 1)) * (t(j + 1) - t(j));
        d.signal(i) = 2.0 * d.z(i, 0) - d.z(i, 1) + m;
    }
    d.sigma = sigma;
    d.y = d.signal;
    for (Index i = 0; i < n; ++i) d.y(i) += sigma * rng.normal();
    return d;
}

/// Y = z1 + r(<theta*, X>) + eps with four null covariates.
inline SynthData synth_sfplsim(Index n, Index p, std::uint64_t seed, double sigma = 0.1) {
    using namespace synth_detail;
    Rng rng(seed);
    SynthData d;
    d.kind = "sfplsim";
    d.x = FunctionalSample::equispaced(fourier_curves(rng, n, Vector::LinSpaced(p, 0, 1)), {0, 1});
    const IndexContext ctx = IndexContext::build(d.x, planted_basis());
    const Vector alpha = planted_alpha(ctx);
    const Vector u = ctx.projections(alpha);
    d.beta = {1, 0, 0, 0, 0};
    d.z = Matrix(n, 5);
    for (Index i = 0; i < d.z.size(); ++i) d.z(i) = rng.normal();
    d.signal = d.z.col(0) + u.unaryExpr([](double v) { return link(v); });
    d.sigma = sigma;
    d.y = d.signal;
    for (Index i = 0; i < n; ++i) d.y(i) += sigma * rng.normal();
    d.theta_alpha = to_std(alpha);
    return d;
}

/// Linear model on Brownian paths with impact points `impact` (1-based).
inline SynthData synth_impact(Index n, Index p, std::uint64_t seed, std::vector<int> impact = {20, 60},
                              double sigma = 0.1) {
    using namespace synth_detail;
    Rng rng(seed);
    SynthData d;
    d.kind = "impact";
    d.z = brownian_curves(rng, n, p);
    d.impact = impact;
    d.signal = Vector::Constant(n, 1.0);
    d.beta.assign(static_cast<std::size_t>(p), 0.0);
    const double coef[] = {3.0, -3.0, 2.0, -2.0};
    for (std::size_t k = 0; k < impact.size(); ++k) {
        if (impact[k] < 1 || impact[k] > p) throw InvalidArgument("impact index outside 1..p");
        const double b = coef[k % 4];
        d.beta[static_cast<std::size_t>(impact[k] - 1)] = b;
        d.signal += b * d.z.col(impact[k] - 1);
    }
    d.sigma = sigma;
    d.y = d.signal;
    for (Index i = 0; i < n; ++i) d.y(i) += sigma * rng.normal();
    d.x = FunctionalSample::equispaced(d.z, {0, 1});
    return d;
}

/// Y = r(<theta*, X>) + sum_k beta_k zeta(t_k) + eps: a single-index part on a
/// smooth curve plus impact points on a Brownian curve.
inline SynthData synth_mfplsim(Index n, Index p, std::uint64_t seed, std::vector<int> impact = {20, 60},
                               double sigma = 0.1) {
    using namespace synth_detail;
    SynthData d = synth_impact(n, p, seed, std::move(impact), 0.0);
    d.kind = "mfplsim";
    Rng rng(seed ^ 0x5bd1e995ULL);
    d.x = FunctionalSample::equispaced(fourier_curves(rng, n, Vector::LinSpaced(p, 0, 1)), {0, 1});
    const IndexContext ctx = IndexContext::build(d.x, planted_basis());
    const Vector alpha = planted_alpha(ctx);
    const Vector u = ctx.projections(alpha);
    d.signal = d.signal.array() - 1.0;  // no intercept in this model
    d.signal += u.unaryExpr([](double v) { return link(v); });
    d.sigma = sigma;
    d.y = d.signal;
    for (Index i = 0; i < n; ++i) d.y(i) += sigma * rng.normal();
    d.theta_alpha = to_std(alpha);
    return d;
}

}  // namespace fsr
