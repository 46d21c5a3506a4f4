#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "core.hpp"

namespace fsr {

struct NelderMeadOptions {
    double tol = 1e-8;       // simplex diameter (max-norm distance to the best vertex)
    int max_evals = 2000;
    double rel_step = 0.05;  // initial simplex: x0_i * (1 + rel_step)
    double zero_step = 0.00025;
};

struct NelderMeadResult {
    Vector x;
    double f = kInf;
    int evals = 0;
    bool converged = false;
};

/// Downhill simplex with reflection 1, expansion 2, contractions 0.5 and
/// shrink 0.5. Non-finite objective values rank as worst.
inline NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& objective, const Vector& x0,
                                    const NelderMeadOptions& opts = {}) {
    const Index d = x0.size();
    if (d < 1) throw InvalidArgument("Nelder-Mead needs at least one variable");
    NelderMeadResult res;
    auto f = [&](const Vector& x) {
        ++res.evals;
        const double v = objective(x);
        return std::isfinite(v) ? v : kInf;
    };

    std::vector<Vector> simplex(static_cast<std::size_t>(d + 1), x0);
    std::vector<double> fv(static_cast<std::size_t>(d + 1));
    fv[0] = f(x0);
    if (!std::isfinite(fv[0])) throw NumericError("Nelder-Mead: objective is not finite at the starting point");
    for (Index i = 0; i < d; ++i) {
        Vector& v = simplex[static_cast<std::size_t>(i + 1)];
        v(i) = x0(i) != 0.0 ? x0(i) * (1.0 + opts.rel_step) : opts.zero_step;
        fv[static_cast<std::size_t>(i + 1)] = f(v);
    }

    std::vector<std::size_t> order(simplex.size());
    auto sort_simplex = [&] {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        std::vector<Vector> s2;
        std::vector<double> f2;
        for (auto i : order) s2.push_back(simplex[i]), f2.push_back(fv[i]);
        simplex.swap(s2);
        fv.swap(f2);
    };

    const std::size_t n = static_cast<std::size_t>(d);
    sort_simplex();
    while (res.evals < opts.max_evals) {
        double diam = 0.0;
        for (std::size_t i = 1; i <= n; ++i) diam = std::max(diam, (simplex[i] - simplex[0]).cwiseAbs().maxCoeff());
        if (diam < opts.tol) {
            res.converged = true;
            break;
        }
        Vector c = Vector::Zero(d);
        for (std::size_t i = 0; i < n; ++i) c += simplex[i];
        c /= static_cast<double>(d);

        const Vector xr = c + (c - simplex[n]);
        const double fr = f(xr);
        bool shrink = false;
        if (fr < fv[0]) {
            const Vector xe = c + 2.0 * (xr - c);
            const double fe = f(xe);
            if (fe < fr) {
                simplex[n] = xe;
                fv[n] = fe;
            } else {
                simplex[n] = xr;
                fv[n] = fr;
            }
        } else if (fr < fv[n - 1]) {
            simplex[n] = xr;
            fv[n] = fr;
        } else if (fr < fv[n]) {
            const Vector xc = c + 0.5 * (xr - c);
            const double fc = f(xc);
            if (fc <= fr) {
                simplex[n] = xc;
                fv[n] = fc;
            } else {
                shrink = true;
            }
        } else {
            const Vector xcc = c + 0.5 * (simplex[n] - c);
            const double fcc = f(xcc);
            if (fcc < fv[n]) {
                simplex[n] = xcc;
                fv[n] = fcc;
            } else {
                shrink = true;
            }
        }
        if (shrink) {
            for (std::size_t i = 1; i <= n; ++i) {
                simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0]);
                fv[i] = f(simplex[i]);
            }
        }
        sort_simplex();
    }
    res.x = simplex[0];
    res.f = fv[0];
    return res;
}

}  // namespace fsr
