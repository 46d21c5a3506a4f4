#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include <fsr/fsr.hpp>

namespace fs = std::filesystem;
using namespace fsr;

namespace {

const std::vector<std::string> kModels = {
    "fsim-kernel", "fsim-knn",   "fsim-kernel-iter", "fsim-knn-iter", "sfpl-kernel",   "sfpl-knn",
    "sfplsim-kernel", "sfplsim-knn", "pvs",          "pvs-kernel",    "pvs-knn",       "fassmr-kernel",
    "fassmr-knn",  "iassmr-kernel", "iassmr-knn"};

struct UsageError : Error {
    using Error::Error;
};

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

SmootherKind kind_of(const std::string& model) {
    return model.find("knn") != std::string::npos ? SmootherKind::knn : SmootherKind::kernel;
}

void write_json(const fs::path& path, const Json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

Json read_json(const std::string& path) {
    try {
        return Json::parse(read_text(path));
    } catch (const Json::parse_error& e) {
        throw DataError(path + ": " + e.what());
    }
}

Json tuning_json(const Tuning& t) {
    return t.kind == SmootherKind::kernel ? Json{{"h.opt", t.h}} : Json{{"k.opt", t.k}};
}

Json nz_json(const Vector& beta) {
    std::vector<int> idx;
    for (Index j = 0; j < beta.size(); ++j)
        if (beta(j) != 0.0) idx.push_back(static_cast<int>(j) + 1);
    return idx;
}

Json diag_json(const Diagnostics& d) { return Json{{"r.squared", d.r_squared}, {"var.res", d.var_res}, {"df", d.df}}; }

bool constant(const Vector& y) { return y.size() > 0 && (y.array() == y(0)).all(); }

// Summary fields of a fit, named after the package's output components.
Json summary_json(const FitResult& fit, const Vector& zeta_grid) {
    Json j;
    Json warnings = Json::array();
    std::visit(
        [&](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, FsimFit>) {
                j.update(tuning_json(f.tuning));
                j["theta.est"] = detail::to_json_vec(f.theta.alpha);
                j["nknot.theta"] = f.theta.basis.interior_knots();
                j["CV.opt"] = detail::num(f.cv_opt);
                j.update(diag_json(f.diag));
                if (f.iterative) j["iterations"] = f.iterations;
                if (constant(f.y)) warnings.push_back("constant response");
            } else if constexpr (std::is_same_v<T, SfplFit>) {
                j.update(tuning_json(f.tuning));
                j["lambda.opt"] = f.lambda;
                j["beta.est"] = detail::to_json_vec(f.beta);
                j["selected"] = nz_json(f.beta);
                j["vn.opt"] = f.vn;
                j["IC"] = detail::num(f.ic);
                j["Q"] = detail::num(f.q);
                if (f.theta) {
                    j["theta.est"] = detail::to_json_vec(f.theta->alpha);
                    j["nknot.theta"] = f.theta->basis.interior_knots();
                }
                j.update(diag_json(f.diag));
                if (f.config.lambda.lambda_seq == std::vector<double>{0.0}) warnings.push_back("unpenalized");
                if (!f.converged) warnings.push_back("penalized solver hit max.iter");
                if (constant(f.y)) warnings.push_back("constant response");
            } else {
                j["algorithm"] = f.algorithm;
                j["w.opt"] = f.w_opt;
                j["lambda.opt"] = f.lambda;
                j["beta.est"] = detail::to_json_vec(f.beta);
                std::vector<int> idx;
                std::vector<double> t, b;
                for (int k : f.impact) {
                    idx.push_back(k + 1);
                    t.push_back(zeta_grid.size() ? zeta_grid(k) : k + 1.0);
                    b.push_back(f.beta(k));
                }
                j["impact.points"] = idx;
                j["impact.t"] = t;
                j["n.impact"] = idx.size();
                j["IC"] = detail::num(f.ic);
                j["Q"] = detail::num(f.q);
                Json ws = Json::array();
                for (const auto& [w, s] : f.w_scores) ws.push_back({{"wn", w}, {"IC", detail::num(s)}});
                j["wn.scores"] = ws;
                if (f.model == ImpactModel::mlm) {
                    j["intercept"] = f.intercept;
                    const double df = static_cast<double>(f.fitted.size()) - static_cast<double>(f.impact.size()) - 1.0;
                    j.update(diag_json(diagnostics_from(f.residuals, f.fitted + f.residuals, std::max(df, 1.0))));
                } else {
                    j.update(tuning_json(f.tuning));
                    if (f.theta) j["theta.est"] = detail::to_json_vec(f.theta->alpha);
                    j.update(diag_json(f.final_plm().diag));
                }
                if (f.two_step) {
                    j["train.1"] = detail::one_based(f.train1);
                    j["train.2"] = detail::one_based(f.train2);
                    j["step1.selected"] = detail::one_based(f.step1_selected);
                    j["n.candidates"] = f.candidates.size();
                }
                if (f.empty_step1) warnings.push_back("no representative selected in step 1");
                if (constant(f.y)) warnings.push_back("constant response");
            }
            j["fitted.values"] = detail::to_json_vec(f.fitted);
            j["residuals"] = detail::to_json_vec(f.residuals);
        },
        fit);
    j["warnings"] = warnings;
    return j;
}

struct FitArgs {
    std::string model, x, z, y, config, out;
    std::vector<std::string> set;
};

FitResult run_fit(const FitArgs& a, const Settings& s, const std::optional<FunctionalSample>& x, const Matrix& z,
                  const Vector& y) {
    const std::string& m = a.model;
    const SmootherKind kind = kind_of(m);
    auto need_x = [&]() -> const FunctionalSample& {
        if (!x) throw UsageError("model " + m + " needs --x");
        return *x;
    };
    auto need_z = [&]() -> const Matrix& {
        if (!a.z.size()) throw UsageError("model " + m + " needs --z");
        return z;
    };
    if (s.nknot_theta.size() > 1 && m.rfind("fsim", 0) != 0)
        throw UsageError("a list of nknot.theta values is only supported by the fsim models");
    if (m.rfind("fsim", 0) == 0) {
        const bool iter = ends_with(m, "-iter");
        if (s.nknot_theta.size() > 1)
            return fsim_select_nknot_theta(need_x(), y, kind, s.fsim, s.nknot_theta, iter).second;
        return fsim_fit(need_x(), y, kind, s.fsim, iter);
    }
    if (m.rfind("sfplsim", 0) == 0) return sfplsim_fit(need_x(), need_z(), y, kind, s.plm);
    if (m.rfind("sfpl", 0) == 0) return sfplm_fit(need_x(), need_z(), y, kind, s.plm);
    if (m == "pvs") return pvs_fit(need_z(), y, s.impact());
    if (m.rfind("pvs-", 0) == 0) return pvs_functional_fit(need_x(), need_z(), y, kind, s.impact());
    if (m.rfind("fassmr", 0) == 0) return fassmr_fit(need_x(), need_z(), y, kind, s.impact());
    return iassmr_fit(need_x(), need_z(), y, kind, s.impact());
}

Settings load_settings(const std::string& config, const std::vector<std::string>& set) {
    Settings s = config.empty() ? Settings{} : parse_settings(read_text(config), config);
    for (const auto& kv : set) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
        apply_setting(s, detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)));
    }
    return s;
}

bool is_impact(const std::string& m) {
    return m.rfind("pvs", 0) == 0 || m.rfind("fassmr", 0) == 0 || m.rfind("iassmr", 0) == 0;
}

int cmd_fit(const FitArgs& a) {
    const Settings s = load_settings(a.config, a.set);
    std::optional<FunctionalSample> x;
    Matrix z;
    if (!a.x.empty()) x = load_curves_csv(a.x, s.range_grid);
    Vector zeta_grid;
    if (!a.z.empty()) {
        const auto d = read_csv(a.z);
        z = d.values;
        if (is_impact(a.model)) zeta_grid = curves_from_csv(d, std::nullopt, a.z).grid;
    }
    const Vector y = load_response_csv(a.y);
    const FitResult fit = run_fit(a, s, x, z, y);
    fs::create_directories(a.out);
    const Json echo = settings_echo(s);
    Json report{{"model", a.model},
                {"type", fit_kind(fit)},
                {"call", {{"x", a.x}, {"z", a.z}, {"y", a.y}, {"settings", echo}}},
                {"n", y.size()}};
    report.update(summary_json(fit, zeta_grid));
    write_json(fs::path(a.out) / "report.json", report);
    Json art = artifact_json(a.model, fit, echo);
    art["zeta.grid"] = detail::to_json_vec(zeta_grid);
    write_json(fs::path(a.out) / "model.json", art);
    std::cout << "fit " << a.model << " on n=" << y.size() << " -> " << (fs::path(a.out) / "report.json").string()
              << "\n";
    return 0;
}

struct PredictArgs {
    std::string artifact, x, z, y_test, out;
    int option = 1;
};

int cmd_predict(const PredictArgs& a) {
    const Json art = read_json(a.artifact);
    const auto [model, fit] = fit_from_artifact(art);
    std::optional<FunctionalSample> x;
    if (!a.x.empty()) {
        // new curves must share the training grid and domain
        const FunctionalSample* train = std::visit(
            [](const auto& f) -> const FunctionalSample* {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, ImpactFit>) return f.x ? &*f.x : nullptr;
                else return &f.x;
            },
            fit);
        const auto d = read_csv(a.x);
        if (train && d.values.cols() == train->points())
            x = FunctionalSample(d.values, train->grid, train->domain);
        else
            x = curves_from_csv(d, std::nullopt, a.x);
    }
    Matrix z;
    if (!a.z.empty()) z = load_matrix_csv(a.z);
    std::optional<Vector> yt;
    if (!a.y_test.empty()) yt = load_response_csv(a.y_test);
    const auto reports = predict_any(fit, x, z, yt, a.option);
    fs::create_directories(a.out);
    Matrix pred(reports.front().predictions.size(), static_cast<Index>(reports.size()));
    std::vector<std::string> header;
    Json out{{"model", model}, {"artifact", a.artifact}, {"reports", Json::array()}};
    for (std::size_t r = 0; r < reports.size(); ++r) {
        pred.col(static_cast<Index>(r)) = reports[r].predictions;
        header.push_back("option." + reports[r].option);
        out["reports"].push_back(report_json(reports[r]));
    }
    write_csv((fs::path(a.out) / "predictions.csv").string(), header, pred);
    write_json(fs::path(a.out) / "predict.json", out);
    for (const auto& r : reports) {
        std::cout << "option " << r.option << ": " << r.predictions.size() << " predictions";
        if (r.msep) std::cout << ", MSEP " << *r.msep;
        if (!r.failed.empty()) std::cout << ", " << r.failed.size() << " failed";
        std::cout << "\n";
    }
    return 0;
}

Matrix theta_curve(const IndexCoefficients& theta) {
    const auto& d = theta.basis.domain();
    Matrix m(201, 2);
    for (int i = 0; i < 201; ++i) {
        const double t = i == 200 ? d.hi : d.lo + d.length() * i / 200.0;
        m(i, 0) = t;
        m(i, 1) = theta(t);
    }
    return m;
}

int cmd_plotdata(const std::string& artifact, const std::string& outdir) {
    const Json art = read_json(artifact);
    const auto [model, fit] = fit_from_artifact(art);
    fs::create_directories(outdir);
    const fs::path out(outdir);
    const Vector& fitted = fitted_values(fit);
    const Vector resid = std::visit([](const auto& f) -> Vector { return f.residuals; }, fit);
    Matrix fo(fitted.size(), 2);
    fo.col(0) = fitted + resid;
    fo.col(1) = fitted;
    write_csv((out / "fitted_vs_observed.csv").string(), {"y", "fitted"}, fo);
    Matrix rs(fitted.size(), 2);
    rs.col(0) = fitted;
    rs.col(1) = resid;
    write_csv((out / "residuals.csv").string(), {"fitted", "residual"}, rs);
    std::vector<std::string> files{"fitted_vs_observed.csv", "residuals.csv"};
    const std::optional<IndexCoefficients> theta = std::visit(
        [](const auto& f) -> std::optional<IndexCoefficients> { return f.theta; },
        fit);
    if (theta) {
        write_csv((out / "theta_curve.csv").string(), {"t", "theta"}, theta_curve(*theta));
        files.push_back("theta_curve.csv");
    }
    if (const auto* f = std::get_if<ImpactFit>(&fit)) {
        const Vector grid = art.contains("zeta.grid") ? detail::vec_from_json(art.at("zeta.grid")) : Vector();
        Matrix ip(static_cast<Index>(f->impact.size()), 3);
        for (std::size_t r = 0; r < f->impact.size(); ++r) {
            const int k = f->impact[r];
            ip(static_cast<Index>(r), 0) = k + 1;
            ip(static_cast<Index>(r), 1) = grid.size() ? grid(k) : k + 1.0;
            ip(static_cast<Index>(r), 2) = f->beta(k);
        }
        write_csv((out / "impact_points.csv").string(), {"index", "t", "beta"}, ip);
        files.push_back("impact_points.csv");
    }
    for (const auto& f : files) std::cout << (out / f).string() << "\n";
    return 0;
}

struct SynthArgs {
    std::string kind = "fsim", out;
    int n = 100, p = 100;
    std::uint64_t seed = 1;
    std::optional<double> sigma;
    std::vector<int> impact{20, 60};
};

int cmd_synth(const SynthArgs& a) {
    if (a.n < 2 || a.p < 2) throw UsageError("synth needs n >= 2 and p >= 2");
    SynthData d;
    if (a.kind == "fsim") d = synth_fsim(a.n, a.p, a.seed, a.sigma.value_or(0.1));
    else if (a.kind == "sfplm") d = synth_sfplm(a.n, a.p, a.seed, a.sigma.value_or(0.25));
    else if (a.kind == "sfplsim") d = synth_sfplsim(a.n, a.p, a.seed, a.sigma.value_or(0.1));
    else if (a.kind == "impact") d = synth_impact(a.n, a.p, a.seed, a.impact, a.sigma.value_or(0.1));
    else if (a.kind == "mfplsim") d = synth_mfplsim(a.n, a.p, a.seed, a.impact, a.sigma.value_or(0.1));
    else throw UsageError("unknown synth kind '" + a.kind + "'");
    fs::create_directories(a.out);
    const fs::path out(a.out);
    std::vector<std::string> grid_header;
    for (Index j = 0; j < d.x.points(); ++j) grid_header.push_back("t" + detail::fmt(d.x.grid(j)));
    write_csv((out / "x.csv").string(), grid_header, d.x.values);
    if (d.z.cols() > 0) {
        std::vector<std::string> zh;
        for (Index j = 0; j < d.z.cols(); ++j) zh.push_back("z" + std::to_string(j + 1));
        write_csv((out / "z.csv").string(), zh, d.z);
    }
    write_csv((out / "y.csv").string(), {"y"}, d.y);
    Json truth{{"kind", d.kind}, {"n", a.n}, {"p", a.p}, {"seed", a.seed}, {"sigma", d.sigma},
               {"beta", d.beta}, {"impact", d.impact}, {"signal", detail::to_json_vec(d.signal)}};
    if (!d.theta_alpha.empty())
        truth["theta"] = {{"coefficients", d.theta_alpha}, {"order.Bspline", 3}, {"nknot.theta", 2}};
    write_json(out / "truth.json", truth);
    std::cout << "synth " << a.kind << " n=" << a.n << " p=" << a.p << " seed=" << a.seed << " -> " << a.out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scalar-on-function semiparametric regression"};
    app.require_subcommand(1);
    int nthreads = default_threads();
    app.add_option("--threads", nthreads, "worker threads (default: cores - 1)")->check(CLI::PositiveNumber);

    FitArgs fa;
    auto* fit = app.add_subcommand("fit", "fit a model and write report.json and model.json");
    fit->add_option("--model", fa.model, "model kind")->required()->check(CLI::IsMember(kModels));
    fit->add_option("--x", fa.x, "curves CSV (rows = observations)");
    fit->add_option("--z", fa.z, "scalar covariates, or the discretized curve for impact models");
    fit->add_option("--y", fa.y, "response CSV (one column)")->required();
    fit->add_option("--config", fa.config, "key = value configuration file");
    fit->add_option("--set", fa.set, "extra key=value settings (repeatable)");
    fit->add_option("--out", fa.out, "output directory")->required();

    PredictArgs pa;
    auto* pred = app.add_subcommand("predict", "predict new data from a model file");
    pred->add_option("--artifact", pa.artifact, "model.json from fit")->required();
    pred->add_option("--x", pa.x, "new curves CSV");
    pred->add_option("--z", pa.z, "new scalar covariates / discretized curve");
    pred->add_option("--y-test", pa.y_test, "observed responses, enables MSEP");
    pred->add_option("--option", pa.option, "prediction option 1-4")->check(CLI::Range(1, 4));
    pred->add_option("--out", pa.out, "output directory")->required();

    std::string plot_artifact, plot_out;
    auto* plot = app.add_subcommand("plotdata", "write CSV data behind the diagnostic plots");
    plot->add_option("--artifact", plot_artifact, "model.json from fit")->required();
    plot->add_option("--out", plot_out, "output directory")->required();

    SynthArgs sa;
    auto* syn = app.add_subcommand("synth", "generate a synthetic data set with known truth");
    syn->add_option("--kind", sa.kind, "fsim, sfplm, sfplsim, impact or mfplsim")
        ->check(CLI::IsMember({"fsim", "sfplm", "sfplsim", "impact", "mfplsim"}));
    syn->add_option("--n", sa.n, "sample size");
    syn->add_option("--p", sa.p, "grid points");
    syn->add_option("--seed", sa.seed, "generator seed");
    syn->add_option("--sigma", sa.sigma, "noise level (fsim: noise-to-signal ratio)");
    syn->add_option("--impact", sa.impact, "1-based impact indices (impact kinds)");
    syn->add_option("--out", sa.out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }
    set_threads(nthreads);
    try {
        if (*fit) return cmd_fit(fa);
        if (*pred) return cmd_predict(pa);
        if (*plot) return cmd_plotdata(plot_artifact, plot_out);
        return cmd_synth(sa);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const InvalidArgument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    }
}
