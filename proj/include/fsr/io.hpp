#pragma once

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

#include "predict.hpp"

namespace fsr {

using Json = nlohmann::json;

// ---------------------------------------------------------------- CSV

struct CsvData {
    std::vector<std::string> header;  // empty when the first row is numeric
    Matrix values;
};

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, sep)) out.push_back(trim(cell));
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

inline std::string unquote(std::string s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
}

inline bool parse_double(const std::string& s, double& v) {
    if (s.empty()) return false;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    if (*b == '+') ++b;
    const auto r = std::from_chars(b, e, v);
    return r.ec == std::errc() && r.ptr == e;
}

}  // namespace detail

/// Comma-separated numbers, one observation per row, optional header row.
inline CsvData parse_csv(const std::string& text, const std::string& source = "input") {
    std::istringstream in(text);
    std::string line;
    std::vector<std::vector<double>> rows;
    CsvData out;
    std::size_t width = 0;
    int lineno = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::trim(line).empty()) continue;
        auto cells = detail::split(line, ',');
        std::vector<double> vals(cells.size());
        bool numeric = true;
        for (std::size_t c = 0; c < cells.size(); ++c) numeric &= detail::parse_double(cells[c], vals[c]);
        if (first && !numeric) {
            for (auto& c : cells) out.header.push_back(detail::unquote(c));
            width = cells.size();
            first = false;
            continue;
        }
        if (width == 0) width = cells.size();
        if (cells.size() != width)
            throw DataError(source + ": line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                            " fields, expected " + std::to_string(width));
        if (!numeric)
            for (std::size_t c = 0; c < cells.size(); ++c)
                if (!detail::parse_double(cells[c], vals[c]))
                    throw DataError(source + ": line " + std::to_string(lineno) + ", column " +
                                    std::to_string(c + 1) + ": '" + cells[c] + "' is not a number");
        rows.push_back(std::move(vals));
        first = false;
    }
    if (rows.empty()) throw DataError(source + ": no data rows");
    out.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < width; ++j) out.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    return out;
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline CsvData read_csv(const std::string& path) { return parse_csv(read_text(path), path); }

inline Matrix load_matrix_csv(const std::string& path) { return read_csv(path).values; }

inline Vector load_response_csv(const std::string& path) {
    const auto d = read_csv(path);
    if (d.values.cols() != 1)
        throw DataError(path + ": a response file needs one column, found " + std::to_string(d.values.cols()));
    return d.values.col(0);
}

/// Curves as rows. Grid values come from a numeric header (cells such as
/// "850" or "t850"); otherwise p equispaced points over `range` or [1, p].
inline FunctionalSample curves_from_csv(const CsvData& d, const std::optional<Interval>& range,
                                        const std::string& source = "curves") {
    const Index p = d.values.cols();
    if (p < 2) throw DataError(source + ": curves need at least 2 columns");
    Vector grid(p);
    bool from_header = d.header.size() == static_cast<std::size_t>(p);
    for (Index j = 0; from_header && j < p; ++j) {
        std::string h = d.header[static_cast<std::size_t>(j)];
        const auto pos = h.find_first_of("+-.0123456789");
        double v = 0.0;
        from_header = pos != std::string::npos && detail::parse_double(h.substr(pos), v);
        if (from_header) grid(j) = v;
        if (j > 0 && from_header && !(grid(j) > grid(j - 1))) from_header = false;
    }
    if (from_header) {
        const Interval dom = range.value_or(Interval{grid(0), grid(p - 1)});
        if (grid(0) < dom.lo - 1e-12 * dom.length() || grid(p - 1) > dom.hi + 1e-12 * dom.length())
            throw DataError(source + ": header grid lies outside range.grid");
        return FunctionalSample(d.values, grid, dom);
    }
    return FunctionalSample::equispaced(d.values, range.value_or(Interval{1.0, static_cast<double>(p)}));
}

inline FunctionalSample load_curves_csv(const std::string& path, const std::optional<Interval>& range) {
    return curves_from_csv(read_csv(path), range, path);
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header, const Matrix& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out.precision(17);
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    if (!header.empty()) out << "\n";
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) out << ",";
            if (std::isnan(m(i, j))) out << "NA";
            else out << m(i, j);
        }
        out << "\n";
    }
}

// ---------------------------------------------------------------- settings

/// Every tunable, keyed by the package's argument names.
struct Settings {
    FsimConfig fsim;
    PlmConfig plm;
    std::vector<int> wn{10, 15, 20};
    std::vector<int> train1, train2;  // 0-based
    std::optional<Interval> range_grid;
    std::vector<int> nknot_theta{3};  // several values: selected by CV (single-index fits)
    std::string kernel = "quad";

    [[nodiscard]] ImpactConfig impact() const {
        ImpactConfig c;
        c.plm = plm;
        c.wn = wn;
        c.train1 = train1;
        c.train2 = train2;
        return c;
    }
};

namespace detail {

inline std::vector<double> parse_list(const std::string& raw, const std::string& key) {
    std::string s = trim(raw);
    if (s.size() >= 3 && s.rfind("c(", 0) == 0 && s.back() == ')') s = s.substr(2, s.size() - 3);
    for (char& ch : s)
        if (ch == ',' || ch == ';' || ch == '(' || ch == ')' || ch == '[' || ch == ']') ch = ' ';
    std::istringstream in(s);
    std::string tok;
    std::vector<double> out;
    while (in >> tok) {
        const auto colon = tok.find(':');
        double a = 0, b = 0;
        if (colon != std::string::npos && parse_double(tok.substr(0, colon), a) &&
            parse_double(tok.substr(colon + 1), b)) {
            if (a != std::floor(a) || b != std::floor(b) || b < a)
                throw InvalidArgument(key + ": bad range '" + tok + "'");
            for (double v = a; v <= b; v += 1.0) out.push_back(v);
        } else if (parse_double(tok, a)) {
            out.push_back(a);
        } else {
            throw InvalidArgument(key + ": '" + tok + "' is not a number");
        }
    }
    return out;
}

inline double parse_scalar(const std::string& raw, const std::string& key) {
    double v = 0;
    if (!parse_double(trim(raw), v)) throw InvalidArgument(key + ": '" + raw + "' is not a number");
    return v;
}

inline int parse_int(const std::string& raw, const std::string& key) {
    const double v = parse_scalar(raw, key);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw InvalidArgument(key + ": '" + raw + "' is not an integer");
    return static_cast<int>(v);
}

inline std::vector<int> parse_int_list(const std::string& raw, const std::string& key) {
    std::vector<int> out;
    for (double v : parse_list(raw, key)) {
        if (v != std::floor(v)) throw InvalidArgument(key + ": " + std::to_string(v) + " is not an integer");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

inline bool parse_bool(const std::string& raw, const std::string& key) {
    const std::string s = trim(raw);
    if (s == "true" || s == "TRUE" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "FALSE" || s == "0" || s == "no") return false;
    throw InvalidArgument(key + ": '" + raw + "' is not a boolean");
}

// Shortest text that reads back to the same double.
inline std::string fmt(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, r.ptr};
}

template <class T>
std::string fmt_list(const std::vector<T>& v, int offset = 0) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(static_cast<double>(v[i]) + offset);
    return s;
}

struct SettingKey {
    std::string name;
    std::function<void(Settings&, const std::string&)> set;
    std::function<std::string(const Settings&)> get;
};

inline const std::vector<SettingKey>& setting_keys() {
    static const std::vector<SettingKey> keys = [] {
        std::vector<SettingKey> k;
        auto add = [&](std::string name, std::function<void(Settings&, const std::string&)> set,
                       std::function<std::string(const Settings&)> get) {
            k.push_back({std::move(name), std::move(set), std::move(get)});
        };
        // tuning grids, shared by every smoother
        auto grids = [](Settings& s, auto&& f) {
            f(s.fsim.grid);
            f(s.plm.grid);
        };
        add("min.q.h", [=](Settings& s, const std::string& v) { const double x = parse_scalar(v, "min.q.h"); grids(s, [&](auto& g) { g.min_q_h = x; }); },
            [](const Settings& s) { return fmt(s.plm.grid.min_q_h); });
        add("max.q.h", [=](Settings& s, const std::string& v) { const double x = parse_scalar(v, "max.q.h"); grids(s, [&](auto& g) { g.max_q_h = x; }); },
            [](const Settings& s) { return fmt(s.plm.grid.max_q_h); });
        add("num.h", [=](Settings& s, const std::string& v) { const int x = parse_int(v, "num.h"); grids(s, [&](auto& g) { g.num_h = x; }); },
            [](const Settings& s) { return fmt(s.plm.grid.num_h); });
        add("h.seq", [=](Settings& s, const std::string& v) { const auto x = parse_list(v, "h.seq"); grids(s, [&](auto& g) { g.h_seq = x; }); },
            [](const Settings& s) { return fmt_list(s.plm.grid.h_seq); });
        add("min.knn", [=](Settings& s, const std::string& v) { const int x = parse_int(v, "min.knn"); grids(s, [&](auto& g) { g.min_knn = x; }); },
            [](const Settings& s) { return fmt(s.plm.grid.min_knn); });
        add("max.knn", [=](Settings& s, const std::string& v) { const int x = parse_int(v, "max.knn"); grids(s, [&](auto& g) { g.max_knn = x; }); },
            [](const Settings& s) { return fmt(s.plm.grid.max_knn); });
        add("step", [=](Settings& s, const std::string& v) { const int x = parse_int(v, "step"); grids(s, [&](auto& g) { g.step = x; }); },
            [](const Settings& s) { return fmt(s.plm.grid.step); });
        add("knearest", [=](Settings& s, const std::string& v) { const auto x = parse_int_list(v, "knearest"); grids(s, [&](auto& g) { g.knearest = x; }); },
            [](const Settings& s) { return fmt_list(s.plm.grid.knearest); });
        add("knn.eps", [=](Settings& s, const std::string& v) { const double x = parse_scalar(v, "knn.eps"); grids(s, [&](auto& g) { g.knn_eps = x; }); },
            [](const Settings& s) { return fmt(s.plm.grid.knn_eps); });
        add("kind.of.kernel",
            [](Settings& s, const std::string& v) {
                if (trim(v) != "quad") throw InvalidArgument("kind.of.kernel: only 'quad' is available");
                s.kernel = "quad";
            },
            [](const Settings& s) { return s.kernel; });
        // B-spline expansions
        auto bases = [](Settings& s, auto&& f) {
            f(s.fsim.basis);
            f(s.plm.basis);
        };
        add("order.Bspline", [=](Settings& s, const std::string& v) { const int x = parse_int(v, "order.Bspline"); bases(s, [&](auto& b) { b.order = x; }); },
            [](const Settings& s) { return fmt(s.plm.basis.order); });
        add("nknot.theta",
            [=](Settings& s, const std::string& v) {
                const auto x = parse_int_list(v, "nknot.theta");
                if (x.empty()) throw InvalidArgument("nknot.theta: empty list");
                s.nknot_theta = x;
                bases(s, [&](auto& b) { b.nknot_theta = x.front(); });
            },
            [](const Settings& s) { return fmt_list(s.nknot_theta); });
        add("nknot", [=](Settings& s, const std::string& v) { const int x = parse_int(v, "nknot"); bases(s, [&](auto& b) { b.nknot = x; }); },
            [](const Settings& s) { return fmt(s.plm.basis.nknot); });
        add("seed.coeff", [=](Settings& s, const std::string& v) { const auto x = parse_list(v, "seed.coeff"); bases(s, [&](auto& b) { b.seed_coeff = x; }); },
            [](const Settings& s) { return fmt_list(s.plm.basis.seed_coeff); });
        add("t0",
            [=](Settings& s, const std::string& v) {
                std::optional<double> x;
                if (!trim(v).empty() && trim(v) != "NULL") x = parse_scalar(v, "t0");
                bases(s, [&](auto& b) { b.t0 = x; });
            },
            [](const Settings& s) { return s.plm.basis.t0 ? fmt(*s.plm.basis.t0) : std::string(); });
        add("range.grid",
            [](Settings& s, const std::string& v) {
                const auto x = parse_list(v, "range.grid");
                if (x.empty()) {
                    s.range_grid.reset();
                    return;
                }
                if (x.size() != 2 || !(x[0] < x[1])) throw InvalidArgument("range.grid needs two increasing values");
                s.range_grid = Interval{x[0], x[1]};
            },
            [](const Settings& s) {
                return s.range_grid ? fmt(s.range_grid->lo) + "," + fmt(s.range_grid->hi) : std::string();
            });
        // iterative single-index procedure
        add("gamma", [](Settings& s, const std::string& v) { s.fsim.gamma = parse_list(v, "gamma"); },
            [](const Settings& s) { return fmt_list(s.fsim.gamma); });
        add("threshold", [](Settings& s, const std::string& v) { s.fsim.threshold = parse_scalar(v, "threshold"); },
            [](const Settings& s) { return fmt(s.fsim.threshold); });
        add("max.it", [](Settings& s, const std::string& v) { s.fsim.max_outer = parse_int(v, "max.it"); },
            [](const Settings& s) { return fmt(s.fsim.max_outer); });
        // semimetric of the partial linear model
        add("semimetric",
            [](Settings& s, const std::string& v) {
                s.plm.semimetric = semimetric_from_string(trim(v));
                if (s.plm.semimetric == SemimetricKind::projection)
                    throw InvalidArgument("semimetric: expected deriv or pca");
            },
            [](const Settings& s) { return std::string(to_string(s.plm.semimetric)); });
        add("q", [](Settings& s, const std::string& v) { s.plm.q = parse_int(v, "q"); },
            [](const Settings& s) { return fmt(s.plm.semimetric_q()); });
        // PeLS
        add("penalty", [](Settings& s, const std::string& v) { s.plm.penalty.kind = penalty_from_string(trim(v)); },
            [](const Settings& s) { return std::string(to_string(s.plm.penalty.kind)); });
        add("a", [](Settings& s, const std::string& v) { s.plm.penalty.a = parse_scalar(v, "a"); },
            [](const Settings& s) { return fmt(s.plm.penalty.a); });
        add("scale.lambda",
            [](Settings& s, const std::string& v) {
                const std::string t = trim(v);
                if (t != "ols" && t != "none") throw InvalidArgument("scale.lambda: expected ols or none");
                s.plm.penalty.ols_scale = t == "ols";
            },
            [](const Settings& s) { return std::string(s.plm.penalty.ols_scale ? "ols" : "none"); });
        add("lambda.min",
            [](Settings& s, const std::string& v) {
                if (trim(v).empty() || trim(v) == "NULL") s.plm.lambda.lambda_min.reset();
                else s.plm.lambda.lambda_min = parse_scalar(v, "lambda.min");
            },
            [](const Settings& s) { return s.plm.lambda.lambda_min ? fmt(*s.plm.lambda.lambda_min) : std::string(); });
        add("lambda.min.h", [](Settings& s, const std::string& v) { s.plm.lambda.lambda_min_h = parse_scalar(v, "lambda.min.h"); },
            [](const Settings& s) { return fmt(s.plm.lambda.lambda_min_h); });
        add("lambda.min.l", [](Settings& s, const std::string& v) { s.plm.lambda.lambda_min_l = parse_scalar(v, "lambda.min.l"); },
            [](const Settings& s) { return fmt(s.plm.lambda.lambda_min_l); });
        add("factor.pn", [](Settings& s, const std::string& v) { s.plm.lambda.factor_pn = parse_scalar(v, "factor.pn"); },
            [](const Settings& s) { return fmt(s.plm.lambda.factor_pn); });
        add("nlambda", [](Settings& s, const std::string& v) { s.plm.lambda.nlambda = parse_int(v, "nlambda"); },
            [](const Settings& s) { return fmt(s.plm.lambda.nlambda); });
        add("lambda.seq", [](Settings& s, const std::string& v) { s.plm.lambda.lambda_seq = parse_list(v, "lambda.seq"); },
            [](const Settings& s) { return fmt_list(s.plm.lambda.lambda_seq); });
        add("vn", [](Settings& s, const std::string& v) { s.plm.vn = parse_int_list(v, "vn"); },
            [](const Settings& s) { return fmt_list(s.plm.vn); });
        add("criterion", [](Settings& s, const std::string& v) { s.plm.criterion.kind = criterion_from_string(trim(v)); },
            [](const Settings& s) { return std::string(to_string(s.plm.criterion.kind)); });
        add("nfolds", [](Settings& s, const std::string& v) { s.plm.criterion.nfolds = parse_int(v, "nfolds"); },
            [](const Settings& s) { return fmt(s.plm.criterion.nfolds); });
        add("seed",
            [](Settings& s, const std::string& v) {
                const double x = parse_scalar(v, "seed");
                if (x < 0 || x != std::floor(x)) throw InvalidArgument("seed: expected a non-negative integer");
                s.plm.criterion.seed = static_cast<unsigned long long>(x);
            },
            [](const Settings& s) { return std::to_string(s.plm.criterion.seed); });
        add("max.iter", [](Settings& s, const std::string& v) { s.plm.pels.max_iter = parse_int(v, "max.iter"); },
            [](const Settings& s) { return fmt(s.plm.pels.max_iter); });
        add("tol", [](Settings& s, const std::string& v) { s.plm.pels.tol = parse_scalar(v, "tol"); },
            [](const Settings& s) { return fmt(s.plm.pels.tol); });
        // impact points
        add("wn", [](Settings& s, const std::string& v) { s.wn = parse_int_list(v, "wn"); },
            [](const Settings& s) { return fmt_list(s.wn); });
        auto train = [](std::vector<int> Settings::*member, const char* name) {
            return std::pair{
                std::function<void(Settings&, const std::string&)>([=](Settings& s, const std::string& v) {
                    std::vector<int> idx;
                    for (int i : parse_int_list(v, name)) {
                        if (i < 1) throw InvalidArgument(std::string(name) + ": indices are 1-based");
                        idx.push_back(i - 1);
                    }
                    s.*member = idx;
                }),
                std::function<std::string(const Settings&)>(
                    [=](const Settings& s) { return fmt_list(s.*member, 1); })};
        };
        auto t1 = train(&Settings::train1, "train.1");
        add("train.1", t1.first, t1.second);
        auto t2 = train(&Settings::train2, "train.2");
        add("train.2", t2.first, t2.second);
        return k;
    }();
    return keys;
}

}  // namespace detail

inline void apply_setting(Settings& s, const std::string& key, const std::string& value) {
    for (const auto& k : detail::setting_keys())
        if (k.name == key) {
            k.set(s, value);
            return;
        }
    throw InvalidArgument("unknown configuration key '" + key + "'");
}

/// Flat `key = value` lines; '#' starts a comment.
inline Settings parse_settings(const std::string& text, const std::string& source = "config") {
    Settings s;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (detail::trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument(source + ": line " + std::to_string(lineno) + " is not 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        try {
            apply_setting(s, key, detail::unquote(detail::trim(line.substr(eq + 1))));
        } catch (const InvalidArgument& e) {
            throw InvalidArgument(source + ": line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return s;
}

/// Every key with its resolved value; feeding this back reproduces the settings.
inline Json settings_echo(const Settings& s) {
    Json j = Json::object();
    for (const auto& k : detail::setting_keys()) j[k.name] = k.get(s);
    return j;
}

inline Settings settings_from_echo(const Json& j) {
    Settings s;
    for (const auto& [key, value] : j.items()) apply_setting(s, key, value.get<std::string>());
    return s;
}

// ---------------------------------------------------------------- JSON

namespace detail {

inline Json to_json_vec(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

inline Vector vec_from_json(const Json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

inline Json to_json_mat(const Matrix& m) {
    Json rows = Json::array();
    for (Index i = 0; i < m.rows(); ++i) rows.push_back(to_json_vec(m.row(i).transpose()));
    return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

inline Matrix mat_from_json(const Json& j) {
    Matrix m(j.at("rows").get<Index>(), j.at("cols").get<Index>());
    const auto& d = j.at("data");
    for (Index i = 0; i < m.rows(); ++i) m.row(i) = vec_from_json(d.at(static_cast<std::size_t>(i))).transpose();
    return m;
}

// NaN and infinities are not JSON numbers.
inline Json num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "NaN";
    return v > 0 ? "Inf" : "-Inf";
}

inline double num_from(const Json& j) {
    if (j.is_number()) return j.get<double>();
    const auto s = j.get<std::string>();
    if (s == "Inf") return kInf;
    if (s == "-Inf") return -kInf;
    return std::numeric_limits<double>::quiet_NaN();
}

inline Json to_json_tuning(const Tuning& t) {
    return t.kind == SmootherKind::kernel ? Json{{"h", t.h}} : Json{{"k", t.k}};
}

inline Tuning tuning_from_json(const Json& j) {
    return j.contains("h") ? Tuning::bandwidth(j.at("h").get<double>()) : Tuning::neighbours(j.at("k").get<int>());
}

inline Json to_json_basis(const BSplineBasis& b) {
    return Json{{"order", b.order()}, {"nknot", b.interior_knots()}, {"range", {b.domain().lo, b.domain().hi}}};
}

inline BSplineBasis basis_from_json(const Json& j) {
    return BSplineBasis(j.at("order").get<int>(), j.at("nknot").get<int>(),
                        Interval{j.at("range")[0].get<double>(), j.at("range")[1].get<double>()});
}

inline Json to_json_theta(const IndexCoefficients& t) {
    return Json{{"coefficients", to_json_vec(t.alpha)}, {"basis", to_json_basis(t.basis)}};
}

inline IndexCoefficients theta_from_json(const Json& j) {
    return IndexCoefficients{vec_from_json(j.at("coefficients")), basis_from_json(j.at("basis"))};
}

inline Json to_json_sample(const FunctionalSample& x) {
    return Json{{"values", to_json_mat(x.values)}, {"grid", to_json_vec(x.grid)}, {"range", {x.domain.lo, x.domain.hi}}};
}

inline FunctionalSample sample_from_json(const Json& j) {
    return FunctionalSample(mat_from_json(j.at("values")), vec_from_json(j.at("grid")),
                            Interval{j.at("range")[0].get<double>(), j.at("range")[1].get<double>()});
}

inline Json to_json_diag(const Diagnostics& d) {
    return Json{{"r.squared", d.r_squared}, {"var.res", d.var_res}, {"df", d.df}, {"ssr", d.ssr}};
}

inline Diagnostics diag_from_json(const Json& j) {
    return Diagnostics{j.at("r.squared").get<double>(), j.at("var.res").get<double>(), j.at("df").get<double>(),
                       j.at("ssr").get<double>()};
}

inline Json to_json_grid(const TuningGridConfig& g) {
    return Json{{"min.q.h", g.min_q_h}, {"max.q.h", g.max_q_h}, {"num.h", g.num_h},     {"h.seq", g.h_seq},
                {"min.knn", g.min_knn}, {"max.knn", g.max_knn}, {"step", g.step},       {"knearest", g.knearest},
                {"knn.eps", g.knn_eps}};
}

inline TuningGridConfig grid_from_json(const Json& j) {
    TuningGridConfig g;
    g.min_q_h = j.at("min.q.h");
    g.max_q_h = j.at("max.q.h");
    g.num_h = j.at("num.h");
    g.h_seq = j.at("h.seq").get<std::vector<double>>();
    g.min_knn = j.at("min.knn");
    g.max_knn = j.at("max.knn");
    g.step = j.at("step");
    g.knearest = j.at("knearest").get<std::vector<int>>();
    g.knn_eps = j.at("knn.eps");
    return g;
}

inline Json to_json_ibasis(const IndexBasisConfig& b) {
    Json j{{"order.Bspline", b.order}, {"nknot.theta", b.nknot_theta}, {"nknot", b.nknot}, {"seed.coeff", b.seed_coeff}};
    j["t0"] = b.t0 ? Json(*b.t0) : Json();
    return j;
}

inline IndexBasisConfig ibasis_from_json(const Json& j) {
    IndexBasisConfig b;
    b.order = j.at("order.Bspline");
    b.nknot_theta = j.at("nknot.theta");
    b.nknot = j.at("nknot");
    b.seed_coeff = j.at("seed.coeff").get<std::vector<double>>();
    if (!j.at("t0").is_null()) b.t0 = j.at("t0").get<double>();
    return b;
}

inline Json to_json_fsim_config(const FsimConfig& c) {
    return Json{{"basis", to_json_ibasis(c.basis)},
                {"grid", to_json_grid(c.grid)},
                {"gamma", c.gamma},
                {"threshold", c.threshold},
                {"max.it", c.max_outer},
                {"nm", {c.nm.tol, static_cast<double>(c.nm.max_evals), c.nm.rel_step, c.nm.zero_step}}};
}

inline FsimConfig fsim_config_from_json(const Json& j) {
    FsimConfig c;
    c.basis = ibasis_from_json(j.at("basis"));
    c.grid = grid_from_json(j.at("grid"));
    c.gamma = j.at("gamma").get<std::vector<double>>();
    c.threshold = j.at("threshold");
    c.max_outer = j.at("max.it");
    const auto nm = j.at("nm").get<std::vector<double>>();
    c.nm = NelderMeadOptions{nm.at(0), static_cast<int>(nm.at(1)), nm.at(2), nm.at(3)};
    return c;
}

inline Json to_json_plm_config(const PlmConfig& c) {
    Json lam{{"lambda.min.h", c.lambda.lambda_min_h},
             {"lambda.min.l", c.lambda.lambda_min_l},
             {"factor.pn", c.lambda.factor_pn},
             {"nlambda", c.lambda.nlambda},
             {"lambda.seq", c.lambda.lambda_seq}};
    lam["lambda.min"] = c.lambda.lambda_min ? Json(*c.lambda.lambda_min) : Json();
    return Json{{"basis", to_json_ibasis(c.basis)},
                {"grid", to_json_grid(c.grid)},
                {"semimetric", to_string(c.semimetric)},
                {"q", c.q},
                {"penalty", to_string(c.penalty.kind)},
                {"a", c.penalty.a},
                {"groups", c.penalty.groups},
                {"scale.lambda", c.penalty.ols_scale ? "ols" : "none"},
                {"vn", c.vn},
                {"lambda", lam},
                {"criterion", to_string(c.criterion.kind)},
                {"nfolds", c.criterion.nfolds},
                {"seed", c.criterion.seed},
                {"max.iter", c.pels.max_iter},
                {"tol", c.pels.tol}};
}

inline PlmConfig plm_config_from_json(const Json& j) {
    PlmConfig c;
    c.basis = ibasis_from_json(j.at("basis"));
    c.grid = grid_from_json(j.at("grid"));
    c.semimetric = semimetric_from_string(j.at("semimetric"));
    c.q = j.at("q");
    c.penalty.kind = penalty_from_string(j.at("penalty"));
    c.penalty.a = j.at("a");
    c.penalty.groups = j.at("groups").get<std::vector<int>>();
    c.penalty.ols_scale = j.at("scale.lambda") == "ols";
    c.vn = j.at("vn").get<std::vector<int>>();
    const auto& lam = j.at("lambda");
    if (!lam.at("lambda.min").is_null()) c.lambda.lambda_min = lam.at("lambda.min").get<double>();
    c.lambda.lambda_min_h = lam.at("lambda.min.h");
    c.lambda.lambda_min_l = lam.at("lambda.min.l");
    c.lambda.factor_pn = lam.at("factor.pn");
    c.lambda.nlambda = lam.at("nlambda");
    c.lambda.lambda_seq = lam.at("lambda.seq").get<std::vector<double>>();
    c.criterion.kind = criterion_from_string(j.at("criterion"));
    c.criterion.nfolds = j.at("nfolds");
    c.criterion.seed = j.at("seed");
    c.pels.max_iter = j.at("max.iter");
    c.pels.tol = j.at("tol");
    return c;
}

inline std::vector<int> one_based(const std::vector<int>& v) {
    std::vector<int> o;
    for (int i : v) o.push_back(i + 1);
    return o;
}

inline std::vector<int> zero_based(const Json& j) {
    std::vector<int> o;
    for (int i : j.get<std::vector<int>>()) o.push_back(i - 1);
    return o;
}

}  // namespace detail

// Indices are 1-based in every JSON document.

inline Json fit_to_json(const FsimFit& f) {
    return Json{{"kind", to_string(f.kind)},
                {"iterative", f.iterative},
                {"theta", detail::to_json_theta(f.theta)},
                {"tuning", detail::to_json_tuning(f.tuning)},
                {"CV.opt", detail::num(f.cv_opt)},
                {"fitted", detail::to_json_vec(f.fitted)},
                {"residuals", detail::to_json_vec(f.residuals)},
                {"diagnostics", detail::to_json_diag(f.diag)},
                {"candidates", f.candidates},
                {"iterations", f.iterations},
                {"cv.trace", f.cv_trace},
                {"x", detail::to_json_sample(f.x)},
                {"y", detail::to_json_vec(f.y)},
                {"config", detail::to_json_fsim_config(f.config)}};
}

inline FsimFit fsim_fit_from_json(const Json& j) {
    FsimFit f;
    f.kind = j.at("kind") == "knn" ? SmootherKind::knn : SmootherKind::kernel;
    f.iterative = j.at("iterative");
    f.theta = detail::theta_from_json(j.at("theta"));
    f.tuning = detail::tuning_from_json(j.at("tuning"));
    f.cv_opt = detail::num_from(j.at("CV.opt"));
    f.fitted = detail::vec_from_json(j.at("fitted"));
    f.residuals = detail::vec_from_json(j.at("residuals"));
    f.diag = detail::diag_from_json(j.at("diagnostics"));
    f.candidates = j.at("candidates");
    f.iterations = j.at("iterations");
    f.cv_trace = j.at("cv.trace").get<std::vector<double>>();
    f.x = detail::sample_from_json(j.at("x"));
    f.y = detail::vec_from_json(j.at("y"));
    f.config = detail::fsim_config_from_json(j.at("config"));
    return f;
}

inline Json fit_to_json(const SfplFit& f) {
    Json j{{"kind", to_string(f.kind)},
           {"single.index", f.single_index},
           {"beta", detail::to_json_vec(f.beta)},
           {"selected", detail::one_based(f.selected())},
           {"tuning", detail::to_json_tuning(f.tuning)},
           {"lambda", f.lambda},
           {"IC", detail::num(f.ic)},
           {"Q", detail::num(f.q)},
           {"vn", f.vn},
           {"converged", f.converged},
           {"fitted", detail::to_json_vec(f.fitted)},
           {"residuals", detail::to_json_vec(f.residuals)},
           {"diagnostics", detail::to_json_diag(f.diag)},
           {"candidates", f.candidates},
           {"x", detail::to_json_sample(f.x)},
           {"z", detail::to_json_mat(f.z)},
           {"y", detail::to_json_vec(f.y)},
           {"config", detail::to_json_plm_config(f.config)}};
    j["theta"] = f.theta ? detail::to_json_theta(*f.theta) : Json();
    Json grid = Json::array();
    for (std::size_t g = 0; g < f.grid.size(); ++g)
        grid.push_back({{"tuning", detail::to_json_tuning(f.grid[g])}, {"IC", detail::num(f.grid_ic[g])}});
    j["grid"] = grid;
    return j;
}

inline SfplFit sfpl_fit_from_json(const Json& j) {
    SfplFit f;
    f.kind = j.at("kind") == "knn" ? SmootherKind::knn : SmootherKind::kernel;
    f.single_index = j.at("single.index");
    f.beta = detail::vec_from_json(j.at("beta"));
    f.tuning = detail::tuning_from_json(j.at("tuning"));
    f.lambda = j.at("lambda");
    f.ic = detail::num_from(j.at("IC"));
    f.q = detail::num_from(j.at("Q"));
    f.vn = j.at("vn");
    f.converged = j.at("converged");
    if (!j.at("theta").is_null()) f.theta = detail::theta_from_json(j.at("theta"));
    f.fitted = detail::vec_from_json(j.at("fitted"));
    f.residuals = detail::vec_from_json(j.at("residuals"));
    f.diag = detail::diag_from_json(j.at("diagnostics"));
    f.candidates = j.at("candidates");
    for (const auto& g : j.at("grid")) {
        f.grid.push_back(detail::tuning_from_json(g.at("tuning")));
        f.grid_ic.push_back(detail::num_from(g.at("IC")));
    }
    f.x = detail::sample_from_json(j.at("x"));
    f.z = detail::mat_from_json(j.at("z"));
    f.y = detail::vec_from_json(j.at("y"));
    f.config = detail::plm_config_from_json(j.at("config"));
    return f;
}

inline Json fit_to_json(const ImpactFit& f) {
    Json plan{{"p", f.plan.p}, {"w", f.plan.w}, {"sizes", f.plan.sizes}};
    Json j{{"model", to_string(f.model)},
           {"algorithm", f.algorithm},
           {"kind", to_string(f.kind)},
           {"two.step", f.two_step},
           {"impact", detail::one_based(f.impact)},
           {"beta", detail::to_json_vec(f.beta)},
           {"intercept", f.intercept},
           {"w.opt", f.w_opt},
           {"plan", plan},
           {"step1.selected", detail::one_based(f.step1_selected)},
           {"candidates", detail::one_based(f.candidates)},
           {"columns", detail::one_based(f.columns)},
           {"empty.step1", f.empty_step1},
           {"lambda", f.lambda},
           {"IC", detail::num(f.ic)},
           {"Q", detail::num(f.q)},
           {"tuning", detail::to_json_tuning(f.tuning)},
           {"train.1", detail::one_based(f.train1)},
           {"train.2", detail::one_based(f.train2)},
           {"fitted", detail::to_json_vec(f.fitted)},
           {"residuals", detail::to_json_vec(f.residuals)},
           {"z", detail::to_json_mat(f.z)},
           {"y", detail::to_json_vec(f.y)},
           {"config", Json{{"plm", detail::to_json_plm_config(f.config.plm)},
                           {"wn", f.config.wn},
                           {"train.1", detail::one_based(f.config.train1)},
                           {"train.2", detail::one_based(f.config.train2)}}}};
    Json ws = Json::array();
    for (const auto& [w, s] : f.w_scores) ws.push_back({{"w", w}, {"IC", detail::num(s)}});
    j["w.scores"] = ws;
    j["theta"] = f.theta ? detail::to_json_theta(*f.theta) : Json();
    j["x"] = f.x ? detail::to_json_sample(*f.x) : Json();
    j["step1"] = f.step1 ? fit_to_json(*f.step1) : Json();
    j["step2"] = f.step2 ? fit_to_json(*f.step2) : Json();
    return j;
}

inline ImpactFit impact_fit_from_json(const Json& j) {
    ImpactFit f;
    const std::string model = j.at("model");
    f.model = model == "MLM" ? ImpactModel::mlm : model == "MFPLM" ? ImpactModel::mfplm : ImpactModel::mfplsim;
    f.algorithm = j.at("algorithm");
    f.kind = j.at("kind") == "knn" ? SmootherKind::knn : SmootherKind::kernel;
    f.two_step = j.at("two.step");
    f.impact = detail::zero_based(j.at("impact"));
    f.beta = detail::vec_from_json(j.at("beta"));
    f.intercept = j.at("intercept");
    f.w_opt = j.at("w.opt");
    f.plan = partition_sizes(j.at("plan").at("p"), j.at("plan").at("w"));
    f.step1_selected = detail::zero_based(j.at("step1.selected"));
    f.candidates = detail::zero_based(j.at("candidates"));
    f.columns = detail::zero_based(j.at("columns"));
    f.empty_step1 = j.at("empty.step1");
    f.lambda = j.at("lambda");
    f.ic = detail::num_from(j.at("IC"));
    f.q = detail::num_from(j.at("Q"));
    f.tuning = detail::tuning_from_json(j.at("tuning"));
    f.train1 = detail::zero_based(j.at("train.1"));
    f.train2 = detail::zero_based(j.at("train.2"));
    for (const auto& w : j.at("w.scores")) f.w_scores.emplace_back(w.at("w").get<int>(), detail::num_from(w.at("IC")));
    if (!j.at("theta").is_null()) f.theta = detail::theta_from_json(j.at("theta"));
    if (!j.at("x").is_null()) f.x = detail::sample_from_json(j.at("x"));
    if (!j.at("step1").is_null()) f.step1 = sfpl_fit_from_json(j.at("step1"));
    if (!j.at("step2").is_null()) f.step2 = sfpl_fit_from_json(j.at("step2"));
    f.fitted = detail::vec_from_json(j.at("fitted"));
    f.residuals = detail::vec_from_json(j.at("residuals"));
    f.z = detail::mat_from_json(j.at("z"));
    f.y = detail::vec_from_json(j.at("y"));
    const auto& c = j.at("config");
    f.config.plm = detail::plm_config_from_json(c.at("plm"));
    f.config.wn = c.at("wn").get<std::vector<int>>();
    f.config.train1 = detail::zero_based(c.at("train.1"));
    f.config.train2 = detail::zero_based(c.at("train.2"));
    return f;
}

inline constexpr const char* kArtifactFormat = "fsr-model";

/// Portable model file: everything predict needs, including the training sample.
inline Json artifact_json(const std::string& model, const FitResult& fit, const Json& settings = Json::object()) {
    Json fj = std::visit([](const auto& f) { return fit_to_json(f); }, fit);
    return Json{{"format", kArtifactFormat}, {"version", 1}, {"model", model}, {"type", fit_kind(fit)},
                {"settings", settings}, {"fit", fj}};
}

inline std::pair<std::string, FitResult> fit_from_artifact(const Json& j) {
    if (!j.is_object() || j.value("format", "") != kArtifactFormat)
        throw DataError("not an fsr model artifact");
    const std::string type = j.at("type");
    const auto& f = j.at("fit");
    try {
        if (type == "fsim") return {j.at("model"), fsim_fit_from_json(f)};
        if (type == "sfplm" || type == "sfplsim") return {j.at("model"), sfpl_fit_from_json(f)};
        return {j.at("model"), impact_fit_from_json(f)};
    } catch (const Json::exception& e) {
        throw DataError(std::string("malformed model artifact: ") + e.what());
    }
}

inline Json report_json(const PredictionReport& r) {
    Json j{{"option", r.option}, {"n", r.predictions.size()}, {"failed", detail::one_based(r.failed)},
           {"n.failed", r.failed.size()}};
    if (r.msep) j["MSEP"] = *r.msep;
    return j;
}

}  // namespace fsr
