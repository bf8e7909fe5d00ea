#include "svhjb/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>

#include "svhjb/flows.hpp"
#include "svhjb/hamiltonian.hpp"
#include "svhjb/hausdorff.hpp"
#include "svhjb/mean_variance.hpp"
#include "svhjb/reference_sets.hpp"
#include "svhjb/rng.hpp"
#include "svhjb/verification.hpp"

namespace svhjb {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// config plumbing
// ---------------------------------------------------------------------------

const std::map<std::string, std::vector<std::string>> kTopKeys = {
    {"geodesic", {"experiment", "family", "t", "x0", "x1", "step", "y0", "tolerances", "output"}},
    {"ito-flow",
     {"experiment", "family", "dynamics", "grid", "paths", "seed", "regime", "xi_scale",
      "boundary_points", "offset", "workers", "tolerances", "output"}},
    {"hjb-check",
     {"experiment", "family", "points", "seed", "t_range", "x_range", "tolerances", "output"}},
    {"set-heat",
     {"experiment", "family", "points", "seed", "t_range", "x_range", "tolerances", "output"}},
    {"hat-equation", {"experiment", "family", "points", "seed", "tolerances", "output"}},
    {"scalar-hjb",
     {"experiment", "T", "x_lo", "x_hi", "nx", "cfl_safety", "control_points", "refine",
      "tolerances", "output"}},
    {"mean-variance",
     {"experiment", "x0", "lambda", "T", "dt", "paths", "seed", "store_paths", "tolerances",
      "output"}},
    {"hausdorff",
     {"experiment", "pairs", "max_vertices", "seed", "pacman_epsilon", "tolerances", "output"}},
    {"verification",
     {"experiment", "family", "paths", "steps", "seed", "t1", "tolerances", "output"}},
};

const std::vector<std::string> kFamilyKeys = {"kind", "T", "amplitude", "center", "radius",
                                              "coords", "width"};
const std::vector<std::string> kOutputKeys = {"dir", "csv", "json", "svg"};
const std::vector<std::string> kDynamicsKeys = {"b", "sigma", "x0"};
const std::vector<std::string> kGridKeys = {"t0", "t1", "steps"};

void check_keys(const json& obj, const std::vector<std::string>& allowed,
                const std::string& where) {
    if (!obj.is_object()) return;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
    if (obj.contains(key)) return obj.at(key).get<T>();
    return fallback;
}

std::string output_dir(const json& doc) {
    if (const char* env = std::getenv("SVHJB_OUT_DIR")) return env;
    if (doc.contains("output") && doc["output"].contains("dir"))
        return doc["output"]["dir"].get<std::string>();
    return ".";
}

std::string output_file(const json& doc, const std::string& key, const std::string& fallback) {
    std::string name = fallback;
    if (doc.contains("output") && doc["output"].contains(key))
        name = doc["output"][key].get<std::string>();
    if (name.empty()) return name;
    std::filesystem::path dir(output_dir(doc));
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    if (path.empty()) return;
    std::ofstream out(path);
    for (std::size_t i = 0; i < header.size(); ++i)
        out << header[i] << (i + 1 < header.size() ? "," : "\n");
    out.precision(17);
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out << row[i] << (i + 1 < row.size() ? "," : "\n");
    }
}

// Minimal SVG line plot; one polyline per series over a shared x column.
void write_svg_lines(const std::string& path, const std::vector<double>& x,
                     const std::vector<std::vector<double>>& series,
                     const std::string& title) {
    if (path.empty() || x.empty()) return;
    const double W = 640, H = 400, L = 60, Bm = 40;
    double xmin = x.front(), xmax = x.back();
    double ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (double v : s) {
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    if (!(ymax > ymin)) { ymax = ymin + 1.0; }
    if (!(xmax > xmin)) { xmax = xmin + 1.0; }
    auto px = [&](double v) { return L + (v - xmin) / (xmax - xmin) * (W - L - 20); };
    auto py = [&](double v) { return H - Bm - (v - ymin) / (ymax - ymin) * (H - Bm - 30); };

    std::ofstream out(path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    out << "<text x='" << W / 2 << "' y='20' text-anchor='middle' font-size='14'>" << title
        << "</text>\n";
    out << "<line x1='" << L << "' y1='" << H - Bm << "' x2='" << W - 20 << "' y2='" << H - Bm
        << "' stroke='black'/>\n";
    out << "<line x1='" << L << "' y1='" << H - Bm << "' x2='" << L << "' y2='30' stroke='black'/>\n";
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"};
    for (std::size_t s = 0; s < series.size(); ++s) {
        out << "<polyline fill='none' stroke='" << colors[s % 6] << "' stroke-width='1' points='";
        for (std::size_t i = 0; i < series[s].size() && i < x.size(); ++i)
            out << px(x[i]) << "," << py(series[s][i]) << " ";
        out << "'/>\n";
    }
    out << "<text x='" << L - 8 << "' y='" << py(ymin) << "' text-anchor='end' font-size='10'>"
        << ymin << "</text>\n";
    out << "<text x='" << L - 8 << "' y='" << py(ymax) << "' text-anchor='end' font-size='10'>"
        << ymax << "</text>\n";
    out << "</svg>\n";
}

struct Checks {
    json report = json::object();
    bool pass = true;

    void bound(const std::string& name, double observed, double limit) {
        const bool ok = observed <= limit;
        report[name] = {{"observed", observed}, {"limit", limit}, {"pass", ok}};
        pass = pass && ok;
    }
    void equals_zero(const std::string& name, int observed) {
        const bool ok = observed == 0;
        report[name] = {{"observed", observed}, {"limit", 0}, {"pass", ok}};
        pass = pass && ok;
    }
};

double tol_or(const json& doc, const std::string& name, double fallback) {
    if (doc.contains("tolerances") && doc["tolerances"].contains(name))
        return doc["tolerances"][name].get<double>();
    return fallback;
}

// ---------------------------------------------------------------------------
// family construction from config
// ---------------------------------------------------------------------------

SetOracle make_family(const json& family) {
    check_keys(family, kFamilyKeys, "family");
    const std::string kind = family.at("kind").get<std::string>();
    if (kind == "static-ball") {
        const double radius = get_or(family, "radius", 1.0);
        Vec center = Vec::Zero(2);
        if (family.contains("center")) {
            const auto c = family["center"].get<std::vector<double>>();
            center = Eigen::Map<const Vec>(c.data(), c.size());
        }
        return ball_oracle(make_static_ball(center, radius));
    }
    if (kind == "translating-ball") return ball_oracle(make_translating_ball());
    if (kind == "heat-ball")
        return ball_oracle(
            make_heat_ball(get_or(family, "T", 2.0), get_or(family, "amplitude", 0.1)));
    if (kind == "const-heat-ball") {
        Vec w0 = Vec::Zero(2);
        return ball_oracle(make_const_heat_ball(get_or(family, "T", 2.0), w0));
    }
    if (kind == "exp-ball") return ball_oracle(make_exp_radius_ball(get_or(family, "T", 1.0)));
    if (kind == "poly-ball") return ball_oracle(make_poly_radius_ball(get_or(family, "T", 2.0)));
    if (kind == "mean-variance") {
        const std::string coords = get_or<std::string>(family, "coords", "transformed");
        return mean_variance_oracle(get_or(family, "T", 1.0),
                                    coords == "raw" ? MVCoords::Raw : MVCoords::Transformed);
    }
    if (kind == "nonconvex") return nonconvex_oracle(get_or(family, "T", 1.0));
    throw ConfigError("unknown family kind '" + kind + "'");
}

// heat-interval family used by the hat-equation experiment
IntervalSet make_heat_interval(double T) {
    IntervalSet iv;
    iv.d = 1;
    auto amp = [T](double t) { return std::exp(-0.5 * (T - t)); };
    iv.upper = [amp](double t, const Vec& x) { return 2.0 + std::sin(x(0)) * amp(t); };
    iv.lower = [amp](double t, const Vec& x) { return -2.0 - std::sin(x(0)) * amp(t); };
    iv.upper_t = [amp](double t, const Vec& x) { return 0.5 * std::sin(x(0)) * amp(t); };
    iv.lower_t = [amp](double t, const Vec& x) { return -0.5 * std::sin(x(0)) * amp(t); };
    iv.upper_x = [amp](double t, const Vec& x) { return Vec{{std::cos(x(0)) * amp(t)}}; };
    iv.lower_x = [amp](double t, const Vec& x) { return Vec{{-std::cos(x(0)) * amp(t)}}; };
    iv.upper_xx = [amp](double t, const Vec& x) { return Mat{{-std::sin(x(0)) * amp(t)}}; };
    iv.lower_xx = [amp](double t, const Vec& x) { return Mat{{std::sin(x(0)) * amp(t)}}; };
    return iv;
}

// ---------------------------------------------------------------------------
// experiment runners
// ---------------------------------------------------------------------------

RunResult run_geodesic(const json& doc) {
    const SetOracle oracle =
        doc.contains("family") ? make_family(doc["family"])
                               : ball_oracle(make_translating_ball());
    const double t = get_or(doc, "t", 0.0);
    const double x0 = get_or(doc, "x0", 0.0);
    const double x1 = get_or(doc, "x1", 1.0);
    const double step = get_or(doc, "step", 1e-3);

    Vec y0;
    if (doc.contains("y0")) {
        const auto v = doc["y0"].get<std::vector<double>>();
        y0 = Eigen::Map<const Vec>(v.data(), v.size());
    } else {
        const Vec lo = Vec::Constant(oracle.value_dim, -2.0);
        const Vec hi = Vec::Constant(oracle.value_dim, 2.0);
        y0 = boundary_sample(oracle, t, Vec{{x0}}, 1, lo, hi).front();
    }

    const GeodesicTrajectory traj = geodesic_ode(oracle, t, x0, y0, x1, step, 1e300);

    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < traj.xs.size(); ++k) {
        std::vector<double> row{traj.xs[k]};
        for (int j = 0; j < traj.ys[k].size(); ++j) row.push_back(traj.ys[k](j));
        row.push_back(oracle.r(t, Vec{{traj.xs[k]}}, traj.ys[k]));
        rows.push_back(std::move(row));
    }
    std::vector<std::string> header{"x"};
    for (int j = 0; j < oracle.value_dim; ++j) header.push_back("y" + std::to_string(j + 1));
    header.push_back("r");
    write_csv(output_file(doc, "csv", "geodesic.csv"), header, rows);

    Checks checks;
    checks.bound("max_abs_r", traj.max_abs_r, tol_or(doc, "max_abs_r", 1e-7));

    json summary;
    summary["experiment"] = "geodesic";
    summary["max_abs_r"] = traj.max_abs_r;
    summary["length"] = geodesic_length(traj);
    for (int j = 0; j < oracle.value_dim; ++j)
        summary["endpoint"].push_back(traj.ys.back()(j));
    summary["checks"] = checks.report;
    summary["pass"] = checks.pass;

    if (!output_file(doc, "svg", "").empty()) {
        std::vector<double> xs = traj.xs;
        std::vector<std::vector<double>> series(oracle.value_dim);
        for (const Vec& y : traj.ys)
            for (int j = 0; j < oracle.value_dim; ++j) series[j].push_back(y(j));
        write_svg_lines(output_file(doc, "svg", "geodesic.svg"), xs, series, "boundary flow");
    }
    return {checks.pass ? 0 : 1, summary};
}

RunResult run_ito_flow(const json& doc) {
    const SetOracle oracle = doc.contains("family")
                                 ? make_family(doc["family"])
                                 : ball_oracle(make_heat_ball(2.0, 0.1));
    const json grid = doc.contains("grid") ? doc["grid"] : json::object();
    check_keys(grid, kGridKeys, "grid");
    const double t0 = get_or(grid, "t0", 0.0);
    const double t1 = get_or(grid, "t1", 1.0);
    const int steps = get_or(grid, "steps", 1000);
    const int paths = get_or(doc, "paths", 100);
    const std::uint64_t seed = get_or<std::uint64_t>(doc, "seed", 1);
    const int npts = get_or(doc, "boundary_points", 16);
    const double offset = get_or(doc, "offset", 0.1);
    const std::string regime = get_or<std::string>(doc, "regime", "tangential");
    const double xi_scale = get_or(doc, "xi_scale", 0.5);

    DiffusionSpec diffusion;
    const json dyn = doc.contains("dynamics") ? doc["dynamics"] : json::object();
    check_keys(dyn, kDynamicsKeys, "dynamics");
    const double b0 = get_or(dyn, "b", 0.0);
    const double s0 = get_or(dyn, "sigma", 1.0);
    const int d = oracle.state_dim;
    diffusion.b = [b0, d](double, const Vec&) { return Vec::Constant(d, b0); };
    diffusion.sigma = [s0, d](double, const Vec&) { return Mat(s0 * Mat::Identity(d, d)); };
    diffusion.x0 = Vec::Zero(d);
    if (dyn.contains("x0")) diffusion.x0 = Vec::Constant(d, dyn["x0"].get<double>());

    const Vec lo = Vec::Constant(oracle.value_dim, -4.0);
    const Vec hi = Vec::Constant(oracle.value_dim, 4.0);
    std::vector<Vec> y0 = boundary_sample(oracle, t0, diffusion.x0, npts, lo, hi);

    TangentFieldSpec fields;
    if (regime == "inward") {
        fields.regime = TangentFieldSpec::Regime::Inward;
        fields.xi = [&oracle, xi_scale](double t, const Vec& x, const Vec& y) {
            return Vec(-xi_scale * oracle.grad_y(t, x, y).normalized());
        };
        for (Vec& y : y0) {
            const Vec n = oracle.grad_y(t0, diffusion.x0, y).normalized();
            y -= offset * n;
        }
    } else if (regime == "outward") {
        fields.regime = TangentFieldSpec::Regime::Outward;
        fields.xi = [&oracle, xi_scale](double t, const Vec& x, const Vec& y) {
            return Vec(xi_scale * oracle.grad_y(t, x, y).normalized());
        };
        for (Vec& y : y0) {
            const Vec n = oracle.grad_y(t0, diffusion.x0, y).normalized();
            y += offset * n;
        }
    }

    ItoFlowOptions options;
    options.workers = get_or(doc, "workers", 1);
    const ItoFlowResult result =
        ito_flow_simulate(oracle, diffusion, fields, y0, t0, t1, steps, paths, seed, options);

    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < result.t_grid.size(); ++k)
        rows.push_back({result.t_grid[k], result.max_residual_per_time[k]});
    write_csv(output_file(doc, "csv", "ito_flow.csv"), {"t", "max_abs_r"}, rows);
    write_svg_lines(output_file(doc, "svg", ""), result.t_grid,
                    {result.max_residual_per_time}, "boundary residual");

    Checks checks;
    if (regime == "tangential") {
        checks.bound("max_abs_residual", result.max_abs_residual,
                     tol_or(doc, "max_abs_residual", 0.02));
        checks.bound("band_exit_fraction",
                     static_cast<double>(result.band_exits) /
                         (static_cast<double>(paths) * result.y0_count),
                     tol_or(doc, "band_exit_fraction", 1e-3));
    } else {
        checks.equals_zero("sign_violations", result.sign_violations);
    }

    json summary;
    summary["experiment"] = "ito-flow";
    summary["regime"] = regime;
    summary["paths"] = paths;
    summary["steps"] = steps;
    summary["seed"] = seed;
    summary["max_abs_residual"] = result.max_abs_residual;
    summary["band_exits"] = result.band_exits;
    summary["sign_violations"] = result.sign_violations;
    summary["final_residual_q50"] = result.quantile(0.5);
    summary["final_residual_q90"] = result.quantile(0.9);
    summary["final_residual_q99"] = result.quantile(0.99);
    summary["checks"] = checks.report;
    summary["pass"] = checks.pass;
    return {checks.pass ? 0 : 1, summary};
}

// Random graph points for residual sweeps.
struct SweepPoint {
    double t;
    Vec x;
    Vec y;
};

std::vector<SweepPoint> sweep_points(const SetOracle& oracle, int count, std::uint64_t seed,
                                     double t_lo, double t_hi, double x_lo, double x_hi) {
    std::vector<SweepPoint> pts;
    NormalStream stream(seed, 0);
    const int d = oracle.state_dim;
    std::uint64_t halton_idx = 1;
    while (static_cast<int>(pts.size()) < count) {
        double u[4];
        halton_point(halton_idx++, 3, u);
        SweepPoint p;
        p.t = t_lo + u[0] * (t_hi - t_lo);
        p.x = Vec::Constant(std::max(d, 1), x_lo + u[1] * (x_hi - x_lo)).head(d);
        const Vec lo = Vec::Constant(oracle.value_dim, -4.0);
        const Vec hi = Vec::Constant(oracle.value_dim, 4.0);
        const auto samples = boundary_sample(oracle, p.t, p.x, 4, lo, hi);
        p.y = samples[halton_idx % samples.size()];
        pts.push_back(std::move(p));
    }
    return pts;
}

RunResult run_hjb_check(const json& doc) {
    const json family = doc.contains("family") ? doc["family"]
                                               : json{{"kind", "heat-ball"}, {"T", 2.0}};
    const SetOracle oracle = make_family(family);
    const std::string kind = family.at("kind").get<std::string>();
    const ControlProblem problem =
        kind == "mean-variance" ? make_mv_problem() : make_additive_ball_problem();

    const int count = get_or(doc, "points", 100);
    const std::uint64_t seed = get_or<std::uint64_t>(doc, "seed", 3);
    const double T = oracle.horizon;
    const double t_hi = std::isfinite(T) ? 0.8 * T : 1.0;
    const auto pts = sweep_points(oracle, count, seed, get_or(doc, "t_range", 0.0), t_hi, -1.0,
                                  1.0);

    double max_n = 0.0, max_cross = 0.0, min_lambda = 1e300;
    std::vector<std::vector<double>> rows;
    for (const auto& p : pts) {
        const GraphPoint gp = make_graph_point(oracle, p.t, p.x, p.y);
        const HJBResidual res = hjb_residual(problem, oracle, gp);
        max_n = std::max(max_n, std::abs(res.n_form));
        max_cross = std::max(max_cross, std::abs(res.n_form - res.r_form));
        min_lambda = std::min(min_lambda, res.lambda_min);
        std::vector<double> row{p.t};
        for (int j = 0; j < p.x.size(); ++j) row.push_back(p.x(j));
        for (int j = 0; j < p.y.size(); ++j) row.push_back(p.y(j));
        row.push_back(res.n_form);
        row.push_back(res.r_form);
        row.push_back(res.lambda_min);
        for (int j = 0; j < res.a_star.size(); ++j) row.push_back(res.a_star(j));
        row.push_back(res.zeta_star.norm());
        rows.push_back(std::move(row));
    }
    std::vector<std::string> header{"t"};
    for (int j = 0; j < oracle.state_dim; ++j) header.push_back("x" + std::to_string(j + 1));
    for (int j = 0; j < oracle.value_dim; ++j) header.push_back("y" + std::to_string(j + 1));
    header.insert(header.end(), {"n_form", "r_form", "lambda_min"});
    for (int j = 0; j < problem.control_dim; ++j) header.push_back("a" + std::to_string(j + 1));
    header.push_back("zeta_norm");
    write_csv(output_file(doc, "csv", "hjb_check.csv"), header, rows);

    Checks checks;
    checks.bound("max_n_form", max_n, tol_or(doc, "max_n_form", 1e-8));
    checks.bound("max_form_gap", max_cross, tol_or(doc, "max_form_gap", 1e-9));

    json summary;
    summary["experiment"] = "hjb-check";
    summary["family"] = kind;
    summary["points"] = count;
    summary["max_n_form"] = max_n;
    summary["max_form_gap"] = max_cross;
    summary["min_lambda"] = min_lambda;
    summary["checks"] = checks.report;
    summary["pass"] = checks.pass;
    return {checks.pass ? 0 : 1, summary};
}

RunResult run_set_heat(const json& doc) {
    const json family =
        doc.contains("family") ? doc["family"] : json{{"kind", "exp-ball"}, {"T", 1.0}};
    const SetOracle oracle = make_family(family);
    const int count = get_or(doc, "points", 64);
    const std::uint64_t seed = get_or<std::uint64_t>(doc, "seed", 5);
    const auto pts = sweep_points(oracle, count, seed, 0.0,
                                  std::isfinite(oracle.horizon) ? 0.8 * oracle.horizon : 0.8,
                                  -0.5, 0.5);
    double max_res = 0.0;
    for (const auto& p : pts) {
        const GraphPoint gp = make_graph_point(oracle, p.t, p.x, p.y);
        max_res = std::max(max_res, std::abs(set_heat_residual(oracle, gp)));
    }
    Checks checks;
    checks.bound("max_heat_residual", max_res, tol_or(doc, "max_heat_residual", 1e-9));
    json summary;
    summary["experiment"] = "set-heat";
    summary["max_heat_residual"] = max_res;
    summary["checks"] = checks.report;
    summary["pass"] = checks.pass;
    return {checks.pass ? 0 : 1, summary};
}

RunResult run_hat_equation(const json& doc) {
    const double T = 2.0;
    const SetOracle inner = interval_oracle(make_heat_interval(T));
    const SetOracle product = product_graph_oracle(inner);

    const IntervalSet heat_iv = make_heat_interval(T);
    const int count = get_or(doc, "points", 24);
    double max_res = 0.0;
    for (int k = 0; k < count; ++k) {
        double u[2];
        halton_point(k + 1, 2, u);
        const double t = 0.2 + 0.5 * u[0];
        const double x = -1.0 + 2.0 * u[1];
        const Vec yhat{{x, heat_iv.upper(t, Vec{{x}})}};
        max_res = std::max(max_res, std::abs(hat_equation_residual(product, t, yhat)));
    }

    // slab identity: the product distance of V(x) = [x-1, x+1] is r/sqrt(2)
    IntervalSet slab;
    slab.d = 1;
    slab.lower = [](double, const Vec& x) { return x(0) - 1.0; };
    slab.upper = [](double, const Vec& x) { return x(0) + 1.0; };
    slab.lower_x = [](double, const Vec&) { return Vec{{1.0}}; };
    slab.upper_x = [](double, const Vec&) { return Vec{{1.0}}; };
    const SetOracle slab_product = product_graph_oracle(interval_oracle(slab));
    double slab_err = 0.0;
    for (int k = 0; k < 16; ++k) {
        double u[2];
        halton_point(k + 1, 2, u);
        const double x = -1.0 + 2.0 * u[0];
        const double y = x + 1.0 + 0.2 * (u[1] - 0.5);
        const double rhat = slab_product.r(0.0, Vec(0), Vec{{x, y}});
        const double r = y - (x + 1.0);
        slab_err = std::max(slab_err, std::abs(rhat - r / std::sqrt(2.0)));
    }

    Checks checks;
    checks.bound("max_hat_residual", max_res, tol_or(doc, "max_hat_residual", 1e-4));
    checks.bound("slab_identity_error", slab_err, tol_or(doc, "slab_identity_error", 1e-8));
    json summary;
    summary["experiment"] = "hat-equation";
    summary["max_hat_residual"] = max_res;
    summary["slab_identity_error"] = slab_err;
    summary["checks"] = checks.report;
    summary["pass"] = checks.pass;
    return {checks.pass ? 0 : 1, summary};
}

ControlProblem scalar_benchmark_problem(int control_points) {
    ControlProblem p;
    p.d = 1;
    p.m = 1;
    p.control_dim = 1;
    p.b = [](double, const Vec&, const Vec&) { return Vec::Zero(1); };
    p.sigma = [](double, const Vec&, const Vec&) { return Mat::Identity(1, 1); };
    p.f = [](double, const Vec&, const Vec&, const Mat&, const Vec& a) { return Vec{{a(0)}}; };
    p.g = [](const Vec& x) { return Vec{{std::sin(x(0))}}; };
    p.grid = ControlGrid{Vec{{-1.0}}, Vec{{1.0}}, control_points};
    return p;
}

RunResult run_scalar_hjb(const json& doc) {
    const double T = get_or(doc, "T", 1.0);
    const double x_lo = get_or(doc, "x_lo", -M_PI);
    const double x_hi = get_or(doc, "x_hi", M_PI);
    const int nx = get_or(doc, "nx", 629);
    const int control_points = get_or(doc, "control_points", 17);
    const ControlProblem problem = scalar_benchmark_problem(control_points);

    ScalarHJBOptions options;
    options.cfl_safety = get_or(doc, "cfl_safety", 0.9);

    auto sup_error = [&](int n) {
        const ScalarHJBSolution sol = scalar_hjb_solve(problem, T, x_lo, x_hi, n, options);
        double err = 0.0;
        for (std::size_t i = 0; i < sol.xs.size(); ++i) {
            const double exact_up = std::exp(-0.5 * T) * std::sin(sol.xs[i]) + T;
            const double exact_lo = std::exp(-0.5 * T) * std::sin(sol.xs[i]) - T;
            err = std::max(err, std::abs(sol.upper(0, i) - exact_up));
            err = std::max(err, std::abs(sol.lower(0, i) - exact_lo));
        }
        return std::pair<double, ScalarHJBSolution>(err, sol);
    };

    const auto [err, sol] = sup_error(nx);
    double ratio = 0.0;
    if (get_or(doc, "refine", true)) {
        const auto [err_coarse, sol_coarse] = sup_error(nx / 2);
        ratio = err_coarse / err;
    }

    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < sol.xs.size(); ++i)
        rows.push_back({sol.xs[i], sol.lower(0, i), sol.upper(0, i)});
    write_csv(output_file(doc, "csv", "scalar_hjb.csv"), {"x", "lower", "upper"}, rows);

    Checks checks;
    checks.bound("sup_error", err, tol_or(doc, "sup_error", 2e-3));

    json summary;
    summary["experiment"] = "scalar-hjb";
    summary["sup_error"] = err;
    summary["refinement_ratio"] = ratio;
    summary["degenerate"] = sol.degenerate;
    summary["checks"] = checks.report;
    summary["pass"] = checks.pass;
    return {checks.pass ? 0 : 1, summary};
}

RunResult run_mean_variance(const json& doc) {
    MVParams params;
    params.x0 = get_or(doc, "x0", 0.0);
    params.lambda = get_or(doc, "lambda", 1.0);
    params.T = get_or(doc, "T", 1.0);
    const double dt = get_or(doc, "dt", 1e-4);
    const int paths = get_or(doc, "paths", 100000);
    const std::uint64_t seed = get_or<std::uint64_t>(doc, "seed", 7);
    const int store = get_or(doc, "store_paths", 4);

    const MVSimulationResult sim = simulate_optimal(params, dt, paths, seed, store);
    const MVStatic stat = static_solution(params);

    std::vector<std::vector<double>> rows;
    for (std::size_t p = 0; p < sim.stored_paths.size(); ++p) {
        const MVPath& path = sim.stored_paths[p];
        for (std::size_t k = 0; k < path.t.size(); ++k)
            rows.push_back({static_cast<double>(p), path.t[k], path.X[k], path.U1[k],
                            path.Lambda[k], path.V[k]});
    }
    write_csv(output_file(doc, "csv", "mean_variance.csv"),
              {"path", "t", "X", "U1", "Lambda", "V"}, rows);
    if (!sim.stored_paths.empty()) {
        std::vector<std::vector<double>> lam;
        for (const auto& path : sim.stored_paths) lam.push_back(path.Lambda);
        write_svg_lines(output_file(doc, "svg", ""), sim.stored_paths[0].t, lam,
                        "moving scalarization");
    }

    Checks checks;
    checks.bound("abs_z_score", std::abs(sim.z_score), tol_or(doc, "abs_z_score", 3.0));
    checks.bound("max_cf_defect", sim.max_cf_defect, tol_or(doc, "max_cf_defect", 30.0 * dt));
    checks.equals_zero("positivity_violations", sim.positivity_violations);
    checks.equals_zero("admissibility_violations", sim.admissibility_violations);

    json summary;
    summary["experiment"] = "mean-variance";
    summary["V0"] = stat.V0;
    summary["paths"] = paths;
    summary["dt"] = dt;
    summary["seed"] = seed;
    summary["mc_objective"] = sim.mc_objective;
    summary["mc_std_error"] = sim.mc_std_error;
    summary["target"] = sim.target;
    summary["z_score"] = sim.z_score;
    summary["max_cf_defect"] = sim.max_cf_defect;
    summary["checks"] = checks.report;
    summary["pass"] = checks.pass;
    return {checks.pass ? 0 : 1, summary};
}

RunResult run_hausdorff(const json& doc) {
    const int pairs = get_or(doc, "pairs", 200);
    const int max_vertices = get_or(doc, "max_vertices", 24);
    const std::uint64_t seed = get_or<std::uint64_t>(doc, "seed", 17);
    const double eps = get_or(doc, "pacman_epsilon", 1e-3);

    NormalStream stream(seed, 0);
    auto random_convex = [&](double scale, const Vec2& center) {
        std::vector<Vec2> pts;
        const int n = 6 + static_cast<int>(std::abs(stream.next()) * max_vertices) % max_vertices;
        for (int k = 0; k < n + 8; ++k)
            pts.emplace_back(center.x() + scale * stream.next(), center.y() + scale * stream.next());
        return convex_hull(pts);
    };

    double worst_gap = 0.0;
    for (int k = 0; k < pairs; ++k) {
        const Polygon a = random_convex(1.0, Vec2(0.0, 0.0));
        const Polygon b = random_convex(0.8, Vec2(0.3 * stream.next(), 0.3 * stream.next()));
        const double d_sets = hausdorff_distance(a, b);
        const double d_bounds = boundary_hausdorff(a, b);
        worst_gap = std::max(worst_gap, std::abs(d_sets - d_bounds));
    }

    // pac-man family: disk minus the angular sector |theta| < eps
    const int arc = 4096;
    Polygon pac;
    pac.v.emplace_back(0.0, 0.0);
    for (int k = 0; k <= arc; ++k) {
        const double th = eps + (2.0 * M_PI - 2.0 * eps) * k / arc;
        pac.v.emplace_back(std::cos(th), std::sin(th));
    }
    const Polygon disk = regular_polygon(Vec2(0, 0), 1.0, 2048);

    // d(disk, pac) via a cloud filling the missing sector
    PointCloud sector;
    for (int i = 0; i <= 64; ++i)
        for (int j = 0; j <= 32; ++j) {
            const double r = static_cast<double>(i) / 64;
            const double th = -eps + 2.0 * eps * j / 32;
            sector.pts.push_back(Vec{{r * std::cos(th), r * std::sin(th)}});
        }
    const double d_sets_pac = cloud_to_polygon_defect(sector, pac);

    // boundary distance: the pac-man boundary passes through the origin
    PointCloud pac_boundary;
    for (std::size_t i = 0; i < pac.v.size(); ++i)
        pac_boundary.pts.push_back(Vec{{pac.v[i].x(), pac.v[i].y()}});
    const double d_bounds_pac = cloud_to_polyline_defect(pac_boundary, disk);

    Checks checks;
    checks.bound("max_identity_gap", worst_gap, tol_or(doc, "max_identity_gap", 1e-9));
    checks.bound("pacman_set_distance", d_sets_pac, tol_or(doc, "pacman_set_distance", 2e-3));
    checks.bound("pacman_boundary_slack", 1.0 - d_bounds_pac,
                 tol_or(doc, "pacman_boundary_slack", 0.01));

    json summary;
    summary["experiment"] = "hausdorff";
    summary["pairs"] = pairs;
    summary["max_identity_gap"] = worst_gap;
    summary["pacman_set_distance"] = d_sets_pac;
    summary["pacman_boundary_distance"] = d_bounds_pac;
    summary["checks"] = checks.report;
    summary["pass"] = checks.pass;
    return {checks.pass ? 0 : 1, summary};
}

RunResult run_verification(const json& doc) {
    const json family = doc.contains("family") ? doc["family"]
                                               : json{{"kind", "heat-ball"}, {"T", 2.0}};
    const SetOracle oracle = make_family(family);
    const std::string kind = family.at("kind").get<std::string>();
    const ControlProblem problem =
        kind == "mean-variance" ? make_mv_problem() : make_additive_ball_problem();
    const OptimalFeedback feedback = feedback_from_hamiltonian(problem, oracle);

    const int paths = get_or(doc, "paths", 100);
    const int steps = get_or(doc, "steps", 500);
    const std::uint64_t seed = get_or<std::uint64_t>(doc, "seed", 9);
    const double t1 = get_or(doc, "t1", std::isfinite(oracle.horizon) ? 0.5 * oracle.horizon : 1.0);

    const Vec x0 = Vec::Zero(std::max(oracle.state_dim, 1)).head(oracle.state_dim);
    const Vec lo = Vec::Constant(oracle.value_dim, -4.0);
    const Vec hi = Vec::Constant(oracle.value_dim, 4.0);
    const Vec y0 = boundary_sample(oracle, 0.0, x0, 1, lo, hi).front();
    const GraphPoint start = make_graph_point(oracle, 0.0, x0, y0);

    const VerificationRun run =
        verification_sde_simulate(problem, oracle, feedback, start, t1, steps, paths, seed);

    Checks checks;
    checks.bound("max_abs_residual", run.max_abs_residual,
                 tol_or(doc, "max_abs_residual", 0.02));
    checks.bound("max_drift_identity_gap", run.max_drift_identity_gap,
                 tol_or(doc, "max_drift_identity_gap", 1e-8));

    json summary;
    summary["experiment"] = "verification";
    summary["family"] = kind;
    summary["max_abs_residual"] = run.max_abs_residual;
    summary["max_drift_identity_gap"] = run.max_drift_identity_gap;
    summary["final_abs_residual_mean"] = run.final_abs_residual_mean;
    summary["checks"] = checks.report;
    summary["pass"] = checks.pass;
    return {checks.pass ? 0 : 1, summary};
}

} // namespace

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return from_json(std::move(doc));
}

ExperimentConfig ExperimentConfig::from_json(json doc) {
    ExperimentConfig cfg;
    cfg.doc = std::move(doc);
    if (!cfg.doc.contains("experiment"))
        throw ConfigError("missing key 'experiment'");
    const std::string kind = cfg.doc["experiment"].get<std::string>();
    const auto it = kTopKeys.find(kind);
    if (it == kTopKeys.end()) throw ConfigError("unknown experiment '" + kind + "'");
    check_keys(cfg.doc, it->second, "config");
    if (cfg.doc.contains("output")) check_keys(cfg.doc["output"], kOutputKeys, "output");
    return cfg;
}

void ExperimentConfig::set(const std::string& dotted_key, const json& value) {
    json* node = &doc;
    std::size_t pos = 0;
    while (true) {
        const std::size_t dot = dotted_key.find('.', pos);
        const std::string key = dotted_key.substr(pos, dot - pos);
        if (dot == std::string::npos) {
            (*node)[key] = value;
            break;
        }
        node = &(*node)[key];
        pos = dot + 1;
    }
}

std::string ExperimentConfig::kind() const { return doc.at("experiment").get<std::string>(); }

std::string summary_to_string(const json& summary) { return summary.dump(2) + "\n"; }

RunResult run_experiment(const ExperimentConfig& config) {
    const ExperimentConfig validated = ExperimentConfig::from_json(config.doc);
    const json& doc = validated.doc;
    const std::string kind = validated.kind();

    RunResult result;
    if (kind == "geodesic") result = run_geodesic(doc);
    else if (kind == "ito-flow") result = run_ito_flow(doc);
    else if (kind == "hjb-check") result = run_hjb_check(doc);
    else if (kind == "set-heat") result = run_set_heat(doc);
    else if (kind == "hat-equation") result = run_hat_equation(doc);
    else if (kind == "scalar-hjb") result = run_scalar_hjb(doc);
    else if (kind == "mean-variance") result = run_mean_variance(doc);
    else if (kind == "hausdorff") result = run_hausdorff(doc);
    else if (kind == "verification") result = run_verification(doc);
    else throw ConfigError("unknown experiment '" + kind + "'");

    const std::string json_path = output_file(doc, "json", kind + "_summary.json");
    if (!json_path.empty()) {
        std::ofstream out(json_path);
        out << summary_to_string(result.summary);
    }
    return result;
}

} // namespace svhjb
