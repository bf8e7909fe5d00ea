#include "svhjb/flows.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "svhjb/rng.hpp"

namespace svhjb {

namespace {

// Drift of the deterministic flow: -grad_x r * grad_y r (scalar state).
Vec geodesic_drift(const SetOracle& oracle, double t, double x, const Vec& y) {
    const DerivativeBundle b = oracle.bundle(t, Vec{{x}}, y);
    return -b.grad_x(0) * b.grad_y;
}

} // namespace

GeodesicTrajectory geodesic_ode(const SetOracle& oracle, double t, double x0, const Vec& y0,
                                double x1, double step, double tol_geo) {
    if (oracle.state_dim != 1) throw Error("geodesic flow needs a scalar state");
    const double r0 = oracle.r(t, Vec{{x0}}, y0);
    if (std::abs(r0) > oracle.graph_tol) throw NotOnGraph("geodesic start off the boundary");

    const int n = std::max(1, static_cast<int>(std::ceil(std::abs(x1 - x0) / step)));
    const double h = (x1 - x0) / n;

    GeodesicTrajectory traj;
    traj.xs.reserve(n + 1);
    traj.ys.reserve(n + 1);
    traj.xs.push_back(x0);
    traj.ys.push_back(y0);

    Vec y = y0;
    double x = x0;
    for (int k = 0; k < n; ++k) {
        const Vec k1 = geodesic_drift(oracle, t, x, y);
        const Vec k2 = geodesic_drift(oracle, t, x + 0.5 * h, y + 0.5 * h * k1);
        const Vec k3 = geodesic_drift(oracle, t, x + 0.5 * h, y + 0.5 * h * k2);
        const Vec k4 = geodesic_drift(oracle, t, x + h, y + h * k3);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        x = x0 + (k + 1) * h;
        const double r = oracle.r(t, Vec{{x}}, y);
        if (std::abs(r) >= oracle.band_at(t, Vec{{x}}))
            throw LeftTube("geodesic trajectory left the tube at x = " + std::to_string(x));
        traj.max_abs_r = std::max(traj.max_abs_r, std::abs(r));
        traj.xs.push_back(x);
        traj.ys.push_back(y);
    }
    if (traj.max_abs_r > tol_geo)
        throw LeftTube("geodesic residual " + std::to_string(traj.max_abs_r) +
                       " above tolerance");
    return traj;
}

double geodesic_length(const GeodesicTrajectory& traj) {
    double len = 0.0;
    for (std::size_t k = 1; k < traj.xs.size(); ++k) {
        const double dx = traj.xs[k] - traj.xs[k - 1];
        const double dy = (traj.ys[k] - traj.ys[k - 1]).norm();
        len += std::sqrt(dx * dx + dy * dy);
    }
    return len;
}

double length_comparison(const SetOracle& oracle, double t, double x0, const Vec& y0,
                         const std::function<Vec(double)>& competitor, double dx, int substeps,
                         double competitor_tol) {
    if ((competitor(x0) - y0).norm() > 1e-8)
        throw CompetitorOffBoundary("competitor does not start at y0");

    const double h = dx / substeps;
    double len_comp = 0.0;
    Vec prev = competitor(x0);
    for (int k = 1; k <= substeps; ++k) {
        const double x = x0 + k * h;
        const Vec cur = competitor(x);
        const double r = oracle.r(t, Vec{{x}}, cur);
        if (std::abs(r) > competitor_tol)
            throw CompetitorOffBoundary("competitor leaves the boundary, |r| = " +
                                        std::to_string(std::abs(r)));
        len_comp += std::sqrt(h * h + (cur - prev).squaredNorm());
        prev = cur;
    }

    const GeodesicTrajectory flow = geodesic_ode(oracle, t, x0, y0, x0 + dx, h, 1e-3);
    return (geodesic_length(flow) - len_comp) / dx;
}

namespace {

struct PathOutput {
    double max_abs_residual = 0.0;
    int band_exits = 0;
    int sign_violations = 0;
};

} // namespace

double ItoFlowResult::quantile(double q) const {
    if (final_abs_residual.empty()) return 0.0;
    std::vector<double> sorted = final_abs_residual;
    std::sort(sorted.begin(), sorted.end());
    const double pos = q * (sorted.size() - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    if (i + 1 >= sorted.size()) return sorted.back();
    const double w = pos - static_cast<double>(i);
    return (1.0 - w) * sorted[i] + w * sorted[i + 1];
}

ItoFlowResult ito_flow_simulate(const SetOracle& oracle, const DiffusionSpec& diffusion,
                                const TangentFieldSpec& fields, const std::vector<Vec>& y0_set,
                                double t0, double t1, int steps, int paths, std::uint64_t seed,
                                const ItoFlowOptions& options) {
    const int d = oracle.state_dim, m = oracle.value_dim;
    const int ny = static_cast<int>(y0_set.size());
    const double dt = (t1 - t0) / steps;
    const double sqdt = std::sqrt(dt);
    const double guard = options.step_guard * sqdt;

    ItoFlowResult res;
    res.dt = dt;
    res.seed = seed;
    res.paths = paths;
    res.y0_count = ny;
    res.t_grid.resize(steps + 1);
    for (int k = 0; k <= steps; ++k) res.t_grid[k] = t0 + k * dt;

    for (int k = 0; k <= steps; ++k) {
        const bool snap = (k == steps) ||
                          (options.snapshot_stride > 0 && k % options.snapshot_stride == 0);
        if (snap) res.snapshot_steps.push_back(k);
    }
    const int nsnap = static_cast<int>(res.snapshot_steps.size());
    res.x_snapshots.assign(nsnap, std::vector<Vec>(paths));
    res.y_snapshots.assign(nsnap, std::vector<std::vector<Vec>>(paths, std::vector<Vec>(ny)));
    res.max_residual_per_time.assign(steps + 1, 0.0);
    res.final_abs_residual.assign(static_cast<std::size_t>(paths) * ny, 0.0);
    if (options.store_paths) {
        res.x_paths.assign(paths, {});
        res.y_paths.assign(paths, std::vector<std::vector<Vec>>(ny));
    }

    const bool tangential = fields.regime == TangentFieldSpec::Regime::Tangential;

    // max over (path, y0) of |r| at each time step, merged after the loop so
    // the result does not depend on scheduling.
    std::vector<std::vector<double>> per_path_time_max(paths);
    std::vector<PathOutput> outputs(paths);

    auto run_path = [&](int p) {
        NormalStream stream(seed, static_cast<std::uint64_t>(p));
        PathOutput out;
        std::vector<double>& time_max = per_path_time_max[p];
        time_max.assign(steps + 1, 0.0);

        Vec x = diffusion.x0;
        std::vector<Vec> ys(y0_set.begin(), y0_set.end());
        std::vector<bool> frozen(ny, false);
        std::vector<double> final_j(ny, 0.0);

        auto record = [&](int step_idx) {
            const double t = res.t_grid[step_idx];
            for (int j = 0; j < ny; ++j) {
                if (frozen[j]) continue;
                const double r = oracle.r(t, x, ys[j]);
                time_max[step_idx] = std::max(time_max[step_idx], std::abs(r));
                if (tangential) {
                    if (std::abs(r) >= oracle.band_at(t, x)) {
                        ++out.band_exits;
                        frozen[j] = true;
                        final_j[j] = std::abs(r);
                    }
                } else if (fields.regime == TangentFieldSpec::Regime::Inward) {
                    if (r >= 0.0) ++out.sign_violations;
                } else {
                    if (r <= 0.0) ++out.sign_violations;
                }
            }
        };

        record(0);
        int snap_cursor = 0;
        auto maybe_snapshot = [&](int step_idx) {
            while (snap_cursor < nsnap && res.snapshot_steps[snap_cursor] == step_idx) {
                res.x_snapshots[snap_cursor][p] = x;
                for (int j = 0; j < ny; ++j) res.y_snapshots[snap_cursor][p][j] = ys[j];
                ++snap_cursor;
            }
        };
        maybe_snapshot(0);
        if (options.store_paths) {
            res.x_paths[p].push_back(x);
            for (int j = 0; j < ny; ++j) res.y_paths[p][j].push_back(ys[j]);
        }

        Vec dB(d);
        for (int k = 0; k < steps; ++k) {
            const double t = res.t_grid[k];
            for (int i = 0; i < d; ++i)
                dB(i) = sqdt * stream.at(static_cast<std::uint64_t>(k) * d + i);

            const Vec bv = diffusion.b(t, x);
            const Mat sv = diffusion.sigma(t, x);

            for (int j = 0; j < ny; ++j) {
                if (frozen[j]) continue;
                const DerivativeBundle bundle = oracle.bundle(t, x, ys[j]);
                GraphPoint gp;
                gp.t = t;
                gp.x = x;
                gp.y = ys[j];
                const double gnorm = bundle.grad_y.norm();
                if (gnorm < 0.5) throw OracleDerivativeFailure("degenerate y-gradient in flow");
                gp.normal = bundle.grad_y / gnorm;
                const IntrinsicDerivatives derivs = intrinsic_derivatives(gp, bundle);

                Vec drift = derivs.dt_V + derivs.dx_V * bv + 0.5 * trace_form(derivs.dxx_V, sv);
                Mat diff_mat = derivs.dx_V * sv;

                if (!fields.trivial()) {
                    // evaluate the driving fields at the boundary projection
                    Vec at = ys[j];
                    const double rj = oracle.r(t, x, ys[j]);
                    if (std::abs(rj) > oracle.graph_tol) {
                        at = oracle.projector ? oracle.projector(t, x, ys[j])
                                              : project_to_boundary(oracle, t, x, ys[j]);
                    }
                    const Vec n_at = oracle.grad_y(t, x, at).normalized();
                    if (fields.zeta) {
                        Mat zeta = fields.zeta(t, x, at);
                        zeta -= n_at * (n_at.transpose() * zeta); // tangential columns
                        const double kcorr =
                            (zeta.transpose() * derivs.dx_n * sv).trace() +
                            0.5 * (zeta.transpose() * derivs.dy_n * zeta).trace();
                        drift -= kcorr * gp.normal;
                        diff_mat += zeta;
                    }
                    if (fields.xi) {
                        Vec xi = fields.xi(t, x, at);
                        if (tangential) xi = tangent_project(n_at, xi);
                        drift += xi;
                    }
                }

                const Vec dy = drift * dt + diff_mat * dB;
                if (dy.norm() > guard)
                    throw StepTooLarge("flow increment " + std::to_string(dy.norm()) +
                                       " at t = " + std::to_string(t));
                ys[j] += dy;
            }
            x += bv * dt + sv * dB;
            record(k + 1);
            maybe_snapshot(k + 1);
            if (options.store_paths) {
                res.x_paths[p].push_back(x);
                for (int j = 0; j < ny; ++j) res.y_paths[p][j].push_back(ys[j]);
            }
        }

        const double tend = res.t_grid[steps];
        for (int j = 0; j < ny; ++j)
            res.final_abs_residual[static_cast<std::size_t>(p) * ny + j] =
                frozen[j] ? final_j[j] : std::abs(oracle.r(tend, x, ys[j]));
        outputs[p] = out;
    };

    const int workers = std::max(1, options.workers);
    if (workers == 1) {
        for (int p = 0; p < paths; ++p) run_path(p);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int wkr = 0; wkr < workers; ++wkr)
            pool.emplace_back([&]() {
                for (int p = next.fetch_add(1); p < paths; p = next.fetch_add(1)) run_path(p);
            });
        for (auto& th : pool) th.join();
    }

    for (int p = 0; p < paths; ++p) {
        res.band_exits += outputs[p].band_exits;
        res.sign_violations += outputs[p].sign_violations;
        for (int k = 0; k <= steps; ++k)
            res.max_residual_per_time[k] =
                std::max(res.max_residual_per_time[k], per_path_time_max[p][k]);
    }
    for (double v : res.max_residual_per_time) res.max_abs_residual = std::max(res.max_abs_residual, v);
    return res;
}

double surjectivity_check(const ItoFlowResult& result, const SetOracle& oracle,
                          int snapshot_index, int ref_count, const Vec& box_lo,
                          const Vec& box_hi) {
    const auto& xs = result.x_snapshots.at(snapshot_index);
    const auto& ys = result.y_snapshots.at(snapshot_index);
    const double t = result.t_grid[result.snapshot_steps.at(snapshot_index)];
    const int m = oracle.value_dim;

    double worst = 0.0;
    for (std::size_t p = 0; p < xs.size(); ++p) {
        Vec lo = box_lo, hi = box_hi;
        if (lo.size() != m || hi.size() != m) {
            // bounding box of the flowed cloud, padded
            lo = Vec::Constant(m, std::numeric_limits<double>::infinity());
            hi = Vec::Constant(m, -std::numeric_limits<double>::infinity());
            for (const Vec& y : ys[p]) {
                lo = lo.cwiseMin(y);
                hi = hi.cwiseMax(y);
            }
            const Vec pad = 0.3 * (hi - lo) + Vec::Constant(m, 1e-3);
            lo -= pad;
            hi += pad;
        }
        const std::vector<Vec> refs = boundary_sample(oracle, t, xs[p], ref_count, lo, hi);
        for (const Vec& ref : refs) {
            double best = std::numeric_limits<double>::infinity();
            for (const Vec& y : ys[p]) best = std::min(best, (ref - y).norm());
            worst = std::max(worst, best);
        }
    }
    return worst;
}

} // namespace svhjb
