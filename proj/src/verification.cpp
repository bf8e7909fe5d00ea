#include "svhjb/verification.hpp"

#include <algorithm>
#include <cmath>

#include "svhjb/rng.hpp"

namespace svhjb {

OptimalFeedback feedback_from_hamiltonian(const ControlProblem& problem,
                                          const SetOracle& oracle) {
    OptimalFeedback fb;
    fb.source = problem.tag == ClosedFormTag::None ? OptimalFeedback::Source::HamiltonianArgmax
                                                   : OptimalFeedback::Source::ClosedFormTag;

    auto argmax = [problem, oracle](double t, const Vec& x, const Vec& y) {
        return hamiltonian_sup(problem, oracle, make_graph_point(oracle, t, x, y));
    };
    fb.I1 = [argmax](double t, const Vec& x, const Vec& y) { return argmax(t, x, y).a_star; };
    fb.I2 = [argmax](double t, const Vec& x, const Vec& y) { return argmax(t, x, y).zeta_star; };

    auto tilde = [problem, oracle, argmax](double t, const Vec& x, const Vec& y) {
        const GraphPoint point = make_graph_point(oracle, t, x, y);
        const IntrinsicDerivatives derivs = intrinsic_derivatives(oracle, point);
        const HamiltonianValue hv = argmax(t, x, y);
        const Vec bv = problem.b(t, x, hv.a_star);
        const Mat sv = problem.sigma(t, x, hv.a_star);
        const Vec h = derivs.dx_V * bv + 0.5 * trace_form(derivs.dxx_V, sv) -
                      correction_K(point, derivs, sv, hv.zeta_star) +
                      problem.f(t, x, y, derivs.dx_V * sv + hv.zeta_star, hv.a_star);
        return Vec(-(derivs.dt_V + h));
    };
    fb.I3_tilde = tilde;
    fb.I3 = [oracle, tilde](double t, const Vec& x, const Vec& y) {
        const Vec n = normal(oracle, t, x, y);
        return tangent_project(n, tilde(t, x, y));
    };
    return fb;
}

VerificationRun verification_sde_simulate(const ControlProblem& problem, const SetOracle& oracle,
                                          const OptimalFeedback& feedback,
                                          const GraphPoint& start, double t1, int steps,
                                          int paths, std::uint64_t seed,
                                          const VerificationOptions& options) {
    const int d = oracle.state_dim;
    const double t0 = start.t;
    const double dt = (t1 - t0) / steps;
    const double sqdt = std::sqrt(dt);
    const double guard = options.step_guard * sqdt;

    VerificationRun run;
    run.seed = seed;
    run.paths = paths;
    run.t_grid.resize(steps + 1);
    for (int k = 0; k <= steps; ++k) run.t_grid[k] = t0 + k * dt;
    if (options.store_paths) {
        run.x_paths.assign(paths, {});
        run.y_paths.assign(paths, {});
    }

    double final_sum = 0.0;
    for (int p = 0; p < paths; ++p) {
        NormalStream stream(seed, static_cast<std::uint64_t>(p));
        Vec x = start.x;
        Vec y = start.y;
        if (options.store_paths) {
            run.x_paths[p].push_back(x);
            run.y_paths[p].push_back(y);
        }
        Vec dB(d);
        for (int k = 0; k < steps; ++k) {
            const double t = run.t_grid[k];
            for (int i = 0; i < d; ++i)
                dB(i) = sqdt * stream.at(static_cast<std::uint64_t>(k) * d + i);

            // evaluate every coefficient at the boundary projection
            const Vec at = oracle.projector ? oracle.projector(t, x, y)
                                            : project_to_boundary(oracle, t, x, y);
            const GraphPoint gp = make_graph_point(oracle, t, x, at);
            const IntrinsicDerivatives derivs = intrinsic_derivatives(oracle, gp);

            const Vec a = feedback.I1(t, x, at);
            const Mat zeta = feedback.I2(t, x, at);
            const Vec bv = problem.b(t, x, a);
            const Mat sv = problem.sigma(t, x, a);
            const Mat diff_mat = derivs.dx_V * sv + zeta;

            const Vec drift_driver = -problem.f(t, x, at, diff_mat, a);
            const Vec drift_full = derivs.dt_V + derivs.dx_V * bv +
                                   0.5 * trace_form(derivs.dxx_V, sv) -
                                   correction_K(gp, derivs, sv, zeta) + feedback.I3(t, x, at);
            run.max_drift_identity_gap = std::max(run.max_drift_identity_gap,
                                                  (drift_full - drift_driver).norm());

            const Vec dy = drift_driver * dt + diff_mat * dB;
            if (dy.norm() > guard) ++run.step_guard_trips;
            y += dy;
            x += bv * dt + sv * dB;

            const double r = oracle.r(t + dt, x, y);
            run.max_abs_residual = std::max(run.max_abs_residual, std::abs(r));
            if (options.store_paths) {
                run.x_paths[p].push_back(x);
                run.y_paths[p].push_back(y);
            }
        }
        final_sum += std::abs(oracle.r(t1, x, y));
    }
    run.final_abs_residual_mean = final_sum / paths;
    return run;
}

double ScalarHJBSolution::lower_at(double t, double x) const {
    // bilinear interpolation on the stored mesh
    auto locate = [](const std::vector<double>& grid, double v, int& i, double& w) {
        const int n = static_cast<int>(grid.size());
        if (v <= grid.front()) { i = 0; w = 0.0; return; }
        if (v >= grid.back()) { i = n - 2; w = 1.0; return; }
        i = static_cast<int>((v - grid.front()) / (grid[1] - grid[0]));
        i = std::clamp(i, 0, n - 2);
        w = (v - grid[i]) / (grid[i + 1] - grid[i]);
    };
    int it, ix;
    double wt, wx;
    locate(ts, t, it, wt);
    locate(xs, x, ix, wx);
    auto val = [&](const Mat& m) {
        return (1 - wt) * ((1 - wx) * m(it, ix) + wx * m(it, ix + 1)) +
               wt * ((1 - wx) * m(it + 1, ix) + wx * m(it + 1, ix + 1));
    };
    return val(lower);
}

double ScalarHJBSolution::upper_at(double t, double x) const {
    ScalarHJBSolution tmp;
    // reuse lower_at's interpolation by swapping the field
    tmp.ts = ts;
    tmp.xs = xs;
    tmp.lower = upper;
    return tmp.lower_at(t, x);
}

ScalarHJBSolution scalar_hjb_solve(const ControlProblem& problem, double T, double x_lo,
                                   double x_hi, int nx, const ScalarHJBOptions& options) {
    if (problem.d != 1 || problem.m != 1) throw Error("scalar solver needs d = m = 1");
    if (!problem.grid) throw EmptyControlGrid("scalar solver optimizes over a grid");
    if (nx < 8) throw GridTooCoarse("nx = " + std::to_string(nx));
    const double dx = (x_hi - x_lo) / nx; // periodic: xs[0..nx-1], wrap at x_hi
    if (dx > 0.2) throw GridTooCoarse("dx = " + std::to_string(dx));

    // CFL bound from coefficient bounds sampled over the grid box
    const std::vector<Vec> controls = [&] {
        ControlGrid g = *problem.grid;
        std::vector<Vec> out;
        const int n = g.points_per_dim;
        if (n < 1) throw EmptyControlGrid("empty control grid");
        out.reserve(n);
        for (int k = 0; k < n; ++k) {
            Vec a(g.lo.size());
            for (int j = 0; j < a.size(); ++j) {
                const double w = (n == 1) ? 0.5 : static_cast<double>(k) / (n - 1);
                a(j) = g.lo(j) + w * (g.hi(j) - g.lo(j));
            }
            out.push_back(std::move(a));
        }
        return out;
    }();

    double bmax = 0.0, s2max = 0.0;
    for (int i = 0; i < nx; i += std::max(1, nx / 16))
        for (const Vec& a : controls) {
            const Vec x{{x_lo + i * dx}};
            bmax = std::max(bmax, std::abs(problem.b(0.0, x, a)(0)));
            s2max = std::max(s2max, std::pow(problem.sigma(0.0, x, a)(0, 0), 2));
        }
    const double cfl_dt = options.cfl_safety / (s2max / (dx * dx) + bmax / dx + 1e-300);
    double dt = options.dt_override > 0.0 ? options.dt_override : cfl_dt;
    if (dt > cfl_dt + 1e-15)
        throw CFLViolation("dt = " + std::to_string(dt) + " exceeds the CFL bound " +
                           std::to_string(cfl_dt));
    int nt = static_cast<int>(std::ceil(T / dt));
    // thin the stored mesh: march every step, keep a uniform subsample
    const int stride = std::max(1, (nt + 127) / 128);
    nt = stride * ((nt + stride - 1) / stride);
    dt = T / nt;
    const int nstore = nt / stride;

    ScalarHJBSolution sol;
    sol.ts.resize(nstore + 1);
    for (int k = 0; k <= nstore; ++k) sol.ts[k] = T * k / nstore;
    sol.xs.resize(nx);
    for (int i = 0; i < nx; ++i) sol.xs[i] = x_lo + i * dx;
    sol.lower = Mat(nstore + 1, nx);
    sol.upper = Mat(nstore + 1, nx);

    Vec cur_up(nx), cur_lo(nx), next_up(nx), next_lo(nx);
    for (int i = 0; i < nx; ++i) {
        const double g = problem.g(Vec{{sol.xs[i]}})(0);
        cur_up(i) = g;
        cur_lo(i) = g;
    }
    sol.lower.row(nstore) = cur_lo.transpose();
    sol.upper.row(nstore) = cur_up.transpose();

    for (int k = nt - 1; k >= 0; --k) {
        const double t = T * (k + 1) / nt; // coefficients at the known layer
        for (int i = 0; i < nx; ++i) {
            const int ip = (i + 1) % nx, im = (i + nx - 1) % nx;
            const Vec x{{sol.xs[i]}};
            auto step_value = [&](const Vec& v, bool maximize) {
                const double fwd = (v(ip) - v(i)) / dx;
                const double bwd = (v(i) - v(im)) / dx;
                const double central = (v(ip) - v(im)) / (2.0 * dx);
                const double second = (v(ip) - 2.0 * v(i) + v(im)) / (dx * dx);
                bool first = true;
                double best = 0.0;
                for (const Vec& a : controls) {
                    const double bv = problem.b(t, x, a)(0);
                    const double sv = problem.sigma(t, x, a)(0, 0);
                    const double upwind = bv >= 0.0 ? fwd : bwd;
                    const double val = bv * upwind + 0.5 * sv * sv * second +
                                       problem.f(t, x, Vec{{v(i)}}, Mat{{central * sv}}, a)(0);
                    if (first || (maximize ? val > best : val < best)) {
                        best = val;
                        first = false;
                    }
                }
                return v(i) + dt * best;
            };
            next_up(i) = step_value(cur_up, true);
            next_lo(i) = step_value(cur_lo, false);
        }
        cur_up.swap(next_up);
        cur_lo.swap(next_lo);
        if (k % stride == 0) {
            sol.upper.row(k / stride) = cur_up.transpose();
            sol.lower.row(k / stride) = cur_lo.transpose();
        }
    }

    sol.degenerate = (sol.upper - sol.lower).cwiseAbs().maxCoeff() <= options.degeneracy_tol;
    return sol;
}

} // namespace svhjb
