#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "svhjb/geometry.hpp"

namespace svhjb {

// ---------------------------------------------------------------------------
// Deterministic boundary flow in a scalar state variable: RK4 integration of
//   Y'(x) = -grad_x r(x, Y) * grad_y r(x, Y),
// which keeps Y on the boundary exactly in continuous time.
// ---------------------------------------------------------------------------
struct GeodesicTrajectory {
    std::vector<double> xs;
    std::vector<Vec> ys;
    double max_abs_r = 0.0;
};

GeodesicTrajectory geodesic_ode(const SetOracle& oracle, double t, double x0, const Vec& y0,
                                double x1, double step, double tol_geo = 1e-6);

double geodesic_length(const GeodesicTrajectory& traj);

// (length of the flow curve - length of a competitor boundary curve) / dx
// over [x0, x0 + dx]. The competitor must start at y0 and stay on the
// boundary within tol.
double length_comparison(const SetOracle& oracle, double t, double x0, const Vec& y0,
                         const std::function<Vec(double)>& competitor, double dx,
                         int substeps = 64, double competitor_tol = 1e-6);

// ---------------------------------------------------------------------------
// Stochastic boundary flow
// ---------------------------------------------------------------------------
struct TangentFieldSpec {
    enum class Regime { Tangential, Inward, Outward };

    std::function<Vec(double, const Vec&, const Vec&)> xi;   // (t, x, y) -> m, null = 0
    std::function<Mat(double, const Vec&, const Vec&)> zeta; // (t, x, y) -> m x d, null = 0
    Regime regime = Regime::Tangential;
    double lipschitz_y = 0.0;

    bool trivial() const { return !xi && !zeta; }
};

struct DiffusionSpec {
    std::function<Vec(double, const Vec&)> b;     // (t, x) -> d
    std::function<Mat(double, const Vec&)> sigma; // (t, x) -> d x d
    Vec x0;
};

struct ItoFlowOptions {
    int snapshot_stride = 0;    // 0: snapshot only the final time
    bool store_paths = false;   // keep full trajectories (small runs only)
    double step_guard = 50.0;   // |dY| <= step_guard * sqrt(dt)
    int workers = 1;
};

struct ItoFlowResult {
    std::vector<double> t_grid;
    double dt = 0.0;
    std::uint64_t seed = 0;
    int paths = 0;
    int y0_count = 0;

    double max_abs_residual = 0.0;
    std::vector<double> max_residual_per_time; // over paths and starting points
    std::vector<double> final_abs_residual;    // flattened (path, y0)
    int band_exits = 0;
    int sign_violations = 0;

    std::vector<int> snapshot_steps;
    std::vector<std::vector<Vec>> x_snapshots;              // [snap][path]
    std::vector<std::vector<std::vector<Vec>>> y_snapshots; // [snap][path][y0]

    std::vector<std::vector<Vec>> x_paths;              // stored only on request
    std::vector<std::vector<std::vector<Vec>>> y_paths; // [path][y0][step]

    double quantile(double q) const; // of final_abs_residual
};

// Euler-Maruyama simulation of the boundary flow driven by (xi, zeta) with
// shared Brownian increments between the state and every starting point.
// Fields are evaluated at the projection of the current point onto the
// boundary; zeta is projected onto the tangent space there, and xi as well
// in the tangential regime.
ItoFlowResult ito_flow_simulate(const SetOracle& oracle, const DiffusionSpec& diffusion,
                                const TangentFieldSpec& fields, const std::vector<Vec>& y0_set,
                                double t0, double t1, int steps, int paths, std::uint64_t seed,
                                const ItoFlowOptions& options = {});

// One-sided Hausdorff defect of the flowed cloud against freshly sampled
// boundary points at a snapshot time: sup over reference boundary samples of
// the distance to the cloud, maximized over paths. The reference samples are
// drawn by projecting a Halton cloud from [box_lo, box_hi]; when the box is
// empty it is derived from the flowed cloud itself.
double surjectivity_check(const ItoFlowResult& result, const SetOracle& oracle,
                          int snapshot_index, int ref_count = 256, const Vec& box_lo = Vec(),
                          const Vec& box_hi = Vec());

} // namespace svhjb
