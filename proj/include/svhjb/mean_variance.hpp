#pragma once

#include <cstdint>
#include <vector>

#include "svhjb/geometry.hpp"

namespace svhjb {

struct MVParams {
    double x0 = 0.0;
    double lambda = 1.0; // risk aversion, positive
    double T = 1.0;
    double delta_min = 0.0; // defaults to 1e-3 * T when zero

    double terminal_guard() const { return delta_min > 0.0 ? delta_min : 1e-3 * T; }
};

struct MVStatic {
    double V0;
    double y1;
    double y2;
};

// Static optimum of the scalarized problem and its attaining point.
MVStatic static_solution(const MVParams& params);

// Moving weight lambda e^{T-t} / (e^T - lambda (x_t - x_0)).
double moving_scalarization(const MVParams& params, double t, double x_path_value);

// Optimal feedback control and value along the optimal trajectory.
double optimal_control(const MVParams& params, double t, double x_value);
double value_process(const MVParams& params, double t, double x_value);

// Companion process U1 - X along the optimal flow.
double closed_form_gap(const MVParams& params, double t, double x_value);

// Closed-form objective E[X_t] - (lambda/2) Var(X_t) of the optimal control
// at a truncated horizon; equals the static value at t = T.
double truncated_objective(const MVParams& params, double t_end);

struct MVPath {
    std::vector<double> t;
    std::vector<double> X;
    std::vector<double> U1;
    std::vector<double> Lambda;
    std::vector<double> V;
    bool admissible = true;       // sup (X - x0) < e^T / lambda throughout
    double max_cf_defect = 0.0;   // deviation from the closed-form gap
};

struct MVSimulationResult {
    double dt = 0.0;
    double t_end = 0.0;
    std::uint64_t seed = 0;
    int paths = 0;

    double mc_objective = 0.0;
    double mc_std_error = 0.0; // delta-method standard error of E - (lambda/2) Var
    double target = 0.0;       // closed-form objective at t_end
    double z_score = 0.0;

    double max_cf_defect = 0.0;
    int positivity_violations = 0;    // U1 - X must stay positive
    int admissibility_violations = 0; // sup (X - x0) < e^T / lambda

    std::vector<MVPath> stored_paths;
};

// Euler-Maruyama on dX = (1 + phi1)(U1 - X)(dt + dB), dU1 = phi1 (U1 - X) dB
// from the static optimizer. The grid must stop at T - delta_min.
MVSimulationResult simulate_optimal(const MVParams& params, double dt, int paths,
                                    std::uint64_t seed, int store_paths = 0,
                                    bool zero_noise = false);

// Exact optimal path sampled on a uniform grid (no discretization error):
// the recentred gap is a geometric Brownian motion.
MVPath closed_form_path(const MVParams& params, int steps, std::uint64_t seed);

// Angle between (1, -Lambda_t/2) and the transformed-set normal at
// (t, X, psi(Y)), up to sign; zero along optimal paths.
double time_consistency_check(const MVParams& params, double t, double x_value,
                              double u1_value);

} // namespace svhjb
