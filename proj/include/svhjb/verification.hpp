#pragma once

#include <cstdint>

#include "svhjb/hamiltonian.hpp"

namespace svhjb {

// Feedback fields of the verified optimal control: I1 the control, I2 the
// tangential field from the Hamiltonian argmax, I3 the tangent-projected
// drift defect. Where the HJB equation holds, the untruncated defect is
// already tangential (n . I3_tilde = 0).
struct OptimalFeedback {
    std::function<Vec(double, const Vec&, const Vec&)> I1;
    std::function<Mat(double, const Vec&, const Vec&)> I2;
    std::function<Vec(double, const Vec&, const Vec&)> I3;
    std::function<Vec(double, const Vec&, const Vec&)> I3_tilde;

    enum class Source { ClosedFormTag, HamiltonianArgmax } source = Source::HamiltonianArgmax;
};

OptimalFeedback feedback_from_hamiltonian(const ControlProblem& problem, const SetOracle& oracle);

struct VerificationOptions {
    bool store_paths = false;
    double step_guard = 50.0;
};

struct VerificationRun {
    std::vector<double> t_grid;
    std::uint64_t seed = 0;
    int paths = 0;

    double max_abs_residual = 0.0;
    double final_abs_residual_mean = 0.0;
    // max over steps of |drift(full form) - drift(driver form)|; the two
    // coincide exactly where the HJB residual vanishes.
    double max_drift_identity_gap = 0.0;
    int step_guard_trips = 0;

    std::vector<std::vector<Vec>> x_paths; // [path][step], stored on request
    std::vector<std::vector<Vec>> y_paths;
};

// Euler-Maruyama for the coupled optimal-state system
//   dX = b(., I1) dt + sigma(., I1) dB
//   dY = -f(., dx_V sigma + I2, I1) dt + [dx_V sigma + I2] dB,
// with all coefficients evaluated at the boundary projection of Y. The
// equivalent drift dt_V + h0 + I3 is evaluated alongside and the gap
// reported.
VerificationRun verification_sde_simulate(const ControlProblem& problem, const SetOracle& oracle,
                                          const OptimalFeedback& feedback,
                                          const GraphPoint& start, double t1, int steps,
                                          int paths, std::uint64_t seed,
                                          const VerificationOptions& options = {});

// ---------------------------------------------------------------------------
// Scalar (d = m = 1) finite-difference solver for the interval endpoints:
// explicit monotone upwind scheme, backward from the terminal datum.
// ---------------------------------------------------------------------------
struct ScalarHJBSolution {
    std::vector<double> ts; // increasing, ts.back() = T
    std::vector<double> xs;
    Mat lower; // (nt x nx)
    Mat upper;
    bool periodic = true;
    bool degenerate = false; // the two endpoint functions coincide

    double lower_at(double t, double x) const;
    double upper_at(double t, double x) const;
};

struct ScalarHJBOptions {
    double cfl_safety = 0.9;
    double dt_override = 0.0; // 0: choose from the CFL bound
    double degeneracy_tol = 1e-9;
};

ScalarHJBSolution scalar_hjb_solve(const ControlProblem& problem, double T, double x_lo,
                                   double x_hi, int nx, const ScalarHJBOptions& options = {});

} // namespace svhjb
