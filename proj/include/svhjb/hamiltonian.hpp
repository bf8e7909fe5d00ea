#pragma once

#include <functional>
#include <optional>

#include "svhjb/geometry.hpp"

namespace svhjb {

// Finite control grid over a box; endpoints included.
struct ControlGrid {
    Vec lo;
    Vec hi;
    int points_per_dim = 64;
};

// Worked problems with exact optimizers of the inner supremum.
enum class ClosedFormTag {
    None,
    AdditiveUnitBall, // d=1, m=2, b=0, sigma=1, f = f0(t,x) + a, |a| <= 1
    MeanVariance,     // transformed mean-variance problem, scalar control
};

struct ControlProblem {
    int d = 1;
    int m = 2;
    int control_dim = 1;

    std::function<Vec(double, const Vec&, const Vec&)> b;     // (t,x,a) -> d
    std::function<Mat(double, const Vec&, const Vec&)> sigma; // (t,x,a) -> d x d
    std::function<Vec(double, const Vec&, const Vec&, const Mat&, const Vec&)> f;
    std::function<Vec(const Vec&)> g;

    std::optional<ControlGrid> grid;
    ClosedFormTag tag = ClosedFormTag::None;
    bool z_affine = true;
};

struct HamiltonianValue {
    enum class Inner { ClosedForm, Iterative, Grid };
    double value = 0.0;
    Vec a_star;
    Mat zeta_star; // m x d, tangential columns
    Inner inner_status = Inner::Grid;
    double lambda_min = 0.0; // smallest tangential eigenvalue of dy_n
};

struct HJBResidual {
    double n_form = 0.0;
    double r_form = 0.0;
    double lambda_min = 0.0;
    Vec a_star;
    Mat zeta_star;
};

// Quadratic-covariation correction tr(zeta^T dx_n sigma + zeta^T dy_n zeta / 2) n.
// Throws NonTangentialZeta unless the columns are tangential (the check can
// be bypassed to probe the pure-normal identity tr((n n^T z)^T dy_n (n n^T z)) = 0).
Vec correction_K(const GraphPoint& point, const IntrinsicDerivatives& derivs,
                 const Mat& sigma_val, const Mat& zeta, bool enforce_tangential = true);

// n . [h(t,x,y, dx_V, dxx_V, a, zeta)] for one candidate pair.
double hamiltonian_objective(const ControlProblem& problem, const GraphPoint& point,
                             const IntrinsicDerivatives& derivs, const Vec& a, const Mat& zeta);

// Supremum of the scalarized drift over controls and tangential fields.
// For z-affine drivers the zeta-supremum is a linear solve against the
// tangential restriction of dy_n; otherwise a damped Newton iteration starts
// from that solution. Controls run over the grid unless a closed-form tag
// identifies the optimizer exactly.
HamiltonianValue hamiltonian_sup(const ControlProblem& problem, const SetOracle& oracle,
                                 const GraphPoint& point);

// HJB residual in both forms: n_form from intrinsic derivatives and the
// Hamiltonian, r_form as the raw signed-distance expression evaluated at the
// same optimizer. Both vanish together on classical solutions.
HJBResidual hjb_residual(const ControlProblem& problem, const SetOracle& oracle,
                         const GraphPoint& point);

// n . [dt_V + tr(dxx_V) / 2]; zero for drift-free unit-diffusion families
// whose defining data solves the heat equation.
double set_heat_residual(const SetOracle& oracle, const GraphPoint& point);

struct IntervalSet; // reference_sets.hpp

// Standard HJB residuals of the two interval endpoints (inf form at the
// lower sheet, sup form at the upper). Requires d arbitrary, m = 1.
std::pair<double, double> scalar_reduction_residual(const ControlProblem& problem,
                                                    const IntervalSet& interval, double t,
                                                    const Vec& x);

// Residual of the product-set equation for the d = m = 1 heat-interval
// family, evaluated from a product-graph oracle at yhat = (x, y).
double hat_equation_residual(const SetOracle& product_oracle, double t, const Vec& yhat);

// Benchmark problem factories. The mean-variance horizon lives on the
// oracle, so the problem itself is horizon-free.
ControlProblem make_additive_ball_problem(
    std::function<Vec(double, const Vec&)> f0 = nullptr, int grid_points = 64);
ControlProblem make_mv_problem();

// Random three-point collinearity check of z-affinity of the driver.
bool check_z_affinity(const ControlProblem& problem, double t, const Vec& x, const Vec& y,
                      const Vec& a, std::uint64_t seed = 11, int trials = 16,
                      double tol = 1e-8);

} // namespace svhjb
