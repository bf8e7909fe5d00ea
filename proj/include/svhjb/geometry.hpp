#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <vector>

#include "svhjb/errors.hpp"

namespace svhjb {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Per-variable finite-difference step sizes.
struct FdSteps {
    double first = 1e-4;  // gradients
    double second = 1e-3; // Hessians
};

// Raw derivatives of the signed distance r(t, x, y) at one point.
// hess_xy column i holds the mixed derivative in (x_i, y).
struct DerivativeBundle {
    double grad_t = 0.0;
    Vec grad_x; // d
    Vec grad_y; // m
    Mat hess_xx; // d x d
    Mat hess_xy; // m x d
    Mat hess_yy; // m x m
};

// A time-indexed set family presented through its signed distance function
// r(t, x, y), negative inside the set. Derivative claims are only trusted on
// the tube |r| < epsilon_band around the boundary graph. Families that
// collapse at a finite horizon refuse derivative evaluation past
// horizon - delta_min.
struct SetOracle {
    int state_dim = 0; // d
    int value_dim = 0; // m

    std::function<double(double, const Vec&, const Vec&)> r_eval;

    // Analytic derivative bundle; when absent, central finite differences
    // with fd_steps are used.
    std::function<DerivativeBundle(double, const Vec&, const Vec&)> analytic;

    // Optional closed-form projection onto the boundary (used as a fast path
    // by flow simulations; the generic damped iteration is always available).
    std::function<Vec(double, const Vec&, const Vec&)> projector;

    // Optional state-dependent tube half-width; falls back to epsilon_band.
    std::function<double(double, const Vec&)> band_fn;

    FdSteps fd_steps;
    double epsilon_band = 0.25;
    double graph_tol = 1e-8;

    double horizon = std::numeric_limits<double>::infinity();
    double delta_min = 0.0;

    bool has_analytic() const { return static_cast<bool>(analytic); }

    double band_at(double t, const Vec& x) const {
        return band_fn ? band_fn(t, x) : epsilon_band;
    }

    void check_time(double t) const {
        if (t > horizon - delta_min)
            throw TooCloseToTerminal("derivative evaluation at t too close to collapse time");
    }

    double r(double t, const Vec& x, const Vec& y) const { return r_eval(t, x, y); }

    // Analytic bundle when available, otherwise finite differences.
    // Enforces the terminal guard but not the tube: flows evaluate the
    // standard smooth extension off the graph.
    DerivativeBundle bundle(double t, const Vec& x, const Vec& y) const;

    DerivativeBundle fd_bundle(double t, const Vec& x, const Vec& y) const;

    // y-gradient alone (cheaper than a full bundle on the FD path).
    Vec grad_y(double t, const Vec& x, const Vec& y) const;
};

// A point on the boundary graph with its cached frame.
struct GraphPoint {
    double t = 0.0;
    Vec x; // d
    Vec y; // m
    Vec normal; // m, unit
    Mat tangent_basis; // m x (m-1), orthonormal columns
};

// Intrinsic derivatives of the set family at a graph point. dxx_V[k](i, j)
// is the k-th component of the second derivative in (x_i, x_j); the first
// index of the pair rides on the shape-operator term, so the tensor is not
// symmetric in general even though [dxx_V . n] is.
struct IntrinsicDerivatives {
    Vec dt_V; // m
    Mat dx_V; // m x d, column i parallel to the normal
    std::vector<Mat> dxx_V; // m matrices of size d x d
    Mat dx_n; // m x d, columns tangential
    Mat dy_n; // m x m, symmetric shape operator, normal in its kernel
};

double signed_distance(const SetOracle& oracle, double t, const Vec& x, const Vec& y);

// Outward unit normal at a boundary point. Throws NotOnGraph when |r| exceeds
// graph_tol and DegenerateGradient when |grad_y r| < 0.5.
Vec normal(const SetOracle& oracle, double t, const Vec& x, const Vec& y);

// Nearest boundary point, by the damped fixed point y <- y - r * grad_y r.
// Requires |r| < band; converges to |r| <= 1e-10.
Vec project_to_boundary(const SetOracle& oracle, double t, const Vec& x, const Vec& y);

// Orthonormal completion of the normal: m x (m-1) matrix with columns
// spanning the tangent space. Deterministic: columns are built from the
// standard basis vectors least aligned with the normal.
Mat tangent_basis(const Vec& normal);

// (I - n n^T) v.
Vec tangent_project(const Vec& normal, const Vec& v);

GraphPoint make_graph_point(const SetOracle& oracle, double t, Vec x, Vec y);

IntrinsicDerivatives intrinsic_derivatives(const SetOracle& oracle, const GraphPoint& point);
IntrinsicDerivatives intrinsic_derivatives(const GraphPoint& point, const DerivativeBundle& bundle);

// Central second-order finite differences of r with the oracle's steps.
// Requires the point to lie inside the tube.
DerivativeBundle fd_derivative_bundle(const SetOracle& oracle, double t, const Vec& x, const Vec& y);

// Boundary points obtained by projecting a Halton cloud drawn in [lo, hi].
// Throws NoBoundaryFound when no seed projects onto the boundary.
std::vector<Vec> boundary_sample(const SetOracle& oracle, double t, const Vec& x, int count,
                                 const Vec& box_lo, const Vec& box_hi);

// tr(sigma^T M sigma) for each component matrix of a dxx_V tensor.
Vec trace_form(const std::vector<Mat>& dxx_V, const Mat& sigma);

} // namespace svhjb
