#pragma once

#include <functional>

#include "svhjb/geometry.hpp"

namespace svhjb {

// ---------------------------------------------------------------------------
// Ball family: V(t,x) = { y : |y - w(t,x)| <= u(t,x) }.
// All derivative slots default to zero when left empty.
// ---------------------------------------------------------------------------
struct BallSet {
    int d = 1;
    int m = 2;

    std::function<Vec(double, const Vec&)> w;        // center, size m
    std::function<Vec(double, const Vec&)> w_t;      // time derivative
    std::function<Mat(double, const Vec&)> w_x;      // m x d, column i = d w / d x_i
    std::function<Vec(double, const Vec&, int, int)> w_xx; // second derivative in (x_i, x_j)

    std::function<double(double, const Vec&)> u;     // radius, positive
    std::function<double(double, const Vec&)> u_t;
    std::function<Vec(double, const Vec&)> u_x;      // size d
    std::function<Mat(double, const Vec&)> u_xx;     // d x d

    double horizon = std::numeric_limits<double>::infinity();
};

SetOracle ball_oracle(const BallSet& ball);

BallSet make_static_ball(const Vec& center, double radius, int d = 1);
BallSet make_translating_ball();                       // d=1, m=2, w=(x,0), u=1
BallSet make_heat_ball(double T, double amplitude);    // w = a e^{-(T-t)/2} (sin x, cos x), u = T-t
BallSet make_const_heat_ball(double T, const Vec& w0); // constant center, u = T-t
BallSet make_exp_radius_ball(double T);                // w = 0, u = e^{x + (T-t)/2}
BallSet make_poly_radius_ball(double T);               // w = 0, u = (T-t)^2 + 1 (heat-defect control)

// ---------------------------------------------------------------------------
// Mean-variance family. In transformed coordinates the boundary is the
// parabola y2 = phi1(t) (y1 - x)^2 with phi1 = 1/(e^{T-t}-1); raw coordinates
// keep the original epigraph. The two are conjugate under
// psi(y1,y2) = (y1, y2 - y1^2).
// ---------------------------------------------------------------------------
enum class MVCoords { Raw, Transformed };

double mv_phi1(double T, double t);
double mv_phi2(double T, double t, double x, double y1);
double mv_phi3(double T, double t, double x, double y1);

SetOracle mean_variance_oracle(double T, MVCoords coords);

// ---------------------------------------------------------------------------
// Nonconvex family: closed boundary curve
//   Y(t, theta) = (tau cos th, tau [1 + tau^2 cos^2 th] sin th),  tau = T - t,
// convex exactly when tau <= 1/sqrt(2). Signed distance by a theta-grid with
// Newton refinement of the squared-distance objective; derivatives by finite
// differences only.
// ---------------------------------------------------------------------------
struct NonconvexSet {
    double T = 1.0;
    int grid = 2048;
    int newton_iters = 10;
};

Eigen::Vector2d nonconvex_boundary_point(const NonconvexSet& set, double t, double theta);
SetOracle nonconvex_oracle(const NonconvexSet& set);
SetOracle nonconvex_oracle(double T);

// Numerical convexity of the time-t slice (turning test on a sampled
// boundary polygon). The analytic threshold is tau <= 1/sqrt(2).
bool convexity_check(const NonconvexSet& set, double t, int samples = 4096);
bool convexity_analytic(const NonconvexSet& set, double t);

// Largest signed distance of a midpoint of two sampled boundary points;
// a positive value is an explicit nonconvexity witness.
double midpoint_violation(const NonconvexSet& set, double t, int samples = 512);

// ---------------------------------------------------------------------------
// Scalar interval family V(t,x) = [lower, upper], m = 1.
// ---------------------------------------------------------------------------
struct IntervalSet {
    std::function<double(double, const Vec&)> lower;
    std::function<double(double, const Vec&)> upper;

    std::function<double(double, const Vec&)> lower_t, upper_t;
    std::function<Vec(double, const Vec&)> lower_x, upper_x; // size d
    std::function<Mat(double, const Vec&)> lower_xx, upper_xx;

    int d = 1;
    double horizon = std::numeric_limits<double>::infinity();
};

SetOracle interval_oracle(const IntervalSet& interval);

// ---------------------------------------------------------------------------
// Product-graph set: the time slice { (x, y) : y in V(t, x) } viewed as one
// set in R^{d+m} with its own signed distance, computed by joint projection
// onto the graph surface. Derivatives are finite-difference only.
// ---------------------------------------------------------------------------
SetOracle product_graph_oracle(const SetOracle& inner);

} // namespace svhjb
