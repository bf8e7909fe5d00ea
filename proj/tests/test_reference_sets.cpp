#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "svhjb/reference_sets.hpp"
#include "svhjb/rng.hpp"

using namespace svhjb;

namespace {

const double kLn2 = std::log(2.0);

Vec mv_boundary_point(double T, double t, double x, double y1) {
    const double p1 = mv_phi1(T, t);
    return Vec{{y1, p1 * (y1 - x) * (y1 - x)}};
}

} // namespace

TEST_CASE("ball radius must stay positive") {
    BallSet ball;
    ball.d = 1;
    ball.m = 2;
    ball.w = [](double, const Vec&) { return Vec::Zero(2); };
    ball.u = [](double, const Vec& x) { return 1.0 - x(0); };
    const SetOracle oracle = ball_oracle(ball);
    CHECK_THROWS_AS(oracle.r(0.0, Vec{{2.0}}, Vec{{0.5, 0.0}}), RadiusNonpositive);
}

TEST_CASE("translating ball geometry") {
    const SetOracle oracle = ball_oracle(make_translating_ball());
    // dx_V column equals (w_x . n) n = n1 * n
    const Vec x{{0.4}};
    const Vec y{{1.4, 0.0}}; // boundary point with n = (1, 0)
    const GraphPoint p = make_graph_point(oracle, 0.0, x, y);
    const IntrinsicDerivatives derivs = intrinsic_derivatives(oracle, p);
    CHECK(derivs.dx_V(0, 0) == doctest::Approx(1.0));
    CHECK(derivs.dx_V(1, 0) == doctest::Approx(0.0));
}

TEST_CASE("exp-radius solves the radius heat equation") {
    const double h = 1e-5;
    auto rad = [](double t, double xx) { return std::exp(xx + 0.5 * (1.0 - t)); };
    const double ut = (rad(0.3 + h, 0.2) - rad(0.3 - h, 0.2)) / (2 * h);
    const double uxx = (rad(0.3, 0.2 + h) - 2 * rad(0.3, 0.2) + rad(0.3, 0.2 - h)) / (h * h);
    CHECK(std::abs(ut + 0.5 * uxx) < 1e-5);
}

TEST_CASE("mean-variance normal closed form") {
    const double T = kLn2; // e^{T-t} = 2 at t = 0
    const SetOracle oracle = mean_variance_oracle(T, MVCoords::Transformed);

    const Vec y = mv_boundary_point(T, 0.0, 0.0, 1.0); // phi1 = 1, phi2 = 2
    CHECK(mv_phi1(T, 0.0) == doctest::Approx(1.0));
    const GraphPoint p = make_graph_point(oracle, 0.0, Vec{{0.0}}, y);
    CHECK(p.normal(0) == doctest::Approx(2.0 / std::sqrt(5.0)));
    CHECK(p.normal(1) == doctest::Approx(-1.0 / std::sqrt(5.0)));

    // vertex: phi2 = 0, normal (0, -1)
    const Vec yv = mv_boundary_point(T, 0.0, 0.3, 0.3);
    const GraphPoint pv = make_graph_point(oracle, 0.0, Vec{{0.3}}, yv);
    CHECK(pv.normal(0) == doctest::Approx(0.0));
    CHECK(pv.normal(1) == doctest::Approx(-1.0));
}

TEST_CASE("mean-variance printed derivative formulas") {
    const double T = 1.3;
    const SetOracle oracle = mean_variance_oracle(T, MVCoords::Transformed);
    NormalStream rng(7, 0);
    for (int k = 0; k < 12; ++k) {
        const double t = 0.5 * std::abs(std::tanh(rng.next()));
        const double x = 0.6 * rng.next();
        const double y1 = x + 0.8 * rng.next();
        const Vec y = mv_boundary_point(T, t, x, y1);
        const GraphPoint p = make_graph_point(oracle, t, Vec{{x}}, y);
        const IntrinsicDerivatives derivs = intrinsic_derivatives(oracle, p);

        const double p1 = mv_phi1(T, t);
        const double p2 = mv_phi2(T, t, x, y1);
        const double p3 = mv_phi3(T, t, x, y1);
        const Vec dir{{p2, -1.0}};
        const Vec tan{{1.0, p2}};

        CHECK((p.normal - dir / p3).norm() < 1e-10);
        CHECK((derivs.dx_V.col(0) - (p2 / (p3 * p3)) * dir).norm() < 1e-9);
        Vec dxx(2);
        dxx << derivs.dxx_V[0](0, 0), derivs.dxx_V[1](0, 0);
        const Vec dxx_expected =
            (2.0 * p1 / std::pow(p3, 6)) * Vec{{-2.0 * p2, 1.0 - p2 * p2}};
        CHECK((dxx - dxx_expected).norm() < 1e-8);
        CHECK((derivs.dx_n.col(0) + (2.0 * p1 / std::pow(p3, 5)) * tan).norm() < 1e-9);
        const Mat dyn_expected = (2.0 * p1 / std::pow(p3, 5)) * tan * tan.transpose();
        CHECK((derivs.dy_n - dyn_expected).norm() < 1e-9);
    }
}

TEST_CASE("mean-variance signed distance: interior point against a brute-force foot") {
    const double T = kLn2;
    const SetOracle oracle = mean_variance_oracle(T, MVCoords::Transformed);
    const Vec y{{0.0, 1.0}}; // above the vertex: strictly inside the epigraph
    const double r = oracle.r(0.0, Vec{{0.0}}, y);
    CHECK(r < 0.0);

    // dense s-grid over the parabola (s, s^2), phi1 = 1
    double best = 1e300;
    for (int i = 0; i <= 600000; ++i) {
        const double s = -3.0 + 6.0 * i / 600000.0;
        best = std::min(best, std::hypot(s - 0.0, s * s - 1.0));
    }
    CHECK(r == doctest::Approx(-best).epsilon(1e-9));
    CHECK(r == doctest::Approx(-std::sqrt(3.0) / 2.0).epsilon(1e-10));
}

TEST_CASE("mean-variance FD bundle agrees with the analytic one") {
    const double T = 1.0;
    SetOracle oracle = mean_variance_oracle(T, MVCoords::Transformed);
    oracle.fd_steps = FdSteps{1e-4, 1e-4};
    NormalStream rng(23, 0);
    for (int k = 0; k < 8; ++k) {
        const double t = 0.4 * std::abs(std::tanh(rng.next()));
        const double x = 0.4 * rng.next();
        const double y1 = x + 0.6 * rng.next();
        Vec y = mv_boundary_point(T, t, x, y1);
        y(1) += 0.05 * std::tanh(rng.next()); // off the boundary but inside the tube
        const DerivativeBundle ex = oracle.analytic(t, Vec{{x}}, y);
        const DerivativeBundle fd = oracle.fd_bundle(t, Vec{{x}}, y);
        CHECK(std::abs(fd.grad_t - ex.grad_t) < 1e-6);
        CHECK((fd.grad_x - ex.grad_x).cwiseAbs().maxCoeff() < 1e-6);
        CHECK((fd.grad_y - ex.grad_y).cwiseAbs().maxCoeff() < 1e-6);
        CHECK((fd.hess_xx - ex.hess_xx).cwiseAbs().maxCoeff() < 1e-6);
        CHECK((fd.hess_xy - ex.hess_xy).cwiseAbs().maxCoeff() < 1e-6);
        CHECK((fd.hess_yy - ex.hess_yy).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("raw and transformed mean-variance sets are psi-conjugate") {
    const double T = 0.9;
    const SetOracle raw = mean_variance_oracle(T, MVCoords::Raw);
    const SetOracle trans = mean_variance_oracle(T, MVCoords::Transformed);
    NormalStream rng(31, 0);
    for (int k = 0; k < 20; ++k) {
        const double t = 0.5 * std::abs(std::tanh(rng.next()));
        const double x = 0.5 * rng.next();
        const double y1 = x + rng.next();
        const double tau = T - t;
        const double em = std::exp(-tau);
        const double raw_y2 = em * x * x + (y1 - x * em) * (y1 - x * em) / (1.0 - em);
        CHECK(std::abs(raw.r(t, Vec{{x}}, Vec{{y1, raw_y2}})) < 1e-11);
        // psi(y1, y2) = (y1, y2 - y1^2) lands on the transformed boundary
        CHECK(std::abs(trans.r(t, Vec{{x}}, Vec{{y1, raw_y2 - y1 * y1}})) < 1e-11);
    }
}

TEST_CASE("mean-variance support points align with the weight direction") {
    const double T = 1.1;
    const SetOracle oracle = mean_variance_oracle(T, MVCoords::Transformed);
    const double t = 0.3, x = 0.2;
    const double p1 = mv_phi1(T, t);
    for (const double a : {0.5, -0.8, 2.0}) {
        const Vec lambda = Vec{{a, -1.0}}.normalized();
        // maximize lambda . y over the boundary by scanning y1
        double best = -1e300, best_y1 = 0.0;
        for (int i = 0; i <= 40000; ++i) {
            const double y1 = x - 4.0 + 8.0 * i / 40000.0;
            const double val = lambda(0) * y1 + lambda(1) * p1 * (y1 - x) * (y1 - x);
            if (val > best) {
                best = val;
                best_y1 = y1;
            }
        }
        const GraphPoint p =
            make_graph_point(oracle, t, Vec{{x}}, mv_boundary_point(T, t, x, best_y1));
        CHECK((p.normal - lambda).norm() < 1e-3); // grid-limited agreement
    }
}

TEST_CASE("interval oracle") {
    IntervalSet iv;
    iv.lower = [](double, const Vec&) { return -1.0; };
    iv.upper = [](double, const Vec&) { return 1.0; };
    const SetOracle oracle = interval_oracle(iv);
    const Vec x(1);
    CHECK(oracle.r(0.0, x, Vec{{0.5}}) == doctest::Approx(-0.5));
    CHECK(oracle.r(0.0, x, Vec{{2.0}}) == doctest::Approx(1.0));
    CHECK(normal(oracle, 0.0, x, Vec{{1.0}})(0) == doctest::Approx(1.0));
    CHECK(normal(oracle, 0.0, x, Vec{{-1.0}})(0) == doctest::Approx(-1.0));
    CHECK(tangent_basis(normal(oracle, 0.0, x, Vec{{1.0}})).cols() == 0);

    IntervalSet bad;
    bad.lower = [](double, const Vec&) { return 1.0; };
    bad.upper = [](double, const Vec&) { return -1.0; };
    CHECK_THROWS_AS(interval_oracle(bad).r(0.0, x, Vec{{0.0}}), EmptyInterval);
}

TEST_CASE("nonconvex boundary parameterization") {
    const NonconvexSet set{1.0};
    const Eigen::Vector2d p0 = nonconvex_boundary_point(set, 0.0, 0.0);
    CHECK(p0.x() == doctest::Approx(1.0));
    CHECK(p0.y() == doctest::Approx(0.0));
    const Eigen::Vector2d p1 = nonconvex_boundary_point(set, 0.0, M_PI / 2.0);
    CHECK(p1.x() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(p1.y() == doctest::Approx(1.0));

    const SetOracle oracle = nonconvex_oracle(set);
    const Vec x(0);
    // signed distance at the origin equals -(T - t)
    CHECK(oracle.r(0.0, x, Vec{{0.0, 0.0}}) == doctest::Approx(-1.0).epsilon(1e-6));
    // boundary points sit on the zero level set
    for (double th : {0.3, 1.2, 2.5, 4.0, 5.7}) {
        const Eigen::Vector2d p = nonconvex_boundary_point(set, 0.0, th);
        CHECK(std::abs(oracle.r(0.0, x, Vec{{p.x(), p.y()}})) < 1e-9);
    }
}

TEST_CASE("convexity threshold") {
    CHECK_FALSE(convexity_check(NonconvexSet{1.0}, 0.0));
    CHECK(convexity_check(NonconvexSet{0.5}, 0.0));
    // boundary case tau = 1/sqrt(2) stays convex
    CHECK(convexity_check(NonconvexSet{1.0 / std::sqrt(2.0)}, 0.0));
    CHECK(convexity_analytic(NonconvexSet{1.0 / std::sqrt(2.0)}, 0.0));
    CHECK_FALSE(convexity_analytic(NonconvexSet{1.0}, 0.0));

    // curvature sign at the top: phi''(0) = 2T - 1/T
    CHECK(2.0 * 1.0 - 1.0 / 1.0 == doctest::Approx(1.0));
    CHECK(2.0 * 0.5 - 1.0 / 0.5 < 0.0);
}

TEST_CASE("explicit nonconvexity witness via midpoints") {
    NonconvexSet wide{1.0};
    wide.grid = 512;
    CHECK(midpoint_violation(wide, 0.0, 512) > 1e-5);
    NonconvexSet narrow{0.5};
    narrow.grid = 512;
    CHECK(midpoint_violation(narrow, 0.0, 512) < -1e-7);
}

TEST_CASE("product of the slab family halves the slope") {
    IntervalSet slab;
    slab.lower = [](double, const Vec& x) { return x(0) - 1.0; };
    slab.upper = [](double, const Vec& x) { return x(0) + 1.0; };
    slab.lower_x = [](double, const Vec&) { return Vec{{1.0}}; };
    slab.upper_x = [](double, const Vec&) { return Vec{{1.0}}; };
    const SetOracle inner = interval_oracle(slab);
    const SetOracle product = product_graph_oracle(inner);
    const Vec none(0);

    NormalStream rng(41, 0);
    for (int k = 0; k < 12; ++k) {
        const double x = rng.next();
        const double dy = 0.3 * std::tanh(rng.next());
        // near the upper sheet
        const double r_up = product.r(0.0, none, Vec{{x, x + 1.0 + dy}});
        CHECK(r_up == doctest::Approx(dy / std::sqrt(2.0)).epsilon(1e-8));
        // near the lower sheet
        const double r_lo = product.r(0.0, none, Vec{{x, x - 1.0 - dy}});
        CHECK(r_lo == doctest::Approx(dy / std::sqrt(2.0)).epsilon(1e-8));
        // product distance never exceeds the slice distance
        const double r_inner = inner.r(0.0, Vec{{x}}, Vec{{x + 1.0 + dy}});
        CHECK(std::abs(r_up) <= std::abs(r_inner) + 1e-12);
    }

    // shared graph: both distances vanish
    CHECK(std::abs(product.r(0.0, none, Vec{{0.3, 1.3}})) < 1e-10);
    CHECK(std::abs(inner.r(0.0, Vec{{0.3}}, Vec{{1.3}})) < 1e-12);
}

TEST_CASE("product graph of a ball family shares the graph") {
    const SetOracle inner = ball_oracle(make_static_ball(Vec::Zero(2), 1.0));
    const SetOracle product = product_graph_oracle(inner);
    const Vec none(0);
    for (double th : {0.0, 0.8, 2.2, 4.4}) {
        const Vec yhat{{0.25, std::cos(th), std::sin(th)}};
        CHECK(std::abs(product.r(0.0, none, yhat)) < 1e-7);
    }
    // |r_hat| <= |r| off the graph
    const Vec off{{0.0, 1.3, 0.0}};
    CHECK(std::abs(product.r(0.0, none, off)) <=
          std::abs(inner.r(0.0, Vec{{0.0}}, Vec{{1.3, 0.0}})) + 1e-10);
}
