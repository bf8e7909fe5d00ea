#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "svhjb/flows.hpp"
#include "svhjb/hausdorff.hpp"
#include "svhjb/reference_sets.hpp"
#include "svhjb/rng.hpp"

using namespace svhjb;

TEST_CASE("geodesic on the translating ball is a straight line") {
    const SetOracle oracle = ball_oracle(make_translating_ball());
    const GeodesicTrajectory traj =
        geodesic_ode(oracle, 0.0, 0.0, Vec{{1.0, 0.0}}, 1.0, 1e-3, 1e-7);
    CHECK(traj.max_abs_r <= 1e-7);
    const Vec end = traj.ys.back();
    CHECK(std::abs(end(0) - 2.0) < 1e-8);
    CHECK(std::abs(end(1)) < 1e-8);
}

TEST_CASE("geodesic on a static ball stays put") {
    const SetOracle oracle = ball_oracle(make_static_ball(Vec::Zero(2), 1.0));
    const GeodesicTrajectory traj =
        geodesic_ode(oracle, 0.0, 0.0, Vec{{0.0, 1.0}}, 1.0, 1e-2, 1e-10);
    CHECK((traj.ys.back() - traj.ys.front()).norm() < 1e-12);
}

TEST_CASE("geodesic across the mean-variance family in x") {
    const double T = 1.5;
    const SetOracle oracle = mean_variance_oracle(T, MVCoords::Transformed);
    const double t = 0.2;
    const double p1 = mv_phi1(T, t);
    const Vec y0{{0.5, p1 * 0.25}}; // boundary point at x = 0
    const GeodesicTrajectory traj = geodesic_ode(oracle, t, 0.0, y0, 1.0, 1e-3, 1e-7);
    CHECK(traj.max_abs_r <= 1e-7);

    // RK4 order: halving the step shrinks the endpoint error by ~16
    const GeodesicTrajectory coarse = geodesic_ode(oracle, t, 0.0, y0, 1.0, 8e-3, 1e-3);
    const GeodesicTrajectory fine = geodesic_ode(oracle, t, 0.0, y0, 1.0, 4e-3, 1e-3);
    const GeodesicTrajectory ref = geodesic_ode(oracle, t, 0.0, y0, 1.0, 5e-4, 1e-7);
    const double err_coarse = (coarse.ys.back() - ref.ys.back()).norm();
    const double err_fine = (fine.ys.back() - ref.ys.back()).norm();
    CHECK(err_fine < err_coarse / 8.0);
}

TEST_CASE("geodesic leaves the tube on an inconsistent oracle") {
    // distance claims a circle, derivatives claim a drifting slab
    SetOracle bogus;
    bogus.state_dim = 1;
    bogus.value_dim = 2;
    bogus.epsilon_band = 0.05;
    bogus.r_eval = [](double, const Vec&, const Vec& y) { return y.norm() - 1.0; };
    bogus.analytic = [](double, const Vec&, const Vec&) {
        DerivativeBundle b;
        b.grad_t = 0.0;
        b.grad_x = Vec{{1.0}};
        b.grad_y = Vec{{0.0, 1.0}};
        b.hess_xx = Mat::Zero(1, 1);
        b.hess_xy = Mat::Zero(2, 1);
        b.hess_yy = Mat::Zero(2, 2);
        return b;
    };
    CHECK_THROWS_AS(geodesic_ode(bogus, 0.0, 0.0, Vec{{1.0, 0.0}}, 1.0, 1e-2, 1e-8), LeftTube);
}

TEST_CASE("length comparison against boundary competitors") {
    const SetOracle oracle = ball_oracle(make_translating_ball());
    const Vec y0{{1.0, 0.0}};
    const double dx = 1e-2;

    // the geodesic itself
    auto self = [](double x) { return Vec{{1.0 + x, 0.0}}; };
    CHECK(std::abs(length_comparison(oracle, 0.0, 0.0, y0, self, dx)) < 1e-10);

    // gentle tangential perturbation: never shorter than the geodesic
    auto gentle = [dx](double x) {
        const double th = 1e-3 * std::sin(M_PI * x / dx);
        return Vec{{x + std::cos(th), std::sin(th)}};
    };
    const double margin = length_comparison(oracle, 0.0, 0.0, y0, gentle, dx, 256);
    CHECK(margin <= 1e-3);

    // strong oscillation adds first-order tangential length
    auto wild = [dx](double x) {
        const double th = 0.05 * std::sin(4.0 * M_PI * x / dx);
        return Vec{{x + std::cos(th), std::sin(th)}};
    };
    CHECK(length_comparison(oracle, 0.0, 0.0, y0, wild, dx, 512) < -1e-3);

    auto off = [](double x) { return Vec{{x + 1.01, 0.0}}; };
    CHECK_THROWS_AS(length_comparison(oracle, 0.0, 0.0, y0, off, dx), CompetitorOffBoundary);
}

namespace {

DiffusionSpec brownian_state(double sigma0) {
    DiffusionSpec spec;
    spec.b = [](double, const Vec&) { return Vec(Vec::Zero(1)); };
    spec.sigma = [sigma0](double, const Vec&) { return Mat(sigma0 * Mat::Identity(1, 1)); };
    spec.x0 = Vec::Zero(1);
    return spec;
}

std::vector<Vec> circle_points(const SetOracle& oracle, double t, const Vec& x, int n,
                               double radial = 0.0) {
    std::vector<Vec> out;
    const Vec lo = Vec::Constant(2, -4.0), hi = Vec::Constant(2, 4.0);
    const auto base = boundary_sample(oracle, t, x, n, lo, hi);
    for (Vec y : base) {
        if (radial != 0.0) y += radial * oracle.grad_y(t, x, y).normalized();
        out.push_back(std::move(y));
    }
    return out;
}

} // namespace

TEST_CASE("tangential flow keeps the boundary residual small") {
    const SetOracle oracle = ball_oracle(make_heat_ball(2.0, 0.1));
    const DiffusionSpec diffusion = brownian_state(1.0);
    const TangentFieldSpec fields; // trivial
    const auto y0 = circle_points(oracle, 0.0, diffusion.x0, 16);
    const ItoFlowResult res =
        ito_flow_simulate(oracle, diffusion, fields, y0, 0.0, 1.0, 1000, 100, 11);
    CHECK(res.max_abs_residual <= 0.02);
    CHECK(res.band_exits == 0);
}

TEST_CASE("inward and outward regimes preserve the sign of r") {
    const SetOracle oracle = ball_oracle(make_heat_ball(2.0, 0.1));
    const DiffusionSpec diffusion = brownian_state(1.0);

    TangentFieldSpec inward;
    inward.regime = TangentFieldSpec::Regime::Inward;
    inward.xi = [&oracle](double t, const Vec& x, const Vec& y) {
        return Vec(-0.5 * oracle.grad_y(t, x, y).normalized());
    };
    const auto inside = circle_points(oracle, 0.0, diffusion.x0, 8, -0.1);
    const ItoFlowResult rin =
        ito_flow_simulate(oracle, diffusion, inward, inside, 0.0, 1.0, 500, 60, 13);
    CHECK(rin.sign_violations == 0);

    TangentFieldSpec outward;
    outward.regime = TangentFieldSpec::Regime::Outward;
    outward.xi = [&oracle](double t, const Vec& x, const Vec& y) {
        return Vec(0.5 * oracle.grad_y(t, x, y).normalized());
    };
    const auto outside = circle_points(oracle, 0.0, diffusion.x0, 8, 0.1);
    const ItoFlowResult rout =
        ito_flow_simulate(oracle, diffusion, outward, outside, 0.0, 1.0, 500, 60, 13);
    CHECK(rout.sign_violations == 0);
}

TEST_CASE("surjectivity of the flowed cloud") {
    // static ball: the flow is constant and the defect is the cover spacing
    const SetOracle oracle = ball_oracle(make_static_ball(Vec::Zero(2), 1.0));
    const DiffusionSpec diffusion = brownian_state(1.0);
    const TangentFieldSpec fields;
    const auto y0 = circle_points(oracle, 0.0, diffusion.x0, 200);
    const double dt = 1e-3;
    const ItoFlowResult res =
        ito_flow_simulate(oracle, diffusion, fields, y0, 0.0, 0.5, 500, 3, 17);
    const double defect = surjectivity_check(res, oracle, 0, 256);
    CHECK(defect <= 2.0 * M_PI / 200 + 3.0 * std::sqrt(dt));

    // shrinking ball at t = T/2
    const SetOracle heat = ball_oracle(make_const_heat_ball(2.0, Vec::Zero(2)));
    const auto y0h = circle_points(heat, 0.0, diffusion.x0, 200);
    const ItoFlowResult resh =
        ito_flow_simulate(heat, diffusion, fields, y0h, 0.0, 1.0, 1000, 3, 19);
    CHECK(surjectivity_check(resh, heat, 0, 256) <= 2.0 * M_PI / 200 + 3.0 * std::sqrt(dt));

    // negative control: one starting point cannot cover the circle
    const ItoFlowResult single =
        ito_flow_simulate(oracle, diffusion, fields, {Vec{{1.0, 0.0}}}, 0.0, 0.5, 500, 2, 23);
    const double diameter_defect = surjectivity_check(
        single, oracle, 0, 256, Vec::Constant(2, -3.0), Vec::Constant(2, 3.0));
    CHECK(diameter_defect > 1.6);
    CHECK(diameter_defect < 2.4);
}

TEST_CASE("flow summaries are bit-identical across runs and worker counts") {
    const SetOracle oracle = ball_oracle(make_heat_ball(2.0, 0.1));
    const DiffusionSpec diffusion = brownian_state(1.0);
    const TangentFieldSpec fields;
    const auto y0 = circle_points(oracle, 0.0, diffusion.x0, 8);

    ItoFlowOptions serial, threaded;
    serial.workers = 1;
    threaded.workers = 3;
    const ItoFlowResult a =
        ito_flow_simulate(oracle, diffusion, fields, y0, 0.0, 1.0, 200, 24, 29, serial);
    const ItoFlowResult b =
        ito_flow_simulate(oracle, diffusion, fields, y0, 0.0, 1.0, 200, 24, 29, serial);
    const ItoFlowResult c =
        ito_flow_simulate(oracle, diffusion, fields, y0, 0.0, 1.0, 200, 24, 29, threaded);

    CHECK(a.max_abs_residual == b.max_abs_residual);
    CHECK(a.max_abs_residual == c.max_abs_residual);
    for (std::size_t k = 0; k < a.final_abs_residual.size(); ++k) {
        CHECK(a.final_abs_residual[k] == b.final_abs_residual[k]);
        CHECK(a.final_abs_residual[k] == c.final_abs_residual[k]);
    }
}

TEST_CASE("tangential zeta does not move the boundary cloud") {
    const SetOracle oracle = ball_oracle(make_heat_ball(2.0, 0.1));
    const DiffusionSpec diffusion = brownian_state(1.0);
    const auto y0 = circle_points(oracle, 0.0, diffusion.x0, 128);

    auto tangential_zeta = [&oracle](double scale) {
        TangentFieldSpec fields;
        fields.zeta = [&oracle, scale](double t, const Vec& x, const Vec& y) {
            const Vec n = oracle.grad_y(t, x, y).normalized();
            Mat zeta(2, 1);
            zeta << -scale * n(1), scale * n(0); // rotate the normal
            return zeta;
        };
        return fields;
    };

    const ItoFlowResult a =
        ito_flow_simulate(oracle, diffusion, tangential_zeta(0.3), y0, 0.0, 1.0, 500, 2, 31);
    const ItoFlowResult b =
        ito_flow_simulate(oracle, diffusion, tangential_zeta(-0.2), y0, 0.0, 1.0, 500, 2, 31);
    CHECK(a.max_abs_residual <= 0.05);
    CHECK(b.max_abs_residual <= 0.05);

    // same Brownian path, same boundary set: the clouds coincide as sets
    for (int p = 0; p < 2; ++p) {
        PointCloud ca, cb;
        for (const Vec& y : a.y_snapshots.back()[p]) ca.pts.push_back(y);
        for (const Vec& y : b.y_snapshots.back()[p]) cb.pts.push_back(y);
        CHECK(hausdorff_distance(ca, cb) < 0.25);
    }
}

TEST_CASE("absurd driving fields trip the step guard") {
    const SetOracle oracle = ball_oracle(make_static_ball(Vec::Zero(2), 1.0));
    const DiffusionSpec diffusion = brownian_state(1.0);
    TangentFieldSpec fields;
    fields.xi = [&oracle](double t, const Vec& x, const Vec& y) {
        const Vec n = oracle.grad_y(t, x, y).normalized();
        return Vec{{-1e6 * n(1), 1e6 * n(0)}}; // enormous tangential push
    };
    CHECK_THROWS_AS(
        ito_flow_simulate(oracle, diffusion, fields, {Vec{{1.0, 0.0}}}, 0.0, 1.0, 100, 1, 37),
        StepTooLarge);
}
