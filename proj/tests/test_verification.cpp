#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "svhjb/mean_variance.hpp"
#include "svhjb/reference_sets.hpp"
#include "svhjb/rng.hpp"
#include "svhjb/verification.hpp"

using namespace svhjb;

namespace {

BallSet constant_drive_ball(double T, const Vec& w0, const Vec& f0) {
    // w(t) = w0 + f0 (T - t) solves w_t + w_xx / 2 + f0 = 0
    BallSet ball;
    ball.d = 1;
    ball.m = 2;
    ball.horizon = T;
    ball.w = [w0, f0, T](double t, const Vec&) { return Vec(w0 + f0 * (T - t)); };
    ball.w_t = [f0](double, const Vec&) { return Vec(-f0); };
    ball.u = [T](double t, const Vec&) { return T - t; };
    ball.u_t = [](double, const Vec&) { return -1.0; };
    return ball;
}

} // namespace

TEST_CASE("feedback fields of the additive-drive ball") {
    const double T = 2.0;
    const BallSet ball = make_heat_ball(T, 0.4);
    const SetOracle oracle = ball_oracle(ball);
    const ControlProblem problem = make_additive_ball_problem();
    const OptimalFeedback fb = feedback_from_hamiltonian(problem, oracle);

    NormalStream rng(3, 0);
    for (int k = 0; k < 8; ++k) {
        const double t = 0.7 * std::abs(std::tanh(rng.next()));
        const Vec x{{0.5 * rng.next()}};
        const double th = 3.1 * rng.next();
        const Vec w = ball.w(t, x);
        const double u = T - t;
        const Vec y{{w(0) + u * std::cos(th), w(1) + u * std::sin(th)}};
        const Vec n = normal(oracle, t, x, y);

        CHECK((fb.I1(t, x, y) - n).norm() < 1e-10);
        const Vec wx = ball.w_x(t, x).col(0);
        const Vec wx_tan = wx - wx.dot(n) * n;
        CHECK((fb.I2(t, x, y).col(0) - wx_tan).norm() < 1e-9);

        // I3 = (1/(2(T-t))) (w_x . n) [w_x - (w_x . n) n] for f0 = 0
        const Vec i3_expected = (wx.dot(n) / (2.0 * u)) * wx_tan;
        CHECK((fb.I3(t, x, y) - i3_expected).norm() < 1e-9);
        // where the HJB holds the untruncated defect is already tangential
        CHECK(std::abs(n.dot(fb.I3_tilde(t, x, y))) < 1e-9);
    }
}

TEST_CASE("feedback I3 picks up the driver when f0 is nonzero") {
    const double T = 2.0;
    const Vec f0{{0.3, -0.2}};
    const SetOracle oracle = ball_oracle(constant_drive_ball(T, Vec{{0.1, 0.4}}, f0));
    const ControlProblem problem =
        make_additive_ball_problem([f0](double, const Vec&) { return f0; });
    const OptimalFeedback fb = feedback_from_hamiltonian(problem, oracle);

    const double t = 0.5;
    const Vec x{{0.0}};
    const Vec w = Vec{{0.1, 0.4}} + f0 * (T - t);
    const Vec y{{w(0) + (T - t), w(1)}};
    const Vec n = normal(oracle, t, x, y);
    // I3 = -f0 + (n . f0) n when the center has no x-dependence
    const Vec expected = -f0 + n.dot(f0) * n;
    CHECK((fb.I3(t, x, y) - expected).norm() < 1e-10);
    CHECK(std::abs(n.dot(fb.I3_tilde(t, x, y))) < 1e-10);
}

TEST_CASE("feedback I1 on the mean-variance set") {
    const double T = 1.0;
    const SetOracle oracle = mean_variance_oracle(T, MVCoords::Transformed);
    const ControlProblem problem = make_mv_problem();
    const OptimalFeedback fb = feedback_from_hamiltonian(problem, oracle);

    const double t = 0.3, x = 0.2, y1 = 0.9;
    const double p1 = mv_phi1(T, t);
    const Vec y{{y1, p1 * (y1 - x) * (y1 - x)}};
    CHECK(fb.I1(t, Vec{{x}}, y)(0) == doctest::Approx((1.0 + p1) * (y1 - x)).epsilon(1e-10));
    const Vec n = normal(oracle, t, Vec{{x}}, y);
    CHECK(std::abs(n.dot(fb.I3_tilde(t, Vec{{x}}, y))) < 1e-9);
    CHECK(std::abs(n.dot(fb.I3(t, Vec{{x}}, y))) < 1e-12);
}

TEST_CASE("verification flow stays on the boundary (constant center)") {
    const double T = 2.0;
    const SetOracle oracle = ball_oracle(make_const_heat_ball(T, Vec{{0.2, -0.1}}));
    const ControlProblem problem = make_additive_ball_problem();
    const OptimalFeedback fb = feedback_from_hamiltonian(problem, oracle);
    const GraphPoint start = make_graph_point(oracle, 0.0, Vec{{0.0}}, Vec{{2.2, -0.1}});

    const VerificationRun run =
        verification_sde_simulate(problem, oracle, fb, start, 1.0, 400, 50, 21);
    CHECK(run.max_abs_residual <= 1e-10); // the radial flow is exact for this family
    CHECK(run.max_drift_identity_gap <= 1e-10);
    CHECK(run.step_guard_trips == 0);
}

TEST_CASE("verification flow on the heat ball") {
    const double T = 2.0;
    const BallSet ball = make_heat_ball(T, 0.3);
    const SetOracle oracle = ball_oracle(ball);
    const ControlProblem problem = make_additive_ball_problem();
    const OptimalFeedback fb = feedback_from_hamiltonian(problem, oracle);
    const Vec w0 = ball.w(0.0, Vec{{0.0}});
    const GraphPoint start =
        make_graph_point(oracle, 0.0, Vec{{0.0}}, Vec{{w0(0) + T, w0(1)}});

    const VerificationRun run =
        verification_sde_simulate(problem, oracle, fb, start, 1.0, 1000, 60, 23);
    CHECK(run.max_abs_residual <= 0.02);
    CHECK(run.max_drift_identity_gap <= 1e-9);
}

TEST_CASE("mean-variance verification flow matches the closed-form gap") {
    const double T = 1.0;
    const MVParams params{0.2, 1.0, T};
    const SetOracle oracle = mean_variance_oracle(T, MVCoords::Transformed);
    const ControlProblem problem = make_mv_problem();
    const OptimalFeedback fb = feedback_from_hamiltonian(problem, oracle);

    const MVStatic stat = static_solution(params);
    // transformed coordinates: start at psi(y_lambda) on the boundary
    const Vec y0{{stat.y1, mv_phi1(T, 0.0) * (stat.y1 - params.x0) * (stat.y1 - params.x0)}};
    const GraphPoint start = make_graph_point(oracle, 0.0, Vec{{params.x0}}, y0);

    VerificationOptions options;
    options.store_paths = true;
    const VerificationRun run =
        verification_sde_simulate(problem, oracle, fb, start, 0.6, 2400, 20, 29, options);
    CHECK(run.max_abs_residual <= 0.05);
    CHECK(run.max_drift_identity_gap <= 1e-8);

    // DPP spot check and the explicit solution of the optimal pair
    double worst = 0.0;
    for (int p = 0; p < run.paths; ++p)
        for (std::size_t k = 0; k < run.t_grid.size(); k += 50) {
            const double t = run.t_grid[k];
            const double X = run.x_paths[p][k](0);
            const double U1 = run.y_paths[p][k](0);
            worst = std::max(worst, std::abs(U1 - X - closed_form_gap(params, t, X)));
        }
    CHECK(worst <= 0.05);
}

TEST_CASE("zero-noise verification reduces to the radial ODE") {
    const double T = 2.0;
    const SetOracle oracle = ball_oracle(make_const_heat_ball(T, Vec{{0.0, 0.0}}));
    ControlProblem problem = make_additive_ball_problem();
    problem.sigma = [](double, const Vec&, const Vec&) { return Mat::Zero(1, 1); };
    const OptimalFeedback fb = feedback_from_hamiltonian(problem, oracle);
    const Vec dir = Vec{{std::cos(0.4), std::sin(0.4)}};
    const GraphPoint start = make_graph_point(oracle, 0.0, Vec{{0.0}}, Vec(T * dir));

    VerificationOptions options;
    options.store_paths = true;
    const VerificationRun run =
        verification_sde_simulate(problem, oracle, fb, start, 1.0, 500, 1, 31, options);
    // deterministic radial shrink: Y(t) = (T - t) * dir exactly
    for (std::size_t k = 0; k < run.t_grid.size(); k += 100) {
        const Vec expected = (T - run.t_grid[k]) * dir;
        CHECK((run.y_paths[0][k] - expected).norm() < 1e-10);
    }
}

TEST_CASE("scalar HJB solver against the heat semigroup") {
    ControlProblem problem;
    problem.d = 1;
    problem.m = 1;
    problem.control_dim = 1;
    problem.b = [](double, const Vec&, const Vec&) { return Vec::Zero(1); };
    problem.sigma = [](double, const Vec&, const Vec&) { return Mat::Identity(1, 1); };
    problem.f = [](double, const Vec&, const Vec&, const Mat&, const Vec& a) {
        return Vec{{a(0)}};
    };
    problem.g = [](const Vec& x) { return Vec{{std::sin(x(0))}}; };
    problem.grid = ControlGrid{Vec{{-1.0}}, Vec{{1.0}}, 9};

    const double T = 1.0;
    auto solve_error = [&](int nx) {
        const ScalarHJBSolution sol = scalar_hjb_solve(problem, T, -M_PI, M_PI, nx);
        double err = 0.0;
        for (std::size_t i = 0; i < sol.xs.size(); ++i) {
            const double base = std::exp(-0.5 * T) * std::sin(sol.xs[i]);
            err = std::max(err, std::abs(sol.upper(0, i) - (base + T)));
            err = std::max(err, std::abs(sol.lower(0, i) - (base - T)));
        }
        return err;
    };

    const double err_fine = solve_error(158);
    const double err_coarse = solve_error(79);
    CHECK(err_fine < 2e-2);
    CHECK(err_coarse / err_fine > 1.8); // at least first-order refinement

    // terminal slice equals the datum at the grid nodes
    const ScalarHJBSolution sol = scalar_hjb_solve(problem, T, -M_PI, M_PI, 79);
    const int last = static_cast<int>(sol.ts.size()) - 1;
    for (std::size_t i = 0; i < sol.xs.size(); i += 7) {
        CHECK(sol.upper(last, i) == doctest::Approx(std::sin(sol.xs[i])).epsilon(1e-12));
        CHECK(sol.lower(last, i) == doctest::Approx(std::sin(sol.xs[i])).epsilon(1e-12));
    }
    CHECK_FALSE(sol.degenerate);
}

TEST_CASE("driver without control collapses the interval") {
    ControlProblem problem;
    problem.d = 1;
    problem.m = 1;
    problem.control_dim = 1;
    problem.b = [](double, const Vec&, const Vec&) { return Vec::Zero(1); };
    problem.sigma = [](double, const Vec&, const Vec&) { return Mat::Identity(1, 1); };
    problem.f = [](double, const Vec&, const Vec&, const Mat&, const Vec&) {
        return Vec::Zero(1);
    };
    problem.g = [](const Vec& x) { return Vec{{std::sin(x(0))}}; };
    problem.grid = ControlGrid{Vec{{-1.0}}, Vec{{1.0}}, 5};

    const ScalarHJBSolution sol = scalar_hjb_solve(problem, 0.5, -M_PI, M_PI, 100);
    CHECK(sol.degenerate);
    CHECK((sol.upper - sol.lower).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("solver guards") {
    ControlProblem problem;
    problem.d = 1;
    problem.m = 1;
    problem.b = [](double, const Vec&, const Vec&) { return Vec::Zero(1); };
    problem.sigma = [](double, const Vec&, const Vec&) { return Mat::Identity(1, 1); };
    problem.f = [](double, const Vec&, const Vec&, const Mat&, const Vec& a) {
        return Vec{{a(0)}};
    };
    problem.g = [](const Vec&) { return Vec::Zero(1); };
    problem.grid = ControlGrid{Vec{{-1.0}}, Vec{{1.0}}, 3};

    CHECK_THROWS_AS(scalar_hjb_solve(problem, 1.0, -M_PI, M_PI, 4), GridTooCoarse);

    ScalarHJBOptions bad;
    bad.dt_override = 1.0; // far beyond the parabolic bound
    CHECK_THROWS_AS(scalar_hjb_solve(problem, 1.0, -M_PI, M_PI, 100, bad), CFLViolation);
}
