#include "svhjb/reference_sets.hpp"

#include <cmath>

namespace svhjb {

using Vec2 = Eigen::Vector2d;

// ---------------------------------------------------------------------------
// Ball family
// ---------------------------------------------------------------------------

SetOracle ball_oracle(const BallSet& ball) {
    const int d = ball.d, m = ball.m;
    auto w = ball.w ? ball.w : [m](double, const Vec&) { return Vec::Zero(m); };
    auto w_t = ball.w_t ? ball.w_t : [m](double, const Vec&) { return Vec::Zero(m); };
    auto w_x = ball.w_x ? ball.w_x : [m, d](double, const Vec&) { return Mat::Zero(m, d); };
    auto w_xx = ball.w_xx
                    ? ball.w_xx
                    : [m](double, const Vec&, int, int) { return Vec::Zero(m); };
    auto u = ball.u;
    auto u_t = ball.u_t ? ball.u_t : [](double, const Vec&) { return 0.0; };
    auto u_x = ball.u_x ? ball.u_x : [d](double, const Vec&) { return Vec::Zero(d); };
    auto u_xx = ball.u_xx ? ball.u_xx : [d](double, const Vec&) { return Mat::Zero(d, d); };

    auto radius = [u](double t, const Vec& x) {
        const double r = u(t, x);
        if (r <= 0.0) throw RadiusNonpositive("ball radius " + std::to_string(r));
        return r;
    };

    SetOracle oracle;
    oracle.state_dim = d;
    oracle.value_dim = m;
    oracle.horizon = ball.horizon;
    if (std::isfinite(ball.horizon)) oracle.delta_min = 1e-3 * ball.horizon;
    oracle.graph_tol = 1e-8;
    oracle.band_fn = [radius](double t, const Vec& x) { return 0.8 * radius(t, x); };

    oracle.r_eval = [w, radius](double t, const Vec& x, const Vec& y) {
        return (y - w(t, x)).norm() - radius(t, x);
    };

    oracle.projector = [w, radius](double t, const Vec& x, const Vec& y) -> Vec {
        const Vec c = w(t, x);
        const Vec e = y - c;
        const double rho = e.norm();
        if (rho < 1e-14) throw OracleDerivativeFailure("projection from ball center");
        return c + (radius(t, x) / rho) * e;
    };

    oracle.analytic = [=](double t, const Vec& x, const Vec& y) {
        const Vec center = w(t, x);
        const Vec diff = y - center;
        const double rho = diff.norm();
        if (rho < 1e-12) throw OracleDerivativeFailure("ball derivatives at the center");
        const Vec e = diff / rho;

        const Mat wx = w_x(t, x);
        const Vec ux = u_x(t, x);

        DerivativeBundle b;
        b.grad_t = -e.dot(w_t(t, x)) - u_t(t, x);
        b.grad_x = Vec(d);
        for (int i = 0; i < d; ++i) b.grad_x(i) = -e.dot(wx.col(i)) - ux(i);
        b.grad_y = e;
        b.hess_yy = (Mat::Identity(m, m) - e * e.transpose()) / rho;
        b.hess_xy = Mat(m, d);
        for (int i = 0; i < d; ++i)
            b.hess_xy.col(i) = (-wx.col(i) + e.dot(wx.col(i)) * e) / rho;
        b.hess_xx = Mat(d, d);
        const Mat uxx = u_xx(t, x);
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) {
                const double v = (wx.col(i).dot(wx.col(j)) -
                                  e.dot(wx.col(i)) * e.dot(wx.col(j))) / rho -
                                 e.dot(w_xx(t, x, i, j)) - uxx(i, j);
                b.hess_xx(i, j) = v;
                b.hess_xx(j, i) = v;
            }
        radius(t, x); // positivity check
        return b;
    };
    return oracle;
}

BallSet make_static_ball(const Vec& center, double radius, int d) {
    BallSet b;
    b.d = d;
    b.m = static_cast<int>(center.size());
    b.w = [center](double, const Vec&) { return center; };
    b.u = [radius](double, const Vec&) { return radius; };
    return b;
}

BallSet make_translating_ball() {
    BallSet b;
    b.d = 1;
    b.m = 2;
    b.w = [](double, const Vec& x) { return Vec{{x(0), 0.0}}; };
    b.w_x = [](double, const Vec&) {
        Mat g(2, 1);
        g << 1.0, 0.0;
        return g;
    };
    b.u = [](double, const Vec&) { return 1.0; };
    return b;
}

BallSet make_heat_ball(double T, double amplitude) {
    // w solves the terminal-value heat equation w_t + w_xx / 2 = 0 and the
    // radius shrinks linearly to zero at T.
    BallSet b;
    b.d = 1;
    b.m = 2;
    b.horizon = T;
    auto wave = [T, amplitude](double t, double x) {
        const double s = amplitude * std::exp(-0.5 * (T - t));
        return Vec{{s * std::sin(x), s * std::cos(x)}};
    };
    b.w = [wave](double t, const Vec& x) { return wave(t, x(0)); };
    b.w_t = [wave](double t, const Vec& x) { return Vec(0.5 * wave(t, x(0))); };
    b.w_x = [T, amplitude](double t, const Vec& x) {
        const double s = amplitude * std::exp(-0.5 * (T - t));
        Mat g(2, 1);
        g << s * std::cos(x(0)), -s * std::sin(x(0));
        return g;
    };
    b.w_xx = [wave](double t, const Vec& x, int, int) { return Vec(-wave(t, x(0))); };
    b.u = [T](double t, const Vec&) { return T - t; };
    b.u_t = [](double, const Vec&) { return -1.0; };
    return b;
}

BallSet make_const_heat_ball(double T, const Vec& w0) {
    BallSet b;
    b.d = 1;
    b.m = static_cast<int>(w0.size());
    b.horizon = T;
    b.w = [w0](double, const Vec&) { return w0; };
    b.u = [T](double t, const Vec&) { return T - t; };
    b.u_t = [](double, const Vec&) { return -1.0; };
    return b;
}

BallSet make_exp_radius_ball(double T) {
    BallSet b;
    b.d = 1;
    b.m = 2;
    auto rad = [T](double t, const Vec& x) { return std::exp(x(0) + 0.5 * (T - t)); };
    b.w = [](double, const Vec&) { return Vec::Zero(2); };
    b.u = rad;
    b.u_t = [rad](double t, const Vec& x) { return -0.5 * rad(t, x); };
    b.u_x = [rad](double t, const Vec& x) { return Vec{{rad(t, x)}}; };
    b.u_xx = [rad](double t, const Vec& x) { return Mat{{rad(t, x)}}; };
    return b;
}

BallSet make_poly_radius_ball(double T) {
    BallSet b;
    b.d = 1;
    b.m = 2;
    b.w = [](double, const Vec&) { return Vec::Zero(2); };
    b.u = [T](double t, const Vec&) { return (T - t) * (T - t) + 1.0; };
    b.u_t = [T](double t, const Vec&) { return -2.0 * (T - t); };
    return b;
}

// ---------------------------------------------------------------------------
// Parabola families (mean-variance in both coordinate systems)
// ---------------------------------------------------------------------------

namespace {

// Boundary parameterized as P(s) = (s, q0 + kappa (s - c)^2) with
// (t, x)-dependent coefficients. kappa_x and c_xx vanish for both families.
struct ParabolaData {
    double q0, q0_t, q0_x, q0_xx;
    double kappa, kappa_t;
    double c, c_t, c_x;
};

using ParabolaEval = std::function<ParabolaData(double, double)>;

// Real roots of v^3 + p v + q = 0.
int solve_depressed_cubic(double p, double q, double roots[3]) {
    const double disc = 0.25 * q * q + p * p * p / 27.0;
    if (disc > 0.0) {
        const double sq = std::sqrt(disc);
        const double a = std::cbrt(-0.5 * q + sq);
        const double b = std::cbrt(-0.5 * q - sq);
        roots[0] = a + b;
        return 1;
    }
    const double mp3 = std::max(-p / 3.0, 0.0);
    const double rr = 2.0 * std::sqrt(mp3);
    double arg = 0.0;
    if (mp3 > 0.0) arg = std::clamp(1.5 * q / (p * std::sqrt(mp3)), -1.0, 1.0);
    const double phi = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k) roots[k] = rr * std::cos(phi - 2.0 * M_PI * k / 3.0);
    return 3;
}

// Foot of the perpendicular from y onto the parabola: global minimizer of
// |y - P(s)|^2, solved in closed form and polished by Newton.
double parabola_foot(const ParabolaData& pd, const Vec& y) {
    const double kappa = pd.kappa;
    const double beta = y(0) - pd.c;
    const double h = y(1) - pd.q0;
    const double p = (1.0 - 2.0 * kappa * h) / (2.0 * kappa * kappa);
    const double q = -beta / (2.0 * kappa * kappa);
    double roots[3];
    const int nroots = solve_depressed_cubic(p, q, roots);
    double best_v = roots[0];
    double best_d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < nroots; ++k) {
        const double v = roots[k];
        const double dy1 = beta - v;
        const double dy2 = h - kappa * v * v;
        const double dist = dy1 * dy1 + dy2 * dy2;
        if (dist < best_d) {
            best_d = dist;
            best_v = v;
        }
    }
    double v = best_v;
    for (int it = 0; it < 3; ++it) { // polish G(v) = 0
        const double G = (beta - v) + (h - kappa * v * v) * 2.0 * kappa * v;
        const double Gs = -1.0 + 2.0 * kappa * h - 6.0 * kappa * kappa * v * v;
        if (std::abs(Gs) < 1e-14) break;
        v -= G / Gs;
    }
    return pd.c + v;
}

inline Vec2 rot_cw(const Vec2& a) { return Vec2(a.y(), -a.x()); }

// Signed distance and derivatives of a parametric boundary curve via the
// foot point: r = (y - P) . nu with nu the outward unit normal at the foot.
// First derivatives follow from the envelope theorem; second derivatives
// differentiate the foot point through the optimality condition.
SetOracle parabola_oracle(const ParabolaEval& eval, double T) {
    SetOracle oracle;
    oracle.state_dim = 1;
    oracle.value_dim = 2;
    oracle.horizon = T;
    oracle.delta_min = 1e-3 * T;
    oracle.graph_tol = 1e-8;
    oracle.band_fn = [eval](double t, const Vec& x) {
        return 0.45 / eval(t, x(0)).kappa;
    };

    auto geometry = [eval](double t, const Vec& x, const Vec& y, double& s, ParabolaData& pd) {
        pd = eval(t, x(0));
        s = parabola_foot(pd, y);
    };

    oracle.r_eval = [geometry](double t, const Vec& x, const Vec& y) {
        double s;
        ParabolaData pd;
        geometry(t, x, y, s, pd);
        const double v = s - pd.c;
        const Vec2 P(s, pd.q0 + pd.kappa * v * v);
        const Vec2 Ps(1.0, 2.0 * pd.kappa * v);
        const Vec2 nu = rot_cw(Ps).normalized();
        return nu.dot(Vec2(y(0), y(1)) - P);
    };

    oracle.projector = [geometry](double t, const Vec& x, const Vec& y) -> Vec {
        double s;
        ParabolaData pd;
        geometry(t, x, y, s, pd);
        const double v = s - pd.c;
        return Vec{{s, pd.q0 + pd.kappa * v * v}};
    };

    oracle.analytic = [geometry](double t, const Vec& x, const Vec& y) {
        double s;
        ParabolaData pd;
        geometry(t, x, y, s, pd);
        const double v = s - pd.c;
        const Vec2 yv(y(0), y(1));

        const Vec2 P(s, pd.q0 + pd.kappa * v * v);
        const Vec2 Ps(1.0, 2.0 * pd.kappa * v);
        const Vec2 Pss(0.0, 2.0 * pd.kappa);
        const Vec2 Pt(0.0, pd.q0_t + pd.kappa_t * v * v - 2.0 * pd.kappa * v * pd.c_t);
        const Vec2 Px(0.0, pd.q0_x - 2.0 * pd.kappa * v * pd.c_x);
        const Vec2 Psx(0.0, -2.0 * pd.kappa * pd.c_x);
        const Vec2 Pxx(0.0, pd.q0_xx + 2.0 * pd.kappa * pd.c_x * pd.c_x);

        const double ps_norm = Ps.norm();
        const Vec2 nu = rot_cw(Ps) / ps_norm;
        const Vec2 diff = yv - P;

        const double Gs = -Ps.squaredNorm() + diff.dot(Pss);
        const double Gx = -Px.dot(Ps) + diff.dot(Psx);
        const double sx = -Gx / Gs;

        const Vec2 nu_s = rot_cw(Pss) / ps_norm - rot_cw(Ps) * (Ps.dot(Pss) / std::pow(ps_norm, 3));
        const Vec2 nu_x = rot_cw(Psx) / ps_norm - rot_cw(Ps) * (Ps.dot(Psx) / std::pow(ps_norm, 3));
        const Vec2 nu_total_x = nu_x + nu_s * sx;

        DerivativeBundle b;
        b.grad_t = -Pt.dot(nu);
        b.grad_x = Vec{{-Px.dot(nu)}};
        b.grad_y = Vec{{nu.x(), nu.y()}};
        Mat hyy = -(nu_s * Ps.transpose()) / Gs;
        b.hess_yy = 0.5 * (hyy + hyy.transpose());
        b.hess_xy = Mat(2, 1);
        b.hess_xy.col(0) = nu_total_x;
        b.hess_xx = Mat{{-Pxx.dot(nu) - Psx.dot(nu) * sx - Px.dot(nu_total_x)}};
        return b;
    };
    return oracle;
}

} // namespace

double mv_phi1(double T, double t) { return 1.0 / (std::exp(T - t) - 1.0); }

double mv_phi2(double T, double t, double x, double y1) {
    return 2.0 * mv_phi1(T, t) * (y1 - x);
}

double mv_phi3(double T, double t, double x, double y1) {
    const double p2 = mv_phi2(T, t, x, y1);
    return std::sqrt(1.0 + p2 * p2);
}

SetOracle mean_variance_oracle(double T, MVCoords coords) {
    ParabolaEval eval;
    if (coords == MVCoords::Transformed) {
        eval = [T](double t, double x) {
            const double tau = T - t;
            const double phi1 = 1.0 / (std::exp(tau) - 1.0);
            const double phi1_t = std::exp(tau) * phi1 * phi1;
            ParabolaData pd{};
            pd.q0 = pd.q0_t = pd.q0_x = pd.q0_xx = 0.0;
            pd.kappa = phi1;
            pd.kappa_t = phi1_t;
            pd.c = x;
            pd.c_t = 0.0;
            pd.c_x = 1.0;
            return pd;
        };
    } else {
        eval = [T](double t, double x) {
            const double em = std::exp(-(T - t)); // grows toward 1 as t -> T
            const double kappa = 1.0 / (1.0 - em);
            ParabolaData pd{};
            pd.q0 = em * x * x;
            pd.q0_t = em * x * x;
            pd.q0_x = 2.0 * em * x;
            pd.q0_xx = 2.0 * em;
            pd.kappa = kappa;
            pd.kappa_t = kappa * kappa * em;
            pd.c = x * em;
            pd.c_t = x * em;
            pd.c_x = em;
            return pd;
        };
    }
    return parabola_oracle(eval, T);
}

// ---------------------------------------------------------------------------
// Nonconvex family
// ---------------------------------------------------------------------------

namespace {

Vec2 curve_point(double tau, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    return Vec2(tau * c, tau * (1.0 + tau * tau * c * c) * s);
}

Vec2 curve_tangent(double tau, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    const double t2 = tau * tau;
    return Vec2(-tau * s, tau * c * (1.0 + t2 * c * c - 2.0 * t2 * s * s));
}

Vec2 curve_second(double tau, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    const double t2 = tau * tau;
    // derivative of curve_tangent in theta
    const double d2y =
        -tau * s * (1.0 + t2 * c * c - 2.0 * t2 * s * s) - 6.0 * tau * t2 * c * c * s;
    return Vec2(-tau * c, d2y);
}

// Foot parameter on the closed curve: dense grid then Newton on the squared
// distance, keeping the best of the refined local minima.
double curve_foot(double tau, const Vec2& y, int grid, int newton_iters) {
    double best_theta = 0.0;
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, double>> seeds; // (dist, theta) at grid local minima
    seeds.reserve(8);
    std::vector<double> dist(grid);
    for (int k = 0; k < grid; ++k)
        dist[k] = (y - curve_point(tau, 2.0 * M_PI * k / grid)).squaredNorm();
    for (int k = 0; k < grid; ++k) {
        const double dm = dist[(k + grid - 1) % grid], d0 = dist[k], dp = dist[(k + 1) % grid];
        if (d0 <= dm && d0 <= dp) seeds.emplace_back(d0, 2.0 * M_PI * k / grid);
    }
    std::sort(seeds.begin(), seeds.end());
    if (seeds.size() > 3) seeds.resize(3);
    const double step_cap = 2.0 * M_PI / grid;
    for (auto [d0, theta] : seeds) {
        double th = theta;
        for (int it = 0; it < newton_iters; ++it) {
            const Vec2 P = curve_point(tau, th);
            const Vec2 Pt = curve_tangent(tau, th);
            const Vec2 Ptt = curve_second(tau, th);
            const double F1 = -2.0 * (y - P).dot(Pt);
            const double F2 = 2.0 * (Pt.squaredNorm() - (y - P).dot(Ptt));
            if (F2 <= 0.0) break;
            double step = -F1 / F2;
            step = std::clamp(step, -step_cap, step_cap);
            th += step;
        }
        const double dd = (y - curve_point(tau, th)).squaredNorm();
        if (dd < best) {
            best = dd;
            best_theta = th;
        }
    }
    return best_theta;
}

} // namespace

Eigen::Vector2d nonconvex_boundary_point(const NonconvexSet& set, double t, double theta) {
    return curve_point(set.T - t, theta);
}

SetOracle nonconvex_oracle(const NonconvexSet& set) {
    const double T = set.T;
    const int grid = set.grid;
    const int newton_iters = set.newton_iters;

    SetOracle oracle;
    oracle.state_dim = 0;
    oracle.value_dim = 2;
    oracle.horizon = T;
    oracle.delta_min = 1e-3 * T;
    oracle.graph_tol = 1e-5; // finite-difference family
    oracle.fd_steps = FdSteps{1e-5, 1e-4};
    oracle.band_fn = [T](double t, const Vec&) { return 0.1 * (T - t); };

    oracle.r_eval = [T, grid, newton_iters](double t, const Vec&, const Vec& y) {
        const double tau = T - t;
        const Vec2 yv(y(0), y(1));
        const double theta = curve_foot(tau, yv, grid, newton_iters);
        const Vec2 P = curve_point(tau, theta);
        const Vec2 Pt = curve_tangent(tau, theta);
        const Vec2 nu = Vec2(Pt.y(), -Pt.x()).normalized(); // outward for a CCW curve
        return nu.dot(yv - P);
    };

    oracle.projector = [T, grid, newton_iters](double t, const Vec&, const Vec& y) -> Vec {
        const double tau = T - t;
        const Vec2 yv(y(0), y(1));
        const double theta = curve_foot(tau, yv, grid, newton_iters);
        const Vec2 P = curve_point(tau, theta);
        return Vec{{P.x(), P.y()}};
    };
    return oracle;
}

SetOracle nonconvex_oracle(double T) { return nonconvex_oracle(NonconvexSet{T}); }

bool convexity_check(const NonconvexSet& set, double t, int samples) {
    const double tau = set.T - t;
    std::vector<Vec2> pts(samples);
    for (int k = 0; k < samples; ++k) pts[k] = curve_point(tau, 2.0 * M_PI * k / samples);
    const double tol = 1e-12 * tau * tau;
    for (int k = 0; k < samples; ++k) {
        const Vec2 e1 = pts[(k + 1) % samples] - pts[k];
        const Vec2 e2 = pts[(k + 2) % samples] - pts[(k + 1) % samples];
        if (e1.x() * e2.y() - e1.y() * e2.x() < -tol) return false;
    }
    return true;
}

bool convexity_analytic(const NonconvexSet& set, double t) {
    return (set.T - t) <= 1.0 / std::sqrt(2.0) + 1e-15;
}

double midpoint_violation(const NonconvexSet& set, double t, int samples) {
    SetOracle oracle = nonconvex_oracle(set);
    const double tau = set.T - t;
    const Vec x0(0);
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
        const double a = 2.0 * M_PI * i / samples;
        const double b = a + 2.0 * M_PI / samples * 7.0; // short chords catch the local bulge
        const Vec2 mid = 0.5 * (curve_point(tau, a) + curve_point(tau, b));
        worst = std::max(worst, oracle.r(t, x0, Vec{{mid.x(), mid.y()}}));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Interval family
// ---------------------------------------------------------------------------

SetOracle interval_oracle(const IntervalSet& interval) {
    const int d = interval.d;
    auto lo = interval.lower;
    auto hi = interval.upper;
    auto lo_t = interval.lower_t ? interval.lower_t : [](double, const Vec&) { return 0.0; };
    auto hi_t = interval.upper_t ? interval.upper_t : [](double, const Vec&) { return 0.0; };
    auto lo_x = interval.lower_x ? interval.lower_x : [d](double, const Vec&) { return Vec::Zero(d); };
    auto hi_x = interval.upper_x ? interval.upper_x : [d](double, const Vec&) { return Vec::Zero(d); };
    auto lo_xx = interval.lower_xx ? interval.lower_xx : [d](double, const Vec&) { return Mat::Zero(d, d); };
    auto hi_xx = interval.upper_xx ? interval.upper_xx : [d](double, const Vec&) { return Mat::Zero(d, d); };

    auto endpoints = [lo, hi](double t, const Vec& x, double& l, double& u) {
        l = lo(t, x);
        u = hi(t, x);
        if (l >= u) throw EmptyInterval("lower >= upper");
    };

    SetOracle oracle;
    oracle.state_dim = d;
    oracle.value_dim = 1;
    oracle.horizon = interval.horizon;
    if (std::isfinite(interval.horizon)) oracle.delta_min = 1e-3 * interval.horizon;
    oracle.graph_tol = 1e-8;
    oracle.band_fn = [endpoints](double t, const Vec& x) {
        double l, u;
        endpoints(t, x, l, u);
        return 0.45 * (u - l);
    };

    oracle.r_eval = [endpoints](double t, const Vec& x, const Vec& y) {
        double l, u;
        endpoints(t, x, l, u);
        return std::max(l - y(0), y(0) - u);
    };

    oracle.projector = [endpoints](double t, const Vec& x, const Vec& y) -> Vec {
        double l, u;
        endpoints(t, x, l, u);
        return Vec{{(y(0) >= 0.5 * (l + u)) ? u : l}};
    };

    oracle.analytic = [=](double t, const Vec& x, const Vec& y) {
        double l, u;
        endpoints(t, x, l, u);
        const bool upper_sheet = y(0) >= 0.5 * (l + u);
        DerivativeBundle b;
        b.hess_yy = Mat::Zero(1, 1);
        b.hess_xy = Mat::Zero(1, d);
        if (upper_sheet) { // r = y - upper
            b.grad_t = -hi_t(t, x);
            b.grad_x = -hi_x(t, x);
            b.grad_y = Vec{{1.0}};
            b.hess_xx = -hi_xx(t, x);
        } else { // r = lower - y
            b.grad_t = lo_t(t, x);
            b.grad_x = lo_x(t, x);
            b.grad_y = Vec{{-1.0}};
            b.hess_xx = lo_xx(t, x);
        }
        return b;
    };
    return oracle;
}

// ---------------------------------------------------------------------------
// Product-graph set
// ---------------------------------------------------------------------------

namespace {

struct InnerGrad {
    Vec g; // size d + m, gradient of r in (x, y) jointly
};

InnerGrad inner_joint_grad(const SetOracle& inner, double t, const Vec& x, const Vec& y) {
    const int d = inner.state_dim, m = inner.value_dim;
    InnerGrad out;
    out.g = Vec(d + m);
    if (inner.has_analytic()) {
        const DerivativeBundle b = inner.analytic(t, x, y);
        out.g.head(d) = b.grad_x;
        out.g.tail(m) = b.grad_y;
        return out;
    }
    const double h = inner.fd_steps.first;
    Vec xp = x, xm = x, yp = y, ym = y;
    for (int i = 0; i < d; ++i) {
        xp(i) += h; xm(i) -= h;
        out.g(i) = (inner.r(t, xp, y) - inner.r(t, xm, y)) / (2.0 * h);
        xp(i) = x(i); xm(i) = x(i);
    }
    for (int i = 0; i < m; ++i) {
        yp(i) += h; ym(i) -= h;
        out.g(d + i) = (inner.r(t, x, yp) - inner.r(t, x, ym)) / (2.0 * h);
        yp(i) = y(i); ym(i) = y(i);
    }
    return out;
}

// Nearest point of the graph surface { r(t, x, y) = 0 } in R^{d+m}:
// alternate level-set landing with tangential sliding toward the query.
Vec joint_project(const SetOracle& inner, double t, const Vec& z0) {
    const int d = inner.state_dim, m = inner.value_dim;
    auto r_at = [&](const Vec& z) { return inner.r(t, z.head(d), z.tail(m)); };
    auto grad_at = [&](const Vec& z) { return inner_joint_grad(inner, t, z.head(d), z.tail(m)).g; };

    auto land = [&](Vec& z, int iters) {
        for (int it = 0; it < iters; ++it) {
            const double F = r_at(z);
            if (std::abs(F) < 1e-13) return true;
            const Vec g = grad_at(z);
            const double g2 = g.squaredNorm();
            if (g2 < 1e-12) return false;
            z -= (F / g2) * g;
        }
        return std::abs(r_at(z)) < 1e-10;
    };

    Vec z = z0;
    if (!land(z, 50)) throw NoConvergence("product projection failed to reach the surface");
    for (int it = 0; it < 120; ++it) {
        const Vec g = grad_at(z);
        const Vec nu = g.normalized();
        Vec dvec = z - z0;
        const Vec dT = dvec - dvec.dot(nu) * nu;
        if (dT.norm() < 1e-13) break;
        z -= dT;
        land(z, 8);
    }
    land(z, 20);
    return z;
}

} // namespace

SetOracle product_graph_oracle(const SetOracle& inner) {
    const int d = inner.state_dim, m = inner.value_dim;

    SetOracle oracle;
    oracle.state_dim = 0;
    oracle.value_dim = d + m;
    oracle.horizon = inner.horizon;
    oracle.delta_min = inner.delta_min;
    oracle.graph_tol = 1e-7;
    oracle.epsilon_band = inner.epsilon_band;
    oracle.fd_steps = inner.fd_steps;

    oracle.r_eval = [inner, d, m](double t, const Vec&, const Vec& yhat) {
        const double inner_r = inner.r(t, yhat.head(d), yhat.tail(m));
        const Vec z = joint_project(inner, t, yhat);
        const double dist = (z - yhat).norm();
        return inner_r < 0.0 ? -dist : dist;
    };

    oracle.projector = [inner](double t, const Vec&, const Vec& yhat) {
        return joint_project(inner, t, yhat);
    };

    oracle.band_fn = [inner, d](double t, const Vec&) {
        return inner.band_at(t, Vec::Zero(d));
    };
    return oracle;
}

} // namespace svhjb
