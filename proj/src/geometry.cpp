#include "svhjb/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "svhjb/rng.hpp"

namespace svhjb {

DerivativeBundle SetOracle::bundle(double t, const Vec& x, const Vec& y) const {
    check_time(t);
    if (analytic) return analytic(t, x, y);
    return fd_bundle(t, x, y);
}

DerivativeBundle SetOracle::fd_bundle(double t, const Vec& x, const Vec& y) const {
    check_time(t);
    const int d = state_dim, m = value_dim;
    const double h1 = fd_steps.first;
    const double h2 = fd_steps.second;
    const auto& f = r_eval;

    DerivativeBundle b;
    b.grad_x = Vec::Zero(d);
    b.grad_y = Vec::Zero(m);
    b.hess_xx = Mat::Zero(d, d);
    b.hess_xy = Mat::Zero(m, d);
    b.hess_yy = Mat::Zero(m, m);

    b.grad_t = (f(t + h1, x, y) - f(t - h1, x, y)) / (2.0 * h1);

    Vec xp = x, xm = x, yp = y, ym = y;
    for (int i = 0; i < d; ++i) {
        xp(i) = x(i) + h1; xm(i) = x(i) - h1;
        b.grad_x(i) = (f(t, xp, y) - f(t, xm, y)) / (2.0 * h1);
        xp(i) = x(i); xm(i) = x(i);
    }
    for (int i = 0; i < m; ++i) {
        yp(i) = y(i) + h1; ym(i) = y(i) - h1;
        b.grad_y(i) = (f(t, x, yp) - f(t, x, ym)) / (2.0 * h1);
        yp(i) = y(i); ym(i) = y(i);
    }

    const double r0 = f(t, x, y);
    auto shift = [](Vec v, int i, double h) { v(i) += h; return v; };

    for (int i = 0; i < d; ++i) {
        b.hess_xx(i, i) =
            (f(t, shift(x, i, h2), y) - 2.0 * r0 + f(t, shift(x, i, -h2), y)) / (h2 * h2);
        for (int j = i + 1; j < d; ++j) {
            Vec xpp = shift(shift(x, i, h2), j, h2);
            Vec xpm = shift(shift(x, i, h2), j, -h2);
            Vec xmp = shift(shift(x, i, -h2), j, h2);
            Vec xmm = shift(shift(x, i, -h2), j, -h2);
            const double v =
                (f(t, xpp, y) - f(t, xpm, y) - f(t, xmp, y) + f(t, xmm, y)) / (4.0 * h2 * h2);
            b.hess_xx(i, j) = v;
            b.hess_xx(j, i) = v;
        }
    }
    for (int i = 0; i < m; ++i) {
        b.hess_yy(i, i) =
            (f(t, x, shift(y, i, h2)) - 2.0 * r0 + f(t, x, shift(y, i, -h2))) / (h2 * h2);
        for (int j = i + 1; j < m; ++j) {
            Vec ypp = shift(shift(y, i, h2), j, h2);
            Vec ypm = shift(shift(y, i, h2), j, -h2);
            Vec ymp = shift(shift(y, i, -h2), j, h2);
            Vec ymm = shift(shift(y, i, -h2), j, -h2);
            const double v =
                (f(t, x, ypp) - f(t, x, ypm) - f(t, x, ymp) + f(t, x, ymm)) / (4.0 * h2 * h2);
            b.hess_yy(i, j) = v;
            b.hess_yy(j, i) = v;
        }
    }
    for (int i = 0; i < d; ++i) {
        Vec xi_p = shift(x, i, h2), xi_m = shift(x, i, -h2);
        for (int j = 0; j < m; ++j) {
            Vec yj_p = shift(y, j, h2), yj_m = shift(y, j, -h2);
            b.hess_xy(j, i) = (f(t, xi_p, yj_p) - f(t, xi_p, yj_m) - f(t, xi_m, yj_p) +
                               f(t, xi_m, yj_m)) /
                              (4.0 * h2 * h2);
        }
    }
    return b;
}

Vec SetOracle::grad_y(double t, const Vec& x, const Vec& y) const {
    if (analytic) return analytic(t, x, y).grad_y;
    const int m = value_dim;
    const double h = fd_steps.first;
    Vec g(m), yp = y, ym = y;
    for (int i = 0; i < m; ++i) {
        yp(i) = y(i) + h; ym(i) = y(i) - h;
        g(i) = (r_eval(t, x, yp) - r_eval(t, x, ym)) / (2.0 * h);
        yp(i) = y(i); ym(i) = y(i);
    }
    return g;
}

double signed_distance(const SetOracle& oracle, double t, const Vec& x, const Vec& y) {
    return oracle.r(t, x, y);
}

Vec normal(const SetOracle& oracle, double t, const Vec& x, const Vec& y) {
    const double r = oracle.r(t, x, y);
    if (std::abs(r) > oracle.graph_tol)
        throw NotOnGraph("normal requested at |r| = " + std::to_string(std::abs(r)));
    Vec g = oracle.grad_y(t, x, y);
    const double n = g.norm();
    if (n < 0.5) throw DegenerateGradient("|grad_y r| = " + std::to_string(n));
    return g / n;
}

namespace {

// Shared projection loop. max_iter halvings of the Newton step; no tube
// precondition so boundary_sample can start from far seeds.
bool project_iterate(const SetOracle& oracle, double t, const Vec& x, Vec& y, int max_iter,
                     double tol) {
    double r = oracle.r(t, x, y);
    for (int it = 0; it < max_iter; ++it) {
        if (std::abs(r) <= tol) return true;
        const Vec g = oracle.grad_y(t, x, y);
        if (g.squaredNorm() < 1e-12) return false;
        double step = 1.0;
        while (step > 1.0 / 1024.0) {
            const Vec cand = y - step * r * g;
            const double rc = oracle.r(t, x, cand);
            if (std::abs(rc) < std::abs(r)) {
                y = cand;
                r = rc;
                break;
            }
            step *= 0.5;
        }
        if (step <= 1.0 / 1024.0) return false;
    }
    return std::abs(oracle.r(t, x, y)) <= tol;
}

} // namespace

Vec project_to_boundary(const SetOracle& oracle, double t, const Vec& x, const Vec& y) {
    const double r0 = oracle.r(t, x, y);
    if (std::abs(r0) >= oracle.band_at(t, x))
        throw OutsideTube("projection requested at |r| = " + std::to_string(std::abs(r0)));
    if (oracle.projector) return oracle.projector(t, x, y);
    Vec p = y;
    if (!project_iterate(oracle, t, x, p, 100, 1e-10))
        throw NoConvergence("boundary projection did not converge");
    return p;
}

Mat tangent_basis(const Vec& n) {
    const int m = static_cast<int>(n.size());
    Mat basis(m, std::max(m - 1, 0));
    if (m <= 1) return basis;

    // Pick the m-1 standard basis vectors least aligned with the normal,
    // then orthonormalize against the normal and each other in that order.
    std::vector<int> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return std::abs(n(a)) < std::abs(n(b)); });

    int col = 0;
    for (int k = 0; k < m && col < m - 1; ++k) {
        Vec v = Vec::Zero(m);
        v(idx[k]) = 1.0;
        v -= (v.dot(n)) * n;
        for (int c = 0; c < col; ++c) v -= (v.dot(basis.col(c))) * basis.col(c);
        const double norm = v.norm();
        if (norm < 1e-10) continue;
        basis.col(col++) = v / norm;
    }
    if (col != m - 1) throw DegenerateGradient("tangent basis completion failed");
    return basis;
}

Vec tangent_project(const Vec& n, const Vec& v) { return v - (n.dot(v)) * n; }

GraphPoint make_graph_point(const SetOracle& oracle, double t, Vec x, Vec y) {
    GraphPoint p;
    p.t = t;
    p.normal = normal(oracle, t, x, y);
    p.tangent_basis = tangent_basis(p.normal);
    p.x = std::move(x);
    p.y = std::move(y);
    return p;
}

IntrinsicDerivatives intrinsic_derivatives(const GraphPoint& point, const DerivativeBundle& b) {
    const int d = static_cast<int>(point.x.size());
    const int m = static_cast<int>(point.y.size());
    const Vec& n = point.normal;

    IntrinsicDerivatives out;
    out.dt_V = -b.grad_t * n;
    out.dx_V = Mat(m, d);
    for (int i = 0; i < d; ++i) out.dx_V.col(i) = -b.grad_x(i) * n;

    // Shape operators: project onto the tangent space so that the exact
    // graph identities (columns orthogonal to n, n in the kernel) hold even
    // for noisy finite-difference Hessians.
    const Mat proj = Mat::Identity(m, m) - n * n.transpose();
    out.dx_n = proj * b.hess_xy;
    out.dy_n = proj * b.hess_yy * proj;
    out.dy_n = 0.5 * (out.dy_n + out.dy_n.transpose());

    out.dxx_V.assign(m, Mat::Zero(d, d));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            const Vec v = -b.hess_xx(i, j) * n - b.grad_x(j) * out.dx_n.col(i);
            for (int k = 0; k < m; ++k) out.dxx_V[k](i, j) = v(k);
        }
    return out;
}

IntrinsicDerivatives intrinsic_derivatives(const SetOracle& oracle, const GraphPoint& point) {
    return intrinsic_derivatives(point, oracle.bundle(point.t, point.x, point.y));
}

DerivativeBundle fd_derivative_bundle(const SetOracle& oracle, double t, const Vec& x,
                                      const Vec& y) {
    const double r = oracle.r(t, x, y);
    if (std::abs(r) >= oracle.band_at(t, x))
        throw OutsideTube("finite differences requested at |r| = " + std::to_string(std::abs(r)));
    return oracle.fd_bundle(t, x, y);
}

std::vector<Vec> boundary_sample(const SetOracle& oracle, double t, const Vec& x, int count,
                                 const Vec& box_lo, const Vec& box_hi) {
    const int m = oracle.value_dim;
    std::vector<Vec> out;
    out.reserve(count);
    std::vector<double> u(m);
    const std::uint64_t max_attempts = static_cast<std::uint64_t>(count) * 50 + 64;
    for (std::uint64_t k = 1; k <= max_attempts && static_cast<int>(out.size()) < count; ++k) {
        halton_point(k, m, u.data());
        Vec seed(m);
        for (int j = 0; j < m; ++j) seed(j) = box_lo(j) + u[j] * (box_hi(j) - box_lo(j));
        Vec p = seed;
        if (oracle.projector) {
            p = oracle.projector(t, x, seed);
            if (std::abs(oracle.r(t, x, p)) > oracle.graph_tol) continue;
        } else if (!project_iterate(oracle, t, x, p, 60, oracle.graph_tol)) {
            continue;
        }
        out.push_back(std::move(p));
    }
    if (out.empty()) throw NoBoundaryFound("no Halton seed projected onto the boundary");
    return out;
}

Vec trace_form(const std::vector<Mat>& dxx_V, const Mat& sigma) {
    const int m = static_cast<int>(dxx_V.size());
    Vec out(m);
    const Mat cov = sigma * sigma.transpose();
    for (int k = 0; k < m; ++k) out(k) = (dxx_V[k].array() * cov.array()).sum();
    return out;
}

} // namespace svhjb
