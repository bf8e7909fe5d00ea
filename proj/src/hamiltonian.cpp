#include "svhjb/hamiltonian.hpp"

#include <cmath>

#include "svhjb/reference_sets.hpp"
#include "svhjb/rng.hpp"

namespace svhjb {

Vec correction_K(const GraphPoint& point, const IntrinsicDerivatives& derivs,
                 const Mat& sigma_val, const Mat& zeta, bool enforce_tangential) {
    if (enforce_tangential) {
        const Vec misalign = zeta.transpose() * point.normal;
        if (misalign.cwiseAbs().maxCoeff() > 1e-8)
            throw NonTangentialZeta("zeta column has normal component " +
                                    std::to_string(misalign.cwiseAbs().maxCoeff()));
    }
    const double scalar = (zeta.transpose() * derivs.dx_n * sigma_val).trace() +
                          0.5 * (zeta.transpose() * derivs.dy_n * zeta).trace();
    return scalar * point.normal;
}

double hamiltonian_objective(const ControlProblem& problem, const GraphPoint& point,
                             const IntrinsicDerivatives& derivs, const Vec& a, const Mat& zeta) {
    const Vec& n = point.normal;
    const Vec bv = problem.b(point.t, point.x, a);
    const Mat sv = problem.sigma(point.t, point.x, a);
    const Mat z = derivs.dx_V * sv + zeta;
    const double correction = (zeta.transpose() * derivs.dx_n * sv).trace() +
                              0.5 * (zeta.transpose() * derivs.dy_n * zeta).trace();
    return n.dot(derivs.dx_V * bv) + 0.5 * n.dot(trace_form(derivs.dxx_V, sv)) - correction +
           n.dot(problem.f(point.t, point.x, point.y, z, a));
}

namespace {

// Tangential restriction of the shape operator; its positive definiteness is
// what keeps the zeta-supremum finite.
Mat tangential_hessian(const GraphPoint& point, const IntrinsicDerivatives& derivs) {
    return point.tangent_basis.transpose() * derivs.dy_n * point.tangent_basis;
}

double smallest_eigenvalue(const Mat& s) {
    if (s.rows() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Mat> es(s);
    return es.eigenvalues().minCoeff();
}

// Exact zeta-maximizer for drivers affine in z, in tangent coordinates.
// Returns the optimal zeta and the value gain over zeta = 0.
struct InnerSolution {
    Mat zeta;
    double gain = 0.0;
};

InnerSolution inner_affine(const ControlProblem& problem, const GraphPoint& point,
                           const IntrinsicDerivatives& derivs, const Vec& a,
                           const Eigen::LDLT<Mat>& s_solver) {
    const int m = problem.m, d = problem.d;
    const Mat& basis = point.tangent_basis;
    const int mt = static_cast<int>(basis.cols());
    InnerSolution sol;
    sol.zeta = Mat::Zero(m, d);
    if (mt == 0) return sol;

    const Mat sv = problem.sigma(point.t, point.x, a);
    const Mat z0 = derivs.dx_V * sv;
    const Vec f0 = problem.f(point.t, point.x, point.y, z0, a);

    // linear response of n . f to a unit zeta entry
    Mat lin(m, d);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < d; ++j) {
            Mat z = z0;
            z(i, j) += 1.0;
            lin(i, j) = point.normal.dot(problem.f(point.t, point.x, point.y, z, a) - f0);
        }
    const Mat gain_matrix = lin - derivs.dx_n * sv; // Frobenius pairing with zeta

    for (int j = 0; j < d; ++j) {
        const Vec gj = basis.transpose() * gain_matrix.col(j);
        const Vec cj = s_solver.solve(gj);
        sol.zeta.col(j) = basis * cj;
        sol.gain += 0.5 * gj.dot(cj);
    }
    return sol;
}

// Damped Newton ascent over tangent coordinates for general drivers,
// starting from the affine solution.
Mat inner_iterative(const ControlProblem& problem, const GraphPoint& point,
                    const IntrinsicDerivatives& derivs, const Vec& a, Mat zeta0) {
    const int d = problem.d;
    const Mat& basis = point.tangent_basis;
    const int mt = static_cast<int>(basis.cols());
    if (mt == 0) return zeta0;

    const int nvar = mt * d;
    auto unpack = [&](const Vec& c) {
        Mat zeta(problem.m, d);
        for (int j = 0; j < d; ++j) zeta.col(j) = basis * c.segment(j * mt, mt);
        return zeta;
    };
    auto value = [&](const Vec& c) {
        return hamiltonian_objective(problem, point, derivs, a, unpack(c));
    };

    Vec c(nvar);
    for (int j = 0; j < d; ++j) c.segment(j * mt, mt) = basis.transpose() * zeta0.col(j);

    const double h = 1e-5;
    for (int it = 0; it < 50; ++it) {
        const double f0 = value(c);
        Vec grad(nvar);
        Mat hess(nvar, nvar);
        for (int i = 0; i < nvar; ++i) {
            Vec cp = c, cm = c;
            cp(i) += h;
            cm(i) -= h;
            const double fp = value(cp), fm = value(cm);
            grad(i) = (fp - fm) / (2.0 * h);
            hess(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
            for (int j = i + 1; j < nvar; ++j) {
                Vec cpp = c, cpm = c, cmp = c, cmm = c;
                cpp(i) += h; cpp(j) += h;
                cpm(i) += h; cpm(j) -= h;
                cmp(i) -= h; cmp(j) += h;
                cmm(i) -= h; cmm(j) -= h;
                const double v =
                    (value(cpp) - value(cpm) - value(cmp) + value(cmm)) / (4.0 * h * h);
                hess(i, j) = v;
                hess(j, i) = v;
            }
        }
        if (grad.norm() < 1e-12) break;
        Eigen::LDLT<Mat> ldlt(-hess);
        Vec step;
        if (ldlt.info() == Eigen::Success && ldlt.isPositive())
            step = ldlt.solve(grad);
        else
            step = grad; // fall back to plain ascent
        double scale = 1.0;
        while (scale > 1e-6 && value(c + scale * step) < f0) scale *= 0.5;
        if (scale <= 1e-6) break;
        c += scale * step;
        if ((scale * step).norm() < 1e-12) break;
    }
    return unpack(c);
}

std::vector<Vec> enumerate_grid(const ControlGrid& grid) {
    const int dim = static_cast<int>(grid.lo.size());
    const int n = grid.points_per_dim;
    if (n < 1) throw EmptyControlGrid("control grid has no points");
    std::vector<Vec> out;
    std::vector<int> idx(dim, 0);
    const std::size_t total = static_cast<std::size_t>(std::pow(n, dim));
    out.reserve(total);
    for (std::size_t k = 0; k < total; ++k) {
        Vec a(dim);
        for (int j = 0; j < dim; ++j) {
            const double w = (n == 1) ? 0.5 : static_cast<double>(idx[j]) / (n - 1);
            a(j) = grid.lo(j) + w * (grid.hi(j) - grid.lo(j));
        }
        out.push_back(std::move(a));
        for (int j = 0; j < dim; ++j) {
            if (++idx[j] < n) break;
            idx[j] = 0;
        }
    }
    return out;
}

Mat mv_zeta_star(double T, const GraphPoint& point) {
    const double t = point.t, x = point.x(0), y1 = point.y(0);
    const double p1 = mv_phi1(T, t);
    const double p2 = mv_phi2(T, t, x, y1);
    const double p3 = mv_phi3(T, t, x, y1);
    const double z0 = p2 * (p1 - p2 * p2) / (2.0 * p1 * p3 * p3);
    Mat zeta(2, 1);
    zeta << z0, z0 * p2;
    return zeta;
}

} // namespace

HamiltonianValue hamiltonian_sup(const ControlProblem& problem, const SetOracle& oracle,
                                 const GraphPoint& point) {
    const IntrinsicDerivatives derivs = intrinsic_derivatives(oracle, point);
    const Mat s = tangential_hessian(point, derivs);
    const double lambda_min = smallest_eigenvalue(s);
    if (s.rows() > 0 && lambda_min <= 0.0)
        throw IndefiniteQuadratic("tangential shape operator eigenvalue " +
                                  std::to_string(lambda_min));
    Eigen::LDLT<Mat> s_solver(s);

    HamiltonianValue hv;
    hv.lambda_min = lambda_min;

    if (problem.tag == ClosedFormTag::AdditiveUnitBall) {
        hv.a_star = point.normal;
        const InnerSolution inner = inner_affine(problem, point, derivs, hv.a_star, s_solver);
        hv.zeta_star = inner.zeta;
        hv.value = hamiltonian_objective(problem, point, derivs, hv.a_star, hv.zeta_star);
        hv.inner_status = HamiltonianValue::Inner::ClosedForm;
        return hv;
    }
    if (problem.tag == ClosedFormTag::MeanVariance) {
        const double T = oracle.horizon;
        const double p1 = mv_phi1(T, point.t);
        hv.a_star = Vec{{(1.0 + p1) * (point.y(0) - point.x(0))}};
        hv.zeta_star = mv_zeta_star(T, point);
        hv.value = hamiltonian_objective(problem, point, derivs, hv.a_star, hv.zeta_star);
        hv.inner_status = HamiltonianValue::Inner::ClosedForm;
        return hv;
    }

    if (!problem.grid) throw EmptyControlGrid("no control grid and no closed-form tag");
    const std::vector<Vec> controls = enumerate_grid(*problem.grid);
    bool first = true;
    for (const Vec& a : controls) {
        InnerSolution inner = inner_affine(problem, point, derivs, a, s_solver);
        Mat zeta = inner.zeta;
        if (!problem.z_affine) zeta = inner_iterative(problem, point, derivs, a, zeta);
        const double value = hamiltonian_objective(problem, point, derivs, a, zeta);
        if (first || value > hv.value) {
            hv.value = value;
            hv.a_star = a;
            hv.zeta_star = zeta;
            first = false;
        }
    }
    hv.inner_status = problem.z_affine ? HamiltonianValue::Inner::Grid
                                       : HamiltonianValue::Inner::Iterative;
    return hv;
}

HJBResidual hjb_residual(const ControlProblem& problem, const SetOracle& oracle,
                         const GraphPoint& point) {
    const IntrinsicDerivatives derivs = intrinsic_derivatives(oracle, point);
    const HamiltonianValue hv = hamiltonian_sup(problem, oracle, point);

    HJBResidual res;
    res.lambda_min = hv.lambda_min;
    res.a_star = hv.a_star;
    res.zeta_star = hv.zeta_star;
    res.n_form = point.normal.dot(derivs.dt_V) + hv.value;

    // Same optimizer, evaluated through the raw signed-distance derivatives.
    const DerivativeBundle bundle = oracle.bundle(point.t, point.x, point.y);
    const Vec bv = problem.b(point.t, point.x, hv.a_star);
    const Mat sv = problem.sigma(point.t, point.x, hv.a_star);
    const Mat& zeta = hv.zeta_star;
    const Mat z_arg = -bundle.grad_y * (bundle.grad_x.transpose() * sv) + zeta;
    const double bracket =
        bundle.grad_x.dot(bv) + 0.5 * (sv.transpose() * bundle.hess_xx * sv).trace() +
        (zeta.transpose() * bundle.hess_xy * sv).trace() +
        0.5 * (zeta.transpose() * bundle.hess_yy * zeta).trace() -
        bundle.grad_y.dot(problem.f(point.t, point.x, point.y, z_arg, hv.a_star));
    res.r_form = bundle.grad_t + bracket;
    return res;
}

double set_heat_residual(const SetOracle& oracle, const GraphPoint& point) {
    const IntrinsicDerivatives derivs = intrinsic_derivatives(oracle, point);
    const int d = static_cast<int>(point.x.size());
    const int m = static_cast<int>(point.y.size());
    Vec lap = Vec::Zero(m);
    for (int k = 0; k < m; ++k)
        for (int i = 0; i < d; ++i) lap(k) += derivs.dxx_V[k](i, i);
    return point.normal.dot(derivs.dt_V + 0.5 * lap);
}

std::pair<double, double> scalar_reduction_residual(const ControlProblem& problem,
                                                    const IntervalSet& interval, double t,
                                                    const Vec& x) {
    if (problem.m != 1) throw Error("scalar reduction needs m = 1");
    const SetOracle oracle = interval_oracle(interval);
    if (!problem.grid) throw EmptyControlGrid("scalar reduction optimizes over a grid");
    const std::vector<Vec> controls = enumerate_grid(*problem.grid);

    auto sheet_residual = [&](double y_val, bool maximize) {
        const DerivativeBundle b = oracle.bundle(t, x, Vec{{y_val}});
        // r = +-(y - v) on the sheet, so v-derivatives carry the opposite sign
        // of the r-derivatives; grad_y is +-1.
        const double sheet_sign = b.grad_y(0);
        const double v_t = -sheet_sign * b.grad_t;
        const Vec v_x = -sheet_sign * b.grad_x;
        const Mat v_xx = -sheet_sign * b.hess_xx;
        bool first = true;
        double best = 0.0;
        for (const Vec& a : controls) {
            const Vec bv = problem.b(t, x, a);
            const Mat sv = problem.sigma(t, x, a);
            const Mat z = v_x.transpose() * sv; // 1 x d
            const double val = v_x.dot(bv) + 0.5 * (sv.transpose() * v_xx * sv).trace() +
                               problem.f(t, x, Vec{{y_val}}, z, a)(0);
            if (first || (maximize ? val > best : val < best)) {
                best = val;
                first = false;
            }
        }
        return v_t + best;
    };

    const double lo = interval.lower(t, x), hi = interval.upper(t, x);
    return {sheet_residual(lo, false), sheet_residual(hi, true)};
}

double hat_equation_residual(const SetOracle& product_oracle, double t, const Vec& yhat) {
    if (product_oracle.value_dim != 2)
        throw Error("hat equation residual needs a d = m = 1 product oracle");
    const Vec empty(0);
    const DerivativeBundle b = product_oracle.fd_bundle(t, empty, yhat);
    const double gx = b.grad_y(0), gy = b.grad_y(1);
    if (std::abs(gy) < 0.1)
        throw DegenerateYGradient("|grad_y r| = " + std::to_string(std::abs(gy)));
    const double ratio = gx / gy;
    return b.grad_t + 0.5 * (b.hess_yy(0, 0) - 2.0 * b.hess_yy(0, 1) * ratio +
                             b.hess_yy(1, 1) * ratio * ratio);
}

ControlProblem make_additive_ball_problem(std::function<Vec(double, const Vec&)> f0,
                                          int grid_points) {
    ControlProblem p;
    p.d = 1;
    p.m = 2;
    p.control_dim = 2;
    p.b = [](double, const Vec&, const Vec&) { return Vec::Zero(1); };
    p.sigma = [](double, const Vec&, const Vec&) { return Mat::Identity(1, 1); };
    auto base = f0 ? f0 : [](double, const Vec&) { return Vec::Zero(2); };
    p.f = [base](double t, const Vec& x, const Vec&, const Mat&, const Vec& a) {
        return Vec(base(t, x) + a);
    };
    p.g = [](const Vec&) { return Vec::Zero(2); };
    p.grid = ControlGrid{Vec{{-1.0, -1.0}}, Vec{{1.0, 1.0}}, grid_points};
    p.tag = ClosedFormTag::AdditiveUnitBall;
    p.z_affine = true;
    return p;
}

ControlProblem make_mv_problem() {
    ControlProblem p;
    p.d = 1;
    p.m = 2;
    p.control_dim = 1;
    p.b = [](double, const Vec&, const Vec& a) { return Vec{{a(0)}}; };
    p.sigma = [](double, const Vec&, const Vec& a) { return Mat{{a(0)}}; };
    p.f = [](double, const Vec&, const Vec&, const Mat& z, const Vec&) {
        return Vec{{0.0, z(0, 0) * z(0, 0)}};
    };
    p.g = [](const Vec& x) { return Vec{{x(0), 0.0}}; };
    p.tag = ClosedFormTag::MeanVariance;
    p.z_affine = false;
    return p;
}

bool check_z_affinity(const ControlProblem& problem, double t, const Vec& x, const Vec& y,
                      const Vec& a, std::uint64_t seed, int trials, double tol) {
    NormalStream stream(seed, 0);
    const int m = problem.m, d = problem.d;
    for (int k = 0; k < trials; ++k) {
        Mat z0(m, d), dz(m, d);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < d; ++j) {
                z0(i, j) = stream.next();
                dz(i, j) = stream.next();
            }
        const Vec f0 = problem.f(t, x, y, z0, a);
        const Vec f1 = problem.f(t, x, y, z0 + dz, a);
        const Vec f2 = problem.f(t, x, y, z0 + 2.0 * dz, a);
        if ((f2 - 2.0 * f1 + f0).cwiseAbs().maxCoeff() > tol) return false;
    }
    return true;
}

} // namespace svhjb
