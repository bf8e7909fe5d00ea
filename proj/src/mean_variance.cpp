#include "svhjb/mean_variance.hpp"

#include <cmath>

#include "svhjb/reference_sets.hpp"
#include "svhjb/rng.hpp"

namespace svhjb {

MVStatic static_solution(const MVParams& params) {
    const double growth = std::exp(params.T) - 1.0;
    MVStatic s;
    s.V0 = params.x0 + growth / (2.0 * params.lambda);
    s.y1 = params.x0 + growth / params.lambda;
    s.y2 = s.y1 * s.y1 + growth / (params.lambda * params.lambda);
    return s;
}

double moving_scalarization(const MVParams& params, double t, double x_path_value) {
    const double denom = std::exp(params.T) - params.lambda * (x_path_value - params.x0);
    if (denom <= 0.0)
        throw ScalarizationBlowup("scalarization denominator " + std::to_string(denom));
    return params.lambda * std::exp(params.T - t) / denom;
}

double optimal_control(const MVParams& params, double t, double x_value) {
    (void)t;
    return -x_value + params.x0 + std::exp(params.T) / params.lambda;
}

double value_process(const MVParams& params, double t, double x_value) {
    const double e = std::exp(t - params.T);
    return 0.5 * (1.0 + e) * x_value + 0.5 * (1.0 - e) * params.x0 +
           std::exp(params.T) / (2.0 * params.lambda) * (1.0 - e);
}

double closed_form_gap(const MVParams& params, double t, double x_value) {
    return (std::exp(params.T) - std::exp(t)) / params.lambda -
           (1.0 - std::exp(t - params.T)) * (x_value - params.x0);
}

double truncated_objective(const MVParams& params, double t_end) {
    // X - x0 - c with c = e^T / lambda is a geometric Brownian motion, so
    // the first two moments of X_t are explicit.
    const double c = std::exp(params.T) / params.lambda;
    const double em = std::exp(-t_end);
    const double mean = params.x0 + c * (1.0 - em);
    const double var = c * c * em * (1.0 - em);
    return mean - 0.5 * params.lambda * var;
}

MVSimulationResult simulate_optimal(const MVParams& params, double dt, int paths,
                                    std::uint64_t seed, int store_paths, bool zero_noise) {
    const double T = params.T;
    const double guard = params.terminal_guard();
    const double t_end = T - guard;
    const int steps = static_cast<int>(std::llround(t_end / dt));
    if (std::abs(steps * dt - t_end) > 1e-9 * std::max(1.0, t_end))
        throw StepTooLarge("grid must stop exactly at T - delta_min");
    if (t_end + 0.5 * dt >= T)
        throw StepTooLarge("time grid reaches the collapse time");

    const double sqdt = std::sqrt(dt);
    const double admissibility_cap = std::exp(T) / params.lambda;

    // shared per-step coefficients
    std::vector<double> phi1(steps), one_plus_phi1(steps), gap_A(steps + 1), gap_mu(steps + 1);
    for (int k = 0; k < steps; ++k) {
        const double t = k * dt;
        phi1[k] = mv_phi1(T, t);
        one_plus_phi1[k] = 1.0 + phi1[k];
    }
    for (int k = 0; k <= steps; ++k) {
        const double t = k * dt;
        gap_A[k] = (std::exp(T) - std::exp(t)) / params.lambda;
        gap_mu[k] = 1.0 - std::exp(t - T);
    }

    MVSimulationResult res;
    res.dt = dt;
    res.t_end = t_end;
    res.seed = seed;
    res.paths = paths;

    const MVStatic stat = static_solution(params);
    std::vector<double> terminal(paths);
    store_paths = std::min(store_paths, paths);
    res.stored_paths.resize(store_paths);

    double global_defect = 0.0;
    int positivity_violations = 0, admissibility_violations = 0;

    for (int p = 0; p < paths; ++p) {
        NormalStream stream(seed, static_cast<std::uint64_t>(p));
        double X = params.x0;
        double U = stat.y1;
        double defect = 0.0;
        bool admissible = true;
        bool positive = true;

        MVPath* stored = p < store_paths ? &res.stored_paths[p] : nullptr;
        auto push = [&](int k) {
            if (!stored) return;
            const double t = k * dt;
            stored->t.push_back(t);
            stored->X.push_back(X);
            stored->U1.push_back(U);
            stored->Lambda.push_back(moving_scalarization(params, t, X));
            stored->V.push_back(value_process(params, t, X));
        };
        push(0);

        for (int k = 0; k < steps; ++k) {
            const double gap = U - X;
            defect = std::max(defect, std::abs(gap - (gap_A[k] - gap_mu[k] * (X - params.x0))));
            if (gap <= 0.0) positive = false;
            if (X - params.x0 >= admissibility_cap) admissible = false;
            const double dB = zero_noise ? 0.0 : sqdt * stream.at(k);
            X += one_plus_phi1[k] * gap * (dt + dB);
            U += phi1[k] * gap * dB;
            push(k + 1);
        }
        const double gap = U - X;
        defect = std::max(defect, std::abs(gap - (gap_A[steps] - gap_mu[steps] * (X - params.x0))));
        if (gap <= 0.0) positive = false;
        if (X - params.x0 >= admissibility_cap) admissible = false;

        terminal[p] = X;
        global_defect = std::max(global_defect, defect);
        if (!positive) ++positivity_violations;
        if (!admissible) ++admissibility_violations;
        if (stored) {
            stored->admissible = admissible;
            stored->max_cf_defect = defect;
        }
    }

    // Moments in fixed path order; the estimate is independent of any
    // parallel scheduling of the path loop above.
    double mean = 0.0;
    for (double v : terminal) mean += v;
    mean /= paths;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : terminal) {
        const double dx = v - mean;
        m2 += dx * dx;
        m3 += dx * dx * dx;
        m4 += dx * dx * dx * dx;
    }
    m2 /= paths;
    m3 /= paths;
    m4 /= paths;
    const double n = static_cast<double>(paths);
    const double var_unbiased = m2 * n / (n - 1.0);
    const double lambda = params.lambda;

    res.mc_objective = mean - 0.5 * lambda * var_unbiased;
    // delta method: Var(mean) = m2/n, Var(S^2) ~ (m4 - m2^2)/n, Cov = m3/n
    const double var_obj =
        m2 / n + 0.25 * lambda * lambda * (m4 - m2 * m2) / n - lambda * m3 / n;
    res.mc_std_error = std::sqrt(std::max(var_obj, 0.0));
    res.target = truncated_objective(params, t_end);
    res.z_score = (res.mc_objective - res.target) / res.mc_std_error;
    res.max_cf_defect = global_defect;
    res.positivity_violations = positivity_violations;
    res.admissibility_violations = admissibility_violations;
    return res;
}

MVPath closed_form_path(const MVParams& params, int steps, std::uint64_t seed) {
    const double T = params.T;
    const double t_end = T - params.terminal_guard();
    const double dt = t_end / steps;
    const double sqdt = std::sqrt(dt);
    const double c = std::exp(T) / params.lambda;

    NormalStream stream(seed, 0);
    MVPath path;
    path.t.reserve(steps + 1);
    double W = 0.0;
    for (int k = 0; k <= steps; ++k) {
        const double t = k * dt;
        if (k > 0) W += sqdt * stream.at(k - 1);
        const double G = c * std::exp(-1.5 * t - W);
        const double X = params.x0 + c - G;
        const double U = X + closed_form_gap(params, t, X);
        path.t.push_back(t);
        path.X.push_back(X);
        path.U1.push_back(U);
        path.Lambda.push_back(moving_scalarization(params, t, X));
        path.V.push_back(value_process(params, t, X));
        if (U - X <= 0.0) path.admissible = false;
        if (X - params.x0 >= c) path.admissible = false;
    }
    return path;
}

double time_consistency_check(const MVParams& params, double t, double x_value,
                              double u1_value) {
    const double lambda_t = moving_scalarization(params, t, x_value);
    const double p2 = mv_phi2(params.T, t, x_value, u1_value);
    const double p3 = mv_phi3(params.T, t, x_value, u1_value);
    const Eigen::Vector2d weight(1.0, -0.5 * lambda_t);
    const Eigen::Vector2d n(p2 / p3, -1.0 / p3);
    const double cross = weight.x() * n.y() - weight.y() * n.x();
    const double sine = std::abs(cross) / (weight.norm() * n.norm());
    return std::asin(std::min(sine, 1.0));
}

} // namespace svhjb
