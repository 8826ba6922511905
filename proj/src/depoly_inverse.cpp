#include "depofrag/depoly_inverse.hpp"

#include "depofrag/errors.hpp"
#include "depofrag/smoothing_spline.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <stdexcept>

namespace depofrag {

namespace {

MomentSeries derivative_series(const SmoothingSpline& s, const std::vector<double>& times,
                               double scale) {
    MomentSeries out;
    out.times = times;
    out.values.reserve(times.size());
    for (double t : times) out.values.push_back(scale * s.derivative(t, 1));
    out.delta = 0.0;
    return out;
}

}  // namespace

MomentsToTraceResult moments_to_trace(const MomentSeries& series,
                                      const std::optional<MomentSeries>& co_moment, double b,
                                      double eps, int i0) {
    series.validate();
    if (series.k < 0 || series.k > 2)
        throw std::invalid_argument("moments_to_trace: k must be in {0,1,2}");
    if (!(b > 0.0) || !(eps > 0.0) || i0 < 1)
        throw std::invalid_argument("moments_to_trace: invalid parameters");
    if (series.times.size() < 4)
        throw std::invalid_argument("moments_to_trace: series too short to differentiate");
    if (co_moment) {
        co_moment->validate();
        if (co_moment->k != series.k - 1 || co_moment->times != series.times)
            throw std::invalid_argument(
                "moments_to_trace: co-moment must be the (k-1)-th moment on the same times");
    }

    MomentsToTraceResult res;
    auto fit = fit_spline_discrepancy(series.times, series.values, series.delta);
    res.lambda = fit.spline.lambda();
    res.boundary_warning = fit.boundary_warning;
    res.trace.times = series.times;
    res.trace.values.resize(series.times.size());

    const auto& ts = series.times;
    switch (series.k) {
        case 0: {
            for (std::size_t j = 0; j < ts.size(); ++j)
                res.trace.values[j] = -fit.spline.derivative(ts[j], 1) / b;
            res.differentiation_degree = 1;
            break;
        }
        case 1: {
            if (co_moment) {
                auto co_fit = fit_spline_discrepancy(co_moment->times, co_moment->values,
                                                     co_moment->delta);
                res.boundary_warning = res.boundary_warning || co_fit.boundary_warning;
                const double denom = b * eps * static_cast<double>(i0);
                for (std::size_t j = 0; j < ts.size(); ++j)
                    res.trace.values[j] = -(fit.spline.derivative(ts[j], 1) +
                                            b * co_fit.spline.value(ts[j])) /
                                          denom;
                res.differentiation_degree = 1;
            } else {
                // M0 estimate = -(1/b) dM1/dt, then the k=0 route
                MomentSeries m0 = derivative_series(fit.spline, ts, -1.0 / b);
                auto fit0 = fit_spline_discrepancy(m0.times, m0.values, 0.0);
                for (std::size_t j = 0; j < ts.size(); ++j)
                    res.trace.values[j] = -fit0.spline.derivative(ts[j], 1) / b;
                res.differentiation_degree = 2;
            }
            break;
        }
        case 2: {
            // M1 estimate = -(1/(2b)) dM2/dt, then the k=1 reduction
            MomentSeries m1 = derivative_series(fit.spline, ts, -1.0 / (2.0 * b));
            auto fit1 = fit_spline_discrepancy(m1.times, m1.values, 0.0);
            MomentSeries m0 = derivative_series(fit1.spline, ts, -1.0 / b);
            auto fit0 = fit_spline_discrepancy(m0.times, m0.values, 0.0);
            for (std::size_t j = 0; j < ts.size(); ++j)
                res.trace.values[j] = -fit0.spline.derivative(ts[j], 1) / b;
            res.differentiation_degree = 3;
            break;
        }
    }
    return res;
}

GridFunction trace_to_initial_first_order(const TraceSeries& trace, double b, double L,
                                          double dx) {
    if (trace.times.size() < 2 || trace.times.size() != trace.values.size())
        throw std::invalid_argument("trace_to_initial_first_order: invalid trace");
    if (!(b > 0.0) || !(L > 0.0) || !(dx > 0.0))
        throw std::invalid_argument("trace_to_initial_first_order: invalid parameters");
    const double T = trace.times.back();
    if (b * T < L * (1.0 - 1e-12))
        throw std::invalid_argument(
            "trace_to_initial_first_order: horizon too short, need b*T >= L");

    const auto n = static_cast<std::size_t>(std::llround(L / dx));
    GridFunction u0{dx, std::vector<double>(n + 1, 0.0)};
    for (std::size_t j = 0; j <= n; ++j) {
        const double t = static_cast<double>(j) * dx / b;
        // linear interpolation in the trace samples
        const auto it = std::upper_bound(trace.times.begin(), trace.times.end(), t);
        if (it == trace.times.begin()) {
            u0.values[j] = trace.values.front();
        } else if (it == trace.times.end()) {
            u0.values[j] = trace.values.back();
        } else {
            const std::size_t i = static_cast<std::size_t>(it - trace.times.begin());
            const double w = (t - trace.times[i - 1]) / (trace.times[i] - trace.times[i - 1]);
            u0.values[j] = trace.values[i - 1] + w * (trace.values[i] - trace.values[i - 1]);
        }
    }
    return u0;
}

GridFunction ObservationOperator::grid_function(const Eigen::VectorXd& u0) const {
    GridFunction g{dx, std::vector<double>(x_nodes.size() + 1, 0.0)};
    for (std::size_t j = 0; j < x_nodes.size(); ++j) g.values[j] = u0[static_cast<long>(j)];
    return g;
}

ObservationOperator assemble_observation_operator(double b, double eps, double L, double T, int nx,
                                                  int nt) {
    if (nx < 4 || nx > 4096 || nt < 2 || nt > 4096)
        throw std::invalid_argument("assemble_observation_operator: grid sizes out of range");
    ObservationOperator op;
    op.b = b;
    op.eps = eps;
    op.L = L;
    op.T = T;
    op.dx = L / nx;
    op.dt = T / nt;
    op.matrix.resize(nt + 1, nx);
    op.obs_times.resize(nt + 1);
    for (int j = 0; j <= nt; ++j) op.obs_times[j] = op.dt * j;
    op.x_nodes.resize(nx);
    for (int j = 0; j < nx; ++j) op.x_nodes[j] = op.dx * j;

    GridFunction basis{op.dx, std::vector<double>(nx + 1, 0.0)};
    for (int col = 0; col < nx; ++col) {
        basis.values.assign(nx + 1, 0.0);
        basis.values[col] = 1.0;
        const SecondOrderResult sol = second_order_solve(basis, b, eps, L, T, nx, nt);
        for (int j = 0; j <= nt; ++j) op.matrix(j, col) = sol.trace[j];
    }
    return op;
}

Eigen::MatrixXd h1_gram(int nx, double dx) {
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(nx, nx);
    // mass (trapezoid weights; node nx carries none since u(L)=0)
    for (int j = 0; j < nx; ++j) G(j, j) += (j == 0 ? 0.5 : 1.0) * dx;
    // forward-difference stiffness, implicit u_nx = 0
    for (int j = 0; j < nx; ++j) {
        G(j, j) += 1.0 / dx;
        if (j + 1 < nx) {
            G(j, j + 1) -= 1.0 / dx;
            G(j + 1, j) -= 1.0 / dx;
            G(j + 1, j + 1) += 1.0 / dx;
        }
    }
    return G;
}

namespace {

Eigen::VectorXd trapezoid_weights(std::size_t n, double dt) {
    Eigen::VectorXd w = Eigen::VectorXd::Constant(static_cast<long>(n), dt);
    w[0] = 0.5 * dt;
    w[static_cast<long>(n) - 1] = 0.5 * dt;
    return w;
}

ReconstructionResult finalize(const ObservationOperator& op, const Eigen::VectorXd& u,
                              const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                              const Eigen::MatrixXd& G, const TikhonovConfig& cfg) {
    ReconstructionResult res;
    res.u0 = op.grid_function(u);
    const Eigen::VectorXd r = y - op.matrix * u;
    res.residual_norm = std::sqrt(r.dot(w.asDiagonal() * r));
    res.objective = 0.5 / (cfg.M * cfg.M) * u.dot(G * u) +
                    0.5 / (cfg.delta * cfg.delta) * res.residual_norm * res.residual_norm;
    return res;
}

}  // namespace

ReconstructionResult tikhonov_reconstruct(const std::vector<double>& observed_trace,
                                          const ObservationOperator& op,
                                          const TikhonovConfig& cfg) {
    if (observed_trace.size() != op.obs_times.size())
        throw std::invalid_argument("tikhonov_reconstruct: trace must match the operator time grid");
    if (!(cfg.M > 0.0) || !(cfg.delta > 0.0))
        throw std::invalid_argument("tikhonov_reconstruct: need M > 0 and delta > 0");

    const long nx = op.matrix.cols();
    const Eigen::VectorXd y =
        Eigen::Map<const Eigen::VectorXd>(observed_trace.data(), static_cast<long>(observed_trace.size()));
    const Eigen::VectorXd w = trapezoid_weights(observed_trace.size(), op.dt);
    const Eigen::MatrixXd G = h1_gram(static_cast<int>(nx), op.dx);

    Eigen::MatrixXd H = G / (cfg.M * cfg.M);
    H.noalias() += op.matrix.transpose() * w.asDiagonal() * op.matrix / (cfg.delta * cfg.delta);
    Eigen::VectorXd rhs = op.matrix.transpose() * (w.asDiagonal() * y) / (cfg.delta * cfg.delta);

    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    if (ldlt.info() != Eigen::Success)
        throw numerical_error("tikhonov_reconstruct: normal equations not solvable");
    const Eigen::VectorXd u = ldlt.solve(rhs);
    if (!u.allFinite()) throw numerical_error("tikhonov_reconstruct: singular system");
    return finalize(op, u, y, w, G, cfg);
}

ReconstructionResult kalman_reconstruct(const std::vector<double>& observed_trace,
                                        const ObservationOperator& op, const TikhonovConfig& cfg,
                                        std::size_t max_observations) {
    if (observed_trace.size() != op.obs_times.size())
        throw std::invalid_argument("kalman_reconstruct: trace must match the operator time grid");
    if (!(cfg.M > 0.0) || !(cfg.delta > 0.0))
        throw std::invalid_argument("kalman_reconstruct: need M > 0 and delta > 0");

    const long nx = op.matrix.cols();
    const Eigen::VectorXd y =
        Eigen::Map<const Eigen::VectorXd>(observed_trace.data(), static_cast<long>(observed_trace.size()));
    const Eigen::VectorXd w = trapezoid_weights(observed_trace.size(), op.dt);
    const Eigen::MatrixXd G = h1_gram(static_cast<int>(nx), op.dx);

    // prior matching the Tikhonov objective: x ~ N(0, M² G^{-1})
    Eigen::LDLT<Eigen::MatrixXd> gldlt(G);
    if (gldlt.info() != Eigen::Success)
        throw numerical_error("kalman_reconstruct: Gram matrix not factorizable");
    Eigen::MatrixXd P = cfg.M * cfg.M *
                        gldlt.solve(Eigen::MatrixXd::Identity(nx, nx));
    Eigen::VectorXd x = Eigen::VectorXd::Zero(nx);

    bool warn = false;
    const std::size_t n_obs = std::min(max_observations, observed_trace.size());
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(nx, nx);
    for (std::size_t j = 0; j < n_obs; ++j) {
        const Eigen::VectorXd psi = op.matrix.row(static_cast<long>(j)).transpose();
        const double r = cfg.delta * cfg.delta / w[static_cast<long>(j)];
        const Eigen::VectorXd Ppsi = P * psi;
        const double S = psi.dot(Ppsi) + r;
        if (!(S > 0.0) || !std::isfinite(S)) {
            warn = true;
            continue;
        }
        const Eigen::VectorXd K = Ppsi / S;
        x += K * (y[static_cast<long>(j)] - psi.dot(x));
        // Joseph form keeps P symmetric positive semidefinite
        const Eigen::MatrixXd A = I - K * psi.transpose();
        P = A * P * A.transpose() + r * K * K.transpose();
        if (S < 1e-14 * r) warn = true;
    }
    ReconstructionResult res = finalize(op, x, y, w, G, cfg);
    res.conditioning_warning = warn;
    return res;
}

}  // namespace depofrag
