#include "depofrag/depoly.hpp"
#include "depofrag/depoly_inverse.hpp"
#include "depofrag/errors.hpp"
#include "depofrag/smoothing_spline.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace depofrag;

namespace {

std::mt19937_64 g_rng(2024);

double uniform(double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(g_rng() >> 11) * 0x1.0p-53);
}

std::vector<double> time_grid(double T, int n) {
    std::vector<double> t(n + 1);
    for (int j = 0; j <= n; ++j) t[j] = T * j / n;
    return t;
}

}  // namespace

TEST_CASE("smoothing spline: interpolation limit and linear data") {
    std::vector<double> t = time_grid(2.0, 40);
    std::vector<double> y(t.size());
    for (std::size_t j = 0; j < t.size(); ++j) y[j] = 3.0 - 0.7 * t[j];
    // natural spline reproduces a straight line exactly for any lambda
    const SmoothingSpline s(t, y, 1e-3);
    CHECK(s.value(0.77) == doctest::Approx(3.0 - 0.7 * 0.77).epsilon(1e-10));
    CHECK(s.derivative(1.3, 1) == doctest::Approx(-0.7).epsilon(1e-9));

    // lambda -> 0 interpolates
    for (std::size_t j = 0; j < t.size(); ++j) y[j] = std::sin(2.0 * t[j]);
    const SmoothingSpline interp(t, y, 0.0);
    CHECK(interp.residual_norm() <= 1e-10);
    CHECK(interp.derivative(1.0, 1) == doctest::Approx(2.0 * std::cos(2.0)).epsilon(1e-3));
}

TEST_CASE("smoothing spline matches a dense reference solve") {
    // same objective assembled densely: min ||y-f||^2 + lambda g'R g, Q'f = Rg
    const int n = 25;
    std::vector<double> t(n), y(n);
    for (int j = 0; j < n; ++j) {
        t[j] = 0.1 * j + 0.02 * std::sin(3.0 * j);
        y[j] = std::cos(t[j]) + 0.05 * uniform(-1.0, 1.0);
    }
    const double lambda = 0.37;
    const SmoothingSpline s(t, y, lambda);

    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n - 2);
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n - 2, n - 2);
    std::vector<double> h(n - 1);
    for (int j = 0; j + 1 < n; ++j) h[j] = t[j + 1] - t[j];
    for (int i = 1; i + 1 < n; ++i) {
        Q(i - 1, i - 1) = 1.0 / h[i - 1];
        Q(i, i - 1) = -1.0 / h[i - 1] - 1.0 / h[i];
        Q(i + 1, i - 1) = 1.0 / h[i];
        R(i - 1, i - 1) = (h[i - 1] + h[i]) / 3.0;
        if (i + 2 < n) {
            R(i - 1, i) = h[i] / 6.0;
            R(i, i - 1) = h[i] / 6.0;
        }
    }
    const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
    const Eigen::VectorXd gamma =
        (R + lambda * Q.transpose() * Q).ldlt().solve(Q.transpose() * yv);
    const Eigen::VectorXd f = yv - lambda * Q * gamma;
    for (int j = 0; j < n; ++j)
        CHECK(s.fitted()[j] == doctest::Approx(f[j]).epsilon(1e-9));
}

TEST_CASE("discrepancy principle hits the target residual") {
    std::vector<double> t = time_grid(1.0, 120);
    std::vector<double> y(t.size());
    const double delta = 1e-2;
    for (std::size_t j = 0; j < t.size(); ++j)
        y[j] = std::exp(-t[j]) + delta * uniform(-1.5, 1.5);
    const DiscrepancyFit fit = fit_spline_discrepancy(t, y, delta);
    CHECK_FALSE(fit.boundary_warning);
    const double target = delta * std::sqrt(static_cast<double>(t.size()));
    CHECK(fit.spline.residual_norm() == doctest::Approx(target).epsilon(0.02));

    // absurdly large delta pushes the search to the boundary and warns
    const DiscrepancyFit flat = fit_spline_discrepancy(t, y, 1e4);
    CHECK(flat.boundary_warning);
}

TEST_CASE("moments_to_trace: closed forms") {
    const double b = 1.0, eps = 1.0 / 64.0;
    const int i0 = 5;
    std::vector<double> t = time_grid(1.5, 150);

    SUBCASE("M0 of the transported indicator gives a unit trace") {
        // u0 = 1_[0,1], M0(t) = max(0, 1-t), so -M0' = 1 on (0,1)
        MomentSeries m0;
        m0.k = 0;
        m0.times = t;
        for (double tt : t) m0.values.push_back(std::max(0.0, 1.0 - tt));
        const auto res = moments_to_trace(m0, std::nullopt, b, eps, i0);
        CHECK(res.differentiation_degree == 1);
        for (double probe : {0.2, 0.5, 0.8})
            CHECK(res.trace.values[static_cast<std::size_t>(probe * 100)] ==
                  doctest::Approx(1.0).epsilon(0.02));
        CHECK(std::abs(res.trace.values[130]) <= 0.05);  // past the support
    }

    SUBCASE("constant M0 gives a zero trace") {
        MomentSeries m0;
        m0.k = 0;
        m0.times = t;
        m0.values.assign(t.size(), 4.2);
        const auto res = moments_to_trace(m0, std::nullopt, b, eps, i0);
        for (double v : res.trace.values) CHECK(std::abs(v) <= 1e-10);
    }

    SUBCASE("linear M0 with slope -b*c gives the constant trace c") {
        const double c = 0.33;
        MomentSeries m0;
        m0.k = 0;
        m0.times = t;
        for (double tt : t) m0.values.push_back(7.0 - b * c * tt);
        const auto res = moments_to_trace(m0, std::nullopt, b, eps, i0);
        for (double v : res.trace.values) CHECK(v == doctest::Approx(c).epsilon(1e-9));
    }

    SUBCASE("k=1 with co-observed M0 uses the corrective term") {
        // M1' = -b M0 - b eps i0 c_i0 with synthetic constant c_i0 = 1
        MomentSeries m0;
        m0.k = 0;
        m0.times = t;
        m0.values.assign(t.size(), 2.0);
        MomentSeries m1;
        m1.k = 1;
        m1.times = t;
        const double trace_true = 1.0;
        for (double tt : t)
            m1.values.push_back(5.0 - (b * 2.0 + b * eps * i0 * trace_true) * tt);
        const auto res = moments_to_trace(m1, m0, b, eps, i0);
        CHECK(res.differentiation_degree == 1);
        for (double v : res.trace.values) CHECK(v == doctest::Approx(trace_true).epsilon(1e-6));
    }

    SUBCASE("co-moment on mismatched times is rejected") {
        MomentSeries m1;
        m1.k = 1;
        m1.times = t;
        m1.values.assign(t.size(), 1.0);
        MomentSeries m0;
        m0.k = 0;
        m0.times = time_grid(1.5, 75);
        m0.values.assign(m0.times.size(), 1.0);
        CHECK_THROWS_AS(moments_to_trace(m1, m0, b, eps, i0), std::invalid_argument);
    }
}

TEST_CASE("trace_to_initial_first_order: composition and horizon guard") {
    TraceSeries tr;
    tr.times = time_grid(1.0, 100);
    for (double t : tr.times) tr.values.push_back(std::max(0.0, 1.0 - t));
    const GridFunction u0 = trace_to_initial_first_order(tr, 1.0, 1.0, 1.0 / 50.0);
    CHECK(u0.values[10] == doctest::Approx(1.0 - 10.0 / 50.0).epsilon(1e-9));

    CHECK_THROWS_AS(trace_to_initial_first_order(tr, 1.0, 2.0, 0.02), std::invalid_argument);
}

TEST_CASE("first-order closed loop error shrinks under refinement") {
    const double b = 1.0, L = 1.0, T = 1.0;
    const int i0 = 10;
    std::vector<double> errs;
    for (const double eps : {1.0 / 64.0, 1.0 / 128.0}) {
        const int cells = static_cast<int>(std::llround(L / eps));
        const GridFunction u0 = truncated_gaussian(L, cells, 0.45, 0.25);
        DiscreteState s0{eps, i0, b, u0.values};
        const DiscreteTrajectory traj = poisson_trajectory(s0, time_grid(T, 400));
        MomentSeries m0 = moment_series(traj, 0);
        const auto tr = moments_to_trace(m0, std::nullopt, b, eps, i0);
        const GridFunction rec = trace_to_initial_first_order(tr.trace, b, L, eps);
        GridFunction diff{eps, u0.values};
        for (std::size_t j = 0; j < diff.values.size(); ++j) diff.values[j] -= rec.values[j];
        errs.push_back(discrete_norm(diff) / discrete_norm(u0));
    }
    CHECK(errs[1] < errs[0]);
    CHECK(errs[1] <= 0.06);
}

TEST_CASE("observation operator is the linear trace map") {
    const double b = 1.0, eps = 1.0 / 16.0, L = 1.0, T = 0.4;
    const int nx = 64, nt = 80;  // dx = eps/4
    const ObservationOperator op = assemble_observation_operator(b, eps, L, T, nx, nt);
    CHECK(op.matrix.rows() == nt + 1);
    CHECK(op.matrix.cols() == nx);

    // linearity against a direct PDE solve of a random combination
    Eigen::VectorXd v(nx), w(nx);
    for (int j = 0; j < nx; ++j) {
        v[j] = uniform(-1.0, 1.0);
        w[j] = uniform(-1.0, 1.0);
    }
    v[0] = w[0] = 0.0;  // keep the combination compatible with u(L)=0 smoothness
    const double a = uniform(0.5, 2.0), c = uniform(-2.0, -0.5);
    GridFunction combo{L / nx, std::vector<double>(nx + 1, 0.0)};
    for (int j = 0; j < nx; ++j) combo.values[j] = a * v[j] + c * w[j];
    const SecondOrderResult direct = second_order_solve(combo, b, eps, L, T, nx, nt);
    const Eigen::VectorXd lhs = op.apply(a * v + c * w);
    double num = 0.0, den = 0.0;
    for (int j = 0; j <= nt; ++j) {
        num += (lhs[j] - direct.trace[j]) * (lhs[j] - direct.trace[j]);
        den += direct.trace[j] * direct.trace[j];
    }
    CHECK(std::sqrt(num / std::max(den, 1e-30)) <= 1e-8);
}

TEST_CASE("tikhonov: zero data, optimality, noise monotonicity") {
    const double b = 1.0, eps = 1.0 / 16.0, L = 1.0, T = 0.6;
    const int nx = 64, nt = 100;
    const ObservationOperator op = assemble_observation_operator(b, eps, L, T, nx, nt);
    const Eigen::MatrixXd G = h1_gram(nx, op.dx);

    SUBCASE("zero observations give the zero minimizer") {
        const std::vector<double> zero(op.obs_times.size(), 0.0);
        const ReconstructionResult rec = tikhonov_reconstruct(zero, op, {1.0, 1e-3});
        for (double v : rec.u0.values) CHECK(std::abs(v) <= 1e-14);
    }

    // synthetic truth and its exact trace data
    GridFunction u0 = truncated_gaussian(L, nx, 0.6, 0.12);
    Eigen::VectorXd u0v(nx);
    for (int j = 0; j < nx; ++j) u0v[j] = u0.values[j];
    const Eigen::VectorXd y = op.apply(u0v);
    std::vector<double> yv(y.data(), y.data() + y.size());

    SUBCASE("reconstruction error is non-increasing as delta shrinks") {
        double prev = std::numeric_limits<double>::infinity();
        for (double delta : {1e-1, 1e-2, 1e-3}) {
            const ReconstructionResult rec = tikhonov_reconstruct(yv, op, {2.0, delta});
            double err = 0.0;
            for (int j = 0; j < nx; ++j)
                err += (rec.u0.values[j] - u0.values[j]) * (rec.u0.values[j] - u0.values[j]);
            err = std::sqrt(err);
            CHECK(err <= prev + 1e-12);
            prev = err;
        }
    }

    SUBCASE("perturbing the minimizer never decreases the objective") {
        const TikhonovConfig cfg{2.0, 1e-3};
        const ReconstructionResult rec = tikhonov_reconstruct(yv, op, cfg);
        Eigen::VectorXd ustar(nx);
        for (int j = 0; j < nx; ++j) ustar[j] = rec.u0.values[j];
        auto objective = [&](const Eigen::VectorXd& u) {
            const Eigen::VectorXd r = [&] {
                Eigen::VectorXd out = op.apply(u);
                for (int j = 0; j <= nt; ++j) out[j] -= yv[static_cast<std::size_t>(j)];
                return out;
            }();
            Eigen::VectorXd wts = Eigen::VectorXd::Constant(nt + 1, op.dt);
            wts[0] = wts[nt] = 0.5 * op.dt;
            return 0.5 / (cfg.M * cfg.M) * u.dot(G * u) +
                   0.5 / (cfg.delta * cfg.delta) * r.dot(wts.asDiagonal() * r);
        };
        const double base = objective(ustar);
        for (int trial = 0; trial < 5; ++trial) {
            Eigen::VectorXd d(nx);
            for (int j = 0; j < nx; ++j) d[j] = uniform(-1.0, 1.0);
            d *= 1e-4 / d.norm();
            CHECK(objective(ustar + d) >= base - 1e-12 * std::abs(base));
            CHECK(objective(ustar - d) >= base - 1e-12 * std::abs(base));
        }
    }

    SUBCASE("kalman equals the batch minimizer and honours prefix data") {
        const TikhonovConfig cfg{2.0, 1e-3};
        const ReconstructionResult batch = tikhonov_reconstruct(yv, op, cfg);
        const ReconstructionResult seq = kalman_reconstruct(yv, op, cfg);
        double num = 0.0, den = 0.0;
        for (int j = 0; j < nx; ++j) {
            num += (batch.u0.values[j] - seq.u0.values[j]) *
                   (batch.u0.values[j] - seq.u0.values[j]);
            den += batch.u0.values[j] * batch.u0.values[j];
        }
        CHECK(std::sqrt(num / den) <= 1e-8);

        // zero assimilated observations: the prior mean
        const ReconstructionResult none = kalman_reconstruct(yv, op, cfg, 0);
        for (double v : none.u0.values) CHECK(v == 0.0);

        // after half the samples the sequential estimate minimizes the
        // prefix objective (prior + seen-data misfit), so it beats the batch
        // minimizer there: the least-squares projection property
        const std::size_t half = yv.size() / 2;
        const ReconstructionResult mid = kalman_reconstruct(yv, op, cfg, half);
        auto prefix_objective = [&](const ReconstructionResult& r) {
            Eigen::VectorXd u(nx);
            for (int j = 0; j < nx; ++j) u[j] = r.u0.values[j];
            const Eigen::VectorXd t = op.apply(u);
            double mis = 0.0;
            for (std::size_t j = 0; j < half; ++j) {
                const double w = (j == 0) ? 0.5 * op.dt : op.dt;
                mis += w * (t[static_cast<long>(j)] - yv[j]) * (t[static_cast<long>(j)] - yv[j]);
            }
            return 0.5 / (cfg.M * cfg.M) * u.dot(G * u) +
                   0.5 / (cfg.delta * cfg.delta) * mis;
        };
        CHECK(prefix_objective(mid) <= prefix_objective(batch) * (1.0 + 1e-10));
    }
}

TEST_CASE("degree of ill-posedness ordering: k=2 beats k=0 in error") {
    const double b = 1.0, L = 1.0, eps = 1.0 / 64.0, T = 1.2;
    const int i0 = 10;
    const int cells = static_cast<int>(std::llround(L / eps));
    const GridFunction u0 = truncated_gaussian(L, cells, 0.45, 0.2);
    DiscreteState s0{eps, i0, b, u0.values};
    const DiscreteTrajectory traj = poisson_trajectory(s0, time_grid(T, 300));

    const double delta = 1e-5;
    std::mt19937_64 rng(5);
    std::vector<double> noise(traj.times.size());
    for (double& v : noise) v = (static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5) * 2.0;

    auto reconstruct_err = [&](int k) {
        MomentSeries m = moment_series(traj, k);
        for (std::size_t j = 0; j < m.values.size(); ++j) m.values[j] += delta * noise[j];
        m.delta = delta;
        const auto tr = moments_to_trace(m, std::nullopt, b, eps, i0);
        const GridFunction rec = trace_to_initial_first_order(tr.trace, b, L, eps);
        GridFunction diff{eps, u0.values};
        for (std::size_t j = 0; j < diff.values.size(); ++j) diff.values[j] -= rec.values[j];
        return discrete_norm(diff);
    };
    CHECK(reconstruct_err(2) >= reconstruct_err(0));
}
