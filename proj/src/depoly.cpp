#include "depofrag/depoly.hpp"

#include "depofrag/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <stdexcept>

namespace depofrag {

void DiscreteState::validate() const {
    if (!(eps > 0.0)) throw std::invalid_argument("DiscreteState: eps must be > 0");
    if (i0 < 1) throw std::invalid_argument("DiscreteState: i0 must be >= 1");
    if (!(b > 0.0)) throw std::invalid_argument("DiscreteState: b must be > 0");
    if (c.empty()) throw std::invalid_argument("DiscreteState: empty state");
    for (double v : c)
        if (!std::isfinite(v)) throw std::invalid_argument("DiscreteState: non-finite concentration");
}

void MomentSeries::validate() const {
    if (times.size() != values.size() || times.empty())
        throw std::invalid_argument("MomentSeries: times/values mismatch");
    for (std::size_t j = 1; j < times.size(); ++j)
        if (!(times[j] > times[j - 1]))
            throw std::invalid_argument("MomentSeries: times must be strictly increasing");
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument("MomentSeries: non-finite value");
    if (delta < 0.0) throw std::invalid_argument("MomentSeries: negative noise level");
}

double discrete_norm(const GridFunction& u) {
    double acc = 0.0;
    for (double v : u.values) acc += v * v;
    return std::sqrt(u.dx * acc);
}

double discrete_distance(const GridFunction& a, const GridFunction& b) {
    if (a.dx != b.dx || a.values.size() != b.values.size())
        throw std::invalid_argument("discrete_distance: grids differ");
    double acc = 0.0;
    for (std::size_t j = 0; j < a.values.size(); ++j) {
        const double d = a.values[j] - b.values[j];
        acc += d * d;
    }
    return std::sqrt(a.dx * acc);
}

DiscreteState DiscreteTrajectory::state_at(std::size_t j) const {
    return DiscreteState{eps, i0, b, states.at(j)};
}

GridFunction DiscreteTrajectory::interpolant(std::size_t j) const {
    return GridFunction{eps, states.at(j)};
}

DiscreteTrajectory simulate_discrete(const DiscreteState& state0, double T, double dt) {
    state0.validate();
    if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("simulate_discrete: need T, dt > 0");
    if (dt > state0.eps / (2.0 * state0.b) * (1.0 + 1e-12))
        throw std::invalid_argument("simulate_discrete: dt exceeds eps/(2b) stability bound");

    const double rate = state0.b / state0.eps;
    const std::size_t m = state0.c.size();
    auto rhs = [&](const std::vector<double>& c, std::vector<double>& out) {
        for (std::size_t j = 0; j + 1 < m; ++j) out[j] = rate * (c[j + 1] - c[j]);
        out[m - 1] = -rate * c[m - 1];
    };

    const auto steps = static_cast<std::size_t>(std::ceil(T / dt - 1e-12));
    DiscreteTrajectory traj{state0.eps, state0.i0, state0.b, {}, {}};
    traj.times.reserve(steps + 1);
    traj.states.reserve(steps + 1);
    traj.times.push_back(0.0);
    traj.states.push_back(state0.c);

    std::vector<double> k1(m), k2(m), k3(m), k4(m), tmp(m);
    std::vector<double> c = state0.c;
    for (std::size_t s = 0; s < steps; ++s) {
        const double h = std::min(dt, T - static_cast<double>(s) * dt);
        rhs(c, k1);
        for (std::size_t j = 0; j < m; ++j) tmp[j] = c[j] + 0.5 * h * k1[j];
        rhs(tmp, k2);
        for (std::size_t j = 0; j < m; ++j) tmp[j] = c[j] + 0.5 * h * k2[j];
        rhs(tmp, k3);
        for (std::size_t j = 0; j < m; ++j) tmp[j] = c[j] + h * k3[j];
        rhs(tmp, k4);
        for (std::size_t j = 0; j < m; ++j)
            c[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        traj.times.push_back(std::min(static_cast<double>(s + 1) * dt, T));
        traj.states.push_back(c);
    }
    return traj;
}

DiscreteState poisson_solution(const DiscreteState& state0, double t) {
    state0.validate();
    if (t < 0.0) throw std::invalid_argument("poisson_solution: t must be >= 0");
    const double s = state0.b * t / state0.eps;
    const std::size_t m = state0.c.size();
    DiscreteState out = state0;
    if (t == 0.0) return out;
    // Poisson weights by the stable recurrence p_{n+1} = p_n s/(n+1)
    std::vector<double> p(m);
    p[0] = std::exp(-s);
    for (std::size_t nn = 1; nn < m; ++nn) p[nn] = p[nn - 1] * s / static_cast<double>(nn);
    for (std::size_t j = 0; j < m; ++j) {
        double acc = 0.0;
        for (std::size_t nn = 0; nn + j < m; ++nn) acc += p[nn] * state0.c[j + nn];
        out.c[j] = acc;
    }
    return out;
}

DiscreteTrajectory poisson_trajectory(const DiscreteState& state0, const std::vector<double>& times) {
    DiscreteTrajectory traj{state0.eps, state0.i0, state0.b, times, {}};
    traj.states.reserve(times.size());
    for (double t : times) traj.states.push_back(poisson_solution(state0, t).c);
    return traj;
}

namespace {

double moment_of_state(const std::vector<double>& c, double eps, int i0, int k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
        const double size = eps * static_cast<double>(i0 + static_cast<int>(j));
        double w = 1.0;
        for (int q = 0; q < k; ++q) w *= size;
        acc += w * c[j];
    }
    return eps * acc;
}

}  // namespace

MomentSeries moment_series(const DiscreteTrajectory& traj, int k) {
    if (k < 0 || k > 2) throw std::invalid_argument("moment_series: k must be in {0,1,2}");
    MomentSeries ms;
    ms.k = k;
    ms.times = traj.times;
    ms.values.reserve(traj.times.size());
    for (const auto& c : traj.states) ms.values.push_back(moment_of_state(c, traj.eps, traj.i0, k));
    return ms;
}

double moment_ode_residual(const DiscreteTrajectory& traj, int k) {
    if (k != 0 && k != 1) throw std::invalid_argument("moment_ode_residual: k must be 0 or 1");
    const std::size_t n = traj.times.size();
    if (n < 3) throw std::invalid_argument("moment_ode_residual: trajectory too short");

    const MomentSeries mk = moment_series(traj, k);
    const MomentSeries m0 = moment_series(traj, 0);
    std::vector<double> rhs(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double ci0 = traj.states[j][0];
        if (k == 0)
            rhs[j] = -traj.b * ci0;
        else
            rhs[j] = -traj.b * m0.values[j] -
                     traj.b * traj.eps * static_cast<double>(traj.i0 - 1) * ci0;
    }

    // composite Simpson on the (uniform) stored grid; residual checked at the
    // even indices it reaches
    double scale = 0.0;
    for (double v : mk.values) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return 0.0;
    double worst = 0.0;
    double integral = 0.0;
    for (std::size_t j = 2; j < n; j += 2) {
        // three-point Newton-Cotes, valid for unequal half-steps
        const double h1 = traj.times[j - 1] - traj.times[j - 2];
        const double h2 = traj.times[j] - traj.times[j - 1];
        integral += (h1 + h2) / 6.0 *
                    ((2.0 - h2 / h1) * rhs[j - 2] +
                     (h1 + h2) * (h1 + h2) / (h1 * h2) * rhs[j - 1] +
                     (2.0 - h1 / h2) * rhs[j]);
        worst = std::max(worst, std::abs(mk.values[j] - mk.values[0] - integral));
    }
    return worst / scale;
}

GridFunction first_order_solve(const GridFunction& u0, double b, double t) {
    if (t < 0.0) throw std::invalid_argument("first_order_solve: t must be >= 0");
    if (!(u0.dx > 0.0) || u0.values.empty())
        throw std::invalid_argument("first_order_solve: invalid grid function");
    GridFunction out{u0.dx, std::vector<double>(u0.values.size(), 0.0)};
    const double shift = b * t / u0.dx;
    for (std::size_t j = 0; j < out.values.size(); ++j) {
        const double pos = static_cast<double>(j) + shift;
        const auto idx = static_cast<std::size_t>(pos);
        if (pos < 0.0 || idx + 1 >= u0.values.size()) {
            if (idx + 1 == u0.values.size() && pos == static_cast<double>(idx))
                out.values[j] = u0.values[idx];
            continue;  // beyond the shrinking support
        }
        const double frac = pos - static_cast<double>(idx);
        out.values[j] = u0.values[idx] + frac * (u0.values[idx + 1] - u0.values[idx]);
    }
    return out;
}

SecondOrderResult second_order_solve(const GridFunction& u0, double b, double eps, double L,
                                     double T, int nx, int nt) {
    if (!(b > 0.0) || !(eps > 0.0) || !(L > 0.0) || !(T > 0.0) || nx < 4 || nt < 1)
        throw std::invalid_argument("second_order_solve: invalid parameters");
    const double dx = L / nx;
    if (dx > eps / 4.0 * (1.0 + 1e-12))
        throw std::invalid_argument("second_order_solve: need dx <= eps/4 (resolution)");
    if (u0.values.size() != static_cast<std::size_t>(nx + 1))
        throw std::invalid_argument("second_order_solve: u0 must have nx+1 values");
    double umax = 0.0;
    for (double v : u0.values) umax = std::max(umax, std::abs(v));
    if (std::abs(u0.values.back()) > 1e-9 * std::max(umax, 1.0))
        throw std::invalid_argument("second_order_solve: u0(L) must vanish");

    // generator A: interior rows b u_x + (b eps/2) u_xx (centered); row 0 is
    // the transport condition u_t(0) = b u_x(0) with a one-sided second-order
    // difference; u(L) = 0 eliminated.
    const int m = nx;  // unknowns 0..nx-1
    const double adv = b / (2.0 * dx);
    const double dif = b * eps / (2.0 * dx * dx);
    using Trip = Eigen::Triplet<double>;
    std::vector<Trip> trips;
    trips.reserve(3 * m);
    trips.emplace_back(0, 0, b * (-3.0) / (2.0 * dx));
    trips.emplace_back(0, 1, b * 4.0 / (2.0 * dx));
    trips.emplace_back(0, 2, b * (-1.0) / (2.0 * dx));
    for (int j = 1; j < m; ++j) {
        trips.emplace_back(j, j - 1, -adv + dif);
        trips.emplace_back(j, j, -2.0 * dif);
        if (j + 1 < m) trips.emplace_back(j, j + 1, adv + dif);
    }
    Eigen::SparseMatrix<double> A(m, m);
    A.setFromTriplets(trips.begin(), trips.end());

    const double dt = T / nt;
    Eigen::SparseMatrix<double> I(m, m);
    I.setIdentity();
    Eigen::SparseMatrix<double> lhs = I - (dt / 2.0) * A;
    Eigen::SparseMatrix<double> rhs_mat = I + (dt / 2.0) * A;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(lhs);
    if (lu.info() != Eigen::Success)
        throw numerical_error("second_order_solve: Crank-Nicolson matrix factorization failed");

    Eigen::VectorXd u(m);
    for (int j = 0; j < m; ++j) u[j] = u0.values[j];

    SecondOrderResult res;
    res.times.reserve(nt + 1);
    res.states.reserve(nt + 1);
    res.trace.reserve(nt + 1);
    auto push = [&](double t) {
        GridFunction g{dx, std::vector<double>(nx + 1, 0.0)};
        for (int j = 0; j < m; ++j) g.values[j] = u[j];
        res.times.push_back(t);
        res.trace.push_back(u[0]);
        res.states.push_back(std::move(g));
    };
    push(0.0);
    for (int s = 1; s <= nt; ++s) {
        Eigen::VectorXd r = rhs_mat * u;
        u = lu.solve(r);
        if (!u.allFinite()) throw numerical_error("second_order_solve: step diverged");
        push(dt * s);
    }
    return res;
}

GridFunction truncated_gaussian(double L, int cells, double center, double sigma,
                                double amplitude) {
    if (!(L > 0.0) || cells < 2 || !(sigma > 0.0))
        throw std::invalid_argument("truncated_gaussian: invalid parameters");
    const double dx = L / cells;
    auto bump = [&](double x) {
        return amplitude * std::exp(-0.5 * (x - center) * (x - center) / (sigma * sigma));
    };
    const double edge = std::max(bump(0.0), bump(L));
    GridFunction g{dx, std::vector<double>(cells + 1)};
    for (int j = 0; j <= cells; ++j)
        g.values[j] = std::max(0.0, bump(dx * j) - edge);
    return g;
}

}  // namespace depofrag
