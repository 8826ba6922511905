#pragma once

#include <cstddef>
#include <vector>

namespace depofrag {

/// State of the rescaled discrete depolymerisation system
///     d/dt c_i = (b/ε)(c_{i+1} - c_i),   i0 <= i <= i_max,
/// with c[j] the concentration at size index i0 + j. Sizes above i_max stay
/// empty (depolymerisation never creates larger sizes), monomers below i0 are
/// shed outside the system and not tracked.
struct DiscreteState {
    double eps = 0.0;  ///< scale ε > 0
    int i0 = 1;        ///< smallest tracked index >= 1
    double b = 1.0;    ///< depolymerisation rate > 0
    std::vector<double> c;

    void validate() const;
    double support_length() const { return eps * static_cast<double>(c.size() - 1); }
    std::size_t size() const { return c.size(); }
};

/// Values on the uniform grid x_j = j*dx, interpreted as a piecewise-constant
/// function on [x_j, x_{j+1}). Interpolants of DiscreteState have dx == ε.
struct GridFunction {
    double dx = 0.0;
    std::vector<double> values;

    double length() const { return dx * static_cast<double>(values.size() - 1); }
};

/// sqrt(Σ_j dx |u(x_j)|²); equals the L² norm for piecewise-constant grid
/// functions.
double discrete_norm(const GridFunction& u);

/// Difference of two grid functions on the same grid, in the discrete norm.
double discrete_distance(const GridFunction& a, const GridFunction& b);

/// Time-stamped values of one moment M_k^ε(t) = ε Σ (εi)^k c_i^ε(t).
struct MomentSeries {
    int k = 0;
    std::vector<double> times;
    std::vector<double> values;
    double delta = 0.0;  ///< known noise level (per-sample standard deviation)

    void validate() const;
};

struct DiscreteTrajectory {
    double eps = 0.0;
    int i0 = 1;
    double b = 1.0;
    std::vector<double> times;
    std::vector<std::vector<double>> states;

    DiscreteState state_at(std::size_t j) const;
    GridFunction interpolant(std::size_t j) const;  ///< stepwise u^ε(t_j, ·)
};

/// Explicit RK4 integration of the rescaled system; requires dt <= ε/(2b).
/// The full trajectory is stored at t = 0, dt, ..., T.
DiscreteTrajectory simulate_discrete(const DiscreteState& state0, double T, double dt);

/// Exact solution via the Poisson kernel
///     c_i(t) = e^{-s} Σ_{j>=i} s^{j-i}/(j-i)! c_j(0),  s = b t / ε.
/// Serves as the oracle for simulate_discrete and for the approximation-rate
/// checks.
DiscreteState poisson_solution(const DiscreteState& state0, double t);

/// Trajectory sampled from the Poisson closed form at the given times.
DiscreteTrajectory poisson_trajectory(const DiscreteState& state0, const std::vector<double>& times);

/// Moment series M_k^ε along a trajectory, k in {0,1,2}.
MomentSeries moment_series(const DiscreteTrajectory& traj, int k);

/// Max residual of the moment identity along the trajectory, relative to the
/// moment scale, with the time integral done by composite Simpson:
///     k=0:  dM0/dt = -b c_{i0}
///     k=1:  dM1/dt = -b M0 - b ε (i0-1) c_{i0}
/// The k=1 coefficient is the exact discrete balance; identifying c_{i0} with
/// u(t,0) at continuum order gives the ε i0 form used by the inverse pipeline.
double moment_ode_residual(const DiscreteTrajectory& traj, int k);

/// First-order (backward transport) solution u(t,x) = u0(x + b t), resampled
/// on u0's grid; exact when b t is a grid multiple, linear interpolation
/// otherwise. Zero beyond the initial support.
GridFunction first_order_solve(const GridFunction& u0, double b, double t);

struct SecondOrderResult {
    std::vector<double> times;
    std::vector<GridFunction> states;
    std::vector<double> trace;  ///< u(t, 0) at each time
};

/// Crank-Nicolson solution of the bounded second-order model
///     ∂_t u - b ∂_x u - (bε/2) ∂²_x u = 0  on (0, L),
///     ∂_t u(t,0) - b ∂_x u(t,0) = 0,   u(t,L) = 0,
/// with centered interior differences and a second-order one-sided boundary
/// row. Requires Δx = L/nx <= ε/4 (cell Péclet control) and u0(L) = 0.
SecondOrderResult second_order_solve(const GridFunction& u0, double b, double eps, double L,
                                     double T, int nx, int nt);

/// Truncated Gaussian bump amplitude·exp(-(x-center)²/(2σ²)) with the edge
/// value at x ∈ {0, L} subtracted and clipped at zero; the standard smooth
/// initial datum for rate checks.
GridFunction truncated_gaussian(double L, int cells, double center, double sigma,
                                double amplitude = 1.0);

}  // namespace depofrag
