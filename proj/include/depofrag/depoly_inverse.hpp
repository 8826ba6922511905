#pragma once

#include "depofrag/depoly.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace depofrag {

struct TraceSeries {
    std::vector<double> times;
    std::vector<double> values;
};

struct MomentsToTraceResult {
    TraceSeries trace;
    double lambda = 0.0;             ///< smoothing penalty selected by discrepancy
    bool boundary_warning = false;   ///< discrepancy search hit the penalty bracket
    int differentiation_degree = 1;  ///< total numerical differentiations applied
};

/// Boundary trace u(·,0) from a noisy moment series, by penalized smoothing
/// splines (penalty from the discrepancy principle against series.delta):
///   k=0:             u(t,0) = -(1/b) dM0/dt
///   k=1, M0 given:   u(t,0) = -(dM1/dt + b M0)/(b ε i0)
///   k=1, no M0:      reduce M1 -> M0 estimate, then the k=0 route (degree 2)
///   k=2:             reduce M2 -> M1 estimate, then as k=1 (degree 3)
/// A provided co-moment must be sampled at the same times.
MomentsToTraceResult moments_to_trace(const MomentSeries& series,
                                      const std::optional<MomentSeries>& co_moment, double b,
                                      double eps, int i0);

/// First-order reconstruction u0(x) = trace(x/b) resampled onto the dx grid
/// over [0, L]. Well-posed only when b*T >= L; throws otherwise.
GridFunction trace_to_initial_first_order(const TraceSeries& trace, double b, double L, double dx);

/// Dense discretization of u0 -> u(·,0) under the bounded second-order model,
/// assembled column by column from second_order_solve on nodal basis vectors.
/// Unknowns are the nx nodal values at x_j = j L/nx, j = 0..nx-1 (u(L) = 0).
struct ObservationOperator {
    Eigen::MatrixXd matrix;  ///< (nt+1) × nx
    std::vector<double> obs_times;
    std::vector<double> x_nodes;
    double b = 0, eps = 0, L = 0, T = 0, dx = 0, dt = 0;

    Eigen::VectorXd apply(const Eigen::VectorXd& u0) const { return matrix * u0; }
    GridFunction grid_function(const Eigen::VectorXd& u0) const;  ///< appends u(L)=0
};

ObservationOperator assemble_observation_operator(double b, double eps, double L, double T, int nx,
                                                  int nt);

struct TikhonovConfig {
    double M = 1.0;       ///< H1-ball radius
    double delta = 1e-3;  ///< noise level, L2(0,T) scale
};

struct ReconstructionResult {
    GridFunction u0;
    double objective = 0.0;
    double residual_norm = 0.0;    ///< sqrt(∫ |y - Ψu0|² dt)
    bool conditioning_warning = false;
};

/// Minimizer of  (1/2M²)||u0||²_{H1} + (1/2δ²) ∫_0^T |y(t) - (Ψu0)(t)|² dt
/// via the normal equations with the discrete H1 Gram matrix (forward
/// differences + mass, Dirichlet at L, natural at 0). Unique for M, δ > 0.
ReconstructionResult tikhonov_reconstruct(const std::vector<double>& observed_trace,
                                          const ObservationOperator& op,
                                          const TikhonovConfig& cfg);

/// Recursive least squares over u0: prior covariance M² G^{-1}, observations
/// assimilated one sample at a time with Joseph-form rank-one updates. The
/// final estimate equals the batch Tikhonov minimizer. `max_observations`
/// limits how many samples are assimilated (all by default).
ReconstructionResult kalman_reconstruct(const std::vector<double>& observed_trace,
                                        const ObservationOperator& op, const TikhonovConfig& cfg,
                                        std::size_t max_observations = SIZE_MAX);

/// Discrete H1 Gram matrix used by both reconstructions (exposed for tests).
Eigen::MatrixXd h1_gram(int nx, double dx);

}  // namespace depofrag
