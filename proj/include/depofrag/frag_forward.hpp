#pragma once

#include "depofrag/frag_kernel.hpp"
#include "depofrag/measure.hpp"
#include "depofrag/series_table.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace depofrag {

struct SeriesOptions {
    SeriesGrid grid;
    int n_max = 0;         ///< 0: chosen automatically from the budget
    int n_max_cap = 40;
    double budget = 1e-8;  ///< TV bound on the neglected series tail
    int out_cells = 512;   ///< output density resolution
};

struct SeriesResult {
    Measure mu;
    double remainder_tv = 0.0;  ///< reported bound on the truncated tail
    int n_used = 0;
};

/// Measure-valued fragmentation solutions via the explicit series
/// representation
///   μ_t = e^{-α x^γ t} μ_0 + Σ_n (αt)^n ∫ ℓ^{nγ} a_n(x/ℓ) μ_0(dℓ)/ℓ.
/// Output densities are projected onto the output grid preserving the
/// first moment per cell (mass is the conserved quantity here).
class SeriesSolver {
public:
    SeriesSolver(FragmentationKernel kernel, FragmentationParams params, SeriesOptions opts = {});

    const SeriesTable& table() const { return table_; }
    const FragmentationParams& params() const { return params_; }
    const FragmentationKernel& kernel() const { return kernel_; }

    /// μ_t^F for μ_0 = δ(x-1): e^{-αt} δ_1 + Σ (αt)^n a_n.
    /// Throws numerical_error when the truncation budget cannot be met.
    SeriesResult fundamental(double t) const;

    /// Superposition over μ_0 with supp(μ_0) ⊂ (0, L]; atoms of μ_0 map to
    /// scaled fundamental solutions, density cells are integrated in ℓ.
    SeriesResult solve(const Measure& mu0, double t) const;

private:
    FragmentationKernel kernel_;
    FragmentationParams params_;
    SeriesOptions opts_;
    mutable SeriesTable table_;

    int pick_n_terms(double q) const;  ///< extends the table as needed
    double tail_bound(double q, int n) const;
};

struct GridOdeOptions {
    double dt = 0.0;       ///< 0: automatic from the rate bound
    double cfl = 0.1;      ///< dt · α · max rate <= cfl
    bool disable_gain = false;  ///< pure-loss dynamics (testing hook)
    std::vector<double> store_times;  ///< additional states to record (t=0 and T always)
};

struct GridOdeResult {
    std::vector<double> grid;
    std::vector<double> times;
    std::vector<std::vector<double>> values;  ///< density values per stored time

    Measure measure_at(std::size_t j) const;
    double mass_moment(std::size_t j) const;  ///< discrete ∫ x u dx
};

/// Method-of-lines oracle for
///   ∂_t u = -α x^γ u + α ∫_x^∞ κ(x/y) y^{γ-1} u(y) dy
/// on cell masses: diagonal loss with the x-weighted cell average of x^γ,
/// exact gain redistribution per source cell, and a per-column rescale that
/// makes the discrete first moment conserved identically (the standard
/// sectional fix). RK4 stepping with an adaptive rate-bound step.
GridOdeResult solve_grid_ode(const std::vector<double>& grid, const std::vector<double>& u0,
                             const FragmentationParams& params, const FragmentationKernel& kernel,
                             double T, const GridOdeOptions& opts = {});

struct ProfileOptions {
    double t0 = 1.0;
    double t_max = 2048.0;
    double tol = 1e-2;          ///< weighted-L1 distance between doublings
    int z_cells = 400;
    double z_min = 1e-3, z_max = 30.0;
    int ode_cells = 768;
    double ode_x_min = 3e-7;
    std::vector<double> u0_values;  ///< optional custom broad start (on the ode grid)
};

struct ProfileResult {
    Measure g;             ///< normalized self-similar profile, ∫g = 1
    double achieved_diff;  ///< last weighted-L1 distance between doublings
    double t_final;
};

/// Long-time rescaled limit t^{2/γ} u(t, t^{1/γ} ·) -> g, computed by running
/// the grid ODE from a broad initial density and doubling the horizon until
/// successive rescaled profiles agree in weighted L1(z dz). Requires γ > 0;
/// throws numerical_error when the horizon is reached without convergence.
ProfileResult self_similar_profile(const FragmentationParams& params,
                                   const FragmentationKernel& kernel,
                                   const ProfileOptions& opts = {});

}  // namespace depofrag
