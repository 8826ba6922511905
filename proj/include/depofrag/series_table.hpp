#pragma once

#include "depofrag/frag_kernel.hpp"
#include "depofrag/quadrature.hpp"

#include <vector>

namespace depofrag {

struct SeriesGrid {
    double x_min = 1e-5;  ///< lower truncation of the table support (0, 1]
    int min_panels = 96;  ///< log-space refinement target
    int nodes_per_panel = 8;
};

/// Coefficient functions a_n of the power-series solution of the
/// fragmentation equation started from δ(x-1):
///   a_0 = 0,
///   a_{n+1}(x) = ( -x^γ a_n(x) + ∫_x^1 y^{γ-1} κ(x/y) a_n(y) dy
///                 + κ(x) (-1)^n / n! ) / (n+1),
/// so a_1 = κ. Values are held at composite Gauss-Legendre nodes in log x,
/// with panel boundaries aligned to the kernel's breakpoints so that the
/// recursion integrates piecewise-smooth integrands only; the first-moment
/// identity ∫ x a_n dx = -(-1)^n/n! then holds at quadrature precision.
///
/// Restricted to kernels with a density part only; measure-valued κ keeps its
/// atoms out of this series representation.
class SeriesTable {
public:
    SeriesTable(const FragmentationKernel& kernel, double gamma, int n_max,
                const SeriesGrid& grid = {});

    int n_max() const { return static_cast<int>(values_.size()); }
    double gamma() const { return gamma_; }
    double x_min() const { return x_min_; }

    /// a_n(x), interpolated; 0 outside [x_min, 1]. n in [1, n_max].
    double eval(int n, double x) const;

    /// Σ_{n=1}^{n_used} coeffs[n-1]·a_n(x) in one interpolation pass.
    double eval_combination(const std::vector<double>& coeffs, double x) const;

    /// Σ_{n=1}^{n_used} q^n a_n(x), one interpolation pass (the series has
    /// geometric coefficients q = αt ℓ^γ along superposition sources).
    double eval_geometric(double q, int n_used, double x) const;

    /// ∫ x^p a_n(x) dx over [x_min, 1] by the table's Gauss panels.
    double moment(int n, double p) const;

    /// ∫ |a_n| dx (total variation of the density a_n).
    double tv_norm(int n) const;

    /// extend the table so that n_max() >= n.
    void extend(int n);

private:
    double gamma_;
    double x_min_;
    GaussRule node_rule_;
    GaussRule piece_rule_;
    std::vector<double> panel_u_;             // panel boundaries in u = log x
    std::vector<double> u_nodes_, x_nodes_;   // all nodes, panel-major
    std::vector<double> w_u_;                 // quadrature weights in u
    std::vector<double> bary_;                // barycentric weights, reference panel
    std::vector<double> ref_nodes_;           // Gauss nodes on [0,1]
    std::vector<double> kappa_grid_, kappa_vals_;  // kernel density
    std::vector<std::vector<double>> values_;      // values_[n-1][node] = a_n

    std::size_t panel_of(double u) const;
    double interpolate(const std::vector<double>& vals, double x) const;
    double kappa_at(double x) const;
    std::vector<double> compute_next() const;  // a_{n+1} from values_.back()
};

}  // namespace depofrag
