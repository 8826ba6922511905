#pragma once

#include <vector>

namespace depofrag {

/// Natural cubic smoothing spline: minimizer of
///     Σ_i (y_i - f(t_i))² + λ ∫ f''(t)² dt
/// over natural cubic splines with knots at the data points. Solved in the
/// Reinsch form (R + λ QᵀQ) γ = Qᵀy, f = y - λQγ, with a pentadiagonal
/// Cholesky factorization.
class SmoothingSpline {
public:
    SmoothingSpline(std::vector<double> t, std::vector<double> y, double lambda);

    double value(double t) const;
    /// Analytic derivative of the spline, order in {1, 2, 3}.
    double derivative(double t, int order = 1) const;

    double lambda() const { return lambda_; }
    /// ℓ₂ norm of the data residual ||y - f||₂.
    double residual_norm() const;

    const std::vector<double>& knots() const { return t_; }
    const std::vector<double>& fitted() const { return f_; }

private:
    std::vector<double> t_, y_, f_, gamma_;  // gamma_: f'' at all knots (natural: ends 0)
    double lambda_ = 0.0;

    std::size_t cell(double t) const;
};

struct DiscrepancyFit {
    SmoothingSpline spline;
    bool boundary_warning = false;  ///< search hit the λ bracket boundary
};

/// Fit with λ chosen by the discrepancy principle ||y - f||₂ ≈ δ√n, where δ
/// is the per-sample noise level. δ = 0 returns the near-interpolating fit at
/// the lower λ boundary (no warning).
DiscrepancyFit fit_spline_discrepancy(std::vector<double> t, std::vector<double> y, double delta);

}  // namespace depofrag
