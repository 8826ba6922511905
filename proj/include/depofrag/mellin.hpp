#pragma once

#include "depofrag/measure.hpp"

#include <complex>
#include <vector>

namespace depofrag {

/// Samples of a Mellin transform on the vertical line Re(s) = sigma.
/// tau_grid is symmetric about 0 and increasing; for a real underlying
/// measure the values at ±τ are complex conjugates.
struct MellinLine {
    double sigma = 2.0;
    std::vector<double> tau;
    std::vector<std::complex<double>> values;
};

/// M[μ](s) = ∫ x^{s-1} dμ(x): Σ w x^{s-1} over atoms plus exact per-cell
/// antiderivatives of the piecewise-constant density (valid for complex s as
/// well, x^s = exp(s log x) on x > 0). Throws std::invalid_argument when the
/// integral diverges (density support touching 0 with Re(s) <= 0, or atoms at
/// 0 with Re(s) < 1).
std::complex<double> mellin(const Measure& mu, std::complex<double> s);
double mellin(const Measure& mu, double s);

/// Evaluate M[μ] along a vertical line.
MellinLine mellin_line(const Measure& mu, double sigma, const std::vector<double>& tau_grid);

/// Symmetric uniform tau grid with n points (n even) spanning [-tau_max, tau_max).
std::vector<double> symmetric_tau_grid(double tau_max, int n);

struct MellinInvertOptions {
    double tukey_fraction = 0.25;  ///< taper fraction of the Tukey window
    double tail_warn_ratio = 0.05; ///< warn when |line| at truncation exceeds this × peak
};

struct MellinInvertResult {
    Measure density;      ///< density part only, on the requested output grid
    double tail_ratio;    ///< |line(τ_max)| / max|line|
    bool tail_warning;    ///< tail_ratio > options.tail_warn_ratio
};

/// Numerical inverse Mellin transform: density(x) = (1/2π) ∫ x^{-σ-iτ} L(τ) dτ,
/// computed by an FFT in log coordinates after conjugate-symmetrizing the input
/// (which guarantees a real result) and applying a Tukey window. The caller
/// truncates the line so that |L| decays towards ±tau_max; a tail warning is
/// reported otherwise. Requires a uniform tau grid.
MellinInvertResult mellin_invert(const MellinLine& line, const std::vector<double>& out_grid,
                                 const MellinInvertOptions& opts = {});

}  // namespace depofrag
