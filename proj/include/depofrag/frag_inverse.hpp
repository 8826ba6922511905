#pragma once

#include "depofrag/frag_forward.hpp"
#include "depofrag/mellin.hpp"
#include "depofrag/sampling.hpp"

#include <complex>
#include <string>
#include <vector>

namespace depofrag {

/// Which empirical moment feeds the fits: the raw sums of the protocol
/// definitions, or count-normalized ratios. Both are exposed; estimators use
/// ratios where the underlying formula is a ratio of integrals.
enum class MomentConvention { RawSum, Ratio };

struct GammaFitOptions {
    MomentConvention convention = MomentConvention::RawSum;
};

/// Piecewise log-log fit of the first-moment decay
///     log M1(t) ~ C - (1/γ) log(t/t_asymp) · 1_{t >= t_asymp}.
struct GammaFit {
    double gamma_hat = 0.0;
    double t_asymp = 0.0;
    double intercept = 0.0;  ///< C
    double sse = 0.0;
    double r_squared = 0.0;
    std::vector<double> fit_times;  ///< times used (t > 0)
    std::vector<double> residuals;
    bool breakpoint_at_boundary = false;
};

/// Grid search over breakpoints at the observed times × closed-form least
/// squares for (C, 1/γ). Needs >= 4 positive time points and >= 2 points past
/// the breakpoint; candidates with a non-positive decay slope are skipped.
GammaFit fit_gamma(const SampleSet& samples, const GammaFitOptions& opts = {});

struct AlphaEstimate {
    double alpha_hat = 0.0;
    double dispersion = 0.0;  ///< std of the per-point estimates
    std::vector<double> times_used;
    std::vector<double> per_point;
};

/// α ≈ 1/(γ t M_γ(t)) averaged over t_i >= t_asymp, with M_γ the
/// count-normalized empirical moment Σ x^γ / n.
AlphaEstimate estimate_alpha(const SampleSet& samples, const GammaFit& fit);

struct KappaEstimate {
    Measure raw;
    Measure projected;  ///< satisfies the kernel constraints by construction
    std::string route;  ///< "short-time" | "mellin" | "profile"
    double reg_param = 0.0;
    double negative_mass_fraction = 0.0;
    bool negative_mass_warning = false;
};

/// Projection onto the kernel constraint set: restrict to (0,1), clip
/// density below -clip_tol, symmetrize z -> (κ(z)+κ(1-z))/2, rescale to
/// ∫κ = 2 (∫zκ = 1 then follows from symmetry).
Measure project_kappa(const Measure& raw, double clip_tol = 0.0);

/// Short-time estimator (μ_t - e^{-αt} μ_0)/(αt) for near-monodisperse data;
/// both the raw difference quotient and its projection are returned. Warns
/// when the raw estimate carries more than 10% negative mass.
KappaEstimate kappa_est_short_time(const Measure& mu0_obs, const Measure& mut_obs, double alpha,
                                   double t);

/// F^est = (u_t(x) - e^{-α t x^γ} u_0(x))/(αt), an estimate of w_0 * κ with
/// w_0 = x^γ u_0 (* the multiplicative convolution). Densities only.
Measure f_est(const Measure& u0, const Measure& ut, double alpha, double gamma, double t);

struct MellinEstOptions {
    double sigma = 2.0;
    double tau_max = 40.0;
    int tau_points = 513;
    double denom_floor_rel = 1e-6;  ///< floor relative to the τ=0 denominator
    int out_cells = 256;
    double out_lo = 1e-4;
    MellinInvertOptions invert;
};

struct MellinKappaResult {
    MellinLine line;
    KappaEstimate estimate;
};

/// M[κ]^est(s;t) = (M[u_t](s) - M[e^{-αtx^γ}u_0](s)) / (αt M[u_0](s+γ)) at a
/// single point; throws numerical_error when the denominator is below floor.
std::complex<double> mellin_kappa_est_at(const Measure& u0, const Measure& ut, double alpha,
                                         double gamma, double t, std::complex<double> s,
                                         double denom_floor = 0.0);

/// Line version of the same estimator followed by numerical Mellin inversion
/// and the constraint projection.
MellinKappaResult mellin_kappa_est(const Measure& u0, const Measure& ut, double alpha, double gamma,
                                   double t, const MellinEstOptions& opts = {});

/// Profile formula M[κ](s) = 1 + (2-s) M[g](s) / (αγ M[g](s+γ)).
std::complex<double> kappa_from_profile_at(const Measure& g, double alpha, double gamma,
                                           std::complex<double> s, double denom_floor = 0.0);

MellinKappaResult kappa_from_profile(const Measure& g, double alpha, double gamma,
                                     const MellinEstOptions& opts = {});

struct ValidationRow {
    double t = 0.0;
    double bl = 0.0;
    double tv = 0.0;
};

struct ValidationReport {
    std::vector<ValidationRow> rows;
    double mean_bl = 0.0;
    double mean_tv = 0.0;
};

struct ValidationOptions {
    KdeOptions kde;
    int ode_cells = 512;
    double ode_x_min_factor = 1e-4;
};

/// A-posteriori check of estimated parameters: KDE of the first sample,
/// forward simulation with (α̂, γ̂, κ), then per-time BL and TV distances
/// between the simulated and estimated normalized densities.
ValidationReport validate_pipeline(const SampleSet& samples, double alpha_hat, double gamma_hat,
                                   const FragmentationKernel& kappa,
                                   const ValidationOptions& opts = {});

}  // namespace depofrag
