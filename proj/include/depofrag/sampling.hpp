#pragma once

#include "depofrag/measure.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace depofrag {

/// Per-time-point lists of particle sizes, the fragmentation observable.
/// Times are sorted; every retained time point has at least one sample and
/// all sizes are strictly positive.
struct SampleSet {
    std::vector<double> times;
    std::vector<std::vector<double>> sizes;

    void validate() const;  ///< throws std::invalid_argument on violation
    std::size_t n_times() const { return times.size(); }
};

/// n i.i.d. draws from a nonnegative measure of total mass 1 (tolerance 1e-6,
/// renormalized internally), by inversion of the CDF. Deterministic given the
/// seed and independent of the platform's distribution implementations.
/// Throws std::invalid_argument on signed or zero measures.
std::vector<double> sample(const Measure& mu, std::size_t n, std::uint64_t seed);

struct KdeOptions {
    std::optional<double> bandwidth;  ///< default: Silverman's rule
    int grid_cells = 512;
};

/// Gaussian kernel density estimate on an automatic grid, truncated to x >= 0
/// and renormalized to total mass 1. Default bandwidth is Silverman's rule
/// h = 0.9 min(sd, IQR/1.34) n^{-1/5}, with a small positive fallback when the
/// sample is degenerate. Throws std::invalid_argument on empty input.
Measure kde_estimate(const std::vector<double>& samples, const KdeOptions& opts = {});

/// Empirical p-th moment Σ_k x_k^p (a sum, not a mean; ratio forms are built
/// by callers). Throws std::invalid_argument on empty input.
double empirical_moment(const std::vector<double>& samples, double p);

}  // namespace depofrag
