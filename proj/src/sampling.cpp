#include "depofrag/sampling.hpp"

#include "depofrag/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace depofrag {

void SampleSet::validate() const {
    if (times.size() != sizes.size())
        throw std::invalid_argument("SampleSet: times/sizes length mismatch");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i]) || times[i] < 0.0)
            throw std::invalid_argument("SampleSet: invalid time point");
        if (i > 0 && !(times[i] > times[i - 1]))
            throw std::invalid_argument("SampleSet: times must be strictly increasing");
        if (sizes[i].empty())
            throw std::invalid_argument("SampleSet: time point without samples");
        for (double x : sizes[i])
            if (!(x > 0.0) || !std::isfinite(x))
                throw std::invalid_argument("SampleSet: sizes must be strictly positive");
    }
}

std::vector<double> sample(const Measure& mu, std::size_t n, std::uint64_t seed) {
    if (mu.is_zero()) throw std::invalid_argument("sample: zero measure");
    if (!mu.is_nonnegative()) throw std::invalid_argument("sample: signed measure");
    const double total = mu.mass();
    if (std::abs(total - 1.0) > 1e-6)
        throw std::invalid_argument("sample: measure must be normalized to mass 1");

    // segments of the CDF: atoms are jumps, cells are linear ramps
    struct Segment {
        double cum;   // cumulative mass at segment start
        double mass;  // segment mass
        double a, b;  // support (a == b for atoms)
    };
    std::vector<Segment> segs;
    {
        std::size_t ia = 0, ic = 0;
        const auto& atoms = mu.atoms();
        const auto& g = mu.grid();
        const auto& d = mu.density();
        double cum = 0.0;
        while (ia < atoms.size() || ic < d.size()) {
            const bool take_atom =
                ia < atoms.size() && (ic >= d.size() || atoms[ia].x <= g[ic]);
            if (take_atom) {
                segs.push_back({cum, atoms[ia].w, atoms[ia].x, atoms[ia].x});
                cum += atoms[ia].w;
                ++ia;
            } else {
                const double m = d[ic] * (g[ic + 1] - g[ic]);
                if (m > 0.0) {
                    segs.push_back({cum, m, g[ic], g[ic + 1]});
                    cum += m;
                }
                ++ic;
            }
        }
        for (Segment& s : segs) {
            s.cum /= total;
            s.mass /= total;
        }
    }

    std::mt19937_64 rng(seed);
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        // uniform in [0,1) from the top 53 bits; bit-identical across platforms
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        auto it = std::upper_bound(segs.begin(), segs.end(), u,
                                   [](double val, const Segment& s) { return val < s.cum; });
        const Segment& s = (it == segs.begin()) ? segs.front() : *(it - 1);
        if (s.a == s.b)
            out.push_back(s.a);
        else
            out.push_back(s.a + (s.b - s.a) * std::clamp((u - s.cum) / s.mass, 0.0, 1.0));
    }
    return out;
}

Measure kde_estimate(const std::vector<double>& samples, const KdeOptions& opts) {
    if (samples.empty()) throw std::invalid_argument("kde_estimate: empty sample list");
    const std::size_t n = samples.size();

    double h;
    if (opts.bandwidth) {
        h = *opts.bandwidth;
        if (!(h > 0.0)) throw std::invalid_argument("kde_estimate: bandwidth must be > 0");
    } else {
        // Silverman: h = 0.9 min(sd, IQR/1.34) n^{-1/5}
        std::vector<double> xs = samples;
        std::sort(xs.begin(), xs.end());
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double x : xs) var += (x - mean) * (x - mean);
        const double sd = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
        auto quantile = [&](double q) {
            const double pos = q * static_cast<double>(n - 1);
            const std::size_t i = static_cast<std::size_t>(pos);
            const double t = pos - static_cast<double>(i);
            return i + 1 < n ? xs[i] + t * (xs[i + 1] - xs[i]) : xs[i];
        };
        const double iqr = quantile(0.75) - quantile(0.25);
        double spread = sd;
        if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
        h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
        if (!(h > 0.0)) h = std::max(1e-3 * std::max(std::abs(mean), 1.0), 1e-12);  // degenerate sample
    }

    const auto [mn_it, mx_it] = std::minmax_element(samples.begin(), samples.end());
    const double lo = std::max(0.0, *mn_it - 4.0 * h);
    const double hi = *mx_it + 4.0 * h;
    const int cells = std::max(2, opts.grid_cells);
    std::vector<double> grid(cells + 1);
    for (int i = 0; i <= cells; ++i)
        grid[i] = lo + (hi - lo) * i / cells;

    // exact Gaussian mass per cell, then renormalize over x >= 0
    const double inv = 1.0 / (h * std::numbers::sqrt2);
    std::vector<double> cdf(cells + 1, 0.0);
    for (double x : samples)
        for (int i = 0; i <= cells; ++i) cdf[i] += 0.5 * std::erfc((x - grid[i]) * inv);
    std::vector<double> density(cells);
    double mass = 0.0;
    for (int i = 0; i < cells; ++i) {
        const double m = (cdf[i + 1] - cdf[i]) / static_cast<double>(n);
        density[i] = m / (grid[i + 1] - grid[i]);
        mass += m;
    }
    if (!(mass > 0.0)) throw numerical_error("kde_estimate: vanishing mass after truncation");
    for (double& v : density) v /= mass;
    return Measure::from_density(std::move(grid), std::move(density));
}

double empirical_moment(const std::vector<double>& samples, double p) {
    if (samples.empty()) throw std::invalid_argument("empirical_moment: empty sample list");
    double acc = 0.0;
    for (double x : samples) acc += std::pow(x, p);
    return acc;
}

}  // namespace depofrag
