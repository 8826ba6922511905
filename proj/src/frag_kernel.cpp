#include "depofrag/frag_kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace depofrag {

void FragmentationParams::validate() const {
    if (!(alpha > 0.0)) throw std::invalid_argument("FragmentationParams: alpha must be > 0");
    if (!(gamma >= 0.0) || !std::isfinite(gamma))
        throw std::invalid_argument("FragmentationParams: gamma must be finite and >= 0");
}

FragmentationKernel::FragmentationKernel(Measure kappa, double tol) : kappa_(std::move(kappa)), tol_(tol) {
    if (kappa_.is_zero()) throw std::invalid_argument("FragmentationKernel: zero measure");
    if (kappa_.support_min() < 0.0 || kappa_.support_max() > 1.0 + 1e-15)
        throw std::invalid_argument("FragmentationKernel: support must lie in [0,1]");
    for (const Atom& a : kappa_.atoms())
        if (a.x <= 0.0 || a.x >= 1.0)
            throw std::invalid_argument("FragmentationKernel: atoms at 0 or 1 are not allowed");
    if (!kappa_.is_nonnegative())
        throw std::invalid_argument("FragmentationKernel: kernel must be nonnegative");
    if (std::abs(kappa_.mass() - 2.0) > tol)
        throw std::invalid_argument("FragmentationKernel: total mass must equal 2");
    if (std::abs(kappa_.moment(1.0) - 1.0) > tol)
        throw std::invalid_argument("FragmentationKernel: first moment must equal 1");
    if (tv_norm(kappa_ - kappa_.reflected(1.0)) > 16.0 * tol)
        throw std::invalid_argument("FragmentationKernel: kernel must satisfy kappa(z) = kappa(1-z)");
}

namespace {

FragmentationKernel from_beta_cdf(int cells, double (*cdf)(double)) {
    if (cells < 2 || cells % 2 != 0)
        throw std::invalid_argument("kernel preset: cells must be even and >= 2");
    std::vector<double> grid(cells + 1);
    for (int i = 0; i <= cells; ++i) grid[i] = static_cast<double>(i) / cells;
    std::vector<double> mass(cells);
    for (int i = 0; i < cells / 2; ++i) {
        mass[i] = cdf(grid[i + 1]) - cdf(grid[i]);
        mass[cells - 1 - i] = mass[i];  // symmetry exact by construction
    }
    double total = 0.0;
    for (double m : mass) total += m;
    std::vector<double> density(cells);
    for (int i = 0; i < cells; ++i) density[i] = 2.0 * mass[i] / total * cells;
    return FragmentationKernel(Measure::from_density(std::move(grid), std::move(density)));
}

}  // namespace

FragmentationKernel FragmentationKernel::uniform() {
    return FragmentationKernel(Measure::from_density({0.0, 1.0}, {2.0}));
}

FragmentationKernel FragmentationKernel::center_weighted(int cells, double shape) {
    if (shape == 3.0) {
        return from_beta_cdf(cells, +[](double z) { return ((6.0 * z - 15.0) * z + 10.0) * z * z * z; });
    }
    throw std::invalid_argument("center_weighted: only shape = 3 has a closed-form CDF here");
}

FragmentationKernel FragmentationKernel::edge_weighted(int cells) {
    return from_beta_cdf(cells, +[](double z) { return 2.0 / M_PI * std::asin(std::sqrt(z)); });
}

FragmentationKernel FragmentationKernel::preset(const std::string& name, int cells) {
    if (name == "uniform") return uniform();
    if (name == "center-weighted") return center_weighted(cells);
    if (name == "edge-weighted") return edge_weighted(cells);
    throw std::invalid_argument("FragmentationKernel::preset: unknown kernel '" + name + "'");
}

}  // namespace depofrag
