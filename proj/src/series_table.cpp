#include "depofrag/series_table.hpp"

#include "depofrag/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace depofrag {

SeriesTable::SeriesTable(const FragmentationKernel& kernel, double gamma, int n_max,
                         const SeriesGrid& grid)
    : gamma_(gamma),
      x_min_(grid.x_min),
      node_rule_(grid.nodes_per_panel),
      piece_rule_(8) {
    if (!(gamma >= 0.0)) throw std::invalid_argument("SeriesTable: gamma must be >= 0");
    if (n_max < 1) throw std::invalid_argument("SeriesTable: n_max must be >= 1");
    if (!(x_min_ > 0.0) || x_min_ >= 1.0) throw std::invalid_argument("SeriesTable: bad x_min");
    if (grid.nodes_per_panel < 2 || grid.nodes_per_panel > 32 || grid.min_panels < 4)
        throw std::invalid_argument("SeriesTable: grid parameters out of range");
    const Measure& kappa = kernel.measure();
    if (kappa.has_atoms())
        throw std::invalid_argument("SeriesTable: series coefficients require a density kernel");
    kappa_grid_ = kappa.grid();
    kappa_vals_ = kappa.density();

    // Panel boundaries in u = log x: kernel breakpoints in (x_min, 1), plus a
    // log refinement so the recursion's integrands stay polynomial-like per
    // piece. a_n inherits κ's jumps, so panels must not straddle them.
    std::vector<double> bounds{x_min_, 1.0};
    for (double g : kappa_grid_)
        if (g > x_min_ * (1.0 + 1e-12) && g < 1.0 - 1e-12) bounds.push_back(g);
    std::sort(bounds.begin(), bounds.end());
    bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());
    const double max_du = std::log(1.0 / x_min_) / grid.min_panels;
    panel_u_.clear();
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
        const double ua = std::log(bounds[i]), ub = std::log(bounds[i + 1]);
        const int pieces = std::max(1, static_cast<int>(std::ceil((ub - ua) / max_du)));
        for (int p = 0; p < pieces; ++p) panel_u_.push_back(ua + (ub - ua) * p / pieces);
    }
    panel_u_.push_back(0.0);  // log(1)

    // reference Gauss nodes on [0,1] and their barycentric weights
    const int K = grid.nodes_per_panel;
    ref_nodes_.resize(K);
    for (int j = 0; j < K; ++j) ref_nodes_[j] = 0.5 * (1.0 + node_rule_.nodes[j]);
    bary_.assign(K, 1.0);
    for (int j = 0; j < K; ++j)
        for (int k = 0; k < K; ++k)
            if (k != j) bary_[j] /= (ref_nodes_[j] - ref_nodes_[k]);

    const std::size_t P = panel_u_.size() - 1;
    u_nodes_.resize(P * K);
    x_nodes_.resize(P * K);
    w_u_.resize(P * K);
    for (std::size_t p = 0; p < P; ++p) {
        const double ua = panel_u_[p], ub = panel_u_[p + 1];
        for (int j = 0; j < K; ++j) {
            const double u = ua + (ub - ua) * ref_nodes_[j];
            u_nodes_[p * K + j] = u;
            x_nodes_[p * K + j] = std::exp(u);
            w_u_[p * K + j] = 0.5 * (ub - ua) * node_rule_.weights[j];
        }
    }

    // a_1 = κ
    std::vector<double> a1(x_nodes_.size());
    for (std::size_t i = 0; i < x_nodes_.size(); ++i) a1[i] = kappa_at(x_nodes_[i]);
    values_.push_back(std::move(a1));
    extend(n_max);
}

std::size_t SeriesTable::panel_of(double u) const {
    const auto it = std::upper_bound(panel_u_.begin(), panel_u_.end(), u);
    if (it == panel_u_.begin()) return 0;
    std::size_t p = static_cast<std::size_t>(it - panel_u_.begin()) - 1;
    return std::min(p, panel_u_.size() - 2);
}

double SeriesTable::kappa_at(double x) const {
    if (x < kappa_grid_.front() || x >= kappa_grid_.back()) {
        if (x == kappa_grid_.back()) return kappa_vals_.back();
        return 0.0;
    }
    const auto it = std::upper_bound(kappa_grid_.begin(), kappa_grid_.end(), x);
    return kappa_vals_[static_cast<std::size_t>(it - kappa_grid_.begin()) - 1];
}

double SeriesTable::interpolate(const std::vector<double>& vals, double x) const {
    if (x > 1.0 || x < x_min_) return 0.0;
    const double u = std::log(x);
    const std::size_t p = panel_of(u);
    const int K = static_cast<int>(ref_nodes_.size());
    const double t = (u - panel_u_[p]) / (panel_u_[p + 1] - panel_u_[p]);
    double num = 0.0, den = 0.0;
    for (int j = 0; j < K; ++j) {
        const double d = t - ref_nodes_[j];
        if (d == 0.0) return vals[p * K + j];
        const double c = bary_[j] / d;
        num += c * vals[p * K + j];
        den += c;
    }
    return num / den;
}

double SeriesTable::eval(int n, double x) const {
    if (n < 1 || n > n_max()) throw std::invalid_argument("SeriesTable::eval: n out of range");
    return interpolate(values_[static_cast<std::size_t>(n) - 1], x);
}

double SeriesTable::eval_combination(const std::vector<double>& coeffs, double x) const {
    if (coeffs.size() > values_.size())
        throw std::invalid_argument("SeriesTable::eval_combination: not enough terms");
    if (x > 1.0 || x < x_min_) return 0.0;
    const double u = std::log(x);
    const std::size_t p = panel_of(u);
    const int K = static_cast<int>(ref_nodes_.size());
    const double t = (u - panel_u_[p]) / (panel_u_[p + 1] - panel_u_[p]);
    double acc = 0.0, den = 0.0;
    std::array<double, 32> c{};
    for (int j = 0; j < K; ++j) {
        const double d = t - ref_nodes_[j];
        if (d == 0.0) {
            double v = 0.0;
            for (std::size_t n = 0; n < coeffs.size(); ++n) v += coeffs[n] * values_[n][p * K + j];
            return v;
        }
        c[j] = bary_[j] / d;
        den += c[j];
    }
    for (std::size_t n = 0; n < coeffs.size(); ++n) {
        if (coeffs[n] == 0.0) continue;
        double num = 0.0;
        for (int j = 0; j < K; ++j) num += c[j] * values_[n][p * K + j];
        acc += coeffs[n] * num;
    }
    return acc / den;
}

double SeriesTable::eval_geometric(double q, int n_used, double x) const {
    if (n_used < 0 || n_used > n_max())
        throw std::invalid_argument("SeriesTable::eval_geometric: n_used out of range");
    if (x > 1.0 || x < x_min_ || n_used == 0 || q == 0.0) return 0.0;
    const double u = std::log(x);
    const std::size_t p = panel_of(u);
    const int K = static_cast<int>(ref_nodes_.size());
    const double t = (u - panel_u_[p]) / (panel_u_[p + 1] - panel_u_[p]);
    std::array<double, 32> c{};
    double den = 0.0;
    int exact = -1;
    for (int j = 0; j < K; ++j) {
        const double d = t - ref_nodes_[j];
        if (d == 0.0) {
            exact = j;
            break;
        }
        c[j] = bary_[j] / d;
        den += c[j];
    }
    double acc = 0.0, qn = 1.0;
    for (int n = 1; n <= n_used; ++n) {
        qn *= q;
        const auto& vals = values_[static_cast<std::size_t>(n) - 1];
        if (exact >= 0) {
            acc += qn * vals[p * static_cast<std::size_t>(K) + static_cast<std::size_t>(exact)];
        } else {
            double num = 0.0;
            for (int j = 0; j < K; ++j) num += c[j] * vals[p * static_cast<std::size_t>(K) + static_cast<std::size_t>(j)];
            acc += qn * num / den;
        }
    }
    return acc;
}

double SeriesTable::moment(int n, double p) const {
    if (n < 1 || n > n_max()) throw std::invalid_argument("SeriesTable::moment: n out of range");
    const auto& vals = values_[static_cast<std::size_t>(n) - 1];
    double acc = 0.0;
    for (std::size_t i = 0; i < x_nodes_.size(); ++i)
        acc += w_u_[i] * std::pow(x_nodes_[i], p + 1.0) * vals[i];  // ∫x^p a dx = ∫e^{u(p+1)}a du
    return acc;
}

double SeriesTable::tv_norm(int n) const {
    if (n < 1 || n > n_max()) throw std::invalid_argument("SeriesTable::tv_norm: n out of range");
    const auto& vals = values_[static_cast<std::size_t>(n) - 1];
    double acc = 0.0;
    for (std::size_t i = 0; i < x_nodes_.size(); ++i)
        acc += w_u_[i] * x_nodes_[i] * std::abs(vals[i]);
    return acc;
}

std::vector<double> SeriesTable::compute_next() const {
    const std::size_t n = values_.size();  // building a_{n+1}
    const auto& an = values_.back();
    std::vector<double> out(x_nodes_.size());

    double fact = 1.0;  // n!
    for (std::size_t q = 2; q <= n; ++q) fact *= static_cast<double>(q);
    const double source_coeff = (n % 2 == 0 ? 1.0 : -1.0) / fact;  // (-1)^n / n!

    for (std::size_t i = 0; i < x_nodes_.size(); ++i) {
        const double x = x_nodes_[i];
        const double xg = std::pow(x, gamma_);

        // gain = x^γ ∫_x^1 z^{-γ-1} κ(z) a_n(x/z) dz, pieces split at κ's
        // breakpoints and at preimages of the panel boundaries so the
        // integrand is smooth per piece.
        std::vector<double> cuts{x, 1.0};
        for (double g : kappa_grid_)
            if (g > x && g < 1.0) cuts.push_back(g);
        for (double pu : panel_u_) {
            const double pb = std::exp(pu);  // a_n sampled at x/z: z = x / panel boundary
            const double z = x / pb;
            if (z > x && z < 1.0) cuts.push_back(z);
        }
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

        double gain = 0.0;
        for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
            const double za = cuts[s], zb = cuts[s + 1];
            const double kv = kappa_at(0.5 * (za + zb));
            if (kv == 0.0) continue;
            double piece = 0.0;
            const double mid = 0.5 * (za + zb), half = 0.5 * (zb - za);
            for (std::size_t j = 0; j < piece_rule_.nodes.size(); ++j) {
                const double z = mid + half * piece_rule_.nodes[j];
                piece += piece_rule_.weights[j] * std::pow(z, -gamma_ - 1.0) *
                         interpolate(an, x / z);
            }
            gain += kv * piece * half;
        }
        gain *= xg;

        out[i] = (-xg * an[i] + gain + kappa_at(x) * source_coeff) / static_cast<double>(n + 1);
    }
    return out;
}

void SeriesTable::extend(int n) {
    while (n_max() < n) values_.push_back(compute_next());
}

}  // namespace depofrag
