#include "depofrag/frag_forward.hpp"

#include "depofrag/errors.hpp"
#include "depofrag/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace depofrag {

SeriesSolver::SeriesSolver(FragmentationKernel kernel, FragmentationParams params,
                           SeriesOptions opts)
    : kernel_(std::move(kernel)),
      params_(params),
      opts_(opts),
      table_(kernel_, params.gamma, std::max(2, opts.n_max > 0 ? opts.n_max + 1 : 6), opts.grid) {
    params_.validate();
    if (opts_.n_max > 0 && opts_.n_max > opts_.n_max_cap)
        throw std::invalid_argument("SeriesSolver: n_max exceeds cap");
}

double SeriesSolver::tail_bound(double q, int n) const {
    // |Σ_{m>n} q^m a_m| <= q^{n+1} ||a_{n+1}|| / (1 - q/(n+2)), from the
    // factorial decay of the recursion
    if (q >= static_cast<double>(n + 2)) return std::numeric_limits<double>::infinity();
    table_.extend(n + 1);
    const double head = std::pow(q, n + 1) * table_.tv_norm(n + 1);
    return head / (1.0 - q / static_cast<double>(n + 2));
}

int SeriesSolver::pick_n_terms(double q) const {
    if (opts_.n_max > 0) {
        const double rem = tail_bound(q, opts_.n_max);
        if (!(rem <= opts_.budget))
            throw numerical_error("SeriesSolver: truncation budget exceeded at fixed n_max");
        return opts_.n_max;
    }
    for (int n = 2; n <= opts_.n_max_cap; ++n) {
        const double rem = tail_bound(q, n);
        if (rem <= opts_.budget) return n;
    }
    throw numerical_error("SeriesSolver: truncation budget not reachable within the term cap");
}

namespace {

// ∫_a^b x f(x) dx with the integrand split at the given breakpoints
template <class F>
double integrate_x_weighted(double a, double b, const std::vector<double>& breaks, F&& f) {
    const GaussRule& rule = gauss8();
    std::vector<double> cuts{a, b};
    auto lo = std::lower_bound(breaks.begin(), breaks.end(), a);
    for (auto it = lo; it != breaks.end() && *it < b; ++it)
        if (*it > a) cuts.push_back(*it);
    std::sort(cuts.begin(), cuts.end());
    double acc = 0.0;
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s)
        acc += rule.integrate(cuts[s], cuts[s + 1], [&](double x) { return x * f(x); });
    return acc;
}

}  // namespace

SeriesResult SeriesSolver::fundamental(double t) const {
    if (t < 0.0) throw std::invalid_argument("SeriesSolver::fundamental: t must be >= 0");
    const double q = params_.alpha * t;
    if (t == 0.0) return {Measure::dirac(1.0), 0.0, 0};
    const int n = pick_n_terms(q);

    std::vector<double> panel_x;
    panel_x.reserve(64);
    // kernel breakpoints are panel boundaries too; use the kernel grid as cuts
    for (double g : kernel_.measure().grid()) panel_x.push_back(g);

    std::vector<double> grid = log_grid(table_.x_min(), 1.0, opts_.out_cells);
    std::vector<double> density(grid.size() - 1);
    for (std::size_t c = 0; c + 1 < grid.size(); ++c) {
        const double a = grid[c], b = grid[c + 1];
        const double xm = integrate_x_weighted(
            a, b, panel_x, [&](double x) { return table_.eval_geometric(q, n, x); });
        density[c] = xm / (0.5 * (b * b - a * a));  // first-moment preserving value
    }
    Measure mu = Measure::dirac(1.0, std::exp(-q)) +
                 Measure::from_density(std::move(grid), std::move(density));
    return {std::move(mu), tail_bound(q, n), n};
}

SeriesResult SeriesSolver::solve(const Measure& mu0, double t) const {
    if (t < 0.0) throw std::invalid_argument("SeriesSolver::solve: t must be >= 0");
    if (mu0.is_zero()) return {Measure(), 0.0, 0};
    if (!(mu0.support_min() > 0.0))
        throw std::invalid_argument("SeriesSolver::solve: mu0 must be supported in (0, L]");
    if (t == 0.0) return {mu0, 0.0, 0};

    const double alpha = params_.alpha, gamma = params_.gamma;
    const double L = mu0.support_max();
    const double q_eff = alpha * t * std::max(1.0, std::pow(L, gamma));
    const int n = pick_n_terms(q_eff);

    // surviving part e^{-α x^γ t} μ0
    std::vector<Atom> atoms;
    for (const Atom& a : mu0.atoms())
        atoms.push_back({a.x, a.w * std::exp(-alpha * std::pow(a.x, gamma) * t)});
    Measure survivors = Measure::from_atoms(std::move(atoms));
    if (mu0.has_density()) {
        const auto& g0 = mu0.grid();
        const auto& v0 = mu0.density();
        std::vector<double> vals(v0.size());
        const GaussRule& rule = gauss8();
        for (std::size_t i = 0; i < v0.size(); ++i) {
            if (v0[i] == 0.0) {
                vals[i] = 0.0;
                continue;
            }
            const double a = g0[i], b = g0[i + 1];
            const double xm = rule.integrate(a, b, [&](double x) {
                return x * std::exp(-alpha * std::pow(x, gamma) * t);
            });
            vals[i] = v0[i] * xm / (0.5 * (b * b - a * a));
        }
        survivors = survivors + Measure::from_density(g0, std::move(vals));
    }

    // fragment part: F(x) = Σ sources (1/ℓ) Σ_n (αt ℓ^γ)^n a_n(x/ℓ)
    auto fragment_density_at = [&](double x) {
        double acc = 0.0;
        for (const Atom& a : mu0.atoms()) {
            if (a.x < x) continue;
            acc += a.w / a.x * table_.eval_geometric(alpha * t * std::pow(a.x, gamma), n, x / a.x);
        }
        const auto& g0 = mu0.grid();
        const auto& v0 = mu0.density();
        const GaussRule& rule = gauss8();
        for (std::size_t i = 0; i < v0.size(); ++i) {
            if (v0[i] == 0.0) continue;
            const double lo = std::max(g0[i], x), hi = g0[i + 1];
            if (hi <= lo) continue;
            acc += v0[i] * rule.integrate(lo, hi, [&](double ell) {
                return table_.eval_geometric(alpha * t * std::pow(ell, gamma), n, x / ell) / ell;
            });
        }
        return acc;
    };

    // the fragment density jumps at atom locations (a_n(1) != 0) and has
    // kinks at the mu0 grid; cut the projection integrals there
    std::vector<double> breaks;
    for (const Atom& a : mu0.atoms()) breaks.push_back(a.x);
    for (double g : mu0.grid()) breaks.push_back(g);
    std::sort(breaks.begin(), breaks.end());

    const double out_lo = table_.x_min() * mu0.support_min();
    std::vector<double> grid = log_grid(out_lo, L, opts_.out_cells);
    std::vector<double> density(grid.size() - 1);
    for (std::size_t c = 0; c + 1 < grid.size(); ++c) {
        const double a = grid[c], b = grid[c + 1];
        const double xm = integrate_x_weighted(a, b, breaks, fragment_density_at);
        density[c] = xm / (0.5 * (b * b - a * a));
    }

    Measure mu = survivors + Measure::from_density(std::move(grid), std::move(density));
    return {std::move(mu), tail_bound(q_eff, n) * tv_norm(mu0), n};
}

// ---------------------------------------------------------------------------
// grid ODE oracle

namespace {

struct GridOdeSystem {
    std::vector<double> grid;
    std::vector<double> lambda;    // x-weighted cell average of x^γ
    std::vector<double> centroid;  // (p+q)/2
    Eigen::MatrixXd gain;          // mass-rate redistribution, lower triangular
    double alpha = 1.0;
    bool has_gain = true;

    void derivative(const Eigen::VectorXd& m, Eigen::VectorXd& out) const {
        if (has_gain)
            out.noalias() = gain * m;
        else
            out.setZero();
        for (long j = 0; j < m.size(); ++j) out[j] -= lambda[static_cast<std::size_t>(j)] * m[j];
        out *= alpha;
    }

    double rate_bound(const Eigen::VectorXd& m) const {
        const double mmax = m.cwiseAbs().maxCoeff();
        double r = 0.0;
        for (long j = 0; j < m.size(); ++j)
            if (std::abs(m[j]) > 1e-16 * mmax) r = std::max(r, lambda[static_cast<std::size_t>(j)]);
        return alpha * std::max(r, 1e-300);
    }

    void rk4_step(Eigen::VectorXd& m, double dt, Eigen::VectorXd& k1, Eigen::VectorXd& k2,
                  Eigen::VectorXd& k3, Eigen::VectorXd& k4, Eigen::VectorXd& tmp) const {
        derivative(m, k1);
        tmp = m + 0.5 * dt * k1;
        derivative(tmp, k2);
        tmp = m + 0.5 * dt * k2;
        derivative(tmp, k3);
        tmp = m + dt * k3;
        derivative(tmp, k4);
        m += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
};

GridOdeSystem build_grid_system(const std::vector<double>& grid,
                                const FragmentationParams& params,
                                const FragmentationKernel& kernel, bool with_gain) {
    params.validate();
    if (grid.size() < 3 || !(grid.front() > 0.0))
        throw std::invalid_argument("solve_grid_ode: grid must be positive with >= 2 cells");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw std::invalid_argument("solve_grid_ode: grid must be strictly increasing");

    const std::size_t nc = grid.size() - 1;
    const double gamma = params.gamma;
    GridOdeSystem sys;
    sys.grid = grid;
    sys.alpha = params.alpha;
    sys.has_gain = with_gain;
    sys.lambda.resize(nc);
    sys.centroid.resize(nc);
    for (std::size_t j = 0; j < nc; ++j) {
        const double c = grid[j], d = grid[j + 1];
        sys.centroid[j] = 0.5 * (c + d);
        sys.lambda[j] = (std::pow(d, gamma + 2.0) - std::pow(c, gamma + 2.0)) / (gamma + 2.0) /
                        (0.5 * (d * d - c * c));
    }
    if (!with_gain) return sys;

    // κ cumulative mass for K̄(z1, z2) lookups
    const Measure& kap = kernel.measure();
    const auto& kg = kap.grid();
    const auto& kv = kap.density();
    std::vector<double> kcum(kg.size(), 0.0);
    for (std::size_t i = 0; i < kv.size(); ++i)
        kcum[i + 1] = kcum[i] + kv[i] * (kg[i + 1] - kg[i]);
    auto kappa_cdf = [&](double z) {
        if (kg.empty() || z <= kg.front()) return 0.0;
        if (z >= kg.back()) return kcum.back();
        const auto it = std::upper_bound(kg.begin(), kg.end(), z);
        const std::size_t i = static_cast<std::size_t>(it - kg.begin()) - 1;
        return kcum[i] + kv[i] * (z - kg[i]);
    };

    sys.gain = Eigen::MatrixXd::Zero(static_cast<long>(nc), static_cast<long>(nc));
    const GaussRule& rule = gauss16();
    for (std::size_t j = 0; j < nc; ++j) {
        const double c = grid[j], d = grid[j + 1];
        const double width = d - c;
        // density part of κ: Gauss in the source size y
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
            const double y = 0.5 * (c + d) + 0.5 * width * rule.nodes[q];
            const double wy = 0.5 * width * rule.weights[q] / width;  // per unit source mass
            const double yg = std::pow(y, gamma);
            for (std::size_t i = 0; i <= j; ++i) {
                const double zlo = grid[i] / y, zhi = grid[i + 1] / y;
                if (zlo >= 1.0) break;
                const double frag = kappa_cdf(std::min(zhi, 1.0)) - kappa_cdf(zlo);
                if (frag > 0.0)
                    sys.gain(static_cast<long>(i), static_cast<long>(j)) += wy * yg * frag;
            }
        }
        // atoms of κ at z0: source y in [c,d] ∩ [p_i/z0, q_i/z0]
        for (const Atom& at : kap.atoms()) {
            for (std::size_t i = 0; i <= j; ++i) {
                const double ylo = std::max(c, grid[i] / at.x);
                const double yhi = std::min(d, grid[i + 1] / at.x);
                if (yhi <= ylo) continue;
                const double integral =
                    (std::pow(yhi, gamma + 1.0) - std::pow(ylo, gamma + 1.0)) / (gamma + 1.0);
                sys.gain(static_cast<long>(i), static_cast<long>(j)) +=
                    at.w * integral / width;
            }
        }
        // conservative rescale: per unit source mass the exact first-moment
        // gain rate equals λ̂_j x̂_j; the cell-centroid projection loses O(Δ²),
        // which this factor restores (fixed-pivot sectional practice).
        double got = 0.0;
        for (std::size_t i = 0; i <= j; ++i)
            got += sys.centroid[i] * sys.gain(static_cast<long>(i), static_cast<long>(j));
        const double want = sys.lambda[j] * sys.centroid[j];
        if (got > 0.5 * want) {
            const double f = std::min(want / got, 2.0);
            for (std::size_t i = 0; i <= j; ++i)
                sys.gain(static_cast<long>(i), static_cast<long>(j)) *= f;
        }
    }
    return sys;
}

}  // namespace

Measure GridOdeResult::measure_at(std::size_t j) const {
    return Measure::from_density(grid, values.at(j));
}

double GridOdeResult::mass_moment(std::size_t j) const {
    const auto& v = values.at(j);
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        acc += v[i] * 0.5 * (grid[i] + grid[i + 1]) * (grid[i + 1] - grid[i]);
    return acc;
}

GridOdeResult solve_grid_ode(const std::vector<double>& grid, const std::vector<double>& u0,
                             const FragmentationParams& params, const FragmentationKernel& kernel,
                             double T, const GridOdeOptions& opts) {
    if (u0.size() + 1 != grid.size())
        throw std::invalid_argument("solve_grid_ode: u0 must have one value per cell");
    if (!(T > 0.0)) throw std::invalid_argument("solve_grid_ode: T must be > 0");
    GridOdeSystem sys = build_grid_system(grid, params, kernel, !opts.disable_gain);

    const std::size_t nc = u0.size();
    Eigen::VectorXd m(static_cast<long>(nc));
    for (std::size_t j = 0; j < nc; ++j) m[static_cast<long>(j)] = u0[j] * (grid[j + 1] - grid[j]);

    std::vector<double> stores{0.0};
    for (double t : opts.store_times)
        if (t > 0.0 && t < T) stores.push_back(t);
    stores.push_back(T);
    std::sort(stores.begin(), stores.end());
    stores.erase(std::unique(stores.begin(), stores.end()), stores.end());

    if (opts.dt > 0.0 && opts.dt * sys.rate_bound(m) > opts.cfl * (1.0 + 1e-12))
        throw std::invalid_argument("solve_grid_ode: dt exceeds the rate-bound step limit");

    GridOdeResult res;
    res.grid = grid;
    auto record = [&](double t) {
        std::vector<double> vals(nc);
        for (std::size_t j = 0; j < nc; ++j)
            vals[j] = m[static_cast<long>(j)] / (grid[j + 1] - grid[j]);
        res.times.push_back(t);
        res.values.push_back(std::move(vals));
    };
    record(0.0);

    Eigen::VectorXd k1(m.size()), k2(m.size()), k3(m.size()), k4(m.size()), tmp(m.size());
    double t = 0.0;
    for (std::size_t s = 1; s < stores.size(); ++s) {
        const double target = stores[s];
        while (t < target - 1e-14 * T) {
            double dt = opts.dt > 0.0 ? opts.dt : opts.cfl / sys.rate_bound(m);
            dt = std::min(dt, target - t);
            sys.rk4_step(m, dt, k1, k2, k3, k4, tmp);
            if (!m.allFinite()) throw numerical_error("solve_grid_ode: step diverged");
            t += dt;
        }
        t = target;
        record(t);
    }
    return res;
}

ProfileResult self_similar_profile(const FragmentationParams& params,
                                   const FragmentationKernel& kernel, const ProfileOptions& opts) {
    params.validate();
    if (!(params.gamma > 0.0))
        throw std::invalid_argument("self_similar_profile: requires gamma > 0");
    if (!(opts.t0 > 0.0) || !(opts.t_max > opts.t0))
        throw std::invalid_argument("self_similar_profile: bad horizon");

    const std::vector<double> xgrid = log_grid(opts.ode_x_min, 2.0, opts.ode_cells);
    const std::size_t nc = xgrid.size() - 1;
    std::vector<double> u0(nc);
    if (!opts.u0_values.empty()) {
        if (opts.u0_values.size() != nc)
            throw std::invalid_argument("self_similar_profile: u0_values size mismatch");
        u0 = opts.u0_values;
    } else {
        for (std::size_t j = 0; j < nc; ++j) {
            const double x = 0.5 * (xgrid[j] + xgrid[j + 1]);
            u0[j] = x * std::exp(-4.0 * x);  // broad default start
        }
    }
    {  // normalize ∫ x u dx = 1
        double mm = 0.0;
        for (std::size_t j = 0; j < nc; ++j)
            mm += u0[j] * 0.5 * (xgrid[j] + xgrid[j + 1]) * (xgrid[j + 1] - xgrid[j]);
        if (!(mm > 0.0)) throw std::invalid_argument("self_similar_profile: empty start");
        for (double& v : u0) v /= mm;
    }

    GridOdeSystem sys = build_grid_system(xgrid, params, kernel, true);
    Eigen::VectorXd m(static_cast<long>(nc));
    for (std::size_t j = 0; j < nc; ++j) m[static_cast<long>(j)] = u0[j] * (xgrid[j + 1] - xgrid[j]);

    const std::vector<double> zgrid = log_grid(opts.z_min, opts.z_max, opts.z_cells);
    // log-linear interpolation between cell centroids; a plain cell lookup
    // leaves a staircase whose alignment shifts with the rescaling and stalls
    // the doubling distance around the grid resolution
    std::vector<double> u_cent(nc);
    for (std::size_t j = 0; j < nc; ++j)
        u_cent[j] = 0.5 * (std::log(xgrid[j]) + std::log(xgrid[j + 1]));
    auto density_at = [&](double x) -> double {
        if (!(x > 0.0)) return 0.0;
        const double u = std::log(x);
        if (u <= u_cent.front() || u >= u_cent.back()) return 0.0;
        const auto it = std::upper_bound(u_cent.begin(), u_cent.end(), u);
        const std::size_t j = static_cast<std::size_t>(it - u_cent.begin()) - 1;
        const double vl = m[static_cast<long>(j)] / (xgrid[j + 1] - xgrid[j]);
        const double vr = m[static_cast<long>(j + 1)] / (xgrid[j + 2] - xgrid[j + 1]);
        const double w = (u - u_cent[j]) / (u_cent[j + 1] - u_cent[j]);
        return vl + w * (vr - vl);
    };
    auto rescaled = [&](double t) {
        std::vector<double> g(zgrid.size() - 1);
        const double shrink = std::pow(t, 1.0 / params.gamma);
        const double amp = std::pow(t, 2.0 / params.gamma);
        for (std::size_t i = 0; i + 1 < zgrid.size(); ++i) {
            const double z = 0.5 * (zgrid[i] + zgrid[i + 1]);
            g[i] = density_at(z / shrink) / amp;
        }
        double mass = 0.0;
        for (std::size_t i = 0; i + 1 < zgrid.size(); ++i)
            mass += g[i] * (zgrid[i + 1] - zgrid[i]);
        if (mass > 0.0)
            for (double& v : g) v /= mass;
        return g;
    };

    Eigen::VectorXd k1(m.size()), k2(m.size()), k3(m.size()), k4(m.size()), tmp(m.size());
    double t = 0.0;
    std::vector<double> prev;
    double checkpoint = opts.t0;
    while (checkpoint <= opts.t_max * (1.0 + 1e-12)) {
        while (t < checkpoint - 1e-12 * checkpoint) {
            double dt = 0.1 / sys.rate_bound(m);
            dt = std::min(dt, checkpoint - t);
            sys.rk4_step(m, dt, k1, k2, k3, k4, tmp);
            if (!m.allFinite()) throw numerical_error("self_similar_profile: ODE step diverged");
            t += dt;
        }
        t = checkpoint;
        std::vector<double> cur = rescaled(t);
        if (!prev.empty()) {
            double diff = 0.0;
            for (std::size_t i = 0; i + 1 < zgrid.size(); ++i)
                diff += std::abs(cur[i] - prev[i]) * 0.5 * (zgrid[i] + zgrid[i + 1]) *
                        (zgrid[i + 1] - zgrid[i]);
            if (diff < opts.tol) {
                ProfileResult res;
                res.g = Measure::from_density(zgrid, std::move(cur));
                res.achieved_diff = diff;
                res.t_final = t;
                return res;
            }
        }
        prev = std::move(cur);
        checkpoint *= 2.0;
    }
    throw numerical_error("self_similar_profile: no convergence before the horizon");
}

}  // namespace depofrag
