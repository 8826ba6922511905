#include "depofrag/frag_inverse.hpp"

#include "depofrag/errors.hpp"
#include "depofrag/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace depofrag {

GammaFit fit_gamma(const SampleSet& samples, const GammaFitOptions& opts) {
    samples.validate();
    std::vector<double> ts, ys;
    for (std::size_t i = 0; i < samples.n_times(); ++i) {
        if (!(samples.times[i] > 0.0)) continue;  // the log-log fit needs t > 0
        double m1 = empirical_moment(samples.sizes[i], 1.0);
        if (opts.convention == MomentConvention::Ratio)
            m1 /= static_cast<double>(samples.sizes[i].size());
        if (!(m1 > 0.0)) throw numerical_error("fit_gamma: vanishing first moment");
        ts.push_back(std::log(samples.times[i]));
        ys.push_back(std::log(m1));
    }
    const std::size_t n = ts.size();
    if (n < 4)
        throw std::invalid_argument("fit_gamma: need at least 4 positive time points");

    double best_sse = std::numeric_limits<double>::infinity();
    double best_c = 0.0, best_slope = 0.0;
    std::size_t best_b = n;
    for (std::size_t b = 0; b + 2 <= n; ++b) {  // breakpoint at observed time b
        // least squares for y ~ C - s*phi, phi = max(0, log t - log t_b)
        double s1 = 0, sp = 0, spp = 0, sy = 0, spy = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double phi = std::max(0.0, ts[i] - ts[b]);
            s1 += 1.0;
            sp += phi;
            spp += phi * phi;
            sy += ys[i];
            spy += phi * ys[i];
        }
        const double det = s1 * spp - sp * sp;
        if (std::abs(det) < 1e-14) continue;
        const double c = (spp * sy - sp * spy) / det;
        const double slope = -(s1 * spy - sp * sy) / det;  // s = 1/γ
        if (!(slope > 0.0)) continue;
        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = ys[i] - (c - slope * std::max(0.0, ts[i] - ts[b]));
            sse += r * r;
        }
        if (sse < best_sse) {
            best_sse = sse;
            best_c = c;
            best_slope = slope;
            best_b = b;
        }
    }
    if (best_b == n) throw numerical_error("fit_gamma: no breakpoint with a decaying tail");

    GammaFit fit;
    fit.gamma_hat = 1.0 / best_slope;
    fit.t_asymp = std::exp(ts[best_b]);
    fit.intercept = best_c;
    fit.sse = best_sse;
    fit.breakpoint_at_boundary = (best_b == 0 || best_b + 2 == n);
    double mean = 0.0;
    for (double y : ys) mean += y;
    mean /= static_cast<double>(n);
    double tss = 0.0;
    for (double y : ys) tss += (y - mean) * (y - mean);
    fit.r_squared = tss > 0.0 ? 1.0 - best_sse / tss : 1.0;
    fit.fit_times.reserve(n);
    fit.residuals.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        fit.fit_times.push_back(std::exp(ts[i]));
        fit.residuals.push_back(ys[i] -
                                (best_c - best_slope * std::max(0.0, ts[i] - ts[best_b])));
    }
    return fit;
}

AlphaEstimate estimate_alpha(const SampleSet& samples, const GammaFit& fit) {
    samples.validate();
    if (!(fit.gamma_hat > 0.0)) throw std::invalid_argument("estimate_alpha: invalid gamma");
    AlphaEstimate est;
    for (std::size_t i = 0; i < samples.n_times(); ++i) {
        const double t = samples.times[i];
        if (t < fit.t_asymp * (1.0 - 1e-12) || !(t > 0.0)) continue;
        const double mg = empirical_moment(samples.sizes[i], fit.gamma_hat) /
                          static_cast<double>(samples.sizes[i].size());
        est.times_used.push_back(t);
        est.per_point.push_back(1.0 / (fit.gamma_hat * t * mg));
    }
    if (est.per_point.empty())
        throw std::invalid_argument("estimate_alpha: no time points at or past t_asymp");
    double mean = 0.0;
    for (double a : est.per_point) mean += a;
    mean /= static_cast<double>(est.per_point.size());
    double var = 0.0;
    for (double a : est.per_point) var += (a - mean) * (a - mean);
    est.alpha_hat = mean;
    est.dispersion = std::sqrt(var / static_cast<double>(est.per_point.size()));
    return est;
}

Measure project_kappa(const Measure& raw, double clip_tol) {
    Measure k = raw.restricted(0.0, 1.0).clipped_below(-clip_tol);
    k = 0.5 * (k + k.reflected(1.0));
    const double mass = k.mass();
    if (!(mass > 0.0))
        throw numerical_error("project_kappa: estimate has no positive mass on (0,1)");
    k *= 2.0 / mass;
    return k;
}

KappaEstimate kappa_est_short_time(const Measure& mu0_obs, const Measure& mut_obs, double alpha,
                                   double t) {
    if (!(alpha > 0.0) || !(t > 0.0))
        throw std::invalid_argument("kappa_est_short_time: need alpha, t > 0");
    KappaEstimate est;
    est.route = "short-time";
    est.reg_param = t;
    est.raw = (mut_obs - std::exp(-alpha * t) * mu0_obs) * (1.0 / (alpha * t));
    const double tv = tv_norm(est.raw);
    est.negative_mass_fraction = tv > 0.0 ? est.raw.negative_mass() / tv : 0.0;
    est.negative_mass_warning = est.negative_mass_fraction > 0.10;
    est.projected = project_kappa(est.raw);
    return est;
}

namespace {

void require_density(const Measure& m, const char* who) {
    if (m.has_atoms() || !m.has_density())
        throw std::invalid_argument(std::string(who) + ": density-valued measure required");
}

// ∫ x^{s-1} e^{-α t x^γ} dμ(x), per-cell Gauss quadrature
std::complex<double> mellin_weighted_exp(const Measure& mu, std::complex<double> s, double alpha,
                                         double gamma, double t) {
    std::complex<double> acc = 0.0;
    for (const Atom& a : mu.atoms())
        acc += a.w * std::exp((s - 1.0) * std::log(a.x)) *
               std::exp(-alpha * t * std::pow(a.x, gamma));
    const auto& g = mu.grid();
    const auto& d = mu.density();
    const GaussRule& rule = gauss16();
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d[i] == 0.0) continue;
        std::complex<double> cell = 0.0;
        const double mid = 0.5 * (g[i] + g[i + 1]), half = 0.5 * (g[i + 1] - g[i]);
        for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
            const double x = mid + half * rule.nodes[j];
            cell += rule.weights[j] * std::exp((s - 1.0) * std::log(x)) *
                    std::exp(-alpha * t * std::pow(x, gamma));
        }
        acc += d[i] * cell * half;
    }
    return acc;
}

KappaEstimate invert_and_project(MellinLine line, const MellinEstOptions& opts,
                                 const std::string& route, double reg_param) {
    const std::vector<double> out = linear_grid(opts.out_lo, 1.0, opts.out_cells);
    const MellinInvertResult inv = mellin_invert(line, out, opts.invert);
    KappaEstimate est;
    est.route = route;
    est.reg_param = reg_param;
    est.raw = inv.density;
    const double tv = tv_norm(est.raw);
    est.negative_mass_fraction = tv > 0.0 ? est.raw.negative_mass() / tv : 0.0;
    est.negative_mass_warning = est.negative_mass_fraction > 0.10;
    est.projected = project_kappa(est.raw);
    return est;
}

}  // namespace

Measure f_est(const Measure& u0, const Measure& ut, double alpha, double gamma, double t) {
    require_density(u0, "f_est");
    require_density(ut, "f_est");
    if (!(alpha > 0.0) || !(t > 0.0)) throw std::invalid_argument("f_est: need alpha, t > 0");

    // e^{-α t x^γ} u0, cell-mass preserving
    const auto& g0 = u0.grid();
    const auto& v0 = u0.density();
    std::vector<double> vals(v0.size());
    const GaussRule& rule = gauss8();
    for (std::size_t i = 0; i < v0.size(); ++i) {
        const double a = g0[i], b = g0[i + 1];
        vals[i] = v0[i] *
                  rule.integrate(a, b,
                                 [&](double x) { return std::exp(-alpha * t * std::pow(x, gamma)); }) /
                  (b - a);
    }
    return (ut - Measure::from_density(g0, std::move(vals))) * (1.0 / (alpha * t));
}

std::complex<double> mellin_kappa_est_at(const Measure& u0, const Measure& ut, double alpha,
                                         double gamma, double t, std::complex<double> s,
                                         double denom_floor) {
    if (!(alpha > 0.0) || !(t > 0.0))
        throw std::invalid_argument("mellin_kappa_est: need alpha, t > 0");
    const std::complex<double> den = mellin(u0, s + gamma);
    if (std::abs(den) < denom_floor)
        throw numerical_error("mellin_kappa_est: |M[u0](s+gamma)| below the configured floor");
    const std::complex<double> num = mellin(ut, s) - mellin_weighted_exp(u0, s, alpha, gamma, t);
    return num / (alpha * t * den);
}

MellinKappaResult mellin_kappa_est(const Measure& u0, const Measure& ut, double alpha, double gamma,
                                   double t, const MellinEstOptions& opts) {
    require_density(u0, "mellin_kappa_est");
    const double floor_ref = std::abs(mellin(u0, std::complex<double>(opts.sigma + gamma, 0.0)));
    const double floor = opts.denom_floor_rel * floor_ref;

    MellinLine line;
    line.sigma = opts.sigma;
    line.tau = symmetric_tau_grid(opts.tau_max, opts.tau_points);
    line.values.reserve(line.tau.size());
    for (double tau : line.tau)
        line.values.push_back(
            mellin_kappa_est_at(u0, ut, alpha, gamma, t, {opts.sigma, tau}, floor));

    MellinKappaResult res;
    res.estimate = invert_and_project(line, opts, "mellin", t);
    res.line = std::move(line);
    return res;
}

std::complex<double> kappa_from_profile_at(const Measure& g, double alpha, double gamma,
                                           std::complex<double> s, double denom_floor) {
    if (!(alpha > 0.0) || !(gamma > 0.0))
        throw std::invalid_argument("kappa_from_profile: need alpha, gamma > 0");
    const std::complex<double> den = mellin(g, s + gamma);
    if (std::abs(den) < denom_floor)
        throw numerical_error("kappa_from_profile: |M[g](s+gamma)| below the configured floor");
    return 1.0 + (2.0 - s) * mellin(g, s) / (alpha * gamma * den);
}

MellinKappaResult kappa_from_profile(const Measure& g, double alpha, double gamma,
                                     const MellinEstOptions& opts) {
    const double floor_ref = std::abs(mellin(g, std::complex<double>(opts.sigma + gamma, 0.0)));
    const double floor = opts.denom_floor_rel * floor_ref;

    MellinLine line;
    line.sigma = opts.sigma;
    line.tau = symmetric_tau_grid(opts.tau_max, opts.tau_points);
    line.values.reserve(line.tau.size());
    for (double tau : line.tau)
        line.values.push_back(kappa_from_profile_at(g, alpha, gamma, {opts.sigma, tau}, floor));

    MellinKappaResult res;
    res.estimate = invert_and_project(line, opts, "profile", opts.tau_max);
    res.line = std::move(line);
    return res;
}

ValidationReport validate_pipeline(const SampleSet& samples, double alpha_hat, double gamma_hat,
                                   const FragmentationKernel& kappa,
                                   const ValidationOptions& opts) {
    samples.validate();
    if (!(alpha_hat > 0.0) || !(gamma_hat >= 0.0))
        throw std::invalid_argument("validate_pipeline: invalid parameters");

    std::vector<Measure> kde;
    kde.reserve(samples.n_times());
    double xmax = 0.0;
    for (const auto& sz : samples.sizes) {
        kde.push_back(kde_estimate(sz, opts.kde));
        xmax = std::max(xmax, kde.back().support_max());
    }

    // resample the initial KDE onto a log grid that resolves the cascade
    const std::vector<double> grid = log_grid(opts.ode_x_min_factor * xmax, xmax, opts.ode_cells);
    const Measure& f0 = kde.front();
    std::vector<double> u0(grid.size() - 1, 0.0);
    for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
        // exact mass of the piecewise-constant KDE in this cell
        double mass = 0.0;
        const auto& kg = f0.grid();
        const auto& kv = f0.density();
        for (std::size_t i = 0; i < kv.size(); ++i) {
            const double a = std::max(kg[i], grid[j]), b = std::min(kg[i + 1], grid[j + 1]);
            if (b > a) mass += kv[i] * (b - a);
        }
        u0[j] = mass / (grid[j + 1] - grid[j]);
    }

    const double t1 = samples.times.front();
    GridOdeOptions ode_opts;
    for (double t : samples.times) ode_opts.store_times.push_back(t - t1);
    const double T = samples.times.back() - t1;
    FragmentationParams params{alpha_hat, gamma_hat};

    ValidationReport report;
    if (T > 0.0) {
        const GridOdeResult sol =
            solve_grid_ode(grid, u0, params, kappa, T, ode_opts);
        for (std::size_t i = 0; i < samples.n_times(); ++i) {
            // locate the stored state for this sample time
            const double want = samples.times[i] - t1;
            std::size_t jstate = 0;
            for (std::size_t j = 0; j < sol.times.size(); ++j)
                if (std::abs(sol.times[j] - want) < 1e-12 * std::max(1.0, T)) jstate = j;
            Measure sim = sol.measure_at(jstate);
            const double number = sim.mass();
            if (!(number > 0.0)) throw numerical_error("validate_pipeline: simulation lost all mass");
            sim *= 1.0 / number;
            const Measure diff = sim - kde[i];
            report.rows.push_back({samples.times[i], bl_norm(diff), tv_norm(diff)});
        }
    } else {
        const Measure sim = Measure::from_density(grid, u0);
        const Measure diff = sim - kde.front();
        report.rows.push_back({t1, bl_norm(diff), tv_norm(diff)});
    }
    for (const auto& row : report.rows) {
        report.mean_bl += row.bl;
        report.mean_tv += row.tv;
    }
    report.mean_bl /= static_cast<double>(report.rows.size());
    report.mean_tv /= static_cast<double>(report.rows.size());
    return report;
}

}  // namespace depofrag
