#include "depofrag/errors.hpp"
#include "depofrag/frag_inverse.hpp"
#include "depofrag/quadrature.hpp"

#include <doctest.h>

#include <cmath>

using namespace depofrag;

namespace {

SampleSet one_sample_per_time(const std::vector<double>& times, const std::vector<double>& xs) {
    SampleSet s;
    s.times = times;
    for (double x : xs) s.sizes.push_back({x});
    return s;
}

double slope_log2(const std::vector<double>& ts, const std::vector<double>& es) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double x = std::log2(ts[i]), y = std::log2(es[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("fit_gamma: exact generative model with a breakpoint") {
    // M1_hat(t) = 5 for t < 1, 5 t^{-1/2} after: gamma = 2, t_asymp = 1
    std::vector<double> times, m1;
    for (double t : {0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 12.0, 30.0, 80.0, 200.0}) {
        times.push_back(t);
        m1.push_back(t < 1.0 ? 5.0 : 5.0 * std::pow(t, -0.5));
    }
    const GammaFit fit = fit_gamma(one_sample_per_time(times, m1));
    CHECK(fit.gamma_hat == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(fit.t_asymp == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(fit.sse <= 1e-12);
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("fit_gamma: pure power law puts the breakpoint at the first time") {
    std::vector<double> times{0.5, 1.0, 2.0, 4.0, 8.0}, m1;
    for (double t : times) m1.push_back(3.0 * std::pow(t, -1.0 / 1.4));
    const GammaFit fit = fit_gamma(one_sample_per_time(times, m1));
    CHECK(fit.gamma_hat == doctest::Approx(1.4).epsilon(1e-9));
    CHECK(fit.t_asymp == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(fit.breakpoint_at_boundary);
}

TEST_CASE("fit_gamma: scale equivariance and input guards") {
    std::vector<double> times{0.5, 1.0, 2.0, 4.0, 8.0, 16.0}, m1;
    for (double t : times) m1.push_back(2.0 * std::pow(t, -0.5) * (1.0 + 0.02 * std::sin(t)));
    const GammaFit base = fit_gamma(one_sample_per_time(times, m1));
    std::vector<double> scaled = m1;
    for (double& v : scaled) v *= 7.3;
    const GammaFit shifted = fit_gamma(one_sample_per_time(times, scaled));
    CHECK(shifted.gamma_hat == doctest::Approx(base.gamma_hat).epsilon(1e-12));
    CHECK(shifted.t_asymp == doctest::Approx(base.t_asymp).epsilon(1e-12));

    CHECK_THROWS_AS(fit_gamma(one_sample_per_time({1.0, 2.0, 4.0}, {1.0, 0.5, 0.25})),
                    std::invalid_argument);
}

TEST_CASE("estimate_alpha: exact scaling structure") {
    const double gamma = 2.0, alpha = 0.8;
    std::vector<double> times{1.0, 2.0, 4.0, 8.0, 16.0}, xs;
    for (double t : times) xs.push_back(std::pow(1.0 / (gamma * alpha * t), 1.0 / gamma));
    const SampleSet set = one_sample_per_time(times, xs);
    GammaFit fit;
    fit.gamma_hat = gamma;
    fit.t_asymp = 1.0;
    const AlphaEstimate est = estimate_alpha(set, fit);
    CHECK(est.alpha_hat == doctest::Approx(alpha).epsilon(1e-12));
    CHECK(est.dispersion <= 1e-12);

    // doubling all t with M_gamma halved leaves alpha unchanged
    std::vector<double> t2 = times, x2 = xs;
    for (double& t : t2) t *= 2.0;
    for (double& x : x2) x /= std::pow(2.0, 1.0 / gamma);
    GammaFit fit2 = fit;
    fit2.t_asymp = 2.0;
    const AlphaEstimate est2 = estimate_alpha(one_sample_per_time(t2, x2), fit2);
    CHECK(est2.alpha_hat == doctest::Approx(est.alpha_hat).epsilon(1e-12));

    // single qualifying point: that point's estimate, dispersion 0
    GammaFit late = fit;
    late.t_asymp = 16.0;
    const AlphaEstimate single = estimate_alpha(set, late);
    CHECK(single.per_point.size() == 1);
    CHECK(single.dispersion == 0.0);

    GammaFit never = fit;
    never.t_asymp = 100.0;
    CHECK_THROWS_AS(estimate_alpha(set, never), std::invalid_argument);
}

TEST_CASE("project_kappa enforces the constraint set") {
    // a rough signed estimate on (0, 1.4)
    const Measure raw = Measure({{0.97, 0.4}, {1.2, 0.3}},
                                linear_grid(0.05, 1.4, 27),
                                [] {
                                    std::vector<double> v(27);
                                    for (int i = 0; i < 27; ++i)
                                        v[i] = 1.5 + std::sin(2.1 * i) - 0.04 * i;
                                    return v;
                                }());
    const Measure proj = project_kappa(raw);
    CHECK(proj.mass() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(proj.moment(1.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(proj.is_nonnegative());
    CHECK(proj.support_min() >= 0.0);
    CHECK(proj.support_max() <= 1.0);
    CHECK(tv_norm(proj - proj.reflected(1.0)) <= 1e-9);
}

TEST_CASE("short-time estimator: exact inputs converge linearly in t") {
    const FragmentationParams params{1.0, 1.0};
    for (const char* name : {"uniform", "center-weighted"}) {
        const FragmentationKernel kernel = FragmentationKernel::preset(name, 64);
        const SeriesSolver solver(kernel, params);
        std::vector<double> ts{0.02, 0.04, 0.08}, errs;
        for (double t : ts) {
            const SeriesResult mu_t = solver.fundamental(t);
            const KappaEstimate est =
                kappa_est_short_time(Measure::dirac(1.0), mu_t.mu, params.alpha, t);
            errs.push_back(tv_norm(est.raw - kernel.measure()));
        }
        const double slope = slope_log2(ts, errs);
        CHECK(slope > 0.8);
        CHECK(slope < 1.2);
    }

    // very small t: near-exact recovery for the uniform kernel
    const FragmentationKernel uni = FragmentationKernel::uniform();
    const SeriesSolver solver(uni, params);
    const double t = 1e-3;
    const SeriesResult mu_t = solver.fundamental(t);
    const KappaEstimate est = kappa_est_short_time(Measure::dirac(1.0), mu_t.mu, 1.0, t);
    CHECK(tv_norm(est.raw - uni.measure()) <= 1e-2);
    CHECK_FALSE(est.negative_mass_warning);
}

TEST_CASE("short-time estimator: bias-variance shape under BL noise") {
    // deterministic perturbations with known BL size play the noise role
    const FragmentationParams params{1.0, 1.0};
    const FragmentationKernel uni = FragmentationKernel::uniform();
    const SeriesSolver solver(uni, params);
    const double noise = 1e-2;

    auto error_at = [&](double t) {
        const Measure mu0 = Measure::dirac(1.0 - noise);  // BL distance = noise
        Measure mut = solver.fundamental(t).mu;
        mut = mut + (Measure::dirac(0.5 + noise, 1.0) - Measure::dirac(0.5, 1.0));
        const KappaEstimate est = kappa_est_short_time(mu0, mut, params.alpha, t);
        return bl_norm(est.raw - uni.measure());
    };
    const double mid = 0.1;  // near sqrt(noise)
    CHECK(error_at(mid) < error_at(mid / 4.0));
    CHECK(error_at(mid) < error_at(mid * 4.0));
}

TEST_CASE("f_est: algebraic limit and linearity") {
    const std::vector<double> grid = linear_grid(0.5, 1.5, 50);
    std::vector<double> vals(grid.size() - 1);
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double x = 0.5 * (grid[i] + grid[i + 1]);
        vals[i] = std::exp(-8.0 * (x - 1.0) * (x - 1.0));
    }
    const Measure u0 = Measure::from_density(grid, vals);
    const double alpha = 1.0, gamma = 1.3, t = 0.05;

    // u_t = u0: F = u0 (1 - e^{-alpha t x^gamma})/(alpha t)
    const Measure f = f_est(u0, u0, alpha, gamma, t);
    for (double x : {0.7, 1.0, 1.3}) {
        const double expect =
            u0.density_at(x) * (1.0 - std::exp(-alpha * t * std::pow(x, gamma))) / (alpha * t);
        CHECK(f.density_at(x) == doctest::Approx(expect).epsilon(1e-3));
    }

    // linearity in u_t
    const Measure ut = 2.0 * u0;
    const Measure f2 = f_est(u0, ut, alpha, gamma, t);
    const Measure lin = f_est(u0, u0, alpha, gamma, t);
    for (double x : {0.8, 1.2}) {
        const double direct = f2.density_at(x);
        const double by_parts = lin.density_at(x) + u0.density_at(x) / (alpha * t);
        CHECK(direct == doctest::Approx(by_parts).epsilon(1e-9));
    }
}

TEST_CASE("f_est approaches the multiplicative convolution w0 * kappa") {
    const FragmentationParams params{1.0, 1.0};
    const FragmentationKernel uni = FragmentationKernel::uniform();
    const std::vector<double> grid = log_grid(1e-3, 1.3, 400);
    std::vector<double> u0(grid.size() - 1, 0.0);
    for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
        const double x = 0.5 * (grid[j] + grid[j + 1]);
        u0[j] = std::exp(-0.5 * (x - 1.0) * (x - 1.0) / (0.05 * 0.05));
    }
    const Measure mu0 = Measure::from_density(grid, u0);
    Measure w0 = [&] {
        std::vector<double> v = u0;
        for (std::size_t j = 0; j + 1 < grid.size(); ++j)
            v[j] *= 0.5 * (grid[j] + grid[j + 1]);
        return Measure::from_density(grid, v);
    }();
    const Measure target = mult_convolve(w0, uni.measure(), grid);

    GridOdeOptions opts;
    std::vector<double> ts{0.02, 0.04, 0.08}, errs;
    opts.store_times = ts;
    const GridOdeResult sol = solve_grid_ode(grid, u0, params, uni, ts.back(), opts);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        std::size_t idx = 0;
        for (std::size_t q = 0; q < sol.times.size(); ++q)
            if (std::abs(sol.times[q] - ts[i]) < 1e-12) idx = q;
        const Measure f = f_est(mu0, sol.measure_at(idx), params.alpha, params.gamma, ts[i]);
        errs.push_back(tv_norm(f - target));
    }
    const double slope = slope_log2(ts, errs);
    CHECK(slope > 0.8);
    CHECK(slope < 1.2);
}

TEST_CASE("mellin kappa estimator: values, slope, floor") {
    const FragmentationParams params{1.0, 1.0};
    const FragmentationKernel uni = FragmentationKernel::uniform();
    const SeriesSolver solver(uni, params);

    // smooth near-monodisperse density u0
    const std::vector<double> grid = linear_grid(0.7, 1.3, 120);
    std::vector<double> vals(grid.size() - 1);
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double x = 0.5 * (grid[i] + grid[i + 1]);
        vals[i] = std::exp(-0.5 * (x - 1.0) * (x - 1.0) / (0.06 * 0.06));
    }
    Measure u0 = Measure::from_density(grid, vals);
    u0 *= 1.0 / u0.mass();

    std::vector<double> ts{0.02, 0.04, 0.08};
    for (double s : {2.0, 3.0, 4.0}) {
        std::vector<double> errs;
        for (double t : ts) {
            const Measure ut = solver.solve(u0, t).mu;
            const double est =
                mellin_kappa_est_at(u0, ut, params.alpha, params.gamma, t, s).real();
            errs.push_back(std::abs(est - 2.0 / s));
        }
        const double slope = slope_log2(ts, errs);
        CHECK(slope > 0.8);
        CHECK(slope < 1.2);
    }

    // full line: the projected estimate carries the exact normalization
    const double t = 0.04;
    const Measure ut = solver.solve(u0, t).mu;
    MellinEstOptions mopts;
    mopts.tau_max = 60.0;
    mopts.tau_points = 1025;
    const MellinKappaResult res = mellin_kappa_est(u0, ut, params.alpha, params.gamma, t, mopts);
    CHECK(mellin(res.estimate.projected, 2.0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(res.estimate.projected.mass() == doctest::Approx(2.0).epsilon(1e-9));
    // the inverted estimate resembles the flat kernel
    CHECK(tv_norm(res.estimate.projected - uni.measure()) <= 0.5);

    // a narrow u0 with a large gamma starves the denominator
    CHECK_THROWS_AS(mellin_kappa_est_at(u0, ut, params.alpha, 10.0, t, {2.0, 0.0}, 1e3),
                    numerical_error);
}

TEST_CASE("kappa_from_profile: algebraic identity at s=2 and uniform-kernel values") {
    // g = e^{-z} is the exact profile for the uniform kernel at alpha=gamma=1
    const std::vector<double> zg = log_grid(1e-4, 40.0, 1200);
    std::vector<double> gv(zg.size() - 1);
    for (std::size_t i = 0; i + 1 < zg.size(); ++i)
        gv[i] = std::exp(-0.5 * (zg[i] + zg[i + 1]));
    Measure g = Measure::from_density(zg, gv);
    g *= 1.0 / g.mass();

    CHECK(kappa_from_profile_at(g, 1.0, 1.0, {2.0, 0.0}).real() == doctest::Approx(1.0));
    CHECK(kappa_from_profile_at(g, 1.0, 1.0, {3.0, 0.0}).real() ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-3));

    // normalization invariance: the formula uses ratios of M[g]
    Measure g2 = 3.7 * g;
    const auto a = kappa_from_profile_at(g, 1.0, 1.0, {3.5, 0.0});
    const auto b = kappa_from_profile_at(g2, 1.0, 1.0, {3.5, 0.0});
    CHECK(a.real() == doctest::Approx(b.real()).epsilon(1e-12));
}

TEST_CASE("validate_pipeline: self-consistency, mismatch ordering, single time") {
    const FragmentationParams params{1.0, 2.0};
    const FragmentationKernel uni = FragmentationKernel::uniform();

    // synthetic samples from the forward model
    const std::vector<double> grid = log_grid(1e-3, 1.4, 256);
    std::vector<double> u0(grid.size() - 1, 0.0);
    for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
        const double x = 0.5 * (grid[j] + grid[j + 1]);
        u0[j] = std::exp(-0.5 * (x - 1.0) * (x - 1.0) / (0.06 * 0.06));
    }
    GridOdeOptions opts;
    std::vector<double> times{0.5, 1.5, 3.0};
    opts.store_times = times;
    const GridOdeResult sol = solve_grid_ode(grid, u0, params, uni, times.back(), opts);

    SampleSet set;
    set.times.push_back(0.25);
    {
        Measure init = Measure::from_density(grid, u0);
        init *= 1.0 / init.mass();
        set.sizes.push_back(sample(init, 4000, 1));
    }
    for (std::size_t i = 0; i < times.size(); ++i) {
        std::size_t idx = 0;
        for (std::size_t q = 0; q < sol.times.size(); ++q)
            if (std::abs(sol.times[q] - times[i]) < 1e-12) idx = q;
        Measure mu = sol.measure_at(idx);
        mu *= 1.0 / mu.mass();
        set.times.push_back(0.25 + times[i]);
        set.sizes.push_back(sample(mu, 4000, 2 + i));
    }

    const ValidationReport good = validate_pipeline(set, params.alpha, params.gamma, uni);
    CHECK(good.rows.size() == set.n_times());
    CHECK(good.mean_bl <= 0.1);
    CHECK(good.rows.front().bl <= 0.02);  // the t1 row is a near self-distance

    // badly mismatched gamma scores strictly worse
    const ValidationReport bad = validate_pipeline(set, params.alpha, 0.5, uni);
    CHECK(bad.mean_bl > good.mean_bl);

    // single-time dataset: only the trivial row
    SampleSet single;
    single.times = {0.25};
    single.sizes = {set.sizes.front()};
    const ValidationReport triv = validate_pipeline(single, params.alpha, params.gamma, uni);
    CHECK(triv.rows.size() == 1);
    CHECK(triv.rows.front().bl <= 0.02);
}

TEST_CASE("gamma/alpha protocol on sampled forward data") {
    // scaled-down closed loop; the acceptance suite runs the full-size one
    const FragmentationParams params{1.0, 2.0};
    const FragmentationKernel uni = FragmentationKernel::uniform();
    const std::vector<double> grid = log_grid(2e-4, 1.4, 400);
    std::vector<double> u0(grid.size() - 1, 0.0);
    for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
        const double x = 0.5 * (grid[j] + grid[j + 1]);
        u0[j] = std::exp(-0.5 * (x - 1.0) * (x - 1.0) / (0.05 * 0.05));
    }
    std::vector<double> times;
    for (int i = 0; i < 10; ++i) times.push_back(0.2 * std::pow(1000.0, i / 9.0));
    GridOdeOptions opts;
    opts.store_times = times;
    const GridOdeResult sol = solve_grid_ode(grid, u0, params, uni, times.back(), opts);

    SampleSet set;
    for (std::size_t i = 0; i < times.size(); ++i) {
        std::size_t idx = 0;
        for (std::size_t q = 0; q < sol.times.size(); ++q)
            if (std::abs(sol.times[q] - times[i]) < 1e-9 * times.back()) idx = q;
        Measure mu = sol.measure_at(idx);
        mu *= 1.0 / mu.mass();
        set.times.push_back(times[i]);
        set.sizes.push_back(sample(mu, 3000, 10 + i));
    }

    const GammaFit fit = fit_gamma(set);
    CHECK(fit.gamma_hat > 1.5);
    CHECK(fit.gamma_hat < 2.5);
    const AlphaEstimate alpha = estimate_alpha(set, fit);
    CHECK(alpha.alpha_hat > 0.6);
    CHECK(alpha.alpha_hat < 1.4);
}
