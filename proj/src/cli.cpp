#include "depofrag/cli.hpp"

#include "depofrag/csv.hpp"
#include "depofrag/depoly.hpp"
#include "depofrag/depoly_inverse.hpp"
#include "depofrag/errors.hpp"
#include "depofrag/frag_forward.hpp"
#include "depofrag/frag_inverse.hpp"
#include "depofrag/manifest.hpp"
#include "depofrag/quadrature.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>

namespace depofrag::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// deterministic standard normal, independent of libstdc++'s distributions
double draw_normal(std::mt19937_64& rng) {
    const double u1 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

int run_guarded(const char* what, const std::function<int()>& body) {
    try {
        return body();
    } catch (const io_error& e) {
        std::cerr << what << ": " << e.what() << '\n';
        return exit_io;
    } catch (const std::invalid_argument& e) {
        std::cerr << what << ": " << e.what() << '\n';
        return exit_validation;
    } catch (const numerical_error& e) {
        std::cerr << what << ": " << e.what() << '\n';
        return exit_numerical;
    }
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

GridFunction depoly_u0(const ExperimentConfig& cfg) {
    const std::string kind = cfg.get_string("depoly.u0.kind");
    const double L = cfg.get_double("depoly.L");
    const double eps = cfg.get_double("depoly.eps");
    const int cells = static_cast<int>(std::llround(L / eps));
    if (std::abs(cells * eps - L) > 1e-9 * L)
        throw std::invalid_argument("depoly.L must be a multiple of depoly.eps");
    if (kind == "truncated-gaussian")
        return truncated_gaussian(L, cells, cfg.get_double("depoly.u0.center"),
                                  cfg.get_double("depoly.u0.sigma"),
                                  cfg.get_double("depoly.u0.amplitude"));
    throw std::invalid_argument("unknown depoly.u0.kind: " + kind);
}

DiscreteState depoly_state0(const ExperimentConfig& cfg) {
    const GridFunction u0 = depoly_u0(cfg);
    DiscreteState s;
    s.eps = cfg.get_double("depoly.eps");
    s.i0 = cfg.get_int("depoly.i0");
    s.b = cfg.get_double("depoly.b");
    s.c = u0.values;
    s.validate();
    return s;
}

double depoly_dt(const ExperimentConfig& cfg) {
    const double dt = cfg.get_double("depoly.dt");
    if (dt > 0.0) return dt;
    return cfg.get_double("depoly.eps") / (4.0 * cfg.get_double("depoly.b"));
}

Measure frag_u0(const ExperimentConfig& cfg) {
    const std::string kind = cfg.get_string("frag.u0.kind");
    if (kind == "dirac") return Measure::dirac(cfg.get_double("frag.u0.center"));
    if (kind == "gaussian") {
        const double c = cfg.get_double("frag.u0.center");
        const double sg = cfg.get_double("frag.u0.sigma");
        const double lo = std::max(1e-3 * c, c - 5.0 * sg);
        const std::vector<double> grid = linear_grid(lo, c + 5.0 * sg, 200);
        std::vector<double> vals(grid.size() - 1);
        for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
            const double x = 0.5 * (grid[i] + grid[i + 1]);
            vals[i] = std::exp(-0.5 * (x - c) * (x - c) / (sg * sg));
        }
        Measure m = Measure::from_density(grid, std::move(vals));
        m *= 1.0 / m.mass();
        return m;
    }
    throw std::invalid_argument("unknown frag.u0.kind: " + kind);
}

std::vector<double> frag_times(const ExperimentConfig& cfg) {
    const std::string override_list = cfg.get_string("frag.times");
    std::vector<double> ts;
    if (!override_list.empty()) {
        std::size_t pos = 0;
        while (pos < override_list.size()) {
            auto comma = override_list.find(',', pos);
            if (comma == std::string::npos) comma = override_list.size();
            ts.push_back(std::stod(override_list.substr(pos, comma - pos)));
            pos = comma + 1;
        }
    } else {
        const int n = cfg.get_int("frag.samples.points");
        const double lo = cfg.get_double("frag.samples.t_min");
        const double hi = cfg.get_double("frag.samples.t_max");
        if (n < 1 || !(lo > 0.0) || !(hi > lo))
            throw std::invalid_argument("invalid frag.samples time grid");
        for (int i = 0; i < n; ++i)
            ts.push_back(n == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
    }
    return ts;
}

FragmentationKernel frag_kernel(const ExperimentConfig& cfg) {
    return FragmentationKernel::preset(cfg.get_string("frag.kernel"),
                                       cfg.get_int("frag.kernel.cells"));
}

json measure_json(const Measure& m) { return m.to_json(); }

void write_manifest(const char* command, const ExperimentConfig& cfg, const Timer& timer,
                    const std::vector<fs::path>& outputs) {
    RunManifest man;
    man.command = command;
    man.config = cfg;
    man.seed = cfg.get_uint64("seed");
    man.wall_time_s = timer.seconds();
    man.outputs = outputs;
    man.write(fs::path(cfg.get_string("out_dir")) / (std::string(command) + ".manifest.json"));
}

}  // namespace

ExperimentConfig effective_config(const GlobalArgs& args) {
    ExperimentConfig cfg;
    if (args.config_path) {
        if (!fs::exists(*args.config_path))
            throw io_error("config file not found: " + args.config_path->string());
        cfg = ExperimentConfig::load(*args.config_path);
    }
    if (args.seed) cfg.set("seed", std::to_string(*args.seed));
    if (args.out_dir) cfg.set("out_dir", *args.out_dir);
    if (args.threads) cfg.set("threads", std::to_string(*args.threads));
    return cfg;
}

int cmd_gen_synthetic(const GlobalArgs& args) {
    return run_guarded("gen-synthetic", [&] {
        Timer timer;
        const ExperimentConfig cfg = effective_config(args);
        const fs::path out_dir = cfg.get_string("out_dir");
        std::vector<fs::path> outputs;
        const std::uint64_t seed = cfg.get_uint64("seed");

        if (cfg.get_string("family") == "depoly") {
            const DiscreteState s0 = depoly_state0(cfg);
            const DiscreteTrajectory traj =
                simulate_discrete(s0, cfg.get_double("depoly.T"), depoly_dt(cfg));
            MomentSeries ms = moment_series(traj, cfg.get_int("depoly.k"));
            const int points = cfg.get_int("gen.moment.points");
            if (points > 1 && static_cast<std::size_t>(points) < ms.times.size()) {
                MomentSeries sub;
                sub.k = ms.k;
                const std::size_t n = ms.times.size();
                for (int i = 0; i < points; ++i) {
                    const std::size_t j = (n - 1) * static_cast<std::size_t>(i) / (points - 1);
                    sub.times.push_back(ms.times[j]);
                    sub.values.push_back(ms.values[j]);
                }
                ms = std::move(sub);
            }
            const double delta = cfg.get_double("gen.noise.delta");
            ms.delta = delta;
            if (delta > 0.0) {
                std::mt19937_64 rng(seed);
                for (double& v : ms.values) v += delta * draw_normal(rng);
            }
            const fs::path file = out_dir / "moments.csv";
            write_moments_csv(file, ms);
            outputs.push_back(file);
        } else if (cfg.get_string("family") == "frag") {
            const FragmentationParams params{cfg.get_double("frag.alpha"),
                                             cfg.get_double("frag.gamma")};
            const FragmentationKernel kernel = frag_kernel(cfg);
            const Measure u0 = frag_u0(cfg);
            const std::vector<double> times = frag_times(cfg);
            const auto n = static_cast<std::size_t>(cfg.get_int("frag.samples.n"));

            SampleSet set;
            if (cfg.get_string("frag.u0.kind") == "dirac") {
                SeriesOptions sopts;
                sopts.budget = cfg.get_double("frag.series.budget");
                sopts.grid.x_min = cfg.get_double("frag.series.x_min");
                const SeriesSolver solver(kernel, params, sopts);
                for (std::size_t i = 0; i < times.size(); ++i) {
                    Measure mu = solver.solve(u0, times[i]).mu;
                    mu *= 1.0 / mu.mass();
                    set.times.push_back(times[i]);
                    set.sizes.push_back(sample(mu, n, seed + i + 1));
                }
            } else {
                const double xmax = u0.support_max();
                const std::vector<double> grid =
                    log_grid(cfg.get_double("frag.grid.x_min_factor") * xmax, xmax,
                             cfg.get_int("frag.grid.cells"));
                std::vector<double> vals(grid.size() - 1);
                for (std::size_t j = 0; j + 1 < grid.size(); ++j)
                    vals[j] = u0.density_at(0.5 * (grid[j] + grid[j + 1]));
                GridOdeOptions oopts;
                oopts.store_times.assign(times.begin(), times.end());
                const GridOdeResult sol =
                    solve_grid_ode(grid, vals, params, kernel, times.back(), oopts);
                for (std::size_t i = 0; i < times.size(); ++i) {
                    std::size_t j = 0;
                    for (std::size_t q = 0; q < sol.times.size(); ++q)
                        if (std::abs(sol.times[q] - times[i]) <
                            1e-12 * std::max(1.0, times.back()))
                            j = q;
                    Measure mu = sol.measure_at(j);
                    mu *= 1.0 / mu.mass();
                    set.times.push_back(times[i]);
                    set.sizes.push_back(sample(mu, n, seed + i + 1));
                }
            }
            const fs::path file = out_dir / "samples.csv";
            write_samples_csv(file, set);
            outputs.push_back(file);
        } else {
            throw std::invalid_argument("family must be 'depoly' or 'frag'");
        }
        write_manifest("gen-synthetic", cfg, timer, outputs);
        return exit_ok;
    });
}

int cmd_simulate_depoly(const GlobalArgs& args) {
    return run_guarded("simulate-depoly", [&] {
        Timer timer;
        const ExperimentConfig cfg = effective_config(args);
        const fs::path out_dir = cfg.get_string("out_dir");
        const DiscreteState s0 = depoly_state0(cfg);
        const DiscreteTrajectory traj =
            simulate_discrete(s0, cfg.get_double("depoly.T"), depoly_dt(cfg));

        std::vector<fs::path> outputs;
        for (int k = 0; k <= 2; ++k) {
            const fs::path file = out_dir / ("moments_k" + std::to_string(k) + ".csv");
            write_moments_csv(file, moment_series(traj, k));
            outputs.push_back(file);
        }
        std::vector<std::vector<double>> rows;
        const auto& final = traj.states.back();
        for (std::size_t j = 0; j < final.size(); ++j)
            rows.push_back({traj.eps * static_cast<double>(j), final[j]});
        const fs::path state_file = out_dir / "state_final.csv";
        write_csv(state_file, "x,c", rows);
        outputs.push_back(state_file);
        write_manifest("simulate-depoly", cfg, timer, outputs);
        return exit_ok;
    });
}

int cmd_invert_depoly(const GlobalArgs& args, const std::filesystem::path& moments_file) {
    return run_guarded("invert-depoly", [&] {
        Timer timer;
        const ExperimentConfig cfg = effective_config(args);
        const fs::path out_dir = cfg.get_string("out_dir");
        if (!fs::exists(moments_file))
            throw io_error("moments file not found: " + moments_file.string());
        const MomentSeries ms = read_moments_csv(moments_file, cfg.get_double("depoly.delta"));

        const double b = cfg.get_double("depoly.b");
        const double eps = cfg.get_double("depoly.eps");
        const double L = cfg.get_double("depoly.L");
        const int i0 = cfg.get_int("depoly.i0");
        const std::string route = cfg.get_string("depoly.route");

        if (route == "first-order" && ms.k == 2)
            std::cerr << "invert-depoly: warning: k=2 with the first-order route applies "
                         "degree-3 numerical differentiation\n";

        const MomentsToTraceResult trace = moments_to_trace(ms, std::nullopt, b, eps, i0);
        if (trace.boundary_warning)
            std::cerr << "invert-depoly: warning: discrepancy search hit the penalty bracket\n";

        json diag;
        diag["route"] = route;
        diag["k"] = ms.k;
        diag["smoothing_lambda"] = trace.lambda;
        diag["differentiation_degree"] = trace.differentiation_degree;
        diag["boundary_warning"] = trace.boundary_warning;

        GridFunction u0;
        if (route == "first-order") {
            u0 = trace_to_initial_first_order(trace.trace, b, L, eps);
        } else if (route == "tikhonov" || route == "kalman") {
            const double T = trace.trace.times.back();
            const ObservationOperator op = assemble_observation_operator(
                b, eps, L, T, cfg.get_int("depoly.nx"), cfg.get_int("depoly.nt"));
            std::vector<double> y(op.obs_times.size());
            for (std::size_t j = 0; j < y.size(); ++j) {
                const double t = op.obs_times[j];
                const auto it =
                    std::upper_bound(trace.trace.times.begin(), trace.trace.times.end(), t);
                if (it == trace.trace.times.begin())
                    y[j] = trace.trace.values.front();
                else if (it == trace.trace.times.end())
                    y[j] = trace.trace.values.back();
                else {
                    const std::size_t i =
                        static_cast<std::size_t>(it - trace.trace.times.begin());
                    const double w = (t - trace.trace.times[i - 1]) /
                                     (trace.trace.times[i] - trace.trace.times[i - 1]);
                    y[j] = trace.trace.values[i - 1] +
                           w * (trace.trace.values[i] - trace.trace.values[i - 1]);
                }
            }
            TikhonovConfig tcfg;
            tcfg.M = cfg.get_double("depoly.M");
            tcfg.delta = std::max(cfg.get_double("depoly.delta"), 1e-12) * std::sqrt(T);
            const ReconstructionResult rec = route == "tikhonov"
                                                 ? tikhonov_reconstruct(y, op, tcfg)
                                                 : kalman_reconstruct(y, op, tcfg);
            u0 = rec.u0;
            diag["objective"] = rec.objective;
            diag["residual_norm"] = rec.residual_norm;
            diag["conditioning_warning"] = rec.conditioning_warning;
        } else {
            throw std::invalid_argument("unknown depoly.route: " + route);
        }

        std::vector<std::vector<double>> rows;
        for (std::size_t j = 0; j < u0.values.size(); ++j)
            rows.push_back({u0.dx * static_cast<double>(j), u0.values[j]});
        const fs::path est_file = out_dir / "u0_estimate.csv";
        write_csv(est_file, "x,u0", rows);
        const fs::path diag_file = out_dir / "invert_diagnostics.json";
        write_text_atomic(diag_file, diag.dump(2) + "\n");
        write_manifest("invert-depoly", cfg, timer, {est_file, diag_file});
        return exit_ok;
    });
}

int cmd_simulate_frag(const GlobalArgs& args) {
    return run_guarded("simulate-frag", [&] {
        Timer timer;
        const ExperimentConfig cfg = effective_config(args);
        const fs::path out_dir = cfg.get_string("out_dir");
        const FragmentationParams params{cfg.get_double("frag.alpha"),
                                         cfg.get_double("frag.gamma")};
        const FragmentationKernel kernel = frag_kernel(cfg);
        const Measure u0 = frag_u0(cfg);
        const std::vector<double> times = frag_times(cfg);
        std::vector<fs::path> outputs;

        if (cfg.get_string("frag.forward_route") == "series") {
            SeriesOptions sopts;
            sopts.budget = cfg.get_double("frag.series.budget");
            sopts.grid.x_min = cfg.get_double("frag.series.x_min");
            const SeriesSolver solver(kernel, params, sopts);
            json out = json::array();
            for (double t : times) {
                const SeriesResult r = solver.solve(u0, t);
                out.push_back({{"t", t},
                               {"remainder_tv", r.remainder_tv},
                               {"n_used", r.n_used},
                               {"measure", measure_json(r.mu)}});
            }
            const fs::path file = out_dir / "series_solution.json";
            write_text_atomic(file, out.dump(2) + "\n");
            outputs.push_back(file);
        } else if (cfg.get_string("frag.forward_route") == "grid-ode") {
            const double xmax = u0.support_max();
            const std::vector<double> grid =
                log_grid(cfg.get_double("frag.grid.x_min_factor") * xmax, xmax,
                         cfg.get_int("frag.grid.cells"));
            std::vector<double> vals(grid.size() - 1);
            for (std::size_t j = 0; j + 1 < grid.size(); ++j)
                vals[j] = u0.density_at(0.5 * (grid[j] + grid[j + 1]));
            GridOdeOptions oopts;
            oopts.store_times.assign(times.begin(), times.end());
            const GridOdeResult sol =
                solve_grid_ode(grid, vals, params, kernel, times.back(), oopts);
            std::vector<std::vector<double>> rows;
            for (std::size_t j = 0; j < sol.times.size(); ++j)
                for (std::size_t i = 0; i + 1 < grid.size(); ++i)
                    rows.push_back(
                        {sol.times[j], 0.5 * (grid[i] + grid[i + 1]), sol.values[j][i]});
            const fs::path file = out_dir / "density.csv";
            write_csv(file, "t,x,u", rows);
            outputs.push_back(file);
        } else {
            throw std::invalid_argument("unknown frag.forward_route");
        }
        write_manifest("simulate-frag", cfg, timer, outputs);
        return exit_ok;
    });
}

namespace {

json validation_json(const ValidationReport& rep) {
    json rows = json::array();
    for (const auto& r : rep.rows) rows.push_back({{"t", r.t}, {"bl", r.bl}, {"tv", r.tv}});
    return {{"rows", rows}, {"mean_bl", rep.mean_bl}, {"mean_tv", rep.mean_tv}};
}

void write_validation_csv(const fs::path& file, const ValidationReport& rep) {
    std::vector<std::vector<double>> rows;
    for (const auto& r : rep.rows) rows.push_back({r.t, r.bl, r.tv});
    write_csv(file, "t,bl,tv", rows);
}

}  // namespace

int cmd_estimate_frag(const GlobalArgs& args, const std::filesystem::path& samples_file) {
    return run_guarded("estimate-frag", [&] {
        Timer timer;
        const ExperimentConfig cfg = effective_config(args);
        const fs::path out_dir = cfg.get_string("out_dir");
        if (!fs::exists(samples_file))
            throw io_error("samples file not found: " + samples_file.string());
        const SampleSet samples = read_samples_csv(samples_file);

        GammaFitOptions gopts;
        gopts.convention = cfg.get_string("frag.moment_convention") == "ratio"
                               ? MomentConvention::Ratio
                               : MomentConvention::RawSum;
        const GammaFit fit = fit_gamma(samples, gopts);
        const AlphaEstimate alpha = estimate_alpha(samples, fit);

        const std::string route = cfg.get_string("frag.kappa_route");
        KappaEstimate kappa;
        if (route == "short-time" || route == "mellin") {
            if (samples.n_times() < 2)
                throw std::invalid_argument("kappa estimation needs two observed time points");
            const Measure m0 = kde_estimate(samples.sizes[0]);
            const Measure mt = kde_estimate(samples.sizes[1]);
            const double dt = samples.times[1] - samples.times[0];
            if (route == "short-time") {
                kappa = kappa_est_short_time(m0, mt, alpha.alpha_hat, dt);
            } else {
                MellinEstOptions mopts;
                mopts.sigma = cfg.get_double("frag.mellin.sigma");
                mopts.tau_max = cfg.get_double("frag.mellin.tau_max");
                mopts.tau_points = cfg.get_int("frag.mellin.points");
                mopts.denom_floor_rel = cfg.get_double("frag.mellin.floor_rel");
                kappa = mellin_kappa_est(m0, mt, alpha.alpha_hat, fit.gamma_hat, dt, mopts).estimate;
            }
        } else if (route == "profile") {
            const Measure late = kde_estimate(samples.sizes.back());
            const double t_last = samples.times.back();
            Measure g = late.scaled_x(std::pow(t_last, 1.0 / fit.gamma_hat));
            g *= 1.0 / g.mass();
            MellinEstOptions mopts;
            mopts.sigma = cfg.get_double("frag.mellin.sigma");
            mopts.tau_max = cfg.get_double("frag.mellin.tau_max");
            mopts.tau_points = cfg.get_int("frag.mellin.points");
            mopts.denom_floor_rel = cfg.get_double("frag.mellin.floor_rel");
            kappa = kappa_from_profile(g, alpha.alpha_hat, fit.gamma_hat, mopts).estimate;
        } else {
            throw std::invalid_argument("unknown frag.kappa_route: " + route);
        }

        const FragmentationKernel est_kernel{kappa.projected};
        const ValidationReport rep =
            validate_pipeline(samples, alpha.alpha_hat, fit.gamma_hat, est_kernel);

        json report;
        report["gamma_hat"] = fit.gamma_hat;
        report["t_asymp"] = fit.t_asymp;
        report["fit"] = {{"intercept", fit.intercept},
                         {"sse", fit.sse},
                         {"r_squared", fit.r_squared},
                         {"breakpoint_at_boundary", fit.breakpoint_at_boundary}};
        report["alpha_hat"] = alpha.alpha_hat;
        report["alpha_dispersion"] = alpha.dispersion;
        report["kappa"] = {{"route", kappa.route},
                           {"reg_param", kappa.reg_param},
                           {"negative_mass_fraction", kappa.negative_mass_fraction},
                           {"negative_mass_warning", kappa.negative_mass_warning},
                           {"measure", measure_json(kappa.projected)}};
        report["validation"] = validation_json(rep);
        const fs::path report_file = out_dir / "estimate_report.json";
        write_text_atomic(report_file, report.dump(2) + "\n");

        std::vector<std::vector<double>> fit_rows;
        for (std::size_t i = 0; i < fit.fit_times.size(); ++i) {
            const double lt = std::log(fit.fit_times[i]);
            const double fitted =
                fit.intercept -
                std::max(0.0, lt - std::log(fit.t_asymp)) / fit.gamma_hat;
            fit_rows.push_back({fit.fit_times[i], lt, fitted + fit.residuals[i], fitted});
        }
        const fs::path fit_file = out_dir / "loglog_fit.csv";
        write_csv(fit_file, "t,log_t,log_m1,fitted", fit_rows);
        const fs::path val_file = out_dir / "validation.csv";
        write_validation_csv(val_file, rep);
        write_manifest("estimate-frag", cfg, timer, {report_file, fit_file, val_file});
        return exit_ok;
    });
}

int cmd_validate_frag(const GlobalArgs& args, const std::filesystem::path& samples_file) {
    return run_guarded("validate-frag", [&] {
        Timer timer;
        const ExperimentConfig cfg = effective_config(args);
        const fs::path out_dir = cfg.get_string("out_dir");
        if (!fs::exists(samples_file))
            throw io_error("samples file not found: " + samples_file.string());
        const SampleSet samples = read_samples_csv(samples_file);
        const ValidationReport rep =
            validate_pipeline(samples, cfg.get_double("frag.alpha"),
                              cfg.get_double("frag.gamma"), frag_kernel(cfg));
        const fs::path val_file = out_dir / "validation.csv";
        write_validation_csv(val_file, rep);
        const fs::path json_file = out_dir / "validation.json";
        write_text_atomic(json_file, validation_json(rep).dump(2) + "\n");
        write_manifest("validate-frag", cfg, timer, {val_file, json_file});
        return exit_ok;
    });
}

}  // namespace depofrag::cli
