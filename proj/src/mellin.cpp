#include "depofrag/mellin.hpp"

#include "depofrag/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

namespace depofrag {

namespace {

using cplx = std::complex<double>;

cplx pow_real(double x, cplx s) {  // x^s for x > 0
    return std::exp(s * std::log(x));
}

}  // namespace

std::complex<double> mellin(const Measure& mu, std::complex<double> s) {
    cplx acc = 0.0;
    for (const Atom& a : mu.atoms()) {
        if (a.x == 0.0) {
            if (s == cplx(1.0, 0.0))
                acc += a.w;
            else if (s.real() > 1.0)
                ;  // 0^{s-1} = 0
            else
                throw std::invalid_argument("mellin: atom at 0 with Re(s) <= 1 diverges");
        } else {
            acc += a.w * pow_real(a.x, s - 1.0);
        }
    }
    const auto& g = mu.grid();
    const auto& d = mu.density();
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d[i] == 0.0) continue;
        const double a = g[i], b = g[i + 1];
        if (s == cplx(0.0, 0.0)) {
            if (a == 0.0)
                throw std::invalid_argument("mellin: density support touches 0, integral diverges");
            acc += d[i] * std::log(b / a);
        } else {
            cplx lower;
            if (a == 0.0) {
                if (s.real() <= 0.0)
                    throw std::invalid_argument("mellin: density support touches 0, integral diverges");
                lower = 0.0;
            } else {
                lower = pow_real(a, s);
            }
            acc += d[i] * (pow_real(b, s) - lower) / s;
        }
    }
    return acc;
}

double mellin(const Measure& mu, double s) { return mellin(mu, cplx(s, 0.0)).real(); }

MellinLine mellin_line(const Measure& mu, double sigma, const std::vector<double>& tau_grid) {
    MellinLine line;
    line.sigma = sigma;
    line.tau = tau_grid;
    line.values.reserve(tau_grid.size());
    for (double t : tau_grid) line.values.push_back(mellin(mu, cplx(sigma, t)));
    return line;
}

std::vector<double> symmetric_tau_grid(double tau_max, int n) {
    if (!(tau_max > 0.0) || n < 3) throw std::invalid_argument("symmetric_tau_grid: bad arguments");
    const int m = n / 2;  // 2m+1 points, fully symmetric including endpoints
    std::vector<double> tau(2 * m + 1);
    for (int j = 0; j <= 2 * m; ++j) tau[j] = tau_max * (j - m) / m;
    tau[m] = 0.0;
    return tau;
}

MellinInvertResult mellin_invert(const MellinLine& line, const std::vector<double>& out_grid,
                                 const MellinInvertOptions& opts) {
    const std::size_t n = line.tau.size();
    if (n < 4 || line.values.size() != n)
        throw std::invalid_argument("mellin_invert: line too short or inconsistent");
    if (out_grid.size() < 2) throw std::invalid_argument("mellin_invert: need an output grid");
    const double dtau = (line.tau.back() - line.tau.front()) / static_cast<double>(n - 1);
    for (std::size_t j = 1; j < n; ++j)
        if (std::abs(line.tau[j] - line.tau[j - 1] - dtau) > 1e-9 * dtau)
            throw std::invalid_argument("mellin_invert: tau grid must be uniform");
    if (std::abs(line.tau.front() + line.tau.back()) > 1e-9 * line.tau.back())
        throw std::invalid_argument("mellin_invert: tau grid must be symmetric about 0");

    // conjugate-symmetrize (real output), then taper with a Tukey window
    std::vector<cplx> vals(n);
    for (std::size_t j = 0; j < n; ++j)
        vals[j] = 0.5 * (line.values[j] + std::conj(line.values[n - 1 - j]));

    double peak = 0.0;
    for (const cplx& v : vals) peak = std::max(peak, std::abs(v));
    const double tail = std::max(std::abs(vals.front()), std::abs(vals.back()));
    const double tail_ratio = peak > 0.0 ? tail / peak : 0.0;

    const double tmax = line.tau.back();
    const double flat = (1.0 - opts.tukey_fraction) * tmax;
    for (std::size_t j = 0; j < n; ++j) {
        const double at = std::abs(line.tau[j]);
        if (at > flat && tmax > flat)
            vals[j] *= 0.5 * (1.0 + std::cos(M_PI * (at - flat) / (tmax - flat)));
    }

    // h(w_k) = (Δτ/2π) e^{-i τ_0 w_k} DFT_k[ vals_j e^{-i j Δτ w_0} ],
    // w_k = w_0 + k Δw with Δw = 2π/(N Δτ): the Bromwich integral in
    // log coordinates.
    const double w0 = -M_PI / dtau;
    const double dw = 2.0 * M_PI / (static_cast<double>(n) * dtau);
    std::vector<cplx> in(n), out(n);
    for (std::size_t j = 0; j < n; ++j)
        in[j] = vals[j] * std::exp(cplx(0.0, -static_cast<double>(j) * dtau * w0));
    {
        static std::mutex plan_mutex;  // FFTW planning is not thread-safe
        std::unique_lock lock(plan_mutex);
        fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n),
                                          reinterpret_cast<fftw_complex*>(in.data()),
                                          reinterpret_cast<fftw_complex*>(out.data()),
                                          FFTW_FORWARD, FFTW_ESTIMATE);
        lock.unlock();
        fftw_execute(plan);
        lock.lock();
        fftw_destroy_plan(plan);
    }
    std::vector<double> h(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double wk = w0 + static_cast<double>(k) * dw;
        h[k] = (dtau / (2.0 * M_PI)) * (std::exp(cplx(0.0, -line.tau.front() * wk)) * out[k]).real();
    }

    auto h_at = [&](double w) {
        const double pos = (w - w0) / dw;
        if (pos <= 0.0 || pos >= static_cast<double>(n - 1)) return 0.0;
        const std::size_t k = static_cast<std::size_t>(pos);
        const double t = pos - static_cast<double>(k);
        return h[k] + t * (h[k + 1] - h[k]);
    };

    std::vector<double> density(out_grid.size() - 1);
    for (std::size_t c = 0; c + 1 < out_grid.size(); ++c) {
        const double x = 0.5 * (out_grid[c] + out_grid[c + 1]);
        if (!(x > 0.0)) throw std::invalid_argument("mellin_invert: output grid must be positive");
        density[c] = std::pow(x, -line.sigma) * h_at(std::log(x));
    }

    MellinInvertResult res{Measure::from_density(out_grid, std::move(density)), tail_ratio,
                           tail_ratio > opts.tail_warn_ratio};
    return res;
}

}  // namespace depofrag
