#include "depofrag/smoothing_spline.hpp"

#include "depofrag/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace depofrag {

namespace {

// Symmetric banded SPD solve (bandwidth bw), in-place Cholesky. band[r][j]
// holds A(j, j+r) for r = 0..bw.
void banded_cholesky_solve(std::vector<std::vector<double>>& band, std::vector<double>& x) {
    const std::size_t n = x.size();
    const std::size_t bw = band.size() - 1;
    for (std::size_t j = 0; j < n; ++j) {
        double d = band[0][j];
        for (std::size_t r = 1; r <= bw && r <= j; ++r) {
            const double l = band[r][j - r];
            d -= l * l * band[0][j - r];
        }
        if (!(d > 0.0)) throw numerical_error("smoothing spline: system not positive definite");
        band[0][j] = d;
        for (std::size_t r = 1; r <= bw && j + r < n; ++r) {
            double v = band[r][j];
            for (std::size_t q = 1; q + r <= bw && q <= j; ++q)
                v -= band[q][j - q] * band[q + r][j - q] * band[0][j - q];
            band[r][j] = v / d;
        }
    }
    // forward: L z = x (unit lower with stored multipliers)
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t r = 1; r <= bw && r <= j; ++r) x[j] -= band[r][j - r] * x[j - r];
    for (std::size_t j = 0; j < n; ++j) x[j] /= band[0][j];
    for (std::size_t jj = n; jj-- > 0;)
        for (std::size_t r = 1; r <= bw && jj + r < n; ++r)
            x[jj] -= band[r][jj] * x[jj + r];
}

}  // namespace

SmoothingSpline::SmoothingSpline(std::vector<double> t, std::vector<double> y, double lambda)
    : t_(std::move(t)), y_(std::move(y)), lambda_(lambda) {
    const std::size_t n = t_.size();
    if (n < 2 || y_.size() != n)
        throw std::invalid_argument("SmoothingSpline: need >= 2 matching samples");
    for (std::size_t i = 1; i < n; ++i)
        if (!(t_[i] > t_[i - 1]))
            throw std::invalid_argument("SmoothingSpline: knots must be strictly increasing");
    if (!(lambda >= 0.0)) throw std::invalid_argument("SmoothingSpline: lambda must be >= 0");

    gamma_.assign(n, 0.0);
    f_ = y_;
    if (n < 3) return;  // straight line through two points, K = 0

    const std::size_t m = n - 2;
    std::vector<double> h(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) h[i] = t_[i + 1] - t_[i];

    // R (tridiagonal) + λ QᵀQ (pentadiagonal); bands r = 0,1,2
    std::vector<std::vector<double>> band(3, std::vector<double>(m, 0.0));
    auto q = [&](std::size_t row, std::size_t col) {  // Q(row, col), col = interior knot col+1
        const std::size_t i = col + 1;
        if (row + 1 == i) return 1.0 / h[i - 1];
        if (row == i) return -1.0 / h[i - 1] - 1.0 / h[i];
        if (row == i + 1) return 1.0 / h[i];
        return 0.0;
    };
    for (std::size_t j = 0; j < m; ++j) {
        band[0][j] = (h[j] + h[j + 1]) / 3.0;
        if (j + 1 < m) band[1][j] = h[j + 1] / 6.0;
        for (std::size_t r = 0; r <= 2 && j + r < m; ++r) {
            double acc = 0.0;
            for (std::size_t row = j; row <= j + r + 2 && row < n; ++row)
                acc += q(row, j) * q(row, j + r);
            band[r][j] += lambda_ * acc;
        }
    }

    std::vector<double> rhs(m, 0.0);
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t row = j; row <= j + 2; ++row) rhs[j] += q(row, j) * y_[row];

    banded_cholesky_solve(band, rhs);  // rhs <- γ interior

    for (std::size_t j = 0; j < m; ++j) gamma_[j + 1] = rhs[j];
    for (std::size_t row = 0; row < n; ++row) {
        double acc = 0.0;
        const std::size_t jlo = row >= 2 ? row - 2 : 0;
        for (std::size_t j = jlo; j < m && j + 1 <= row + 1; ++j) acc += q(row, j) * rhs[j];
        f_[row] = y_[row] - lambda_ * acc;
    }
}

std::size_t SmoothingSpline::cell(double t) const {
    if (t <= t_.front()) return 0;
    if (t >= t_.back()) return t_.size() - 2;
    const auto it = std::upper_bound(t_.begin(), t_.end(), t);
    return static_cast<std::size_t>(it - t_.begin()) - 1;
}

double SmoothingSpline::value(double t) const {
    const std::size_t i = cell(t);
    const double h = t_[i + 1] - t_[i];
    const double a = t_[i + 1] - t, b = t - t_[i];
    return gamma_[i] * a * a * a / (6.0 * h) + gamma_[i + 1] * b * b * b / (6.0 * h) +
           (f_[i] / h - gamma_[i] * h / 6.0) * a + (f_[i + 1] / h - gamma_[i + 1] * h / 6.0) * b;
}

double SmoothingSpline::derivative(double t, int order) const {
    const std::size_t i = cell(t);
    const double h = t_[i + 1] - t_[i];
    const double a = t_[i + 1] - t, b = t - t_[i];
    switch (order) {
        case 1:
            return -gamma_[i] * a * a / (2.0 * h) + gamma_[i + 1] * b * b / (2.0 * h) +
                   (f_[i + 1] - f_[i]) / h - (gamma_[i + 1] - gamma_[i]) * h / 6.0;
        case 2:
            return (gamma_[i] * a + gamma_[i + 1] * b) / h;
        case 3:
            return (gamma_[i + 1] - gamma_[i]) / h;
        default:
            throw std::invalid_argument("SmoothingSpline::derivative: order must be 1, 2 or 3");
    }
}

double SmoothingSpline::residual_norm() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < y_.size(); ++i) acc += (y_[i] - f_[i]) * (y_[i] - f_[i]);
    return std::sqrt(acc);
}

DiscrepancyFit fit_spline_discrepancy(std::vector<double> t, std::vector<double> y, double delta) {
    if (delta < 0.0) throw std::invalid_argument("fit_spline_discrepancy: delta must be >= 0");
    const std::size_t n = t.size();
    double span = n >= 2 ? (t.back() - t.front()) / static_cast<double>(n - 1) : 1.0;
    const double unit = span * span * span;
    const double lam_lo = 1e-10 * unit, lam_hi = 1e12 * unit;

    if (delta == 0.0) return {SmoothingSpline(std::move(t), std::move(y), lam_lo), false};

    const double target = delta * std::sqrt(static_cast<double>(n));
    auto resid = [&](double lam) { return SmoothingSpline(t, y, lam).residual_norm(); };
    if (resid(lam_hi) < target)
        return {SmoothingSpline(std::move(t), std::move(y), lam_hi), true};
    if (resid(lam_lo) > target)
        return {SmoothingSpline(std::move(t), std::move(y), lam_lo), true};

    double lo = std::log(lam_lo), hi = std::log(lam_hi);
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (resid(std::exp(mid)) < target ? lo : hi) = mid;
    }
    return {SmoothingSpline(std::move(t), std::move(y), std::exp(0.5 * (lo + hi))), false};
}

}  // namespace depofrag
