#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace depofrag {

/// Gauss-Legendre rule on [-1,1]. Nodes/weights generated by Newton iteration
/// on the Legendre polynomial; cached per order.
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussRule(int order);

    /// Integrate f over [a,b].
    template <class F>
    double integrate(double a, double b, F&& f) const {
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        double acc = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            acc += weights[i] * f(mid + half * nodes[i]);
        return acc * half;
    }
};

/// Shared fixed-order rules (8 and 16 point cover everything in this project).
const GaussRule& gauss8();
const GaussRule& gauss16();

/// Adaptive Simpson quadrature; used as an independent oracle in tests and
/// for integrands without per-cell closed forms.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-10, int max_depth = 30);

/// Strictly increasing geometric grid with n cells (n+1 breakpoints).
std::vector<double> log_grid(double lo, double hi, int cells);

/// Uniform grid with n cells (n+1 breakpoints).
std::vector<double> linear_grid(double lo, double hi, int cells);

}  // namespace depofrag
