#include "depofrag/quadrature.hpp"

#include <stdexcept>

namespace depofrag {

GaussRule::GaussRule(int order) {
    if (order < 1) throw std::invalid_argument("GaussRule: order must be >= 1");
    nodes.resize(order);
    weights.resize(order);
    const int n = order;
    // Newton iteration from the Chebyshev initial guess; standard recurrence
    // for P_n and its derivative.
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
    }
    if (n % 2 == 1) nodes[n / 2] = 0.0;
}

const GaussRule& gauss8() {
    static const GaussRule rule(8);
    return rule;
}

const GaussRule& gauss16() {
    static const GaussRule rule(16);
    return rule;
}

namespace {

double simpson(const std::function<double(double)>& f, double a, double fa, double b, double fb,
               double m, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const std::function<double(double)>& f, double a, double fa, double b,
                     double fb, double m, double fm, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(f, a, fa, m, fm, lm, flm);
    const double right = simpson(f, m, fm, b, fb, rm, frm);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           adaptive_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth) {
    if (a == b) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fb = f(b), fm = f(m);
    const double whole = simpson(f, a, fa, b, fb, m, fm);
    return adaptive_step(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

std::vector<double> log_grid(double lo, double hi, int cells) {
    if (!(lo > 0.0) || !(hi > lo) || cells < 1)
        throw std::invalid_argument("log_grid: need 0 < lo < hi and cells >= 1");
    std::vector<double> g(cells + 1);
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i <= cells; ++i)
        g[i] = std::exp(llo + (lhi - llo) * i / cells);
    g.front() = lo;
    g.back() = hi;
    return g;
}

std::vector<double> linear_grid(double lo, double hi, int cells) {
    if (!(hi > lo) || cells < 1)
        throw std::invalid_argument("linear_grid: need lo < hi and cells >= 1");
    std::vector<double> g(cells + 1);
    for (int i = 0; i <= cells; ++i)
        g[i] = lo + (hi - lo) * i / cells;
    g.back() = hi;
    return g;
}

}  // namespace depofrag
