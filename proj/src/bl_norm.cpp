#include "depofrag/errors.hpp"
#include "depofrag/measure.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace depofrag {

namespace {

// Concave piecewise-linear function on [xs.front(), xs.back()], stored as
// vertices. The BL linear program
//     max Σ c_i φ_i   s.t.  |φ_i| <= 1,  |φ_{i+1} - φ_i| <= x_{i+1} - x_i
// has a chain constraint graph, so it is solved exactly by sweeping a value
// function V_i(φ) = max over φ_1..φ_{i-1}: the sliding-window maximum of a
// concave function is concave, and adding the linear term c_i φ keeps it so.
struct ConcavePL {
    std::vector<double> xs, vs;

    double eval(double x) const {
        if (x <= xs.front()) return vs.front();
        if (x >= xs.back()) return vs.back();
        const auto it = std::upper_bound(xs.begin(), xs.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - xs.begin());
        const double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
        return vs[i - 1] + t * (vs[i] - vs[i - 1]);
    }

    double max_value() const { return *std::max_element(vs.begin(), vs.end()); }

    // W(φ) = max_{|ψ-φ| <= d} V(ψ): shift the rising branch left by d, the
    // falling branch right by d, and widen the peak plateau.
    void window_max(double d) {
        const double vmax = max_value();
        std::size_t first = 0, last = vs.size() - 1;
        while (vs[first] != vmax) ++first;
        last = first;
        while (last + 1 < vs.size() && vs[last + 1] == vmax) ++last;
        std::vector<double> nx, nv;
        nx.reserve(xs.size() + 2);
        nv.reserve(xs.size() + 2);
        for (std::size_t j = 0; j < first; ++j) {
            nx.push_back(xs[j] - d);
            nv.push_back(vs[j]);
        }
        nx.push_back(xs[first] - d);
        nv.push_back(vmax);
        nx.push_back(xs[last] + d);
        nv.push_back(vmax);
        for (std::size_t j = last + 1; j < xs.size(); ++j) {
            nx.push_back(xs[j] + d);
            nv.push_back(vs[j]);
        }
        xs = std::move(nx);
        vs = std::move(nv);
    }

    void clip_to(double lo, double hi) {
        const double vlo = eval(lo), vhi = eval(hi);
        std::vector<double> nx{lo}, nv{vlo};
        for (std::size_t j = 0; j < xs.size(); ++j) {
            if (xs[j] > lo && xs[j] < hi) {
                nx.push_back(xs[j]);
                nv.push_back(vs[j]);
            }
        }
        nx.push_back(hi);
        nv.push_back(vhi);
        xs = std::move(nx);
        vs = std::move(nv);
    }

    void add_linear(double c) {
        for (std::size_t j = 0; j < xs.size(); ++j) vs[j] += c * xs[j];
    }
};

}  // namespace

double bl_norm_atomic(std::vector<double> xs, std::vector<double> ws) {
    if (xs.size() != ws.size()) throw std::invalid_argument("bl_norm_atomic: size mismatch");
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (!std::isfinite(xs[i]) || !std::isfinite(ws[i]))
            throw numerical_error("bl_norm: non-finite input, LP aborted");

    // sort by location, merge coincident points
    std::vector<std::size_t> idx(xs.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> px, pw;
    for (std::size_t i : idx) {
        if (!px.empty() && px.back() == xs[i])
            pw.back() += ws[i];
        else {
            px.push_back(xs[i]);
            pw.push_back(ws[i]);
        }
    }
    if (px.empty()) return 0.0;

    ConcavePL v;
    v.xs = {-1.0, 1.0};
    v.vs = {-pw[0], pw[0]};
    for (std::size_t i = 1; i < px.size(); ++i) {
        v.window_max(px[i] - px[i - 1]);
        v.clip_to(-1.0, 1.0);
        v.add_linear(pw[i]);
    }
    return v.max_value();
}

double bl_norm(const Measure& mu) {
    std::vector<double> xs, ws;
    for (const Atom& a : mu.atoms()) {
        xs.push_back(a.x);
        ws.push_back(a.w);
    }
    const auto& g = mu.grid();
    const auto& d = mu.density();
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d[i] == 0.0) continue;
        xs.push_back(0.5 * (g[i] + g[i + 1]));
        ws.push_back(d[i] * (g[i + 1] - g[i]));
    }
    return bl_norm_atomic(std::move(xs), std::move(ws));
}

}  // namespace depofrag
