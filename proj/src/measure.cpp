#include "depofrag/measure.hpp"

#include "depofrag/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace depofrag {

namespace {

void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string("Measure: non-finite ") + what);
}

std::vector<Atom> normalize_atoms(std::vector<Atom> atoms) {
    for (const Atom& a : atoms) {
        check_finite(a.x, "atom location");
        check_finite(a.w, "atom weight");
        if (a.x < 0.0) throw std::invalid_argument("Measure: atom location < 0");
    }
    std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
    std::vector<Atom> out;
    out.reserve(atoms.size());
    for (const Atom& a : atoms) {
        if (!out.empty() && out.back().x == a.x)
            out.back().w += a.w;
        else
            out.push_back(a);
    }
    std::erase_if(out, [](const Atom& a) { return a.w == 0.0; });
    return out;
}

}  // namespace

Measure::Measure(std::vector<Atom> atoms, std::vector<double> grid, std::vector<double> density)
    : atoms_(normalize_atoms(std::move(atoms))), grid_(std::move(grid)), density_(std::move(density)) {
    if (grid_.empty() != density_.empty() || (!grid_.empty() && grid_.size() != density_.size() + 1))
        throw std::invalid_argument("Measure: grid must have density.size()+1 breakpoints");
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        check_finite(grid_[i], "grid breakpoint");
        if (grid_[i] < 0.0) throw std::invalid_argument("Measure: grid breakpoint < 0");
        if (i > 0 && !(grid_[i] > grid_[i - 1]))
            throw std::invalid_argument("Measure: grid breakpoints must be strictly increasing");
    }
    for (double v : density_) check_finite(v, "density value");
}

Measure Measure::dirac(double x, double w) { return from_atoms({{x, w}}); }

Measure Measure::from_atoms(std::vector<Atom> atoms) {
    return Measure(std::move(atoms), {}, {});
}

Measure Measure::from_density(std::vector<double> grid, std::vector<double> density) {
    return Measure({}, std::move(grid), std::move(density));
}

double Measure::mass() const {
    double m = 0.0;
    for (const Atom& a : atoms_) m += a.w;
    for (std::size_t i = 0; i < density_.size(); ++i)
        m += density_[i] * (grid_[i + 1] - grid_[i]);
    return m;
}

double Measure::moment(double p) const {
    double m = 0.0;
    for (const Atom& a : atoms_) {
        if (a.x == 0.0)
            m += (p == 0.0) ? a.w : 0.0;
        else
            m += a.w * std::pow(a.x, p);
    }
    for (std::size_t i = 0; i < density_.size(); ++i) {
        const double a = grid_[i], b = grid_[i + 1];
        double cell;
        if (p == -1.0) {
            if (a == 0.0) throw std::invalid_argument("Measure::moment: divergent at p=-1 with support at 0");
            cell = std::log(b / a);
        } else {
            if (a == 0.0 && p < -1.0)
                throw std::invalid_argument("Measure::moment: divergent moment");
            cell = (std::pow(b, p + 1.0) - std::pow(a, p + 1.0)) / (p + 1.0);
        }
        m += density_[i] * cell;
    }
    return m;
}

double Measure::support_min() const {
    if (is_zero()) throw std::invalid_argument("Measure::support_min: zero measure");
    double s = std::numeric_limits<double>::infinity();
    if (!atoms_.empty()) s = std::min(s, atoms_.front().x);
    if (!grid_.empty()) s = std::min(s, grid_.front());
    return s;
}

double Measure::support_max() const {
    if (is_zero()) throw std::invalid_argument("Measure::support_max: zero measure");
    double s = 0.0;
    if (!atoms_.empty()) s = std::max(s, atoms_.back().x);
    if (!grid_.empty()) s = std::max(s, grid_.back());
    return s;
}

double Measure::density_at(double x) const {
    if (grid_.empty() || x < grid_.front() || x >= grid_.back()) return 0.0;
    const auto it = std::upper_bound(grid_.begin(), grid_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - grid_.begin()) - 1;
    if (i >= density_.size()) return 0.0;
    return density_[i];
}

Measure& Measure::operator*=(double c) {
    check_finite(c, "scalar");
    if (c == 0.0) {
        atoms_.clear();
        grid_.clear();
        density_.clear();
        return *this;
    }
    for (Atom& a : atoms_) a.w *= c;
    for (double& v : density_) v *= c;
    return *this;
}

Measure Measure::operator+(const Measure& other) const {
    std::vector<Atom> atoms = atoms_;
    atoms.insert(atoms.end(), other.atoms_.begin(), other.atoms_.end());

    std::vector<double> grid;
    std::vector<double> density;
    if (!grid_.empty() || !other.grid_.empty()) {
        grid.reserve(grid_.size() + other.grid_.size());
        grid.insert(grid.end(), grid_.begin(), grid_.end());
        grid.insert(grid.end(), other.grid_.begin(), other.grid_.end());
        std::sort(grid.begin(), grid.end());
        grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
        density.resize(grid.size() - 1);
        for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
            const double mid = 0.5 * (grid[i] + grid[i + 1]);
            density[i] = density_at(mid) + other.density_at(mid);
        }
        // prune empty margins so supports stay tight
        std::size_t lo = 0, hi = density.size();
        while (lo < hi && density[lo] == 0.0) ++lo;
        while (hi > lo && density[hi - 1] == 0.0) --hi;
        if (lo == hi) {
            grid.clear();
            density.clear();
        } else {
            grid = std::vector<double>(grid.begin() + lo, grid.begin() + hi + 1);
            density = std::vector<double>(density.begin() + lo, density.begin() + hi);
        }
    }
    return Measure(std::move(atoms), std::move(grid), std::move(density));
}

Measure Measure::operator-(const Measure& other) const {
    Measure neg = other;
    neg *= -1.0;
    return *this + neg;
}

Measure Measure::restricted(double lo, double hi) const {
    if (!(lo < hi)) throw std::invalid_argument("Measure::restricted: need lo < hi");
    std::vector<Atom> atoms;
    for (const Atom& a : atoms_)
        if (a.x > lo && a.x < hi) atoms.push_back(a);
    std::vector<double> grid, density;
    for (std::size_t i = 0; i < density_.size(); ++i) {
        const double a = std::max(grid_[i], lo), b = std::min(grid_[i + 1], hi);
        if (b <= a) continue;
        if (grid.empty()) grid.push_back(a);
        grid.push_back(b);
        density.push_back(density_[i]);
    }
    return Measure(std::move(atoms), std::move(grid), std::move(density));
}

Measure Measure::reflected(double a) const {
    if (!is_zero() && support_max() > a)
        throw std::invalid_argument("Measure::reflected: support exceeds reflection point");
    std::vector<Atom> atoms;
    for (const Atom& at : atoms_) atoms.push_back({a - at.x, at.w});
    std::vector<double> grid(grid_.rbegin(), grid_.rend());
    for (double& g : grid) g = a - g;
    std::vector<double> density(density_.rbegin(), density_.rend());
    return Measure(std::move(atoms), std::move(grid), std::move(density));
}

Measure Measure::scaled_x(double c) const {
    if (!(c > 0.0)) throw std::invalid_argument("Measure::scaled_x: need c > 0");
    std::vector<Atom> atoms = atoms_;
    for (Atom& a : atoms) a.x *= c;
    std::vector<double> grid = grid_;
    for (double& g : grid) g *= c;
    std::vector<double> density = density_;
    for (double& v : density) v /= c;  // mass per cell preserved
    return Measure(std::move(atoms), std::move(grid), std::move(density));
}

Measure Measure::clipped_below(double floor) const {
    std::vector<Atom> atoms;
    for (const Atom& a : atoms_)
        if (a.w >= floor) atoms.push_back(a);
    std::vector<double> density = density_;
    for (double& v : density) v = std::max(v, floor);
    std::vector<double> grid = grid_;
    return Measure(std::move(atoms), std::move(grid), std::move(density));
}

double Measure::negative_mass() const {
    double m = 0.0;
    for (const Atom& a : atoms_) m += std::max(0.0, -a.w);
    for (std::size_t i = 0; i < density_.size(); ++i)
        m += std::max(0.0, -density_[i]) * (grid_[i + 1] - grid_[i]);
    return m;
}

bool Measure::is_nonnegative(double tol) const {
    for (const Atom& a : atoms_)
        if (a.w < -tol) return false;
    for (double v : density_)
        if (v < -tol) return false;
    return true;
}

nlohmann::json Measure::to_json() const {
    nlohmann::json j;
    j["atoms"] = nlohmann::json::array();
    for (const Atom& a : atoms_) j["atoms"].push_back({a.x, a.w});
    j["grid"] = grid_;
    j["density"] = density_;
    return j;
}

Measure Measure::from_json(const nlohmann::json& j) {
    std::vector<Atom> atoms;
    if (j.contains("atoms"))
        for (const auto& pair : j.at("atoms"))
            atoms.push_back({pair.at(0).get<double>(), pair.at(1).get<double>()});
    std::vector<double> grid, density;
    if (j.contains("grid")) grid = j.at("grid").get<std::vector<double>>();
    if (j.contains("density")) density = j.at("density").get<std::vector<double>>();
    return Measure(std::move(atoms), std::move(grid), std::move(density));
}

double tv_norm(const Measure& mu) {
    double m = 0.0;
    for (const Atom& a : mu.atoms()) m += std::abs(a.w);
    const auto& g = mu.grid();
    const auto& d = mu.density();
    for (std::size_t i = 0; i < d.size(); ++i) m += std::abs(d[i]) * (g[i + 1] - g[i]);
    return m;
}

Measure mult_convolve(const Measure& f, const Measure& g, const std::vector<double>& out_grid) {
    if (f.is_zero() || g.is_zero()) return Measure();
    if (f.support_min() <= 0.0 || g.support_min() <= 0.0)
        throw std::invalid_argument("mult_convolve: measures must be supported in (0, inf)");

    // atom x atom -> atoms at products
    std::vector<Atom> atoms;
    for (const Atom& a : f.atoms())
        for (const Atom& b : g.atoms())
            atoms.push_back({a.x * b.x, a.w * b.w});

    const bool fd = f.has_density(), gd = g.has_density();
    std::vector<double> grid, density;
    if (fd || gd) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        auto widen = [&](double a, double b) {
            lo = std::min(lo, a);
            hi = std::max(hi, b);
        };
        if (fd) {
            for (const Atom& b : g.atoms()) widen(f.grid().front() * b.x, f.grid().back() * b.x);
            if (gd) widen(f.grid().front() * g.grid().front(), f.grid().back() * g.grid().back());
        }
        if (gd)
            for (const Atom& a : f.atoms()) widen(g.grid().front() * a.x, g.grid().back() * a.x);

        grid = out_grid;
        if (grid.empty()) {
            const int cells = 512;
            grid.reserve(cells + 1);
            const double llo = std::log(lo), lhi = std::log(hi);
            for (int i = 0; i <= cells; ++i) grid.push_back(std::exp(llo + (lhi - llo) * i / cells));
        }
        density.assign(grid.size() - 1, 0.0);

        // h(x) = ∫ f(y) g(x/y) dy/y evaluated at cell midpoints; for piecewise
        // constant factors the y-integral is a finite sum of logarithms, so the
        // evaluation is exact pointwise. δ_a * density and density * δ_a are
        // rescaled densities, also exact.
        auto eval_dd = [&](double x) {
            double acc = 0.0;
            const auto& fg = f.grid();
            const auto& fv = f.density();
            const auto& gg = g.grid();
            const auto& gv = g.density();
            for (std::size_t i = 0; i < fv.size(); ++i) {
                if (fv[i] == 0.0) continue;
                // y ranges over cell i intersected with {x/gg.back() < y < x/gg.front()}
                const double ylo = std::max(fg[i], x / gg.back());
                const double yhi = std::min(fg[i + 1], x / gg.front());
                if (yhi <= ylo) continue;
                // walk g's cells in z = x/y, i.e. y in (x/z_hi, x/z_lo)
                for (std::size_t j = 0; j < gv.size(); ++j) {
                    if (gv[j] == 0.0) continue;
                    const double a = std::max(ylo, x / gg[j + 1]);
                    const double b = std::min(yhi, x / gg[j]);
                    if (b > a) acc += fv[i] * gv[j] * std::log(b / a);
                }
            }
            return acc;
        };

        for (std::size_t c = 0; c + 1 < grid.size(); ++c) {
            const double x = 0.5 * (grid[c] + grid[c + 1]);
            double v = 0.0;
            if (fd && gd) v += eval_dd(x);
            if (gd)
                for (const Atom& a : f.atoms()) v += a.w * g.density_at(x / a.x) / a.x;
            if (fd)
                for (const Atom& b : g.atoms()) v += b.w * f.density_at(x / b.x) / b.x;
            density[c] = v;
        }
    }
    return Measure(std::move(atoms), std::move(grid), std::move(density));
}

}  // namespace depofrag
