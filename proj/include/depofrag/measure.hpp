#pragma once

#include <nlohmann/json_fwd.hpp>

#include <cstddef>
#include <vector>

namespace depofrag {

/// Point mass: weight w at location x >= 0.
struct Atom {
    double x = 0.0;
    double w = 0.0;
};

/// Signed Radon measure on the half-line, represented as a finite atom list
/// plus a piecewise-constant density on a bounded grid. This is the common
/// currency of the fragmentation pipelines; both parts may be empty.
///
/// Invariants (enforced on construction):
///  - atom locations finite, >= 0, strictly increasing; zero weights dropped,
///  - grid breakpoints finite and strictly increasing, one value per cell,
///  - total variation finite (automatic for this representation).
class Measure {
public:
    Measure() = default;
    Measure(std::vector<Atom> atoms, std::vector<double> grid, std::vector<double> density);

    static Measure dirac(double x, double w = 1.0);
    static Measure from_atoms(std::vector<Atom> atoms);
    static Measure from_density(std::vector<double> grid, std::vector<double> density);

    const std::vector<Atom>& atoms() const { return atoms_; }
    /// Cell breakpoints; size = density().size() + 1, or empty.
    const std::vector<double>& grid() const { return grid_; }
    const std::vector<double>& density() const { return density_; }

    bool is_zero() const { return atoms_.empty() && density_.empty(); }
    bool has_atoms() const { return !atoms_.empty(); }
    bool has_density() const { return !density_.empty(); }

    /// Signed total mass: sum of weights + integral of the density.
    double mass() const;
    /// ∫ x^p dμ, exact for this representation (p > -1 on densities).
    double moment(double p) const;

    double support_min() const;  ///< throws on the zero measure
    double support_max() const;

    /// Density value at x (atoms not included); 0 outside all cells.
    double density_at(double x) const;

    Measure& operator*=(double c);
    Measure operator+(const Measure& other) const;
    Measure operator-(const Measure& other) const;

    /// Restriction to the open interval (lo, hi); atoms on the boundary are
    /// dropped, cells are clipped.
    Measure restricted(double lo, double hi) const;

    /// Pushforward under x -> a - x. Caller guarantees a >= support_max().
    Measure reflected(double a) const;

    /// Pushforward under x -> c*x with c > 0; masses preserved.
    Measure scaled_x(double c) const;

    /// Floors density values and atom weights at `floor` (default 0),
    /// dropping what falls below.
    Measure clipped_below(double floor = 0.0) const;

    /// Mass of the negative part (TV of μ^-).
    double negative_mass() const;

    bool is_nonnegative(double tol = 0.0) const;

    /// JSON schema: {"atoms":[[x,w],...], "grid":[...], "density":[...]}
    nlohmann::json to_json() const;
    static Measure from_json(const nlohmann::json& j);

private:
    std::vector<Atom> atoms_;
    std::vector<double> grid_;
    std::vector<double> density_;
};

inline Measure operator*(double c, Measure m) {
    m *= c;
    return m;
}
inline Measure operator*(Measure m, double c) {
    m *= c;
    return m;
}

/// Total variation norm: Σ|weights| + ∫|density|. Exact for this
/// representation, which realizes the supremum over continuous test
/// functions with ||φ||_∞ <= 1.
double tv_norm(const Measure& mu);

/// Bounded-Lipschitz (flat) norm: sup ∫φ dμ over ||φ||_∞ <= 1, ||φ'||_∞ <= 1.
/// Densities are quantized to cell-midpoint atoms (error <= cell width × cell
/// mass), then the linear program over test-function values at the support
/// points — box constraints plus adjacent Lipschitz constraints, which are
/// sufficient on the line — is solved exactly by a concave value-function
/// sweep. Throws numerical_error if the inputs are not finite.
double bl_norm(const Measure& mu);

/// BL norm of the purely atomic measure with the given support points and
/// weights (points need not be sorted). Exposed for tests.
double bl_norm_atomic(std::vector<double> xs, std::vector<double> ws);

/// Multiplicative convolution (f*g)(x) = ∫ f(y) g(x/y) dy/y of measures
/// supported in (0,∞). Atoms convolve to atoms (δ_a * δ_b = δ_{ab});
/// density-density and atom-density parts are evaluated exactly on an output
/// grid derived from the factors (or on `out_grid` if given). Throws
/// std::invalid_argument if either measure has mass at or below 0.
Measure mult_convolve(const Measure& f, const Measure& g,
                      const std::vector<double>& out_grid = {});

}  // namespace depofrag
