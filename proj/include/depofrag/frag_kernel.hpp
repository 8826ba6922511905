#pragma once

#include "depofrag/measure.hpp"

#include <string>

namespace depofrag {

/// Power-law breakage rate α x^γ.
struct FragmentationParams {
    double alpha = 1.0;  ///< overall rate > 0
    double gamma = 1.0;  ///< size exponent >= 0

    void validate() const;
};

/// Binary fragmentation kernel: a measure κ on (0,1) with
///     ∫κ = 2,  ∫z κ(dz) = 1,  κ(z) = κ(1-z),  no atoms at 0 or 1.
/// Constraints are checked to `tol` on construction.
class FragmentationKernel {
public:
    explicit FragmentationKernel(Measure kappa, double tol = 1e-9);

    /// κ = 2 on (0,1), a single cell.
    static FragmentationKernel uniform();
    /// Symmetric Beta(shape, shape)-shaped density, shape > 1 concentrates
    /// breakage at the fibril centre. Cell masses from the exact Beta CDF.
    static FragmentationKernel center_weighted(int cells = 64, double shape = 3.0);
    /// Beta(1/2, 1/2): U-shaped, breakage near the edges.
    static FragmentationKernel edge_weighted(int cells = 64);
    /// Lookup by config name: "uniform", "center-weighted", "edge-weighted".
    static FragmentationKernel preset(const std::string& name, int cells = 64);

    const Measure& measure() const { return kappa_; }
    double constraint_tol() const { return tol_; }

private:
    Measure kappa_;
    double tol_;
};

}  // namespace depofrag
