#pragma once

#include <vector>

#include "freeseg/denoiser.hpp"
#include "freeseg/geometry.hpp"
#include "freeseg/imaging.hpp"

namespace freeseg {

struct EnergyBreakdown {
    double length_term = 0.0;    // sigma |Gamma|
    double gradient_term = 0.0;  // sum (1 - alpha) h^2 (difference quotient)^2
    double fidelity_term = 0.0;  // lambda sum h^2 (u0 - u)^2
    double total = 0.0;
};

/// Link weights 1 - alpha of the discrete Mumford-Shah energy. `vertical(i, j)` weighs
/// [z, z + h e2] at z = (i, j), 0 <= j < ny; `horizontal(i, j)` weighs [z, z + h e1], 0 <= i < nx.
/// Crossed links get 0, open links 1, and the links designated at each free endpoint the
/// fractional value from its stencil.
class LinkWeights {
public:
    explicit LinkWeights(const CurveNetwork& network);

    double vertical(std::size_t i, std::size_t j) const { return v_[j * (d_.nx + 1) + i]; }
    double horizontal(std::size_t i, std::size_t j) const { return h_[j * d_.nx + i]; }

private:
    Domain d_;
    std::vector<double> v_;
    std::vector<double> h_;
};

/// E^h(Gamma, u) with the alpha factors at free endpoints. Gradient terms carry the weight h^2
/// of the smoothing energy, so with h = 1 every link contributes (1 - alpha) (D u)^2.
EnergyBreakdown discrete_ms_energy(const CurveNetwork& network, const GridImage& u, const GridImage& u0, double sigma,
                                   double lambda);

/// Connected components of grid nodes joined by uncut links (4-connectivity).
struct RegionLabels {
    std::vector<std::size_t> label;  // per node, GridImage ordering
    std::size_t count = 0;
};
RegionLabels label_regions(const LinkMasks& masks);

/// Per-region mean of u0 and the field taking that mean on each region.
struct RegionMeans {
    RegionLabels regions;
    std::vector<double> means;
    GridImage field;
};
RegionMeans region_means(const GridImage& u0, const LinkMasks& masks);

struct PcEnergy {
    double total = 0.0;
    double length_term = 0.0;
    double fidelity_term = 0.0;
    std::vector<double> means;
};

/// sigma |Gamma| + lambda sum_k sum_{nodes in region k} h^2 (u0 - c_k)^2. Curves must separate
/// regions: closed or boundary-attached at both ends; free ends throw ParameterError.
PcEnergy pc_energy(const CurveNetwork& network, const GridImage& u0, double sigma, double lambda);

/// |f(X_j + a w_j) - f(X_j - a w_j)| with bilinear sampling; a in units of h.
double jump_across(const PolygonalCurve& curve, std::size_t j, const GridImage& field, double a);

}  // namespace freeseg
