#pragma once

#include <string>
#include <vector>

#include "freeseg/geometry.hpp"
#include "freeseg/imaging.hpp"

namespace freeseg {

struct EvolveParams {
    double sigma = 1.0;   // length weight
    double lambda = 1.0;  // fidelity weight; 0 switches the data term off
    double dt = 1e-3;
    double a = 1.5;  // normal sampling offset in units of h
    bool endpoint_normal_motion = true;
    // Remeshing band applied after each step; h_max <= 0 disables remeshing.
    double h_min = 2.0;
    double h_max = 6.0;
};

void check(const EvolveParams& params);

/// Grid points and factors at a free endpoint. z1 carries the vertical link [z1, z1 + h e2]
/// weighted by alpha_x, z2 the horizontal link [z2, z2 + h e1] weighted by alpha_y.
struct EndpointStencil {
    GridPoint z1;
    GridPoint z2;
    double alpha_x = 0.0;
    double alpha_y = 0.0;
};

/// rho = 0 for the start of a curve, 1 for its end. Ties in sign(tau . e_i) count as >= 0.
/// The cell is the one whose lower-left node is floor(x / h), pulled back inside the grid for
/// points on the top or right edge. Throws GeometryError for points outside the domain.
EndpointStencil endpoint_stencil(Vec2 x, Vec2 tau, int rho, const Domain& domain);

/// |tau . e1| (D2 u(z1))^2 + |tau . e2| (D1 u(z2))^2 - sigma; positive when the end extends.
double growth_indicator(const EndpointStencil& stencil, Vec2 tau, const GridImage& u, double sigma);

/// F_j = lambda [(u0(X_j) - u(X_j + a w_j))^2 - (u0(X_j) - u(X_j - a w_j))^2]; zero at the ends
/// of open curves.
double external_term(const PolygonalCurve& curve, std::size_t j, const GridImage& u0, const GridImage& u,
                     const EvolveParams& params);

/// Tangential and normal speed of a free endpoint, before any near-boundary freezing.
struct EndpointVelocity {
    double tangential = 0.0;
    double normal = 0.0;
};
EndpointVelocity endpoint_velocity(const PolygonalCurve& curve, CurveEnd which, const GridImage& u, double sigma);

struct StepReport {
    double max_displacement = 0.0;
    std::vector<std::string> notes;
};

/// One time step of a single curve: implicit solve for the interior nodes with the ends held,
/// then the explicit endpoint update, then remeshing. `u0`/`u` may be null, which makes the
/// data terms vanish (pure length-shortening flow and endpoint retreat at speed sigma).
PolygonalCurve evolve_curve(const PolygonalCurve& curve, const Domain& domain, const GridImage* u0,
                            const GridImage* u, const EvolveParams& params, StepReport* report = nullptr);

/// Advances every curve of the network by one step.
CurveNetwork step(const CurveNetwork& network, const GridImage& u0, const GridImage& u, const EvolveParams& params,
                  StepReport* report = nullptr);

}  // namespace freeseg
