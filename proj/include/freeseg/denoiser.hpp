#pragma once

#include <utility>

#include "freeseg/geometry.hpp"
#include "freeseg/imaging.hpp"
#include "freeseg/linalg.hpp"

namespace freeseg {

/// Link weights of the edge-preserving smoother: h^2 on open links, 0 on links a curve cuts.
/// A_x covers the horizontal links [(i-1)h, ih] x {jh}, A_y the vertical links {ih} x [(j-1)h, jh].
/// Links run over every pair of adjacent grid nodes; there are none across the image border.
class LinkMasks {
public:
    LinkMasks() = default;
    explicit LinkMasks(LinkCrossings crossings) : cuts_(std::move(crossings)) {}

    const Domain& domain() const noexcept { return cuts_.domain(); }
    const LinkCrossings& crossings() const noexcept { return cuts_; }

    // 1 <= i <= nx, 0 <= j <= ny
    double ax(std::size_t i, std::size_t j) const { return cuts_.x_cut(i, j) ? 0.0 : h2(); }
    // 0 <= i <= nx, 1 <= j <= ny
    double ay(std::size_t i, std::size_t j) const { return cuts_.y_cut(i, j) ? 0.0 : h2(); }

    friend bool operator==(const LinkMasks&, const LinkMasks&) = default;

private:
    double h2() const { return domain().h * domain().h; }
    LinkCrossings cuts_;
};

LinkMasks compute_masks(const CurveNetwork& network, const Domain& domain);

/// Normal equations of E_discr: for node (i, j),
///   2/h^2 * sum_links A * (u_ij - u_nb) + 2 lambda h^2 u_ij = 2 lambda h^2 u0_ij.
/// Unknowns are ordered like GridImage values. The matrix is SPD for lambda > 0.
std::pair<SparseMatrix, DenseVector> assemble_denoise_system(const GridImage& u0, const LinkMasks& masks,
                                                             double lambda);

/// E_discr(u) = sum_links A (du/h)^2 + lambda * sum_nodes h^2 (u0 - u)^2.
double denoise_energy(const GridImage& u, const GridImage& u0, const LinkMasks& masks, double lambda);

struct DenoiseReport {
    std::size_t iterations = 0;
    double residual = 0.0;
};

/// Minimizer of E_discr for the given network, clamped to [0, 1]. `warm_start`, when given,
/// seeds the iterative solve (it does not change the result beyond solver tolerance).
GridImage denoise(const GridImage& u0, const CurveNetwork& network, double lambda,
                  const GridImage* warm_start = nullptr, DenoiseReport* report = nullptr);
GridImage denoise(const GridImage& u0, const LinkMasks& masks, double lambda, const GridImage* warm_start = nullptr,
                  DenoiseReport* report = nullptr);

}  // namespace freeseg
