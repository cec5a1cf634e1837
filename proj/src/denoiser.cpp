#include "freeseg/denoiser.hpp"

#include <algorithm>

#include "freeseg/errors.hpp"

namespace freeseg {

LinkMasks compute_masks(const CurveNetwork& network, const Domain& domain) {
    return LinkMasks(gridline_crossings(network, domain));
}

namespace {

void require_match(const GridImage& u0, const LinkMasks& masks) {
    if (!(u0.domain() == masks.domain())) {
        throw ParameterError("image and link masks have different grids");
    }
}

}  // namespace

std::pair<SparseMatrix, DenseVector> assemble_denoise_system(const GridImage& u0, const LinkMasks& masks,
                                                             double lambda) {
    if (!(lambda > 0.0)) {
        throw ParameterError("denoise: lambda must be positive");
    }
    require_match(u0, masks);
    const std::size_t nx = u0.nx();
    const std::size_t ny = u0.ny();
    const double h = u0.h();
    const double h2 = h * h;
    const std::size_t n = u0.node_count();
    const std::size_t stride = nx + 1;

    // Rows are emitted in node order with columns ascending: south, west, self, east, north.
    std::vector<std::size_t> row_ptr;
    std::vector<std::size_t> cols;
    std::vector<double> vals;
    row_ptr.reserve(n + 1);
    cols.reserve(5 * n);
    vals.reserve(5 * n);
    row_ptr.push_back(0);
    DenseVector b(n);
    for (std::size_t j = 0; j <= ny; ++j) {
        for (std::size_t i = 0; i <= nx; ++i) {
            const std::size_t k = u0.index(i, j);
            const double south = j > 0 ? 2.0 * masks.ay(i, j) / h2 : 0.0;
            const double west = i > 0 ? 2.0 * masks.ax(i, j) / h2 : 0.0;
            const double east = i < nx ? 2.0 * masks.ax(i + 1, j) / h2 : 0.0;
            const double north = j < ny ? 2.0 * masks.ay(i, j + 1) / h2 : 0.0;
            const auto put = [&](std::size_t col, double w) {
                if (w != 0.0) {
                    cols.push_back(col);
                    vals.push_back(-w);
                }
            };
            put(k - (j > 0 ? stride : 0), south);
            put(k - (i > 0 ? 1 : 0), west);
            cols.push_back(k);
            vals.push_back(south + west + east + north + 2.0 * lambda * h2);
            put(k + (i < nx ? 1 : 0), east);
            put(k + (j < ny ? stride : 0), north);
            row_ptr.push_back(cols.size());
            b[k] = 2.0 * lambda * h2 * u0.values()[k];
        }
    }
    return {SparseMatrix::from_csr(n, n, std::move(row_ptr), std::move(cols), std::move(vals)), std::move(b)};
}

double denoise_energy(const GridImage& u, const GridImage& u0, const LinkMasks& masks, double lambda) {
    require_match(u0, masks);
    if (!(u.domain() == u0.domain())) {
        throw ParameterError("denoise_energy: u and u0 have different grids");
    }
    const double h = u.h();
    double e = 0.0;
    for (std::size_t j = 0; j <= u.ny(); ++j) {
        for (std::size_t i = 1; i <= u.nx(); ++i) {
            const double d = (u(i, j) - u(i - 1, j)) / h;
            e += masks.ax(i, j) * d * d;
        }
    }
    for (std::size_t j = 1; j <= u.ny(); ++j) {
        for (std::size_t i = 0; i <= u.nx(); ++i) {
            const double d = (u(i, j) - u(i, j - 1)) / h;
            e += masks.ay(i, j) * d * d;
        }
    }
    double fid = 0.0;
    for (std::size_t k = 0; k < u.node_count(); ++k) {
        const double d = u0.values()[k] - u.values()[k];
        fid += d * d;
    }
    return e + lambda * h * h * fid;
}

GridImage denoise(const GridImage& u0, const CurveNetwork& network, double lambda, const GridImage* warm_start,
                  DenoiseReport* report) {
    return denoise(u0, compute_masks(network, u0.domain()), lambda, warm_start, report);
}

GridImage denoise(const GridImage& u0, const LinkMasks& masks, double lambda, const GridImage* warm_start,
                  DenoiseReport* report) {
    const auto [a, b] = assemble_denoise_system(u0, masks, lambda);
    const std::span<const double> x0 =
        warm_start != nullptr && warm_start->domain() == u0.domain() ? warm_start->values() : u0.values();
    CgOptions opt;
    opt.tol = 1e-10;
    CgReport cg;
    DenseVector x = solve_spd(a, b, x0, opt, &cg);
    if (report != nullptr) {
        report->iterations = cg.iterations;
        report->residual = cg.residual;
    }
    for (double& v : x) {
        v = std::clamp(v, 0.0, 1.0);
    }
    return GridImage(u0.domain(), std::move(x));
}

}  // namespace freeseg
