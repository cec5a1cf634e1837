#include "freeseg/energy.hpp"

#include <cmath>

#include "freeseg/errors.hpp"
#include "freeseg/evolver.hpp"

namespace freeseg {

LinkWeights::LinkWeights(const CurveNetwork& network)
    : d_(network.domain), v_((d_.nx + 1) * d_.ny, 1.0), h_(d_.nx * (d_.ny + 1), 1.0) {
    const LinkCrossings cuts = gridline_crossings(network, d_);
    for (std::size_t j = 0; j < d_.ny; ++j) {
        for (std::size_t i = 0; i <= d_.nx; ++i) {
            if (cuts.y_cut(i, j + 1)) {
                v_[j * (d_.nx + 1) + i] = 0.0;
            }
        }
    }
    for (std::size_t j = 0; j <= d_.ny; ++j) {
        for (std::size_t i = 0; i < d_.nx; ++i) {
            if (cuts.x_cut(i + 1, j)) {
                h_[j * d_.nx + i] = 0.0;
            }
        }
    }
    for (const auto& c : network.curves) {
        if (c.closed()) {
            continue;
        }
        for (CurveEnd which : {CurveEnd::Start, CurveEnd::End}) {
            if (!c.is_free(which)) {
                continue;
            }
            const bool start = which == CurveEnd::Start;
            const Vec2 x = start ? c.nodes.front() : c.nodes.back();
            const EndpointStencil s = endpoint_stencil(x, endpoint_tangent(c, which), start ? 0 : 1, d_);
            v_[s.z1.j * (d_.nx + 1) + s.z1.i] = 1.0 - s.alpha_x;
            h_[s.z2.j * d_.nx + s.z2.i] = 1.0 - s.alpha_y;
        }
    }
}

EnergyBreakdown discrete_ms_energy(const CurveNetwork& network, const GridImage& u, const GridImage& u0, double sigma,
                                   double lambda) {
    if (!(u.domain() == u0.domain()) || !(u.domain() == network.domain)) {
        throw ParameterError("discrete_ms_energy: fields and network have different grids");
    }
    const Domain& d = network.domain;
    const double h = d.h;
    const LinkWeights w(network);
    EnergyBreakdown e;
    e.length_term = sigma * total_length(network);
    double grad = 0.0;
    for (std::size_t j = 0; j < d.ny; ++j) {
        for (std::size_t i = 0; i <= d.nx; ++i) {
            const double q = u(i, j + 1) - u(i, j);
            grad += w.vertical(i, j) * q * q;
        }
    }
    for (std::size_t j = 0; j <= d.ny; ++j) {
        for (std::size_t i = 0; i < d.nx; ++i) {
            const double q = u(i + 1, j) - u(i, j);
            grad += w.horizontal(i, j) * q * q;
        }
    }
    // h^2 (q / h)^2 = q^2
    e.gradient_term = grad;
    double fid = 0.0;
    for (std::size_t k = 0; k < u.node_count(); ++k) {
        const double r = u0.values()[k] - u.values()[k];
        fid += r * r;
    }
    e.fidelity_term = lambda * h * h * fid;
    e.total = e.length_term + e.gradient_term + e.fidelity_term;
    return e;
}

RegionLabels label_regions(const LinkMasks& masks) {
    const Domain& d = masks.domain();
    const std::size_t stride = d.nx + 1;
    const std::size_t n = stride * (d.ny + 1);
    constexpr auto unset = static_cast<std::size_t>(-1);
    RegionLabels out;
    out.label.assign(n, unset);
    std::vector<std::size_t> stack;
    for (std::size_t seed = 0; seed < n; ++seed) {
        if (out.label[seed] != unset) {
            continue;
        }
        const std::size_t id = out.count++;
        out.label[seed] = id;
        stack.push_back(seed);
        while (!stack.empty()) {
            const std::size_t k = stack.back();
            stack.pop_back();
            const std::size_t i = k % stride;
            const std::size_t j = k / stride;
            const auto visit = [&](std::size_t nb, bool open) {
                if (open && out.label[nb] == unset) {
                    out.label[nb] = id;
                    stack.push_back(nb);
                }
            };
            if (i > 0) visit(k - 1, masks.ax(i, j) != 0.0);
            if (i < d.nx) visit(k + 1, masks.ax(i + 1, j) != 0.0);
            if (j > 0) visit(k - stride, masks.ay(i, j) != 0.0);
            if (j < d.ny) visit(k + stride, masks.ay(i, j + 1) != 0.0);
        }
    }
    return out;
}

RegionMeans region_means(const GridImage& u0, const LinkMasks& masks) {
    if (!(u0.domain() == masks.domain())) {
        throw ParameterError("region_means: image and masks have different grids");
    }
    RegionMeans r{label_regions(masks), {}, GridImage(u0.domain())};
    std::vector<double> sum(r.regions.count, 0.0);
    std::vector<std::size_t> cnt(r.regions.count, 0);
    for (std::size_t k = 0; k < u0.node_count(); ++k) {
        sum[r.regions.label[k]] += u0.values()[k];
        ++cnt[r.regions.label[k]];
    }
    r.means.resize(r.regions.count);
    for (std::size_t c = 0; c < r.regions.count; ++c) {
        r.means[c] = sum[c] / static_cast<double>(cnt[c]);
    }
    auto f = r.field.values();
    for (std::size_t k = 0; k < f.size(); ++k) {
        f[k] = r.means[r.regions.label[k]];
    }
    return r;
}

PcEnergy pc_energy(const CurveNetwork& network, const GridImage& u0, double sigma, double lambda) {
    for (const auto& c : network.curves) {
        if (c.start == EndpointKind::Free || c.end == EndpointKind::Free) {
            throw ParameterError("pc_energy: curve " + std::to_string(c.id) + " has a free endpoint");
        }
    }
    const RegionMeans r = region_means(u0, compute_masks(network, u0.domain()));
    PcEnergy e;
    e.length_term = sigma * total_length(network);
    double fid = 0.0;
    for (std::size_t k = 0; k < u0.node_count(); ++k) {
        const double d = u0.values()[k] - r.field.values()[k];
        fid += d * d;
    }
    e.fidelity_term = lambda * u0.h() * u0.h() * fid;
    e.total = e.length_term + e.fidelity_term;
    e.means = r.means;
    return e;
}

double jump_across(const PolygonalCurve& curve, std::size_t j, const GridImage& field, double a) {
    const Vec2 x = curve.nodes.at(j);
    const Vec2 w = weighted_normal(curve, j);
    const double off = a * field.h();
    return std::abs(sample_bilinear(field, x + off * w) - sample_bilinear(field, x - off * w));
}

}  // namespace freeseg
