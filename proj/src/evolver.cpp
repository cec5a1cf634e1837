#include "freeseg/evolver.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "freeseg/errors.hpp"
#include "freeseg/linalg.hpp"

namespace freeseg {

void check(const EvolveParams& p) {
    if (!(p.sigma > 0.0) || !(p.dt > 0.0) || !(p.a > 0.0) || !(p.lambda >= 0.0)) {
        throw ParameterError("evolve: sigma, dt and a must be positive, lambda non-negative");
    }
    if (p.h_max > 0.0 && !(p.h_min > 0.0 && p.h_min < p.h_max)) {
        throw ParameterError("evolve: need 0 < h_min < h_max");
    }
}

namespace {

// sign() with sign(0) = +1, matching the >= 0 branch of the stencil selection.
double sgn(double v) { return v >= 0.0 ? 1.0 : -1.0; }

std::size_t cell_index(double coord, double h, std::size_t n) {
    const double f = std::floor(coord / h);
    if (f <= 0.0) {
        return 0;
    }
    return std::min(static_cast<std::size_t>(f), n - 1);
}

// True when one of the four nodes around the endpoint cell lies on the image border.
bool touches_border(const EndpointStencil& s, const Domain& d) {
    const std::size_t i0 = std::min(s.z1.i, s.z2.i);
    const std::size_t j0 = std::min(s.z1.j, s.z2.j);
    return i0 == 0 || j0 == 0 || i0 + 1 >= d.nx || j0 + 1 >= d.ny;
}

}  // namespace

EndpointStencil endpoint_stencil(Vec2 x, Vec2 tau, int rho, const Domain& domain) {
    if (rho != 0 && rho != 1) {
        throw ParameterError("endpoint_stencil: rho must be 0 or 1");
    }
    if (!domain.contains(x) || domain.nx == 0 || domain.ny == 0) {
        throw GeometryError("endpoint_stencil: endpoint outside the image domain");
    }
    const double h = domain.h;
    const std::size_t i0 = cell_index(x.x, h, domain.nx);
    const std::size_t j0 = cell_index(x.y, h, domain.ny);
    const double xl = static_cast<double>(i0) * h;
    const double yl = static_cast<double>(j0) * h;

    EndpointStencil s;
    const bool low_x = rho == 0 ? tau.x >= 0.0 : tau.x < 0.0;
    if (low_x) {
        s.z1 = {i0, j0};
        s.alpha_x = 1.0 - (x.x - xl) / h;
    } else {
        s.z1 = {i0 + 1, j0};
        s.alpha_x = 1.0 - (xl + h - x.x) / h;
    }
    const bool low_y = rho == 0 ? tau.y >= 0.0 : tau.y < 0.0;
    if (low_y) {
        s.z2 = {i0, j0};
        s.alpha_y = 1.0 - (x.y - yl) / h;
    } else {
        s.z2 = {i0, j0 + 1};
        s.alpha_y = 1.0 - (yl + h - x.y) / h;
    }
    s.alpha_x = std::clamp(s.alpha_x, 0.0, 1.0);
    s.alpha_y = std::clamp(s.alpha_y, 0.0, 1.0);
    return s;
}

double growth_indicator(const EndpointStencil& stencil, Vec2 tau, const GridImage& u, double sigma) {
    const double g1 = forward_diff(u, stencil.z1, 2);
    const double g2 = forward_diff(u, stencil.z2, 1);
    return std::abs(tau.x) * g1 * g1 + std::abs(tau.y) * g2 * g2 - sigma;
}

double external_term(const PolygonalCurve& curve, std::size_t j, const GridImage& u0, const GridImage& u,
                     const EvolveParams& params) {
    if (!curve.closed() && (j == 0 || j + 1 == curve.size())) {
        return 0.0;
    }
    const Vec2 x = curve.nodes.at(j);
    const Vec2 w = weighted_normal(curve, j);
    const double off = params.a * u.h();
    const double ref = sample_bilinear(u0, x);
    const double plus = ref - sample_bilinear(u, x + off * w);
    const double minus = ref - sample_bilinear(u, x - off * w);
    return params.lambda * (plus * plus - minus * minus);
}

EndpointVelocity endpoint_velocity(const PolygonalCurve& curve, CurveEnd which, const GridImage& u, double sigma) {
    const Vec2 tau = endpoint_tangent(curve, which);
    const Vec2 nu = perp(tau);
    const bool start = which == CurveEnd::Start;
    const Vec2 x = start ? curve.nodes.front() : curve.nodes.back();
    const EndpointStencil s = endpoint_stencil(x, tau, start ? 0 : 1, u.domain());
    const double d1 = forward_diff(u, s.z1, 2);
    const double d2 = forward_diff(u, s.z2, 1);
    const double g1 = d1 * d1;
    const double g2 = d2 * d2;
    const double pull = std::abs(tau.x) * g1 + std::abs(tau.y) * g2;
    const double side = sgn(tau.x) * nu.x * g1 + sgn(tau.y) * nu.y * g2;
    if (start) {
        return {sigma - pull, -side};
    }
    return {-sigma + pull, side};
}

namespace {

struct Workspace {
    std::vector<double> spacing;  // spacing[k] = |X_{k+1} - X_k|
    std::vector<Vec2> omega;
    std::vector<double> force;
    std::vector<std::size_t> pos;    // unknown block of each solved node
    std::vector<std::size_t> order;  // solved node at each block
};

// Unknown ordering. Closed curves interleave both ends of the node list so that every node
// stays within two blocks of its neighbors, giving a band of half-width 5.
void build_order(std::size_t n, bool closed, Workspace& ws) {
    ws.order.clear();
    ws.pos.assign(n, static_cast<std::size_t>(-1));
    if (closed) {
        std::size_t lo = 0;
        std::size_t hi = n - 1;
        for (std::size_t p = 0; p < n; ++p) {
            ws.order.push_back(p % 2 == 0 ? lo++ : hi--);
        }
    } else {
        for (std::size_t j = 1; j + 1 < n; ++j) {
            ws.order.push_back(j);
        }
    }
    for (std::size_t p = 0; p < ws.order.size(); ++p) {
        ws.pos[ws.order[p]] = p;
    }
}

// Semi-implicit interior update with the ends of open curves held fixed. Rows are
// (w w^T - sigma dt D2) X = w w^T X_old + dt F w, which is the (X, kappa) system with kappa
// eliminated.
std::vector<Vec2> solve_interior(const PolygonalCurve& c, const EvolveParams& p, Workspace& ws) {
    const std::size_t n = c.size();
    const bool closed = c.closed();
    build_order(n, closed, ws);
    const std::size_t m = ws.order.size();
    std::vector<Vec2> out = c.nodes;
    if (m == 0) {
        return out;
    }
    const double sdt = p.sigma * p.dt;
    std::vector<std::size_t> row_ptr{0};
    std::vector<std::size_t> cols;
    std::vector<double> vals;
    row_ptr.reserve(2 * m + 1);
    cols.reserve(8 * m);
    vals.reserve(8 * m);
    DenseVector rhs(2 * m);

    for (std::size_t q = 0; q < m; ++q) {
        const std::size_t j = ws.order[q];
        const std::size_t jm = closed ? (j + n - 1) % n : j - 1;
        const std::size_t jp = closed ? (j + 1) % n : j + 1;
        const double hm = ws.spacing[jm];
        const double hp = ws.spacing[j];
        const double wm = sdt * 2.0 / ((hm + hp) * hm);
        const double wp = sdt * 2.0 / ((hm + hp) * hp);
        const Vec2 w = ws.omega[j];
        const Vec2 xo = c.nodes[j];
        const double wx = dot(w, xo);
        const std::array<double, 2> wc{w.x, w.y};
        const std::array<double, 2> b0{wc[0] * wx + p.dt * ws.force[j] * wc[0], wc[1] * wx + p.dt * ws.force[j] * wc[1]};

        for (int comp = 0; comp < 2; ++comp) {
            std::array<std::pair<std::size_t, double>, 4> row{};
            std::size_t len = 0;
            double b = b0[comp];
            const auto neighbor = [&](std::size_t k, double weight) {
                if (ws.pos[k] == static_cast<std::size_t>(-1)) {
                    const Vec2 fixed = c.nodes[k];
                    b += weight * (comp == 0 ? fixed.x : fixed.y);
                } else {
                    row[len++] = {2 * ws.pos[k] + comp, -weight};
                }
            };
            neighbor(jm, wm);
            neighbor(jp, wp);
            row[len++] = {2 * q, wc[comp] * wc[0] + (comp == 0 ? wm + wp : 0.0)};
            row[len++] = {2 * q + 1, wc[comp] * wc[1] + (comp == 1 ? wm + wp : 0.0)};
            std::sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(len),
                      [](const auto& l, const auto& r) { return l.first < r.first; });
            for (std::size_t e = 0; e < len; ++e) {
                if (!cols.empty() && cols.size() > row_ptr.back() && cols.back() == row[e].first) {
                    vals.back() += row[e].second;
                } else {
                    cols.push_back(row[e].first);
                    vals.push_back(row[e].second);
                }
            }
            row_ptr.push_back(cols.size());
            rhs[2 * q + static_cast<std::size_t>(comp)] = b;
        }
    }
    const SparseMatrix a = SparseMatrix::from_csr(2 * m, 2 * m, std::move(row_ptr), std::move(cols), std::move(vals));
    const DenseVector x = solve_general(a, rhs);
    for (std::size_t q = 0; q < m; ++q) {
        out[ws.order[q]] = {x[2 * q], x[2 * q + 1]};
    }
    return out;
}

Vec2 edge_direction(EndpointKind kind) {
    return kind == EndpointKind::BoundaryLeft || kind == EndpointKind::BoundaryRight ? Vec2{0.0, 1.0}
                                                                                       : Vec2{1.0, 0.0};
}

Vec2 pin_to_edge(EndpointKind kind, Vec2 p, const Domain& d) {
    p = d.clamp(p);
    switch (kind) {
        case EndpointKind::BoundaryLeft: p.x = 0.0; break;
        case EndpointKind::BoundaryRight: p.x = d.width(); break;
        case EndpointKind::BoundaryBottom: p.y = 0.0; break;
        case EndpointKind::BoundaryTop: p.y = d.height(); break;
        default: break;
    }
    return p;
}

std::string end_label(const PolygonalCurve& c, CurveEnd which) {
    return "curve " + std::to_string(c.id) + (which == CurveEnd::Start ? " start" : " end");
}

}  // namespace

PolygonalCurve evolve_curve(const PolygonalCurve& curve, const Domain& domain, const GridImage* u0,
                            const GridImage* u, const EvolveParams& params, StepReport* report) {
    check(params);
    const std::size_t n = curve.size();
    const bool closed = curve.closed();
    if (closed ? n < 3 : n < 2) {
        throw GeometryError("evolve: curve " + std::to_string(curve.id) + " has too few nodes");
    }
    const bool data = u0 != nullptr && u != nullptr && params.lambda > 0.0;
    const bool endpoint_data = u != nullptr;

    thread_local Workspace ws;
    ws.spacing = segment_lengths(curve);
    for (double s : ws.spacing) {
        if (!(s > 0.0)) {
            throw GeometryError("evolve: curve " + std::to_string(curve.id) + " has coincident nodes");
        }
    }
    ws.omega.resize(n);
    ws.force.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        if (!closed && (j == 0 || j + 1 == n)) {
            ws.omega[j] = perp((j == 0 ? curve.nodes[1] - curve.nodes[0] : curve.nodes[n - 1] - curve.nodes[n - 2]) /
                               ws.spacing[j == 0 ? 0 : n - 2]);
            continue;
        }
        const Vec2 prev = curve.node(static_cast<std::ptrdiff_t>(j) - 1);
        const Vec2 next = curve.node(static_cast<std::ptrdiff_t>(j) + 1);
        const double hm = ws.spacing[closed ? (j + n - 1) % n : j - 1];
        ws.omega[j] = perp(next - prev) / (hm + ws.spacing[j]);
        if (data) {
            const double off = params.a * domain.h;
            const double ref = sample_bilinear(*u0, curve.nodes[j]);
            const double plus = ref - sample_bilinear(*u, curve.nodes[j] + off * ws.omega[j]);
            const double minus = ref - sample_bilinear(*u, curve.nodes[j] - off * ws.omega[j]);
            ws.force[j] = params.lambda * (plus * plus - minus * minus);
        }
    }

    PolygonalCurve next = curve;
    next.nodes = solve_interior(curve, params, ws);

    if (!closed) {
        // Free ends: explicit tangential and normal motion from the old configuration.
        for (CurveEnd which : {CurveEnd::Start, CurveEnd::End}) {
            if (!curve.is_free(which) || curve.is_frozen(which)) {
                continue;
            }
            const bool start = which == CurveEnd::Start;
            const Vec2 tau = endpoint_tangent(curve, which);
            const Vec2 x = start ? curve.nodes.front() : curve.nodes.back();
            EndpointVelocity v{start ? params.sigma : -params.sigma, 0.0};
            if (endpoint_data) {
                v = endpoint_velocity(curve, which, *u, params.sigma);
                const EndpointStencil s = endpoint_stencil(x, tau, start ? 0 : 1, domain);
                if (touches_border(s, domain) && v.normal != 0.0) {
                    v.normal = 0.0;
                    if (report != nullptr) {
                        report->notes.push_back(end_label(curve, which) + " near the border: normal motion frozen");
                    }
                }
            }
            if (!params.endpoint_normal_motion) {
                v.normal = 0.0;
            }
            const Vec2 moved = x + params.dt * (v.tangential * tau + v.normal * perp(tau));
            (start ? next.nodes.front() : next.nodes.back()) = moved;
        }
        // Boundary ends slide along their edge with the neighbor's displacement.
        for (CurveEnd which : {CurveEnd::Start, CurveEnd::End}) {
            const EndpointKind kind = curve.kind(which);
            if (!is_boundary(kind)) {
                continue;
            }
            const bool start = which == CurveEnd::Start;
            const std::size_t e = start ? 0 : n - 1;
            const std::size_t nb = start ? 1 : n - 2;
            const Vec2 shift = next.nodes[nb] - curve.nodes[nb];
            const Vec2 dir = edge_direction(kind);
            next.nodes[e] = pin_to_edge(kind, curve.nodes[e] + dot(shift, dir) * dir, domain);
        }
    }

    double max_disp = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        Vec2& p = next.nodes[j];
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw SolverError("evolve: non-finite node position", 0.0);
        }
        if (!domain.contains(p)) {
            p = domain.clamp(p);
            if (report != nullptr) {
                report->notes.push_back("curve " + std::to_string(curve.id) + " node " + std::to_string(j) +
                                        " clamped to the image domain");
            }
        }
        max_disp = std::max(max_disp, length(p - curve.nodes[j]));
    }
    if (report != nullptr) {
        report->max_displacement = std::max(report->max_displacement, max_disp);
    }
    if (params.h_max > 0.0) {
        next = remesh(next, params.h_min, params.h_max);
    }
    return next;
}

CurveNetwork step(const CurveNetwork& network, const GridImage& u0, const GridImage& u, const EvolveParams& params,
                  StepReport* report) {
    if (!(u.domain() == network.domain) || !(u0.domain() == network.domain)) {
        throw ParameterError("step: images and network have different grids");
    }
    CurveNetwork out;
    out.domain = network.domain;
    out.curves.reserve(network.curves.size());
    for (const auto& c : network.curves) {
        out.curves.push_back(evolve_curve(c, network.domain, &u0, &u, params, report));
    }
    return out;
}

}  // namespace freeseg
