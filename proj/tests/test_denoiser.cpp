#include <doctest.h>

#include <cmath>
#include <random>

#include "freeseg/denoiser.hpp"
#include "freeseg/errors.hpp"
#include "support/dense.hpp"

using namespace freeseg;

namespace {

LinkMasks fully_cut(const Domain& d) {
    LinkCrossings lc(d);
    for (std::size_t j = 0; j <= d.ny; ++j) {
        for (std::size_t i = 1; i <= d.nx; ++i) {
            lc.mark_x(i, j);
        }
    }
    for (std::size_t j = 1; j <= d.ny; ++j) {
        for (std::size_t i = 0; i <= d.nx; ++i) {
            lc.mark_y(i, j);
        }
    }
    return LinkMasks(lc);
}

GridImage random_image(const Domain& d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    GridImage img(d);
    for (double& v : img.values()) {
        v = dist(rng);
    }
    return img;
}

CurveNetwork vertical_cut(const Domain& d, double x) {
    return CurveNetwork{
        {make_segment(0, {x, 0}, {x, d.height()}, 1.0, EndpointKind::BoundaryBottom, EndpointKind::BoundaryTop)}, d};
}

}  // namespace

TEST_CASE("masks of an empty network are all open") {
    const Domain d{4, 3, 0.5};
    const LinkMasks m = compute_masks(CurveNetwork{{}, d}, d);
    for (std::size_t j = 0; j <= 3; ++j) {
        for (std::size_t i = 1; i <= 4; ++i) {
            CHECK(m.ax(i, j) == 0.25);
        }
    }
    for (std::size_t j = 1; j <= 3; ++j) {
        for (std::size_t i = 0; i <= 4; ++i) {
            CHECK(m.ay(i, j) == 0.25);
        }
    }
}

TEST_CASE("vertical curve masks one column of horizontal links") {
    const Domain d{6, 4, 1.0};
    const LinkMasks m = compute_masks(vertical_cut(d, 2.5), d);
    for (std::size_t j = 0; j <= 4; ++j) {
        for (std::size_t i = 1; i <= 6; ++i) {
            CHECK(m.ax(i, j) == (i == 3 ? 0.0 : 1.0));
        }
    }
    for (std::size_t j = 1; j <= 4; ++j) {
        for (std::size_t i = 0; i <= 6; ++i) {
            CHECK(m.ay(i, j) == 1.0);
        }
    }
}

TEST_CASE("L-shaped curve masks equal a brute-force intersection scan") {
    const Domain d{8, 8, 1.0};
    PolygonalCurve l;
    l.nodes = {{1.3, 6.7}, {1.3, 2.2}, {6.6, 2.2}};
    const LinkMasks m = compute_masks(CurveNetwork{{l}, d}, d);
    for (std::size_t j = 0; j <= 8; ++j) {
        for (std::size_t i = 1; i <= 8; ++i) {
            bool hit = false;
            for (std::size_t k = 0; k + 1 < l.size(); ++k) {
                hit = hit || oracle::segments_meet({l.nodes[k].x, l.nodes[k].y}, {l.nodes[k + 1].x, l.nodes[k + 1].y},
                                                   {i - 1.0, 1.0 * j}, {1.0 * i, 1.0 * j});
            }
            CHECK(m.ax(i, j) == (hit ? 0.0 : 1.0));
        }
    }
    for (std::size_t j = 1; j <= 8; ++j) {
        for (std::size_t i = 0; i <= 8; ++i) {
            bool hit = false;
            for (std::size_t k = 0; k + 1 < l.size(); ++k) {
                hit = hit || oracle::segments_meet({l.nodes[k].x, l.nodes[k].y}, {l.nodes[k + 1].x, l.nodes[k + 1].y},
                                                   {1.0 * i, j - 1.0}, {1.0 * i, 1.0 * j});
            }
            CHECK(m.ay(i, j) == (hit ? 0.0 : 1.0));
        }
    }
}

TEST_CASE("two-node grid matches the hand-solved system") {
    const Domain d{1, 0, 1.0};
    GridImage u0(d);
    u0(0, 0) = 0.2;
    u0(1, 0) = 0.9;
    const double lambda = 0.7;
    // (w + lambda) u0 - w u1 = lambda f0 and -w u0 + (w + lambda) u1 = lambda f1, w = A / h^2 = 1.
    const double w = 1.0;
    const double det = (w + lambda) * (w + lambda) - w * w;
    const double x0 = (lambda * 0.2 * (w + lambda) + w * lambda * 0.9) / det;
    const double x1 = ((w + lambda) * lambda * 0.9 + w * lambda * 0.2) / det;
    const LinkMasks m = compute_masks(CurveNetwork{{}, d}, d);
    const auto [a, b] = assemble_denoise_system(u0, m, lambda);
    CHECK(a.rows() == 2);
    CHECK(a.at(0, 0) == doctest::Approx(2.0 * (w + lambda)));
    CHECK(a.at(0, 1) == doctest::Approx(-2.0 * w));
    CHECK(b[0] == doctest::Approx(2.0 * lambda * 0.2));
    const GridImage u = denoise(u0, m, lambda);
    CHECK(u(0, 0) == doctest::Approx(x0).epsilon(1e-9));
    CHECK(u(1, 0) == doctest::Approx(x1).epsilon(1e-9));
}

TEST_CASE("assembled system is symmetric and matches the energy gradient") {
    const Domain d{5, 4, 0.5};
    const GridImage u0 = random_image(d, 1);
    const GridImage probe = random_image(d, 2);
    const LinkMasks m = compute_masks(vertical_cut(d, 1.2), d);
    const double lambda = 0.3;
    const auto [a, b] = assemble_denoise_system(u0, m, lambda);
    CHECK(a.is_symmetric(1e-14));
    // Gradient of E_discr at probe equals A probe - b.
    const auto ap = a.multiply(probe.values());
    const double eps = 1e-6;
    for (std::size_t k = 0; k < probe.node_count(); k += 3) {
        GridImage up = probe;
        GridImage dn = probe;
        up.values()[k] += eps;
        dn.values()[k] -= eps;
        const double fd = (denoise_energy(up, u0, m, lambda) - denoise_energy(dn, u0, m, lambda)) / (2.0 * eps);
        CHECK(fd == doctest::Approx(ap[k] - b[k]).epsilon(1e-6));
    }
}

TEST_CASE("fidelity dominance and full cut") {
    const Domain d{6, 6, 1.0};
    const GridImage u0 = random_image(d, 3);
    const GridImage big = denoise(u0, compute_masks(CurveNetwork{{}, d}, d), 1e6);
    for (std::size_t k = 0; k < u0.node_count(); ++k) {
        CHECK(std::abs(big.values()[k] - u0.values()[k]) <= 1e-4);
    }
    const GridImage cut = denoise(u0, fully_cut(d), 0.01);
    for (std::size_t k = 0; k < u0.node_count(); ++k) {
        CHECK(cut.values()[k] == doctest::Approx(u0.values()[k]).epsilon(1e-12));
    }
}

TEST_CASE("constant image is a fixed point") {
    const Domain d{7, 5, 1.0};
    const GridImage u0(d, 0.37);
    const GridImage u = denoise(u0, vertical_cut(d, 3.5), 0.05);
    for (double v : u.values()) {
        CHECK(v == doctest::Approx(0.37).epsilon(1e-12));
    }
}

TEST_CASE("single bright pixel spreads") {
    const Domain d{8, 8, 1.0};
    GridImage u0(d, 0.0);
    u0(4, 4) = 1.0;
    const GridImage u = denoise(u0, CurveNetwork{{}, d}, 0.5);
    CHECK(u(4, 4) > 0.0);
    CHECK(u(4, 4) < 1.0);
    CHECK(u(5, 4) > 0.0);
}

TEST_CASE("exact separating curve reproduces a two-constant image") {
    const Domain d{10, 8, 1.0};
    const GridImage u0 = generate_two_region(10, 8, TwoRegionSpec{HalfPlaneRegion{5.5}, 0.2, 0.8});
    const GridImage u = denoise(u0, vertical_cut(d, 5.5), 0.01);
    for (std::size_t k = 0; k < u0.node_count(); ++k) {
        CHECK(u.values()[k] == doctest::Approx(u0.values()[k]).epsilon(1e-9));
    }
}

TEST_CASE("solution is optimal: residual and perturbation checks") {
    const Domain d{12, 10, 1.0};
    const GridImage u0 = add_noise(generate_two_region(12, 10, TwoRegionSpec{DiskRegion{{6, 5}, 3.5}, 0.8, 0.2}),
                                   0.1, 4);
    const CurveNetwork net{{make_circle(0, {6, 5}, 3.5, 24)}, d};
    const LinkMasks m = compute_masks(net, d);
    const double lambda = 0.05;
    const GridImage u = denoise(u0, m, lambda);
    const auto [a, b] = assemble_denoise_system(u0, m, lambda);
    CHECK(relative_residual(a, u.values(), b) <= 1e-10);
    const double e0 = denoise_energy(u, u0, m, lambda);
    CHECK(e0 <= denoise_energy(u0, u0, m, lambda));
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int t = 0; t < 100; ++t) {
        GridImage p = u;
        std::vector<double> dir(u.node_count());
        double n2 = 0.0;
        for (double& v : dir) {
            v = g(rng);
            n2 += v * v;
        }
        const double s = 1e-3 / std::sqrt(n2);
        for (std::size_t k = 0; k < dir.size(); ++k) {
            p.values()[k] += s * dir[k];
        }
        CHECK(denoise_energy(p, u0, m, lambda) >= e0 - 1e-9);
    }
}

TEST_CASE("warm start does not change the result") {
    const Domain d{9, 9, 1.0};
    const GridImage u0 = random_image(d, 5);
    const CurveNetwork net{{}, d};
    const GridImage cold = denoise(u0, net, 0.2);
    const GridImage warm = denoise(u0, net, 0.2, &cold);
    for (std::size_t k = 0; k < u0.node_count(); ++k) {
        CHECK(std::abs(cold.values()[k] - warm.values()[k]) <= 1e-8);
    }
}

TEST_CASE("invalid inputs") {
    const Domain d{3, 3, 1.0};
    const GridImage u0(d, 0.5);
    CHECK_THROWS_AS(denoise(u0, CurveNetwork{{}, d}, 0.0), ParameterError);
    CHECK_THROWS_AS(denoise(u0, compute_masks(CurveNetwork{{}, Domain{4, 3, 1.0}}, Domain{4, 3, 1.0}), 1.0),
                    ParameterError);
}
