#include <doctest.h>

#include <cmath>
#include <random>

#include "freeseg/denoiser.hpp"
#include "freeseg/energy.hpp"
#include "freeseg/errors.hpp"
#include "freeseg/evolver.hpp"

using namespace freeseg;

namespace {

GridImage random_image(const Domain& d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    GridImage img(d);
    for (double& v : img.values()) {
        v = dist(rng);
    }
    return img;
}

PolygonalCurve unit_square(Vec2 corner) {
    PolygonalCurve c;
    c.start = c.end = EndpointKind::Closed;
    c.nodes = {corner, corner + Vec2{1, 0}, corner + Vec2{1, 1}, corner + Vec2{0, 1}};
    return c;
}

// Plain sum over every link of q^2, with no weights.
double plain_gradient(const GridImage& u) {
    double s = 0.0;
    for (std::size_t j = 0; j <= u.ny(); ++j) {
        for (std::size_t i = 0; i <= u.nx(); ++i) {
            if (i < u.nx()) s += std::pow(u(i + 1, j) - u(i, j), 2);
            if (j < u.ny()) s += std::pow(u(i, j + 1) - u(i, j), 2);
        }
    }
    return s;
}

}  // namespace

TEST_CASE("energy of the empty network on a constant image is zero") {
    const Domain d{5, 5, 1.0};
    const GridImage u(d, 0.4);
    const EnergyBreakdown e = discrete_ms_energy(CurveNetwork{{}, d}, u, u, 0.1, 2.0);
    CHECK(e.total == 0.0);
    CHECK(e.length_term == 0.0);
    CHECK(e.gradient_term == 0.0);
    CHECK(e.fidelity_term == 0.0);
}

TEST_CASE("unit square on a constant image is pure length") {
    const Domain d{6, 6, 1.0};
    const GridImage u(d, 0.7);
    const EnergyBreakdown e = discrete_ms_energy(CurveNetwork{{unit_square({2.5, 2.5})}, d}, u, u, 0.3, 1.0);
    CHECK(e.total == doctest::Approx(4.0 * 0.3));
}

TEST_CASE("terms add up and fidelity uses every node") {
    const Domain d{7, 5, 1.0};
    const GridImage u = random_image(d, 1);
    const GridImage u0 = random_image(d, 2);
    const EnergyBreakdown e = discrete_ms_energy(CurveNetwork{{}, d}, u, u0, 0.3, 0.25);
    double fid = 0.0;
    for (std::size_t k = 0; k < u.node_count(); ++k) {
        fid += std::pow(u0.values()[k] - u.values()[k], 2);
    }
    CHECK(e.fidelity_term == doctest::Approx(0.25 * fid));
    CHECK(e.gradient_term == doctest::Approx(plain_gradient(u)));
    CHECK(e.total == doctest::Approx(e.length_term + e.gradient_term + e.fidelity_term));
}

TEST_CASE("with binary weights the energy is length plus the smoothing energy") {
    const Domain d{12, 10, 1.0};
    const GridImage u = random_image(d, 3);
    const GridImage u0 = random_image(d, 4);
    const CurveNetwork net{{make_circle(0, {6, 5}, 3.3, 17)}, d};
    const EnergyBreakdown e = discrete_ms_energy(net, u, u0, 0.2, 0.4);
    const double smooth = denoise_energy(u, u0, compute_masks(net, d), 0.4);
    CHECK(e.total == doctest::Approx(0.2 * total_length(net) + smooth).epsilon(1e-12));
}

TEST_CASE("fractional weights sit on the designated endpoint links") {
    const Domain d{10, 10, 1.0};
    PolygonalCurve c = make_segment(0, {3.25, 4.5}, {8.0, 4.5}, 1.0);
    const LinkWeights w(CurveNetwork{{c}, d});
    CHECK(w.vertical(3, 4) == doctest::Approx(0.25));  // start: z1 = (3, 4), alpha_x = 0.75
    CHECK(w.horizontal(3, 4) == doctest::Approx(0.5));  // start: z2 = (3, 4), alpha_y = 0.5
    CHECK(w.vertical(4, 4) == 0.0);                     // crossed
    CHECK(w.vertical(8, 4) == 0.0);                     // touched by the end node
    CHECK(w.vertical(9, 4) == doctest::Approx(1.0));    // end on the grid line: z1 = (9, 4), alpha 0
    CHECK(w.vertical(2, 4) == 1.0);
}

TEST_CASE("first variation: shifting a free end matches sigma eps - eps g^2") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> frac(0.1, 0.9);
    std::uniform_int_distribution<int> cell(2, 12);
    const Domain d{20, 20, 1.0};
    const double sigma = 0.03;
    const double eps = 0.01;
    for (int t = 0; t < 20; ++t) {
        const GridImage u = random_image(d, 100 + t);
        const GridImage u0 = random_image(d, 200 + t);
        const Vec2 start{cell(rng) + frac(rng), cell(rng) + frac(rng)};
        const PolygonalCurve c = make_segment(0, start, start + Vec2{5.0, 0.0}, 1.0);
        PolygonalCurve longer = c;
        longer.nodes.front().x -= eps;  // enter the endpoint cell further
        const double e0 = discrete_ms_energy(CurveNetwork{{c}, d}, u, u0, sigma, 1.0).total;
        const double e1 = discrete_ms_energy(CurveNetwork{{longer}, d}, u, u0, sigma, 1.0).total;
        const auto i0 = static_cast<std::size_t>(std::floor(start.x));
        const auto j0 = static_cast<std::size_t>(std::floor(start.y));
        const double g = u(i0, j0 + 1) - u(i0, j0);
        CHECK(std::abs((e1 - e0) - (sigma * eps - eps * g * g)) <= 1e-6);
    }
}

TEST_CASE("first variation for oblique tangents is minus the growth indicator") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> frac(0.2, 0.8);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
    const Domain d{24, 24, 1.0};
    const double sigma = 0.05;
    const double eps = 1e-4;
    for (int t = 0; t < 20; ++t) {
        const GridImage u = random_image(d, 300 + t);
        const Vec2 x0{10.0 + frac(rng), 10.0 + frac(rng)};
        const double phi = angle(rng);
        const Vec2 tau{std::cos(phi), std::sin(phi)};
        PolygonalCurve c;
        c.nodes = {x0, x0 + 3.0 * tau, x0 + 6.0 * tau};
        PolygonalCurve longer = c;
        longer.nodes.front() = x0 - eps * tau;
        const double e0 = discrete_ms_energy(CurveNetwork{{c}, d}, u, u, sigma, 1.0).total;
        const double e1 = discrete_ms_energy(CurveNetwork{{longer}, d}, u, u, sigma, 1.0).total;
        const EndpointStencil s = endpoint_stencil(x0, tau, 0, d);
        CHECK((e1 - e0) / eps == doctest::Approx(-growth_indicator(s, tau, u, sigma)).epsilon(1e-6));
    }
}

TEST_CASE("region labels") {
    const Domain d{10, 10, 1.0};
    CHECK(label_regions(compute_masks(CurveNetwork{{}, d}, d)).count == 1);
    const CurveNetwork net{{make_circle(0, {5, 5}, 2.5, 20)}, d};
    const RegionLabels r = label_regions(compute_masks(net, d));
    CHECK(r.count == 2);
    const GridImage probe(d);
    CHECK(r.label[probe.index(5, 5)] != r.label[probe.index(0, 0)]);
    CHECK(r.label[probe.index(0, 0)] == r.label[probe.index(10, 10)]);
}

TEST_CASE("piecewise-constant energy") {
    const Domain d{20, 20, 1.0};
    const CurveNetwork on{{make_circle(0, {10, 10}, 5.5, 40)}, d};
    SUBCASE("constant image") {
        const PcEnergy e = pc_energy(on, GridImage(d, 0.3), 0.1, 1.0);
        CHECK(e.fidelity_term == doctest::Approx(0.0));
        CHECK(e.total == doctest::Approx(0.1 * total_length(on)));
    }
    SUBCASE("curve on the disk boundary has zero fidelity") {
        const GridImage u0 = generate_two_region(20, 20, TwoRegionSpec{DiskRegion{{10, 10}, 5.5}, 0.8, 0.2});
        const PcEnergy e = pc_energy(on, u0, 0.1, 1.0);
        CHECK(e.fidelity_term == doctest::Approx(0.0));
        const CurveNetwork off{{make_circle(0, {11.5, 10}, 5.5, 40)}, d};
        CHECK(pc_energy(off, u0, 0.1, 1.0).total > e.total);
    }
    SUBCASE("region means minimize the fidelity term") {
        const GridImage u0 = random_image(d, 9);
        const double lambda = 1.0;
        const PcEnergy e = pc_energy(on, u0, 0.1, lambda);
        const RegionMeans rm = region_means(u0, compute_masks(on, d));
        REQUIRE(rm.means.size() == 2);
        for (std::size_t k = 0; k < 2; ++k) {
            for (double delta : {-1e-3, 1e-3}) {
                double fid = 0.0;
                for (std::size_t n = 0; n < u0.node_count(); ++n) {
                    const std::size_t lab = rm.regions.label[n];
                    const double c = rm.means[lab] + (lab == k ? delta : 0.0);
                    fid += std::pow(u0.values()[n] - c, 2);
                }
                CHECK(e.length_term + lambda * fid > e.total);
            }
        }
    }
    SUBCASE("free ends are rejected, boundary ends are allowed") {
        const CurveNetwork free_end{{make_segment(0, {2, 2}, {8, 8}, 1.0)}, d};
        CHECK_THROWS_AS(pc_energy(free_end, GridImage(d, 0.5), 0.1, 1.0), ParameterError);
        const CurveNetwork across{
            {make_segment(0, {0, 9.5}, {20, 9.5}, 2.0, EndpointKind::BoundaryLeft, EndpointKind::BoundaryRight)}, d};
        CHECK(pc_energy(across, GridImage(d, 0.5), 0.1, 1.0).means.size() == 2);
    }
}

TEST_CASE("jump across a curve") {
    const Domain d{20, 20, 1.0};
    const PolygonalCurve c = make_segment(0, {0, 9.5}, {20, 9.5}, 2.0, EndpointKind::BoundaryLeft,
                                          EndpointKind::BoundaryRight);
    CHECK(jump_across(c, 4, GridImage(d, 0.6), 1.5) == 0.0);
    const GridImage step = generate_two_region(20, 20, TwoRegionSpec{StripeRegion{15.0, 5.4, 20.0}, 0.9, 0.2});
    CHECK(jump_across(c, 4, step, 1.5) == doctest::Approx(0.7));

    const GridImage crack = generate_crack_tip(60, 60);
    const CrackTipParams cp = crack_tip_params(60, 60);
    const PolygonalCurve along = make_segment(0, {0, 30}, {20, 30}, 1.0, EndpointKind::BoundaryLeft);
    // Node 5 sits at x = 5, radius 25 from the center.
    const double want = 2.0 * cp.amplitude * std::sqrt(25.0);
    CHECK(jump_across(along, 5, crack, 1.0) == doctest::Approx(want).epsilon(0.02));
}
