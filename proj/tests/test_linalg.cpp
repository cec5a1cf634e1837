#include <doctest.h>

#include <random>

#include "freeseg/errors.hpp"
#include "freeseg/linalg.hpp"
#include "support/dense.hpp"

using namespace freeseg;

namespace {

oracle::Matrix to_dense(const SparseMatrix& a) {
    oracle::Matrix m(a.rows(), std::vector<double>(a.cols(), 0.0));
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < a.cols(); ++c) {
            m[r][c] = a.at(r, c);
        }
    }
    return m;
}

// 5-point Laplacian plus lambda * I on an n x n node grid (Neumann border).
SparseMatrix grid_laplacian(std::size_t n, double lambda) {
    std::vector<Triplet> t;
    const auto id = [n](std::size_t i, std::size_t j) { return j * n + i; };
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            double diag = lambda;
            const auto link = [&](std::size_t k) {
                t.push_back({id(i, j), k, -1.0});
                diag += 1.0;
            };
            if (i > 0) link(id(i - 1, j));
            if (i + 1 < n) link(id(i + 1, j));
            if (j > 0) link(id(i, j - 1));
            if (j + 1 < n) link(id(i, j + 1));
            t.push_back({id(i, j), id(i, j), diag});
        }
    }
    return SparseMatrix(n * n, n * n, std::move(t));
}

}  // namespace

TEST_CASE("triplet assembly sums duplicates and sorts columns") {
    const SparseMatrix a(2, 3, {{1, 2, 1.0}, {0, 1, 2.0}, {1, 2, 3.0}, {1, 0, -1.0}});
    CHECK(a.nonzeros() == 3);
    CHECK(a.at(1, 2) == 4.0);
    CHECK(a.at(0, 1) == 2.0);
    CHECK(a.at(0, 0) == 0.0);
    CHECK_THROWS_AS(SparseMatrix(2, 2, {{2, 0, 1.0}}), ParameterError);
    const auto y = a.multiply(std::vector<double>{1.0, 1.0, 1.0});
    CHECK(y[0] == 2.0);
    CHECK(y[1] == 3.0);
}

TEST_CASE("solve_spd on identity and diagonal systems") {
    const auto x = solve_spd(SparseMatrix::identity(3), std::vector<double>{1, 2, 3}, 1e-12);
    CHECK(x[0] == doctest::Approx(1.0));
    CHECK(x[1] == doctest::Approx(2.0));
    CHECK(x[2] == doctest::Approx(3.0));

    const SparseMatrix d(2, 2, {{0, 0, 2.0}, {1, 1, 4.0}});
    const auto y = solve_spd(d, std::vector<double>{2, 8}, 1e-12);
    CHECK(y[0] == doctest::Approx(1.0));
    CHECK(y[1] == doctest::Approx(2.0));
}

TEST_CASE("solve_spd matches dense elimination on a 4x4 grid Laplacian") {
    const SparseMatrix a = grid_laplacian(4, 0.3);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> b(16);
    for (double& v : b) {
        v = dist(rng);
    }
    const auto x = solve_spd(a, b, 1e-12);
    const auto ref = oracle::dense_solve(to_dense(a), b);
    CHECK(relative_residual(a, x, b) <= 1e-12);
    for (std::size_t i = 0; i < 16; ++i) {
        CHECK(x[i] == doctest::Approx(ref[i]).epsilon(1e-9));
    }
}

TEST_CASE("solve_spd with zero right-hand side returns zero") {
    const auto x = solve_spd(grid_laplacian(3, 1.0), std::vector<double>(9, 0.0), 1e-10);
    for (double v : x) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("solve_spd reports non-convergence with its residual") {
    CgOptions opts;
    opts.max_iterations = 1;
    const SparseMatrix a = grid_laplacian(6, 0.01);
    std::vector<double> b(36, 0.0);
    b[0] = 1.0;
    b[35] = -1.0;
    try {
        solve_spd(a, b, std::vector<double>(36, 0.0), opts);
        FAIL("expected SolverError");
    } catch (const SolverError& e) {
        CHECK(e.residual() > 1e-10);
    }
}

TEST_CASE("solve_general small cases") {
    const auto x = solve_general(SparseMatrix::identity(2), std::vector<double>{5, -1});
    CHECK(x[0] == doctest::Approx(5.0));
    CHECK(x[1] == doctest::Approx(-1.0));

    const SparseMatrix p(2, 2, {{0, 1, 1.0}, {1, 0, 1.0}});
    const auto y = solve_general(p, std::vector<double>{3, 4});
    CHECK(y[0] == doctest::Approx(4.0));
    CHECK(y[1] == doctest::Approx(3.0));
}

TEST_CASE("solve_general matches dense elimination on random diagonally dominant systems") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, 19);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<Triplet> t;
        std::vector<double> rowsum(20, 0.0);
        for (int k = 0; k < 60; ++k) {
            const std::size_t r = pick(rng);
            const std::size_t c = pick(rng);
            if (r == c) {
                continue;
            }
            const double v = dist(rng);
            t.push_back({r, c, v});
            rowsum[r] += std::abs(v);
        }
        for (std::size_t r = 0; r < 20; ++r) {
            t.push_back({r, r, rowsum[r] + 1.0 + std::abs(dist(rng))});
        }
        const SparseMatrix a(20, 20, t);
        std::vector<double> b(20);
        for (double& v : b) {
            v = dist(rng);
        }
        const auto x = solve_general(a, b);
        const auto ref = oracle::dense_solve(to_dense(a), b);
        CHECK(relative_residual(a, x, b) <= 1e-10);
        for (std::size_t i = 0; i < 20; ++i) {
            CHECK(std::abs(x[i] - ref[i]) <= 1e-10 * (1.0 + std::abs(ref[i])));
        }
    }
}

TEST_CASE("solve_general needs pivoting on a zero diagonal") {
    const SparseMatrix a(3, 3, {{0, 1, 2.0}, {0, 2, 1.0}, {1, 0, 1.0}, {1, 2, 1.0}, {2, 0, 3.0}, {2, 1, 1.0}});
    const std::vector<double> b{1, 2, 3};
    const auto x = solve_general(a, b);
    const auto ref = oracle::dense_solve(to_dense(a), b);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(x[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    }
}

TEST_CASE("solve_general rejects singular matrices") {
    const SparseMatrix a(2, 2, {{0, 0, 1.0}, {0, 1, 2.0}, {1, 0, 2.0}, {1, 1, 4.0}});
    CHECK_THROWS_AS(solve_general(a, std::vector<double>{1, 2}), SolverError);
}

TEST_CASE("solve_spd and solve_general agree on SPD systems") {
    const SparseMatrix a = grid_laplacian(5, 0.5);
    std::vector<double> b(25);
    for (std::size_t i = 0; i < 25; ++i) {
        b[i] = std::sin(static_cast<double>(i));
    }
    const auto x = solve_spd(a, b, 1e-12);
    const auto y = solve_general(a, b);
    for (std::size_t i = 0; i < 25; ++i) {
        CHECK(std::abs(x[i] - y[i]) <= 1e-8);
    }
}

TEST_CASE("bandwidth and symmetry queries") {
    const SparseMatrix a = grid_laplacian(4, 1.0);
    CHECK(a.lower_bandwidth() == 4);
    CHECK(a.upper_bandwidth() == 4);
    CHECK(a.is_symmetric());
    const SparseMatrix b(2, 2, {{0, 1, 1.0}});
    CHECK_FALSE(b.is_symmetric());
}
