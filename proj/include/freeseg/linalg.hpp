#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace freeseg {

using DenseVector = std::vector<double>;

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

// Compressed sparse row matrix. Built once from triplets; duplicates are summed.
class SparseMatrix {
public:
    SparseMatrix() = default;
    SparseMatrix(std::size_t n_rows, std::size_t n_cols, std::vector<Triplet> triplets);

    static SparseMatrix identity(std::size_t n);
    // Adopts CSR arrays directly; columns must be strictly increasing within each row.
    static SparseMatrix from_csr(std::size_t n_rows, std::size_t n_cols, std::vector<std::size_t> row_ptr,
                                 std::vector<std::size_t> col_index, std::vector<double> values);

    std::size_t rows() const noexcept { return n_rows_; }
    std::size_t cols() const noexcept { return n_cols_; }
    std::size_t nonzeros() const noexcept { return values_.size(); }

    std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
    std::span<const std::size_t> col_index() const noexcept { return col_index_; }
    std::span<const double> values() const noexcept { return values_; }

    // Entry lookup by binary search within the row; 0 when structurally absent.
    double at(std::size_t row, std::size_t col) const;

    DenseVector multiply(std::span<const double> x) const;
    DenseVector diagonal() const;

    // max |i - j| over stored entries, split into below (lower) and above (upper) the diagonal.
    std::size_t lower_bandwidth() const;
    std::size_t upper_bandwidth() const;

    bool is_symmetric(double tol = 0.0) const;

private:
    std::size_t n_rows_ = 0;
    std::size_t n_cols_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::size_t> col_index_;
    std::vector<double> values_;
};

double norm2(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

// ||Ax - b|| / ||b||, or ||Ax - b|| when b == 0.
double relative_residual(const SparseMatrix& a, std::span<const double> x, std::span<const double> b);

struct CgOptions {
    double tol = 1e-10;
    // 0 selects the default cap of 10 * n.
    std::size_t max_iterations = 0;
};

struct CgReport {
    std::size_t iterations = 0;
    double residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradient for symmetric positive definite systems.
/// Stops once the relative residual drops to `tol` (absolute residual when b = 0).
/// Throws SolverError carrying the last residual when the iteration cap is hit.
DenseVector solve_spd(const SparseMatrix& a, std::span<const double> b, double tol);
DenseVector solve_spd(const SparseMatrix& a, std::span<const double> b, std::span<const double> x0,
                      const CgOptions& options, CgReport* report = nullptr);

/// Direct solve of a square nonsingular system by banded LU with partial pivoting.
/// The band is taken from the matrix as stored, so callers order unknowns to keep it narrow.
/// Guarantees ||Ax - b|| / ||b|| <= 1e-10 (iterative refinement is used if needed) or throws
/// SolverError.
DenseVector solve_general(const SparseMatrix& a, std::span<const double> b);

// Banded LU factorization, exposed for reuse of one factorization across right-hand sides.
class BandedLU {
public:
    explicit BandedLU(const SparseMatrix& a);

    DenseVector solve(std::span<const double> b) const;
    std::size_t size() const noexcept { return n_; }

private:
    double& at(std::size_t i, std::size_t j) { return band_[i * width_ + (j + kl_ - i)]; }
    double at(std::size_t i, std::size_t j) const { return band_[i * width_ + (j + kl_ - i)]; }

    std::size_t n_ = 0;
    std::size_t kl_ = 0;
    std::size_t ku_ = 0;
    std::size_t width_ = 0;
    std::vector<double> band_;
    std::vector<double> multipliers_;  // n * kl, multipliers of each elimination step
    std::vector<std::size_t> pivot_;
};

}  // namespace freeseg
