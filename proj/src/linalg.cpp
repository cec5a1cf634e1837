#include "freeseg/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "freeseg/errors.hpp"

namespace freeseg {

SparseMatrix::SparseMatrix(std::size_t n_rows, std::size_t n_cols, std::vector<Triplet> triplets)
    : n_rows_(n_rows), n_cols_(n_cols) {
    for (const auto& t : triplets) {
        if (t.row >= n_rows || t.col >= n_cols) {
            throw ParameterError("sparse matrix entry out of range");
        }
    }
    std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });

    row_ptr_.assign(n_rows + 1, 0);
    col_index_.reserve(triplets.size());
    values_.reserve(triplets.size());
    for (std::size_t k = 0; k < triplets.size(); ++k) {
        const auto& t = triplets[k];
        if (!col_index_.empty() && k > 0 && triplets[k - 1].row == t.row &&
            triplets[k - 1].col == t.col) {
            values_.back() += t.value;
            continue;
        }
        col_index_.push_back(t.col);
        values_.push_back(t.value);
        ++row_ptr_[t.row + 1];
    }
    for (std::size_t r = 0; r < n_rows; ++r) {
        row_ptr_[r + 1] += row_ptr_[r];
    }
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
    std::vector<Triplet> t;
    t.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        t.push_back({i, i, 1.0});
    }
    return SparseMatrix(n, n, std::move(t));
}

SparseMatrix SparseMatrix::from_csr(std::size_t n_rows, std::size_t n_cols, std::vector<std::size_t> row_ptr,
                                    std::vector<std::size_t> col_index, std::vector<double> values) {
    if (row_ptr.size() != n_rows + 1 || row_ptr.front() != 0 || row_ptr.back() != col_index.size() ||
        col_index.size() != values.size()) {
        throw ParameterError("from_csr: inconsistent array sizes");
    }
    for (std::size_t r = 0; r < n_rows; ++r) {
        if (row_ptr[r] > row_ptr[r + 1]) {
            throw ParameterError("from_csr: row pointers must be non-decreasing");
        }
        for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
            if (col_index[k] >= n_cols || (k > row_ptr[r] && col_index[k] <= col_index[k - 1])) {
                throw ParameterError("from_csr: column indices out of range or not increasing");
            }
        }
    }
    SparseMatrix m;
    m.n_rows_ = n_rows;
    m.n_cols_ = n_cols;
    m.row_ptr_ = std::move(row_ptr);
    m.col_index_ = std::move(col_index);
    m.values_ = std::move(values);
    return m;
}

double SparseMatrix::at(std::size_t row, std::size_t col) const {
    const auto begin = col_index_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[row]);
    const auto end = col_index_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[row + 1]);
    const auto it = std::lower_bound(begin, end, col);
    if (it == end || *it != col) {
        return 0.0;
    }
    return values_[static_cast<std::size_t>(it - col_index_.begin())];
}

DenseVector SparseMatrix::multiply(std::span<const double> x) const {
    DenseVector y(n_rows_, 0.0);
    for (std::size_t r = 0; r < n_rows_; ++r) {
        double s = 0.0;
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            s += values_[k] * x[col_index_[k]];
        }
        y[r] = s;
    }
    return y;
}

DenseVector SparseMatrix::diagonal() const {
    DenseVector d(std::min(n_rows_, n_cols_), 0.0);
    for (std::size_t r = 0; r < d.size(); ++r) {
        d[r] = at(r, r);
    }
    return d;
}

std::size_t SparseMatrix::lower_bandwidth() const {
    std::size_t bw = 0;
    for (std::size_t r = 0; r < n_rows_; ++r) {
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            if (col_index_[k] < r) {
                bw = std::max(bw, r - col_index_[k]);
            }
        }
    }
    return bw;
}

std::size_t SparseMatrix::upper_bandwidth() const {
    std::size_t bw = 0;
    for (std::size_t r = 0; r < n_rows_; ++r) {
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            if (col_index_[k] > r) {
                bw = std::max(bw, col_index_[k] - r);
            }
        }
    }
    return bw;
}

bool SparseMatrix::is_symmetric(double tol) const {
    if (n_rows_ != n_cols_) {
        return false;
    }
    for (std::size_t r = 0; r < n_rows_; ++r) {
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            if (std::abs(values_[k] - at(col_index_[k], r)) > tol) {
                return false;
            }
        }
    }
    return true;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double relative_residual(const SparseMatrix& a, std::span<const double> x, std::span<const double> b) {
    DenseVector r = a.multiply(x);
    for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] -= b[i];
    }
    const double nb = norm2(b);
    const double nr = norm2(r);
    return nb > 0.0 ? nr / nb : nr;
}

namespace {

void check_square(const SparseMatrix& a, std::span<const double> b) {
    if (a.rows() != a.cols()) {
        throw ParameterError("linear solve requires a square matrix");
    }
    if (b.size() != a.rows()) {
        throw ParameterError("right-hand side length does not match the matrix");
    }
}

}  // namespace

DenseVector solve_spd(const SparseMatrix& a, std::span<const double> b, double tol) {
    const DenseVector x0(b.size(), 0.0);
    CgOptions opt;
    opt.tol = tol;
    return solve_spd(a, b, x0, opt);
}

DenseVector solve_spd(const SparseMatrix& a, std::span<const double> b, std::span<const double> x0,
                      const CgOptions& options, CgReport* report) {
    check_square(a, b);
    if (!(options.tol > 0.0)) {
        throw ParameterError("solve_spd: tol must be positive");
    }
    const std::size_t n = b.size();
    const std::size_t cap = options.max_iterations > 0 ? options.max_iterations : 10 * std::max<std::size_t>(n, 1);

    DenseVector inv_diag = a.diagonal();
    for (double& d : inv_diag) {
        if (!(d > 0.0)) {
            throw ParameterError("solve_spd: matrix has a non-positive diagonal entry");
        }
        d = 1.0 / d;
    }

    DenseVector x(x0.begin(), x0.end());
    DenseVector r = a.multiply(x);
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = b[i] - r[i];
    }
    const double nb = norm2(b);
    const double scale = nb > 0.0 ? nb : 1.0;
    double res = norm2(r) / scale;

    DenseVector z(n);
    for (std::size_t i = 0; i < n; ++i) {
        z[i] = inv_diag[i] * r[i];
    }
    DenseVector p = z;
    double rz = dot(r, z);
    std::size_t it = 0;
    while (res > options.tol && it < cap) {
        const DenseVector ap = a.multiply(p);
        const double pap = dot(p, ap);
        if (!(pap > 0.0)) {
            throw SolverError("solve_spd: matrix is not positive definite", res);
        }
        const double alpha = rz / pap;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        ++it;
        // Recompute the true residual periodically so drift cannot fake convergence.
        if (it % 50 == 0) {
            r = a.multiply(x);
            for (std::size_t i = 0; i < n; ++i) {
                r[i] = b[i] - r[i];
            }
        }
        res = norm2(r) / scale;
        for (std::size_t i = 0; i < n; ++i) {
            z[i] = inv_diag[i] * r[i];
        }
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = z[i] + beta * p[i];
        }
    }

    // Confirm with the true residual.
    res = relative_residual(a, x, b);
    if (res > options.tol) {
        // The recursive residual can undershoot the true one by rounding; polish a little.
        CgOptions polish = options;
        polish.max_iterations = cap > it ? cap - it : 0;
        if (polish.max_iterations == 0 || it == 0) {
            throw SolverError("solve_spd: no convergence within the iteration cap", res);
        }
        return solve_spd(a, b, x, polish, report);
    }
    if (report != nullptr) {
        report->iterations += it;
        report->residual = res;
    }
    return x;
}

BandedLU::BandedLU(const SparseMatrix& a)
    : n_(a.rows()), kl_(a.lower_bandwidth()), ku_(a.upper_bandwidth()) {
    if (a.rows() != a.cols()) {
        throw ParameterError("BandedLU requires a square matrix");
    }
    width_ = 2 * kl_ + ku_ + 1;
    band_.assign(n_ * width_, 0.0);
    multipliers_.assign(n_ * kl_, 0.0);
    pivot_.assign(n_, 0);

    double max_abs = 0.0;
    const auto rp = a.row_ptr();
    const auto ci = a.col_index();
    const auto va = a.values();
    for (std::size_t r = 0; r < n_; ++r) {
        for (std::size_t k = rp[r]; k < rp[r + 1]; ++k) {
            at(r, ci[k]) = va[k];
            max_abs = std::max(max_abs, std::abs(va[k]));
        }
    }
    if (n_ > 0 && max_abs == 0.0) {
        throw SolverError("solve_general: zero matrix", std::numeric_limits<double>::infinity());
    }
    const double tiny = 1e-14 * max_abs;

    for (std::size_t k = 0; k < n_; ++k) {
        const std::size_t last_row = std::min(n_ - 1, k + kl_);
        const std::size_t last_col = std::min(n_ - 1, k + kl_ + ku_);
        std::size_t p = k;
        double best = std::abs(at(k, k));
        for (std::size_t i = k + 1; i <= last_row; ++i) {
            if (std::abs(at(i, k)) > best) {
                best = std::abs(at(i, k));
                p = i;
            }
        }
        if (!(best > tiny)) {
            throw SolverError("solve_general: matrix is singular to working precision",
                              std::numeric_limits<double>::infinity());
        }
        pivot_[k] = p;
        if (p != k) {
            for (std::size_t j = k; j <= last_col; ++j) {
                std::swap(at(k, j), at(p, j));
            }
        }
        const double piv = at(k, k);
        for (std::size_t i = k + 1; i <= last_row; ++i) {
            const double m = at(i, k) / piv;
            multipliers_[k * kl_ + (i - k - 1)] = m;
            at(i, k) = 0.0;
            if (m == 0.0) {
                continue;
            }
            for (std::size_t j = k + 1; j <= last_col; ++j) {
                at(i, j) -= m * at(k, j);
            }
        }
    }
}

DenseVector BandedLU::solve(std::span<const double> b) const {
    if (b.size() != n_) {
        throw ParameterError("right-hand side length does not match the factorization");
    }
    DenseVector x(b.begin(), b.end());
    for (std::size_t k = 0; k < n_; ++k) {
        if (pivot_[k] != k) {
            std::swap(x[k], x[pivot_[k]]);
        }
        const std::size_t last_row = std::min(n_ - 1, k + kl_);
        for (std::size_t i = k + 1; i <= last_row; ++i) {
            x[i] -= multipliers_[k * kl_ + (i - k - 1)] * x[k];
        }
    }
    for (std::size_t kk = n_; kk-- > 0;) {
        const std::size_t last_col = std::min(n_ - 1, kk + kl_ + ku_);
        double s = x[kk];
        for (std::size_t j = kk + 1; j <= last_col; ++j) {
            s -= at(kk, j) * x[j];
        }
        x[kk] = s / at(kk, kk);
    }
    return x;
}

DenseVector solve_general(const SparseMatrix& a, std::span<const double> b) {
    check_square(a, b);
    constexpr double kTol = 1e-10;
    const BandedLU lu(a);
    DenseVector x = lu.solve(b);
    double res = relative_residual(a, x, b);
    for (int refine = 0; refine < 3 && res > kTol; ++refine) {
        DenseVector r = a.multiply(x);
        for (std::size_t i = 0; i < r.size(); ++i) {
            r[i] = b[i] - r[i];
        }
        const DenseVector dx = lu.solve(r);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] += dx[i];
        }
        res = relative_residual(a, x, b);
    }
    if (!std::isfinite(res) || res > kTol) {
        throw SolverError("solve_general: matrix is too ill-conditioned", res);
    }
    return x;
}

}  // namespace freeseg
