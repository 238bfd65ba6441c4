#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace wesnet {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    static Matrix identity(std::size_t n);

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

    bool operator==(const Matrix&) const = default;
};

// All reductions below accumulate left to right starting from +0.0, which keeps
// results bitwise reproducible and makes skipped exact-zero terms invisible.

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);
double squared_distance(std::span<const double> a, std::span<const double> b);

/// A x
Vector matvec(const Matrix& a, std::span<const double> x);
/// A^T x
Vector matvec_transposed(const Matrix& a, std::span<const double> x);
/// A^T A
Matrix gram(const Matrix& a);
Matrix transpose(const Matrix& a);
Matrix matmul(const Matrix& a, const Matrix& b);

/// Lower Cholesky factor of a symmetric positive-definite matrix.
/// Throws SingularMatrixError naming the first pivot that is not positive.
Matrix cholesky(const Matrix& spd);
/// Solves (L L^T) x = b given the lower factor.
Vector cholesky_solve(const Matrix& lower, std::span<const double> b);

struct EigenDecomposition {
    Vector values;   ///< ascending
    Matrix vectors;  ///< column k is the eigenvector for values[k]
    int sweeps = 0;
};

struct JacobiOptions {
    double tolerance = 1e-12;  ///< relative off-diagonal Frobenius norm
    int max_sweeps = 100;
};

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// When `warm_start` is given (an orthogonal matrix, typically the eigenvectors
/// of a nearby matrix), rotations start from warm_start^T A warm_start, which is
/// nearly diagonal and converges in one or two sweeps.
/// Throws NumericalError carrying the off-diagonal residual if the sweep cap is hit.
EigenDecomposition symmetric_eigen(const Matrix& a, const JacobiOptions& opts = {},
                                   const Matrix* warm_start = nullptr);

/// Nearest positive semidefinite matrix in Frobenius norm (negative eigenvalues clipped).
Matrix project_psd(const Matrix& a, const JacobiOptions& opts = {});

double frobenius_distance(const Matrix& a, const Matrix& b);

}  // namespace wesnet
