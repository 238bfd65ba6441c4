#include "wesnet/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "wesnet/errors.hpp"

namespace wesnet {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ContractError("dot: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

double squared_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ContractError("squared_distance: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        acc += diff * diff;
    }
    return acc;
}

Vector matvec(const Matrix& a, std::span<const double> x) {
    if (a.cols != x.size()) throw ContractError("matvec: inner dimension mismatch");
    Vector out(a.rows);
    for (std::size_t i = 0; i < a.rows; ++i) out[i] = dot(a.row(i), x);
    return out;
}

Vector matvec_transposed(const Matrix& a, std::span<const double> x) {
    if (a.rows != x.size()) throw ContractError("matvec_transposed: inner dimension mismatch");
    Vector out(a.cols, 0.0);
    for (std::size_t j = 0; j < a.cols; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < a.rows; ++i) acc += a(i, j) * x[i];
        out[j] = acc;
    }
    return out;
}

Matrix gram(const Matrix& a) {
    Matrix g(a.cols, a.cols);
    for (std::size_t i = 0; i < a.cols; ++i) {
        for (std::size_t j = i; j < a.cols; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.rows; ++k) acc += a(k, i) * a(k, j);
            g(i, j) = acc;
            g(j, i) = acc;
        }
    }
    return g;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw ContractError("matmul: inner dimension mismatch");
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < b.cols; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) acc += a(i, k) * b(k, j);
            c(i, j) = acc;
        }
    }
    return c;
}

Matrix cholesky(const Matrix& spd) {
    if (spd.rows != spd.cols) throw ContractError("cholesky: matrix is not square");
    const std::size_t n = spd.rows;
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double diag = spd(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        // Relative pivot floor: rank deficiency shows up as cancellation to ~eps * scale.
        const double scale = std::max(std::abs(spd(j, j)), 1e-300);
        if (!(diag > 1e-13 * scale)) {
            throw SingularMatrixError("cholesky: matrix is singular or not positive definite at dimension " +
                                          std::to_string(j) + " of " + std::to_string(n),
                                      n);
        }
        const double ljj = std::sqrt(diag);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = spd(i, j);
            for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
            l(i, j) = v / ljj;
        }
    }
    return l;
}

Vector cholesky_solve(const Matrix& lower, std::span<const double> b) {
    const std::size_t n = lower.rows;
    if (b.size() != n) throw ContractError("cholesky_solve: rhs length mismatch");
    Vector z(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = b[i];
        for (std::size_t k = 0; k < i; ++k) v -= lower(i, k) * z[k];
        z[i] = v / lower(i, i);
    }
    Vector x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double v = z[ii];
        for (std::size_t k = ii + 1; k < n; ++k) v -= lower(k, ii) * x[k];
        x[ii] = v / lower(ii, ii);
    }
    return x;
}

namespace {

double off_diagonal_norm(const Matrix& a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j)
            if (i != j) acc += a(i, j) * a(i, j);
    return std::sqrt(acc);
}

double frobenius_norm(const Matrix& a) { return std::sqrt(squared_norm(a.data)); }

// Symmetric rotation in the (p, q) plane that annihilates a(p, q).
void rotate(Matrix& a, Matrix& v, std::size_t p, std::size_t q) {
    const double apq = a(p, q);
    const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
    const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
    const double c = 1.0 / std::sqrt(t * t + 1.0);
    const double s = t * c;
    const std::size_t n = a.rows;
    for (std::size_t k = 0; k < n; ++k) {
        const double akp = a(k, p);
        const double akq = a(k, q);
        a(k, p) = c * akp - s * akq;
        a(k, q) = s * akp + c * akq;
    }
    for (std::size_t k = 0; k < n; ++k) {
        const double apk = a(p, k);
        const double aqk = a(q, k);
        a(p, k) = c * apk - s * aqk;
        a(q, k) = s * apk + c * aqk;
    }
    a(p, q) = 0.0;
    a(q, p) = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double vkp = v(k, p);
        const double vkq = v(k, q);
        v(k, p) = c * vkp - s * vkq;
        v(k, q) = s * vkp + c * vkq;
    }
}

}  // namespace

EigenDecomposition symmetric_eigen(const Matrix& input, const JacobiOptions& opts, const Matrix* warm_start) {
    if (input.rows != input.cols) throw ContractError("symmetric_eigen: matrix is not square");
    const std::size_t n = input.rows;

    Matrix a = input;
    Matrix v = Matrix::identity(n);
    if (warm_start != nullptr) {
        if (warm_start->rows != n || warm_start->cols != n)
            throw ContractError("symmetric_eigen: warm start has wrong shape");
        v = *warm_start;
        a = matmul(transpose(v), matmul(input, v));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const double avg = 0.5 * (a(i, j) + a(j, i));
                a(i, j) = avg;
                a(j, i) = avg;
            }
    }

    const double scale = std::max(frobenius_norm(input), 1e-300);
    const double target = opts.tolerance * scale;
    // Entries below this are treated as already annihilated.
    const double skip = 1e-3 * target / static_cast<double>(std::max<std::size_t>(n, 1));

    int sweeps = 0;
    double off = off_diagonal_norm(a);
    while (off > target) {
        if (sweeps >= opts.max_sweeps) {
            throw NumericalError("symmetric_eigen: Jacobi did not converge within " +
                                     std::to_string(opts.max_sweeps) + " sweeps (off-diagonal residual " +
                                     std::to_string(off) + ")",
                                 off);
        }
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q)
                if (std::abs(a(p, q)) > skip) rotate(a, v, p, q);
        ++sweeps;
        off = off_diagonal_norm(a);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

    EigenDecomposition out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    out.sweeps = sweeps;
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
    }
    return out;
}

Matrix project_psd(const Matrix& a, const JacobiOptions& opts) {
    const auto eig = symmetric_eigen(a, opts);
    const std::size_t n = a.rows;
    Matrix out(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const double lambda = eig.values[k];
        if (lambda <= 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) {
            const double vi = eig.vectors(i, k) * lambda;
            for (std::size_t j = 0; j < n; ++j) out(i, j) += vi * eig.vectors(j, k);
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double avg = 0.5 * (out(i, j) + out(j, i));
            out(i, j) = avg;
            out(j, i) = avg;
        }
    return out;
}

double frobenius_distance(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows || a.cols != b.cols) throw ContractError("frobenius_distance: shape mismatch");
    return std::sqrt(squared_distance(a.data, b.data));
}

}  // namespace wesnet
