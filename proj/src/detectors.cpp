#include "wesnet/detectors.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "wesnet/errors.hpp"

namespace wesnet {

namespace {

void check_system(const Matrix& h, std::span<const double> y, const char* who) {
    if (h.rows != y.size())
        throw ContractError(std::string(who) + ": y has " + std::to_string(y.size()) + " entries but H has " +
                            std::to_string(h.rows) + " rows");
    if (h.cols == 0) throw ContractError(std::string(who) + ": H has no columns");
}

double residual_norm(const Matrix& h, std::span<const double> y, std::span<const double> s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < h.rows; ++i) {
        const double r = y[i] - dot(h.row(i), s);
        acc += r * r;
    }
    return acc;
}

}  // namespace

DetectorResult finish_detection(Vector soft, const Matrix& h, std::span<const double> y, const Constellation& c) {
    DetectorResult out;
    out.hard = hard_slice(soft, c);
    out.objective = residual_norm(h, y, out.hard);
    out.soft = std::move(soft);
    return out;
}

DetectorResult zf_detect(const Matrix& h, std::span<const double> y, const Constellation& c) {
    check_system(h, y, "zf_detect");
    if (h.rows < h.cols)
        throw SingularMatrixError("zf_detect: H^T H is rank deficient (" + std::to_string(h.rows) + " rows < " +
                                      std::to_string(h.cols) + " columns)",
                                  h.rows);
    const Matrix lower = cholesky(gram(h));
    return finish_detection(cholesky_solve(lower, matvec_transposed(h, y)), h, y, c);
}

DetectorResult mmse_detect(const Matrix& h, std::span<const double> y, double sigma, const Constellation& c,
                           double symbol_energy_per_dim) {
    check_system(h, y, "mmse_detect");
    if (!(sigma >= 0.0)) throw ContractError("mmse_detect: sigma must be >= 0");
    if (!(symbol_energy_per_dim > 0.0)) throw ContractError("mmse_detect: symbol energy must be > 0");
    Matrix g = gram(h);
    const double reg = sigma * sigma / symbol_energy_per_dim;
    for (std::size_t i = 0; i < g.rows; ++i) g(i, i) += reg;
    const Matrix lower = cholesky(g);
    return finish_detection(cholesky_solve(lower, matvec_transposed(h, y)), h, y, c);
}

DetectorResult ml_detect(const Matrix& h, std::span<const double> y, const Constellation& c) {
    check_system(h, y, "ml_detect");
    const std::size_t d = h.cols;
    if (d > kMlMaxDim)
        throw CapacityError("ml_detect: signal dimension " + std::to_string(d) + " exceeds the exhaustive-search limit " +
                            std::to_string(kMlMaxDim) + "; use sdr or wesnet instead");

    const std::size_t m = c.levels.size();
    std::size_t total = 1;
    for (std::size_t i = 0; i < d; ++i) total *= m;

    Vector candidate(d);
    Vector best(d, c.levels[0]);
    double best_obj = std::numeric_limits<double>::infinity();
    // Counter value -> digits with position 0 most significant gives lexicographic order.
    for (std::size_t index = 0; index < total; ++index) {
        std::size_t rest = index;
        for (std::size_t pos = d; pos-- > 0;) {
            candidate[pos] = c.levels[rest % m];
            rest /= m;
        }
        const double obj = residual_norm(h, y, candidate);
        if (obj < best_obj) {
            best_obj = obj;
            best = candidate;
        }
    }

    DetectorResult out;
    out.soft = best;
    out.hard = best;
    out.objective = best_obj;
    return out;
}

Matrix sdr_cost_matrix(const Matrix& h, std::span<const double> y) {
    check_system(h, y, "sdr_cost_matrix");
    const std::size_t d = h.cols;
    Matrix l(d + 1, d + 1);
    const Matrix g = gram(h);
    const Vector hty = matvec_transposed(h, y);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) l(i, j) = g(i, j);
        l(i, d) = -hty[i];
        l(d, i) = -hty[i];
    }
    l(d, d) = squared_norm(y);
    return l;
}

DetectorResult sdr_detect(const Matrix& h, std::span<const double> y, const Constellation& c, const SdrConfig& cfg,
                          RngStream& rng, SdrDiagnostics* diagnostics) {
    check_system(h, y, "sdr_detect");
    if (cfg.admm_iterations < 1 || cfg.rounding_samples < 1 || !(cfg.rho > 0.0) || !(cfg.eig_tolerance > 0.0))
        throw ContractError("sdr_detect: invalid SdrConfig");

    const double level = c.level();
    const std::size_t d = h.cols;
    const std::size_t n = d + 1;

    // Work with +-1 variables: s = level * x.
    Matrix hs = h;
    for (auto& v : hs.data) v *= level;
    // The minimizer is invariant to positive scaling of the cost; normalizing keeps
    // a fixed rho well matched to the problem.
    Matrix cost = sdr_cost_matrix(hs, y);
    double cost_scale = 0.0;
    for (double v : cost.data) cost_scale = std::max(cost_scale, std::abs(v));
    if (cost_scale > 0.0)
        for (auto& v : cost.data) v /= cost_scale;

    Matrix x(n, n), z = Matrix::identity(n), u(n, n), z_prev(n, n), work(n, n);
    const JacobiOptions jopts{cfg.eig_tolerance, cfg.max_jacobi_sweeps};
    EigenDecomposition eig;
    eig.vectors = Matrix::identity(n);
    eig.values.assign(n, 1.0);

    if (diagnostics != nullptr) {
        diagnostics->primal_residuals.clear();
        diagnostics->dual_residuals.clear();
    }

    // Residual balancing adapts rho during the first half of the budget only, so the
    // tail is plain fixed-rho ADMM.
    double rho = cfg.rho;
    const int adapt_until = cfg.admm_iterations / 2;
    int iter = 0;
    for (; iter < cfg.admm_iterations; ++iter) {
        // Affine step: minimize <L, X> + rho/2 ||X - Z + U||^2 subject to diag(X) = 1.
        for (std::size_t k = 0; k < n * n; ++k) x.data[k] = z.data[k] - u.data[k] - cost.data[k] / rho;
        for (std::size_t i = 0; i < n; ++i) x(i, i) = 1.0;

        // Cone step: Z = PSD projection of X + U, warm-started from the last eigenbasis.
        for (std::size_t k = 0; k < n * n; ++k) work.data[k] = x.data[k] + u.data[k];
        z_prev = z;
        eig = symmetric_eigen(work, jopts, &eig.vectors);
        std::fill(z.data.begin(), z.data.end(), 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            const double lambda = eig.values[k];
            if (lambda <= 0.0) continue;
            for (std::size_t i = 0; i < n; ++i) {
                const double vi = eig.vectors(i, k) * lambda;
                for (std::size_t j = i; j < n; ++j) z(i, j) += vi * eig.vectors(j, k);
            }
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < i; ++j) z(i, j) = z(j, i);

        for (std::size_t k = 0; k < n * n; ++k) u.data[k] += x.data[k] - z.data[k];

        const double primal = frobenius_distance(x, z);
        const double dual = rho * frobenius_distance(z, z_prev);
        if (diagnostics != nullptr) {
            diagnostics->primal_residuals.push_back(primal);
            diagnostics->dual_residuals.push_back(dual);
        }
        if (!std::isfinite(primal)) throw NumericalError("sdr_detect: ADMM diverged", primal);
        if (cfg.residual_tolerance > 0.0 && primal < cfg.residual_tolerance && dual < cfg.residual_tolerance) {
            ++iter;
            break;
        }
        if (iter < adapt_until && iter % 10 == 9) {
            double factor = 1.0;
            if (primal > 10.0 * dual) factor = 2.0;
            else if (dual > 10.0 * primal) factor = 0.5;
            if (factor != 1.0) {
                rho *= factor;
                for (auto& v : u.data) v /= factor;  // scaled dual follows rho
            }
        }
    }
    if (diagnostics != nullptr) {
        diagnostics->solution = z;
        diagnostics->iterations = iter;
    }

    // Randomized rounding: xi = V sqrt(Lambda+) g ~ N(0, Z).
    Vector factor_scale(n);
    for (std::size_t k = 0; k < n; ++k) factor_scale[k] = std::sqrt(std::max(eig.values[k], 0.0));
    Vector g(n), xi(n), candidate(d);
    Vector best(d, level);
    double best_obj = std::numeric_limits<double>::infinity();
    for (int sample = 0; sample < cfg.rounding_samples; ++sample) {
        for (auto& v : g) v = rng.normal();
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) acc += eig.vectors(i, k) * factor_scale[k] * g[k];
            xi[i] = acc;
        }
        // The homogenizing coordinate fixes the global sign.
        const double t = xi[d] < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < d; ++i) candidate[i] = (xi[i] * t < 0.0 ? -1.0 : 1.0) * level;
        const double obj = residual_norm(h, y, candidate);
        if (obj < best_obj) {
            best_obj = obj;
            best = candidate;
        }
    }

    DetectorResult out;
    out.soft = best;
    out.hard = best;
    out.objective = best_obj;
    return out;
}

}  // namespace wesnet
