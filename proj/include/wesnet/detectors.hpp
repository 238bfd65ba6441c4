#pragma once

#include <span>
#include <vector>

#include "wesnet/linalg.hpp"
#include "wesnet/mimo_env.hpp"
#include "wesnet/rng.hpp"

namespace wesnet {

struct DetectorResult {
    Vector soft;
    Vector hard;
    double objective = 0.0;  ///< ||y - H hard||^2
};

/// Fills hard and objective from soft.
DetectorResult finish_detection(Vector soft, const Matrix& h, std::span<const double> y, const Constellation& c);

/// Zero forcing: (H^T H)^{-1} H^T y through a Cholesky solve.
/// Throws SingularMatrixError when H^T H is rank deficient.
DetectorResult zf_detect(const Matrix& h, std::span<const double> y, const Constellation& c = Constellation::bpsk());

/// Linear MMSE: (H^T H + (sigma^2 / e) I)^{-1} H^T y, where sigma is the
/// per-real-component noise std and e the per-real-dimension symbol energy.
/// The default e = 1/2 gives the 2 sigma^2 regularizer of unit-energy complex symbols.
DetectorResult mmse_detect(const Matrix& h, std::span<const double> y, double sigma,
                           const Constellation& c = Constellation::bpsk(), double symbol_energy_per_dim = 0.5);

inline constexpr std::size_t kMlMaxDim = 24;

/// Exhaustive search over all |levels|^d candidates. Ties keep the
/// lexicographically first candidate (levels ascending).
DetectorResult ml_detect(const Matrix& h, std::span<const double> y, const Constellation& c);

struct SdrConfig {
    int admm_iterations = 500;
    double rho = 1.0;
    int rounding_samples = 100;
    double eig_tolerance = 1e-10;
    /// ADMM stops early once primal and dual residuals both fall below this.
    /// Zero runs the full iteration budget.
    double residual_tolerance = 1e-7;
    int max_jacobi_sweeps = 100;
};

struct SdrDiagnostics {
    Matrix solution;                      ///< PSD iterate Z at exit
    std::vector<double> primal_residuals; ///< ||X - Z||_F per iteration
    std::vector<double> dual_residuals;   ///< rho ||Z - Z_prev||_F per iteration
    int iterations = 0;
};

/// Semidefinite relaxation of the +-1 ML problem solved by ADMM, followed by
/// Gaussian randomized rounding. For 4-QAM each real dimension is +-level,
/// handled by scaling the channel.
DetectorResult sdr_detect(const Matrix& h, std::span<const double> y, const Constellation& c, const SdrConfig& cfg,
                          RngStream& rng, SdrDiagnostics* diagnostics = nullptr);

/// The (d+1)x(d+1) cost matrix [[H^T H, -H^T y], [-y^T H, ||y||^2]].
Matrix sdr_cost_matrix(const Matrix& h, std::span<const double> y);

}  // namespace wesnet
