#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wesnet/detectors.hpp"
#include "wesnet/linalg.hpp"
#include "wesnet/mimo_env.hpp"
#include "wesnet/profile.hpp"
#include "wesnet/rng.hpp"

namespace wesnet {

/// Architecture and regularization settings of the weight-scaled detector.
struct NetConfig {
    std::size_t nt = 4;
    std::size_t nr = 8;
    Modulation modulation = Modulation::BPSK;
    std::size_t layers = 12;
    ProfileKind profile_kind = ProfileKind::HalfExponential;
    double keep_fraction = 1.0;
    bool learnable_beta = false;
    double lambda = 1e-3;
    std::size_t reg_start_layer = 1;
    double psi_t = 0.5;
    /// Also scale the 5d layer input by a fixed profile (literal reading of the
    /// first-sublayer scaling equation). The hidden-vector profile stays active.
    bool input_profile_mode = false;

    Constellation constellation() const { return Constellation::of(modulation); }
    std::size_t d() const { return modulation == Modulation::BPSK ? nt : 2 * nt; }
    double level() const { return modulation == Modulation::BPSK ? 1.0 : kQam4Level; }
    std::size_t input_dim() const { return 5 * d(); }
    std::size_t hidden() const { return 8 * d(); }
    std::size_t aux() const { return 2 * d(); }
    bool beta_trainable() const { return learnable_beta || profile_kind == ProfileKind::Learnable; }

    /// Throws ConfigError on any violated invariant.
    void validate() const;

    bool operator==(const NetConfig&) const = default;
};

struct LayerParams {
    Matrix w1;  ///< 8d x 5d
    Vector b1;  ///< 8d
    Matrix w2;  ///< d x 8d
    Vector b2;  ///< d
    Matrix w3;  ///< 2d x 8d
    Vector b3;  ///< 2d
    Profile beta;  ///< over the 8d hidden units

    bool operator==(const LayerParams&) const = default;
};

/// Trainable set across all layers, plus the fixed input profile used in
/// input-profile mode. Every mutable access stamps a fresh generation so stale
/// forward traces are detected by backward().
class NetworkParams {
public:
    NetworkParams() = default;
    NetworkParams(NetConfig cfg, std::vector<LayerParams> layers, Profile input_profile);

    const NetConfig& config() const { return cfg_; }
    std::size_t num_layers() const { return layers_.size(); }
    const LayerParams& layer(std::size_t r) const { return layers_.at(r); }
    LayerParams& mutable_layer(std::size_t r);
    const std::vector<LayerParams>& layers() const { return layers_; }
    const Profile& input_profile() const { return input_profile_; }
    std::uint64_t generation() const { return generation_; }

    bool operator==(const NetworkParams& o) const {
        return cfg_ == o.cfg_ && layers_ == o.layers_ && input_profile_ == o.input_profile_;
    }

private:
    NetConfig cfg_;
    std::vector<LayerParams> layers_;
    Profile input_profile_;
    std::uint64_t generation_ = 0;
};

/// Xavier-uniform weights, zero biases, profile from cfg masked by keep_fraction.
NetworkParams xavier_init(RngStream& rng, const NetConfig& cfg);

/// Multiply/add counter for one forward invocation. One fused multiply-add
/// counts as two operations; a length-n dot product plus bias counts 2n.
struct MacCounter {
    std::uint64_t preprocessing = 0;          ///< H^T H and H^T y
    std::vector<std::uint64_t> hidden_gated;  ///< per layer: sublayer matvecs over hidden units
    std::vector<std::uint64_t> ungated;       ///< per layer: H^T H s

    std::uint64_t layer_total(std::size_t k) const { return hidden_gated.at(k) + ungated.at(k); }
    std::uint64_t hidden_gated_total() const;
    std::uint64_t total() const;
};

enum class Truncation { Trailing, Leading };

struct ForwardOptions {
    /// false runs the plain unscaled recursion (the profile is never read).
    bool apply_profile = true;
    /// Skip hidden units whose coefficient is exactly 0. Bitwise identical outputs.
    bool skip_zero_beta = false;
    /// Solve for the ZF normalizer needed by the loss.
    bool with_normalizer = true;
    Truncation truncation = Truncation::Trailing;
    MacCounter* counter = nullptr;
};

struct LayerTrace {
    std::size_t layer_index = 0;  ///< 0-based index into NetworkParams
    Vector x;         ///< [H^T y, H^T H s, s, a]
    Vector x_scaled;  ///< input after the input profile (== x unless input-profile mode)
    Vector z;         ///< W1 x + b1
    Vector u;         ///< relu(z)
    Vector u_scaled;  ///< beta (.) u
    Vector o;         ///< W2 u_scaled + b2
    Vector s_hat;     ///< psi(o)
    Vector a_hat;     ///< W3 u_scaled + b3
};

struct ForwardTrace {
    std::vector<LayerTrace> layers;
    Matrix hth;
    Vector hty;
    Vector s_zf;
    bool normalizer_floored = false;
    std::uint64_t params_generation = 0;
    ForwardOptions options;

    const Vector& final_estimate() const { return layers.back().s_hat; }
};

/// level * (-1 + (relu(x + t) - relu(x - t)) / t), componentwise.
Vector psi_soft_sign(std::span<const double> x, double t, double level);
double psi_soft_sign(double x, double t, double level);

/// One layer of the recursion. Fills `out` and returns nothing; s_prev and a_prev
/// are the previous detection and auxiliary outputs.
void layer_forward(const LayerParams& p, const NetConfig& cfg, const Profile& input_profile,
                   std::span<const double> s_prev, std::span<const double> a_prev, std::span<const double> hty,
                   const Matrix& hth, const ForwardOptions& opts, LayerTrace& out, std::uint64_t* gated_ops = nullptr,
                   std::uint64_t* ungated_ops = nullptr);

/// Runs `layers_to_run` layers from s_0 = 0, a_0 = 0. Trailing truncation runs
/// layers [0, k); leading truncation runs [L - k, L).
ForwardTrace network_forward(const NetworkParams& params, const Matrix& h, std::span<const double> y,
                             std::size_t layers_to_run, const ForwardOptions& opts = {});

/// Same as network_forward but reuses the buffers already held by `trace`.
void network_forward_into(const NetworkParams& params, const Matrix& h, std::span<const double> y,
                          std::size_t layers_to_run, const ForwardOptions& opts, ForwardTrace& trace);

inline constexpr double kLossDenominatorFloor = 1e-12;

/// sum_r log(r) ||s - s_r||^2 / ||s - s_zf||^2 over executed layers (r is 1-based
/// execution position, natural log).
double loss_weighted(const ForwardTrace& trace, std::span<const double> s_true);

/// sum_{r=l}^{L} log(1 + (r - 1) ||beta_r (.) W_r||_1), where the norm sums
/// beta_j |w| over W1 row j and the j-th columns of W2 and W3.
double sparsity_penalty(const NetworkParams& params);

double loss_regularized(const ForwardTrace& trace, std::span<const double> s_true, const NetworkParams& params);

struct LayerGradients {
    Matrix w1, w2, w3;
    Vector b1, b2, b3;
    Vector beta;  ///< all zero unless beta is trainable

    bool operator==(const LayerGradients&) const = default;
};

struct NetworkGradients {
    std::vector<LayerGradients> layers;

    static NetworkGradients zeros_like(const NetworkParams& params);
    void set_zero();

    bool operator==(const NetworkGradients&) const = default;
};

/// Adds scale * d(loss_weighted)/d(params) for one sample.
/// Throws ContractError if the trace is stale.
void accumulate_data_gradients(const ForwardTrace& trace, std::span<const double> s_true,
                               const NetworkParams& params, double scale, NetworkGradients& grads);

/// Adds lambda * d(sparsity_penalty)/d(params).
void accumulate_penalty_gradients(const NetworkParams& params, NetworkGradients& grads);

/// Full reverse-mode gradient of loss_regularized for one sample.
NetworkGradients backward(const ForwardTrace& trace, std::span<const double> s_true, const NetworkParams& params);

/// Feed-forward inference with the sparse skip path.
DetectorResult detect(const NetworkParams& params, const Matrix& h, std::span<const double> y,
                 std::size_t layers_to_run, MacCounter* counter = nullptr,
                 Truncation truncation = Truncation::Trailing);

}  // namespace wesnet
