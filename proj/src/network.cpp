#include "wesnet/network.hpp"

#include <atomic>
#include <cmath>
#include <string>

#include "wesnet/detectors.hpp"
#include "wesnet/errors.hpp"

namespace wesnet {

namespace {

std::uint64_t next_generation() {
    static std::atomic<std::uint64_t> counter{0};
    return ++counter;
}

inline double relu(double v) { return v > 0.0 ? v : 0.0; }

inline double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

}  // namespace

void NetConfig::validate() const {
    require(nt >= 1 && nr >= 1, "nt and nr must be >= 1");
    require(layers >= 1, "layers must be >= 1");
    require(reg_start_layer >= 1 && reg_start_layer <= layers,
            "reg_start_layer must lie in [1, layers], got " + std::to_string(reg_start_layer));
    require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be finite and >= 0");
    require(std::isfinite(psi_t) && psi_t > 0.0, "psi_t must be > 0");
    require(keep_fraction > 0.0 && keep_fraction <= 1.0, "keep_fraction must lie in (0, 1]");
    if (input_profile_mode && profile_kind != ProfileKind::Unity && profile_kind != ProfileKind::Linear)
        require(input_dim() % 2 == 0, "input-profile mode with a half-exponential profile needs an even 5d");
}

NetworkParams::NetworkParams(NetConfig cfg, std::vector<LayerParams> layers, Profile input_profile)
    : cfg_(std::move(cfg)),
      layers_(std::move(layers)),
      input_profile_(std::move(input_profile)),
      generation_(next_generation()) {
    cfg_.validate();
    if (layers_.size() != cfg_.layers)
        throw ContractError("NetworkParams: expected " + std::to_string(cfg_.layers) + " layers, got " +
                            std::to_string(layers_.size()));
    const std::size_t d = cfg_.d(), hidden = cfg_.hidden(), in = cfg_.input_dim(), aux = cfg_.aux();
    for (std::size_t r = 0; r < layers_.size(); ++r) {
        const auto& p = layers_[r];
        const bool ok = p.w1.rows == hidden && p.w1.cols == in && p.b1.size() == hidden && p.w2.rows == d &&
                        p.w2.cols == hidden && p.b2.size() == d && p.w3.rows == aux && p.w3.cols == hidden &&
                        p.b3.size() == aux && p.beta.size() == hidden;
        if (!ok) throw ContractError("NetworkParams: layer " + std::to_string(r) + " has inconsistent shapes");
    }
    if (input_profile_.size() != in) throw ContractError("NetworkParams: input profile must have 5d entries");
}

LayerParams& NetworkParams::mutable_layer(std::size_t r) {
    generation_ = next_generation();
    return layers_.at(r);
}

NetworkParams xavier_init(RngStream& rng, const NetConfig& cfg) {
    cfg.validate();
    const std::size_t d = cfg.d(), hidden = cfg.hidden(), in = cfg.input_dim(), aux = cfg.aux();

    auto fill = [&rng](Matrix& m) {
        const double bound = std::sqrt(6.0 / static_cast<double>(m.rows + m.cols));
        for (auto& v : m.data) v = bound * (2.0 * rng.uniform() - 1.0);
    };

    const Profile beta = effective_profile(make_profile(cfg.profile_kind, hidden), cfg.keep_fraction);
    std::vector<LayerParams> layers(cfg.layers);
    for (auto& p : layers) {
        p.w1 = Matrix(hidden, in);
        p.w2 = Matrix(d, hidden);
        p.w3 = Matrix(aux, hidden);
        fill(p.w1);
        fill(p.w2);
        fill(p.w3);
        p.b1.assign(hidden, 0.0);
        p.b2.assign(d, 0.0);
        p.b3.assign(aux, 0.0);
        p.beta = beta;
    }

    Profile input_profile = unity_profile(in);
    if (cfg.input_profile_mode) {
        const ProfileKind kind =
            cfg.profile_kind == ProfileKind::Learnable ? ProfileKind::HalfExponential : cfg.profile_kind;
        input_profile = effective_profile(make_profile(kind, in), cfg.keep_fraction);
    }
    return NetworkParams(cfg, std::move(layers), std::move(input_profile));
}

std::uint64_t MacCounter::hidden_gated_total() const {
    std::uint64_t t = 0;
    for (auto v : hidden_gated) t += v;
    return t;
}

std::uint64_t MacCounter::total() const {
    std::uint64_t t = preprocessing;
    for (std::size_t k = 0; k < hidden_gated.size(); ++k) t += hidden_gated[k] + ungated[k];
    return t;
}

double psi_soft_sign(double x, double t, double level) {
    // Saturated branches are returned exactly so rounding never leaves [-level, level].
    if (x >= t) return level;
    if (x <= -t) return -level;
    return level * (-1.0 + (relu(x + t) - relu(x - t)) / t);
}

Vector psi_soft_sign(std::span<const double> x, double t, double level) {
    if (!(t > 0.0)) throw ContractError("psi_soft_sign: t must be > 0");
    Vector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = psi_soft_sign(x[i], t, level);
    return out;
}

void layer_forward(const LayerParams& p, const NetConfig& cfg, const Profile& input_profile,
                   std::span<const double> s_prev, std::span<const double> a_prev, std::span<const double> hty,
                   const Matrix& hth, const ForwardOptions& opts, LayerTrace& out, std::uint64_t* gated_ops,
                   std::uint64_t* ungated_ops) {
    const std::size_t d = cfg.d(), hidden = cfg.hidden(), in = cfg.input_dim(), aux = cfg.aux();
    if (s_prev.size() != d || a_prev.size() != aux || hty.size() != d || hth.rows != d || hth.cols != d ||
        p.w1.rows != hidden || p.w1.cols != in)
        throw ContractError("layer_forward: shapes inconsistent with the network configuration");

    // x = [H^T y, H^T H s, s, a]
    out.x.resize(in);
    for (std::size_t i = 0; i < d; ++i) {
        out.x[i] = hty[i];
        out.x[d + i] = dot(hth.row(i), s_prev);
        out.x[2 * d + i] = s_prev[i];
    }
    for (std::size_t i = 0; i < aux; ++i) out.x[3 * d + i] = a_prev[i];

    out.x_scaled = out.x;
    if (opts.apply_profile && cfg.input_profile_mode)
        for (std::size_t i = 0; i < in; ++i) out.x_scaled[i] = input_profile.values[i] * out.x[i];

    out.z.assign(hidden, 0.0);
    out.u.assign(hidden, 0.0);
    out.u_scaled.assign(hidden, 0.0);
    std::size_t active = 0;
    for (std::size_t j = 0; j < hidden; ++j) {
        const double beta = p.beta.values[j];
        if (opts.apply_profile && opts.skip_zero_beta && beta == 0.0) continue;
        ++active;
        out.z[j] = dot(p.w1.row(j), out.x_scaled) + p.b1[j];
        out.u[j] = relu(out.z[j]);
        out.u_scaled[j] = opts.apply_profile ? beta * out.u[j] : out.u[j];
    }

    // Skipped units hold +0 in u_scaled; a +0-seeded accumulator is unchanged by
    // adding signed zeros, so dense and sparse sums agree bit for bit.
    auto gated_matvec = [&](const Matrix& w, const Vector& bias, Vector& result) {
        result.assign(w.rows, 0.0);
        for (std::size_t k = 0; k < w.rows; ++k) {
            const auto row = w.row(k);
            double acc = 0.0;
            for (std::size_t j = 0; j < hidden; ++j) {
                if (opts.apply_profile && opts.skip_zero_beta && p.beta.values[j] == 0.0) continue;
                acc += row[j] * out.u_scaled[j];
            }
            result[k] = acc + bias[k];
        }
    };
    gated_matvec(p.w2, p.b2, out.o);
    gated_matvec(p.w3, p.b3, out.a_hat);

    const double level = cfg.level();
    out.s_hat.resize(d);
    for (std::size_t i = 0; i < d; ++i) out.s_hat[i] = psi_soft_sign(out.o[i], cfg.psi_t, level);

    if (gated_ops != nullptr) *gated_ops += 2 * static_cast<std::uint64_t>(active) * (in + d + aux);
    if (ungated_ops != nullptr) *ungated_ops += static_cast<std::uint64_t>(d) * (2 * d - 1);
}

void network_forward_into(const NetworkParams& params, const Matrix& h, std::span<const double> y,
                          std::size_t layers_to_run, const ForwardOptions& opts, ForwardTrace& trace) {
    const NetConfig& cfg = params.config();
    const std::size_t d = cfg.d();
    const std::size_t total_layers = params.num_layers();
    if (layers_to_run < 1 || layers_to_run > total_layers)
        throw ContractError("network_forward: layers_to_run must lie in [1, " + std::to_string(total_layers) +
                            "], got " + std::to_string(layers_to_run));
    if (h.cols != d || h.rows != y.size())
        throw ContractError("network_forward: H is " + std::to_string(h.rows) + "x" + std::to_string(h.cols) +
                            ", expected " + std::to_string(y.size()) + "x" + std::to_string(d));

    trace.options = opts;
    trace.params_generation = params.generation();
    trace.hth = gram(h);
    trace.hty = matvec_transposed(h, y);
    trace.normalizer_floored = false;

    MacCounter* counter = opts.counter;
    if (counter != nullptr) {
        const std::uint64_t m = h.rows;
        counter->preprocessing += static_cast<std::uint64_t>(d) * (d + 1) / 2 * (2 * m - 1) + d * (2 * m - 1);
    }

    if (opts.with_normalizer) {
        try {
            trace.s_zf = cholesky_solve(cholesky(trace.hth), trace.hty);
        } catch (const SingularMatrixError&) {
            // Rank-deficient channel: fall back to a minimally regularized solve.
            Matrix g = trace.hth;
            double tr = 0.0;
            for (std::size_t i = 0; i < d; ++i) tr += g(i, i);
            for (std::size_t i = 0; i < d; ++i) g(i, i) += 1e-10 * (tr / static_cast<double>(d) + 1.0);
            trace.s_zf = cholesky_solve(cholesky(g), trace.hty);
        }
    } else {
        trace.s_zf.clear();
    }

    const std::size_t first = opts.truncation == Truncation::Trailing ? 0 : total_layers - layers_to_run;
    trace.layers.resize(layers_to_run);
    Vector s0(d, 0.0), a0(cfg.aux(), 0.0);
    for (std::size_t k = 0; k < layers_to_run; ++k) {
        const std::size_t r = first + k;
        const Vector& s_prev = k == 0 ? s0 : trace.layers[k - 1].s_hat;
        const Vector& a_prev = k == 0 ? a0 : trace.layers[k - 1].a_hat;
        std::uint64_t gated = 0, ungated = 0;
        trace.layers[k].layer_index = r;
        layer_forward(params.layer(r), cfg, params.input_profile(), s_prev, a_prev, trace.hty, trace.hth, opts,
                      trace.layers[k], &gated, &ungated);
        if (counter != nullptr) {
            counter->hidden_gated.push_back(gated);
            counter->ungated.push_back(ungated);
        }
    }
}

ForwardTrace network_forward(const NetworkParams& params, const Matrix& h, std::span<const double> y,
                             std::size_t layers_to_run, const ForwardOptions& opts) {
    ForwardTrace trace;
    network_forward_into(params, h, y, layers_to_run, opts, trace);
    return trace;
}

namespace {

double normalizer(const ForwardTrace& trace, std::span<const double> s_true) {
    if (trace.s_zf.size() != s_true.size())
        throw ContractError("loss: trace lacks the ZF normalizer (run forward with with_normalizer)");
    return std::max(squared_distance(s_true, trace.s_zf), kLossDenominatorFloor);
}

}  // namespace

double loss_weighted(const ForwardTrace& trace, std::span<const double> s_true) {
    const double denom = normalizer(trace, s_true);
    double loss = 0.0;
    for (std::size_t k = 0; k < trace.layers.size(); ++k) {
        const double weight = std::log(static_cast<double>(k + 1));
        loss += weight * squared_distance(s_true, trace.layers[k].s_hat) / denom;
    }
    return loss;
}

namespace {

// Per hidden unit j: sum of |w| over W1 row j and column j of W2 and W3.
Vector gated_abs_sums(const LayerParams& p) {
    const std::size_t hidden = p.w1.rows;
    Vector sums(hidden, 0.0);
    for (std::size_t j = 0; j < hidden; ++j) {
        double acc = 0.0;
        for (double w : p.w1.row(j)) acc += std::abs(w);
        for (std::size_t k = 0; k < p.w2.rows; ++k) acc += std::abs(p.w2(k, j));
        for (std::size_t k = 0; k < p.w3.rows; ++k) acc += std::abs(p.w3(k, j));
        sums[j] = acc;
    }
    return sums;
}

double scaled_l1(const LayerParams& p, const Vector& sums) {
    double acc = 0.0;
    for (std::size_t j = 0; j < sums.size(); ++j) acc += p.beta.values[j] * sums[j];
    return acc;
}

}  // namespace

double sparsity_penalty(const NetworkParams& params) {
    const NetConfig& cfg = params.config();
    double total = 0.0;
    for (std::size_t r = cfg.reg_start_layer; r <= params.num_layers(); ++r) {
        const LayerParams& p = params.layer(r - 1);
        const double norm = scaled_l1(p, gated_abs_sums(p));
        total += std::log1p(static_cast<double>(r - 1) * norm);
    }
    return total;
}

double loss_regularized(const ForwardTrace& trace, std::span<const double> s_true, const NetworkParams& params) {
    const double lambda = params.config().lambda;
    const double data = loss_weighted(trace, s_true);
    if (lambda == 0.0) return data;
    return data + lambda * sparsity_penalty(params);
}

NetworkGradients NetworkGradients::zeros_like(const NetworkParams& params) {
    NetworkGradients g;
    g.layers.resize(params.num_layers());
    for (std::size_t r = 0; r < params.num_layers(); ++r) {
        const auto& p = params.layer(r);
        auto& lg = g.layers[r];
        lg.w1 = Matrix(p.w1.rows, p.w1.cols);
        lg.w2 = Matrix(p.w2.rows, p.w2.cols);
        lg.w3 = Matrix(p.w3.rows, p.w3.cols);
        lg.b1.assign(p.b1.size(), 0.0);
        lg.b2.assign(p.b2.size(), 0.0);
        lg.b3.assign(p.b3.size(), 0.0);
        lg.beta.assign(p.beta.size(), 0.0);
    }
    return g;
}

void NetworkGradients::set_zero() {
    for (auto& lg : layers) {
        std::fill(lg.w1.data.begin(), lg.w1.data.end(), 0.0);
        std::fill(lg.w2.data.begin(), lg.w2.data.end(), 0.0);
        std::fill(lg.w3.data.begin(), lg.w3.data.end(), 0.0);
        std::fill(lg.b1.begin(), lg.b1.end(), 0.0);
        std::fill(lg.b2.begin(), lg.b2.end(), 0.0);
        std::fill(lg.b3.begin(), lg.b3.end(), 0.0);
        std::fill(lg.beta.begin(), lg.beta.end(), 0.0);
    }
}

void accumulate_data_gradients(const ForwardTrace& trace, std::span<const double> s_true,
                               const NetworkParams& params, double scale, NetworkGradients& grads) {
    if (trace.params_generation != params.generation())
        throw ContractError("backward: stale trace (parameters changed since the forward pass)");
    if (grads.layers.size() != params.num_layers()) throw ContractError("backward: gradient buffer shape mismatch");

    const NetConfig& cfg = params.config();
    const std::size_t d = cfg.d(), hidden = cfg.hidden(), in = cfg.input_dim(), aux = cfg.aux();
    const bool apply_profile = trace.options.apply_profile;
    const bool beta_trainable = cfg.beta_trainable() && apply_profile;
    const double level = cfg.level();
    const double slope = level / cfg.psi_t;
    const double denom = normalizer(trace, s_true);

    Vector gs(d, 0.0), ga(aux, 0.0), go(d), gu_scaled(hidden), gz(hidden), gx(in);
    for (std::size_t k = trace.layers.size(); k-- > 0;) {
        const LayerTrace& lt = trace.layers[k];
        const LayerParams& p = params.layer(lt.layer_index);
        LayerGradients& lg = grads.layers[lt.layer_index];

        const double weight = std::log(static_cast<double>(k + 1));
        for (std::size_t i = 0; i < d; ++i) gs[i] += scale * weight * 2.0 * (lt.s_hat[i] - s_true[i]) / denom;

        // psi' is the linear-region slope on [-t, t] (kinks included), 0 outside.
        for (std::size_t i = 0; i < d; ++i) go[i] = std::abs(lt.o[i]) <= cfg.psi_t ? gs[i] * slope : 0.0;

        for (std::size_t i = 0; i < d; ++i) {
            lg.b2[i] += go[i];
            auto grow = lg.w2.row(i);
            for (std::size_t j = 0; j < hidden; ++j) grow[j] += go[i] * lt.u_scaled[j];
        }
        for (std::size_t i = 0; i < aux; ++i) {
            lg.b3[i] += ga[i];
            auto grow = lg.w3.row(i);
            for (std::size_t j = 0; j < hidden; ++j) grow[j] += ga[i] * lt.u_scaled[j];
        }

        for (std::size_t j = 0; j < hidden; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < d; ++i) acc += p.w2(i, j) * go[i];
            for (std::size_t i = 0; i < aux; ++i) acc += p.w3(i, j) * ga[i];
            gu_scaled[j] = acc;
        }

        // Coefficients past the keep cutoff are pinned to zero and receive no gradient.
        const std::size_t free_beta = beta_trainable ? keep_mask(hidden, p.beta.keep_fraction).cutoff_index : 0;
        for (std::size_t j = 0; j < hidden; ++j) {
            if (j < free_beta) lg.beta[j] += gu_scaled[j] * lt.u[j];
            const double gu = apply_profile ? gu_scaled[j] * p.beta.values[j] : gu_scaled[j];
            gz[j] = lt.z[j] > 0.0 ? gu : 0.0;
        }

        std::fill(gx.begin(), gx.end(), 0.0);
        for (std::size_t j = 0; j < hidden; ++j) {
            if (gz[j] == 0.0) continue;
            lg.b1[j] += gz[j];
            auto grow = lg.w1.row(j);
            const auto wrow = p.w1.row(j);
            for (std::size_t i = 0; i < in; ++i) {
                grow[i] += gz[j] * lt.x_scaled[i];
                gx[i] += wrow[i] * gz[j];
            }
        }
        if (apply_profile && cfg.input_profile_mode)
            for (std::size_t i = 0; i < in; ++i) gx[i] *= params.input_profile().values[i];

        // Route to the previous layer's outputs: x = [H^T y, H^T H s, s, a].
        for (std::size_t i = 0; i < d; ++i) {
            double acc = gx[2 * d + i];
            for (std::size_t m = 0; m < d; ++m) acc += trace.hth(m, i) * gx[d + m];
            gs[i] = acc;
        }
        for (std::size_t i = 0; i < aux; ++i) ga[i] = gx[3 * d + i];
    }
}

void accumulate_penalty_gradients(const NetworkParams& params, NetworkGradients& grads) {
    const NetConfig& cfg = params.config();
    if (cfg.lambda == 0.0) return;
    const bool beta_trainable = cfg.beta_trainable();
    for (std::size_t r = cfg.reg_start_layer; r <= params.num_layers(); ++r) {
        const LayerParams& p = params.layer(r - 1);
        LayerGradients& lg = grads.layers[r - 1];
        const Vector sums = gated_abs_sums(p);
        const double factor = static_cast<double>(r - 1);
        const double c = cfg.lambda * factor / (1.0 + factor * scaled_l1(p, sums));
        if (c == 0.0) continue;
        const std::size_t free_beta = beta_trainable ? keep_mask(sums.size(), p.beta.keep_fraction).cutoff_index : 0;
        for (std::size_t j = 0; j < sums.size(); ++j) {
            const double cb = c * p.beta.values[j];
            if (j < free_beta) lg.beta[j] += c * sums[j];
            if (cb == 0.0) continue;
            auto grow = lg.w1.row(j);
            const auto wrow = p.w1.row(j);
            for (std::size_t i = 0; i < wrow.size(); ++i) grow[i] += cb * sign_of(wrow[i]);
            for (std::size_t k = 0; k < p.w2.rows; ++k) lg.w2(k, j) += cb * sign_of(p.w2(k, j));
            for (std::size_t k = 0; k < p.w3.rows; ++k) lg.w3(k, j) += cb * sign_of(p.w3(k, j));
        }
    }
}

NetworkGradients backward(const ForwardTrace& trace, std::span<const double> s_true, const NetworkParams& params) {
    NetworkGradients grads = NetworkGradients::zeros_like(params);
    accumulate_data_gradients(trace, s_true, params, 1.0, grads);
    accumulate_penalty_gradients(params, grads);
    return grads;
}

DetectorResult detect(const NetworkParams& params, const Matrix& h, std::span<const double> y,
                      std::size_t layers_to_run, MacCounter* counter, Truncation truncation) {
    ForwardOptions opts;
    opts.skip_zero_beta = true;
    opts.with_normalizer = false;
    opts.truncation = truncation;
    opts.counter = counter;
    const ForwardTrace trace = network_forward(params, h, y, layers_to_run, opts);
    return finish_detection(trace.final_estimate(), h, y, params.config().constellation());
}

}  // namespace wesnet
