#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "wesnet/errors.hpp"
#include "wesnet/network.hpp"

using namespace wesnet;

namespace {

using EV = Eigen::VectorXd;
using EM = Eigen::MatrixXd;

EM em(const Matrix& m) {
    EM e(m.rows, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) e(i, j) = m(i, j);
    return e;
}

EV ev(std::span<const double> v) { return Eigen::Map<const EV>(v.data(), static_cast<Eigen::Index>(v.size())); }

/// Straight-line re-evaluation of one layer.
void oracle_layer(const LayerParams& p, const NetConfig& cfg, const EV& hty, const EM& hth, EV& s, EV& a) {
    const auto d = static_cast<Eigen::Index>(cfg.d());
    EV x(5 * d);
    x << hty, hth * s, s, a;
    const EV z = em(p.w1) * x + ev(p.b1);
    const EV u = z.cwiseMax(0.0).cwiseProduct(ev(p.beta.values));
    const EV o = em(p.w2) * u + ev(p.b2);
    const double t = cfg.psi_t, lv = cfg.level();
    s = o.unaryExpr([&](double v) { return lv * (-1.0 + (std::max(v + t, 0.0) - std::max(v - t, 0.0)) / t); });
    a = em(p.w3) * u + ev(p.b3);
}

NetworkParams random_params(const NetConfig& cfg, std::uint64_t seed, double bias_scale = 0.1) {
    RngStream rng(seed, 1);
    NetworkParams p = xavier_init(rng, cfg);
    for (std::size_t r = 0; r < p.num_layers(); ++r) {
        auto& l = p.mutable_layer(r);
        for (auto* b : {&l.b1, &l.b2, &l.b3})
            for (auto& v : *b) v = bias_scale * rng.normal();
    }
    return p;
}

Sample instance(const NetConfig& cfg, std::uint64_t seed, double snr = 5.0) {
    RngStream rng(seed, 2);
    return draw_sample(rng, cfg.nt, cfg.nr, cfg.constellation(), snr, snr);
}

NetConfig small_config(std::size_t layers = 3) {
    NetConfig c;
    c.nt = 2;
    c.nr = 4;
    c.layers = layers;
    c.lambda = 0.05;
    return c;
}

}  // namespace

TEST_CASE("psi soft sign") {
    CHECK(psi_soft_sign(0.0, 0.5, 1.0) == 0.0);
    CHECK(psi_soft_sign(0.25, 0.5, 1.0) == 0.5);
    CHECK(psi_soft_sign(0.5, 0.5, 1.0) == 1.0);
    CHECK(psi_soft_sign(3.0, 0.5, 1.0) == 1.0);
    CHECK(psi_soft_sign(-0.7, 0.5, kQam4Level) == -kQam4Level);
}

TEST_CASE("xavier init bounds, zero biases and determinism") {
    NetConfig cfg;
    RngStream a(7, 1), b(7, 1);
    const NetworkParams p = xavier_init(a, cfg), q = xavier_init(b, cfg);
    CHECK(p == q);
    const double d = static_cast<double>(cfg.d());
    const double bound1 = std::sqrt(6.0 / (13.0 * d));
    for (const auto& l : p.layers()) {
        for (double w : l.w1.data) CHECK(std::abs(w) <= bound1);
        for (double v : l.b1) CHECK(v == 0.0);
        for (double v : l.b2) CHECK(v == 0.0);
        for (double v : l.b3) CHECK(v == 0.0);
        CHECK(satisfies_profile_invariants(l.beta));
    }
}

TEST_CASE("config validation") {
    NetConfig c;
    c.reg_start_layer = 13;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.layers = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    CHECK(c.hidden() == 8 * c.d());
    CHECK(c.aux() == 2 * c.d());
}

TEST_CASE("zero weights give psi(b2) and b3") {
    NetConfig cfg = small_config(1);
    NetworkParams p = random_params(cfg, 1);
    auto& l = p.mutable_layer(0);
    for (auto* m : {&l.w1, &l.w2, &l.w3}) std::fill(m->data.begin(), m->data.end(), 0.0);
    const Sample s = instance(cfg, 1);
    const auto tr = network_forward(p, s.channel.h_real, s.y, 1);
    CHECK(tr.layers[0].s_hat == psi_soft_sign(l.b2, cfg.psi_t, cfg.level()));
    CHECK(tr.layers[0].a_hat == l.b3);
}

TEST_CASE("forward matches the chained straight-line oracle") {
    for (auto mod : {Modulation::BPSK, Modulation::QAM4}) {
        NetConfig cfg = small_config(3);
        cfg.modulation = mod;
        cfg.keep_fraction = 0.75;
        const NetworkParams p = random_params(cfg, 2);
        const Sample s = instance(cfg, 2);
        const auto tr = network_forward(p, s.channel.h_real, s.y, 3);

        const EM h = em(s.channel.h_real);
        const EM hth = h.transpose() * h;
        const EV hty = h.transpose() * ev(s.y);
        EV st = EV::Zero(static_cast<Eigen::Index>(cfg.d())), at = EV::Zero(static_cast<Eigen::Index>(cfg.aux()));
        for (std::size_t r = 0; r < 3; ++r) {
            oracle_layer(p.layer(r), cfg, hty, hth, st, at);
            for (Eigen::Index i = 0; i < st.size(); ++i)
                CHECK(std::abs(tr.layers[r].s_hat[i] - st(i)) <= 1e-12 * std::max(1.0, std::abs(st(i))));
            for (Eigen::Index i = 0; i < at.size(); ++i)
                CHECK(std::abs(tr.layers[r].a_hat[i] - at(i)) <= 1e-12 * std::max(1.0, std::abs(at(i))));
        }
        for (const auto& l : tr.layers)
            for (double v : l.s_hat) CHECK(std::abs(v) <= cfg.level());
    }
}

TEST_CASE("unit profile is bit-identical to the unscaled recursion") {
    NetConfig cfg;
    cfg.profile_kind = ProfileKind::Unity;
    cfg.lambda = 0.0;
    for (std::uint64_t t = 0; t < 50; ++t) {
        const NetworkParams p = random_params(cfg, 100 + t);
        const Sample s = instance(cfg, 100 + t, 10.0);
        ForwardOptions plain;
        plain.apply_profile = false;
        const auto a = network_forward(p, s.channel.h_real, s.y, cfg.layers);
        const auto b = network_forward(p, s.channel.h_real, s.y, cfg.layers, plain);
        for (std::size_t r = 0; r < cfg.layers; ++r) {
            CHECK(a.layers[r].s_hat == b.layers[r].s_hat);
            CHECK(a.layers[r].a_hat == b.layers[r].a_hat);
        }
    }
}

TEST_CASE("sparse skip path: identical output, exact MAC reduction") {
    NetConfig cfg;
    cfg.keep_fraction = 0.5;
    const NetworkParams p = random_params(cfg, 3);
    const Sample s = instance(cfg, 3);
    MacCounter dense_c, sparse_c;
    ForwardOptions dense, sparse;
    dense.counter = &dense_c;
    sparse.counter = &sparse_c;
    sparse.skip_zero_beta = true;
    const auto a = network_forward(p, s.channel.h_real, s.y, cfg.layers, dense);
    const auto b = network_forward(p, s.channel.h_real, s.y, cfg.layers, sparse);
    for (std::size_t r = 0; r < cfg.layers; ++r) {
        CHECK(a.layers[r].s_hat == b.layers[r].s_hat);
        CHECK(a.layers[r].a_hat == b.layers[r].a_hat);
    }
    const std::size_t d = cfg.d(), zeroed = cfg.hidden() / 2;
    for (std::size_t r = 0; r < cfg.layers; ++r) {
        CHECK(dense_c.hidden_gated[r] - sparse_c.hidden_gated[r] == 2 * (5 * d + d + 2 * d) * zeroed);
        CHECK(dense_c.ungated[r] == sparse_c.ungated[r]);
    }
    CHECK(2 * sparse_c.hidden_gated_total() == dense_c.hidden_gated_total());
}

TEST_CASE("truncation") {
    NetConfig cfg;
    NetworkParams p = random_params(cfg, 4);
    const Sample s = instance(cfg, 4);
    const auto full = detect(p, s.channel.h_real, s.y, cfg.layers);
    const auto tr = network_forward(p, s.channel.h_real, s.y, cfg.layers);
    CHECK(full.soft == tr.final_estimate());

    // Poison the trailing layers: trailing truncation must never read them.
    const auto part = network_forward(p, s.channel.h_real, s.y, 8);
    for (std::size_t r = 8; r < cfg.layers; ++r) {
        auto& l = p.mutable_layer(r);
        std::fill(l.w1.data.begin(), l.w1.data.end(), std::numeric_limits<double>::quiet_NaN());
    }
    const auto poisoned = network_forward(p, s.channel.h_real, s.y, 8);
    CHECK(poisoned.layers.size() == 8);
    CHECK(poisoned.final_estimate() == part.final_estimate());
    CHECK(detect(p, s.channel.h_real, s.y, 8).soft == part.final_estimate());

    ForwardOptions leading;
    leading.truncation = Truncation::Leading;
    const auto lead = network_forward(p, s.channel.h_real, s.y, 2, leading);
    CHECK(lead.layers.front().layer_index == cfg.layers - 2);

    std::uint64_t prev = 0, per_layer = 0;
    for (std::size_t k = 1; k <= cfg.layers; ++k) {
        MacCounter c;
        (void)detect(p, s.channel.h_real, s.y, k, &c);
        CHECK(c.total() > prev);
        if (k == 2) per_layer = c.total() - prev;
        if (k > 2) CHECK(c.total() - prev == per_layer);
        prev = c.total();
    }
}

TEST_CASE("measured MACs of the unscaled network against the per-layer formula") {
    NetConfig cfg;
    cfg.nt = 30;
    cfg.nr = 60;
    cfg.layers = 2;
    cfg.profile_kind = ProfileKind::Unity;
    const NetworkParams p = random_params(cfg, 5);
    const Sample s = instance(cfg, 5);
    MacCounter c;
    (void)detect(p, s.channel.h_real, s.y, 2, &c);
    const std::uint64_t d = 30;
    CHECK(c.layer_total(0) == 130 * d * d - d);
    CHECK(c.preprocessing == d * (d + 1) / 2 * (2 * 120 - 1) + d * (2 * 120 - 1));
}

TEST_CASE("detect output contract") {
    NetConfig cfg;
    const NetworkParams p = random_params(cfg, 6);
    const Sample s = instance(cfg, 6);
    const auto r = detect(p, s.channel.h_real, s.y, cfg.layers);
    CHECK(r.hard == hard_slice(r.soft, cfg.constellation()));
    CHECK(r.objective == squared_distance(s.y, matvec(s.channel.h_real, r.hard)));
    CHECK(detect(p, s.channel.h_real, s.y, cfg.layers).soft == r.soft);
}

TEST_CASE("weighted loss") {
    NetConfig cfg = small_config(1);
    const NetworkParams p = random_params(cfg, 7);
    const Sample s = instance(cfg, 7);
    CHECK(loss_weighted(network_forward(p, s.channel.h_real, s.y, 1), s.s) == 0.0);

    ForwardTrace t;
    t.layers.resize(2);
    t.layers[0].s_hat = {5, 5};
    t.layers[1].s_hat = {0, 0};  // ||s - s_2||^2 = 2
    t.s_zf = {-1, 1};            // ||s - s_zf||^2 = 4
    const Vector truth{1, 1};
    CHECK(loss_weighted(t, truth) == doctest::Approx(std::log(2.0) * 0.5).epsilon(1e-15));
    t.layers[0].s_hat = truth;
    t.layers[1].s_hat = truth;
    CHECK(loss_weighted(t, truth) == 0.0);
}

TEST_CASE("sparsity penalty") {
    NetConfig cfg = small_config(2);
    cfg.lambda = 0.1;
    cfg.reg_start_layer = 2;
    cfg.profile_kind = ProfileKind::Unity;
    NetworkParams p = random_params(cfg, 8);
    auto& l = p.mutable_layer(1);
    for (auto* m : {&l.w1, &l.w2, &l.w3}) std::fill(m->data.begin(), m->data.end(), 0.0);
    l.w1(0, 0) = 1.5;
    l.w2(1, 3) = -1.0;
    l.w3(0, 5) = 0.5;  // sum of |beta w| = 3
    CHECK(cfg.lambda * sparsity_penalty(p) == doctest::Approx(0.1 * std::log(4.0)).epsilon(1e-15));

    // Layer 1 contributes nothing when regularization starts there.
    NetConfig one = small_config(1);
    one.reg_start_layer = 1;
    CHECK(sparsity_penalty(random_params(one, 9)) == 0.0);

    NetConfig zero = small_config(3);
    zero.lambda = 0.0;
    const NetworkParams q = random_params(zero, 10);
    const Sample s = instance(zero, 10);
    const auto tr = network_forward(q, s.channel.h_real, s.y, 3);
    CHECK(loss_regularized(tr, s.s, q) == loss_weighted(tr, s.s));
    NetworkGradients pen = NetworkGradients::zeros_like(q);
    accumulate_penalty_gradients(q, pen);
    for (const auto& g : pen.layers) {
        for (double v : g.w1.data) CHECK(v == 0.0);
        for (double v : g.beta) CHECK(v == 0.0);
    }
}

namespace {

/// Max relative error between backward() and central differences over every
/// parameter, skipping profile entries pinned to zero by the mask.
double gradient_check(NetworkParams p, const Sample& s, bool& any_beta_checked) {
    const std::size_t L = p.num_layers();
    const auto tr = network_forward(p, s.channel.h_real, s.y, L);
    const NetworkGradients g = backward(tr, s.s, p);
    auto f = [&] { return loss_regularized(network_forward(p, s.channel.h_real, s.y, L), s.s, p); };
    double worst = 0.0;
    auto check = [&](std::vector<double>& param, const std::vector<double>& grad, bool is_beta) {
        for (std::size_t i = 0; i < param.size(); ++i) {
            if (is_beta && !(param[i] > 0.0)) continue;
            any_beta_checked |= is_beta;
            const double eps = 1e-5, orig = param[i];
            param[i] = orig + eps;
            const double fp = f();
            param[i] = orig - eps;
            const double fm = f();
            param[i] = orig;
            const double fd = (fp - fm) / (2 * eps);
            worst = std::max(worst, std::abs(fd - grad[i]) / std::max({std::abs(fd), std::abs(grad[i]), 1e-3}));
        }
    };
    for (std::size_t r = 0; r < L; ++r) {
        auto& l = p.mutable_layer(r);
        const auto& gl = g.layers[r];
        check(l.w1.data, gl.w1.data, false);
        check(l.b1, gl.b1, false);
        check(l.w2.data, gl.w2.data, false);
        check(l.b2, gl.b2, false);
        check(l.w3.data, gl.w3.data, false);
        check(l.b3, gl.b3, false);
        if (p.config().beta_trainable()) check(l.beta.values, gl.beta, true);
    }
    return worst;
}

}  // namespace

TEST_CASE("backward matches central finite differences") {
    for (auto kind : {ProfileKind::HalfExponential, ProfileKind::Learnable}) {
        for (double keep : {1.0, 0.5}) {
            NetConfig cfg = small_config(3);
            cfg.profile_kind = kind;
            cfg.keep_fraction = keep;
            NetworkParams p = random_params(cfg, 11);
            if (kind == ProfileKind::Learnable)
                for (std::size_t r = 0; r < 3; ++r) {
                    auto& beta = p.mutable_layer(r).beta.values;
                    for (std::size_t j = 0; j < beta.size(); ++j)
                        if (beta[j] > 0) beta[j] = 1.0 - 0.04 * static_cast<double>(j);
                }
            bool beta_checked = false;
            const double worst = gradient_check(p, instance(cfg, 11, 0.0), beta_checked);
            CAPTURE(keep);
            CHECK(worst < 1e-4);
            CHECK(beta_checked == (kind == ProfileKind::Learnable));
        }
    }
}

TEST_CASE("masked units receive exactly zero gradient") {
    NetConfig cfg = small_config(3);
    cfg.profile_kind = ProfileKind::Learnable;
    cfg.keep_fraction = 0.5;
    const NetworkParams p = random_params(cfg, 12);
    const Sample s = instance(cfg, 12);
    const auto g = backward(network_forward(p, s.channel.h_real, s.y, 3), s.s, p);
    const std::size_t cut = keep_mask(cfg.hidden(), 0.5).cutoff_index;
    for (std::size_t r = 0; r < 3; ++r) {
        const auto& gl = g.layers[r];
        for (std::size_t j = cut; j < cfg.hidden(); ++j) {
            CHECK(gl.beta[j] == 0.0);
            for (std::size_t k = 0; k < gl.w2.rows; ++k) CHECK(gl.w2(k, j) == 0.0);
            for (std::size_t k = 0; k < gl.w3.rows; ++k) CHECK(gl.w3(k, j) == 0.0);
        }
    }
}

TEST_CASE("stale traces are rejected") {
    NetConfig cfg = small_config(2);
    NetworkParams p = random_params(cfg, 13);
    const Sample s = instance(cfg, 13);
    const auto tr = network_forward(p, s.channel.h_real, s.y, 2);
    p.mutable_layer(0).b1[0] += 1.0;
    CHECK_THROWS_AS(backward(tr, s.s, p), ContractError);
}
