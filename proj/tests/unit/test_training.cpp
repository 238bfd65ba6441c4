#include <cmath>

#include "doctest.h"
#include "wesnet/errors.hpp"
#include "wesnet/optimizer.hpp"
#include "wesnet/trainer.hpp"

using namespace wesnet;

namespace {

NetConfig tiny(ProfileKind kind = ProfileKind::HalfExponential, double keep = 1.0) {
    NetConfig c;
    c.nt = 2;
    c.nr = 4;
    c.layers = 3;
    c.profile_kind = kind;
    c.keep_fraction = keep;
    return c;
}

NetworkParams init(const NetConfig& c, std::uint64_t seed = 1) {
    RngStream r(seed, 0);
    return xavier_init(r, c);
}

}  // namespace

TEST_CASE("adam: zero gradient leaves parameters and decays moments") {
    NetworkParams p = init(tiny());
    AdamState s = AdamState::for_params(p);
    NetworkGradients g = NetworkGradients::zeros_like(p);
    const NetworkParams fresh = p;
    adam_step(s, p, g);
    CHECK(p == fresh);
    CHECK(s.first_moment == NetworkGradients::zeros_like(p));
    CHECK(s.second_moment == NetworkGradients::zeros_like(p));

    // Accumulated moments decay geometrically under a zero gradient; only entries
    // with nonzero momentum move.
    g.layers[0].w1.data[0] = 0.3;
    adam_step(s, p, g);
    const double m = s.first_moment.layers[0].w1.data[0];
    const double v = s.second_moment.layers[0].w1.data[0];
    const NetworkParams before = p;
    g.set_zero();
    adam_step(s, p, g);
    CHECK(s.first_moment.layers[0].w1.data[0] == 0.9 * m);
    CHECK(s.second_moment.layers[0].w1.data[0] == 0.999 * v);
    CHECK(p.layer(0).w1.data[0] != before.layer(0).w1.data[0]);
    CHECK(p.layer(0).w1.data[1] == before.layer(0).w1.data[1]);
    CHECK(p.layer(1) == before.layer(1));
    CHECK(s.step == 3);
}

TEST_CASE("adam: first step matches the scalar closed form") {
    NetworkParams p = init(tiny());
    AdamState s = AdamState::for_params(p, 1e-3);
    NetworkGradients g = NetworkGradients::zeros_like(p);
    const double w0 = p.layer(1).w2.data[3], b0 = p.layer(2).b3[1];
    g.layers[1].w2.data[3] = -2.5;
    g.layers[2].b3[1] = 1e-9;
    adam_step(s, p, g);
    // Bias correction makes m_hat = g and v_hat = g^2 after one step.
    CHECK(p.layer(1).w2.data[3] == doctest::Approx(w0 - 1e-3 * -2.5 / (2.5 + 1e-8)).epsilon(1e-15));
    CHECK(p.layer(2).b3[1] == doctest::Approx(b0 - 1e-3 * 1e-9 / (1e-9 + 1e-8)).epsilon(1e-12));
}

TEST_CASE("adam: non-finite gradient names the tensor and changes nothing") {
    NetworkParams p = init(tiny());
    AdamState s = AdamState::for_params(p);
    NetworkGradients g = NetworkGradients::zeros_like(p);
    g.layers[2].b2[0] = std::nan("");
    const NetworkParams before = p;
    try {
        adam_step(s, p, g);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("layer 2 tensor b2") != std::string::npos);
    }
    CHECK(p == before);
    CHECK(s.step == 0);
}

TEST_CASE("adam: learnable profiles stay monotone and masked") {
    NetworkParams p = init(tiny(ProfileKind::Learnable, 0.5));
    AdamState s = AdamState::for_params(p, 0.05);
    NetworkGradients g = NetworkGradients::zeros_like(p);
    RngStream r(3, 3);
    for (int step = 0; step < 50; ++step) {
        for (auto& l : g.layers)
            for (auto& v : l.beta) v = r.normal();
        adam_step(s, p, g);
        for (const auto& l : p.layers()) REQUIRE(satisfies_profile_invariants(l.beta));
    }
}

TEST_CASE("training is deterministic per seed") {
    TrainConfig tc;
    tc.iterations = 5;
    tc.batch = 20;
    tc.seed = 17;
    const auto a = train(tiny(), tc), b = train(tiny(), tc);
    CHECK(a.loss == b.loss);
    CHECK(a.params == b.params);
    tc.seed = 18;
    CHECK(train(tiny(), tc).loss != a.loss);
}

TEST_CASE("unit profile with zero penalty trains exactly like the unscaled network") {
    NetConfig c = tiny(ProfileKind::Unity);
    c.lambda = 0.0;
    TrainConfig tc;
    tc.iterations = 5;
    tc.batch = 20;
    const auto scaled = train(c, tc);
    tc.apply_profile = false;
    const auto plain = train(c, tc);
    CHECK(scaled.loss == plain.loss);
    CHECK(scaled.params == plain.params);
}

TEST_CASE("observer sees every iteration") {
    TrainConfig tc;
    tc.iterations = 4;
    tc.batch = 5;
    std::vector<std::size_t> seen;
    const auto r = train(tiny(), tc, [&](std::size_t it, const NetworkParams&, double) { seen.push_back(it); });
    CHECK(seen == std::vector<std::size_t>{0, 1, 2, 3});
    CHECK(r.loss.size() == 4);
}

TEST_CASE("divergence reports the last good parameters") {
    TrainConfig tc;
    tc.iterations = 50;
    tc.batch = 5;
    // Bounded outputs keep the loss finite for any finite weights, so overflow is
    // forced directly: huge weights in the last layer overflow the output.
    const TrainResult warm = [&] {
        TrainConfig t = tc;
        t.iterations = 3;
        return train(tiny(), t);
    }();
    NetworkParams blown = warm.params;
    auto& last = blown.mutable_layer(blown.num_layers() - 1);
    for (auto& w : last.w1.data) w = 1e308;
    for (auto& w : last.w2.data) w = -1e308;
    try {
        (void)train_from(blown, warm.adam, tc, 3);
        FAIL("expected divergence");
    } catch (const TrainingDivergedError& e) {
        CHECK(e.iteration() == 3);
        CHECK(e.last_good() == blown);
        CHECK(e.last_good_adam().step == warm.adam.step);
    }
}
