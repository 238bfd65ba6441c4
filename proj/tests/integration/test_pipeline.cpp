// Train -> checkpoint -> reload -> evaluate, on the desk-scale configuration.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>

#include "doctest.h"
#include "wesnet/ber_sweep.hpp"
#include "wesnet/checkpoint.hpp"
#include "wesnet/experiment.hpp"
#include "wesnet/network.hpp"
#include "wesnet/trainer.hpp"

using namespace wesnet;
namespace fs = std::filesystem;

namespace {

ExperimentConfig desk() {
    ExperimentConfig e;
    e.nt = 4;
    e.nr = 8;
    e.layers = 12;
    e.profile = ProfileKind::HalfExponential;
    e.keep_fraction = 0.5;
    e.iterations = 2000;
    e.batch = 500;
    e.seed = 11;
    e.snr_grid = {8.0, 12.0};
    e.trials = 4000;
    e.monte_carlo_rounds = 16;
    e.detectors = {"wesnet", "mmse"};
    return e;
}

void same_curves(const std::vector<BerCurve>& a, const std::vector<BerCurve>& b) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].detector == b[i].detector);
        CHECK(a[i].config_hash == b[i].config_hash);
        CHECK(a[i].points == b[i].points);
    }
}

}  // namespace

TEST_CASE("desk training, persistence and evaluation") {
    const ExperimentConfig cfg = desk();
    const auto t0 = std::chrono::steady_clock::now();
    const TrainResult r = train(cfg.net_config(), cfg.train_config());
    const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
    MESSAGE("desk training took " << minutes * 60.0 << " s, loss " << r.loss.front() << " -> " << r.loss.back());

    REQUIRE(r.loss.size() == 2000);
    CHECK(minutes < 30.0);
    CHECK(r.loss.back() <= 0.5 * r.loss.front());

    const fs::path dir = fs::temp_directory_path() / ("wesnet_pipeline_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const fs::path path = dir / "desk.wsn";
    save_checkpoint({cfg, r.params, r.adam}, path);
    const Checkpoint back = load_checkpoint(path);
    fs::remove_all(dir);
    CHECK(back.params == r.params);
    CHECK(config_hash(back.experiment) == config_hash(cfg));

    same_curves(run_ber_sweep(cfg, r.params, 1), run_ber_sweep(back.experiment, back.params, 1));

    SUBCASE("noiseless detection recovers the symbols") {
        const Constellation c = Constellation::of(cfg.modulation);
        RngStream rng(cfg.seed, 0x6e6f6e6f697365ULL);
        const double inf = std::numeric_limits<double>::infinity();
        int exact = 0;
        const int n = 2000;
        for (int i = 0; i < n; ++i) {
            const Sample s = draw_sample(rng, cfg.nt, cfg.nr, c, inf, inf);
            REQUIRE(s.sigma == 0.0);
            const DetectorResult d = detect(r.params, s.channel.h_real, s.y, r.params.num_layers());
            exact += d.hard == s.s;
        }
        MESSAGE("noiseless exact recovery " << exact << " / " << n);
        CHECK(exact >= 0.99 * n);
    }
}

TEST_CASE("resuming from a checkpoint continues the same trajectory") {
    NetConfig nc;
    nc.nt = 2;
    nc.nr = 4;
    nc.layers = 4;
    nc.profile_kind = ProfileKind::Learnable;
    nc.keep_fraction = 0.75;
    TrainConfig tc;
    tc.iterations = 12;
    tc.batch = 16;
    tc.seed = 3;
    const TrainResult whole = train(nc, tc);

    TrainConfig first = tc;
    first.iterations = 5;
    const TrainResult head = train(nc, first);

    ExperimentConfig e;
    e.nt = 2;
    e.nr = 4;
    e.layers = 4;
    e.profile = ProfileKind::Learnable;
    e.keep_fraction = 0.75;
    const Checkpoint restored = decode_checkpoint(encode_checkpoint({e, head.params, head.adam}));
    REQUIRE(restored.adam.has_value());
    TrainConfig rest = tc;
    rest.iterations = 7;
    const TrainResult tail = train_from(restored.params, *restored.adam, rest, 5);

    CHECK(tail.params == whole.params);
    REQUIRE(tail.loss.size() == 7);
    for (std::size_t i = 0; i < 7; ++i) CHECK(tail.loss[i] == whole.loss[5 + i]);
}
