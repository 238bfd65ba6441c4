#include "wesnet/trainer.hpp"

#include <cmath>
#include <string>

#include "wesnet/errors.hpp"

namespace wesnet {

namespace {

constexpr std::uint64_t kTrainTag = 0x747261696eULL;  // "train"
constexpr std::uint64_t kInitTag = 0x696e6974ULL;      // "init"

}  // namespace

std::uint64_t init_stream_id() { return derive_stream_id({kTrainTag, kInitTag}); }

std::uint64_t batch_stream_id(std::size_t iteration) { return derive_stream_id({kTrainTag, iteration}); }

TrainResult train(const NetConfig& cfg, const TrainConfig& tc, const TrainObserver& observer) {
    cfg.validate();
    RngStream init_rng(tc.seed, init_stream_id());
    NetworkParams params = xavier_init(init_rng, cfg);
    AdamState adam = AdamState::for_params(params, tc.learning_rate);
    return train_from(std::move(params), std::move(adam), tc, 0, observer);
}

TrainResult train_from(NetworkParams params, AdamState adam, const TrainConfig& tc, std::size_t first_iteration,
                       const TrainObserver& observer) {
    if (tc.batch < 1) throw ConfigError("train: batch must be >= 1");
    if (!(tc.snr_lo_db <= tc.snr_hi_db)) throw ConfigError("train: snr_lo must not exceed snr_hi");
    if (!(tc.learning_rate > 0.0)) throw ConfigError("train: learning rate must be positive");

    const NetConfig& cfg = params.config();
    const BatchConfig bc{cfg.nt, cfg.nr, cfg.modulation, tc.snr_lo_db, tc.snr_hi_db, tc.batch, false};
    ForwardOptions fwd;
    fwd.apply_profile = tc.apply_profile;

    TrainResult out;
    out.loss.reserve(tc.iterations);
    NetworkGradients grads = NetworkGradients::zeros_like(params);
    ForwardTrace trace;
    const double scale = 1.0 / static_cast<double>(tc.batch);

    for (std::size_t k = 0; k < tc.iterations; ++k) {
        const std::size_t it = first_iteration + k;
        RngStream rng(tc.seed, batch_stream_id(it));
        const TransmissionBatch batch = generate_batch(rng, bc);

        grads.set_zero();
        double data_loss = 0.0;
        for (const Sample& smp : batch.samples) {
            network_forward_into(params, smp.channel.h_real, smp.y, cfg.layers, fwd, trace);
            data_loss += loss_weighted(trace, smp.s);
            accumulate_data_gradients(trace, smp.s, params, scale, grads);
        }
        const double loss = data_loss * scale + cfg.lambda * sparsity_penalty(params);
        if (cfg.lambda != 0.0) accumulate_penalty_gradients(params, grads);

        if (!std::isfinite(loss))
            throw TrainingDivergedError("training diverged at iteration " + std::to_string(it) + ": loss is " +
                                            std::to_string(loss),
                                        it, params, adam);
        NetworkParams last_good = params;
        AdamState last_adam = adam;
        try {
            adam_step(adam, params, grads);
        } catch (const NumericalError& e) {
            throw TrainingDivergedError("training diverged at iteration " + std::to_string(it) + ": " + e.what(),
                                        it, std::move(last_good), std::move(last_adam));
        }
        out.loss.push_back(loss);
        if (observer) observer(it, params, loss);
    }
    out.params = std::move(params);
    out.adam = std::move(adam);
    return out;
}

}  // namespace wesnet
