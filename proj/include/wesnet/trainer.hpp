#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "wesnet/errors.hpp"
#include "wesnet/network.hpp"
#include "wesnet/optimizer.hpp"

namespace wesnet {

struct TrainConfig {
    std::size_t iterations = 2000;
    std::size_t batch = 500;
    double snr_lo_db = 8.0;
    double snr_hi_db = 14.0;
    std::uint64_t seed = 1;
    double learning_rate = 1e-3;
    /// false trains through the unscaled recursion; only meaningful with unit profiles.
    bool apply_profile = true;
};

struct TrainResult {
    NetworkParams params;
    AdamState adam;
    std::vector<double> loss;  ///< mean regularized batch loss, one per iteration
};

/// Called after every optimizer step with the 0-based iteration and its loss.
using TrainObserver = std::function<void(std::size_t, const NetworkParams&, double)>;

/// Raised when a batch loss or gradient goes non-finite. Carries the parameters and
/// optimizer state from before the failing step.
class TrainingDivergedError : public NumericalError {
public:
    TrainingDivergedError(const std::string& what, std::size_t iteration, NetworkParams last_good,
                          AdamState last_good_adam)
        : NumericalError(what), iteration_(iteration), last_good_(std::move(last_good)),
          last_good_adam_(std::move(last_good_adam)) {}

    std::size_t iteration() const { return iteration_; }
    const NetworkParams& last_good() const { return last_good_; }
    const AdamState& last_good_adam() const { return last_good_adam_; }

private:
    std::size_t iteration_;
    NetworkParams last_good_;
    AdamState last_good_adam_;
};

/// Fresh batch every iteration; bitwise deterministic for a given seed.
TrainResult train(const NetConfig& cfg, const TrainConfig& tc, const TrainObserver& observer = {});

/// Continues from existing parameters and optimizer state.
TrainResult train_from(NetworkParams params, AdamState adam, const TrainConfig& tc, std::size_t first_iteration,
                       const TrainObserver& observer = {});

/// Stream ids used by train(); exposed so tests can reproduce the draws.
std::uint64_t init_stream_id();
std::uint64_t batch_stream_id(std::size_t iteration);

}  // namespace wesnet
