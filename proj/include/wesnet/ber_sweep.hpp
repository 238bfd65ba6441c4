#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wesnet/csv.hpp"
#include "wesnet/experiment.hpp"
#include "wesnet/network.hpp"

namespace wesnet {

/// Progress hook: (completed work chunks, total chunks). Called from worker threads.
using SweepProgress = std::function<void(std::size_t, std::size_t)>;

/// Monte-Carlo BER for every detector in cfg.detectors over cfg.snr_grid.
///
/// Channel, symbols and noise of trial t at SNR index i come from a stream keyed
/// by (seed, i, t) and are shared by all detectors; randomized detectors draw
/// from (seed, detector, i, t). Trials are split into cfg.monte_carlo_rounds
/// chunks handed to `threads` workers; integer error counts are summed per chunk,
/// so the output does not depend on the thread count.
///
/// Throws ConfigError before any work if a learned detector is requested
/// without parameters.
std::vector<BerCurve> run_ber_sweep(const ExperimentConfig& cfg, const std::optional<NetworkParams>& learned,
                                    std::size_t threads, const SweepProgress& progress = {});

std::uint64_t eval_stream_id(std::size_t snr_index, std::uint64_t trial);
std::uint64_t detector_stream_id(const std::string& detector, std::size_t snr_index, std::uint64_t trial);

}  // namespace wesnet
