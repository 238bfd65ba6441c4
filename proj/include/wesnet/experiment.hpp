#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "wesnet/detectors.hpp"
#include "wesnet/network.hpp"
#include "wesnet/trainer.hpp"

namespace wesnet {

/// Everything a run needs. The config file is a flat JSON object whose keys are
/// exactly the field names below; unknown keys are rejected.
struct ExperimentConfig {
    // network
    std::size_t nt = 4;
    std::size_t nr = 8;
    Modulation modulation = Modulation::BPSK;
    std::optional<std::size_t> layers;  ///< defaults to 3 * nt
    ProfileKind profile = ProfileKind::HalfExponential;
    double keep_fraction = 1.0;
    bool learnable_beta = false;
    double lambda = 1e-3;
    std::size_t reg_start_layer = 1;
    double psi_t = 0.5;
    bool input_profile_mode = false;

    // training
    std::size_t iterations = 2000;
    std::size_t batch = 500;
    double train_snr_min = 8.0;
    double train_snr_max = 14.0;
    std::uint64_t seed = 1;
    double learning_rate = 1e-3;

    // evaluation
    std::vector<double> snr_grid{0, 2, 4, 6, 8, 10, 12, 14};
    std::size_t trials = 10000;
    std::size_t monte_carlo_rounds = 200;
    std::vector<std::string> detectors{"zf", "mmse"};
    std::size_t truncate_layers = 0;
    Truncation truncation = Truncation::Trailing;
    bool noiseless = false;
    int sdr_iterations = 500;
    int sdr_rounding = 100;

    // output
    std::string out_dir = "out";
    std::string checkpoint;  ///< learned-detector checkpoint; empty means out_dir default

    NetConfig net_config() const;
    TrainConfig train_config() const;
    SdrConfig sdr_config() const;
    std::size_t effective_layers() const { return layers.value_or(3 * nt); }

    /// Throws ConfigError naming the offending field.
    void validate() const;

    bool operator==(const ExperimentConfig&) const = default;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_from_json(const nlohmann::json& j);

/// Reads a config file; the file's keys override the defaults.
ExperimentConfig load_experiment(const std::filesystem::path& path);

/// 16 hex digits of FNV-1a over the canonical JSON form.
std::string config_hash(const ExperimentConfig& cfg);

/// Hash over the network and training fields only; names checkpoints so that
/// changing evaluation settings still finds the trained model.
std::string training_hash(const ExperimentConfig& cfg);

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t h = 0xcbf29ce484222325ULL);

/// Evenly spaced grid min, min + step, ... up to max inclusive (within 1e-9).
std::vector<double> snr_range(double min, double max, double step);

std::vector<std::string> known_detectors();
bool is_learned_detector(const std::string& name);

}  // namespace wesnet
