#include "wesnet/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "wesnet/errors.hpp"

namespace wesnet {

using nlohmann::json;

namespace {

std::string_view truncation_name(Truncation t) { return t == Truncation::Trailing ? "trailing" : "leading"; }

Truncation parse_truncation(const std::string& s) {
    if (s == "trailing") return Truncation::Trailing;
    if (s == "leading") return Truncation::Leading;
    throw ConfigError("truncation must be 'trailing' or 'leading', got '" + s + "'");
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field '") + key + "': " + e.what());
    }
}

}  // namespace

NetConfig ExperimentConfig::net_config() const {
    NetConfig c;
    c.nt = nt;
    c.nr = nr;
    c.modulation = modulation;
    c.layers = effective_layers();
    c.profile_kind = profile;
    c.keep_fraction = keep_fraction;
    c.learnable_beta = learnable_beta;
    c.lambda = lambda;
    c.reg_start_layer = reg_start_layer;
    c.psi_t = psi_t;
    c.input_profile_mode = input_profile_mode;
    return c;
}

TrainConfig ExperimentConfig::train_config() const {
    TrainConfig t;
    t.iterations = iterations;
    t.batch = batch;
    t.snr_lo_db = train_snr_min;
    t.snr_hi_db = train_snr_max;
    t.seed = seed;
    t.learning_rate = learning_rate;
    return t;
}

SdrConfig ExperimentConfig::sdr_config() const {
    SdrConfig s;
    s.admm_iterations = sdr_iterations;
    s.rounding_samples = sdr_rounding;
    return s;
}

void ExperimentConfig::validate() const {
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError(msg);
    };
    net_config().validate();
    require(batch >= 1, "batch must be >= 1");
    require(std::isfinite(train_snr_min) && std::isfinite(train_snr_max) && train_snr_min <= train_snr_max,
            "train_snr_min must not exceed train_snr_max");
    require(learning_rate > 0.0 && std::isfinite(learning_rate), "learning_rate must be positive");
    require(!snr_grid.empty(), "snr_grid must not be empty");
    for (std::size_t i = 0; i < snr_grid.size(); ++i) {
        require(std::isfinite(snr_grid[i]), "snr_grid entries must be finite");
        if (i > 0) require(snr_grid[i - 1] < snr_grid[i], "snr_grid must be strictly ascending");
    }
    require(trials >= 1, "trials must be >= 1");
    require(monte_carlo_rounds >= 1, "monte_carlo_rounds must be >= 1");
    require(truncate_layers < effective_layers(), "truncate_layers must leave at least one layer");
    require(sdr_iterations >= 1 && sdr_rounding >= 1, "sdr_iterations and sdr_rounding must be >= 1");
    const auto known = known_detectors();
    std::set<std::string> seen;
    for (const auto& d : detectors) {
        require(std::find(known.begin(), known.end(), d) != known.end(), "unknown detector '" + d + "'");
        require(seen.insert(d).second, "detector '" + d + "' listed twice");
    }
    require(!out_dir.empty(), "out_dir must not be empty");
}

json to_json(const ExperimentConfig& c) {
    json j;
    j["nt"] = c.nt;
    j["nr"] = c.nr;
    j["modulation"] = std::string(to_string(c.modulation));
    j["layers"] = c.layers ? json(*c.layers) : json(nullptr);
    j["profile"] = std::string(to_string(c.profile));
    j["keep_fraction"] = c.keep_fraction;
    j["learnable_beta"] = c.learnable_beta;
    j["lambda"] = c.lambda;
    j["reg_start_layer"] = c.reg_start_layer;
    j["psi_t"] = c.psi_t;
    j["input_profile_mode"] = c.input_profile_mode;
    j["iterations"] = c.iterations;
    j["batch"] = c.batch;
    j["train_snr_min"] = c.train_snr_min;
    j["train_snr_max"] = c.train_snr_max;
    j["seed"] = c.seed;
    j["learning_rate"] = c.learning_rate;
    j["snr_grid"] = c.snr_grid;
    j["trials"] = c.trials;
    j["monte_carlo_rounds"] = c.monte_carlo_rounds;
    j["detectors"] = c.detectors;
    j["truncate_layers"] = c.truncate_layers;
    j["truncation"] = std::string(truncation_name(c.truncation));
    j["noiseless"] = c.noiseless;
    j["sdr_iterations"] = c.sdr_iterations;
    j["sdr_rounding"] = c.sdr_rounding;
    j["out_dir"] = c.out_dir;
    j["checkpoint"] = c.checkpoint;
    return j;
}

ExperimentConfig experiment_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    static const ExperimentConfig defaults;
    const json reference = to_json(defaults);
    for (const auto& [key, value] : j.items())
        if (!reference.contains(key)) throw ConfigError("unknown config key '" + key + "'");

    ExperimentConfig c;
    read(j, "nt", c.nt);
    read(j, "nr", c.nr);
    std::string text;
    if (j.contains("modulation")) {
        read(j, "modulation", text);
        c.modulation = parse_modulation(text);
    }
    if (j.contains("layers") && !j.at("layers").is_null()) {
        std::size_t l = 0;
        read(j, "layers", l);
        c.layers = l;
    }
    if (j.contains("profile")) {
        read(j, "profile", text);
        c.profile = parse_profile_kind(text);
    }
    read(j, "keep_fraction", c.keep_fraction);
    read(j, "learnable_beta", c.learnable_beta);
    read(j, "lambda", c.lambda);
    read(j, "reg_start_layer", c.reg_start_layer);
    read(j, "psi_t", c.psi_t);
    read(j, "input_profile_mode", c.input_profile_mode);
    read(j, "iterations", c.iterations);
    read(j, "batch", c.batch);
    read(j, "train_snr_min", c.train_snr_min);
    read(j, "train_snr_max", c.train_snr_max);
    read(j, "seed", c.seed);
    read(j, "learning_rate", c.learning_rate);
    read(j, "snr_grid", c.snr_grid);
    read(j, "trials", c.trials);
    read(j, "monte_carlo_rounds", c.monte_carlo_rounds);
    read(j, "detectors", c.detectors);
    read(j, "truncate_layers", c.truncate_layers);
    if (j.contains("truncation")) {
        read(j, "truncation", text);
        c.truncation = parse_truncation(text);
    }
    read(j, "noiseless", c.noiseless);
    read(j, "sdr_iterations", c.sdr_iterations);
    read(j, "sdr_rounding", c.sdr_rounding);
    read(j, "out_dir", c.out_dir);
    read(j, "checkpoint", c.checkpoint);
    return c;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return experiment_from_json(j);
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

std::string hex_hash(const json& j) {
    const std::string canonical = j.dump();
    const std::uint64_t h = fnv1a64(canonical.data(), canonical.size());
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace

std::string config_hash(const ExperimentConfig& cfg) { return hex_hash(to_json(cfg)); }

std::string training_hash(const ExperimentConfig& cfg) {
    static const char* const kTrainingKeys[] = {
        "nt",     "nr",         "modulation",         "layers",     "profile",     "keep_fraction",
        "learnable_beta", "lambda", "reg_start_layer", "psi_t", "input_profile_mode", "iterations",
        "batch",  "train_snr_min", "train_snr_max",   "seed",       "learning_rate"};
    const json full = to_json(cfg);
    json j = json::object();
    for (const char* k : kTrainingKeys) j[k] = full.at(k);
    return hex_hash(j);
}

std::vector<double> snr_range(double min, double max, double step) {
    if (!(step > 0.0) || !std::isfinite(min) || !std::isfinite(max) || min > max)
        throw ConfigError("SNR range needs finite min <= max and a positive step");
    std::vector<double> out;
    for (std::size_t i = 0;; ++i) {
        const double v = min + static_cast<double>(i) * step;
        if (v > max + 1e-9) break;
        out.push_back(v);
    }
    return out;
}

std::vector<std::string> known_detectors() { return {"zf", "mmse", "ml", "sdr", "wesnet"}; }

bool is_learned_detector(const std::string& name) { return name == "wesnet"; }

}  // namespace wesnet
