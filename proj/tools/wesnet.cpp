// Command-line front end: train, eval, baselines, sweep, flops.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "wesnet/ber_sweep.hpp"
#include "wesnet/checkpoint.hpp"
#include "wesnet/complexity.hpp"
#include "wesnet/csv.hpp"
#include "wesnet/errors.hpp"
#include "wesnet/experiment.hpp"
#include "wesnet/io.hpp"
#include "wesnet/trainer.hpp"

namespace fs = std::filesystem;
using namespace wesnet;

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> nt, nr, layers, truncate_layers, trials, iterations, batch, rounds;
    std::optional<std::string> mod, profile, out, checkpoint;
    std::optional<double> keep_frac, lambda, snr_min, snr_max, snr_step;
    std::vector<std::string> detectors;
    bool noiseless = false;
    bool overwrite = false;
    std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "Flat JSON experiment config");
    cmd->add_option("--seed", o.seed, "Master seed");
    cmd->add_option("--nt", o.nt, "Transmit antennas");
    cmd->add_option("--nr", o.nr, "Receive antennas");
    cmd->add_option("--mod", o.mod, "Modulation")->check(CLI::IsMember({"bpsk", "qam4"}));
    cmd->add_option("--layers", o.layers, "Number of layers L (default 3*Nt)");
    cmd->add_option("--profile", o.profile, "Profile function")
        ->check(CLI::IsMember({"unity", "linear", "halfexp", "learnable"}));
    cmd->add_option("--keep-frac", o.keep_frac, "Fraction of profile coefficients kept, in (0, 1]");
    cmd->add_option("--lambda", o.lambda, "Sparsity penalty weight");
    cmd->add_option("--truncate-layers", o.truncate_layers, "Layers removed at inference");
    cmd->add_option("--snr-min", o.snr_min, "Lowest SNR in dB");
    cmd->add_option("--snr-max", o.snr_max, "Highest SNR in dB");
    cmd->add_option("--snr-step", o.snr_step, "SNR grid step in dB");
    cmd->add_option("--trials", o.trials, "Monte-Carlo trials per SNR point");
    cmd->add_option("--rounds", o.rounds, "Monte-Carlo work chunks per SNR point");
    cmd->add_option("--iterations", o.iterations, "Training iterations");
    cmd->add_option("--batch", o.batch, "Training batch size");
    cmd->add_option("--detectors", o.detectors, "Detectors to evaluate (zf mmse ml sdr wesnet)");
    cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint path (default <out>/checkpoint_<hash>.wsn)");
    cmd->add_flag("--noiseless", o.noiseless, "Force zero noise");
    cmd->add_option("--threads", o.threads, "Worker threads for Monte-Carlo sweeps");
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_flag("--overwrite", o.overwrite, "Replace existing output files");
}

ExperimentConfig resolve(const Overrides& o, bool training) {
    ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_experiment(o.config);
    if (o.seed) c.seed = *o.seed;
    if (o.nt) c.nt = *o.nt;
    if (o.nr) c.nr = *o.nr;
    if (o.mod) c.modulation = parse_modulation(*o.mod);
    if (o.layers) c.layers = *o.layers;
    if (o.profile) c.profile = parse_profile_kind(*o.profile);
    if (o.keep_frac) c.keep_fraction = *o.keep_frac;
    if (o.lambda) c.lambda = *o.lambda;
    if (o.truncate_layers) c.truncate_layers = *o.truncate_layers;
    if (o.snr_min || o.snr_max || o.snr_step) {
        const double lo = o.snr_min.value_or(c.snr_grid.front());
        const double hi = o.snr_max.value_or(c.snr_grid.back());
        if (training) {
            c.train_snr_min = lo;
            c.train_snr_max = hi;
        } else {
            c.snr_grid = snr_range(lo, hi, o.snr_step.value_or(1.0));
        }
    }
    if (o.trials) c.trials = *o.trials;
    if (o.rounds) c.monte_carlo_rounds = *o.rounds;
    if (o.iterations) c.iterations = *o.iterations;
    if (o.batch) c.batch = *o.batch;
    if (!o.detectors.empty()) c.detectors = o.detectors;
    if (o.checkpoint) c.checkpoint = *o.checkpoint;
    if (o.noiseless) c.noiseless = true;
    if (o.out) c.out_dir = *o.out;
    c.validate();
    return c;
}

fs::path checkpoint_path(const ExperimentConfig& c) {
    if (!c.checkpoint.empty()) return c.checkpoint;
    return fs::path(c.out_dir) / ("checkpoint_" + training_hash(c) + ".wsn");
}

int cmd_train(const Overrides& o) {
    ExperimentConfig cfg = resolve(o, true);
    ensure_writable_dir(cfg.out_dir);
    const std::string hash = config_hash(cfg);
    const fs::path ckpt_path = checkpoint_path(cfg);
    const fs::path loss_path = fs::path(cfg.out_dir) / ("loss_" + training_hash(cfg) + ".csv");
    const fs::path summary_path = fs::path(cfg.out_dir) / ("train_" + training_hash(cfg) + ".json");
    for (const auto& p : {ckpt_path, loss_path, summary_path}) guard_overwrite(p, o.overwrite);

    std::cerr << "training " << cfg.net_config().layers << "-layer detector, config " << hash << "\n";
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t every = std::max<std::size_t>(1, cfg.iterations / 20);
    TrainResult result;
    try {
        result = train(cfg.net_config(), cfg.train_config(), [&](std::size_t it, const NetworkParams&, double loss) {
            if ((it + 1) % every == 0) std::cerr << "  iter " << it + 1 << "  loss " << loss << "\n";
        });
    } catch (const TrainingDivergedError& e) {
        const fs::path last_good = fs::path(ckpt_path.string() + ".lastgood");
        save_checkpoint({cfg, e.last_good(), e.last_good_adam()}, last_good);
        std::cerr << "error: " << e.what() << "\nlast good parameters saved to " << last_good.string() << "\n";
        return exit_codes::numerical;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    save_checkpoint({cfg, result.params, result.adam}, ckpt_path);
    std::string loss_csv = "iteration,loss\n";
    for (std::size_t i = 0; i < result.loss.size(); ++i)
        loss_csv += std::to_string(i) + ',' + format_number(result.loss[i]) + '\n';
    write_file_atomic(loss_path, loss_csv);
    const nlohmann::json summary = {{"config_hash", hash},
                                    {"training_hash", training_hash(cfg)},
                                    {"checkpoint", ckpt_path.string()},
                                    {"wall_time_seconds", wall},
                                    {"initial_loss", result.loss.empty() ? 0.0 : result.loss.front()},
                                    {"final_loss", result.loss.empty() ? 0.0 : result.loss.back()}};
    write_file_atomic(summary_path, summary.dump(2) + "\n");
    std::cout << ckpt_path.string() << "\n";
    return exit_codes::ok;
}

int run_sweep(ExperimentConfig cfg, const Overrides& o) {
    cfg.validate();
    ensure_writable_dir(cfg.out_dir);
    const fs::path out = fs::path(cfg.out_dir) / ("ber_" + config_hash(cfg) + ".csv");
    guard_overwrite(out, o.overwrite);

    std::optional<NetworkParams> learned;
    for (const auto& d : cfg.detectors)
        if (is_learned_detector(d) && !learned) {
            const fs::path p = checkpoint_path(cfg);
            if (!fs::exists(p)) throw ConfigError("checkpoint '" + p.string() + "' not found (run train first)");
            learned = load_checkpoint(p).params;
        }

    const auto curves = run_ber_sweep(cfg, learned, o.threads);
    emit_ber_csv(curves, out);
    for (const auto& c : curves)
        for (const auto& p : c.points)
            std::fprintf(stderr, "%-7s %6.2f dB  BER %.3e  (+- %.1e)\n", c.detector.c_str(), p.snr_db, p.ber, p.ci95);
    std::cout << out.string() << "\n";
    return exit_codes::ok;
}

int cmd_eval(const Overrides& o) {
    ExperimentConfig cfg = resolve(o, false);
    if (o.detectors.empty()) cfg.detectors = {"wesnet"};
    return run_sweep(cfg, o);
}

int cmd_baselines(const Overrides& o) {
    ExperimentConfig cfg = resolve(o, false);
    if (o.detectors.empty()) {
        cfg.detectors = {"zf", "mmse", "sdr"};
        if (Constellation::of(cfg.modulation).signal_dim(cfg.nt) <= 16) cfg.detectors.insert(cfg.detectors.begin(), "ml");
    }
    for (const auto& d : cfg.detectors)
        if (is_learned_detector(d)) throw ConfigError("baselines runs classical detectors only; use eval or sweep");
    return run_sweep(cfg, o);
}

int cmd_sweep(const Overrides& o) { return run_sweep(resolve(o, false), o); }

int cmd_flops(const Overrides& o) {
    const ExperimentConfig cfg = resolve(o, false);
    ensure_writable_dir(cfg.out_dir);
    const fs::path out = fs::path(cfg.out_dir) / ("complexity_" + config_hash(cfg) + ".csv");
    guard_overwrite(out, o.overwrite);

    const Constellation c = Constellation::of(cfg.modulation);
    DetectorExtras extras;
    extras.constellation_size = c.complex_size();
    extras.n_iterations = static_cast<std::uint64_t>(cfg.sdr_iterations);
    extras.keep_fraction = cfg.keep_fraction;
    extras.layers = cfg.effective_layers() - cfg.truncate_layers;

    // Instrumented counts come from one random instance through a freshly
    // initialised network; the count does not depend on weight values.
    RngStream rng(cfg.seed, derive_stream_id({0x666c6f7073ULL}));
    const Sample s = draw_sample(rng, cfg.nt, cfg.nr, c, 10.0, 10.0);
    auto measured = [&](NetConfig nc) {
        const NetworkParams p = xavier_init(rng, nc);
        return measure_macs(p, s.channel.h_real, s.y, *extras.layers, cfg.truncation).total();
    };
    NetConfig wes = cfg.net_config();
    NetConfig det = wes;
    det.profile_kind = ProfileKind::Unity;
    det.keep_fraction = 1.0;
    det.learnable_beta = false;

    std::vector<ComplexityReport> reports;
    for (auto k : {DetectorKind::ZF, DetectorKind::MMSE, DetectorKind::ML, DetectorKind::SDR}) {
        if (k == DetectorKind::ML && cfg.nt > 64) continue;
        reports.push_back(make_report(k, cfg.nt, extras));
    }
    reports.push_back(make_report(DetectorKind::WeSNet, cfg.nt, extras, measured(wes), wesnet_param_count(wes)));
    reports.push_back(make_report(DetectorKind::DetNet, cfg.nt, extras, measured(det), wesnet_param_count(det)));
    emit_complexity_csv(reports, out);
    std::cout << complexity_csv(reports);
    std::cerr << "wrote " << out.string() << "\n";
    return exit_codes::ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weight-scaled deep-unfolded MIMO detector: training, evaluation and complexity reports"};
    app.require_subcommand(1);
    Overrides o;
    struct Sub {
        const char* name;
        const char* help;
        int (*run)(const Overrides&);
    };
    const Sub subs[] = {{"train", "Train a detector and write a checkpoint", cmd_train},
                        {"eval", "BER sweep of a trained detector", cmd_eval},
                        {"baselines", "BER sweep of classical detectors", cmd_baselines},
                        {"sweep", "BER sweep of every configured detector", cmd_sweep},
                        {"flops", "Analytic and measured complexity report", cmd_flops}};
    for (const auto& s : subs) add_common(app.add_subcommand(s.name, s.help), o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_codes::ok : exit_codes::config;
    }

    try {
        for (const auto& s : subs)
            if (app.got_subcommand(s.name)) return s.run(o);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_codes::numerical;
    }
    return exit_codes::config;
}
