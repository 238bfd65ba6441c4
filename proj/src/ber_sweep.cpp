#include "wesnet/ber_sweep.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "wesnet/detectors.hpp"
#include "wesnet/errors.hpp"

namespace wesnet {

namespace {

constexpr std::uint64_t kEvalTag = 0x6576616cULL;  // "eval"

struct Chunk {
    std::size_t snr_index;
    std::uint64_t first_trial;
    std::uint64_t end_trial;
};

}  // namespace

std::uint64_t eval_stream_id(std::size_t snr_index, std::uint64_t trial) {
    return derive_stream_id({kEvalTag, snr_index, trial});
}

std::uint64_t detector_stream_id(const std::string& detector, std::size_t snr_index, std::uint64_t trial) {
    return derive_stream_id({kEvalTag, fnv1a64(detector.data(), detector.size()), snr_index, trial});
}

std::vector<BerCurve> run_ber_sweep(const ExperimentConfig& cfg, const std::optional<NetworkParams>& learned,
                                    std::size_t threads, const SweepProgress& progress) {
    cfg.validate();
    for (const auto& d : cfg.detectors)
        if (is_learned_detector(d) && !learned)
            throw ConfigError("detector '" + d + "' needs a trained checkpoint");
    if (learned && (learned->config().nt != cfg.nt || learned->config().nr != cfg.nr ||
                    learned->config().modulation != cfg.modulation))
        throw ConfigError("checkpoint antenna/modulation settings do not match the evaluation config");

    const Constellation c = Constellation::of(cfg.modulation);
    if (c.signal_dim(cfg.nt) > kMlMaxDim)
        for (const auto& d : cfg.detectors)
            if (d == "ml") throw ConfigError("ml: signal dimension exceeds the exhaustive-search limit");

    const std::size_t n_det = cfg.detectors.size();
    const std::size_t rounds = std::min<std::size_t>(cfg.monte_carlo_rounds, cfg.trials);
    std::vector<Chunk> chunks;
    for (std::size_t i = 0; i < cfg.snr_grid.size(); ++i)
        for (std::size_t k = 0; k < rounds; ++k)
            chunks.push_back({i, cfg.trials * k / rounds, cfg.trials * (k + 1) / rounds});

    std::vector<std::uint64_t> errors(chunks.size() * n_det, 0);
    std::vector<std::uint64_t> bits(chunks.size() * n_det, 0);
    const SdrConfig sdr = cfg.sdr_config();
    const std::size_t learned_layers = learned ? learned->num_layers() - cfg.truncate_layers : 0;

    auto run_chunk = [&](std::size_t ci) {
        const Chunk& ch = chunks[ci];
        const double snr = cfg.noiseless ? std::numeric_limits<double>::infinity() : cfg.snr_grid[ch.snr_index];
        for (std::uint64_t t = ch.first_trial; t < ch.end_trial; ++t) {
            RngStream rng(cfg.seed, eval_stream_id(ch.snr_index, t));
            const Sample s = draw_sample(rng, cfg.nt, cfg.nr, c, snr, snr);
            const Matrix& h = s.channel.h_real;
            for (std::size_t k = 0; k < n_det; ++k) {
                const std::string& name = cfg.detectors[k];
                DetectorResult r;
                if (name == "zf") {
                    r = zf_detect(h, s.y, c);
                } else if (name == "mmse") {
                    r = mmse_detect(h, s.y, s.sigma, c, c.energy_per_real_dim());
                } else if (name == "ml") {
                    r = ml_detect(h, s.y, c);
                } else if (name == "sdr") {
                    RngStream drng(cfg.seed, detector_stream_id(name, ch.snr_index, t));
                    r = sdr_detect(h, s.y, c, sdr, drng);
                } else {
                    r = detect(*learned, h, s.y, learned_layers, nullptr, cfg.truncation);
                }
                const ErrorCount e = count_bit_errors(s.s, r.hard, c);
                errors[ci * n_det + k] += e.bit_errors;
                bits[ci * n_det + k] += e.bits;
            }
        }
    };

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t ci = next.fetch_add(1);
            if (ci >= chunks.size()) return;
            try {
                run_chunk(ci);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(chunks.size());
                return;
            }
            const std::size_t finished = done.fetch_add(1) + 1;
            if (progress) progress(finished, chunks.size());
        }
    };

    const std::size_t n_threads = std::max<std::size_t>(1, std::min(threads, chunks.size()));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    const std::string hash = config_hash(cfg);
    std::vector<BerCurve> curves;
    for (std::size_t k = 0; k < n_det; ++k) {
        BerCurve curve{cfg.detectors[k], hash, {}};
        for (std::size_t i = 0; i < cfg.snr_grid.size(); ++i) {
            BerPoint p;
            p.snr_db = cfg.snr_grid[i];
            p.trials = cfg.trials;
            for (std::size_t ci = 0; ci < chunks.size(); ++ci) {
                if (chunks[ci].snr_index != i) continue;
                p.error_count += errors[ci * n_det + k];
                p.bit_count += bits[ci * n_det + k];
            }
            p.ber = p.bit_count ? static_cast<double>(p.error_count) / static_cast<double>(p.bit_count) : 0.0;
            p.ci95 = ci95_halfwidth(p.error_count, p.bit_count);
            curve.points.push_back(p);
        }
        curves.push_back(std::move(curve));
    }
    return curves;
}

}  // namespace wesnet
