#include "wesnet/mimo_env.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "wesnet/errors.hpp"

namespace wesnet {

std::string_view to_string(Modulation m) { return m == Modulation::BPSK ? "bpsk" : "qam4"; }

Modulation parse_modulation(std::string_view text) {
    if (text == "bpsk") return Modulation::BPSK;
    if (text == "qam4") return Modulation::QAM4;
    throw ConfigError("unknown modulation '" + std::string(text) + "' (expected bpsk or qam4)");
}

Constellation Constellation::bpsk() { return {Modulation::BPSK, {-1.0, 1.0}, 1}; }

Constellation Constellation::qam4() {
    return {Modulation::QAM4, {-kQam4Level, kQam4Level}, 1};
}

Constellation Constellation::of(Modulation m) { return m == Modulation::BPSK ? bpsk() : qam4(); }

ChannelRealization realify_channel(const ComplexMatrix& h, const Constellation& c) {
    const std::size_t nr = h.size();
    if (nr == 0 || h[0].empty()) throw ContractError("realify_channel: channel must be at least 1x1");
    const std::size_t nt = h[0].size();
    for (const auto& row : h) {
        if (row.size() != nt) throw ContractError("realify_channel: ragged channel matrix");
        for (const auto& z : row)
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
                throw DomainError("realify_channel: non-finite channel entry");
    }

    ChannelRealization out;
    out.h_complex = h;
    out.nt = nt;
    out.nr = nr;
    out.h_real = Matrix(2 * nr, c.signal_dim(nt));
    for (std::size_t i = 0; i < nr; ++i) {
        for (std::size_t j = 0; j < nt; ++j) {
            out.h_real(i, j) = h[i][j].real();
            out.h_real(nr + i, j) = h[i][j].imag();
            if (c.kind == Modulation::QAM4) {
                out.h_real(i, nt + j) = -h[i][j].imag();
                out.h_real(nr + i, nt + j) = h[i][j].real();
            }
        }
    }
    return out;
}

double noise_std_from_snr(double snr_db, std::size_t nt, double es) {
    if (std::isinf(snr_db) && snr_db > 0) return 0.0;
    if (!std::isfinite(snr_db)) throw DomainError("noise_std_from_snr: SNR must be finite or +inf");
    if (nt < 1 || !(es > 0.0)) throw ContractError("noise_std_from_snr: need nt >= 1 and es > 0");
    const double variance = static_cast<double>(nt) * es * std::pow(10.0, -snr_db / 10.0) / 2.0;
    return std::sqrt(variance);
}

ComplexMatrix rayleigh_channel(RngStream& rng, std::size_t nr, std::size_t nt) {
    const double scale = 1.0 / std::sqrt(2.0);
    ComplexMatrix h(nr, std::vector<std::complex<double>>(nt));
    for (auto& row : h)
        for (auto& z : row) {
            const double re = rng.normal() * scale;
            const double im = rng.normal() * scale;
            z = {re, im};
        }
    return h;
}

Sample draw_sample(RngStream& rng, std::size_t nt, std::size_t nr, const Constellation& c, double snr_lo_db,
                   double snr_hi_db, const ChannelRealization* reuse_channel) {
    if (!(snr_lo_db <= snr_hi_db)) throw ContractError("draw_sample: snr_lo must not exceed snr_hi");
    Sample out;
    out.channel = reuse_channel != nullptr ? *reuse_channel : realify_channel(rayleigh_channel(rng, nr, nt), c);

    const std::size_t d = c.signal_dim(nt);
    out.s.resize(d);
    for (auto& v : out.s) v = c.levels[rng.below(c.levels.size())];

    // Equal bounds (including +inf for the noiseless path) consume no draw.
    out.snr_db = snr_lo_db == snr_hi_db ? snr_lo_db : rng.uniform(snr_lo_db, snr_hi_db);
    out.sigma = noise_std_from_snr(out.snr_db, nt, 1.0);

    const Matrix& h = out.channel.h_real;
    out.y = matvec(h, out.s);
    out.n.resize(h.rows);
    for (std::size_t i = 0; i < h.rows; ++i) {
        out.n[i] = out.sigma == 0.0 ? 0.0 : out.sigma * rng.normal();
        out.y[i] += out.n[i];
    }
    return out;
}

TransmissionBatch generate_batch(RngStream& rng, const BatchConfig& cfg) {
    if (cfg.batch < 1) throw ContractError("generate_batch: batch must be >= 1");
    if (cfg.nt < 1 || cfg.nr < 1) throw ContractError("generate_batch: antenna counts must be >= 1");
    TransmissionBatch out;
    out.constellation = Constellation::of(cfg.modulation);
    out.samples.reserve(cfg.batch);
    for (std::size_t b = 0; b < cfg.batch; ++b) {
        const ChannelRealization* reuse =
            (cfg.fixed_channel && !out.samples.empty()) ? &out.samples.front().channel : nullptr;
        out.samples.push_back(
            draw_sample(rng, cfg.nt, cfg.nr, out.constellation, cfg.snr_lo_db, cfg.snr_hi_db, reuse));
    }
    return out;
}

Vector hard_slice(std::span<const double> x, const Constellation& c) {
    Vector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double best = c.levels.front();
        double best_dist = std::numeric_limits<double>::infinity();
        for (double level : c.levels) {
            const double dist = std::abs(x[i] - level);
            // <= lets the later (larger) level win ties.
            if (dist <= best_dist) {
                best = level;
                best_dist = dist;
            }
        }
        out[i] = best;
    }
    return out;
}

ErrorCount count_bit_errors(std::span<const double> s_true, std::span<const double> s_est, const Constellation& c) {
    if (s_true.size() != s_est.size()) throw ContractError("count_bit_errors: length mismatch");
    ErrorCount out;
    out.bits = s_true.size() * static_cast<std::size_t>(c.bits_per_real_dim);
    for (std::size_t i = 0; i < s_true.size(); ++i)
        if (s_true[i] != s_est[i]) ++out.bit_errors;
    return out;
}

double bit_error_rate(const Matrix& s_true, const Matrix& s_est, const Constellation& c) {
    if (s_true.rows != s_est.rows || s_true.cols != s_est.cols)
        throw ContractError("bit_error_rate: shape mismatch (" + std::to_string(s_true.rows) + "x" +
                            std::to_string(s_true.cols) + " vs " + std::to_string(s_est.rows) + "x" +
                            std::to_string(s_est.cols) + ")");
    if (s_true.data.empty()) return 0.0;
    const auto e = count_bit_errors(s_true.data, s_est.data, c);
    return static_cast<double>(e.bit_errors) / static_cast<double>(e.bits);
}

}  // namespace wesnet
