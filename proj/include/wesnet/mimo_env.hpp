#pragma once

#include <complex>
#include <numbers>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "wesnet/linalg.hpp"
#include "wesnet/rng.hpp"

namespace wesnet {

enum class Modulation { BPSK, QAM4 };

/// Real/imaginary amplitude of unit-energy 4-QAM.
inline constexpr double kQam4Level = std::numbers::sqrt2 / 2.0;

std::string_view to_string(Modulation m);
Modulation parse_modulation(std::string_view text);

/// Unit average-energy constellation described per real dimension.
struct Constellation {
    Modulation kind = Modulation::BPSK;
    std::vector<double> levels;  ///< ascending, symmetric about 0
    int bits_per_real_dim = 1;

    static Constellation bpsk();
    static Constellation qam4();
    static Constellation of(Modulation m);

    /// Magnitude of the levels (1 for BPSK, 1/sqrt(2) for 4-QAM).
    double level() const { return levels.back(); }
    /// Signal dimension of the real model: Nt for BPSK, 2Nt for 4-QAM.
    std::size_t signal_dim(std::size_t nt) const { return kind == Modulation::BPSK ? nt : 2 * nt; }
    /// Complex constellation size |S|.
    std::size_t complex_size() const { return kind == Modulation::BPSK ? 2 : 4; }
    /// Mean energy per real signal dimension.
    double energy_per_real_dim() const { return level() * level(); }
};

using ComplexMatrix = std::vector<std::vector<std::complex<double>>>;  // [Nr][Nt]

struct ChannelRealization {
    ComplexMatrix h_complex;
    Matrix h_real;  ///< 2Nr x d
    std::size_t nt = 0;
    std::size_t nr = 0;
};

/// Real-valued model of a complex channel.
///
/// 4-QAM uses the block form [[Re H, -Im H], [Im H, Re H]]; BPSK symbols have no
/// imaginary part, so only [Re H; Im H] is kept.
ChannelRealization realify_channel(const ComplexMatrix& h_complex, const Constellation& c);

/// Per-real-component noise standard deviation for an SNR of E||Hs||^2 / E||n||^2
/// with unit-variance channel taps: sigma^2 = Nt * Es * 10^(-snr/10) / 2.
double noise_std_from_snr(double snr_db, std::size_t nt, double es = 1.0);

/// Rayleigh channel with i.i.d. CN(0, 1) taps.
ComplexMatrix rayleigh_channel(RngStream& rng, std::size_t nr, std::size_t nt);

struct BatchConfig {
    std::size_t nt = 4;
    std::size_t nr = 8;
    Modulation modulation = Modulation::BPSK;
    double snr_lo_db = 8.0;
    double snr_hi_db = 14.0;
    std::size_t batch = 1;
    /// Reuse the first channel for every sample instead of drawing one per sample.
    bool fixed_channel = false;
};

/// One transmission y = H s + n in the real model.
struct Sample {
    Vector s;
    Vector y;
    Vector n;
    double snr_db = 0.0;
    double sigma = 0.0;
    ChannelRealization channel;
};

struct TransmissionBatch {
    std::vector<Sample> samples;
    Constellation constellation;

    std::size_t size() const { return samples.size(); }
};

/// Draws one sample: channel, symbols, SNR, noise, in that order from `rng`.
Sample draw_sample(RngStream& rng, std::size_t nt, std::size_t nr, const Constellation& c, double snr_lo_db,
                   double snr_hi_db, const ChannelRealization* reuse_channel = nullptr);

TransmissionBatch generate_batch(RngStream& rng, const BatchConfig& cfg);

/// Nearest constellation level per component; ties go to the positive level.
Vector hard_slice(std::span<const double> x, const Constellation& c);

struct ErrorCount {
    std::size_t bit_errors = 0;
    std::size_t bits = 0;
};

ErrorCount count_bit_errors(std::span<const double> s_true, std::span<const double> s_est, const Constellation& c);

/// Fraction of wrong bits. Rows of both matrices must hold constellation levels.
double bit_error_rate(const Matrix& s_true, const Matrix& s_est, const Constellation& c);

}  // namespace wesnet
