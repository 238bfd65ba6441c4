#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "wesnet/network.hpp"

namespace wesnet {

/// Exact operation count. Unbounded because the ML count grows as |S|^Nt.
using FlopCount = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

enum class PrimitiveOp { VecScale, MatScale, MatVec, MatMat, MatDiag, Inner, Outer, Gram, EuclidNorm, SpdInverse };

struct Dims {
    std::optional<std::uint64_t> m, n, l;
};

/// Real-operation cost of a standard matrix expression (A is MxN, B is NxL).
FlopCount primitive_flops(PrimitiveOp expr, const Dims& dims);

enum class DetectorKind { ZF, MMSE, ML, SDR, WeSNet, DetNet };

std::string_view to_string(DetectorKind k);
DetectorKind parse_detector(std::string_view text);

struct DetectorExtras {
    std::optional<std::uint64_t> constellation_size;
    std::optional<std::uint64_t> n_iterations;
    std::optional<double> keep_fraction;
    std::optional<std::uint64_t> layers;
};

/// Per-symbol-slot cost of each detector as a closed form in Nt. Fractional
/// coefficients stay rational; the result is floored once at the end.
FlopCount detector_flops(DetectorKind detector, std::uint64_t nt, const DetectorExtras& extras = {});

/// Nearest fraction with denominator at most `max_denominator`, so decimal keep
/// fractions such as 0.3 evaluate as 3/10 rather than as their binary expansion.
Rational to_rational(double x, std::uint64_t max_denominator = 1'000'000);

/// Matrix-multiply chain plus one activation per neuron, summed over layers, for
/// an MLP whose layer widths are `layer_sizes` (input first).
FlopCount mlp_forward_flops(std::span<const std::uint64_t> layer_sizes);

/// Trainable scalars: 64d^2 + 11d per layer, plus 8d per layer for learnable profiles.
std::uint64_t wesnet_param_count(const NetConfig& cfg);

/// Instrumented operation count of one sparse-path inference.
MacCounter measure_macs(const NetworkParams& params, const Matrix& h, std::span<const double> y,
                        std::size_t layers_to_run, Truncation truncation = Truncation::Trailing);

struct ComplexityReport {
    std::string detector;
    std::uint64_t nt = 0;
    std::optional<std::uint64_t> layers;
    std::optional<double> keep_fraction;
    FlopCount analytic_flops = 0;
    std::optional<std::uint64_t> measured_macs;
    std::optional<std::uint64_t> parameters;
    std::vector<std::string> assumptions;
};

ComplexityReport make_report(DetectorKind detector, std::uint64_t nt, const DetectorExtras& extras,
                             std::optional<std::uint64_t> measured_macs = std::nullopt,
                             std::optional<std::uint64_t> parameters = std::nullopt);

}  // namespace wesnet
