#include "wesnet/complexity.hpp"

#include <cmath>

#include "wesnet/errors.hpp"

namespace wesnet {

namespace {

FlopCount need(const std::optional<std::uint64_t>& v, const char* name, const char* context) {
    if (!v) throw ContractError(std::string(context) + ": missing required value '" + name + "'");
    if (*v == 0) throw ContractError(std::string(context) + ": '" + name + "' must be positive");
    return FlopCount(*v);
}

FlopCount floor_of(const Rational& r) {
    // cpp_int division truncates toward zero; every value here is non-negative.
    return boost::multiprecision::numerator(r) / boost::multiprecision::denominator(r);
}

}  // namespace

FlopCount primitive_flops(PrimitiveOp expr, const Dims& dims) {
    constexpr const char* ctx = "primitive_flops";
    auto m = [&] { return need(dims.m, "M", ctx); };
    auto n = [&] { return need(dims.n, "N", ctx); };
    auto l = [&] { return need(dims.l, "L", ctx); };
    switch (expr) {
        case PrimitiveOp::VecScale: return n();
        case PrimitiveOp::MatScale: return m() * n();
        case PrimitiveOp::MatVec: return 2 * m() * n() - m();
        case PrimitiveOp::MatMat: return 2 * m() * n() * l() - m() * l();
        case PrimitiveOp::MatDiag: return m() * n();
        case PrimitiveOp::Inner: return 2 * n() - 1;
        case PrimitiveOp::Outer: return m() * n();
        case PrimitiveOp::Gram: {
            // MN^2 + N(M - N/2) - N/2, rearranged to stay in integers.
            const FlopCount M = m(), N = n();
            return M * N * N + M * N - N * (N + 1) / 2;
        }
        case PrimitiveOp::EuclidNorm: return 2 * m() * n() - 1;
        case PrimitiveOp::SpdInverse: {
            const FlopCount N = n();
            return N * N * N + N * N + N;
        }
    }
    throw ContractError("primitive_flops: unknown expression");
}

std::string_view to_string(DetectorKind k) {
    switch (k) {
        case DetectorKind::ZF: return "zf";
        case DetectorKind::MMSE: return "mmse";
        case DetectorKind::ML: return "ml";
        case DetectorKind::SDR: return "sdr";
        case DetectorKind::WeSNet: return "wesnet";
        case DetectorKind::DetNet: return "detnet";
    }
    return "?";
}

DetectorKind parse_detector(std::string_view text) {
    for (auto k : {DetectorKind::ZF, DetectorKind::MMSE, DetectorKind::ML, DetectorKind::SDR, DetectorKind::WeSNet,
                   DetectorKind::DetNet})
        if (text == to_string(k)) return k;
    throw ConfigError("unknown detector '" + std::string(text) + "'");
}

Rational to_rational(double x, std::uint64_t max_denominator) {
    if (!std::isfinite(x) || x < 0.0) throw DomainError("to_rational: need a finite non-negative value");
    // Continued-fraction convergents, stopping before the denominator bound.
    std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double rest = x;
    for (int i = 0; i < 64; ++i) {
        const double a_d = std::floor(rest);
        if (a_d > 9.0e15) break;
        const auto a = static_cast<std::int64_t>(a_d);
        const std::int64_t q2 = a * q1 + q0;
        if (q2 > static_cast<std::int64_t>(max_denominator)) break;
        const std::int64_t p2 = a * p1 + p0;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        const double frac = rest - a_d;
        if (frac < 1e-12) break;
        rest = 1.0 / frac;
    }
    return Rational(FlopCount(p1), FlopCount(q1));
}

FlopCount detector_flops(DetectorKind detector, std::uint64_t nt_in, const DetectorExtras& extras) {
    if (nt_in == 0) throw ContractError("detector_flops: nt must be positive");
    const Rational nt(nt_in);
    const Rational nt2 = nt * nt;
    const Rational nt3 = nt2 * nt;
    constexpr const char* ctx = "detector_flops";
    switch (detector) {
        case DetectorKind::ZF:
            return floor_of(Rational(56, 3) * nt3 + 38 * nt2 + Rational(28, 3) * nt);
        case DetectorKind::MMSE:
            return floor_of(Rational(56, 3) * nt3 + 40 * nt2 + Rational(34, 3) * nt + 1);
        case DetectorKind::ML: {
            const FlopCount s = need(extras.constellation_size, "constellation_size", ctx);
            const FlopCount n = nt_in;
            return boost::multiprecision::pow(s, static_cast<unsigned>(nt_in)) * (8 * n * n + 8 * n - 2);
        }
        case DetectorKind::SDR: {
            const FlopCount iters = need(extras.n_iterations, "n_iterations", ctx);
            return floor_of((13 * nt3 + 25 * nt2 + 17 * nt + 4) * Rational(iters));
        }
        case DetectorKind::WeSNet: {
            const FlopCount layers = need(extras.layers, "layers", ctx);
            if (!extras.keep_fraction) throw ContractError("detector_flops: missing required value 'keep_fraction'");
            const double k = *extras.keep_fraction;
            if (!(k > 0.0 && k <= 1.0)) throw ContractError("detector_flops: keep_fraction must lie in (0, 1]");
            return floor_of((to_rational(k) * nt * (128 * nt + 5) + 9 * nt) * Rational(layers));
        }
        case DetectorKind::DetNet: {
            const FlopCount layers = need(extras.layers, "layers", ctx);
            return floor_of(nt * (128 * nt - 2) * Rational(layers));
        }
    }
    throw ContractError("detector_flops: unknown detector");
}

FlopCount mlp_forward_flops(std::span<const std::uint64_t> n) {
    if (n.size() < 2) throw ContractError("mlp_forward_flops: need at least an input and one layer");
    FlopCount matmul = FlopCount(n[1]) * n[0];
    for (std::size_t r = 2; r < n.size(); ++r) matmul += FlopCount(n[r]) * n[r - 1] * n[r - 2];
    FlopCount activations = 0;
    for (std::size_t r = 1; r < n.size(); ++r) activations += n[r];
    return matmul + activations;
}

std::uint64_t wesnet_param_count(const NetConfig& cfg) {
    cfg.validate();
    const std::uint64_t d = cfg.d();
    std::uint64_t per_layer = 64 * d * d + 11 * d;
    if (cfg.beta_trainable()) per_layer += 8 * d;
    return per_layer * cfg.layers;
}

MacCounter measure_macs(const NetworkParams& params, const Matrix& h, std::span<const double> y,
                        std::size_t layers_to_run, Truncation truncation) {
    MacCounter counter;
    (void)detect(params, h, y, layers_to_run, &counter, truncation);
    return counter;
}

ComplexityReport make_report(DetectorKind detector, std::uint64_t nt, const DetectorExtras& extras,
                             std::optional<std::uint64_t> measured_macs, std::optional<std::uint64_t> parameters) {
    ComplexityReport r;
    r.detector = std::string(to_string(detector));
    r.nt = nt;
    r.analytic_flops = detector_flops(detector, nt, extras);
    r.measured_macs = measured_macs;
    r.parameters = parameters;
    switch (detector) {
        case DetectorKind::ML:
            r.assumptions.push_back("constellation_size=" + std::to_string(*extras.constellation_size));
            break;
        case DetectorKind::SDR:
            r.assumptions.push_back("n_iterations=" + std::to_string(*extras.n_iterations));
            break;
        case DetectorKind::WeSNet:
            r.keep_fraction = extras.keep_fraction;
            r.assumptions.push_back("keep_fraction=" + std::to_string(*extras.keep_fraction));
            [[fallthrough]];
        case DetectorKind::DetNet:
            r.layers = extras.layers;
            r.assumptions.push_back("layers=" + std::to_string(*extras.layers));
            r.assumptions.push_back("biases and activations excluded");
            break;
        default:
            r.assumptions.push_back("real-valued operation count per symbol slot");
    }
    return r;
}

}  // namespace wesnet
