#include "doctest.h"
#include "wesnet/complexity.hpp"
#include "wesnet/errors.hpp"

using namespace wesnet;

namespace {

DetectorExtras extras(std::uint64_t layers, double keep = 1.0, std::uint64_t s = 2, std::uint64_t iters = 100) {
    DetectorExtras e;
    e.layers = layers;
    e.keep_fraction = keep;
    e.constellation_size = s;
    e.n_iterations = iters;
    return e;
}

}  // namespace

TEST_CASE("matrix expression costs") {
    CHECK(primitive_flops(PrimitiveOp::MatVec, {3, 2, {}}) == 9);
    CHECK(primitive_flops(PrimitiveOp::Gram, {2, 2, {}}) == 9);
    CHECK(primitive_flops(PrimitiveOp::Inner, {{}, 1, {}}) == 1);
    CHECK(primitive_flops(PrimitiveOp::MatMat, {2, 3, 4}) == 2 * 2 * 3 * 4 - 2 * 4);
    CHECK(primitive_flops(PrimitiveOp::SpdInverse, {{}, 3, {}}) == 27 + 9 + 3);
    CHECK(primitive_flops(PrimitiveOp::EuclidNorm, {2, 3, {}}) == 11);
    CHECK_THROWS_AS(primitive_flops(PrimitiveOp::MatMat, {2, 3, {}}), ContractError);
    CHECK_THROWS_AS(primitive_flops(PrimitiveOp::VecScale, {}), ContractError);

    // Gram against a direct count: N(N+1)/2 unique entries, each M mults and M-1 adds.
    for (std::uint64_t m = 1; m <= 6; ++m)
        for (std::uint64_t n = 1; n <= 6; ++n)
            CHECK(primitive_flops(PrimitiveOp::Gram, {m, n, {}}) == n * (n + 1) / 2 * (2 * m - 1));
}

TEST_CASE("detector rows at reference points") {
    CHECK(detector_flops(DetectorKind::ZF, 30) == 538480);
    CHECK(detector_flops(DetectorKind::ML, 2, extras(1)) == 184);
    CHECK(detector_flops(DetectorKind::DetNet, 30, extras(90)) == 10362600);
    CHECK(detector_flops(DetectorKind::WeSNet, 30, extras(90, 0.5)) == 5215050);
    CHECK(detector_flops(DetectorKind::MMSE, 1) == 71);
    CHECK(detector_flops(DetectorKind::SDR, 1, extras(1, 1, 2, 10)) == 590);
}

TEST_CASE("missing extras are named") {
    DetectorExtras e;
    try {
        (void)detector_flops(DetectorKind::SDR, 4, e);
        FAIL("expected ContractError");
    } catch (const ContractError& err) {
        CHECK(std::string(err.what()).find("n_iterations") != std::string::npos);
    }
    e.layers = 3;
    CHECK_THROWS_WITH_AS(detector_flops(DetectorKind::WeSNet, 4, e), doctest::Contains("keep_fraction"),
                         ContractError);
    CHECK_THROWS_WITH_AS(detector_flops(DetectorKind::ML, 4, e), doctest::Contains("constellation_size"),
                         ContractError);
}

TEST_CASE("rows increase strictly with Nt") {
    for (auto k : {DetectorKind::ZF, DetectorKind::MMSE, DetectorKind::ML, DetectorKind::SDR, DetectorKind::WeSNet,
                   DetectorKind::DetNet}) {
        FlopCount prev = 0;
        for (std::uint64_t nt = 1; nt <= 64; ++nt) {
            const FlopCount v = detector_flops(k, nt, extras(3 * nt, 0.3, 4, 50));
            CHECK(v > prev);
            prev = v;
        }
    }
}

TEST_CASE("ml row grows as |S|^Nt times its polynomial") {
    for (std::uint64_t s : {2u, 4u})
        for (std::uint64_t nt = 1; nt < 10; ++nt) {
            const auto poly = [](std::uint64_t n) { return 8 * n * n + 8 * n - 2; };
            const FlopCount a = detector_flops(DetectorKind::ML, nt, extras(1, 1, s));
            const FlopCount b = detector_flops(DetectorKind::ML, nt + 1, extras(1, 1, s));
            CHECK(b * poly(nt) == a * s * poly(nt + 1));
        }
}

TEST_CASE("full-profile WeSNet exceeds DetNet by 16 Nt per layer") {
    for (std::uint64_t nt = 1; nt <= 64; ++nt)
        for (std::uint64_t L : {1u, 7u, 90u})
            CHECK(detector_flops(DetectorKind::WeSNet, nt, extras(L, 1.0)) -
                      detector_flops(DetectorKind::DetNet, nt, extras(L)) ==
                  16 * nt * L);
}

TEST_CASE("keep fractions are evaluated as decimal rationals") {
    CHECK(to_rational(0.3) == Rational(3, 10));
    CHECK(to_rational(0.5) == Rational(1, 2));
    CHECK(to_rational(1.0) == Rational(1));
    // 0.3 * 10 * 1285 = 3855 exactly; a binary expansion of 0.3 would floor to 3854.
    CHECK(detector_flops(DetectorKind::WeSNet, 10, extras(1, 0.3)) == 3855 + 90);
}

TEST_CASE("mlp forward cost") {
    const std::uint64_t one[] = {1, 1};
    CHECK(mlp_forward_flops(one) == 2);
    const std::uint64_t d = 30;
    const std::uint64_t detnet[] = {5 * d, 8 * d, d, 2 * d};
    CHECK(mlp_forward_flops(detnet) == 56 * d * d * d + 40 * d * d + 11 * d);
    const std::uint64_t doubled[] = {10 * d, 16 * d, 2 * d, 4 * d};
    const double ratio = static_cast<double>(mlp_forward_flops(doubled)) / static_cast<double>(mlp_forward_flops(detnet));
    CHECK(ratio == doctest::Approx(8.0).epsilon(0.02));
    // Cubic growth: the ratio tends to 8 as d grows.
    const std::uint64_t big = 3000;
    const std::uint64_t wide[] = {5 * big, 8 * big, big, 2 * big};
    const std::uint64_t wider[] = {10 * big, 16 * big, 2 * big, 4 * big};
    CHECK(static_cast<double>(mlp_forward_flops(wider)) / static_cast<double>(mlp_forward_flops(wide)) ==
          doctest::Approx(8.0).epsilon(1e-3));
    const std::uint64_t bad[] = {3};
    CHECK_THROWS_AS(mlp_forward_flops(bad), ContractError);
}

TEST_CASE("parameter count") {
    NetConfig c;
    c.nt = 4;
    c.layers = 1;
    CHECK(wesnet_param_count(c) == 1068);
    c.layers = 12;
    const auto fixed = wesnet_param_count(c);
    c.learnable_beta = true;
    CHECK(wesnet_param_count(c) - fixed == 8 * 4 * 12);
    c.learnable_beta = false;
    c.layers = 6;
    CHECK(2 * wesnet_param_count(c) == fixed);
}

TEST_CASE("reports carry their assumptions") {
    const auto sdr = make_report(DetectorKind::SDR, 4, extras(12, 0.5, 2, 500));
    CHECK_FALSE(sdr.assumptions.empty());
    const auto wes = make_report(DetectorKind::WeSNet, 4, extras(12, 0.5), 1234, 99);
    CHECK(wes.assumptions.size() >= 2);
    CHECK(wes.keep_fraction == 0.5);
    CHECK(wes.measured_macs == 1234u);
    CHECK(parse_detector("detnet") == DetectorKind::DetNet);
}
