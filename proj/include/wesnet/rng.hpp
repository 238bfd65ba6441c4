#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

namespace wesnet {

/// Counter-based random stream (Philox4x32-10).
///
/// The output sequence is a pure function of (master_seed, stream_id), so two
/// streams built from the same pair agree on every host and under any thread
/// schedule. Parallel callers never share a stream; they derive child ids with
/// derive_stream_id().
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_id) noexcept;

    std::uint64_t master_seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_; }

    std::uint32_t next_u32() noexcept;
    std::uint64_t next_u64() noexcept;

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept;
    double uniform(double lo, double hi) noexcept;
    /// Standard normal via Box-Muller; pairs are cached.
    double normal() noexcept;
    /// Uniform integer on [0, n).
    std::uint64_t below(std::uint64_t n) noexcept;

    /// Child stream sharing the master seed.
    RngStream child(std::uint64_t stream_id) const noexcept { return {seed_, stream_id}; }

private:
    void refill() noexcept;

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int used_ = 4;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

/// One Philox4x32-10 block. Exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Order-sensitive hash of a tuple of integers into a stream id.
std::uint64_t derive_stream_id(std::initializer_list<std::uint64_t> parts) noexcept;

}  // namespace wesnet
