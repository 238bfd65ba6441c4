#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "wesnet/linalg.hpp"

namespace wesnet {

/// Unity is the constant-one profile, i.e. no weight scaling (plain DetNet).
enum class ProfileKind { Unity, Linear, HalfExponential, Learnable };

std::string_view to_string(ProfileKind k);
ProfileKind parse_profile_kind(std::string_view text);

/// Monotone non-increasing coefficient vector in [0, 1].
struct Profile {
    Vector values;
    ProfileKind kind = ProfileKind::Unity;
    double keep_fraction = 1.0;

    std::size_t size() const { return values.size(); }
    bool operator==(const Profile&) const = default;
};

/// Positions [0, cutoff_index) survive masking; the rest are pinned to zero.
struct KeepMask {
    std::size_t cutoff_index = 0;
    std::size_t n = 0;
};

/// cutoff = ceil(keep_fraction * n), clamped to [1, n]. A 1e-9 slack absorbs
/// representation error (0.1 * 30 must give 3, not 4).
KeepMask keep_mask(std::size_t n, double keep_fraction);

Profile unity_profile(std::size_t n);

/// beta_i = 1 - i/n for i = 1..n (1-indexed), so the last entry is exactly 0.
Profile linear_profile(std::size_t n);

/// beta_i = 1 for i <= n/2, exp(n/2 - i - 1) otherwise (1-indexed). n must be even.
Profile half_exp_profile(std::size_t n);

/// Analytic profile for a kind. Learnable starts from the half-exponential shape.
Profile make_profile(ProfileKind kind, std::size_t n);

/// Zeroes every entry at or past the keep cutoff.
Profile effective_profile(const Profile& p, double keep_fraction);

/// beta (.) u, touching every entry.
Vector apply_profile(std::span<const double> u, const Profile& p);

/// Same result as apply_profile, but never reads u at positions where beta is 0.
Vector apply_profile_sparse(std::span<const double> u, const Profile& p);

/// d(sum upstream . (beta (.) u)) / d beta = upstream (.) u.
Vector apply_profile_grad_beta(std::span<const double> upstream, std::span<const double> u);

/// Euclidean projection onto non-increasing sequences (pool adjacent violators),
/// then clamped to [0, 1]. Idempotent.
Vector project_monotone_unit(std::span<const double> values);

bool is_monotone_unit(std::span<const double> values);

/// Checks monotonicity, range, and zeros past the keep cutoff.
bool satisfies_profile_invariants(const Profile& p);

}  // namespace wesnet
