#include "wesnet/profile.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wesnet/errors.hpp"

namespace wesnet {

std::string_view to_string(ProfileKind k) {
    switch (k) {
        case ProfileKind::Unity: return "unity";
        case ProfileKind::Linear: return "linear";
        case ProfileKind::HalfExponential: return "halfexp";
        case ProfileKind::Learnable: return "learnable";
    }
    return "unity";
}

ProfileKind parse_profile_kind(std::string_view text) {
    if (text == "unity") return ProfileKind::Unity;
    if (text == "linear") return ProfileKind::Linear;
    if (text == "halfexp") return ProfileKind::HalfExponential;
    if (text == "learnable") return ProfileKind::Learnable;
    throw ConfigError("unknown profile '" + std::string(text) + "' (expected unity, linear, halfexp or learnable)");
}

KeepMask keep_mask(std::size_t n, double keep_fraction) {
    if (n < 1) throw ContractError("keep_mask: n must be >= 1");
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
        throw ConfigError("keep_fraction must lie in (0, 1], got " + std::to_string(keep_fraction));
    const double raw = std::ceil(keep_fraction * static_cast<double>(n) - 1e-9);
    const auto cutoff = static_cast<std::size_t>(std::clamp(raw, 1.0, static_cast<double>(n)));
    return {cutoff, n};
}

Profile unity_profile(std::size_t n) { return {Vector(n, 1.0), ProfileKind::Unity, 1.0}; }

Profile linear_profile(std::size_t n) {
    if (n < 1) throw ConfigError("linear_profile: n must be >= 1");
    Profile p{Vector(n), ProfileKind::Linear, 1.0};
    for (std::size_t i = 1; i <= n; ++i) p.values[i - 1] = 1.0 - static_cast<double>(i) / static_cast<double>(n);
    return p;
}

Profile half_exp_profile(std::size_t n) {
    if (n < 2 || n % 2 != 0)
        throw ConfigError("half_exp_profile: n must be even and >= 2, got " + std::to_string(n));
    Profile p{Vector(n), ProfileKind::HalfExponential, 1.0};
    const std::size_t half = n / 2;
    for (std::size_t i = 1; i <= n; ++i) {
        p.values[i - 1] =
            i <= half ? 1.0 : std::exp(static_cast<double>(half) - static_cast<double>(i) - 1.0);
    }
    return p;
}

Profile make_profile(ProfileKind kind, std::size_t n) {
    switch (kind) {
        case ProfileKind::Unity: return unity_profile(n);
        case ProfileKind::Linear: return linear_profile(n);
        case ProfileKind::HalfExponential: return half_exp_profile(n);
        case ProfileKind::Learnable: {
            Profile p = half_exp_profile(n);
            p.kind = ProfileKind::Learnable;
            return p;
        }
    }
    return unity_profile(n);
}

Profile effective_profile(const Profile& p, double keep_fraction) {
    const KeepMask mask = keep_mask(p.size(), keep_fraction);
    Profile out = p;
    out.keep_fraction = keep_fraction;
    for (std::size_t i = mask.cutoff_index; i < out.size(); ++i) out.values[i] = 0.0;
    return out;
}

Vector apply_profile(std::span<const double> u, const Profile& p) {
    if (u.size() != p.size())
        throw ContractError("apply_profile: vector has " + std::to_string(u.size()) + " entries, profile has " +
                            std::to_string(p.size()));
    Vector out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = p.values[i] * u[i];
    return out;
}

Vector apply_profile_sparse(std::span<const double> u, const Profile& p) {
    if (u.size() != p.size())
        throw ContractError("apply_profile_sparse: vector has " + std::to_string(u.size()) +
                            " entries, profile has " + std::to_string(p.size()));
    Vector out(u.size(), 0.0);
    for (std::size_t i = 0; i < u.size(); ++i)
        if (p.values[i] != 0.0) out[i] = p.values[i] * u[i];
    return out;
}

Vector apply_profile_grad_beta(std::span<const double> upstream, std::span<const double> u) {
    if (upstream.size() != u.size()) throw ContractError("apply_profile_grad_beta: length mismatch");
    Vector g(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) g[i] = upstream[i] * u[i];
    return g;
}

Vector project_monotone_unit(std::span<const double> values) {
    struct Block {
        double sum;
        std::size_t count;
        double mean() const { return sum / static_cast<double>(count); }
    };
    std::vector<Block> blocks;
    blocks.reserve(values.size());
    for (double v : values) {
        if (!std::isfinite(v)) throw DomainError("project_monotone_unit: non-finite entry");
        blocks.push_back({v, 1});
        // Non-increasing target: merge while a later block exceeds its predecessor.
        while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() < blocks.back().mean()) {
            const Block top = blocks.back();
            blocks.pop_back();
            blocks.back().sum += top.sum;
            blocks.back().count += top.count;
        }
    }
    Vector out;
    out.reserve(values.size());
    for (const auto& b : blocks) {
        const double m = std::clamp(b.mean(), 0.0, 1.0);
        out.insert(out.end(), b.count, m);
    }
    return out;
}

bool is_monotone_unit(std::span<const double> values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] >= 0.0 && values[i] <= 1.0)) return false;
        if (i > 0 && values[i] > values[i - 1]) return false;
    }
    return true;
}

bool satisfies_profile_invariants(const Profile& p) {
    if (!is_monotone_unit(p.values)) return false;
    if (p.values.empty()) return true;
    const KeepMask mask = keep_mask(p.size(), p.keep_fraction);
    for (std::size_t i = mask.cutoff_index; i < p.size(); ++i)
        if (p.values[i] != 0.0) return false;
    return true;
}

}  // namespace wesnet
