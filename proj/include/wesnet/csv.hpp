#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "wesnet/complexity.hpp"

namespace wesnet {

struct BerPoint {
    double snr_db = 0.0;
    std::uint64_t trials = 0;
    std::uint64_t bit_count = 0;
    std::uint64_t error_count = 0;
    double ber = 0.0;
    double ci95 = 0.0;  ///< half-width

    bool operator==(const BerPoint&) const = default;
};

struct BerCurve {
    std::string detector;
    std::string config_hash;
    std::vector<BerPoint> points;
};

/// Normal-approximation 95% half-width of a binomial proportion.
double ci95_halfwidth(std::uint64_t errors, std::uint64_t bits);

inline constexpr std::string_view kBerHeader = "detector,snr_db,trials,bit_count,error_count,ber,ci95";
inline constexpr std::string_view kComplexityHeader =
    "detector,nt,layers,keep_fraction,analytic_flops,measured_macs,parameters";

/// Shortest fixed-notation text that parses back to the same double.
std::string format_number(double v);

std::string ber_csv(const std::vector<BerCurve>& curves);
/// Inverse of ber_csv. Config hashes are not part of the rows and come back empty.
std::vector<BerCurve> parse_ber_csv(std::string_view text);

std::string complexity_csv(const std::vector<ComplexityReport>& reports);
/// Assumption lists are not part of the rows and come back empty.
std::vector<ComplexityReport> parse_complexity_csv(std::string_view text);

void emit_ber_csv(const std::vector<BerCurve>& curves, const std::filesystem::path& path);
void emit_complexity_csv(const std::vector<ComplexityReport>& reports, const std::filesystem::path& path);

}  // namespace wesnet
