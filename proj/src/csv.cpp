#include "wesnet/csv.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "wesnet/errors.hpp"
#include "wesnet/io.hpp"

namespace wesnet {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t at = line.find(sep, start);
        out.push_back(line.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start));
        if (at == std::string_view::npos) return out;
        start = at + 1;
    }
}

std::vector<std::string_view> data_lines(std::string_view text, std::string_view header) {
    auto lines = split(text, '\n');
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty() || lines.front() != header)
        throw CorruptionError("CSV header mismatch: expected '" + std::string(header) + "'");
    lines.erase(lines.begin());
    return lines;
}

template <class T>
T parse_field(std::string_view s, const char* what) {
    T v{};
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size())
        throw CorruptionError("CSV: cannot parse " + std::string(what) + " from '" + std::string(s) + "'");
    return v;
}

template <class T>
std::string opt(const std::optional<T>& v) {
    if (!v) return "";
    if constexpr (std::is_floating_point_v<T>)
        return format_number(*v);
    else
        return std::to_string(*v);
}

}  // namespace

double ci95_halfwidth(std::uint64_t errors, std::uint64_t bits) {
    if (bits == 0) return 0.0;
    const double n = static_cast<double>(bits);
    const double p = static_cast<double>(errors) / n;
    return 1.959963984540054 * std::sqrt(p * (1.0 - p) / n);
}

std::string format_number(double v) {
    if (!std::isfinite(v)) throw DomainError("format_number: non-finite value");
    char buf[512];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
    if (ec != std::errc()) throw DomainError("format_number: value too wide");
    return std::string(buf, end);
}

std::string ber_csv(const std::vector<BerCurve>& curves) {
    std::string out(kBerHeader);
    out += '\n';
    for (const auto& c : curves)
        for (const auto& p : c.points) {
            out += c.detector + ',' + format_number(p.snr_db) + ',' + std::to_string(p.trials) + ',' +
                   std::to_string(p.bit_count) + ',' + std::to_string(p.error_count) + ',' + format_number(p.ber) +
                   ',' + format_number(p.ci95) + '\n';
        }
    return out;
}

std::vector<BerCurve> parse_ber_csv(std::string_view text) {
    std::vector<BerCurve> curves;
    for (auto line : data_lines(text, kBerHeader)) {
        const auto f = split(line, ',');
        if (f.size() != 7) throw CorruptionError("BER CSV: expected 7 fields in '" + std::string(line) + "'");
        if (curves.empty() || curves.back().detector != f[0]) curves.push_back({std::string(f[0]), "", {}});
        curves.back().points.push_back({parse_field<double>(f[1], "snr_db"),
                                        parse_field<std::uint64_t>(f[2], "trials"),
                                        parse_field<std::uint64_t>(f[3], "bit_count"),
                                        parse_field<std::uint64_t>(f[4], "error_count"),
                                        parse_field<double>(f[5], "ber"), parse_field<double>(f[6], "ci95")});
    }
    return curves;
}

std::string complexity_csv(const std::vector<ComplexityReport>& reports) {
    std::string out(kComplexityHeader);
    out += '\n';
    for (const auto& r : reports) {
        out += r.detector + ',' + std::to_string(r.nt) + ',' + opt(r.layers) + ',' + opt(r.keep_fraction) + ',' +
               r.analytic_flops.str() + ',' + opt(r.measured_macs) + ',' + opt(r.parameters) + '\n';
    }
    return out;
}

std::vector<ComplexityReport> parse_complexity_csv(std::string_view text) {
    std::vector<ComplexityReport> out;
    for (auto line : data_lines(text, kComplexityHeader)) {
        const auto f = split(line, ',');
        if (f.size() != 7) throw CorruptionError("complexity CSV: expected 7 fields in '" + std::string(line) + "'");
        ComplexityReport r;
        r.detector = std::string(f[0]);
        r.nt = parse_field<std::uint64_t>(f[1], "nt");
        if (!f[2].empty()) r.layers = parse_field<std::uint64_t>(f[2], "layers");
        if (!f[3].empty()) r.keep_fraction = parse_field<double>(f[3], "keep_fraction");
        try {
            r.analytic_flops = FlopCount(std::string(f[4]));
        } catch (const std::exception&) {
            throw CorruptionError("complexity CSV: cannot parse analytic_flops '" + std::string(f[4]) + "'");
        }
        if (!f[5].empty()) r.measured_macs = parse_field<std::uint64_t>(f[5], "measured_macs");
        if (!f[6].empty()) r.parameters = parse_field<std::uint64_t>(f[6], "parameters");
        out.push_back(std::move(r));
    }
    return out;
}

void emit_ber_csv(const std::vector<BerCurve>& curves, const std::filesystem::path& path) {
    write_file_atomic(path, ber_csv(curves));
}

void emit_complexity_csv(const std::vector<ComplexityReport>& reports, const std::filesystem::path& path) {
    write_file_atomic(path, complexity_csv(reports));
}

}  // namespace wesnet
