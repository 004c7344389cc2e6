#include "saecrypt/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "saecrypt/error.hpp"
#include "saecrypt/rng.hpp"

namespace saecrypt {

bool ChannelQuality::psnr_infinite() const { return std::isinf(psnr); }

namespace {

void require_same_shape(const Image& a, const Image& b) {
    a.validate();
    b.validate();
    if (a.width != b.width || a.height != b.height || a.channels != b.channels)
        throw InvalidArgument("images differ in size or channel count");
}

std::vector<std::string> channel_names(std::size_t channels) {
    if (channels == 3) return {"R", "G", "B"};
    return {"Y"};
}

} // namespace

double mse(const Image& original, const Image& reconstructed, std::size_t channel) {
    require_same_shape(original, reconstructed);
    if (channel >= original.channels) throw InvalidArgument("channel index out of range");
    const std::size_t n = original.width * original.height;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(original.data[i * original.channels + channel]) -
                         static_cast<double>(reconstructed.data[i * original.channels + channel]);
        sum += d * d;
    }
    return sum / static_cast<double>(n);
}

double psnr(double mse_value) {
    if (!(mse_value >= 0.0)) throw InvalidArgument("mse must be non-negative");
    if (mse_value == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(kMaxPixel * kMaxPixel / mse_value);
}

QualityReport quality(const Image& original, const Image& reconstructed) {
    require_same_shape(original, reconstructed);
    QualityReport report;
    const auto names = channel_names(original.channels);
    for (std::size_t c = 0; c < original.channels; ++c) {
        const double m = mse(original, reconstructed, c);
        report.per_channel.push_back({names[c], m, psnr(m)});
        report.mean_mse += m;
    }
    report.mean_mse /= static_cast<double>(original.channels);
    return report;
}

double correlation(std::span<const std::pair<double, double>> pairs) {
    if (pairs.size() < 2) throw InvalidArgument("correlation needs at least two pairs");
    const double n = static_cast<double>(pairs.size());
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : pairs) {
        mx += x;
        my += y;
    }
    mx /= n;
    my /= n;
    // Centered sums: same quantity as E(xy) - E(x)E(y), without the cancellation.
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (const auto& [x, y] : pairs) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        throw NumericError("correlation undefined: zero variance");
    return (sxy / n) / (std::sqrt(sxx / n) * std::sqrt(syy / n));
}

double image_correlation(const Image& a, const Image& b) {
    require_same_shape(a, b);
    std::vector<std::pair<double, double>> pairs(a.data.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i] = {a.data[i], b.data[i]};
    return correlation(pairs);
}

CorrelationReport adjacent_correlation(const Image& img, const CorrelationConfig& cfg) {
    const Image gray = to_grayscale(img);
    const std::size_t dx = cfg.direction == Direction::vertical ? 0 : 1;
    const std::size_t dy = cfg.direction == Direction::horizontal ? 0 : 1;
    if (gray.width <= dx || gray.height <= dy)
        throw InvalidArgument("image too small for " + direction_name(cfg.direction) + " neighbours");
    if (cfg.trials == 0 || cfg.pairs < 2) throw InvalidArgument("need at least one trial and two pairs");
    const std::size_t span_x = gray.width - dx;
    const std::size_t span_y = gray.height - dy;

    CorrelationReport report{0.0, cfg.trials, cfg.pairs, cfg.direction};
    std::vector<std::pair<double, double>> pairs(cfg.pairs);
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        Rng rng(cfg.rng_seed + t);
        for (auto& p : pairs) {
            const std::size_t x = rng.below(span_x);
            const std::size_t y = rng.below(span_y);
            p = {static_cast<double>(gray.at(x, y)), static_cast<double>(gray.at(x + dx, y + dy))};
        }
        report.r_xy += correlation(pairs);
    }
    report.r_xy /= static_cast<double>(cfg.trials);
    return report;
}

std::string direction_name(Direction d) {
    switch (d) {
    case Direction::horizontal: return "horizontal";
    case Direction::vertical: return "vertical";
    case Direction::diagonal: return "diagonal";
    }
    return "horizontal";
}

Direction parse_direction(const std::string& s) {
    if (s == "horizontal") return Direction::horizontal;
    if (s == "vertical") return Direction::vertical;
    if (s == "diagonal") return Direction::diagonal;
    throw InvalidArgument("unknown direction '" + s + "'");
}

std::string format_psnr(double db) {
    if (std::isinf(db)) return "infinite";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", db);
    return buf;
}

std::string format_quality_table(const QualityReport& report) {
    std::ostringstream out;
    char line[128];
    std::snprintf(line, sizeof line, "%-8s %12s %12s\n", "channel", "MSE", "PSNR(dB)");
    out << line;
    for (const auto& c : report.per_channel) {
        std::snprintf(line, sizeof line, "%-8s %12.4f %12s\n", c.channel_name.c_str(), c.mse,
                      format_psnr(c.psnr).c_str());
        out << line;
    }
    std::snprintf(line, sizeof line, "%-8s %12.4f %12s\n", "mean", report.mean_mse,
                  format_psnr(psnr(report.mean_mse)).c_str());
    out << line;
    return out.str();
}

std::string format_quality_records(const QualityReport& report) {
    std::ostringstream out;
    char buf[64];
    for (const auto& c : report.per_channel) {
        std::snprintf(buf, sizeof buf, "%.6f", c.mse);
        out << "mse." << c.channel_name << "=" << buf << "\n";
        out << "psnr." << c.channel_name << "=" << format_psnr(c.psnr) << "\n";
    }
    std::snprintf(buf, sizeof buf, "%.6f", report.mean_mse);
    out << "mse.mean=" << buf << "\n";
    return out.str();
}

std::string format_correlation_records(const CorrelationReport& report, const std::string& prefix) {
    std::ostringstream out;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", report.r_xy);
    out << prefix << ".r_xy=" << buf << "\n";
    out << prefix << ".direction=" << direction_name(report.direction) << "\n";
    out << prefix << ".trials=" << report.trials << "\n";
    out << prefix << ".pairs=" << report.pairs_per_trial << "\n";
    return out.str();
}

} // namespace saecrypt
