#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "saecrypt/image_io.hpp"

namespace saecrypt {

inline constexpr double kMaxPixel = 255.0;

struct ChannelQuality {
    std::string channel_name;
    double mse = 0.0;
    double psnr = 0.0;  // +infinity when mse == 0

    bool psnr_infinite() const;
};

struct QualityReport {
    std::vector<ChannelQuality> per_channel;
    double mean_mse = 0.0;  // mean of the per-channel MSEs
};

enum class Direction { horizontal, vertical, diagonal };

struct CorrelationConfig {
    std::size_t pairs = 4096;
    std::size_t trials = 10;
    Direction direction = Direction::horizontal;
    std::uint64_t rng_seed = 0;
};

struct CorrelationReport {
    double r_xy = 0.0;
    std::size_t trials = 0;
    std::size_t pairs_per_trial = 0;
    Direction direction = Direction::horizontal;
};

// Mean squared difference over one channel.
double mse(const Image& original, const Image& reconstructed, std::size_t channel);

// 10 log10(255^2 / mse); returns +infinity for mse == 0.
double psnr(double mse_value);

QualityReport quality(const Image& original, const Image& reconstructed);

// (E[xy] - E[x]E[y]) / (sqrt(D[x]) sqrt(D[y])) with population variances.
// Throws NumericError when either coordinate is constant.
double correlation(std::span<const std::pair<double, double>> pairs);

// Pixel-wise correlation of two same-sized images (all channels).
double image_correlation(const Image& a, const Image& b);

// Random adjacent-pixel pairs on the grayscale image, averaged over trials;
// trial t uses seed rng_seed + t.
CorrelationReport adjacent_correlation(const Image& img, const CorrelationConfig& cfg = {});

std::string direction_name(Direction d);
Direction parse_direction(const std::string& s);

std::string format_psnr(double db);
std::string format_quality_table(const QualityReport& report);
std::string format_quality_records(const QualityReport& report);
std::string format_correlation_records(const CorrelationReport& report, const std::string& prefix);

} // namespace saecrypt
