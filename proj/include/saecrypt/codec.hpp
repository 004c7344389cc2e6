#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "saecrypt/image_io.hpp"
#include "saecrypt/sae.hpp"

namespace saecrypt {

struct CompressedHeader {
    std::uint32_t original_w = 0;
    std::uint32_t original_h = 0;
    std::uint32_t channel_count = 0;
    std::uint32_t tile_dim = 0;
    std::uint32_t grid_w = 0;
    std::uint32_t grid_h = 0;
    std::uint32_t code_dim = 0;
    std::uint32_t code_level = 0;  // SAE level the codes were taken from
    std::uint64_t model_id = 0;

    std::size_t tile_count() const { return std::size_t{grid_w} * grid_h * channel_count; }
    std::size_t payload_size() const { return tile_count() * code_dim; }

    friend bool operator==(const CompressedHeader&, const CompressedHeader&) = default;
};

// Byte-quantized bottleneck codes of every tile, channel-major like TileSet.
struct CompressedImage {
    CompressedHeader header;
    double first_code_raw = 0.5;  // unquantized first coefficient of the first tile
    bool encrypted = false;       // codes hold ciphertext
    std::vector<std::uint8_t> codes;

    // Throws FormatError if the payload length or first_code_raw break the header contract.
    void validate() const;

    double compression_ratio() const {
        return static_cast<double>(header.tile_dim * header.tile_dim) / header.code_dim;
    }

    friend bool operator==(const CompressedImage&, const CompressedImage&) = default;
};

// Code level is the bottleneck unless given (1 = first hidden layer).
CompressedImage compress(const Image& img, const SaeModel& model);
CompressedImage compress(const Image& img, const SaeModel& model, std::size_t code_level);

// Emits a warning on stderr if the model_id differs from the header's.
Image decompress(const CompressedImage& ci, const SaeModel& model);

std::uint8_t quantize_code(double c);
double dequantize_code(std::uint8_t q);

std::vector<std::uint8_t> serialize_compressed(const CompressedImage& ci);
CompressedImage deserialize_compressed(std::span<const std::uint8_t> bytes);

void write_compressed(const CompressedImage& ci, const std::filesystem::path& path);
CompressedImage read_compressed(const std::filesystem::path& path);

// The payload laid out as a grayscale image: one row per tile row and channel,
// grid_w * code_dim bytes wide.
Image render_payload(const CompressedImage& ci);

inline constexpr std::uint8_t kCompressedFormatVersion = 1;
inline constexpr std::uint8_t kEncryptedFlag = 0x80;

} // namespace saecrypt
