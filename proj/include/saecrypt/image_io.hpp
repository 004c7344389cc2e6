#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace saecrypt {

// Decoded 8-bit raster, row-major with interleaved channels.
struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 0;  // 1 (gray) or 3 (RGB)
    std::vector<std::uint8_t> data;

    Image() = default;
    Image(std::size_t w, std::size_t h, std::size_t c);

    std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c = 0) {
        return data[(y * width + x) * channels + c];
    }
    std::uint8_t at(std::size_t x, std::size_t y, std::size_t c = 0) const {
        return data[(y * width + x) * channels + c];
    }

    bool empty() const { return data.empty(); }

    // Throws InvalidArgument if the size/channel invariants are broken.
    void validate() const;

    friend bool operator==(const Image&, const Image&) = default;
};

// Normalized square tiles of every channel, plus what is needed to put them back.
// Tiles are ordered channel-major: all tiles of channel 0 (row-major over the
// grid), then channel 1, and so on.
struct TileSet {
    std::size_t tile_dim = 8;
    std::size_t grid_w = 0;
    std::size_t grid_h = 0;
    std::size_t original_w = 0;
    std::size_t original_h = 0;
    std::size_t channel_count = 0;
    std::vector<std::vector<double>> tiles;

    std::size_t tile_length() const { return tile_dim * tile_dim; }
    std::size_t tiles_per_channel() const { return grid_w * grid_h; }

    void validate() const;
};

// PNG (8-bit gray/RGB/palette), binary PGM (P5) and PPM (P6) with maxval 255.
Image load_image(const std::filesystem::path& path);

// Format is picked from the extension: .png, .pgm, .ppm, .pnm.
void save_image(const Image& img, const std::filesystem::path& path);

// BT.601 luma, rounded half-up. Single-channel input is returned unchanged.
Image to_grayscale(const Image& img);

// Pads each channel to a multiple of tile_dim by edge replication and cuts it
// into tile_dim x tile_dim blocks scaled to [0,1].
TileSet tile(const Image& img, std::size_t tile_dim = 8);

Image untile(const TileSet& ts);

// Half-up rounding of a normalized value to a byte, clamped to [0,255].
std::uint8_t to_byte(double normalized);

} // namespace saecrypt
