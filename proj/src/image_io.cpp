#include "saecrypt/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <span>
#include <string>

#include "byte_io.hpp"
#include "saecrypt/error.hpp"

namespace saecrypt {

Image::Image(std::size_t w, std::size_t h, std::size_t c)
    : width(w), height(h), channels(c), data(w * h * c, 0) {}

void Image::validate() const {
    if (channels != 1 && channels != 3)
        throw InvalidArgument("image must have 1 or 3 channels, got " + std::to_string(channels));
    if (data.size() != width * height * channels)
        throw InvalidArgument("image data length does not match its dimensions");
}

void TileSet::validate() const {
    if (tile_dim == 0) throw InvalidArgument("tile_dim must be at least 1");
    if (tiles.size() != grid_w * grid_h * channel_count)
        throw InvalidArgument("tile count " + std::to_string(tiles.size()) +
                              " does not match grid " + std::to_string(grid_w) + "x" +
                              std::to_string(grid_h) + "x" + std::to_string(channel_count));
    if (grid_w * tile_dim < original_w || grid_h * tile_dim < original_h)
        throw InvalidArgument("tile grid does not cover the original image");
    for (const auto& t : tiles)
        if (t.size() != tile_length()) throw InvalidArgument("tile has wrong length");
}

namespace {

// ---- PNM ----

class PnmHeaderParser {
public:
    explicit PnmHeaderParser(std::span<const std::uint8_t> d) : d_(d) {}

    std::size_t number() {
        skip_space_and_comments();
        if (pos_ >= d_.size() || !std::isdigit(d_[pos_])) throw FormatError("corrupt PNM header");
        std::size_t v = 0;
        while (pos_ < d_.size() && std::isdigit(d_[pos_])) {
            v = v * 10 + (d_[pos_++] - '0');
            if (v > (1u << 30)) throw FormatError("corrupt PNM header: value too large");
        }
        return v;
    }

    // Exactly one whitespace byte separates maxval from the raster.
    std::size_t raster_offset() {
        if (pos_ >= d_.size() || !std::isspace(d_[pos_])) throw FormatError("corrupt PNM header");
        return pos_ + 1;
    }

private:
    void skip_space_and_comments() {
        while (pos_ < d_.size()) {
            if (std::isspace(d_[pos_])) {
                ++pos_;
            } else if (d_[pos_] == '#') {
                while (pos_ < d_.size() && d_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::span<const std::uint8_t> d_;
    std::size_t pos_ = 2;
};

Image decode_pnm(std::span<const std::uint8_t> d) {
    const std::size_t channels = d[1] == '5' ? 1 : 3;
    PnmHeaderParser p(d);
    const std::size_t w = p.number();
    const std::size_t h = p.number();
    const std::size_t maxval = p.number();
    if (w == 0 || h == 0) throw FormatError("corrupt PNM header: zero dimension");
    if (maxval > 255) throw FormatError("16-bit PNM images are not supported");
    if (maxval != 255) throw FormatError("unsupported PNM maxval " + std::to_string(maxval));
    const std::size_t off = p.raster_offset();
    Image img(w, h, channels);
    if (d.size() - off < img.data.size()) throw FormatError("PNM raster is truncated");
    std::memcpy(img.data.data(), d.data() + off, img.data.size());
    return img;
}

std::vector<std::uint8_t> encode_pnm(const Image& img) {
    std::string header = (img.channels == 1 ? "P5\n" : "P6\n") + std::to_string(img.width) + " " +
                         std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.data.begin(), img.data.end());
    return out;
}

// ---- PNG ----

struct MemoryReader {
    std::span<const std::uint8_t> data;
    std::size_t pos = 0;
};

void png_read_memory(png_structp png, png_bytep out, png_size_t n) {
    auto* src = static_cast<MemoryReader*>(png_get_io_ptr(png));
    if (src->data.size() - src->pos < n) png_error(png, "PNG data is truncated");
    std::memcpy(out, src->data.data() + src->pos, n);
    src->pos += n;
}

void png_write_memory(png_structp png, png_bytep in, png_size_t n) {
    auto* dst = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    dst->insert(dst->end(), in, in + n);
}

void png_flush_noop(png_structp) {}

// Ancillary-chunk complaints (colour profiles etc.) do not affect the pixels.
void png_warning_silent(png_structp, png_const_charp) {}

// Keeps libpng's message for the FormatError instead of printing it.
void png_error_capture(png_structp png, png_const_charp msg) {
    if (auto* dst = static_cast<std::string*>(png_get_error_ptr(png))) *dst = msg;
    png_longjmp(png, 1);
}

struct PngReadHandle {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReadHandle() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

struct PngWriteHandle {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriteHandle() { png_destroy_write_struct(&png, info ? &info : nullptr); }
};

Image decode_png(std::span<const std::uint8_t> d) {
    PngReadHandle h;
    std::string error;
    h.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, png_error_capture, png_warning_silent);
    if (!h.png) throw FormatError("libpng initialisation failed");
    h.info = png_create_info_struct(h.png);
    if (!h.info) throw FormatError("libpng initialisation failed");

    MemoryReader reader{d};
    Image img;
    std::vector<png_bytep> rows;
    // Nothing declared past this point may need destruction on longjmp.
    if (setjmp(png_jmpbuf(h.png))) throw FormatError("corrupt PNG data: " + error);

    png_set_read_fn(h.png, &reader, png_read_memory);
    png_read_info(h.png, h.info);

    const int bit_depth = png_get_bit_depth(h.png, h.info);
    const int color_type = png_get_color_type(h.png, h.info);
    if (bit_depth == 16) throw FormatError("16-bit PNG images are not supported");
    if (color_type & PNG_COLOR_MASK_ALPHA || png_get_valid(h.png, h.info, PNG_INFO_tRNS))
        throw FormatError("PNG images with alpha are not supported");

    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(h.png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(h.png);
    png_read_update_info(h.png, h.info);

    const std::size_t channels = png_get_channels(h.png, h.info);
    if (channels != 1 && channels != 3) throw FormatError("unsupported PNG channel layout");
    img = Image(png_get_image_width(h.png, h.info), png_get_image_height(h.png, h.info), channels);
    rows.resize(img.height);
    for (std::size_t y = 0; y < img.height; ++y) rows[y] = img.data.data() + y * img.width * channels;
    png_read_image(h.png, rows.data());
    png_read_end(h.png, nullptr);
    return img;
}

std::vector<std::uint8_t> encode_png(const Image& img) {
    PngWriteHandle h;
    std::string error;
    h.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, png_error_capture, png_warning_silent);
    if (!h.png) throw FormatError("libpng initialisation failed");
    h.info = png_create_info_struct(h.png);
    if (!h.info) throw FormatError("libpng initialisation failed");

    std::vector<std::uint8_t> out;
    std::vector<png_bytep> rows(img.height);
    for (std::size_t y = 0; y < img.height; ++y)
        rows[y] = const_cast<png_bytep>(img.data.data() + y * img.width * img.channels);
    if (setjmp(png_jmpbuf(h.png))) throw FormatError("PNG encoding failed: " + error);

    png_set_write_fn(h.png, &out, png_write_memory, png_flush_noop);
    png_set_IHDR(h.png, h.info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(h.png, h.info);
    png_write_image(h.png, rows.data());
    png_write_end(h.png, nullptr);
    return out;
}

std::string lower_extension(const std::filesystem::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

} // namespace

Image load_image(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    std::span<const std::uint8_t> d(bytes);
    if (d.size() >= 8 && png_sig_cmp(d.data(), 0, 8) == 0) return decode_png(d);
    if (d.size() >= 2 && d[0] == 'P' && (d[1] == '5' || d[1] == '6')) return decode_pnm(d);
    throw FormatError("unsupported image format: " + path.string());
}

void save_image(const Image& img, const std::filesystem::path& path) {
    img.validate();
    const std::string ext = lower_extension(path);
    if (ext == ".png") {
        detail::write_file(path, encode_png(img));
    } else if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") {
        detail::write_file(path, encode_pnm(img));
    } else {
        throw InvalidArgument("unknown image extension '" + ext + "' (use .png, .pgm or .ppm)");
    }
}

Image to_grayscale(const Image& img) {
    img.validate();
    if (img.channels == 1) return img;
    Image out(img.width, img.height, 1);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const double luma = 0.299 * img.data[3 * i] + 0.587 * img.data[3 * i + 1] +
                            0.114 * img.data[3 * i + 2];
        out.data[i] = static_cast<std::uint8_t>(std::min(255.0, std::floor(luma + 0.5)));
    }
    return out;
}

std::uint8_t to_byte(double normalized) {
    const double v = std::floor(normalized * 255.0 + 0.5);
    return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

TileSet tile(const Image& img, std::size_t tile_dim) {
    img.validate();
    if (tile_dim == 0) throw InvalidArgument("tile_dim must be at least 1");
    if (img.empty()) throw InvalidArgument("cannot tile an empty image");

    TileSet ts;
    ts.tile_dim = tile_dim;
    ts.original_w = img.width;
    ts.original_h = img.height;
    ts.channel_count = img.channels;
    ts.grid_w = (img.width + tile_dim - 1) / tile_dim;
    ts.grid_h = (img.height + tile_dim - 1) / tile_dim;
    ts.tiles.reserve(ts.grid_w * ts.grid_h * img.channels);

    for (std::size_t c = 0; c < img.channels; ++c) {
        for (std::size_t gy = 0; gy < ts.grid_h; ++gy) {
            for (std::size_t gx = 0; gx < ts.grid_w; ++gx) {
                std::vector<double> t(tile_dim * tile_dim);
                for (std::size_t ty = 0; ty < tile_dim; ++ty) {
                    const std::size_t y = std::min(gy * tile_dim + ty, img.height - 1);
                    for (std::size_t tx = 0; tx < tile_dim; ++tx) {
                        const std::size_t x = std::min(gx * tile_dim + tx, img.width - 1);
                        t[ty * tile_dim + tx] = img.at(x, y, c) / 255.0;
                    }
                }
                ts.tiles.push_back(std::move(t));
            }
        }
    }
    return ts;
}

Image untile(const TileSet& ts) {
    ts.validate();
    Image img(ts.original_w, ts.original_h, ts.channel_count);
    const std::size_t per_channel = ts.tiles_per_channel();
    for (std::size_t c = 0; c < ts.channel_count; ++c) {
        for (std::size_t gy = 0; gy < ts.grid_h; ++gy) {
            for (std::size_t gx = 0; gx < ts.grid_w; ++gx) {
                const auto& t = ts.tiles[c * per_channel + gy * ts.grid_w + gx];
                for (std::size_t ty = 0; ty < ts.tile_dim; ++ty) {
                    const std::size_t y = gy * ts.tile_dim + ty;
                    if (y >= img.height) break;
                    for (std::size_t tx = 0; tx < ts.tile_dim; ++tx) {
                        const std::size_t x = gx * ts.tile_dim + tx;
                        if (x >= img.width) break;
                        img.at(x, y, c) = to_byte(t[ty * ts.tile_dim + tx]);
                    }
                }
            }
        }
    }
    return img;
}

} // namespace saecrypt
