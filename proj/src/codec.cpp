#include "saecrypt/codec.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <string>

#include "byte_io.hpp"
#include "saecrypt/error.hpp"

namespace saecrypt {

void CompressedImage::validate() const {
    const auto& h = header;
    if (h.tile_dim == 0 || h.code_dim == 0 || h.grid_w == 0 || h.grid_h == 0)
        throw FormatError("compressed image: zero-sized header field");
    for (std::uint32_t v : {h.original_w, h.original_h, h.tile_dim, h.grid_w, h.grid_h, h.code_dim})
        if (v > (1u << 20)) throw FormatError("compressed image: header field out of range");
    if (h.channel_count != 1 && h.channel_count != 3)
        throw FormatError("compressed image: channel count must be 1 or 3");
    if (std::size_t{h.grid_w} * h.tile_dim < h.original_w ||
        std::size_t{h.grid_h} * h.tile_dim < h.original_h)
        throw FormatError("compressed image: tile grid does not cover the image");
    if (codes.size() != h.payload_size())
        throw FormatError("compressed image: payload has " + std::to_string(codes.size()) +
                          " bytes, header promises " + std::to_string(h.payload_size()));
    if (!(first_code_raw > 0.0 && first_code_raw < 1.0))
        throw FormatError("compressed image: first_code_raw outside (0,1)");
}

std::uint8_t quantize_code(double c) { return to_byte(c); }

double dequantize_code(std::uint8_t q) { return q / 255.0; }

CompressedImage compress(const Image& img, const SaeModel& model) {
    return compress(img, model, model.bottleneck_index());
}

CompressedImage compress(const Image& img, const SaeModel& model, std::size_t code_level) {
    model.validate();
    const auto tile_dim = static_cast<std::size_t>(std::lround(std::sqrt(model.input_dim())));
    if (tile_dim * tile_dim != model.input_dim())
        throw InvalidArgument("model input width " + std::to_string(model.input_dim()) +
                              " is not a square tile");
    if (code_level < 1 || code_level > model.bottleneck_index())
        throw InvalidArgument("code level must be in 1.." + std::to_string(model.bottleneck_index()));

    const TileSet ts = tile(img, tile_dim);
    CompressedImage ci;
    auto& h = ci.header;
    h.original_w = static_cast<std::uint32_t>(ts.original_w);
    h.original_h = static_cast<std::uint32_t>(ts.original_h);
    h.channel_count = static_cast<std::uint32_t>(ts.channel_count);
    h.tile_dim = static_cast<std::uint32_t>(tile_dim);
    h.grid_w = static_cast<std::uint32_t>(ts.grid_w);
    h.grid_h = static_cast<std::uint32_t>(ts.grid_h);
    h.code_dim = static_cast<std::uint32_t>(model.layer_dims[code_level]);
    h.code_level = static_cast<std::uint32_t>(code_level);
    h.model_id = model_id(model);

    ci.codes.reserve(h.payload_size());
    for (std::size_t i = 0; i < ts.tiles.size(); ++i) {
        const auto code = encode(model, ts.tiles[i], code_level);
        // A saturated unit can round to exactly 0 or 1; keep the seed inside (0,1).
        if (i == 0)
            ci.first_code_raw = std::clamp(code[0], std::numeric_limits<double>::min(),
                                           std::nextafter(1.0, 0.0));
        for (double c : code) ci.codes.push_back(quantize_code(c));
    }
    return ci;
}

Image decompress(const CompressedImage& ci, const SaeModel& model) {
    ci.validate();
    model.validate();
    const auto& h = ci.header;
    if (h.code_level < 1 || h.code_level > model.bottleneck_index() ||
        model.layer_dims[h.code_level] != h.code_dim)
        throw InvalidArgument("model has no level " + std::to_string(h.code_level) + " of width " +
                              std::to_string(h.code_dim));
    if (model.input_dim() != std::size_t{h.tile_dim} * h.tile_dim)
        throw InvalidArgument("model input width does not match the tile size");
    if (model_id(model) != h.model_id)
        std::cerr << "warning: model id differs from the one used for compression\n";

    TileSet ts;
    ts.tile_dim = h.tile_dim;
    ts.grid_w = h.grid_w;
    ts.grid_h = h.grid_h;
    ts.original_w = h.original_w;
    ts.original_h = h.original_h;
    ts.channel_count = h.channel_count;
    ts.tiles.reserve(h.tile_count());
    std::vector<double> code(h.code_dim);
    for (std::size_t t = 0; t < h.tile_count(); ++t) {
        for (std::size_t k = 0; k < h.code_dim; ++k)
            code[k] = dequantize_code(ci.codes[t * h.code_dim + k]);
        ts.tiles.push_back(decode(model, code, h.code_level));
    }
    return untile(ts);
}

std::vector<std::uint8_t> serialize_compressed(const CompressedImage& ci) {
    ci.validate();
    detail::ByteWriter w;
    w.bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>("SAEC"), 4));
    w.u8(kCompressedFormatVersion | (ci.encrypted ? kEncryptedFlag : 0));
    const auto& h = ci.header;
    for (std::uint32_t v : {h.original_w, h.original_h, h.channel_count, h.tile_dim, h.grid_w,
                            h.grid_h, h.code_dim, h.code_level})
        w.u32(v);
    w.u64(h.model_id);
    w.f64(ci.first_code_raw);
    w.bytes(ci.codes);
    return w.take();
}

CompressedImage deserialize_compressed(std::span<const std::uint8_t> bytes) {
    detail::ByteReader r(bytes, "compressed file");
    const auto magic = r.bytes(4);
    if (!std::equal(magic.begin(), magic.end(), "SAEC"))
        throw FormatError("compressed file: bad magic (corrupt header)");
    const std::uint8_t version = r.u8();
    if ((version & ~kEncryptedFlag) != kCompressedFormatVersion)
        throw VersionError("compressed file: unsupported version " +
                           std::to_string(version & ~kEncryptedFlag));

    CompressedImage ci;
    ci.encrypted = (version & kEncryptedFlag) != 0;
    auto& h = ci.header;
    for (std::uint32_t* f : {&h.original_w, &h.original_h, &h.channel_count, &h.tile_dim, &h.grid_w,
                             &h.grid_h, &h.code_dim, &h.code_level})
        *f = r.u32();
    h.model_id = r.u64();
    ci.first_code_raw = r.f64();
    const auto payload = r.bytes(r.remaining());
    ci.codes.assign(payload.begin(), payload.end());
    ci.validate();
    return ci;
}

void write_compressed(const CompressedImage& ci, const std::filesystem::path& path) {
    detail::write_file(path, serialize_compressed(ci));
}

CompressedImage read_compressed(const std::filesystem::path& path) {
    return deserialize_compressed(detail::read_file(path));
}

Image render_payload(const CompressedImage& ci) {
    ci.validate();
    const auto& h = ci.header;
    Image img(std::size_t{h.grid_w} * h.code_dim, std::size_t{h.grid_h} * h.channel_count, 1);
    img.data = ci.codes;
    return img;
}

} // namespace saecrypt
