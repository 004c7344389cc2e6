#pragma once

// End-to-end operations behind the command-line tool: train, compress,
// encrypt, decrypt, reconstruct, evaluate. Each one reads and writes files
// so the CLI stays a thin argument parser.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "saecrypt/chaos.hpp"
#include "saecrypt/codec.hpp"
#include "saecrypt/image_io.hpp"
#include "saecrypt/metrics.hpp"
#include "saecrypt/sae.hpp"

namespace saecrypt {

struct RunConfig {
    std::size_t tile_dim = 8;
    std::vector<std::size_t> layer_dims{64, 16, 4, 16, 64};
    // "h1", "h2", ...: hidden level the codes are read from. Empty = bottleneck.
    std::string bottleneck;
    TrainConfig train;
    double r = 4.0;

    // Throws InvalidArgument if layer_dims[0] != tile_dim^2 or dims are not mirrored.
    void validate() const;
};

// "64,16,4,16,64" -> {64,16,4,16,64}
std::vector<std::size_t> parse_layer_dims(const std::string& text);

// "h1" -> 1. Empty selects the model's bottleneck.
std::size_t parse_bottleneck(const std::string& name, const SaeModel& model);

// key=value lines (# comments allowed). Keys: tile-dim, layers, bottleneck, lr,
// epochs, pretrain-epochs, batch, weight-decay, halving-tolerance, seed, r.
void apply_config_text(RunConfig& cfg, const std::string& text);
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

struct TrainResult {
    SaeModel model;
    std::vector<TrainLog> pretrain_logs;
    TrainLog finetune_log;
};

// Pretraining then fine-tuning on the tiles of one image.
TrainResult train_on_image(const Image& img, const RunConfig& cfg);

TrainResult cmd_train(const std::filesystem::path& image, const std::filesystem::path& model_out,
                      const RunConfig& cfg);

CompressedImage cmd_compress(const std::filesystem::path& image, const std::filesystem::path& model,
                             const std::string& bottleneck, const std::filesystem::path& out);

// Derives the key from the payload, writes the encrypted container and the key file.
ChaoticKey cmd_encrypt(const std::filesystem::path& saec, double r, const std::filesystem::path& out,
                       const std::filesystem::path& key_out);

void cmd_decrypt(const std::filesystem::path& encrypted, const std::filesystem::path& key,
                 const std::filesystem::path& out);

Image cmd_reconstruct(const std::filesystem::path& saec, const std::filesystem::path& model,
                      const std::filesystem::path& out);

struct EvaluateOptions {
    bool correlation = false;
    CorrelationConfig correlation_cfg;
    bool records = false;  // key=value output instead of a table
};

// Two images: per-channel MSE/PSNR (plus adjacent correlation of the second
// with `correlation`). One compressed container: adjacent correlation of the
// payload rendered as an image. One image: its adjacent correlation.
std::string cmd_evaluate(const std::filesystem::path& first,
                         const std::optional<std::filesystem::path>& second,
                         const EvaluateOptions& opts);

bool is_compressed_file(const std::filesystem::path& path);

} // namespace saecrypt
