// saecrypt: stacked-autoencoder image compression with logistic-map encryption.
//
//   saecrypt train IMAGE --out model.saem [--layers 64,16,4,16,64] [--seed N] ...
//   saecrypt compress IMAGE --model model.saem [--bottleneck h1|h2] --out img.saec
//   saecrypt encrypt img.saec [--r 4.0] --out img.enc.saec --key img.key
//   saecrypt decrypt img.enc.saec --key img.key --out img.saec
//   saecrypt reconstruct img.saec --model model.saem --out img.png
//   saecrypt evaluate ORIGINAL [RECONSTRUCTED] [--correlation] [--records]
//
// Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numeric failure.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "saecrypt/error.hpp"
#include "saecrypt/pipeline.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct UsageError : saecrypt::Error {
    using saecrypt::Error::Error;
};

// Flags that override the config file; unset options leave the file's value.
struct FlagValues {
    std::string config;
    std::size_t tile_dim = 0;
    std::string layers;
    std::string bottleneck;
    double lr = 0;
    std::size_t epochs = 0;
    std::size_t pretrain_epochs = 0;
    std::size_t batch = 0;
    double weight_decay = 0;
    double halving_tolerance = 0;
    std::uint64_t seed = 0;
    double r = 0;
};

struct FlagOptions {
    CLI::Option* tile_dim = nullptr;
    CLI::Option* layers = nullptr;
    CLI::Option* bottleneck = nullptr;
    CLI::Option* lr = nullptr;
    CLI::Option* epochs = nullptr;
    CLI::Option* pretrain_epochs = nullptr;
    CLI::Option* batch = nullptr;
    CLI::Option* weight_decay = nullptr;
    CLI::Option* halving_tolerance = nullptr;
    CLI::Option* seed = nullptr;
    CLI::Option* r = nullptr;
};

FlagOptions add_config_flags(CLI::App& app, FlagValues& v) {
    FlagOptions o;
    app.add_option("--config", v.config, "key=value config file (flags override it)");
    o.tile_dim = app.add_option("--tile-dim", v.tile_dim, "tile side in pixels (default 8)");
    o.layers = app.add_option("--layers", v.layers, "comma-separated layer widths (default 64,16,4,16,64)");
    o.bottleneck = app.add_option("--bottleneck", v.bottleneck, "code level h1, h2, ... (default: deepest)");
    o.lr = app.add_option("--lr", v.lr, "learning rate");
    o.epochs = app.add_option("--epochs", v.epochs, "fine-tuning epochs");
    o.pretrain_epochs = app.add_option("--pretrain-epochs", v.pretrain_epochs, "pretraining epochs per level");
    o.batch = app.add_option("--batch", v.batch, "mini-batch size");
    o.weight_decay = app.add_option("--weight-decay", v.weight_decay, "L2 weight decay");
    o.halving_tolerance = app.add_option("--halving-tolerance", v.halving_tolerance,
                                         "relative cost rise that halves the learning rate");
    o.seed = app.add_option("--seed", v.seed, "training seed");
    o.r = app.add_option("--r", v.r, "logistic map parameter in (3.5699, 4]");
    return o;
}

saecrypt::RunConfig resolve_config(const FlagValues& v, const FlagOptions& o) {
    saecrypt::RunConfig cfg;
    try {
        if (!v.config.empty()) saecrypt::apply_config_file(cfg, v.config);
        if (o.tile_dim->count()) cfg.tile_dim = v.tile_dim;
        if (o.layers->count()) cfg.layer_dims = saecrypt::parse_layer_dims(v.layers);
        if (o.bottleneck->count()) cfg.bottleneck = v.bottleneck;
        if (o.lr->count()) cfg.train.learning_rate = v.lr;
        if (o.epochs->count()) cfg.train.finetune_epochs = v.epochs;
        if (o.pretrain_epochs->count()) cfg.train.pretrain_epochs = v.pretrain_epochs;
        if (o.batch->count()) cfg.train.batch_size = v.batch;
        if (o.weight_decay->count()) cfg.train.weight_decay = v.weight_decay;
        if (o.halving_tolerance->count()) cfg.train.halving_tolerance = v.halving_tolerance;
        if (o.seed->count()) cfg.train.rng_seed = v.seed;
        if (o.r->count()) cfg.r = v.r;
        cfg.validate();
    } catch (const saecrypt::InvalidArgument& e) {
        throw UsageError(e.what());
    }
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stacked-autoencoder image compression with chaotic XOR encryption"};
    app.require_subcommand(1);

    FlagValues flags;
    const FlagOptions opts = add_config_flags(app, flags);
    app.fallthrough();

    std::string input, second_input, out, model, key;
    bool correlation = false, records = false;
    std::string direction = "horizontal";
    std::size_t pairs = 4096, trials = 10;
    std::uint64_t corr_seed = 0;

    auto* train = app.add_subcommand("train", "pretrain and fine-tune a model on one image");
    train->add_option("image", input, "training image")->required();
    train->add_option("--out", out, "model file to write")->required();

    auto* compress = app.add_subcommand("compress", "encode an image into a .saec container");
    compress->add_option("image", input, "image to compress")->required();
    compress->add_option("--model", model, "trained model file")->required();
    compress->add_option("--out", out, "container to write")->required();

    auto* encrypt = app.add_subcommand("encrypt", "XOR the payload with a logistic-map keystream");
    encrypt->add_option("saec", input, "plain container")->required();
    encrypt->add_option("--out", out, "encrypted container to write")->required();
    encrypt->add_option("--key", key, "key file to write")->required();

    auto* decrypt = app.add_subcommand("decrypt", "undo encrypt with the key file");
    decrypt->add_option("saec", input, "encrypted container")->required();
    decrypt->add_option("--key", key, "key file")->required();
    decrypt->add_option("--out", out, "plain container to write")->required();

    auto* reconstruct = app.add_subcommand("reconstruct", "decode a container back to an image");
    reconstruct->add_option("saec", input, "plain container")->required();
    reconstruct->add_option("--model", model, "model used for compression")->required();
    reconstruct->add_option("--out", out, "image to write (.png, .pgm, .ppm)")->required();

    auto* evaluate = app.add_subcommand("evaluate", "MSE/PSNR and adjacent-pixel correlation");
    evaluate->add_option("original", input, "original image, or a single image/container for correlation")
        ->required();
    evaluate->add_option("reconstructed", second_input, "reconstructed image");
    evaluate->add_flag("--correlation", correlation, "also run the adjacent-pixel correlation protocol");
    evaluate->add_flag("--records", records, "print key=value records instead of a table");
    evaluate->add_option("--direction", direction, "horizontal, vertical or diagonal");
    evaluate->add_option("--pairs", pairs, "pixel pairs per trial");
    evaluate->add_option("--trials", trials, "number of averaged trials");
    evaluate->add_option("--corr-seed", corr_seed, "seed of the first trial");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        const saecrypt::RunConfig cfg = resolve_config(flags, opts);

        if (*train) {
            const auto result = saecrypt::cmd_train(input, out, cfg);
            for (std::size_t k = 0; k < result.pretrain_logs.size(); ++k)
                std::printf("pretrain level %zu: cost %.6f -> %.6f\n", k, result.pretrain_logs[k].initial_cost,
                            result.pretrain_logs[k].final_cost);
            std::printf("fine-tune: cost %.6f -> %.6f (final learning rate %g)\n",
                        result.finetune_log.initial_cost, result.finetune_log.final_cost,
                        result.finetune_log.final_learning_rate);
            std::printf("final cost=%.8f\n", result.finetune_log.final_cost);
        } else if (*compress) {
            const auto ci = saecrypt::cmd_compress(input, model, cfg.bottleneck, out);
            std::printf("payload=%zu bytes, code_dim=%u, ratio=%.2f:1\n", ci.codes.size(),
                        ci.header.code_dim, ci.compression_ratio());
        } else if (*encrypt) {
            const auto k = saecrypt::cmd_encrypt(input, cfg.r, out, key);
            std::printf("encrypted with x0=%.17g r=%.17g burn_in=%zu\n", k.x0, k.r, k.burn_in);
        } else if (*decrypt) {
            saecrypt::cmd_decrypt(input, key, out);
        } else if (*reconstruct) {
            const auto img = saecrypt::cmd_reconstruct(input, model, out);
            std::printf("wrote %zux%zu image with %zu channel(s)\n", img.width, img.height, img.channels);
        } else if (*evaluate) {
            saecrypt::EvaluateOptions eo;
            eo.correlation = correlation;
            eo.records = records;
            eo.correlation_cfg.pairs = pairs;
            eo.correlation_cfg.trials = trials;
            eo.correlation_cfg.rng_seed = corr_seed;
            try {
                eo.correlation_cfg.direction = saecrypt::parse_direction(direction);
            } catch (const saecrypt::InvalidArgument& e) {
                throw UsageError(e.what());
            }
            std::optional<std::filesystem::path> second;
            if (!second_input.empty()) second = second_input;
            std::cout << saecrypt::cmd_evaluate(input, second, eo);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const saecrypt::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kNumeric;
    } catch (const saecrypt::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    }
    return kOk;
}
