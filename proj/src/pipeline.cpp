#include "saecrypt/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>

#include "byte_io.hpp"
#include "saecrypt/error.hpp"

namespace saecrypt {

void RunConfig::validate() const {
    if (tile_dim == 0) throw InvalidArgument("tile-dim must be at least 1");
    validate_layer_dims(layer_dims);
    if (layer_dims.size() < 3) throw InvalidArgument("layers needs at least one hidden level");
    if (layer_dims.front() != tile_dim * tile_dim)
        throw InvalidArgument("first layer width " + std::to_string(layer_dims.front()) +
                              " must equal tile-dim^2 = " + std::to_string(tile_dim * tile_dim));
    train.validate();
    ChaoticKey probe;
    probe.r = r;
    probe.validate();
}

namespace {

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T v{};
    const char* first = text.data();
    const char* last = text.data() + text.size();
    const auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || p != last || text.empty())
        throw InvalidArgument("bad value for " + key + ": '" + text + "'");
    return v;
}

} // namespace

std::vector<std::size_t> parse_layer_dims(const std::string& text) {
    std::vector<std::size_t> dims;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) dims.push_back(parse_number<std::size_t>("layers", trim(item)));
    return dims;
}

std::size_t parse_bottleneck(const std::string& name, const SaeModel& model) {
    if (name.empty()) return model.bottleneck_index();
    if (name.size() < 2 || name[0] != 'h')
        throw InvalidArgument("bottleneck must look like h1, h2, ...");
    const auto level = parse_number<std::size_t>("bottleneck", name.substr(1));
    if (level < 1 || level > model.bottleneck_index())
        throw InvalidArgument("model has hidden levels h1..h" +
                              std::to_string(model.bottleneck_index()) + ", got " + name);
    return level;
}

void apply_config_text(RunConfig& cfg, const std::string& text) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InvalidArgument("config: expected key=value, got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "tile-dim") cfg.tile_dim = parse_number<std::size_t>(key, value);
        else if (key == "layers") cfg.layer_dims = parse_layer_dims(value);
        else if (key == "bottleneck") cfg.bottleneck = value;
        else if (key == "lr") cfg.train.learning_rate = parse_number<double>(key, value);
        else if (key == "epochs") cfg.train.finetune_epochs = parse_number<std::size_t>(key, value);
        else if (key == "pretrain-epochs") cfg.train.pretrain_epochs = parse_number<std::size_t>(key, value);
        else if (key == "batch") cfg.train.batch_size = parse_number<std::size_t>(key, value);
        else if (key == "weight-decay") cfg.train.weight_decay = parse_number<double>(key, value);
        else if (key == "halving-tolerance") cfg.train.halving_tolerance = parse_number<double>(key, value);
        else if (key == "seed") cfg.train.rng_seed = parse_number<std::uint64_t>(key, value);
        else if (key == "r") cfg.r = parse_number<double>(key, value);
        else throw InvalidArgument("config: unknown key '" + key + "'");
    }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    apply_config_text(cfg, std::string(bytes.begin(), bytes.end()));
}

TrainResult train_on_image(const Image& img, const RunConfig& cfg) {
    cfg.validate();
    const TileSet tiles = tile(img, cfg.tile_dim);
    TrainResult result;
    SaeModel pre = pretrain(tiles, cfg.layer_dims, cfg.train, &result.pretrain_logs);
    result.model = fine_tune(std::move(pre), tiles, cfg.train, &result.finetune_log);
    return result;
}

TrainResult cmd_train(const std::filesystem::path& image, const std::filesystem::path& model_out,
                      const RunConfig& cfg) {
    TrainResult result = train_on_image(load_image(image), cfg);
    save_model(result.model, model_out);
    return result;
}

CompressedImage cmd_compress(const std::filesystem::path& image, const std::filesystem::path& model,
                             const std::string& bottleneck, const std::filesystem::path& out) {
    const SaeModel m = load_model(model);
    const CompressedImage ci = compress(load_image(image), m, parse_bottleneck(bottleneck, m));
    write_compressed(ci, out);
    return ci;
}

ChaoticKey cmd_encrypt(const std::filesystem::path& saec, double r, const std::filesystem::path& out,
                       const std::filesystem::path& key_out) {
    const CompressedImage ci = read_compressed(saec);
    const ChaoticKey key = derive_key(ci, r);
    write_compressed(encrypt_image(ci, key), out);
    write_key(key, key_out);
    return key;
}

void cmd_decrypt(const std::filesystem::path& encrypted, const std::filesystem::path& key,
                 const std::filesystem::path& out) {
    const ChaoticKey k = read_key(key);
    write_compressed(decrypt_image(read_compressed(encrypted), k), out);
}

Image cmd_reconstruct(const std::filesystem::path& saec, const std::filesystem::path& model,
                      const std::filesystem::path& out) {
    const CompressedImage ci = read_compressed(saec);
    if (ci.encrypted) throw InvalidArgument("payload is encrypted; decrypt it first");
    Image img = decompress(ci, load_model(model));
    save_image(img, out);
    return img;
}

bool is_compressed_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    char magic[4] = {};
    in.read(magic, 4);
    return in.gcount() == 4 && std::string_view(magic, 4) == "SAEC";
}

std::string cmd_evaluate(const std::filesystem::path& first,
                         const std::optional<std::filesystem::path>& second,
                         const EvaluateOptions& opts) {
    std::ostringstream out;
    const auto emit_correlation = [&](const Image& img, const std::string& label) {
        const CorrelationReport rep = adjacent_correlation(img, opts.correlation_cfg);
        if (opts.records) {
            out << format_correlation_records(rep, "correlation." + label);
        } else {
            char buf[160];
            std::snprintf(buf, sizeof buf, "%s adjacent correlation (%s, %zu trials x %zu pairs): %.4f\n",
                          label.c_str(), direction_name(rep.direction).c_str(), rep.trials,
                          rep.pairs_per_trial, rep.r_xy);
            out << buf;
        }
    };

    if (!second) {
        if (is_compressed_file(first)) {
            emit_correlation(render_payload(read_compressed(first)), "payload");
        } else {
            emit_correlation(load_image(first), "image");
        }
        return out.str();
    }

    const Image original = load_image(first);
    const Image reconstructed = load_image(*second);
    const QualityReport q = quality(original, reconstructed);
    out << (opts.records ? format_quality_records(q) : format_quality_table(q));
    if (opts.correlation) emit_correlation(reconstructed, "reconstructed");
    return out.str();
}

} // namespace saecrypt
