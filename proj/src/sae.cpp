#include "saecrypt/sae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "byte_io.hpp"
#include "saecrypt/error.hpp"
#include "saecrypt/rng.hpp"

namespace saecrypt {

Matrix Matrix::transposed() const {
    Matrix t(cols, rows);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) t(c, r) = (*this)(r, c);
    return t;
}

void validate_layer_dims(std::span<const std::size_t> dims) {
    if (dims.size() < 2) throw InvalidArgument("layer_dims needs at least two entries");
    for (std::size_t d : dims)
        if (d == 0) throw InvalidArgument("layer_dims entries must be positive");
    for (std::size_t i = 0; i < dims.size() / 2; ++i)
        if (dims[i] != dims[dims.size() - 1 - i])
            throw InvalidArgument("layer_dims must be palindromic");
}

SaeModel SaeModel::zeros(std::vector<std::size_t> dims) {
    validate_layer_dims(dims);
    SaeModel m;
    m.layer_dims = std::move(dims);
    for (std::size_t l = 0; l + 1 < m.layer_dims.size(); ++l)
        m.layers.emplace_back(m.layer_dims[l], m.layer_dims[l + 1]);
    return m;
}

SaeModel SaeModel::random(std::vector<std::size_t> dims, std::uint64_t seed) {
    SaeModel m = zeros(std::move(dims));
    Rng rng(seed);
    for (auto& layer : m.layers) {
        const double bound = std::sqrt(6.0 / static_cast<double>(layer.in_dim() + layer.out_dim()));
        for (auto& w : layer.weights.values) w = rng.uniform(-bound, bound);
    }
    return m;
}

void SaeModel::validate() const {
    validate_layer_dims(layer_dims);
    if (layers.size() != layer_dims.size() - 1)
        throw InvalidArgument("layer count does not match layer_dims");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const Layer& layer = layers[l];
        if (layer.in_dim() != layer_dims[l] || layer.out_dim() != layer_dims[l + 1] ||
            layer.weights.values.size() != layer.in_dim() * layer.out_dim() ||
            layer.biases.size() != layer.out_dim())
            throw InvalidArgument("layer " + std::to_string(l) + " has the wrong shape");
        const auto finite = [](double v) { return std::isfinite(v); };
        if (!std::all_of(layer.weights.values.begin(), layer.weights.values.end(), finite) ||
            !std::all_of(layer.biases.begin(), layer.biases.end(), finite))
            throw InvalidArgument("layer " + std::to_string(l) + " has non-finite parameters");
    }
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw InvalidArgument("learning_rate must be positive");
    if (batch_size < 1) throw InvalidArgument("batch_size must be at least 1");
    if (!(weight_decay >= 0.0)) throw InvalidArgument("weight_decay must be non-negative");
    if (!(halving_tolerance >= 0.0)) throw InvalidArgument("halving_tolerance must be non-negative");
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

namespace {

void check_length(std::size_t got, std::size_t want, const char* what) {
    if (got != want)
        throw InvalidArgument(std::string(what) + ": expected length " + std::to_string(want) +
                              ", got " + std::to_string(got));
}

// z = W a + b, a_out = sigmoid(z)
void layer_forward(const Layer& layer, std::span<const double> in, std::vector<double>& z,
                   std::vector<double>& out) {
    const std::size_t rows = layer.out_dim();
    const std::size_t cols = layer.in_dim();
    z.resize(rows);
    out.resize(rows);
    const double* w = layer.weights.values.data();
    for (std::size_t r = 0; r < rows; ++r) {
        double s = layer.biases[r];
        const double* row = w + r * cols;
        for (std::size_t c = 0; c < cols; ++c) s += row[c] * in[c];
        z[r] = s;
        out[r] = sigmoid(s);
    }
}

std::vector<double> run_layers(const SaeModel& model, std::span<const double> in, std::size_t first,
                               std::size_t last) {
    std::vector<double> cur(in.begin(), in.end());
    std::vector<double> z, next;
    for (std::size_t l = first; l < last; ++l) {
        layer_forward(model.layers[l], cur, z, next);
        std::swap(cur, next);
    }
    return cur;
}

std::vector<Gradients> zero_gradients(const SaeModel& model) {
    std::vector<Gradients> g(model.layers.size());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        g[l].weight_grad = Matrix(model.layers[l].out_dim(), model.layers[l].in_dim());
        g[l].bias_grad.assign(model.layers[l].out_dim(), 0.0);
    }
    return g;
}

// forward -> output delta -> hidden deltas, summing each layer's gradient into acc.
double accumulate_sample(const SaeModel& model, std::span<const double> x, std::span<const double> y,
                         std::vector<Gradients>& acc) {
    const Activations act = forward(model, x);
    const std::size_t depth = model.layers.size();
    check_length(y.size(), act.output().size(), "target");

    double loss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = act.output()[i] - y[i];
        loss += 0.5 * d * d;
    }

    std::vector<double> delta = output_delta(act.output(), y, act.pre_activations[depth]);
    for (std::size_t l = depth; l-- > 0;) {
        accumulate_gradients(delta, act.activations[l], acc[l]);
        if (l > 0)
            delta = hidden_delta(model.layers[l], delta, act.pre_activations[l], act.activations[l]);
    }
    return loss;
}

double squared_weight_sum(const SaeModel& model) {
    double s = 0.0;
    for (const auto& layer : model.layers)
        for (double w : layer.weights.values) s += w * w;
    return s;
}

// Shared mini-batch loop for the per-level autoencoders and the full stack.
SaeModel train(SaeModel model, const std::vector<std::vector<double>>& data, std::size_t epochs,
               const TrainConfig& cfg, Rng& rng, TrainLog* log) {
    TrainLog local;
    TrainLog& out = log ? *log : local;
    out = TrainLog{};

    double lr = cfg.learning_rate;
    double prev = reconstruction_cost(model, data, cfg.weight_decay);
    out.initial_cost = prev;
    SaeModel best = model;
    double best_cost = prev;

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    auto acc = zero_gradients(model);

    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            for (auto& g : acc) {
                std::fill(g.weight_grad.values.begin(), g.weight_grad.values.end(), 0.0);
                std::fill(g.bias_grad.begin(), g.bias_grad.end(), 0.0);
            }
            for (std::size_t i = start; i < end; ++i)
                accumulate_sample(model, data[order[i]], data[order[i]], acc);

            const double scale = lr / static_cast<double>(end - start);
            for (std::size_t l = 0; l < model.layers.size(); ++l) {
                auto& w = model.layers[l].weights.values;
                const auto& gw = acc[l].weight_grad.values;
                for (std::size_t k = 0; k < w.size(); ++k)
                    w[k] -= scale * gw[k] + lr * cfg.weight_decay * w[k];
                auto& b = model.layers[l].biases;
                const auto& gb = acc[l].bias_grad;
                for (std::size_t k = 0; k < b.size(); ++k) b[k] -= scale * gb[k];
            }
        }

        const double c = reconstruction_cost(model, data, cfg.weight_decay);
        if (!std::isfinite(c)) throw NumericError("training diverged (non-finite cost)");
        out.epoch_costs.push_back(c);
        // small rises are mini-batch noise; only a real increase halves the step
        if (c > prev * (1.0 + cfg.halving_tolerance)) lr *= 0.5;
        prev = c;
        if (c < best_cost) {
            best_cost = c;
            best = model;
        }
    }
    out.final_cost = best_cost;
    out.final_learning_rate = lr;
    return best;
}

} // namespace

Activations forward(const SaeModel& model, std::span<const double> x) {
    check_length(x.size(), model.input_dim(), "forward input");
    Activations act;
    act.pre_activations.resize(model.layer_dims.size());
    act.activations.resize(model.layer_dims.size());
    act.activations[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < model.layers.size(); ++l)
        layer_forward(model.layers[l], act.activations[l], act.pre_activations[l + 1],
                      act.activations[l + 1]);
    return act;
}

std::vector<double> output_delta(std::span<const double> a_out, std::span<const double> y,
                                 std::span<const double> z_out) {
    check_length(y.size(), a_out.size(), "output_delta target");
    check_length(z_out.size(), a_out.size(), "output_delta z");
    std::vector<double> delta(a_out.size());
    for (std::size_t i = 0; i < delta.size(); ++i)
        delta[i] = -(y[i] - a_out[i]) * (a_out[i] * (1.0 - a_out[i]));
    return delta;
}

std::vector<double> hidden_delta(const Layer& layer, std::span<const double> delta_next,
                                 std::span<const double> z, std::span<const double> a) {
    check_length(delta_next.size(), layer.out_dim(), "hidden_delta delta");
    check_length(a.size(), layer.in_dim(), "hidden_delta activation");
    check_length(z.size(), layer.in_dim(), "hidden_delta z");
    std::vector<double> delta(layer.in_dim(), 0.0);
    for (std::size_t r = 0; r < layer.out_dim(); ++r) {
        const double d = delta_next[r];
        const double* row = layer.weights.values.data() + r * layer.in_dim();
        for (std::size_t c = 0; c < layer.in_dim(); ++c) delta[c] += row[c] * d;
    }
    for (std::size_t c = 0; c < delta.size(); ++c) delta[c] *= a[c] * (1.0 - a[c]);
    return delta;
}

void accumulate_gradients(std::span<const double> delta_next, std::span<const double> a,
                          Gradients& acc) {
    check_length(acc.weight_grad.rows, delta_next.size(), "gradient rows");
    check_length(acc.weight_grad.cols, a.size(), "gradient cols");
    for (std::size_t r = 0; r < delta_next.size(); ++r) {
        const double d = delta_next[r];
        double* row = acc.weight_grad.values.data() + r * a.size();
        for (std::size_t c = 0; c < a.size(); ++c) row[c] += d * a[c];
        acc.bias_grad[r] += d;
    }
}

Gradients gradients(std::span<const double> delta_next, std::span<const double> a) {
    Gradients g{Matrix(delta_next.size(), a.size()), std::vector<double>(delta_next.size(), 0.0)};
    accumulate_gradients(delta_next, a, g);
    return g;
}

std::vector<Gradients> backpropagate(const SaeModel& model, const Sample& sample) {
    auto acc = zero_gradients(model);
    accumulate_sample(model, sample.x, sample.y, acc);
    return acc;
}

double cost(const SaeModel& model, std::span<const Sample> samples, double weight_decay) {
    if (samples.empty()) throw InvalidArgument("cost needs at least one sample");
    double total = 0.0;
    for (const auto& s : samples) {
        const auto out = run_layers(model, s.x, 0, model.layers.size());
        check_length(s.y.size(), out.size(), "cost target");
        double j = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double d = out[i] - s.y[i];
            j += d * d;
        }
        total += 0.5 * j;
    }
    double result = total / static_cast<double>(samples.size());
    if (weight_decay > 0.0) result += 0.5 * weight_decay * squared_weight_sum(model);
    return result;
}

double reconstruction_cost(const SaeModel& model, const std::vector<std::vector<double>>& data,
                           double weight_decay) {
    std::vector<Sample> samples;
    samples.reserve(data.size());
    for (const auto& row : data) samples.push_back({row, row});
    return cost(model, samples, weight_decay);
}

SaeModel pretrain(const TileSet& tiles, std::vector<std::size_t> layer_dims, const TrainConfig& cfg,
                  std::vector<TrainLog>* logs) {
    cfg.validate();
    validate_layer_dims(layer_dims);
    if (layer_dims.size() < 3)
        throw InvalidArgument("pretraining needs input, hidden and output levels");
    if (tiles.tiles.empty()) throw InvalidArgument("cannot pretrain on an empty tile set");
    if (layer_dims.front() != tiles.tile_length())
        throw InvalidArgument("layer_dims[0] must equal the tile length " +
                              std::to_string(tiles.tile_length()));

    SaeModel model = SaeModel::zeros(layer_dims);
    const std::size_t depth = model.layers.size();
    Rng rng(cfg.rng_seed);
    if (logs) logs->clear();

    std::vector<std::vector<double>> level_input = tiles.tiles;
    for (std::size_t k = 0; k < model.bottleneck_index(); ++k) {
        const std::size_t in = layer_dims[k];
        const std::size_t hidden = layer_dims[k + 1];
        SaeModel ae = SaeModel::random({in, hidden, in}, rng.below(UINT64_MAX));

        TrainLog log;
        ae = train(std::move(ae), level_input, cfg.pretrain_epochs, cfg, rng, &log);
        if (logs) logs->push_back(std::move(log));

        model.layers[k] = ae.layers[0];
        Layer& mirror = model.layers[depth - 1 - k];
        mirror.weights = ae.layers[0].weights.transposed();
        std::fill(mirror.biases.begin(), mirror.biases.end(), 0.0);

        for (auto& row : level_input) row = run_layers(ae, row, 0, 1);
    }
    return model;
}

SaeModel fine_tune(SaeModel model, const TileSet& tiles, const TrainConfig& cfg, TrainLog* log) {
    cfg.validate();
    model.validate();
    if (tiles.tiles.empty()) throw InvalidArgument("cannot fine-tune on an empty tile set");
    if (model.input_dim() != tiles.tile_length())
        throw InvalidArgument("model input width does not match the tile length");
    Rng rng(cfg.rng_seed ^ 0x9e3779b97f4a7c15ULL);
    return train(std::move(model), tiles.tiles, cfg.finetune_epochs, cfg, rng, log);
}

namespace {

void check_level(const SaeModel& model, std::size_t level) {
    if (level < 1 || level > model.bottleneck_index())
        throw InvalidArgument("code level must be in 1.." + std::to_string(model.bottleneck_index()));
}

} // namespace

std::vector<double> encode(const SaeModel& model, std::span<const double> tile) {
    return encode(model, tile, model.bottleneck_index());
}

std::vector<double> encode(const SaeModel& model, std::span<const double> tile, std::size_t level) {
    check_level(model, level);
    check_length(tile.size(), model.input_dim(), "encode input");
    return run_layers(model, tile, 0, level);
}

std::vector<double> decode(const SaeModel& model, std::span<const double> code) {
    return decode(model, code, model.bottleneck_index());
}

std::vector<double> decode(const SaeModel& model, std::span<const double> code, std::size_t level) {
    check_level(model, level);
    check_length(code.size(), model.layer_dims[level], "decode input");
    const std::size_t depth = model.layers.size();
    return run_layers(model, code, depth - level, depth);
}

std::vector<std::uint8_t> serialize_model(const SaeModel& model) {
    model.validate();
    detail::ByteWriter w;
    w.bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>("SAEM"), 4));
    w.u8(kModelFormatVersion);
    w.u32(static_cast<std::uint32_t>(model.layers.size()));
    for (std::size_t d : model.layer_dims) w.u32(static_cast<std::uint32_t>(d));
    for (const auto& layer : model.layers) {
        for (double v : layer.weights.values) w.f64(v);
        for (double v : layer.biases) w.f64(v);
    }
    return w.take();
}

SaeModel deserialize_model(std::span<const std::uint8_t> bytes) {
    detail::ByteReader r(bytes, "model file");
    const auto magic = r.bytes(4);
    if (!std::equal(magic.begin(), magic.end(), "SAEM")) throw FormatError("model file: bad magic");
    const std::uint8_t version = r.u8();
    if (version != kModelFormatVersion)
        throw VersionError("model file: unsupported version " + std::to_string(version));
    const std::uint32_t layer_count = r.u32();
    if (layer_count < 2 || layer_count > 1024) throw FormatError("model file: bad layer count");

    std::vector<std::size_t> dims(layer_count + 1);
    for (auto& d : dims) {
        d = r.u32();
        if (d == 0 || d > (1u << 20)) throw FormatError("model file: bad layer width");
    }
    SaeModel m;
    try {
        m = SaeModel::zeros(dims);
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("model file: ") + e.what());
    }
    for (auto& layer : m.layers) {
        for (auto& v : layer.weights.values) v = r.f64();
        for (auto& v : layer.biases) v = r.f64();
    }
    if (r.remaining() != 0) throw FormatError("model file: trailing bytes");
    try {
        m.validate();
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("model file: ") + e.what());
    }
    return m;
}

void save_model(const SaeModel& model, const std::filesystem::path& path) {
    detail::write_file(path, serialize_model(model));
}

SaeModel load_model(const std::filesystem::path& path) {
    return deserialize_model(detail::read_file(path));
}

std::uint64_t model_id(const SaeModel& model) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint8_t b : serialize_model(model)) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace saecrypt
