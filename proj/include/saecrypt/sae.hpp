#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "saecrypt/image_io.hpp"

namespace saecrypt {

// Dense row-major matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

    Matrix transposed() const;

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

// One fully connected sigmoid layer: a_out = sigmoid(W a_in + b).
struct Layer {
    Matrix weights;               // out_dim x in_dim
    std::vector<double> biases;   // out_dim

    Layer() = default;
    Layer(std::size_t in_dim, std::size_t out_dim) : weights(out_dim, in_dim), biases(out_dim, 0.0) {}

    std::size_t in_dim() const { return weights.cols; }
    std::size_t out_dim() const { return weights.rows; }

    friend bool operator==(const Layer&, const Layer&) = default;
};

// Mirrored encoder/decoder stack, e.g. dims [64,16,4,16,64]. Level k holds the
// activations of width layer_dims[k]; layers[k] maps level k to level k+1.
struct SaeModel {
    std::vector<std::size_t> layer_dims;
    std::vector<Layer> layers;

    // All-zero weights and biases.
    static SaeModel zeros(std::vector<std::size_t> dims);
    // Glorot-uniform weights, zero biases.
    static SaeModel random(std::vector<std::size_t> dims, std::uint64_t seed);

    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t bottleneck_index() const { return layer_dims.size() / 2; }
    std::size_t code_dim() const { return layer_dims[bottleneck_index()]; }

    // Throws InvalidArgument on a non-palindromic layer list, shape mismatch or non-finite entry.
    void validate() const;

    friend bool operator==(const SaeModel&, const SaeModel&) = default;
};

// Checks that dims describe a mirrored stack with at least one hidden level.
void validate_layer_dims(std::span<const std::size_t> dims);

// Per-level values of one forward pass. activations[0] is the input;
// pre_activations[0] is left empty since the input has no z.
struct Activations {
    std::vector<std::vector<double>> pre_activations;
    std::vector<std::vector<double>> activations;

    const std::vector<double>& output() const { return activations.back(); }
};

struct TrainConfig {
    double learning_rate = 2.0;
    std::size_t pretrain_epochs = 200;
    std::size_t finetune_epochs = 500;
    std::size_t batch_size = 32;
    double weight_decay = 0.0;
    std::uint64_t rng_seed = 1;
    // the step is halved when an epoch's cost exceeds the previous one by more
    // than this relative amount
    double halving_tolerance = 0.01;

    void validate() const;
};

// Full-set cost after each epoch of one training run.
struct TrainLog {
    double initial_cost = 0.0;
    double final_cost = 0.0;
    double final_learning_rate = 0.0;
    std::vector<double> epoch_costs;
};

struct Gradients {
    Matrix weight_grad;
    std::vector<double> bias_grad;
};

struct Sample {
    std::span<const double> x;
    std::span<const double> y;
};

double sigmoid(double z);

Activations forward(const SaeModel& model, std::span<const double> x);

// delta = -(y - a) * a(1-a); z_out only fixes the expected length.
std::vector<double> output_delta(std::span<const double> a_out, std::span<const double> y,
                                 std::span<const double> z_out);

// delta_l = (W_l^T delta_{l+1}) * a_l(1-a_l)
std::vector<double> hidden_delta(const Layer& layer, std::span<const double> delta_next,
                                 std::span<const double> z, std::span<const double> a);

// dJ/dW = delta_{l+1} a_l^T, dJ/db = delta_{l+1}
Gradients gradients(std::span<const double> delta_next, std::span<const double> a);

// Adds the outer product into an existing accumulator of matching shape.
void accumulate_gradients(std::span<const double> delta_next, std::span<const double> a,
                          Gradients& acc);

// Per-sample gradients of 0.5*||a_out - y||^2 for every layer (no weight decay).
std::vector<Gradients> backpropagate(const SaeModel& model, const Sample& sample);

// Mean over samples of 0.5*||a_out - y||^2, plus (weight_decay/2)*sum(W^2) when
// weight_decay > 0.
double cost(const SaeModel& model, std::span<const Sample> samples, double weight_decay = 0.0);

// cost() with y = x for every row.
double reconstruction_cost(const SaeModel& model, const std::vector<std::vector<double>>& data,
                           double weight_decay = 0.0);

// Greedy level-by-level training. Each level k trains a dims[k]->dims[k+1]->dims[k]
// autoencoder on the codes of level k-1; its encoder fills layers[k] and the
// decoder slot layers[L-1-k] starts as the transposed encoder with zero biases.
// If logs is given it receives one TrainLog per level.
SaeModel pretrain(const TileSet& tiles, std::vector<std::size_t> layer_dims, const TrainConfig& cfg,
                  std::vector<TrainLog>* logs = nullptr);

// Whole-stack mini-batch gradient descent with y = x. The learning rate is
// halved after any epoch whose full-set cost went up; the lowest-cost
// parameters seen (including the starting point) are returned.
SaeModel fine_tune(SaeModel model, const TileSet& tiles, const TrainConfig& cfg,
                   TrainLog* log = nullptr);

// Activations at `level` (1..bottleneck_index); defaults to the bottleneck.
std::vector<double> encode(const SaeModel& model, std::span<const double> tile);
std::vector<double> encode(const SaeModel& model, std::span<const double> tile, std::size_t level);

// Runs the mirror half from `level` back to the output.
std::vector<double> decode(const SaeModel& model, std::span<const double> code);
std::vector<double> decode(const SaeModel& model, std::span<const double> code, std::size_t level);

std::vector<std::uint8_t> serialize_model(const SaeModel& model);
SaeModel deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const SaeModel& model, const std::filesystem::path& path);
SaeModel load_model(const std::filesystem::path& path);

// 64-bit FNV-1a of the serialized model.
std::uint64_t model_id(const SaeModel& model);

inline constexpr std::uint8_t kModelFormatVersion = 1;

} // namespace saecrypt
