#pragma once

#include "affectreg/lexicon.hpp"
#include "affectreg/matrix.hpp"
#include "affectreg/optim.hpp"
#include "affectreg/rng.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace affectreg {

enum class Activation : std::uint8_t { relu, gelu };

// Exact GELU, x * Phi(x) with the erf-based normal CDF.
double gelu(double x);
double gelu_derivative(double x);

struct DropoutSpec {
    enum class Mode : std::uint8_t { fixed, adaptive };
    Mode mode = Mode::fixed;
    double p = 0.5;        // fixed rate; also the adaptive starting rate
    double eta = 0.01;     // adaptive per-epoch step
    double min_rate = 0.0;
    double max_rate = 0.9;
};

struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weights; // out x in, row-major
    std::vector<double> bias;    // out
};

// Single-output regression network: input -> hidden layers -> 1, with a
// dropout site before every linear layer (inverted scaling, inert at
// inference). Hidden sizes default to 256/128 but stay configurable so small
// nets can be gradient-checked.
struct FfnModel {
    std::vector<std::size_t> layer_sizes; // {input, hidden..., 1}
    std::vector<DenseLayer> layers;
    Activation activation = Activation::gelu;
    DropoutSpec dropout;
    std::vector<double> dropout_rates;        // one per dropout site (= layer count)
    std::optional<FeatureScaler> lex_scaler;  // carried so prediction can re-featurize
    std::uint64_t seed = 0;

    std::size_t input_dim() const { return layer_sizes.front(); }
};

// Fan-in scaled uniform init, deterministic for a given seed.
FfnModel make_ffn(std::size_t input_dim, std::vector<std::size_t> hidden_sizes,
                  Activation activation, DropoutSpec dropout, std::uint64_t seed);

// Activations and dropout masks saved by a training-mode forward pass, as
// consumed by backward().
struct ForwardCache {
    std::vector<Matrix> inputs;  // post-dropout input of each linear layer
    std::vector<Matrix> pre;     // pre-activation of each linear layer
    std::vector<Matrix> masks;   // inverted-dropout mask (0 or 1/keep) per site
    std::vector<double> predictions;
    std::size_t batch_rows = 0;
    bool training = false;
};

// Rows of `batch` are samples. In training mode dropout masks are drawn from
// `rng` and cached; in inference mode `rng` may be null and dropout is inert.
std::vector<double> forward(const FfnModel& model, const Matrix& batch, bool training, Rng* rng,
                            ForwardCache* cache);

double mse_loss(std::span<const double> predictions, std::span<const double> gold);

struct Gradients {
    std::vector<DenseLayer> layers; // same shapes as the model, gradient values
};

// Backpropagation through the cache of a training-mode forward on the same
// batch; gradients of dropped units flow through the saved masks.
Gradients backward(const FfnModel& model, const ForwardCache& cache, std::span<const double> gold);

// Nudges every dropout rate by eta * sign(validation_loss - train_loss),
// clamped to [min_rate, max_rate]. No-op in fixed mode.
void adaptive_dropout_step(const DropoutSpec& spec, double train_loss, double validation_loss,
                           std::vector<double>& rates);

struct TrainConfig {
    double learning_rate = 1e-4;
    double min_lr = 1e-6;
    std::size_t epochs = 100;
    std::size_t batch_size = 64;
    AdamWConfig optimizer;
    double plateau_factor = 0.8;
    std::size_t plateau_patience = 3;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainTrace {
    std::vector<double> train_loss;
    std::vector<double> validation_loss;
    std::vector<double> learning_rate;
    std::vector<std::vector<double>> dropout_rates;
    std::size_t best_epoch = 0;
};

struct TrainResult {
    FfnModel model; // parameter snapshot from the best-validation epoch
    TrainTrace trace;
};

// Deterministic training loop: seeded shuffling and dropout, AdamW updates,
// plateau scheduling on the validation loss, adaptive dropout when enabled,
// and best-validation checkpointing.
TrainResult train(FfnModel model, const Matrix& train_features, std::span<const double> train_gold,
                  const Matrix& validation_features, std::span<const double> validation_gold,
                  const TrainConfig& config);

// epoch, train_loss, val_loss, lr columns.
void write_trace_tsv(const std::string& path, const TrainTrace& trace);

void save_ffn(const FfnModel& model, const std::string& path);
FfnModel load_ffn(const std::string& path);

} // namespace affectreg
