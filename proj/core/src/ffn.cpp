#include "affectreg/ffn.hpp"

#include "affectreg/errors.hpp"
#include "affectreg/serialize.hpp"
#include "affectreg/tsv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace affectreg {

double gelu(double x) {
    return x * 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
}

double gelu_derivative(double x) {
    const double phi = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    return phi + x * pdf;
}

namespace {

double activate(Activation a, double x) {
    return a == Activation::gelu ? gelu(x) : std::max(x, 0.0);
}

double activate_derivative(Activation a, double x) {
    return a == Activation::gelu ? gelu_derivative(x) : (x > 0.0 ? 1.0 : 0.0);
}

} // namespace

FfnModel make_ffn(std::size_t input_dim, std::vector<std::size_t> hidden_sizes,
                  Activation activation, DropoutSpec dropout, std::uint64_t seed) {
    if (input_dim == 0) throw UsageError("network input dimension must be positive");
    if (dropout.p < 0.0 || dropout.p >= 1.0) throw UsageError("dropout rate must lie in [0, 1)");
    FfnModel model;
    model.layer_sizes.push_back(input_dim);
    for (std::size_t h : hidden_sizes) model.layer_sizes.push_back(h);
    model.layer_sizes.push_back(1);
    model.activation = activation;
    model.dropout = dropout;
    model.seed = seed;

    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < model.layer_sizes.size(); ++l) {
        DenseLayer layer;
        layer.in = model.layer_sizes[l];
        layer.out = model.layer_sizes[l + 1];
        layer.weights.resize(layer.in * layer.out);
        layer.bias.assign(layer.out, 0.0);
        const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
        for (double& w : layer.weights) w = rng.uniform(-bound, bound);
        model.layers.push_back(std::move(layer));
        model.dropout_rates.push_back(dropout.p);
    }
    return model;
}

std::vector<double> forward(const FfnModel& model, const Matrix& batch, bool training, Rng* rng,
                            ForwardCache* cache) {
    if (batch.cols != model.input_dim()) {
        throw UsageError("input width " + std::to_string(batch.cols) +
                         " does not match network input dimension " +
                         std::to_string(model.input_dim()));
    }
    if (training && !rng) throw UsageError("training-mode forward requires an rng");

    if (cache) {
        cache->inputs.clear();
        cache->pre.clear();
        cache->masks.clear();
        cache->batch_rows = batch.rows;
        cache->training = training;
    }

    Matrix current = batch;
    const std::size_t n_layers = model.layers.size();
    for (std::size_t l = 0; l < n_layers; ++l) {
        const DenseLayer& layer = model.layers[l];

        // Dropout site before this linear layer; inverted scaling so
        // inference runs the plain affine map.
        Matrix mask;
        if (training) {
            const double rate = model.dropout_rates[l];
            const double keep = 1.0 - rate;
            mask = Matrix(current.rows, current.cols);
            for (std::size_t i = 0; i < mask.data.size(); ++i) {
                const double scale = (rng->uniform() < rate) ? 0.0 : 1.0 / keep;
                mask.data[i] = scale;
                current.data[i] *= scale;
            }
        }
        if (cache) {
            cache->masks.push_back(std::move(mask));
            cache->inputs.push_back(current);
        }

        Matrix next(current.rows, layer.out);
        for (std::size_t r = 0; r < current.rows; ++r) {
            const double* x = current.data.data() + r * current.cols;
            for (std::size_t o = 0; o < layer.out; ++o) {
                const double* w = layer.weights.data() + o * layer.in;
                double acc = layer.bias[o];
                for (std::size_t i = 0; i < layer.in; ++i) acc += w[i] * x[i];
                next.at(r, o) = acc;
            }
        }
        if (cache) cache->pre.push_back(next);

        if (l + 1 < n_layers) {
            for (double& v : next.data) v = activate(model.activation, v);
        }
        current = std::move(next);
    }

    std::vector<double> predictions(current.rows);
    for (std::size_t r = 0; r < current.rows; ++r) predictions[r] = current.at(r, 0);
    if (cache) cache->predictions = predictions;
    return predictions;
}

double mse_loss(std::span<const double> predictions, std::span<const double> gold) {
    if (predictions.empty() || predictions.size() != gold.size()) {
        throw UsageError("mse_loss requires equal non-empty inputs");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - gold[i];
        sum += d * d;
    }
    return sum / static_cast<double>(predictions.size());
}

Gradients backward(const FfnModel& model, const ForwardCache& cache, std::span<const double> gold) {
    const std::size_t n_layers = model.layers.size();
    if (!cache.training || cache.inputs.size() != n_layers || cache.pre.size() != n_layers) {
        throw UsageError("backward requires the cache of a training-mode forward");
    }
    if (gold.size() != cache.batch_rows) {
        throw UsageError("backward: gold size does not match cached batch");
    }

    Gradients grads;
    grads.layers.resize(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) {
        grads.layers[l].in = model.layers[l].in;
        grads.layers[l].out = model.layers[l].out;
        grads.layers[l].weights.assign(model.layers[l].weights.size(), 0.0);
        grads.layers[l].bias.assign(model.layers[l].bias.size(), 0.0);
    }

    const double n = static_cast<double>(cache.batch_rows);
    // d(mse)/d(prediction)
    Matrix delta(cache.batch_rows, 1);
    for (std::size_t r = 0; r < cache.batch_rows; ++r) {
        delta.at(r, 0) = 2.0 * (cache.predictions[r] - gold[r]) / n;
    }

    for (std::size_t l = n_layers; l-- > 0;) {
        const DenseLayer& layer = model.layers[l];
        const Matrix& input = cache.inputs[l];
        DenseLayer& g = grads.layers[l];

        for (std::size_t r = 0; r < delta.rows; ++r) {
            const double* x = input.data.data() + r * input.cols;
            for (std::size_t o = 0; o < layer.out; ++o) {
                const double d = delta.at(r, o);
                g.bias[o] += d;
                double* gw = g.weights.data() + o * layer.in;
                for (std::size_t i = 0; i < layer.in; ++i) gw[i] += d * x[i];
            }
        }

        if (l == 0) break;

        // Propagate to the previous layer's activation: through the weights,
        // this site's dropout mask, then the activation derivative.
        Matrix prev(delta.rows, layer.in);
        for (std::size_t r = 0; r < delta.rows; ++r) {
            for (std::size_t i = 0; i < layer.in; ++i) {
                double acc = 0.0;
                for (std::size_t o = 0; o < layer.out; ++o) {
                    acc += delta.at(r, o) * layer.weights[o * layer.in + i];
                }
                prev.at(r, i) = acc;
            }
        }
        const Matrix& mask = cache.masks[l];
        const Matrix& pre_prev = cache.pre[l - 1];
        for (std::size_t i = 0; i < prev.data.size(); ++i) {
            prev.data[i] *= mask.data[i] * activate_derivative(model.activation, pre_prev.data[i]);
        }
        delta = std::move(prev);
    }
    return grads;
}

void adaptive_dropout_step(const DropoutSpec& spec, double train_loss, double validation_loss,
                           std::vector<double>& rates) {
    if (spec.mode != DropoutSpec::Mode::adaptive) return;
    const double gap = validation_loss - train_loss;
    const double direction = gap > 0.0 ? 1.0 : (gap < 0.0 ? -1.0 : 0.0);
    for (double& rate : rates) {
        rate = std::clamp(rate + spec.eta * direction, spec.min_rate, spec.max_rate);
    }
}

void TrainConfig::validate() const {
    if (learning_rate <= 0.0 || min_lr <= 0.0 || min_lr > learning_rate) {
        throw UsageError("training requires 0 < min_lr <= learning_rate");
    }
    if (plateau_factor <= 0.0 || plateau_factor >= 1.0) {
        throw UsageError("plateau factor must lie in (0, 1)");
    }
    if (epochs == 0 || batch_size == 0) {
        throw UsageError("epochs and batch size must be positive");
    }
}

namespace {

Matrix gather_rows(const Matrix& source, std::span<const std::size_t> rows) {
    Matrix out(rows.size(), source.cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto src = source.row(rows[r]);
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

void check_finite(const FfnModel& model) {
    for (const auto& layer : model.layers) {
        for (double w : layer.weights) {
            if (!std::isfinite(w)) throw SolverError("non-finite weight after training step");
        }
        for (double b : layer.bias) {
            if (!std::isfinite(b)) throw SolverError("non-finite bias after training step");
        }
    }
}

} // namespace

TrainResult train(FfnModel model, const Matrix& train_features, std::span<const double> train_gold,
                  const Matrix& validation_features, std::span<const double> validation_gold,
                  const TrainConfig& config) {
    config.validate();
    if (train_features.rows != train_gold.size() ||
        validation_features.rows != validation_gold.size()) {
        throw UsageError("feature/gold row mismatch");
    }
    if (train_features.rows == 0 || validation_features.rows == 0) {
        throw UsageError("training requires non-empty train and validation sets");
    }

    std::vector<std::size_t> tensor_sizes;
    for (const auto& layer : model.layers) {
        tensor_sizes.push_back(layer.weights.size());
        tensor_sizes.push_back(layer.bias.size());
    }
    AdamW optimizer(config.optimizer, tensor_sizes);
    PlateauScheduler scheduler(config.learning_rate, config.plateau_factor,
                               config.plateau_patience, config.min_lr);
    Rng rng(config.seed);

    TrainResult result;
    result.trace.best_epoch = 0;
    double best_validation = std::numeric_limits<double>::infinity();
    FfnModel best_model = model;

    std::vector<std::size_t> order(train_features.rows);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    double lr = config.learning_rate;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double squared_error_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(start + config.batch_size, order.size());
            std::span<const std::size_t> rows(order.data() + start, end - start);
            Matrix batch = gather_rows(train_features, rows);
            std::vector<double> gold(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) gold[i] = train_gold[rows[i]];

            ForwardCache cache;
            auto predictions = forward(model, batch, true, &rng, &cache);
            const double loss = mse_loss(predictions, gold);
            if (!std::isfinite(loss)) {
                throw SolverError("non-finite training loss at epoch " + std::to_string(epoch));
            }
            squared_error_sum += loss * static_cast<double>(rows.size());

            Gradients grads = backward(model, cache, gold);
            optimizer.begin_step();
            for (std::size_t l = 0; l < model.layers.size(); ++l) {
                optimizer.step(2 * l, model.layers[l].weights, grads.layers[l].weights, lr);
                optimizer.step(2 * l + 1, model.layers[l].bias, grads.layers[l].bias, lr);
            }
            check_finite(model);
        }
        const double train_loss = squared_error_sum / static_cast<double>(order.size());

        auto val_predictions = forward(model, validation_features, false, nullptr, nullptr);
        const double validation_loss = mse_loss(val_predictions, validation_gold);
        if (!std::isfinite(validation_loss)) {
            throw SolverError("non-finite validation loss at epoch " + std::to_string(epoch));
        }

        result.trace.train_loss.push_back(train_loss);
        result.trace.validation_loss.push_back(validation_loss);
        result.trace.learning_rate.push_back(lr);
        result.trace.dropout_rates.push_back(model.dropout_rates);

        if (validation_loss < best_validation) {
            best_validation = validation_loss;
            best_model = model;
            result.trace.best_epoch = epoch;
        }

        lr = scheduler.observe(validation_loss);
        adaptive_dropout_step(model.dropout, train_loss, validation_loss, model.dropout_rates);
    }

    result.model = std::move(best_model);
    return result;
}

void write_trace_tsv(const std::string& path, const TrainTrace& trace) {
    TsvWriter writer(path);
    writer.write_row({"epoch", "train_loss", "val_loss", "lr"});
    for (std::size_t e = 0; e < trace.train_loss.size(); ++e) {
        writer.write_row({std::to_string(e), format_double(trace.train_loss[e]),
                          format_double(trace.validation_loss[e]),
                          format_double(trace.learning_rate[e])});
    }
}

void save_ffn(const FfnModel& model, const std::string& path) {
    ByteWriter w;
    w.u64(model.seed);
    w.u8(static_cast<std::uint8_t>(model.activation));
    w.u8(static_cast<std::uint8_t>(model.dropout.mode));
    w.f64(model.dropout.p);
    w.f64(model.dropout.eta);
    w.f64(model.dropout.min_rate);
    w.f64(model.dropout.max_rate);
    w.f64_array(model.dropout_rates);
    w.u32(static_cast<std::uint32_t>(model.layer_sizes.size()));
    for (std::size_t s : model.layer_sizes) w.u64(s);
    for (const auto& layer : model.layers) {
        w.f64_array(layer.weights);
        w.f64_array(layer.bias);
    }
    w.u8(model.lex_scaler ? 1 : 0);
    if (model.lex_scaler) {
        w.f64_array(model.lex_scaler->mean());
        w.f64_array(model.lex_scaler->stddev());
    }
    write_container(path, kFfnModelTag, w.bytes());
}

FfnModel load_ffn(const std::string& path) {
    const std::string payload = read_container(path, kFfnModelTag);
    ByteReader r(payload);
    FfnModel model;
    model.seed = r.u64();
    model.activation = static_cast<Activation>(r.u8());
    model.dropout.mode = static_cast<DropoutSpec::Mode>(r.u8());
    model.dropout.p = r.f64();
    model.dropout.eta = r.f64();
    model.dropout.min_rate = r.f64();
    model.dropout.max_rate = r.f64();
    model.dropout_rates = r.f64_array();
    const std::uint32_t n_sizes = r.u32();
    model.layer_sizes.resize(n_sizes);
    for (auto& s : model.layer_sizes) s = r.u64();
    if (n_sizes < 2) throw ModelIoError("model has no layers: " + path);
    for (std::size_t l = 0; l + 1 < n_sizes; ++l) {
        DenseLayer layer;
        layer.in = model.layer_sizes[l];
        layer.out = model.layer_sizes[l + 1];
        layer.weights = r.f64_array();
        layer.bias = r.f64_array();
        if (layer.weights.size() != layer.in * layer.out || layer.bias.size() != layer.out) {
            throw ModelIoError("layer shape mismatch in " + path);
        }
        model.layers.push_back(std::move(layer));
    }
    if (r.u8()) {
        auto mean = r.f64_array();
        auto stddev = r.f64_array();
        model.lex_scaler = FeatureScaler(std::move(mean), std::move(stddev));
    }
    if (!r.exhausted()) throw ModelIoError("trailing bytes in " + path);
    return model;
}

} // namespace affectreg
