#pragma once

#include "affectreg/corpus.hpp"
#include "affectreg/ffn.hpp"
#include "affectreg/svr.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace affectreg {

enum class Task { primary, adaptation };

enum class ProviderKind { hash, precomputed, remote };

struct DataConfig {
    std::optional<std::string> train;
    std::optional<std::string> dev;
    std::optional<std::string> test;
    bool train_has_gold = true;
    bool dev_has_gold = true;
    bool test_has_gold = false;
    EssayColumns essay_columns;
    TurnColumns turn_columns;
};

struct LexiconConfig {
    bool enabled = true;
    std::string nrc;
    std::string mpqa;
    std::string vad;
    std::string shifters;
};

struct EmbeddingConfig {
    ProviderKind provider = ProviderKind::hash;
    std::string model = "text-embedding-ada-002";
    std::size_t dimension = 1536;
    std::optional<std::size_t> max_tokens = 8191;
    std::optional<std::string> cache_path;
    std::optional<std::string> table_path; // precomputed provider
    std::size_t batch_size = 16;
    std::uint64_t hash_seed = 0;
    int max_attempts = 3;
    int backoff_initial_ms = 1000;
};

enum class ModelKind { ffn, ensemble };

struct SvrSettings {
    double C = 1.0;
    double epsilon = 0.1;
    std::optional<double> gamma; // default: scale heuristic
    double tolerance = 1e-3;
    std::size_t max_passes = 10'000'000;
};

struct ModelConfig {
    ModelKind kind = ModelKind::ffn;
    Activation activation = Activation::gelu;
    std::vector<std::size_t> hidden = {256, 128};
    DropoutSpec dropout;
    bool clip_predictions = false;
    SvrSettings svr;
};

// "target" stratifies on whichever target is being trained.
enum class StratifyChoice { target, empathy, distress, none };

struct SplitConfig {
    double validation_fraction = 0.2;
    StratifyChoice stratify = StratifyChoice::target;
    double bin_width = 1.0;
};

struct TrainSettings {
    double learning_rate = 1e-4;
    double min_lr = 1e-6;
    std::size_t epochs = 100;
    std::size_t batch_size = 64;
    double weight_decay = 0.01;
    double plateau_factor = 0.8;
    std::size_t plateau_patience = 3;
    SplitConfig split;
};

struct PredictionConfig {
    std::string primary_filename = "predictions_EMP.tsv";
    std::string adaptation_filename = "predictions_CONV.tsv";
    // Column order of the adaptation submission file.
    std::vector<std::string> adaptation_column_order = {"empathy", "emotion_polarity",
                                                        "emotion_intensity"};
};

struct RunConfig {
    Task task = Task::primary;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string output_dir;
    DataConfig data;
    LexiconConfig lexicons;
    EmbeddingConfig embedding;
    ModelConfig model;
    TrainSettings train;
    PredictionConfig predictions;
    bool per_speaker_context = false;

    // Checks invariants and referenced input paths; a mandatory seed and
    // output directory are enforced here.
    void validate() const;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config_json(const std::string& json_text, const std::string& origin);

// The resolved configuration as canonical JSON, written into every run
// directory as an audit trail.
std::string config_to_json(const RunConfig& config);

} // namespace affectreg
