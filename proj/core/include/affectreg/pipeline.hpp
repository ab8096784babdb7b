#pragma once

#include "affectreg/config.hpp"
#include "affectreg/embedding.hpp"
#include "affectreg/eval.hpp"
#include "affectreg/matrix.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace affectreg {

// Command implementations behind the CLI. Each throws the error types in
// errors.hpp; the CLI maps those onto exit codes.

std::shared_ptr<EmbeddingProvider> make_provider(const EmbeddingConfig& config);
std::unique_ptr<Embedder> make_embedder(const EmbeddingConfig& config);

// Feature table read back from a featurize output file.
struct FeatureTable {
    std::vector<std::string> ids;
    std::vector<std::string> gold_names; // gold_<target> column order
    std::vector<std::vector<double>> gold;
    Matrix features;
};

// Writes per-split feature files (features_<split>.tsv), the fitted lexicon
// scaler (scaler.tsv, fitted on the train split only), and features.md into
// <output_dir>/features.
void run_featurize(const RunConfig& config);

FeatureTable load_feature_table(const std::string& path);

// Trains models from the feature files into <output_dir>/models: FFN per
// target (plus the two weighted SVRs and an equal-weight manifest in
// ensemble mode), training traces, and the resolved config audit copy.
void run_train(const RunConfig& config);

// Featurizes raw input with the persisted scaler and writes one prediction
// row per input row (two tab-separated reals for the primary task, three for
// the adaptation task, no header).
void run_predict(const RunConfig& config, const std::string& model_dir, const std::string& input,
                 const std::string& output);

// Scores a prediction file against a gold dataset. Writes report files under
// out_dir and returns the report (mean r is printed by the CLI).
EvalReport run_evaluate(const RunConfig& config, const std::string& predictions_path,
                        const std::string& gold_path, const std::string& out_dir);

// Error-analysis emission: deviation statistics, center/spread, centrality
// correlations, per-sample table, and gold/prediction distribution tables.
EvalReport run_analyze(const RunConfig& config, const std::string& predictions_path,
                       const std::string& gold_path, const std::string& out_dir);

// Reads a headerless prediction file with the expected column count.
std::vector<std::vector<double>> read_predictions(const std::string& path,
                                                  std::size_t expected_columns);

} // namespace affectreg
