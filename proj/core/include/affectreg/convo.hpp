#pragma once

#include "affectreg/corpus.hpp"
#include "affectreg/ffn.hpp"
#include "affectreg/matrix.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace affectreg {

// Componentwise mean of equal-length vectors; the zero vector for an empty
// list of known length.
std::vector<double> centroid(const std::vector<std::vector<double>>& blocks,
                             std::size_t block_length);

// Produces the per-text feature block (embedding, optionally with scaled
// lexicon features appended).
using BlockFeaturizer = std::function<std::vector<double>(const std::string& text)>;

struct TurnFeatureOptions {
    // When set, prior turns split into two centroids (same speaker / other
    // speaker) and the vector has four blocks instead of three.
    bool per_speaker_context = false;
};

// One feature vector per turn of a single conversation, turns ordered by
// turn_index: speaker-essay block, current-turn block, then the centroid of
// all prior turn blocks (both speakers). The first turn's context is zero.
std::vector<std::vector<double>> build_turn_features(std::span<const TurnSample> conversation,
                                                     const BlockFeaturizer& featurizer,
                                                     const TurnFeatureOptions& options = {});

// Groups parsed turns by conversation (input already sorted by parse_turns)
// and concatenates per-conversation features in input order.
std::vector<std::vector<double>> build_all_turn_features(std::span<const TurnSample> turns,
                                                         const BlockFeaturizer& featurizer,
                                                         const TurnFeatureOptions& options = {});

enum class TurnTarget { empathy, emotion_polarity, emotion_intensity };

std::vector<double> turn_gold(std::span<const TurnSample> turns, TurnTarget target);

// Per-target training config for one conversation target; empathy trains at
// 1e-5, polarity and intensity at 2e-5, all to 100 epochs with the 1e-6
// floor.
TrainConfig adaptation_config(TurnTarget target, std::uint64_t seed);

struct AdaptationConfigs {
    TrainConfig empathy;
    TrainConfig emotion_polarity;
    TrainConfig emotion_intensity;
};

AdaptationConfigs default_adaptation_configs(std::uint64_t seed);

struct AdaptationModels {
    TrainResult empathy;
    TrainResult emotion_polarity;
    TrainResult emotion_intensity;
};

// Trains the three turn-level models on the full training set, with the
// provided dev set used for validation checkpointing.
AdaptationModels train_adaptation(const Matrix& train_features,
                                  std::span<const TurnSample> train_turns,
                                  const Matrix& dev_features,
                                  std::span<const TurnSample> dev_turns,
                                  const FfnModel& template_model,
                                  const AdaptationConfigs& configs);

inline AdaptationModels train_adaptation(const Matrix& train_features,
                                         std::span<const TurnSample> train_turns,
                                         const Matrix& dev_features,
                                         std::span<const TurnSample> dev_turns,
                                         const FfnModel& template_model, std::uint64_t seed) {
    return train_adaptation(train_features, train_turns, dev_features, dev_turns, template_model,
                            default_adaptation_configs(seed));
}

} // namespace affectreg
