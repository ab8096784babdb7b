#include "affectreg/convo.hpp"

#include "affectreg/errors.hpp"

#include <algorithm>

namespace affectreg {

std::vector<double> centroid(const std::vector<std::vector<double>>& blocks,
                             std::size_t block_length) {
    std::vector<double> mean(block_length, 0.0);
    if (blocks.empty()) return mean;
    for (const auto& block : blocks) {
        if (block.size() != block_length) throw UsageError("centroid over ragged blocks");
        for (std::size_t i = 0; i < block_length; ++i) mean[i] += block[i];
    }
    const double n = static_cast<double>(blocks.size());
    for (double& v : mean) v /= n;
    return mean;
}

namespace {

void append(std::vector<double>& out, std::span<const double> block) {
    out.insert(out.end(), block.begin(), block.end());
}

} // namespace

std::vector<std::vector<double>> build_turn_features(std::span<const TurnSample> conversation,
                                                     const BlockFeaturizer& featurizer,
                                                     const TurnFeatureOptions& options) {
    std::vector<std::vector<double>> out;
    if (conversation.empty()) return out;
    out.reserve(conversation.size());

    std::vector<std::vector<double>> prior_blocks;
    std::size_t block_length = 0;

    for (std::size_t k = 0; k < conversation.size(); ++k) {
        const TurnSample& turn = conversation[k];
        if (turn.essay_text.empty()) {
            throw DataError("turn " + std::to_string(turn.turn_index) + " of conversation '" +
                            turn.conversation_id + "' has no speaker essay text");
        }
        std::vector<double> essay_block = featurizer(turn.essay_text);
        std::vector<double> current_block = featurizer(turn.text);
        if (block_length == 0) block_length = current_block.size();
        if (essay_block.size() != block_length || current_block.size() != block_length) {
            throw UsageError("featurizer produced blocks of differing lengths");
        }

        std::vector<double> features;
        features.reserve(block_length * (options.per_speaker_context ? 4 : 3));
        append(features, essay_block);
        append(features, current_block);
        if (!options.per_speaker_context) {
            append(features, centroid(prior_blocks, block_length));
        } else {
            std::vector<std::vector<double>> same, other;
            for (std::size_t j = 0; j < k; ++j) {
                (conversation[j].speaker_id == turn.speaker_id ? same : other)
                    .push_back(prior_blocks[j]);
            }
            append(features, centroid(same, block_length));
            append(features, centroid(other, block_length));
        }
        out.push_back(std::move(features));
        prior_blocks.push_back(std::move(current_block));
    }
    return out;
}

std::vector<std::vector<double>> build_all_turn_features(std::span<const TurnSample> turns,
                                                         const BlockFeaturizer& featurizer,
                                                         const TurnFeatureOptions& options) {
    std::vector<std::vector<double>> out;
    out.reserve(turns.size());
    std::size_t start = 0;
    while (start < turns.size()) {
        std::size_t end = start;
        while (end < turns.size() &&
               turns[end].conversation_id == turns[start].conversation_id) {
            ++end;
        }
        auto conversation = build_turn_features(turns.subspan(start, end - start), featurizer,
                                                options);
        for (auto& f : conversation) out.push_back(std::move(f));
        start = end;
    }
    return out;
}

std::vector<double> turn_gold(std::span<const TurnSample> turns, TurnTarget target) {
    std::vector<double> gold;
    gold.reserve(turns.size());
    for (const auto& turn : turns) {
        const std::optional<double>& value = target == TurnTarget::empathy ? turn.empathy
                                             : target == TurnTarget::emotion_polarity
                                                 ? turn.emotion_polarity
                                                 : turn.emotion_intensity;
        if (!value) {
            throw DataError("turn " + std::to_string(turn.turn_index) + " of conversation '" +
                            turn.conversation_id + "' lacks the requested gold value");
        }
        gold.push_back(*value);
    }
    return gold;
}

TrainConfig adaptation_config(TurnTarget target, std::uint64_t seed) {
    TrainConfig config;
    config.learning_rate = target == TurnTarget::empathy ? 1e-5 : 2e-5;
    config.min_lr = 1e-6;
    config.epochs = 100;
    config.seed = seed;
    return config;
}

AdaptationConfigs default_adaptation_configs(std::uint64_t seed) {
    return {adaptation_config(TurnTarget::empathy, seed),
            adaptation_config(TurnTarget::emotion_polarity, seed + 1),
            adaptation_config(TurnTarget::emotion_intensity, seed + 2)};
}

AdaptationModels train_adaptation(const Matrix& train_features,
                                  std::span<const TurnSample> train_turns,
                                  const Matrix& dev_features,
                                  std::span<const TurnSample> dev_turns,
                                  const FfnModel& template_model,
                                  const AdaptationConfigs& configs) {
    auto run = [&](TurnTarget target, const TrainConfig& config) {
        const auto train_y = turn_gold(train_turns, target);
        const auto dev_y = turn_gold(dev_turns, target);
        FfnModel model = make_ffn(template_model.input_dim(),
                                  {template_model.layer_sizes.begin() + 1,
                                   template_model.layer_sizes.end() - 1},
                                  template_model.activation, template_model.dropout, config.seed);
        model.lex_scaler = template_model.lex_scaler;
        return train(std::move(model), train_features, train_y, dev_features, dev_y, config);
    };
    AdaptationModels models{
        run(TurnTarget::empathy, configs.empathy),
        run(TurnTarget::emotion_polarity, configs.emotion_polarity),
        run(TurnTarget::emotion_intensity, configs.emotion_intensity),
    };
    return models;
}

} // namespace affectreg
