#include "affectreg/pipeline.hpp"

#include "affectreg/convo.hpp"
#include "affectreg/ensemble.hpp"
#include "affectreg/errors.hpp"
#include "affectreg/lexicon.hpp"
#include "affectreg/svr.hpp"
#include "affectreg/tsv.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

namespace affectreg {

namespace fs = std::filesystem;
using nlohmann::json;

std::shared_ptr<EmbeddingProvider> make_provider(const EmbeddingConfig& config) {
    switch (config.provider) {
    case ProviderKind::hash:
        return std::make_shared<HashEmbeddingProvider>(config.dimension, config.hash_seed);
    case ProviderKind::precomputed:
        return std::make_shared<PrecomputedEmbeddingProvider>(*config.table_path);
    case ProviderKind::remote: {
        RemoteProviderConfig remote;
        const char* url = std::getenv("EMBED_API_URL");
        const char* key = std::getenv("EMBED_API_KEY");
        remote.base_url = url ? url : "";
        remote.api_key = key ? key : "";
        remote.model = config.model;
        remote.dimension = config.dimension;
        remote.max_tokens = config.max_tokens;
        remote.max_attempts = config.max_attempts;
        remote.backoff_initial_ms = config.backoff_initial_ms;
        return std::make_shared<RemoteEmbeddingProvider>(std::move(remote));
    }
    }
    throw UsageError("unknown embedding provider");
}

std::unique_ptr<Embedder> make_embedder(const EmbeddingConfig& config) {
    std::shared_ptr<EmbeddingCache> cache;
    if (config.cache_path) {
        fs::create_directories(fs::path(*config.cache_path).parent_path());
        cache = std::make_shared<EmbeddingCache>(*config.cache_path);
    }
    return std::make_unique<Embedder>(make_provider(config), cache, config.batch_size);
}

namespace {

struct Split {
    std::string name;
    std::string path;
    bool has_gold;
};

std::vector<Split> configured_splits(const DataConfig& data) {
    std::vector<Split> splits;
    if (data.train) splits.push_back({"train", *data.train, data.train_has_gold});
    if (data.dev) splits.push_back({"dev", *data.dev, data.dev_has_gold});
    if (data.test) splits.push_back({"test", *data.test, data.test_has_gold});
    if (splits.empty()) throw UsageError("no datasets configured");
    return splits;
}

fs::path features_dir(const RunConfig& config) { return fs::path(config.output_dir) / "features"; }
fs::path models_dir(const RunConfig& config) { return fs::path(config.output_dir) / "models"; }

std::optional<LexiconSet> load_lexicons(const RunConfig& config) {
    if (!config.lexicons.enabled) return std::nullopt;
    return LexiconSet::load(config.lexicons.nrc, config.lexicons.mpqa, config.lexicons.vad,
                            config.lexicons.shifters);
}

std::vector<std::string> block_column_names(const std::string& prefix, std::size_t embed_dim,
                                            bool lexicons) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < embed_dim; ++i) {
        names.push_back(prefix + "emb_" + std::to_string(i));
    }
    if (lexicons) {
        for (const auto& name : lexicon_feature_names()) names.push_back(prefix + name);
    }
    return names;
}

void write_feature_file(const std::string& path, const std::vector<std::string>& ids,
                        const std::vector<std::string>& gold_names,
                        const std::vector<std::vector<double>>& gold,
                        const std::vector<std::vector<double>>& rows,
                        const std::vector<std::string>& feature_names) {
    TsvWriter writer(path);
    std::vector<std::string> header{"id"};
    for (const auto& g : gold_names) header.push_back("gold_" + g);
    header.insert(header.end(), feature_names.begin(), feature_names.end());
    writer.write_row(header);
    for (std::size_t r = 0; r < ids.size(); ++r) {
        std::vector<std::string> row{ids[r]};
        for (const auto& series : gold) row.push_back(format_double(series[r]));
        if (!rows[r].empty() && rows[r].size() != feature_names.size()) {
            throw UsageError("feature row width mismatch");
        }
        for (double v : rows[r]) row.push_back(format_double(v));
        writer.write_row(row);
    }
}

// Embeds every distinct normalized text once, then serves block vectors
// (embedding plus scaled lexicon features) by lookup.
class BlockFeatureBuilder {
public:
    BlockFeatureBuilder(Embedder& embedder, const std::optional<LexiconSet>& lexicons,
                        const std::optional<FeatureScaler>& scaler)
        : embedder_(embedder), lexicons_(lexicons), scaler_(scaler) {}

    void prepare(const std::vector<std::string>& texts) {
        std::vector<std::string> fresh;
        for (const auto& text : texts) {
            const std::string key = normalize_text(text);
            if (!key.empty() && !embeddings_.count(key)) {
                embeddings_.emplace(key, std::vector<double>{});
                fresh.push_back(text);
            }
        }
        auto vectors = embedder_.embed_all(fresh);
        for (std::size_t i = 0; i < fresh.size(); ++i) {
            embeddings_[normalize_text(fresh[i])] = std::move(vectors[i]);
        }
    }

    std::vector<double> block(const std::string& text) const {
        auto it = embeddings_.find(normalize_text(text));
        if (it == embeddings_.end() || it->second.empty()) {
            throw DataError("text was not prepared for featurization");
        }
        if (!lexicons_) return it->second;
        if (!scaler_) throw UsageError("lexicon features enabled but scaler is not fitted");
        const auto raw = extract_all(text, *lexicons_);
        const auto scaled = scaler_->apply(raw.values);
        return assemble_features(it->second, &scaled);
    }

    std::size_t block_length() const {
        return embedder_.provider().dimension() + (lexicons_ ? kLexiconFeatureCount : 0);
    }

private:
    Embedder& embedder_;
    const std::optional<LexiconSet>& lexicons_;
    const std::optional<FeatureScaler>& scaler_;
    std::map<std::string, std::vector<double>> embeddings_;
};

FeatureScaler fit_scaler_on(const std::vector<std::string>& train_texts,
                            const LexiconSet& lexicons) {
    std::vector<std::vector<double>> raw;
    raw.reserve(train_texts.size());
    for (const auto& text : train_texts) {
        const auto v = extract_all(text, lexicons);
        raw.emplace_back(v.values.begin(), v.values.end());
    }
    return FeatureScaler::fit(raw);
}

void featurize_primary(const RunConfig& config) {
    const auto splits = configured_splits(config.data);
    const auto lexicons = load_lexicons(config);
    auto embedder = make_embedder(config.embedding);
    const fs::path out = features_dir(config);
    fs::create_directories(out);

    std::optional<FeatureScaler> scaler;
    std::map<std::string, std::vector<EssaySample>> parsed;
    for (const auto& split : splits) {
        parsed[split.name] = parse_essays(split.path, split.has_gold, config.data.essay_columns);
    }
    if (lexicons) {
        if (!parsed.count("train")) {
            throw UsageError("lexicon scaling requires a train split to fit on");
        }
        std::vector<std::string> texts;
        for (const auto& s : parsed.at("train")) texts.push_back(s.essay);
        scaler = fit_scaler_on(texts, *lexicons);
        scaler->save_tsv((out / "scaler.tsv").string());
    }

    BlockFeatureBuilder builder(*embedder, lexicons, scaler);
    const auto names = block_column_names("", config.embedding.dimension, lexicons.has_value());
    for (const auto& split : splits) {
        const auto& samples = parsed.at(split.name);
        std::vector<std::string> texts;
        texts.reserve(samples.size());
        for (const auto& s : samples) texts.push_back(s.essay);
        builder.prepare(texts);

        std::vector<std::string> ids;
        std::vector<std::vector<double>> rows;
        std::vector<std::vector<double>> gold;
        std::vector<std::string> gold_names;
        if (split.has_gold) {
            gold_names = {"empathy", "distress"};
            gold.resize(2);
        }
        for (const auto& s : samples) {
            ids.push_back(s.id);
            rows.push_back(builder.block(s.essay));
            if (split.has_gold) {
                gold[0].push_back(*s.empathy);
                gold[1].push_back(*s.distress);
            }
        }
        write_feature_file((out / ("features_" + split.name + ".tsv")).string(), ids, gold_names,
                           gold, rows, names);
    }

    std::ofstream md(out / "features.md");
    md << lexicon_schema_markdown();
}

void featurize_adaptation(const RunConfig& config) {
    const auto splits = configured_splits(config.data);
    const auto lexicons = load_lexicons(config);
    auto embedder = make_embedder(config.embedding);
    const fs::path out = features_dir(config);
    fs::create_directories(out);

    std::map<std::string, std::vector<TurnSample>> parsed;
    for (const auto& split : splits) {
        parsed[split.name] = parse_turns(split.path, split.has_gold, config.data.turn_columns);
    }

    std::optional<FeatureScaler> scaler;
    if (lexicons) {
        if (!parsed.count("train")) {
            throw UsageError("lexicon scaling requires a train split to fit on");
        }
        // Fit on every block text the training split produces: essays and
        // turn texts alike feed the same scaler.
        std::vector<std::string> texts;
        for (const auto& t : parsed.at("train")) {
            texts.push_back(t.essay_text);
            texts.push_back(t.text);
        }
        scaler = fit_scaler_on(texts, *lexicons);
        scaler->save_tsv((out / "scaler.tsv").string());
    }

    BlockFeatureBuilder builder(*embedder, lexicons, scaler);
    TurnFeatureOptions options;
    options.per_speaker_context = config.per_speaker_context;

    std::vector<std::string> names;
    const std::vector<std::string> prefixes =
        options.per_speaker_context
            ? std::vector<std::string>{"essay_", "turn_", "ctx_same_", "ctx_other_"}
            : std::vector<std::string>{"essay_", "turn_", "ctx_"};
    for (const auto& prefix : prefixes) {
        auto block = block_column_names(prefix, config.embedding.dimension, lexicons.has_value());
        names.insert(names.end(), block.begin(), block.end());
    }

    for (const auto& split : splits) {
        const auto& turns = parsed.at(split.name);
        std::vector<std::string> texts;
        for (const auto& t : turns) {
            texts.push_back(t.essay_text);
            texts.push_back(t.text);
        }
        builder.prepare(texts);

        auto rows = build_all_turn_features(turns, [&](const std::string& text) {
            return builder.block(text);
        }, options);

        std::vector<std::string> ids;
        std::vector<std::vector<double>> gold;
        std::vector<std::string> gold_names;
        if (split.has_gold) {
            gold_names = {"empathy", "emotion_polarity", "emotion_intensity"};
            gold.resize(3);
        }
        for (const auto& t : turns) {
            ids.push_back(t.conversation_id + ":" + std::to_string(t.turn_index));
            if (split.has_gold) {
                gold[0].push_back(*t.empathy);
                gold[1].push_back(*t.emotion_polarity);
                gold[2].push_back(*t.emotion_intensity);
            }
        }
        write_feature_file((out / ("features_" + split.name + ".tsv")).string(), ids, gold_names,
                           gold, rows, names);
    }

    std::ofstream md(out / "features.md");
    md << lexicon_schema_markdown();
}

} // namespace

void run_featurize(const RunConfig& config) {
    config.validate();
    if (config.task == Task::primary) {
        featurize_primary(config);
    } else {
        featurize_adaptation(config);
    }
}

FeatureTable load_feature_table(const std::string& path) {
    TsvReader reader(path);
    FeatureTable table;
    std::vector<std::size_t> gold_columns;
    std::vector<std::size_t> feature_columns;
    const auto& header = reader.header();
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "id") continue;
        if (header[i].rfind("gold_", 0) == 0) {
            table.gold_names.push_back(header[i].substr(5));
            gold_columns.push_back(i);
        } else {
            feature_columns.push_back(i);
        }
    }
    auto id_column = reader.column("id");
    if (!id_column) throw DataError(path + ": not a feature file (no id column)");
    table.gold.resize(gold_columns.size());

    std::vector<std::vector<double>> rows;
    std::vector<std::string> row;
    while (reader.next(row)) {
        table.ids.push_back(row.at(*id_column));
        for (std::size_t g = 0; g < gold_columns.size(); ++g) {
            char* end = nullptr;
            const std::string& field = row.at(gold_columns[g]);
            double v = std::strtod(field.c_str(), &end);
            if (field.empty() || end != field.c_str() + field.size()) {
                throw DataError(path + ": row " + std::to_string(reader.line_number()) +
                                ": bad gold value '" + field + "'");
            }
            table.gold[g].push_back(v);
        }
        std::vector<double> values;
        values.reserve(feature_columns.size());
        for (std::size_t c : feature_columns) {
            char* end = nullptr;
            const std::string& field = row.at(c);
            double v = std::strtod(field.c_str(), &end);
            if (field.empty() || end != field.c_str() + field.size()) {
                throw DataError(path + ": row " + std::to_string(reader.line_number()) +
                                ": bad feature value '" + field + "'");
            }
            values.push_back(v);
        }
        rows.push_back(std::move(values));
    }

    table.features = Matrix(rows.size(), feature_columns.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::copy(rows[r].begin(), rows[r].end(), table.features.row(r).begin());
    }
    return table;
}

namespace {

std::size_t gold_index(const FeatureTable& table, const std::string& target) {
    for (std::size_t i = 0; i < table.gold_names.size(); ++i) {
        if (table.gold_names[i] == target) return i;
    }
    throw DataError("feature file lacks gold series for target '" + target + "'");
}

StratifyTarget resolve_stratify(StratifyChoice choice, const std::string& target) {
    switch (choice) {
    case StratifyChoice::none:
        return StratifyTarget::none;
    case StratifyChoice::empathy:
        return StratifyTarget::empathy;
    case StratifyChoice::distress:
        return StratifyTarget::distress;
    case StratifyChoice::target:
        return target == "distress" ? StratifyTarget::distress : StratifyTarget::empathy;
    }
    return StratifyTarget::none;
}

Matrix gather(const Matrix& m, const std::vector<std::size_t>& rows) {
    Matrix out(rows.size(), m.cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto src = m.row(rows[r]);
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

std::optional<FeatureScaler> load_run_scaler(const RunConfig& config) {
    const fs::path path = features_dir(config) / "scaler.tsv";
    if (!fs::exists(path)) return std::nullopt;
    return FeatureScaler::load_tsv(path.string());
}

TrainConfig train_config_for(const RunConfig& config, std::uint64_t seed) {
    TrainConfig tc;
    tc.learning_rate = config.train.learning_rate;
    tc.min_lr = config.train.min_lr;
    tc.epochs = config.train.epochs;
    tc.batch_size = config.train.batch_size;
    tc.optimizer.weight_decay = config.train.weight_decay;
    tc.plateau_factor = config.train.plateau_factor;
    tc.plateau_patience = config.train.plateau_patience;
    tc.seed = seed;
    return tc;
}

void train_primary(const RunConfig& config) {
    const fs::path fdir = features_dir(config);
    const fs::path mdir = models_dir(config);
    fs::create_directories(mdir);
    const auto table = load_feature_table((fdir / "features_train.tsv").string());
    const auto scaler = load_run_scaler(config);

    const std::vector<std::string> targets = {"empathy", "distress"};
    for (std::size_t t = 0; t < targets.size(); ++t) {
        const std::string& target = targets[t];
        const auto& gold = table.gold[gold_index(table, target)];

        SplitSpec split;
        split.validation_fraction = config.train.split.validation_fraction;
        split.bin_width = config.train.split.bin_width;
        split.seed = config.seed + t;
        const auto stratify = resolve_stratify(config.train.split.stratify, target);
        std::vector<double> stratify_gold;
        if (stratify != StratifyTarget::none) {
            const auto& key = stratify == StratifyTarget::empathy ? "empathy" : "distress";
            stratify_gold = table.gold[gold_index(table, key)];
        }
        const auto idx = stratified_split_indices(table.ids.size(), stratify_gold, kEssayScale,
                                                  split);

        Matrix train_x = gather(table.features, idx.train);
        Matrix val_x = gather(table.features, idx.validation);
        std::vector<double> train_y, val_y;
        for (auto i : idx.train) train_y.push_back(gold[i]);
        for (auto i : idx.validation) val_y.push_back(gold[i]);

        FfnModel model = make_ffn(table.features.cols, config.model.hidden,
                                  config.model.activation, config.model.dropout,
                                  config.seed + 101 * (t + 1));
        model.lex_scaler = scaler;
        auto result = train(std::move(model), train_x, train_y, val_x, val_y,
                            train_config_for(config, config.seed + 11 * (t + 1)));

        const std::string ffn_name = "ffn_" + target + ".afm";
        save_ffn(result.model, (mdir / ffn_name).string());
        write_trace_tsv((mdir / ("trace_" + target + ".tsv")).string(), result.trace);

        std::vector<std::pair<std::string, double>> members;
        if (config.model.kind == ModelKind::ensemble) {
            // Both SVRs train on the full training set with per-sample
            // weights growing linearly with distance from the scale midpoint.
            std::vector<double> weights;
            weights.reserve(gold.size());
            for (double g : gold) weights.push_back(sample_weight(g, kEssayScale.midpoint()));

            SvrConfig svr;
            svr.C = config.model.svr.C;
            svr.epsilon = config.model.svr.epsilon;
            svr.gamma = config.model.svr.gamma;
            svr.tolerance = config.model.svr.tolerance;
            svr.max_passes = config.model.svr.max_passes;

            svr.kernel = KernelKind::poly3;
            auto poly = fit_svr(svr, table.features, gold, weights);
            const std::string poly_name = "svr_poly_" + target + ".afm";
            save_svr(poly, (mdir / poly_name).string());

            svr.kernel = KernelKind::rbf;
            auto rbf = fit_svr(svr, table.features, gold, weights);
            const std::string rbf_name = "svr_rbf_" + target + ".afm";
            save_svr(rbf, (mdir / rbf_name).string());

            const double w = 1.0 / 3.0;
            members = {{ffn_name, w}, {poly_name, w}, {rbf_name, w}};
        } else {
            members = {{ffn_name, 1.0}};
        }
        write_ensemble_manifest((mdir / ("manifest_" + target + ".json")).string(), target,
                                members);
    }
}

void train_adaptation_task(const RunConfig& config) {
    const fs::path fdir = features_dir(config);
    const fs::path mdir = models_dir(config);
    fs::create_directories(mdir);
    if (!config.data.train || !config.data.dev) {
        throw UsageError("adaptation training requires train and dev datasets");
    }
    const auto train_table = load_feature_table((fdir / "features_train.tsv").string());
    const auto dev_table = load_feature_table((fdir / "features_dev.tsv").string());
    const auto train_turns = parse_turns(*config.data.train, config.data.train_has_gold,
                                         config.data.turn_columns);
    const auto dev_turns = parse_turns(*config.data.dev, config.data.dev_has_gold,
                                       config.data.turn_columns);
    if (train_turns.size() != train_table.ids.size() || dev_turns.size() != dev_table.ids.size()) {
        throw DataError("feature files are stale: row counts do not match the datasets");
    }

    FfnModel template_model = make_ffn(train_table.features.cols, config.model.hidden,
                                       config.model.activation, config.model.dropout, config.seed);
    template_model.lex_scaler = load_run_scaler(config);

    // Learning rates, epoch count, and the lr floor stay at the fixed
    // adaptation values; batch size, weight decay, and plateau settings flow
    // from the run config.
    auto configs = default_adaptation_configs(config.seed);
    for (TrainConfig* tc : {&configs.empathy, &configs.emotion_polarity,
                            &configs.emotion_intensity}) {
        tc->batch_size = config.train.batch_size;
        tc->optimizer.weight_decay = config.train.weight_decay;
        tc->plateau_factor = config.train.plateau_factor;
        tc->plateau_patience = config.train.plateau_patience;
    }
    auto models = train_adaptation(train_table.features, train_turns, dev_table.features,
                                   dev_turns, template_model, configs);

    const std::vector<std::pair<std::string, const TrainResult*>> outputs = {
        {"empathy", &models.empathy},
        {"emotion_polarity", &models.emotion_polarity},
        {"emotion_intensity", &models.emotion_intensity}};
    for (const auto& [target, result] : outputs) {
        const std::string name = "ffn_" + target + ".afm";
        save_ffn(result->model, (mdir / name).string());
        write_trace_tsv((mdir / ("trace_" + target + ".tsv")).string(), result->trace);
        write_ensemble_manifest((mdir / ("manifest_" + target + ".json")).string(), target,
                                {{name, 1.0}});
    }
}

} // namespace

void run_train(const RunConfig& config) {
    config.validate();
    fs::create_directories(config.output_dir);
    if (config.task == Task::primary) {
        train_primary(config);
    } else {
        train_adaptation_task(config);
    }
    std::ofstream audit(fs::path(config.output_dir) / "resolved_config.json");
    audit << config_to_json(config);
}

namespace {

std::vector<std::string> prediction_targets(const RunConfig& config) {
    if (config.task == Task::primary) return {"empathy", "distress"};
    return config.predictions.adaptation_column_order;
}

ValueScale target_scale(const RunConfig& config, const std::string& target) {
    if (config.task == Task::primary) return kEssayScale;
    if (target == "emotion_polarity") return kPolarityScale;
    return kTurnEmpathyScale; // empathy and intensity share [0,5]
}

} // namespace

void run_predict(const RunConfig& config, const std::string& model_dir, const std::string& input,
                 const std::string& output) {
    const fs::path mdir = model_dir.empty() ? models_dir(config) : fs::path(model_dir);
    const auto targets = prediction_targets(config);

    std::vector<EnsembleModel> ensembles;
    for (const auto& target : targets) {
        const auto manifest = mdir / ("manifest_" + target + ".json");
        if (!fs::exists(manifest)) {
            throw DataError("missing model manifest: " + manifest.string());
        }
        auto ensemble = load_ensemble(manifest.string());
        if (config.model.clip_predictions) ensemble.clip = target_scale(config, target);
        ensembles.push_back(std::move(ensemble));
    }

    // The scaler persisted in the model file reproduces training-time
    // featurization; every member carries the same one.
    std::optional<FeatureScaler> scaler;
    for (const auto& member : ensembles.front().members) {
        if (const auto* ffn = std::get_if<FfnModel>(&member.model)) {
            scaler = ffn->lex_scaler;
            break;
        }
    }
    const auto lexicons = load_lexicons(config);
    if (lexicons && !scaler) {
        throw DataError("lexicon features enabled but the model carries no fitted scaler");
    }
    auto embedder = make_embedder(config.embedding);
    BlockFeatureBuilder builder(*embedder, lexicons, scaler);

    std::vector<std::vector<double>> rows;
    if (config.task == Task::primary) {
        const auto samples = parse_essays(input, false, config.data.essay_columns);
        std::vector<std::string> texts;
        for (const auto& s : samples) texts.push_back(s.essay);
        builder.prepare(texts);
        for (const auto& s : samples) rows.push_back(builder.block(s.essay));
    } else {
        const auto turns = parse_turns(input, false, config.data.turn_columns);
        std::vector<std::string> texts;
        for (const auto& t : turns) {
            texts.push_back(t.essay_text);
            texts.push_back(t.text);
        }
        builder.prepare(texts);
        TurnFeatureOptions options;
        options.per_speaker_context = config.per_speaker_context;
        auto by_conversation = build_all_turn_features(turns, [&](const std::string& text) {
            return builder.block(text);
        }, options);
        // Submission rows go out in the order of the input file, not the
        // conversation sort.
        rows.resize(by_conversation.size());
        for (std::size_t i = 0; i < turns.size(); ++i) {
            rows.at(turns[i].file_index) = std::move(by_conversation[i]);
        }
    }

    for (const auto& ensemble : ensembles) {
        for (const auto& member : ensemble.members) {
            if (!rows.empty() && member.input_dim() != rows.front().size()) {
                throw DataError("feature dimension " + std::to_string(rows.front().size()) +
                                " does not match model '" + member.path + "' input dimension " +
                                std::to_string(member.input_dim()));
            }
        }
    }

    TsvWriter writer(output);
    for (const auto& row : rows) {
        std::vector<std::string> fields;
        fields.reserve(targets.size());
        for (const auto& ensemble : ensembles) {
            fields.push_back(format_double(ensemble.predict(row)));
        }
        writer.write_row(fields);
    }
}

std::vector<std::vector<double>> read_predictions(const std::string& path,
                                                  std::size_t expected_columns) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open predictions file: " + path);
    std::vector<std::vector<double>> columns(expected_columns);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_tab(line);
        if (fields.size() != expected_columns) {
            throw DataError(path + ": row " + std::to_string(line_no) + " has " +
                            std::to_string(fields.size()) + " columns, expected " +
                            std::to_string(expected_columns));
        }
        for (std::size_t c = 0; c < expected_columns; ++c) {
            char* end = nullptr;
            double v = std::strtod(fields[c].c_str(), &end);
            if (fields[c].empty() || end != fields[c].c_str() + fields[c].size()) {
                throw DataError(path + ": row " + std::to_string(line_no) +
                                ": non-numeric prediction '" + fields[c] + "'");
            }
            columns[c].push_back(v);
        }
    }
    return columns;
}

namespace {

struct GoldData {
    std::vector<std::string> ids;
    std::vector<std::vector<double>> series; // aligned with prediction_targets()
};

GoldData load_gold(const RunConfig& config, const std::string& gold_path) {
    GoldData out;
    if (config.task == Task::primary) {
        const auto samples = parse_essays(gold_path, true, config.data.essay_columns);
        out.series.resize(2);
        for (const auto& s : samples) {
            out.ids.push_back(s.id);
            out.series[0].push_back(*s.empathy);
            out.series[1].push_back(*s.distress);
        }
    } else {
        auto turns = parse_turns(gold_path, true, config.data.turn_columns);
        // Align with prediction files, which are written in file order.
        std::sort(turns.begin(), turns.end(),
                  [](const TurnSample& a, const TurnSample& b) {
                      return a.file_index < b.file_index;
                  });
        const auto targets = prediction_targets(config);
        out.series.resize(targets.size());
        for (const auto& t : turns) {
            out.ids.push_back(t.conversation_id + ":" + std::to_string(t.turn_index));
            for (std::size_t c = 0; c < targets.size(); ++c) {
                const auto& v = targets[c] == "empathy"            ? t.empathy
                                : targets[c] == "emotion_polarity" ? t.emotion_polarity
                                                                   : t.emotion_intensity;
                out.series[c].push_back(*v);
            }
        }
    }
    return out;
}

EvalReport evaluate_impl(const RunConfig& config, const std::string& predictions_path,
                         const std::string& gold_path) {
    const auto targets = prediction_targets(config);
    const auto gold = load_gold(config, gold_path);
    const auto predictions = read_predictions(predictions_path, targets.size());
    if (!predictions.empty() && !gold.series.empty() &&
        predictions.front().size() != gold.ids.size()) {
        throw DataError("row count mismatch: " + std::to_string(predictions.front().size()) +
                        " predictions vs " + std::to_string(gold.ids.size()) + " gold rows");
    }
    std::vector<double> midpoints;
    for (const auto& target : targets) {
        midpoints.push_back(target_scale(config, target).midpoint());
    }
    return build_report(gold.ids, targets, gold.series, predictions, midpoints);
}

} // namespace

EvalReport run_evaluate(const RunConfig& config, const std::string& predictions_path,
                        const std::string& gold_path, const std::string& out_dir) {
    auto report = evaluate_impl(config, predictions_path, gold_path);
    write_report_files(report, out_dir, "eval");
    std::ofstream text(fs::path(out_dir) / "eval_report.txt");
    text << render_report_text(report);
    return report;
}

EvalReport run_analyze(const RunConfig& config, const std::string& predictions_path,
                       const std::string& gold_path, const std::string& out_dir) {
    auto report = evaluate_impl(config, predictions_path, gold_path);
    write_report_files(report, out_dir, "analysis");
    std::ofstream text(fs::path(out_dir) / "analysis_report.txt");
    text << render_report_text(report);

    // Distribution tables: per-bin gold and prediction counts, the tabular
    // form of the dataset-imbalance figures.
    TsvWriter dist((fs::path(out_dir) / "analysis_distribution.tsv").string());
    dist.write_row({"target", "bin_low", "bin_high", "gold_count", "prediction_count"});
    for (std::size_t t = 0; t < report.targets.size(); ++t) {
        const auto& tr = report.targets[t];
        const ValueScale scale = target_scale(config, tr.target);
        const double width = config.train.split.bin_width;
        const int bins = bin_count(scale, width);
        std::vector<std::size_t> gold_hist(bins, 0), pred_hist(bins, 0);
        for (const auto& s : tr.samples) {
            gold_hist[bin_target(std::clamp(s.gold, scale.min, scale.max), scale, width)]++;
            pred_hist[bin_target(std::clamp(s.prediction, scale.min, scale.max), scale, width)]++;
        }
        for (int b = 0; b < bins; ++b) {
            dist.write_row({tr.target, format_double(scale.min + b * width),
                            format_double(std::min(scale.min + (b + 1) * width, scale.max)),
                            std::to_string(gold_hist[b]), std::to_string(pred_hist[b])});
        }
    }
    return report;
}

} // namespace affectreg
