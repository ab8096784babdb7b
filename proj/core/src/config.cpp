#include "affectreg/config.hpp"

#include "affectreg/errors.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace affectreg {

namespace {

using nlohmann::json;

template <typename T>
void read_into(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

void read_optional_string(const json& obj, const char* key, std::optional<std::string>& out) {
    if (obj.contains(key) && !obj.at(key).is_null()) out = obj.at(key).get<std::string>();
}

template <typename Enum>
Enum parse_enum(const std::string& value, std::initializer_list<std::pair<const char*, Enum>> table,
                const std::string& what) {
    for (const auto& [name, e] : table) {
        if (value == name) return e;
    }
    throw UsageError("unknown " + what + " '" + value + "'");
}

void require_file(const std::string& path, const std::string& what) {
    if (!std::filesystem::exists(path)) {
        throw UsageError(what + " does not exist: " + path);
    }
}

} // namespace

RunConfig parse_config_json(const std::string& json_text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(json_text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::exception& e) {
        throw UsageError("invalid config " + origin + ": " + e.what());
    }

    RunConfig config;
    if (doc.contains("task")) {
        config.task = parse_enum<Task>(doc.at("task").get<std::string>(),
                                       {{"primary", Task::primary},
                                        {"adaptation", Task::adaptation}},
                                       "task");
    }
    if (doc.contains("seed")) {
        config.seed = doc.at("seed").get<std::uint64_t>();
        config.seed_set = true;
    }
    read_into(doc, "output_dir", config.output_dir);
    read_into(doc, "per_speaker_context", config.per_speaker_context);

    if (doc.contains("data")) {
        const auto& d = doc.at("data");
        read_optional_string(d, "train", config.data.train);
        read_optional_string(d, "dev", config.data.dev);
        read_optional_string(d, "test", config.data.test);
        read_into(d, "train_has_gold", config.data.train_has_gold);
        read_into(d, "dev_has_gold", config.data.dev_has_gold);
        read_into(d, "test_has_gold", config.data.test_has_gold);
        if (d.contains("essay_columns")) {
            const auto& c = d.at("essay_columns");
            read_into(c, "id", config.data.essay_columns.id);
            read_into(c, "essay", config.data.essay_columns.essay);
            read_into(c, "empathy", config.data.essay_columns.empathy);
            read_into(c, "distress", config.data.essay_columns.distress);
        }
        if (d.contains("turn_columns")) {
            const auto& c = d.at("turn_columns");
            read_into(c, "conversation_id", config.data.turn_columns.conversation_id);
            read_into(c, "turn_id", config.data.turn_columns.turn_id);
            read_into(c, "speaker_id", config.data.turn_columns.speaker_id);
            read_into(c, "text", config.data.turn_columns.text);
            read_into(c, "essay", config.data.turn_columns.essay);
            read_into(c, "empathy", config.data.turn_columns.empathy);
            read_into(c, "emotion_polarity", config.data.turn_columns.emotion_polarity);
            read_into(c, "emotion_intensity", config.data.turn_columns.emotion_intensity);
        }
    }

    if (doc.contains("lexicons")) {
        const auto& l = doc.at("lexicons");
        read_into(l, "enabled", config.lexicons.enabled);
        read_into(l, "nrc", config.lexicons.nrc);
        read_into(l, "mpqa", config.lexicons.mpqa);
        read_into(l, "vad", config.lexicons.vad);
        read_into(l, "shifters", config.lexicons.shifters);
    }

    if (doc.contains("embedding")) {
        const auto& e = doc.at("embedding");
        if (e.contains("provider")) {
            config.embedding.provider =
                parse_enum<ProviderKind>(e.at("provider").get<std::string>(),
                                         {{"hash", ProviderKind::hash},
                                          {"precomputed", ProviderKind::precomputed},
                                          {"remote", ProviderKind::remote}},
                                         "embedding provider");
        }
        read_into(e, "model", config.embedding.model);
        read_into(e, "dimension", config.embedding.dimension);
        if (e.contains("max_tokens")) {
            if (e.at("max_tokens").is_null()) {
                config.embedding.max_tokens = std::nullopt;
            } else {
                config.embedding.max_tokens = e.at("max_tokens").get<std::size_t>();
            }
        }
        read_optional_string(e, "cache", config.embedding.cache_path);
        read_optional_string(e, "table", config.embedding.table_path);
        read_into(e, "batch_size", config.embedding.batch_size);
        read_into(e, "hash_seed", config.embedding.hash_seed);
        read_into(e, "max_attempts", config.embedding.max_attempts);
        read_into(e, "backoff_initial_ms", config.embedding.backoff_initial_ms);
    }

    if (doc.contains("model")) {
        const auto& m = doc.at("model");
        if (m.contains("kind")) {
            config.model.kind = parse_enum<ModelKind>(
                m.at("kind").get<std::string>(),
                {{"ffn", ModelKind::ffn}, {"ensemble", ModelKind::ensemble}}, "model kind");
        }
        if (m.contains("activation")) {
            config.model.activation = parse_enum<Activation>(
                m.at("activation").get<std::string>(),
                {{"relu", Activation::relu}, {"gelu", Activation::gelu}}, "activation");
        }
        read_into(m, "hidden", config.model.hidden);
        read_into(m, "clip_predictions", config.model.clip_predictions);
        if (m.contains("dropout")) {
            const auto& dr = m.at("dropout");
            if (dr.contains("mode")) {
                config.model.dropout.mode = parse_enum<DropoutSpec::Mode>(
                    dr.at("mode").get<std::string>(),
                    {{"fixed", DropoutSpec::Mode::fixed}, {"adaptive", DropoutSpec::Mode::adaptive}},
                    "dropout mode");
            }
            read_into(dr, "p", config.model.dropout.p);
            read_into(dr, "eta", config.model.dropout.eta);
            read_into(dr, "min_rate", config.model.dropout.min_rate);
            read_into(dr, "max_rate", config.model.dropout.max_rate);
        }
        if (m.contains("svr")) {
            const auto& s = m.at("svr");
            read_into(s, "C", config.model.svr.C);
            read_into(s, "epsilon", config.model.svr.epsilon);
            read_into(s, "tolerance", config.model.svr.tolerance);
            read_into(s, "max_passes", config.model.svr.max_passes);
            if (s.contains("gamma") && !s.at("gamma").is_null()) {
                config.model.svr.gamma = s.at("gamma").get<double>();
            }
        }
    }

    if (doc.contains("train")) {
        const auto& t = doc.at("train");
        read_into(t, "learning_rate", config.train.learning_rate);
        read_into(t, "min_lr", config.train.min_lr);
        read_into(t, "epochs", config.train.epochs);
        read_into(t, "batch_size", config.train.batch_size);
        read_into(t, "weight_decay", config.train.weight_decay);
        if (t.contains("plateau")) {
            const auto& p = t.at("plateau");
            read_into(p, "factor", config.train.plateau_factor);
            read_into(p, "patience", config.train.plateau_patience);
        }
        if (t.contains("split")) {
            const auto& s = t.at("split");
            read_into(s, "validation_fraction", config.train.split.validation_fraction);
            read_into(s, "bin_width", config.train.split.bin_width);
            if (s.contains("stratify")) {
                config.train.split.stratify = parse_enum<StratifyChoice>(
                    s.at("stratify").get<std::string>(),
                    {{"target", StratifyChoice::target},
                     {"empathy", StratifyChoice::empathy},
                     {"distress", StratifyChoice::distress},
                     {"none", StratifyChoice::none}},
                    "stratify choice");
            }
        }
    }

    if (doc.contains("predictions")) {
        const auto& p = doc.at("predictions");
        read_into(p, "primary_filename", config.predictions.primary_filename);
        read_into(p, "adaptation_filename", config.predictions.adaptation_filename);
        read_into(p, "adaptation_column_order", config.predictions.adaptation_column_order);
    }

    return config;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_json(buffer.str(), path);
}

void RunConfig::validate() const {
    if (!seed_set) throw UsageError("config must set a seed");
    if (output_dir.empty()) throw UsageError("config must set output_dir");
    for (const auto& [path, what] :
         std::initializer_list<std::pair<std::optional<std::string>, const char*>>{
             {data.train, "train dataset"}, {data.dev, "dev dataset"}, {data.test, "test dataset"}}) {
        if (path) require_file(*path, what);
    }
    if (lexicons.enabled) {
        for (const auto& [path, what] :
             std::initializer_list<std::pair<std::string, const char*>>{
                 {lexicons.nrc, "emotion lexicon"},
                 {lexicons.mpqa, "subjectivity lexicon"},
                 {lexicons.vad, "vad lexicon"},
                 {lexicons.shifters, "shifter lexicon"}}) {
            if (path.empty()) throw UsageError(std::string(what) + " path missing from config");
            require_file(path, what);
        }
    }
    if (embedding.provider == ProviderKind::precomputed) {
        if (!embedding.table_path) {
            throw UsageError("precomputed embedding provider requires a table path");
        }
        require_file(*embedding.table_path, "embedding table");
    }
    if (embedding.dimension == 0) throw UsageError("embedding dimension must be positive");
    if (predictions.adaptation_column_order.size() != 3) {
        throw UsageError("adaptation_column_order must list the three turn targets");
    }
    for (const auto& name : predictions.adaptation_column_order) {
        if (name != "empathy" && name != "emotion_polarity" && name != "emotion_intensity") {
            throw UsageError("unknown adaptation column '" + name + "'");
        }
    }
}

std::string config_to_json(const RunConfig& c) {
    json doc;
    doc["task"] = c.task == Task::primary ? "primary" : "adaptation";
    doc["seed"] = c.seed;
    doc["output_dir"] = c.output_dir;
    doc["per_speaker_context"] = c.per_speaker_context;

    json data;
    if (c.data.train) data["train"] = *c.data.train;
    if (c.data.dev) data["dev"] = *c.data.dev;
    if (c.data.test) data["test"] = *c.data.test;
    data["train_has_gold"] = c.data.train_has_gold;
    data["dev_has_gold"] = c.data.dev_has_gold;
    data["test_has_gold"] = c.data.test_has_gold;
    data["essay_columns"] = {{"id", c.data.essay_columns.id},
                             {"essay", c.data.essay_columns.essay},
                             {"empathy", c.data.essay_columns.empathy},
                             {"distress", c.data.essay_columns.distress}};
    data["turn_columns"] = {{"conversation_id", c.data.turn_columns.conversation_id},
                            {"turn_id", c.data.turn_columns.turn_id},
                            {"speaker_id", c.data.turn_columns.speaker_id},
                            {"text", c.data.turn_columns.text},
                            {"essay", c.data.turn_columns.essay},
                            {"empathy", c.data.turn_columns.empathy},
                            {"emotion_polarity", c.data.turn_columns.emotion_polarity},
                            {"emotion_intensity", c.data.turn_columns.emotion_intensity}};
    doc["data"] = data;

    doc["lexicons"] = {{"enabled", c.lexicons.enabled},
                       {"nrc", c.lexicons.nrc},
                       {"mpqa", c.lexicons.mpqa},
                       {"vad", c.lexicons.vad},
                       {"shifters", c.lexicons.shifters}};

    json embedding;
    embedding["provider"] = c.embedding.provider == ProviderKind::hash          ? "hash"
                            : c.embedding.provider == ProviderKind::precomputed ? "precomputed"
                                                                                : "remote";
    embedding["model"] = c.embedding.model;
    embedding["dimension"] = c.embedding.dimension;
    if (c.embedding.max_tokens) embedding["max_tokens"] = *c.embedding.max_tokens;
    if (c.embedding.cache_path) embedding["cache"] = *c.embedding.cache_path;
    if (c.embedding.table_path) embedding["table"] = *c.embedding.table_path;
    embedding["batch_size"] = c.embedding.batch_size;
    embedding["hash_seed"] = c.embedding.hash_seed;
    embedding["max_attempts"] = c.embedding.max_attempts;
    embedding["backoff_initial_ms"] = c.embedding.backoff_initial_ms;
    doc["embedding"] = embedding;

    json model;
    model["kind"] = c.model.kind == ModelKind::ffn ? "ffn" : "ensemble";
    model["activation"] = c.model.activation == Activation::gelu ? "gelu" : "relu";
    model["hidden"] = c.model.hidden;
    model["clip_predictions"] = c.model.clip_predictions;
    model["dropout"] = {
        {"mode", c.model.dropout.mode == DropoutSpec::Mode::fixed ? "fixed" : "adaptive"},
        {"p", c.model.dropout.p},
        {"eta", c.model.dropout.eta},
        {"min_rate", c.model.dropout.min_rate},
        {"max_rate", c.model.dropout.max_rate}};
    json svr;
    svr["C"] = c.model.svr.C;
    svr["epsilon"] = c.model.svr.epsilon;
    svr["tolerance"] = c.model.svr.tolerance;
    svr["max_passes"] = c.model.svr.max_passes;
    if (c.model.svr.gamma) svr["gamma"] = *c.model.svr.gamma;
    model["svr"] = svr;
    doc["model"] = model;

    doc["train"] = {
        {"learning_rate", c.train.learning_rate},
        {"min_lr", c.train.min_lr},
        {"epochs", c.train.epochs},
        {"batch_size", c.train.batch_size},
        {"weight_decay", c.train.weight_decay},
        {"plateau", {{"factor", c.train.plateau_factor}, {"patience", c.train.plateau_patience}}},
        {"split",
         {{"validation_fraction", c.train.split.validation_fraction},
          {"bin_width", c.train.split.bin_width},
          {"stratify", c.train.split.stratify == StratifyChoice::target     ? "target"
                       : c.train.split.stratify == StratifyChoice::empathy  ? "empathy"
                       : c.train.split.stratify == StratifyChoice::distress ? "distress"
                                                                            : "none"}}}};

    doc["predictions"] = {{"primary_filename", c.predictions.primary_filename},
                          {"adaptation_filename", c.predictions.adaptation_filename},
                          {"adaptation_column_order", c.predictions.adaptation_column_order}};

    return doc.dump(2) + "\n";
}

} // namespace affectreg
