#include "affectreg/pipeline.hpp"

#include "affectreg/corpus.hpp"
#include "affectreg/embedding.hpp"
#include "affectreg/ensemble.hpp"
#include "affectreg/errors.hpp"
#include "affectreg/rng.hpp"
#include "support/test_util.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace affectreg;
namespace fs = std::filesystem;

namespace {

std::string data_path(const std::string& name) {
    return std::string(AFFECTREG_TEST_DATA_DIR) + "/" + name;
}

// Synthetic primary dataset: gold targets are a squashed linear function of
// the hash embedding, so the trained pipeline can actually learn them.
void write_primary_dataset(const std::string& path, std::size_t rows, std::uint64_t salt,
                           std::size_t dim, std::uint64_t embed_seed) {
    HashEmbeddingProvider provider(dim, embed_seed);
    Rng wrng(42);
    std::vector<double> w_emp(dim), w_dis(dim);
    for (double& v : w_emp) v = wrng.uniform(-1.0, 1.0);
    for (double& v : w_dis) v = wrng.uniform(-1.0, 1.0);

    std::ofstream out(path);
    out << "id\tessay\tempathy\tdistress\n";
    Rng rng(salt);
    for (std::size_t i = 0; i < rows; ++i) {
        std::string text = "story";
        const std::size_t words = 4 + rng.index(6);
        for (std::size_t k = 0; k < words; ++k) {
            text += " w" + std::to_string(rng.index(4000));
        }
        const auto emb = provider.embed_one(text);
        double de = 0.0, dd = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            de += w_emp[j] * emb[j];
            dd += w_dis[j] * emb[j];
        }
        const double empathy = 4.0 + 2.5 * std::tanh(1.2 * de);
        const double distress = 4.0 + 2.5 * std::tanh(1.2 * dd);
        out << "s" << salt << "_" << i << "\t" << text << "\t" << empathy << "\t" << distress
            << "\n";
    }
}

RunConfig base_config(const testutil::TempDir& tmp, std::size_t dim) {
    RunConfig config;
    config.task = Task::primary;
    config.seed = 7;
    config.seed_set = true;
    config.output_dir = tmp.file("run");
    config.data.train = tmp.file("train.tsv");
    config.data.dev = tmp.file("dev.tsv");
    config.lexicons.enabled = true;
    config.lexicons.nrc = data_path("toy_nrc.txt");
    config.lexicons.mpqa = data_path("toy_mpqa.tff");
    config.lexicons.vad = data_path("toy_vad.txt");
    config.lexicons.shifters = data_path("toy_shifters.txt");
    config.embedding.provider = ProviderKind::hash;
    config.embedding.dimension = dim;
    config.embedding.hash_seed = 5;
    config.embedding.cache_path = tmp.file("cache/embeddings.bin");
    config.model.dropout.p = 0.0;
    config.model.hidden = {32, 16};
    config.train.learning_rate = 2e-3;
    config.train.epochs = 30;
    config.train.batch_size = 32;
    config.train.split.stratify = StratifyChoice::none;
    return config;
}

} // namespace

TEST_SUITE("pipeline") {

TEST_CASE("featurize writes per-split feature files with named lexicon columns") {
    testutil::TempDir tmp;
    const std::size_t dim = 8;
    write_primary_dataset(tmp.file("train.tsv"), 40, 1, dim, 5);
    write_primary_dataset(tmp.file("dev.tsv"), 12, 2, dim, 5);
    auto config = base_config(tmp, dim);

    run_featurize(config);
    const auto fdir = fs::path(config.output_dir) / "features";
    CHECK(fs::exists(fdir / "features_train.tsv"));
    CHECK(fs::exists(fdir / "features_dev.tsv"));
    CHECK(fs::exists(fdir / "scaler.tsv"));
    CHECK(fs::exists(fdir / "features.md"));

    auto table = load_feature_table((fdir / "features_train.tsv").string());
    CHECK(table.ids.size() == 40);
    CHECK(table.features.cols == dim + kLexiconFeatureCount);
    CHECK(table.gold_names == std::vector<std::string>{"empathy", "distress"});

    // Header carries the 48 schema names.
    std::ifstream in(fdir / "features_train.tsv");
    std::string header;
    std::getline(in, header);
    CHECK(header.find("nrc_count_anger") != std::string::npos);
    CHECK(header.find("shifter_count") != std::string::npos);

    // Lexicon toggle off: embedding columns only.
    auto bare = config;
    bare.lexicons.enabled = false;
    bare.output_dir = tmp.file("run_bare");
    run_featurize(bare);
    auto bare_table =
        load_feature_table((fs::path(bare.output_dir) / "features" / "features_train.tsv").string());
    CHECK(bare_table.features.cols == dim);
}

TEST_CASE("featurize rerun with a warm cache is byte-identical") {
    testutil::TempDir tmp;
    const std::size_t dim = 6;
    write_primary_dataset(tmp.file("train.tsv"), 25, 3, dim, 5);
    write_primary_dataset(tmp.file("dev.tsv"), 10, 4, dim, 5);
    auto config = base_config(tmp, dim);

    run_featurize(config);
    const auto path = (fs::path(config.output_dir) / "features" / "features_train.tsv").string();
    const auto first = testutil::read_file(path);
    run_featurize(config);
    CHECK(testutil::read_file(path) == first);
}

TEST_CASE("full pipeline: featurize, train, predict, evaluate on a learnable target") {
    testutil::TempDir tmp;
    const std::size_t dim = 12;
    write_primary_dataset(tmp.file("train.tsv"), 300, 11, dim, 5);
    write_primary_dataset(tmp.file("dev.tsv"), 80, 12, dim, 5);
    auto config = base_config(tmp, dim);
    config.train.epochs = 50;

    run_featurize(config);
    run_train(config);

    const auto mdir = fs::path(config.output_dir) / "models";
    CHECK(fs::exists(mdir / "ffn_empathy.afm"));
    CHECK(fs::exists(mdir / "ffn_distress.afm"));
    CHECK(fs::exists(mdir / "manifest_empathy.json"));
    CHECK(fs::exists(mdir / "trace_empathy.tsv"));
    CHECK(fs::exists(fs::path(config.output_dir) / "resolved_config.json"));

    const auto predictions = tmp.file("predictions_EMP.tsv");
    run_predict(config, "", *config.data.dev, predictions);
    auto rows = read_predictions(predictions, 2);
    CHECK(rows[0].size() == 80);

    auto report = run_evaluate(config, predictions, *config.data.dev,
                               tmp.file("reports"));
    REQUIRE(report.mean_r.has_value());
    CHECK(*report.mean_r > 0.9);
    CHECK(fs::exists(tmp.file("reports/eval_scores.tsv")));
    CHECK(fs::exists(tmp.file("reports/reports.md")));

    auto analysis = run_analyze(config, predictions, *config.data.dev, tmp.file("analysis"));
    CHECK(fs::exists(tmp.file("analysis/analysis_distribution.tsv")));
    CHECK(analysis.targets.size() == 2);
}

TEST_CASE("ensemble training writes three members per target with equal weights") {
    testutil::TempDir tmp;
    const std::size_t dim = 6;
    write_primary_dataset(tmp.file("train.tsv"), 60, 21, dim, 5);
    write_primary_dataset(tmp.file("dev.tsv"), 20, 22, dim, 5);
    auto config = base_config(tmp, dim);
    config.model.kind = ModelKind::ensemble;
    config.train.epochs = 5;
    config.train.split.stratify = StratifyChoice::target;

    run_featurize(config);
    run_train(config);

    const auto mdir = fs::path(config.output_dir) / "models";
    for (const auto& target : {"empathy", "distress"}) {
        CHECK(fs::exists(mdir / ("ffn_" + std::string(target) + ".afm")));
        CHECK(fs::exists(mdir / ("svr_poly_" + std::string(target) + ".afm")));
        CHECK(fs::exists(mdir / ("svr_rbf_" + std::string(target) + ".afm")));
        auto ensemble =
            load_ensemble((mdir / ("manifest_" + std::string(target) + ".json")).string());
        CHECK(ensemble.members.size() == 3);
        for (const auto& member : ensemble.members) {
            CHECK(member.weight == doctest::Approx(1.0 / 3).epsilon(1e-12));
        }
    }

    const auto predictions = tmp.file("pred.tsv");
    run_predict(config, "", *config.data.dev, predictions);
    CHECK(read_predictions(predictions, 2)[0].size() == 20);
}

TEST_CASE("predict on an empty input yields an empty file and evaluate catches mismatches") {
    testutil::TempDir tmp;
    const std::size_t dim = 6;
    write_primary_dataset(tmp.file("train.tsv"), 30, 31, dim, 5);
    write_primary_dataset(tmp.file("dev.tsv"), 10, 32, dim, 5);
    auto config = base_config(tmp, dim);
    config.train.epochs = 3;
    run_featurize(config);
    run_train(config);

    testutil::write_file(tmp.file("empty.tsv"), "id\tessay\tempathy\tdistress\n");
    const auto out = tmp.file("empty_pred.tsv");
    run_predict(config, "", tmp.file("empty.tsv"), out);
    CHECK(testutil::read_file(out).empty());

    // Predictions with the wrong row count are a data error with both counts.
    testutil::write_file(tmp.file("short.tsv"), "4.0\t4.0\n");
    try {
        run_evaluate(config, tmp.file("short.tsv"), *config.data.dev, tmp.file("r"));
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string what = e.what();
        CHECK(what.find("1") != std::string::npos);
        CHECK(what.find("10") != std::string::npos);
    }
}

TEST_CASE("adaptation pipeline: three models and three prediction columns") {
    testutil::TempDir tmp;
    const std::size_t dim = 5;

    auto write_turns_file = [&](const std::string& path, std::size_t conversations,
                                std::uint64_t salt) {
        std::ofstream out(path);
        out << "conversation_id\tturn_id\tspeaker_id\ttext\tessay\tempathy\temotion_polarity\t"
               "emotion_intensity\n";
        Rng rng(salt);
        for (std::size_t c = 0; c < conversations; ++c) {
            const std::size_t len = 2 + rng.index(3);
            for (std::size_t k = 0; k < len; ++k) {
                out << "c" << salt << "_" << c << "\t" << k << "\ts" << (k % 2) << "\tmsg "
                    << salt << " " << c << " " << k << "\tessay " << salt << " " << c << "\t"
                    << rng.uniform(0.0, 5.0) << "\t" << rng.uniform(0.0, 2.0) << "\t"
                    << rng.uniform(0.0, 5.0) << "\n";
            }
        }
    };
    write_turns_file(tmp.file("train.tsv"), 12, 41);
    write_turns_file(tmp.file("dev.tsv"), 5, 42);

    auto config = base_config(tmp, dim);
    config.task = Task::adaptation;
    config.model.hidden = {8, 4};
    config.train.epochs = 100; // fixed by the adaptation configs

    run_featurize(config);
    const auto fdir = fs::path(config.output_dir) / "features";
    auto table = load_feature_table((fdir / "features_train.tsv").string());
    CHECK(table.features.cols == 3 * (dim + kLexiconFeatureCount));
    CHECK(table.gold_names ==
          std::vector<std::string>{"empathy", "emotion_polarity", "emotion_intensity"});

    run_train(config);
    const auto mdir = fs::path(config.output_dir) / "models";
    CHECK(fs::exists(mdir / "ffn_empathy.afm"));
    CHECK(fs::exists(mdir / "ffn_emotion_polarity.afm"));
    CHECK(fs::exists(mdir / "ffn_emotion_intensity.afm"));

    const auto predictions = tmp.file("predictions_CONV.tsv");
    run_predict(config, "", *config.data.dev, predictions);
    auto dev_turns = parse_turns(*config.data.dev, true);
    CHECK(read_predictions(predictions, 3)[0].size() == dev_turns.size());

    auto report = run_evaluate(config, predictions, *config.data.dev, tmp.file("reports"));
    CHECK(report.targets.size() == 3);
}

TEST_CASE("adaptation predictions follow the input file order, not the sort order") {
    testutil::TempDir tmp;
    const std::size_t dim = 4;

    // Same six turns in two file orders: sorted and scrambled.
    const std::vector<std::tuple<std::string, int, std::string>> rows = {
        {"a", 0, "first a"}, {"a", 1, "second a"}, {"a", 2, "third a"},
        {"b", 0, "first b"}, {"b", 1, "second b"}, {"b", 2, "third b"}};
    const std::vector<std::size_t> scramble = {4, 0, 5, 2, 1, 3};

    auto write_order = [&](const std::string& path, const std::vector<std::size_t>& order,
                           bool gold) {
        std::ofstream out(path);
        out << "conversation_id\tturn_id\tspeaker_id\ttext\tessay";
        if (gold) out << "\tempathy\temotion_polarity\temotion_intensity";
        out << "\n";
        for (std::size_t i : order) {
            const auto& [conv, turn, text] = rows[i];
            out << conv << "\t" << turn << "\ts" << (turn % 2) << "\t" << text << "\tessay "
                << conv;
            if (gold) out << "\t2.5\t1.0\t2.5";
            out << "\n";
        }
    };
    const std::vector<std::size_t> identity = {0, 1, 2, 3, 4, 5};
    write_order(tmp.file("train.tsv"), identity, true);
    write_order(tmp.file("sorted.tsv"), identity, false);
    write_order(tmp.file("scrambled.tsv"), scramble, false);

    auto config = base_config(tmp, dim);
    config.task = Task::adaptation;
    config.lexicons.enabled = false;
    config.data.dev.reset();
    config.model.hidden = {4};
    config.train.epochs = 100;
    run_featurize(config);
    // Validation reuses the training set here; only the artifacts matter.
    config.data.dev = tmp.file("train.tsv");
    run_featurize(config);
    run_train(config);

    run_predict(config, "", tmp.file("sorted.tsv"), tmp.file("pred_sorted.tsv"));
    run_predict(config, "", tmp.file("scrambled.tsv"), tmp.file("pred_scrambled.tsv"));
    auto sorted = read_predictions(tmp.file("pred_sorted.tsv"), 3);
    auto scrambled = read_predictions(tmp.file("pred_scrambled.tsv"), 3);
    REQUIRE(sorted[0].size() == rows.size());
    for (std::size_t out_row = 0; out_row < scramble.size(); ++out_row) {
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(scrambled[c][out_row] == sorted[c][scramble[out_row]]);
        }
    }
}

TEST_CASE("config json round-trip and validation") {
    testutil::TempDir tmp;
    write_primary_dataset(tmp.file("train.tsv"), 5, 51, 4, 5);
    std::ostringstream json;
    json << R"({
      "task": "primary",
      "seed": 11,
      "output_dir": ")" << tmp.file("out") << R"(",
      "data": {"train": ")" << tmp.file("train.tsv") << R"("},
      "lexicons": {"enabled": false},
      "embedding": {"provider": "hash", "dimension": 4},
      "model": {"kind": "ensemble", "activation": "relu", "dropout": {"mode": "adaptive", "p": 0.4}},
      "train": {"epochs": 7, "split": {"stratify": "distress"}}
    })";
    const auto path = testutil::write_file(tmp.file("config.json"), json.str());
    auto config = load_config(path);
    CHECK(config.seed == 11);
    CHECK(config.model.kind == ModelKind::ensemble);
    CHECK(config.model.activation == Activation::relu);
    CHECK(config.model.dropout.mode == DropoutSpec::Mode::adaptive);
    CHECK(config.train.epochs == 7);
    CHECK(config.train.split.stratify == StratifyChoice::distress);
    CHECK_NOTHROW(config.validate());

    // Round-trip through the audit emission.
    auto reparsed = parse_config_json(config_to_json(config), "audit");
    CHECK(reparsed.seed == config.seed);
    CHECK(reparsed.model.kind == config.model.kind);
    CHECK(reparsed.train.epochs == config.train.epochs);

    // Seed is mandatory.
    auto no_seed = parse_config_json(R"({"output_dir": "x"})", "test");
    CHECK_THROWS_AS(no_seed.validate(), UsageError);

    // Missing referenced paths fail validation.
    auto bad = config;
    bad.data.train = tmp.file("nope.tsv");
    CHECK_THROWS_AS(bad.validate(), UsageError);
}

TEST_CASE("cli binary: exit codes and submission flow") {
    testutil::TempDir tmp;
    const std::size_t dim = 6;
    write_primary_dataset(tmp.file("train.tsv"), 40, 61, dim, 5);
    write_primary_dataset(tmp.file("dev.tsv"), 15, 62, dim, 5);
    auto config = base_config(tmp, dim);
    config.train.epochs = 3;
    config.lexicons.enabled = false;
    testutil::write_file(tmp.file("config.json"), config_to_json(config));

    const std::string cli = AFFECTREG_CLI_PATH;
    auto run = [&](const std::string& args) {
        const std::string command = cli + " " + args + " > " + tmp.file("stdout.txt") + " 2> " +
                                    tmp.file("stderr.txt");
        const int status = std::system(command.c_str());
        return WEXITSTATUS(status);
    };

    CHECK(run("") == 1);                       // missing subcommand: usage error
    CHECK(run("featurize") == 1);              // missing --config
    CHECK(run("featurize --config " + tmp.file("config.json")) == 0);
    CHECK(run("train --config " + tmp.file("config.json")) == 0);
    CHECK(run("predict --config " + tmp.file("config.json") + " --input " + tmp.file("dev.tsv") +
              " --output " + tmp.file("pred.tsv")) == 0);
    CHECK(run("evaluate --config " + tmp.file("config.json") + " --predictions " +
              tmp.file("pred.tsv") + " --gold " + tmp.file("dev.tsv")) == 0);
    const auto stdout_text = testutil::read_file(tmp.file("stdout.txt"));
    CHECK(stdout_text.find("mean pearson r:") != std::string::npos);

    CHECK(run("analyze --config " + tmp.file("config.json") + " --predictions " +
              tmp.file("pred.tsv") + " --gold " + tmp.file("dev.tsv")) == 0);

    // Data error: gold file missing a required column.
    testutil::write_file(tmp.file("badgold.tsv"), "id\tessay\nx\thello\n");
    CHECK(run("evaluate --config " + tmp.file("config.json") + " --predictions " +
              tmp.file("pred.tsv") + " --gold " + tmp.file("badgold.tsv")) == 2);

    // Provider error: remote provider with no endpoint configured.
    auto remote = config;
    remote.embedding.provider = ProviderKind::remote;
    remote.output_dir = tmp.file("run_remote");
    testutil::write_file(tmp.file("remote.json"), config_to_json(remote));
    CHECK(run("featurize --config " + tmp.file("remote.json")) == 3);
}

TEST_CASE("two identical runs produce identical artifacts") {
    testutil::TempDir tmp;
    const std::size_t dim = 5;
    write_primary_dataset(tmp.file("train.tsv"), 30, 71, dim, 5);
    write_primary_dataset(tmp.file("dev.tsv"), 10, 72, dim, 5);
    auto config = base_config(tmp, dim);
    config.train.epochs = 4;

    run_featurize(config);
    run_train(config);
    const auto model_a =
        testutil::read_file((fs::path(config.output_dir) / "models" / "ffn_empathy.afm").string());

    auto config2 = config;
    config2.output_dir = tmp.file("run2");
    run_featurize(config2);
    run_train(config2);
    const auto model_b =
        testutil::read_file((fs::path(config2.output_dir) / "models" / "ffn_empathy.afm").string());
    CHECK(model_a == model_b);
}

} // TEST_SUITE
