// affectreg: featurize / train / predict / evaluate / analyze for essay- and
// turn-level affect regression. Exit codes: 0 success, 1 usage error, 2 data
// or model-file error, 3 embedding-provider error.

#include "affectreg/config.hpp"
#include "affectreg/errors.hpp"
#include "affectreg/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

namespace {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;
    std::optional<std::size_t> epochs;
    std::optional<double> learning_rate;
    std::optional<std::string> model_kind;
    std::optional<bool> lexicons;
};

// Precedence: command-line flag > config file > built-in default.
affectreg::RunConfig resolve(const std::string& config_path, const Overrides& overrides) {
    affectreg::RunConfig config = affectreg::load_config(config_path);
    if (overrides.seed) {
        config.seed = *overrides.seed;
        config.seed_set = true;
    }
    if (overrides.output_dir) config.output_dir = *overrides.output_dir;
    if (overrides.epochs) config.train.epochs = *overrides.epochs;
    if (overrides.learning_rate) config.train.learning_rate = *overrides.learning_rate;
    if (overrides.model_kind) {
        if (*overrides.model_kind == "ffn") {
            config.model.kind = affectreg::ModelKind::ffn;
        } else if (*overrides.model_kind == "ensemble") {
            config.model.kind = affectreg::ModelKind::ensemble;
        } else {
            throw affectreg::UsageError("unknown model kind '" + *overrides.model_kind + "'");
        }
    }
    if (overrides.lexicons) config.lexicons.enabled = *overrides.lexicons;
    return config;
}

void add_override_flags(CLI::App* cmd, Overrides& overrides) {
    cmd->add_option("--seed", overrides.seed, "Override the config seed");
    cmd->add_option("--output-dir", overrides.output_dir, "Override the run output directory");
    cmd->add_option("--epochs", overrides.epochs, "Override the training epoch count");
    cmd->add_option("--learning-rate", overrides.learning_rate,
                    "Override the initial learning rate");
    cmd->add_option("--model-kind", overrides.model_kind, "Override the model kind (ffn|ensemble)");
    cmd->add_flag("--lexicons,!--no-lexicons", overrides.lexicons,
                  "Enable or disable lexicon features");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Affect regression toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides overrides;

    auto* featurize = app.add_subcommand("featurize", "Build feature files for every split");
    featurize->add_option("--config", config_path, "Run config (JSON)")->required();
    add_override_flags(featurize, overrides);

    auto* train = app.add_subcommand("train", "Train models from the feature files");
    train->add_option("--config", config_path, "Run config (JSON)")->required();
    add_override_flags(train, overrides);

    std::string model_dir, input_path, output_path;
    auto* predict = app.add_subcommand("predict", "Write a submission file for raw input");
    predict->add_option("--config", config_path, "Run config (JSON)")->required();
    predict->add_option("--model-dir", model_dir,
                        "Model directory (default <output_dir>/models)");
    predict->add_option("--input", input_path, "Input dataset (TSV)")->required();
    predict->add_option("--output", output_path, "Output predictions file");
    add_override_flags(predict, overrides);

    std::string predictions_path, gold_path, report_dir;
    auto* evaluate = app.add_subcommand("evaluate", "Score predictions against gold data");
    evaluate->add_option("--config", config_path, "Run config (JSON)")->required();
    evaluate->add_option("--predictions", predictions_path, "Predictions file")->required();
    evaluate->add_option("--gold", gold_path, "Gold dataset (TSV)")->required();
    evaluate->add_option("--out", report_dir, "Report directory (default <output_dir>/reports)");
    add_override_flags(evaluate, overrides);

    auto* analyze = app.add_subcommand("analyze", "Emit the error-analysis report");
    analyze->add_option("--config", config_path, "Run config (JSON)")->required();
    analyze->add_option("--predictions", predictions_path, "Predictions file")->required();
    analyze->add_option("--gold", gold_path, "Gold dataset (TSV)")->required();
    analyze->add_option("--out", report_dir, "Report directory (default <output_dir>/reports)");
    add_override_flags(analyze, overrides);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        affectreg::RunConfig config = resolve(config_path, overrides);
        if (featurize->parsed()) {
            affectreg::run_featurize(config);
        } else if (train->parsed()) {
            affectreg::run_train(config);
        } else if (predict->parsed()) {
            config.validate();
            if (output_path.empty()) {
                output_path = config.task == affectreg::Task::primary
                                  ? config.predictions.primary_filename
                                  : config.predictions.adaptation_filename;
            }
            affectreg::run_predict(config, model_dir, input_path, output_path);
        } else {
            config.validate();
            if (report_dir.empty()) report_dir = config.output_dir + "/reports";
            const auto report = evaluate->parsed()
                                    ? affectreg::run_evaluate(config, predictions_path, gold_path,
                                                              report_dir)
                                    : affectreg::run_analyze(config, predictions_path, gold_path,
                                                             report_dir);
            if (report.mean_r) {
                std::printf("mean pearson r: %.3f\n", *report.mean_r);
            } else {
                std::printf("mean pearson r: undefined\n");
            }
            for (const auto& d : report.diagnostics) {
                std::cerr << "diagnostic: " << d << "\n";
            }
            if (!report.diagnostics.empty()) return 2;
        }
        return 0;
    } catch (const affectreg::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const affectreg::ProviderError& e) {
        std::cerr << "provider error: " << e.what() << "\n";
        return 3;
    } catch (const affectreg::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const affectreg::ModelIoError& e) {
        std::cerr << "model file error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
