#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace affectreg {

// Product-moment correlation. Undefined (nullopt) when either input is
// constant; callers surface that explicitly instead of folding it to 0.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

// Arithmetic mean of per-target correlations; nullopt when any input is
// undefined so a missing correlation can never inflate the task score.
std::optional<double> task_score(const std::vector<std::optional<double>>& per_target);

struct DeviationStats {
    std::optional<double> avg_positive; // mean of gold - pred over gold > pred
    std::optional<double> avg_negative; // mean of gold - pred over gold < pred
    std::size_t positive_count = 0;
    std::size_t negative_count = 0;
};

DeviationStats deviation_report(std::span<const double> gold, std::span<const double> pred);

// Pearson between |gold - midpoint| and |gold - pred|.
std::optional<double> centrality_error_correlation(std::span<const double> gold,
                                                   std::span<const double> pred,
                                                   double scale_midpoint);

struct Summary {
    double mean = 0.0;
    double stddev = 0.0; // population convention (divide by n)
};

Summary distribution_summary(std::span<const double> values);

struct SampleRow {
    std::string id;
    double gold = 0.0;
    double prediction = 0.0;
    double absolute_error = 0.0;
    double centrality = 0.0; // |gold - scale midpoint|
};

struct TargetReport {
    std::string target;
    std::optional<double> pearson_r;
    Summary gold_summary;
    Summary pred_summary;
    DeviationStats deviations;
    std::optional<double> centrality_error_r;
    std::vector<SampleRow> samples;
};

struct EvalReport {
    std::vector<TargetReport> targets;
    std::optional<double> mean_r;
    std::vector<std::string> diagnostics; // one line per undefined correlation
};

// scale_midpoints holds one midpoint per target (targets may live on
// different scales).
EvalReport build_report(const std::vector<std::string>& ids,
                        const std::vector<std::string>& target_names,
                        const std::vector<std::vector<double>>& gold,
                        const std::vector<std::vector<double>>& pred,
                        const std::vector<double>& scale_midpoints);

// Human-readable report; states the standard-deviation convention.
std::string render_report_text(const EvalReport& report);

// Machine-readable emission: <prefix>_scores.tsv and <prefix>_samples.tsv,
// plus reports.md documenting the two schemas.
void write_report_files(const EvalReport& report, const std::string& directory,
                        const std::string& prefix);

} // namespace affectreg
