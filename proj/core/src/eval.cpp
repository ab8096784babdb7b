#include "affectreg/eval.hpp"

#include "affectreg/errors.hpp"
#include "affectreg/tsv.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace affectreg {

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw UsageError("pearson: length mismatch");
    if (x.size() < 2) throw UsageError("pearson: need at least 2 points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

std::optional<double> task_score(const std::vector<std::optional<double>>& per_target) {
    if (per_target.empty()) throw UsageError("task score over zero targets");
    double sum = 0.0;
    for (const auto& r : per_target) {
        if (!r) return std::nullopt;
        sum += *r;
    }
    return sum / static_cast<double>(per_target.size());
}

DeviationStats deviation_report(std::span<const double> gold, std::span<const double> pred) {
    if (gold.size() != pred.size()) throw UsageError("deviation report: length mismatch");
    DeviationStats stats;
    double pos = 0.0, neg = 0.0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const double d = gold[i] - pred[i];
        if (d > 0.0) {
            pos += d;
            ++stats.positive_count;
        } else if (d < 0.0) {
            neg += d;
            ++stats.negative_count;
        }
    }
    if (stats.positive_count > 0) stats.avg_positive = pos / static_cast<double>(stats.positive_count);
    if (stats.negative_count > 0) stats.avg_negative = neg / static_cast<double>(stats.negative_count);
    return stats;
}

std::optional<double> centrality_error_correlation(std::span<const double> gold,
                                                   std::span<const double> pred,
                                                   double scale_midpoint) {
    if (gold.size() != pred.size()) throw UsageError("centrality correlation: length mismatch");
    std::vector<double> distance(gold.size()), error(gold.size());
    for (std::size_t i = 0; i < gold.size(); ++i) {
        distance[i] = std::fabs(gold[i] - scale_midpoint);
        error[i] = std::fabs(gold[i] - pred[i]);
    }
    return pearson(distance, error);
}

Summary distribution_summary(std::span<const double> values) {
    if (values.size() < 2) throw UsageError("distribution summary: need at least 2 values");
    Summary s;
    for (double v : values) s.mean += v;
    s.mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) {
        const double d = v - s.mean;
        var += d * d;
    }
    s.stddev = std::sqrt(var / static_cast<double>(values.size()));
    return s;
}

EvalReport build_report(const std::vector<std::string>& ids,
                        const std::vector<std::string>& target_names,
                        const std::vector<std::vector<double>>& gold,
                        const std::vector<std::vector<double>>& pred,
                        const std::vector<double>& scale_midpoints) {
    if (gold.size() != target_names.size() || pred.size() != target_names.size() ||
        scale_midpoints.size() != target_names.size()) {
        throw UsageError("report: one gold/prediction series and midpoint per target required");
    }
    EvalReport report;
    std::vector<std::optional<double>> rs;
    for (std::size_t t = 0; t < target_names.size(); ++t) {
        const double scale_midpoint = scale_midpoints[t];
        const auto& g = gold[t];
        const auto& p = pred[t];
        if (g.size() != ids.size() || p.size() != ids.size()) {
            throw DataError("report: row count mismatch for target " + target_names[t] + " (gold " +
                            std::to_string(g.size()) + ", predictions " + std::to_string(p.size()) +
                            ", ids " + std::to_string(ids.size()) + ")");
        }
        TargetReport tr;
        tr.target = target_names[t];
        tr.pearson_r = pearson(g, p);
        if (!tr.pearson_r) {
            report.diagnostics.push_back("pearson undefined for target '" + tr.target +
                                         "' (constant input)");
        }
        tr.gold_summary = distribution_summary(g);
        tr.pred_summary = distribution_summary(p);
        tr.deviations = deviation_report(g, p);
        tr.centrality_error_r = centrality_error_correlation(g, p, scale_midpoint);
        if (!tr.centrality_error_r) {
            report.diagnostics.push_back("centrality-error correlation undefined for target '" +
                                         tr.target + "' (constant distance or error vector)");
        }
        tr.samples.reserve(ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            tr.samples.push_back({ids[i], g[i], p[i], std::fabs(g[i] - p[i]),
                                  std::fabs(g[i] - scale_midpoint)});
        }
        rs.push_back(tr.pearson_r);
        report.targets.push_back(std::move(tr));
    }
    report.mean_r = task_score(rs);
    return report;
}

namespace {

std::string fmt3(std::optional<double> v) {
    if (!v) return "undefined";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", *v);
    return buf;
}

std::string opt_str(std::optional<double> v) {
    return v ? format_double(*v) : "none";
}

std::string corr_str(std::optional<double> v) {
    return v ? format_double(*v) : "undefined";
}

} // namespace

std::string render_report_text(const EvalReport& report) {
    std::ostringstream out;
    out << "evaluation report (standard deviations use the population convention, divide by n)\n";
    for (const auto& t : report.targets) {
        out << "\ntarget " << t.target << "\n"
            << "  pearson r:            " << fmt3(t.pearson_r) << "\n"
            << "  gold mean / sd:       " << fmt3(t.gold_summary.mean) << " / "
            << fmt3(t.gold_summary.stddev) << "\n"
            << "  prediction mean / sd: " << fmt3(t.pred_summary.mean) << " / "
            << fmt3(t.pred_summary.stddev) << "\n"
            << "  avg positive deviation: " << fmt3(t.deviations.avg_positive) << " (n="
            << t.deviations.positive_count << ")\n"
            << "  avg negative deviation: " << fmt3(t.deviations.avg_negative) << " (n="
            << t.deviations.negative_count << ")\n"
            << "  centrality-error r:   " << fmt3(t.centrality_error_r) << "\n";
    }
    out << "\nmean pearson r: " << fmt3(report.mean_r) << "\n";
    for (const auto& d : report.diagnostics) {
        out << "diagnostic: " << d << "\n";
    }
    return out.str();
}

void write_report_files(const EvalReport& report, const std::string& directory,
                        const std::string& prefix) {
    namespace fs = std::filesystem;
    fs::create_directories(directory);
    const std::string scores_path = (fs::path(directory) / (prefix + "_scores.tsv")).string();
    const std::string samples_path = (fs::path(directory) / (prefix + "_samples.tsv")).string();

    TsvWriter scores(scores_path);
    scores.write_row({"target", "pearson_r", "gold_mean", "gold_sd", "pred_mean", "pred_sd",
                      "avg_positive_deviation", "avg_negative_deviation", "centrality_error_r"});
    for (const auto& t : report.targets) {
        scores.write_row({t.target, corr_str(t.pearson_r), format_double(t.gold_summary.mean),
                          format_double(t.gold_summary.stddev), format_double(t.pred_summary.mean),
                          format_double(t.pred_summary.stddev), opt_str(t.deviations.avg_positive),
                          opt_str(t.deviations.avg_negative), corr_str(t.centrality_error_r)});
    }
    scores.write_row({"mean", corr_str(report.mean_r), "", "", "", "", "", "", ""});

    TsvWriter samples(samples_path);
    samples.write_row({"target", "id", "gold", "prediction", "absolute_error", "centrality"});
    for (const auto& t : report.targets) {
        for (const auto& s : t.samples) {
            samples.write_row({t.target, s.id, format_double(s.gold), format_double(s.prediction),
                               format_double(s.absolute_error), format_double(s.centrality)});
        }
    }

    std::ofstream md(fs::path(directory) / "reports.md");
    md << "# Report file schemas\n\n"
       << "Standard deviations use the population convention (divide by n).\n"
       << "Undefined correlations are written as the literal `undefined`; a run\n"
       << "that produces one exits with a nonzero status.\n\n"
       << "## `" << prefix << "_scores.tsv`\n\n"
       << "One row per target plus a final `mean` row. Columns: `target`,\n"
       << "`pearson_r`, `gold_mean`, `gold_sd`, `pred_mean`, `pred_sd`,\n"
       << "`avg_positive_deviation` (mean of gold-prediction over rows where gold\n"
       << "exceeds the prediction; `none` when the class is empty),\n"
       << "`avg_negative_deviation` (same for gold below the prediction),\n"
       << "`centrality_error_r` (correlation of |gold - scale midpoint| with\n"
       << "|gold - prediction|).\n\n"
       << "## `" << prefix << "_samples.tsv`\n\n"
       << "One row per (target, sample). Columns: `target`, `id`, `gold`,\n"
       << "`prediction`, `absolute_error`, `centrality`. Every number in the\n"
       << "scores file is recomputable from this table.\n";
}

} // namespace affectreg
