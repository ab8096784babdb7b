#include "affectreg/corpus.hpp"

#include "affectreg/errors.hpp"
#include "affectreg/rng.hpp"
#include "affectreg/tsv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <map>
#include <set>

namespace affectreg {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_gold(const std::string& raw, ValueScale scale, const std::string& column,
                  const std::string& path, std::size_t row) {
    const std::string value = trim(raw);
    char* end = nullptr;
    double v = std::strtod(value.c_str(), &end);
    if (value.empty() || end != value.c_str() + value.size() || !std::isfinite(v)) {
        throw DataError(path + ": row " + std::to_string(row) + ": non-numeric value '" + raw +
                        "' in column '" + column + "'");
    }
    if (v < scale.min || v > scale.max) {
        throw DataError(path + ": row " + std::to_string(row) + ": value " + format_double(v) +
                        " in column '" + column + "' outside [" + format_double(scale.min) + ", " +
                        format_double(scale.max) + "]");
    }
    return v;
}

std::size_t require_column(const TsvReader& reader, const std::string& name) {
    auto idx = reader.column(name);
    if (!idx) {
        throw DataError(reader.path() + ": missing required column '" + name + "'");
    }
    return *idx;
}

std::string field_or_empty(const std::vector<std::string>& row, std::size_t idx) {
    return idx < row.size() ? row[idx] : std::string{};
}

} // namespace

std::vector<EssaySample> parse_essays(const std::string& path, bool has_gold,
                                      const EssayColumns& columns) {
    TsvReader reader(path);
    const std::size_t essay_idx = require_column(reader, columns.essay);
    const auto id_idx = reader.column(columns.id);
    std::size_t empathy_idx = 0, distress_idx = 0;
    if (has_gold) {
        empathy_idx = require_column(reader, columns.empathy);
        distress_idx = require_column(reader, columns.distress);
    }

    std::vector<EssaySample> samples;
    std::vector<std::string> row;
    while (reader.next(row)) {
        const std::size_t line = reader.line_number();
        EssaySample sample;
        sample.id = id_idx ? field_or_empty(row, *id_idx) : std::to_string(samples.size() + 1);
        sample.essay = field_or_empty(row, essay_idx);
        if (trim(sample.essay).empty()) {
            throw DataError(path + ": row " + std::to_string(line) + ": empty essay text");
        }
        if (has_gold) {
            sample.empathy = parse_gold(field_or_empty(row, empathy_idx), kEssayScale,
                                        columns.empathy, path, line);
            sample.distress = parse_gold(field_or_empty(row, distress_idx), kEssayScale,
                                         columns.distress, path, line);
        }
        samples.push_back(std::move(sample));
    }
    return samples;
}

std::vector<TurnSample> parse_turns(const std::string& path, bool has_gold,
                                    const TurnColumns& columns) {
    TsvReader reader(path);
    const std::size_t conv_idx = require_column(reader, columns.conversation_id);
    const std::size_t turn_idx = require_column(reader, columns.turn_id);
    const std::size_t speaker_idx = require_column(reader, columns.speaker_id);
    const std::size_t text_idx = require_column(reader, columns.text);
    const auto essay_idx = reader.column(columns.essay);
    std::size_t empathy_idx = 0, polarity_idx = 0, intensity_idx = 0;
    if (has_gold) {
        empathy_idx = require_column(reader, columns.empathy);
        polarity_idx = require_column(reader, columns.emotion_polarity);
        intensity_idx = require_column(reader, columns.emotion_intensity);
    }

    std::vector<TurnSample> turns;
    std::set<std::pair<std::string, int>> seen;
    std::vector<std::string> row;
    while (reader.next(row)) {
        const std::size_t line = reader.line_number();
        TurnSample turn;
        turn.conversation_id = field_or_empty(row, conv_idx);
        const std::string turn_field = trim(field_or_empty(row, turn_idx));
        char* end = nullptr;
        long index = std::strtol(turn_field.c_str(), &end, 10);
        if (turn_field.empty() || end != turn_field.c_str() + turn_field.size() || index < 0) {
            throw DataError(path + ": row " + std::to_string(line) +
                            ": invalid turn index '" + turn_field + "'");
        }
        turn.turn_index = static_cast<int>(index);
        if (!seen.emplace(turn.conversation_id, turn.turn_index).second) {
            throw DataError(path + ": row " + std::to_string(line) + ": duplicate turn " +
                            std::to_string(turn.turn_index) + " in conversation '" +
                            turn.conversation_id + "'");
        }
        turn.speaker_id = field_or_empty(row, speaker_idx);
        turn.text = field_or_empty(row, text_idx);
        turn.file_index = turns.size();
        if (essay_idx) turn.essay_text = field_or_empty(row, *essay_idx);
        if (has_gold) {
            turn.empathy = parse_gold(field_or_empty(row, empathy_idx), kTurnEmpathyScale,
                                      columns.empathy, path, line);
            turn.emotion_polarity = parse_gold(field_or_empty(row, polarity_idx), kPolarityScale,
                                               columns.emotion_polarity, path, line);
            turn.emotion_intensity = parse_gold(field_or_empty(row, intensity_idx), kIntensityScale,
                                                columns.emotion_intensity, path, line);
        }
        turns.push_back(std::move(turn));
    }

    std::stable_sort(turns.begin(), turns.end(), [](const TurnSample& a, const TurnSample& b) {
        if (a.conversation_id != b.conversation_id) return a.conversation_id < b.conversation_id;
        return a.turn_index < b.turn_index;
    });
    return turns;
}

void write_essays(const std::string& path, const std::vector<EssaySample>& samples,
                  const EssayColumns& columns) {
    TsvWriter writer(path);
    writer.write_row({columns.id, columns.essay, columns.empathy, columns.distress});
    for (const auto& s : samples) {
        writer.write_row({s.id, s.essay, s.empathy ? format_double(*s.empathy) : "",
                          s.distress ? format_double(*s.distress) : ""});
    }
}

void write_turns(const std::string& path, const std::vector<TurnSample>& samples,
                 const TurnColumns& columns) {
    TsvWriter writer(path);
    writer.write_row({columns.conversation_id, columns.turn_id, columns.speaker_id, columns.text,
                      columns.essay, columns.empathy, columns.emotion_polarity,
                      columns.emotion_intensity});
    for (const auto& t : samples) {
        writer.write_row({t.conversation_id, std::to_string(t.turn_index), t.speaker_id, t.text,
                          t.essay_text, t.empathy ? format_double(*t.empathy) : "",
                          t.emotion_polarity ? format_double(*t.emotion_polarity) : "",
                          t.emotion_intensity ? format_double(*t.emotion_intensity) : ""});
    }
}

int bin_target(double value, ValueScale scale, double bin_width) {
    if (bin_width <= 0.0) {
        throw UsageError("bin width must be positive");
    }
    if (value < scale.min || value > scale.max) {
        throw DataError("value " + format_double(value) + " outside scale [" +
                        format_double(scale.min) + ", " + format_double(scale.max) + "]");
    }
    const int last = bin_count(scale, bin_width) - 1;
    int idx = static_cast<int>(std::floor((value - scale.min) / bin_width));
    return std::min(idx, last);
}

int bin_count(ValueScale scale, double bin_width) {
    return std::max(1, static_cast<int>(std::ceil((scale.max - scale.min) / bin_width - 1e-12)));
}

SplitIndices stratified_split_indices(std::size_t sample_count, const std::vector<double>& gold,
                                      ValueScale scale, const SplitSpec& spec) {
    if (spec.validation_fraction <= 0.0 || spec.validation_fraction >= 1.0) {
        throw UsageError("validation fraction must lie in (0, 1)");
    }
    const bool stratify = !gold.empty();
    if (stratify && gold.size() != sample_count) {
        throw DataError("stratification requested but gold values cover " +
                        std::to_string(gold.size()) + " of " + std::to_string(sample_count) +
                        " samples");
    }

    Rng rng(spec.seed);
    SplitIndices out;
    if (sample_count == 0) return out;

    std::size_t total_validation = static_cast<std::size_t>(
        std::llround(spec.validation_fraction * static_cast<double>(sample_count)));
    total_validation = std::min(total_validation, sample_count - 1);

    if (!stratify) {
        std::vector<std::size_t> order(sample_count);
        for (std::size_t i = 0; i < sample_count; ++i) order[i] = i;
        rng.shuffle(order);
        out.validation.assign(order.begin(), order.begin() + total_validation);
        out.train.assign(order.begin() + total_validation, order.end());
        std::sort(out.train.begin(), out.train.end());
        std::sort(out.validation.begin(), out.validation.end());
        return out;
    }

    // Group indices by bin; map keeps bin order deterministic.
    std::map<int, std::vector<std::size_t>> bins;
    for (std::size_t i = 0; i < sample_count; ++i) {
        bins[bin_target(gold[i], scale, spec.bin_width)].push_back(i);
    }

    // Validation quota per bin by largest remainder so that each bin's train
    // proportion lands within one sample of its overall proportion.
    struct BinAlloc {
        int bin;
        std::size_t size;
        std::size_t quota;
        double remainder;
    };
    std::vector<BinAlloc> allocs;
    std::size_t assigned = 0;
    for (const auto& [bin, members] : bins) {
        if (members.size() == 1) {
            std::cerr << "warning: bin " << bin
                      << " has a single member; assigning it to train\n";
            allocs.push_back({bin, members.size(), 0, -1.0});
            continue;
        }
        double exact = static_cast<double>(total_validation) * static_cast<double>(members.size()) /
                       static_cast<double>(sample_count);
        auto quota = static_cast<std::size_t>(std::floor(exact));
        quota = std::min(quota, members.size() - 1);
        allocs.push_back({bin, members.size(), quota, exact - std::floor(exact)});
        assigned += quota;
    }
    std::vector<std::size_t> order(allocs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (allocs[a].remainder != allocs[b].remainder) {
            return allocs[a].remainder > allocs[b].remainder;
        }
        return allocs[a].bin < allocs[b].bin;
    });
    for (std::size_t k = 0; assigned < total_validation && k < order.size(); ++k) {
        BinAlloc& alloc = allocs[order[k]];
        if (alloc.size >= 2 && alloc.quota < alloc.size - 1) {
            ++alloc.quota;
            ++assigned;
        }
    }

    for (const auto& alloc : allocs) {
        std::vector<std::size_t> members = bins[alloc.bin];
        rng.shuffle(members);
        for (std::size_t i = 0; i < members.size(); ++i) {
            (i < alloc.quota ? out.validation : out.train).push_back(members[i]);
        }
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.validation.begin(), out.validation.end());
    return out;
}

std::pair<std::vector<EssaySample>, std::vector<EssaySample>>
stratified_split(const std::vector<EssaySample>& samples, const SplitSpec& spec) {
    std::vector<double> gold;
    if (spec.stratify_target != StratifyTarget::none) {
        gold.reserve(samples.size());
        for (const auto& s : samples) {
            const auto& value = spec.stratify_target == StratifyTarget::empathy ? s.empathy : s.distress;
            if (!value) {
                throw DataError("stratified split requested but sample '" + s.id +
                                "' has no gold value for the stratify target");
            }
            gold.push_back(*value);
        }
    }
    SplitIndices idx = stratified_split_indices(samples.size(), gold, kEssayScale, spec);
    std::pair<std::vector<EssaySample>, std::vector<EssaySample>> result;
    result.first.reserve(idx.train.size());
    result.second.reserve(idx.validation.size());
    for (std::size_t i : idx.train) result.first.push_back(samples[i]);
    for (std::size_t i : idx.validation) result.second.push_back(samples[i]);
    return result;
}

} // namespace affectreg
