#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace affectreg {

// Closed value range of a regression target.
struct ValueScale {
    double min;
    double max;
    double midpoint() const { return 0.5 * (min + max); }
};

// Essay-level empathy and distress are annotated on 1-7; turn-level targets
// use 0-5 (empathy, intensity) and 0-2 (polarity).
inline constexpr ValueScale kEssayScale{1.0, 7.0};
inline constexpr ValueScale kTurnEmpathyScale{0.0, 5.0};
inline constexpr ValueScale kPolarityScale{0.0, 2.0};
inline constexpr ValueScale kIntensityScale{0.0, 5.0};

struct EssaySample {
    std::string id;
    std::string essay;
    std::optional<double> empathy;
    std::optional<double> distress;
};

struct TurnSample {
    std::string conversation_id;
    int turn_index = 0;
    std::string speaker_id;
    std::string text;
    std::string essay_text; // the speaker's essay; may be empty when the file lacks the column
    std::optional<double> empathy;
    std::optional<double> emotion_polarity;
    std::optional<double> emotion_intensity;
    // Zero-based position of the row in the source file, kept through the
    // conversation sort so submissions can be written back in file order.
    std::size_t file_index = 0;
};

// Column-name mapping; shared-task files rename headers between years, so
// the run config can override any of these.
struct EssayColumns {
    std::string id = "id"; // row number is used when this column is absent
    std::string essay = "essay";
    std::string empathy = "empathy";
    std::string distress = "distress";
};

struct TurnColumns {
    std::string conversation_id = "conversation_id";
    std::string turn_id = "turn_id";
    std::string speaker_id = "speaker_id";
    std::string text = "text";
    std::string essay = "essay"; // optional column
    std::string empathy = "empathy";
    std::string emotion_polarity = "emotion_polarity";
    std::string emotion_intensity = "emotion_intensity";
};

// Parses a tab-separated essay dataset with a header row. When has_gold is
// set the empathy/distress columns are required and range-checked against
// the 1-7 scale; parse failures carry 1-based row numbers.
std::vector<EssaySample> parse_essays(const std::string& path, bool has_gold,
                                      const EssayColumns& columns = {});

// Parses a turn-level dataset; result is sorted by (conversation_id,
// turn_index) and duplicate turn indices within a conversation are an error.
std::vector<TurnSample> parse_turns(const std::string& path, bool has_gold,
                                    const TurnColumns& columns = {});

void write_essays(const std::string& path, const std::vector<EssaySample>& samples,
                  const EssayColumns& columns = {});
void write_turns(const std::string& path, const std::vector<TurnSample>& samples,
                 const TurnColumns& columns = {});

enum class StratifyTarget { empathy, distress, none };

struct SplitSpec {
    double validation_fraction = 0.2;
    std::uint64_t seed = 0;
    StratifyTarget stratify_target = StratifyTarget::none;
    double bin_width = 1.0;
};

// Bin index for a continuous target: floor((value - min) / width), with the
// top edge folded into the last bin. Values outside the scale are an error.
int bin_target(double value, ValueScale scale, double bin_width);

int bin_count(ValueScale scale, double bin_width);

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

// Seeded stratified partition of sample indices. gold must be empty for an
// unstratified split, else one value per sample. Validation counts are
// apportioned per bin by largest remainder, so every bin's train share stays
// within one sample of its share in the full set. Bins with a single member
// go to train with a warning on stderr.
SplitIndices stratified_split_indices(std::size_t sample_count, const std::vector<double>& gold,
                                      ValueScale scale, const SplitSpec& spec);

// Convenience wrapper selecting the gold target named by spec.stratify_target.
std::pair<std::vector<EssaySample>, std::vector<EssaySample>>
stratified_split(const std::vector<EssaySample>& samples, const SplitSpec& spec);

} // namespace affectreg
