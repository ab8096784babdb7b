#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace affectreg {

// 48 word-level features from four lexical resources:
//   emotion-association counts and ratios (20), subjectivity counts and
//   ratios (24), valence/arousal/dominance means (3), shifter count (1).
inline constexpr std::size_t kLexiconFeatureCount = 48;
inline constexpr int kLexiconSchemaVersion = 1;

// Emotion-association categories, count order = ratio order.
inline constexpr std::array<std::string_view, 10> kNrcCategories = {
    "anger", "anticipation", "disgust", "fear", "joy",
    "sadness", "surprise", "trust", "positive", "negative"};

enum class MpqaSubjectivity : std::uint8_t { strong, weak };
enum class MpqaPolarity : std::uint8_t { positive, negative, neutral, both };
enum class MpqaPos : std::uint8_t { adj, adverb, noun, verb, anypos };

struct MpqaEntry {
    MpqaSubjectivity subjectivity;
    MpqaPolarity polarity;
    MpqaPos pos;
};

struct VadScores {
    double valence = 0.0;
    double arousal = 0.0;
    double dominance = 0.0;
};

// The four resources, immutable after load and shareable across threads.
class LexiconSet {
public:
    // Loads from each resource's published distribution format; blank lines
    // and '#' comments are tolerated. Logs entry counts to stderr and fails
    // on an empty resource.
    static LexiconSet load(const std::string& nrc_path, const std::string& mpqa_path,
                           const std::string& vad_path, const std::string& shifter_path);

    // Bitmask over kNrcCategories; 0 when the word is absent.
    std::uint16_t nrc(const std::string& word) const;
    const MpqaEntry* mpqa(const std::string& word) const;
    const VadScores* vad(const std::string& word) const;
    // True only for words annotated as shifters (the resource also lists
    // non-shifter lemmas).
    bool is_shifter(const std::string& word) const;

    // Membership in any resource, including non-shifter entries; this is the
    // lemmatizer's confirmation test.
    bool contains(const std::string& word) const;

    std::size_t nrc_size() const { return nrc_.size(); }
    std::size_t mpqa_size() const { return mpqa_.size(); }
    std::size_t vad_size() const { return vad_.size(); }
    std::size_t shifter_size() const { return shifters_.size(); }

private:
    std::unordered_map<std::string, std::uint16_t> nrc_;
    std::unordered_map<std::string, MpqaEntry> mpqa_;
    std::unordered_map<std::string, VadScores> vad_;
    std::unordered_map<std::string, bool> shifters_;
};

// Lowercased word tokens; any non-alphanumeric ASCII byte separates tokens,
// so contractions split on the apostrophe. Bytes >= 0x80 are kept so UTF-8
// words survive intact.
std::vector<std::string> tokenize(std::string_view text);

// Rule-based suffix stripping (-s/-es, -ing, -ed, with consonant-doubling
// undo) confirmed by lexicon membership; returns the token unchanged when no
// stripped form is found in any resource.
std::string lemmatize(const std::string& token, const LexiconSet& lex);

std::vector<std::string> lemmatize_all(const std::vector<std::string>& tokens,
                                       const LexiconSet& lex);

// Individual extractors; inputs are lemmatized tokens, ratios are normalized
// by token count and are zero for empty input.
std::array<double, 20> extract_nrc(const std::vector<std::string>& lemmas, const LexiconSet& lex);
std::array<double, 24> extract_mpqa(const std::vector<std::string>& lemmas, const LexiconSet& lex);
std::array<double, 3> extract_vad(const std::vector<std::string>& lemmas, const LexiconSet& lex);
double extract_shifters(const std::vector<std::string>& lemmas, const LexiconSet& lex);

struct LexFeatureVector {
    std::array<double, kLexiconFeatureCount> values{};
    int schema_version = kLexiconSchemaVersion;
};

// tokenize + lemmatize + all four extractors, concatenated in schema order.
LexFeatureVector extract_all(std::string_view text, const LexiconSet& lex);

// Feature names in schema order, one per vector slot.
const std::array<std::string, kLexiconFeatureCount>& lexicon_feature_names();

// Markdown description of the 48-column schema (emitted as features.md).
std::string lexicon_schema_markdown();

// Per-feature standardizer fitted on training vectors only: z-score against
// the training mean and population standard deviation (clamped to >= 1e-8),
// then clamped to [-3, 3] and mapped affinely onto [-1, 1].
class FeatureScaler {
public:
    FeatureScaler() = default;
    FeatureScaler(std::vector<double> mean, std::vector<double> stddev);

    static FeatureScaler fit(const std::vector<std::vector<double>>& train_rows);

    std::vector<double> apply(std::span<const double> values) const;

    std::size_t dimension() const { return mean_.size(); }
    const std::vector<double>& mean() const { return mean_; }
    const std::vector<double>& stddev() const { return stddev_; }

    void save_tsv(const std::string& path) const;
    static FeatureScaler load_tsv(const std::string& path);

private:
    std::vector<double> mean_;
    std::vector<double> stddev_;
};

} // namespace affectreg
