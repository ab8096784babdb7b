#include "affectreg/lexicon.hpp"

#include "affectreg/errors.hpp"
#include "affectreg/tsv.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace affectreg {

namespace {

bool is_comment_or_blank(const std::string& line) {
    for (char c : line) {
        if (c == '#') return true;
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open lexicon file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

std::string lower_ascii(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

int nrc_category_index(const std::string& name) {
    for (std::size_t i = 0; i < kNrcCategories.size(); ++i) {
        if (name == kNrcCategories[i]) return static_cast<int>(i);
    }
    return -1;
}

bool parse_double(const std::string& s, double& out) {
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return !s.empty() && end == s.c_str() + s.size() && std::isfinite(out);
}

std::vector<std::string> split_whitespace(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream iss(line);
    std::string tok;
    while (iss >> tok) out.push_back(tok);
    return out;
}

} // namespace

LexiconSet LexiconSet::load(const std::string& nrc_path, const std::string& mpqa_path,
                            const std::string& vad_path, const std::string& shifter_path) {
    LexiconSet lex;

    // Emotion associations: word <TAB> category <TAB> 0|1, one row per pair.
    // Zero-flag words stay in the vocabulary so membership counts match the
    // published size.
    for (const auto& line : read_lines(nrc_path)) {
        if (is_comment_or_blank(line)) continue;
        auto fields = split_tab(line);
        if (fields.size() != 3) continue;
        int cat = nrc_category_index(lower_ascii(fields[1]));
        if (cat < 0) continue;
        auto& mask = lex.nrc_[lower_ascii(fields[0])];
        if (fields[2] == "1") mask |= static_cast<std::uint16_t>(1u << cat);
    }

    // Subjectivity clues: key=value lines, e.g.
    // type=strongsubj len=1 word1=abject pos1=adj stemmed1=n priorpolarity=negative
    std::size_t mpqa_skipped = 0;
    for (const auto& line : read_lines(mpqa_path)) {
        if (is_comment_or_blank(line)) continue;
        std::string word;
        std::optional<MpqaSubjectivity> subjectivity;
        std::optional<MpqaPolarity> polarity;
        MpqaPos pos = MpqaPos::anypos;
        for (const auto& token : split_whitespace(line)) {
            auto eq = token.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = token.substr(0, eq);
            const std::string value = lower_ascii(token.substr(eq + 1));
            if (key == "word1") {
                word = value;
            } else if (key == "type") {
                if (value == "strongsubj") subjectivity = MpqaSubjectivity::strong;
                else if (value == "weaksubj") subjectivity = MpqaSubjectivity::weak;
            } else if (key == "pos1") {
                if (value == "adj") pos = MpqaPos::adj;
                else if (value == "adverb") pos = MpqaPos::adverb;
                else if (value == "noun") pos = MpqaPos::noun;
                else if (value == "verb") pos = MpqaPos::verb;
                else pos = MpqaPos::anypos;
            } else if (key == "priorpolarity") {
                if (value == "positive") polarity = MpqaPolarity::positive;
                else if (value == "negative") polarity = MpqaPolarity::negative;
                else if (value == "neutral") polarity = MpqaPolarity::neutral;
                else if (value == "both") polarity = MpqaPolarity::both;
            }
        }
        if (word.empty() || !subjectivity || !polarity) {
            ++mpqa_skipped;
            continue;
        }
        MpqaEntry entry{*subjectivity, *polarity, pos};
        auto [it, inserted] = lex.mpqa_.emplace(word, entry);
        if (!inserted) {
            // Multi-entry words resolve to the anypos entry when one exists,
            // otherwise the first entry in file order.
            std::cerr << "note: multiple subjectivity entries for '" << word << "'\n";
            if (it->second.pos != MpqaPos::anypos && entry.pos == MpqaPos::anypos) {
                it->second = entry;
            }
        }
    }
    if (mpqa_skipped > 0) {
        std::cerr << "warning: skipped " << mpqa_skipped << " unparseable lines in " << mpqa_path
                  << "\n";
    }

    // Valence/arousal/dominance: word <TAB> V <TAB> A <TAB> D in [0,1].
    // A non-numeric first row is treated as a header.
    bool vad_first = true;
    for (const auto& line : read_lines(vad_path)) {
        if (is_comment_or_blank(line)) continue;
        auto fields = split_tab(line);
        if (fields.size() < 4) continue;
        VadScores scores;
        if (!parse_double(fields[1], scores.valence) || !parse_double(fields[2], scores.arousal) ||
            !parse_double(fields[3], scores.dominance)) {
            if (vad_first) {
                vad_first = false;
                continue;
            }
            throw DataError(vad_path + ": non-numeric scores for '" + fields[0] + "'");
        }
        vad_first = false;
        for (double v : {scores.valence, scores.arousal, scores.dominance}) {
            if (v < 0.0 || v > 1.0) {
                throw DataError(vad_path + ": score outside [0,1] for '" + fields[0] + "'");
            }
        }
        lex.vad_[lower_ascii(fields[0])] = scores;
    }

    // Polarity shifters: lemma [label]; a bare lemma means shifter.
    for (const auto& line : read_lines(shifter_path)) {
        if (is_comment_or_blank(line)) continue;
        auto fields = split_whitespace(line);
        if (fields.empty()) continue;
        bool shifter = true;
        if (fields.size() >= 2) {
            const std::string label = lower_ascii(fields[1]);
            if (label == "shifter" || label == "1" || label == "y" || label == "yes" ||
                label == "true") {
                shifter = true;
            } else if (label == "nonshifter" || label == "0" || label == "n" || label == "no" ||
                       label == "false") {
                shifter = false;
            } else {
                throw DataError(shifter_path + ": unknown shifter label '" + fields[1] + "'");
            }
        }
        lex.shifters_[lower_ascii(fields[0])] = shifter;
    }

    if (lex.nrc_.empty() || lex.mpqa_.empty() || lex.vad_.empty() || lex.shifters_.empty()) {
        throw DataError("one or more lexicon resources loaded empty");
    }
    std::cerr << "loaded lexicons: emotion=" << lex.nrc_.size() << " subjectivity="
              << lex.mpqa_.size() << " vad=" << lex.vad_.size() << " shifters="
              << lex.shifters_.size() << "\n";
    return lex;
}

std::uint16_t LexiconSet::nrc(const std::string& word) const {
    auto it = nrc_.find(word);
    return it == nrc_.end() ? 0 : it->second;
}

const MpqaEntry* LexiconSet::mpqa(const std::string& word) const {
    auto it = mpqa_.find(word);
    return it == mpqa_.end() ? nullptr : &it->second;
}

const VadScores* LexiconSet::vad(const std::string& word) const {
    auto it = vad_.find(word);
    return it == vad_.end() ? nullptr : &it->second;
}

bool LexiconSet::is_shifter(const std::string& word) const {
    auto it = shifters_.find(word);
    return it != shifters_.end() && it->second;
}

bool LexiconSet::contains(const std::string& word) const {
    return nrc_.count(word) || mpqa_.count(word) || vad_.count(word) || shifters_.count(word);
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        if (std::isalnum(c) || c >= 0x80) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

namespace {

bool is_vowel(char c) {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

bool ends_with(const std::string& s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void push_with_undoubling(std::vector<std::string>& out, std::string base) {
    // Plain strip first, then the consonant-doubling undo: "running" ->
    // "runn" -> "run".
    const bool doubled = base.size() >= 3 && base[base.size() - 1] == base[base.size() - 2] &&
                         std::isalpha(static_cast<unsigned char>(base.back())) &&
                         !is_vowel(base.back());
    std::string undoubled = doubled ? base.substr(0, base.size() - 1) : std::string{};
    out.push_back(std::move(base));
    if (doubled) out.push_back(std::move(undoubled));
}

std::vector<std::string> lemma_candidates(const std::string& token) {
    std::vector<std::string> out;
    if (ends_with(token, "es") && token.size() >= 4) {
        out.push_back(token.substr(0, token.size() - 2));
    }
    if (ends_with(token, "s") && !ends_with(token, "ss") && token.size() >= 3) {
        out.push_back(token.substr(0, token.size() - 1));
    }
    if (ends_with(token, "ing") && token.size() >= 5) {
        push_with_undoubling(out, token.substr(0, token.size() - 3));
    }
    if (ends_with(token, "ed") && token.size() >= 4) {
        push_with_undoubling(out, token.substr(0, token.size() - 2));
    }
    return out;
}

} // namespace

std::string lemmatize(const std::string& token, const LexiconSet& lex) {
    if (lex.contains(token)) return token;
    for (const auto& candidate : lemma_candidates(token)) {
        if (lex.contains(candidate)) return candidate;
    }
    return token;
}

std::vector<std::string> lemmatize_all(const std::vector<std::string>& tokens,
                                       const LexiconSet& lex) {
    std::vector<std::string> lemmas;
    lemmas.reserve(tokens.size());
    for (const auto& t : tokens) lemmas.push_back(lemmatize(t, lex));
    return lemmas;
}

std::array<double, 20> extract_nrc(const std::vector<std::string>& lemmas, const LexiconSet& lex) {
    std::array<double, 20> out{};
    for (const auto& lemma : lemmas) {
        std::uint16_t mask = lex.nrc(lemma);
        for (std::size_t cat = 0; cat < 10; ++cat) {
            if (mask & (1u << cat)) out[cat] += 1.0;
        }
    }
    if (!lemmas.empty()) {
        const double n = static_cast<double>(lemmas.size());
        for (std::size_t cat = 0; cat < 10; ++cat) out[10 + cat] = out[cat] / n;
    }
    return out;
}

std::array<double, 24> extract_mpqa(const std::vector<std::string>& lemmas, const LexiconSet& lex) {
    std::array<double, 24> out{};
    for (const auto& lemma : lemmas) {
        const MpqaEntry* entry = lex.mpqa(lemma);
        if (!entry) continue;
        out[static_cast<std::size_t>(entry->subjectivity)] += 1.0;       // strong=0, weak=1
        out[2 + static_cast<std::size_t>(entry->polarity)] += 1.0;       // positive..both = 2..5
        out[6 + static_cast<std::size_t>(entry->pos)] += 1.0;            // adj..anypos = 6..10
        out[11] += 1.0;                                                  // any hit
    }
    if (!lemmas.empty()) {
        const double n = static_cast<double>(lemmas.size());
        for (std::size_t cat = 0; cat < 12; ++cat) out[12 + cat] = out[cat] / n;
    }
    return out;
}

std::array<double, 3> extract_vad(const std::vector<std::string>& lemmas, const LexiconSet& lex) {
    std::array<double, 3> sum{};
    std::size_t hits = 0;
    for (const auto& lemma : lemmas) {
        const VadScores* scores = lex.vad(lemma);
        if (!scores) continue;
        sum[0] += scores->valence;
        sum[1] += scores->arousal;
        sum[2] += scores->dominance;
        ++hits;
    }
    if (hits == 0) return {0.0, 0.0, 0.0};
    return {sum[0] / hits, sum[1] / hits, sum[2] / hits};
}

double extract_shifters(const std::vector<std::string>& lemmas, const LexiconSet& lex) {
    double count = 0.0;
    for (const auto& lemma : lemmas) {
        if (lex.is_shifter(lemma)) count += 1.0;
    }
    return count;
}

LexFeatureVector extract_all(std::string_view text, const LexiconSet& lex) {
    const auto lemmas = lemmatize_all(tokenize(text), lex);
    LexFeatureVector v;
    const auto nrc = extract_nrc(lemmas, lex);
    const auto mpqa = extract_mpqa(lemmas, lex);
    const auto vad = extract_vad(lemmas, lex);
    std::size_t k = 0;
    for (double x : nrc) v.values[k++] = x;
    for (double x : mpqa) v.values[k++] = x;
    for (double x : vad) v.values[k++] = x;
    v.values[k++] = extract_shifters(lemmas, lex);
    return v;
}

const std::array<std::string, kLexiconFeatureCount>& lexicon_feature_names() {
    static const std::array<std::string, kLexiconFeatureCount> names = [] {
        std::array<std::string, kLexiconFeatureCount> out;
        std::size_t k = 0;
        for (auto cat : kNrcCategories) out[k++] = "nrc_count_" + std::string(cat);
        for (auto cat : kNrcCategories) out[k++] = "nrc_ratio_" + std::string(cat);
        static constexpr std::array<std::string_view, 12> mpqa = {
            "strong", "weak", "positive", "negative", "neutral", "both",
            "adj", "adverb", "noun", "verb", "anypos", "any"};
        for (auto cat : mpqa) out[k++] = "mpqa_count_" + std::string(cat);
        for (auto cat : mpqa) out[k++] = "mpqa_ratio_" + std::string(cat);
        out[k++] = "vad_mean_valence";
        out[k++] = "vad_mean_arousal";
        out[k++] = "vad_mean_dominance";
        out[k++] = "shifter_count";
        return out;
    }();
    return names;
}

std::string lexicon_schema_markdown() {
    std::ostringstream md;
    md << "# Lexicon feature schema (version " << kLexiconSchemaVersion << ")\n\n"
       << "48 word-level features extracted per text, in column order:\n\n"
       << "- 10 emotion-association counts and 10 ratios (count / token count)\n"
       << "- 12 subjectivity counts and 12 ratios: subjectivity strength, prior\n"
       << "  polarity, part of speech, and an any-hit marker\n"
       << "- mean valence, arousal, and dominance over matched words (0 when no\n"
       << "  word matches)\n"
       << "- count of polarity-shifter words\n\n"
       << "| # | name |\n|---|------|\n";
    const auto& names = lexicon_feature_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        md << "| " << i << " | " << names[i] << " |\n";
    }
    return md.str();
}

FeatureScaler::FeatureScaler(std::vector<double> mean, std::vector<double> stddev)
    : mean_(std::move(mean)), stddev_(std::move(stddev)) {
    if (mean_.size() != stddev_.size()) {
        throw UsageError("scaler mean/stddev dimension mismatch");
    }
    for (double& s : stddev_) s = std::max(s, 1e-8);
}

FeatureScaler FeatureScaler::fit(const std::vector<std::vector<double>>& train_rows) {
    if (train_rows.size() < 2) {
        throw DataError("scaler fit requires at least 2 training vectors");
    }
    const std::size_t dim = train_rows.front().size();
    std::vector<double> mean(dim, 0.0), var(dim, 0.0);
    for (const auto& row : train_rows) {
        if (row.size() != dim) throw DataError("scaler fit on ragged vectors");
        for (std::size_t j = 0; j < dim; ++j) mean[j] += row[j];
    }
    const double n = static_cast<double>(train_rows.size());
    for (double& m : mean) m /= n;
    for (const auto& row : train_rows) {
        for (std::size_t j = 0; j < dim; ++j) {
            const double d = row[j] - mean[j];
            var[j] += d * d;
        }
    }
    std::vector<double> stddev(dim);
    for (std::size_t j = 0; j < dim; ++j) stddev[j] = std::sqrt(var[j] / n);
    return FeatureScaler(std::move(mean), std::move(stddev));
}

std::vector<double> FeatureScaler::apply(std::span<const double> values) const {
    if (values.size() != mean_.size()) {
        throw UsageError("scaler applied to vector of wrong dimension");
    }
    std::vector<double> out(values.size());
    for (std::size_t j = 0; j < values.size(); ++j) {
        double z = (values[j] - mean_[j]) / stddev_[j];
        z = std::clamp(z, -3.0, 3.0);
        out[j] = z / 3.0;
    }
    return out;
}

void FeatureScaler::save_tsv(const std::string& path) const {
    TsvWriter writer(path);
    writer.write_row({"feature", "mean", "stddev"});
    const bool lex_names = mean_.size() == kLexiconFeatureCount;
    for (std::size_t j = 0; j < mean_.size(); ++j) {
        const std::string name = lex_names ? lexicon_feature_names()[j] : "f" + std::to_string(j);
        writer.write_row({name, format_double(mean_[j]), format_double(stddev_[j])});
    }
}

FeatureScaler FeatureScaler::load_tsv(const std::string& path) {
    TsvReader reader(path);
    auto mean_idx = reader.column("mean");
    auto std_idx = reader.column("stddev");
    if (!mean_idx || !std_idx) throw DataError(path + ": not a scaler file");
    std::vector<double> mean, stddev;
    std::vector<std::string> row;
    while (reader.next(row)) {
        double m = 0.0, s = 0.0;
        if (!parse_double(row.at(*mean_idx), m) || !parse_double(row.at(*std_idx), s)) {
            throw DataError(path + ": non-numeric scaler row " + std::to_string(reader.line_number()));
        }
        mean.push_back(m);
        stddev.push_back(s);
    }
    return FeatureScaler(std::move(mean), std::move(stddev));
}

} // namespace affectreg
