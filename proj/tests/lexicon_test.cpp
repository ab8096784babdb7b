#include "affectreg/lexicon.hpp"

#include "affectreg/errors.hpp"
#include "affectreg/rng.hpp"
#include "affectreg/tsv.hpp"
#include "support/test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>

using namespace affectreg;

namespace {

std::string data_path(const std::string& name) {
    return std::string(AFFECTREG_TEST_DATA_DIR) + "/" + name;
}

const LexiconSet& toy_lexicons() {
    static const LexiconSet lex =
        LexiconSet::load(data_path("toy_nrc.txt"), data_path("toy_mpqa.tff"),
                         data_path("toy_vad.txt"), data_path("toy_shifters.txt"));
    return lex;
}

// The text behind the golden vector in toy_expected.tsv (17 tokens).
constexpr const char* kGoldenText =
    "The sad dogs were running. They can't keep calm, really good dogs! We abandon the view.";

} // namespace

TEST_SUITE("lexicon") {

TEST_CASE("tokenize lowercases, strips punctuation, splits contractions") {
    CHECK(tokenize("I felt SAD.") == std::vector<std::string>{"i", "felt", "sad"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("can't stop") == std::vector<std::string>{"can", "t", "stop"});
    CHECK(tokenize("  spaced\t\nout  ") == std::vector<std::string>{"spaced", "out"});
    CHECK(tokenize("well-being!!") == std::vector<std::string>{"well", "being"});
}

TEST_CASE("lemmatize strips suffixes confirmed by lexicon membership") {
    const auto& lex = toy_lexicons();
    CHECK(lemmatize("dogs", lex) == "dog");
    CHECK(lemmatize("sad", lex) == "sad");
    CHECK(lemmatize("running", lex) == "run"); // consonant-doubling undo
    CHECK(lemmatize("views", lex) == "view");
    CHECK(lemmatize("abandoned", lex) == "abandon");
    CHECK(lemmatize("calms", lex) == "calm");
    // No stripped form in any lexicon: the raw token survives.
    CHECK(lemmatize("wandering", lex) == "wandering");
    // A token already present is never stripped.
    CHECK(lemmatize("fear", lex) == "fear");
}

TEST_CASE("lexicon loading tolerates comments and logs nonzero sizes") {
    const auto& lex = toy_lexicons();
    CHECK(lex.nrc_size() > 0);
    CHECK(lex.mpqa_size() > 0);
    CHECK(lex.vad_size() == 3);
    CHECK(lex.shifter_size() == 4);
    CHECK(lex.is_shifter("abandon"));
    CHECK_FALSE(lex.is_shifter("keep"));
    CHECK(lex.contains("keep")); // non-shifter entries still count as members
    // Multi-entry word resolves to the anypos entry.
    const auto* deal = lex.mpqa("deal");
    REQUIRE(deal != nullptr);
    CHECK(deal->pos == MpqaPos::anypos);
    CHECK(deal->polarity == MpqaPolarity::both);
}

TEST_CASE("extract_nrc hand count on a toy lexicon") {
    const auto& lex = toy_lexicons();
    CHECK(extract_nrc({}, lex) == std::array<double, 20>{});

    auto v = extract_nrc({"sad", "sad", "happy"}, lex);
    CHECK(v[5] == 2.0);              // sadness
    CHECK(v[4] == 1.0);              // joy
    CHECK(v[9] == 2.0);              // negative
    CHECK(v[8] == 1.0);              // positive
    CHECK(v[15] == 2.0 / 3.0);       // sadness ratio
    CHECK(v[14] == 1.0 / 3.0);       // joy ratio
    CHECK(v[19] == 2.0 / 3.0);       // negative ratio
    CHECK(v[18] == 1.0 / 3.0);       // positive ratio
    CHECK(v[0] == 0.0);

    auto none = extract_nrc({"zzz", "qqq"}, lex);
    for (double x : none) CHECK(x == 0.0);
}

TEST_CASE("extract_mpqa hand count") {
    const auto& lex = toy_lexicons();
    CHECK(extract_mpqa({}, lex) == std::array<double, 24>{});
    auto v = extract_mpqa({"good"}, lex);
    CHECK(v[0] == 1.0);   // strong
    CHECK(v[2] == 1.0);   // positive
    CHECK(v[6] == 1.0);   // adj
    CHECK(v[11] == 1.0);  // any hit
    CHECK(v[12] == 1.0);  // ratios are 1.0 for the single token
    CHECK(v[14] == 1.0);
    CHECK(v[18] == 1.0);
    CHECK(v[23] == 1.0);
    auto miss = extract_mpqa({"zzz"}, lex);
    for (double x : miss) CHECK(x == 0.0);
}

TEST_CASE("extract_vad means") {
    const auto& lex = toy_lexicons();
    CHECK(extract_vad({"zzz"}, lex) == std::array<double, 3>{0.0, 0.0, 0.0});
    auto one = extract_vad({"calm"}, lex);
    CHECK(one[0] == 0.9);
    CHECK(one[1] == 0.1);
    CHECK(one[2] == 0.5);
    auto two = extract_vad({"sad", "happy"}, lex);
    CHECK(two[0] == doctest::Approx((0.2 + 0.4) / 2).epsilon(1e-15));
    CHECK(two[1] == doctest::Approx((0.4 + 0.6) / 2).epsilon(1e-15));
    CHECK(two[2] == doctest::Approx((0.6 + 0.8) / 2).epsilon(1e-15));
}

TEST_CASE("extract_shifters counts duplicates") {
    const auto& lex = toy_lexicons();
    CHECK(extract_shifters({}, lex) == 0.0);
    CHECK(extract_shifters({"abandon", "abandon"}, lex) == 2.0);
    CHECK(extract_shifters({"a", "b", "lose", "c", "keep"}, lex) == 1.0);
}

TEST_CASE("extract_all matches the hand-computed golden vector exactly") {
    const auto& lex = toy_lexicons();
    auto v = extract_all(kGoldenText, lex);
    CHECK(v.values.size() == kLexiconFeatureCount);

    std::ifstream golden(data_path("toy_expected.tsv"));
    REQUIRE(golden.good());
    const auto& names = lexicon_feature_names();
    std::string line;
    std::size_t index = 0;
    while (std::getline(golden, line)) {
        if (line.empty()) continue;
        auto fields = split_tab(line);
        REQUIRE(fields.size() == 2);
        REQUIRE(index < kLexiconFeatureCount);
        CHECK(fields[0] == names[index]);

        double expected = 0.0;
        if (fields[1].rfind("sum:", 0) == 0) {
            // Raw lexicon scores listed by hand; the mean is recomputed here.
            double sum = 0.0;
            std::size_t count = 0;
            std::string rest = fields[1].substr(4);
            std::size_t pos = 0;
            while (pos < rest.size()) {
                std::size_t comma = rest.find(',', pos);
                if (comma == std::string::npos) comma = rest.size();
                sum += std::stod(rest.substr(pos, comma - pos));
                ++count;
                pos = comma + 1;
            }
            expected = sum / static_cast<double>(count);
        } else if (auto slash = fields[1].find('/'); slash != std::string::npos) {
            expected = std::stod(fields[1].substr(0, slash)) /
                       std::stod(fields[1].substr(slash + 1));
        } else {
            expected = std::stod(fields[1]);
        }
        INFO("feature ", names[index]);
        CHECK(v.values[index] == expected);
        ++index;
    }
    CHECK(index == kLexiconFeatureCount);
}

TEST_CASE("extract_all: empty text gives 48 zeros; output is pure") {
    const auto& lex = toy_lexicons();
    auto zero = extract_all("", lex);
    for (double x : zero.values) CHECK(x == 0.0);
    auto a = extract_all(kGoldenText, lex);
    auto b = extract_all(kGoldenText, lex);
    CHECK(a.values == b.values);
}

TEST_CASE("bag-of-words features are invariant under token permutation") {
    const auto& lex = toy_lexicons();
    std::vector<std::string> words = {"sad", "dogs", "running", "keep",  "calm", "really",
                                      "good", "view", "abandon", "plain", "zzz",  "fear"};
    Rng rng(7);
    // Join a base ordering, then compare against many shuffles.
    auto join = [](const std::vector<std::string>& tokens) {
        std::string text;
        for (const auto& t : tokens) {
            if (!text.empty()) text += ' ';
            text += t;
        }
        return text;
    };
    const auto base = extract_all(join(words), lex);
    for (int trial = 0; trial < 200; ++trial) {
        rng.shuffle(words);
        CHECK(extract_all(join(words), lex).values == base.values);
    }
}

TEST_CASE("ratio features equal count / token count for random texts") {
    const auto& lex = toy_lexicons();
    Rng rng(9);
    const std::vector<std::string> vocab = {"sad",  "happy", "dog",  "fear", "run",
                                            "calm", "good",  "view", "zzz",  "abandon"};
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::string> tokens;
        const std::size_t n = 1 + rng.index(30);
        for (std::size_t i = 0; i < n; ++i) tokens.push_back(vocab[rng.index(vocab.size())]);
        auto nrc = extract_nrc(tokens, lex);
        for (int c = 0; c < 10; ++c) {
            CHECK(nrc[10 + c] == nrc[c] / static_cast<double>(n));
        }
        auto mpqa = extract_mpqa(tokens, lex);
        for (int c = 0; c < 12; ++c) {
            CHECK(mpqa[12 + c] == mpqa[c] / static_cast<double>(n));
        }
    }
}

TEST_CASE("feature names enumerate the 48-column schema") {
    const auto& names = lexicon_feature_names();
    CHECK(names.front() == "nrc_count_anger");
    CHECK(names[20] == "mpqa_count_strong");
    CHECK(names[44] == "vad_mean_valence");
    CHECK(names.back() == "shifter_count");
    const auto md = lexicon_schema_markdown();
    for (const auto& name : names) {
        CHECK(md.find(name) != std::string::npos);
    }
}

TEST_CASE("scaler: z-score, clamp, and rescale with training statistics") {
    // Column {0, 2}: z-scores (population std 1) are -1/+1, mapped to -1/3, +1/3.
    FeatureScaler scaler = FeatureScaler::fit({{0.0}, {2.0}});
    CHECK(scaler.apply(std::vector<double>{0.0})[0] == doctest::Approx(-1.0 / 3).epsilon(1e-15));
    CHECK(scaler.apply(std::vector<double>{2.0})[0] == doctest::Approx(1.0 / 3).epsilon(1e-15));
    // The training mean maps to zero.
    CHECK(scaler.apply(std::vector<double>{1.0})[0] == 0.0);

    // Constant column scales to zero everywhere.
    FeatureScaler constant = FeatureScaler::fit({{5.0}, {5.0}, {5.0}});
    CHECK(constant.apply(std::vector<double>{5.0})[0] == 0.0);

    // Clamp: values beyond 3 standard deviations saturate at +-1.
    CHECK(scaler.apply(std::vector<double>{100.0})[0] == 1.0);
    CHECK(scaler.apply(std::vector<double>{-100.0})[0] == -1.0);

    CHECK_THROWS_AS(FeatureScaler::fit({{1.0}}), DataError);
}

TEST_CASE("scaler round-trip: per-feature mean of scaled training data is ~0") {
    Rng rng(11);
    std::vector<std::vector<double>> rows;
    for (int r = 0; r < 64; ++r) {
        std::vector<double> row(6);
        for (double& v : row) v = rng.uniform(-2.0, 5.0);
        rows.push_back(row);
    }
    auto scaler = FeatureScaler::fit(rows);
    std::vector<double> mean(6, 0.0);
    for (const auto& row : rows) {
        auto scaled = scaler.apply(row);
        for (std::size_t j = 0; j < 6; ++j) mean[j] += scaled[j];
    }
    for (double m : mean) CHECK(std::fabs(m / 64.0) < 1e-9);
}

TEST_CASE("scaler persists through its tsv form") {
    testutil::TempDir tmp;
    auto scaler = FeatureScaler::fit({{1.0, 2.0}, {3.0, 8.0}, {2.0, 5.0}});
    scaler.save_tsv(tmp.file("scaler.tsv"));
    auto loaded = FeatureScaler::load_tsv(tmp.file("scaler.tsv"));
    CHECK(loaded.mean() == scaler.mean());
    CHECK(loaded.stddev() == scaler.stddev());
}

} // TEST_SUITE
