#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace affectreg {

// Whitespace-trimmed and -collapsed text; the canonical form behind cache
// keys and the precomputed table.
std::string normalize_text(std::string_view text);

// Upper bound on the provider's token count: ceil(bytes / 4). Exact BPE
// counting is provider-internal; the budget only needs to never undershoot.
std::size_t approximate_token_count(std::string_view text);

// Cuts the text down to the byte budget implied by max_tokens, preferring
// the last word boundary and never splitting a UTF-8 sequence.
std::string truncate_to_token_budget(std::string_view text, std::size_t max_tokens);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual const std::string& name() const = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::optional<std::size_t> max_tokens() const = 0;
    // One vector per input, order preserved.
    virtual std::vector<std::vector<double>> embed_batch(const std::vector<std::string>& texts) = 0;
};

// Pure function of (seed, text): a seeded hash of the normalized text
// expanded to `dimension` values in [-1, 1]. Test and offline-demo provider.
class HashEmbeddingProvider final : public EmbeddingProvider {
public:
    HashEmbeddingProvider(std::size_t dimension, std::uint64_t seed, std::string name = "hash");

    const std::string& name() const override { return name_; }
    std::size_t dimension() const override { return dimension_; }
    std::optional<std::size_t> max_tokens() const override { return std::nullopt; }
    std::vector<std::vector<double>> embed_batch(const std::vector<std::string>& texts) override;

    std::vector<double> embed_one(std::string_view text) const;

private:
    std::size_t dimension_;
    std::uint64_t seed_;
    std::string name_;
};

// Table of precomputed vectors keyed by normalized text, loaded from a TSV
// of `text <TAB> v0 <TAB> v1 ...` rows. Lets the pipeline run offline from
// vectors generated elsewhere.
class PrecomputedEmbeddingProvider final : public EmbeddingProvider {
public:
    PrecomputedEmbeddingProvider(const std::string& table_path, std::string name = "precomputed");

    const std::string& name() const override { return name_; }
    std::size_t dimension() const override { return dimension_; }
    std::optional<std::size_t> max_tokens() const override { return std::nullopt; }
    std::vector<std::vector<double>> embed_batch(const std::vector<std::string>& texts) override;

private:
    std::unordered_map<std::string, std::vector<double>> table_;
    std::size_t dimension_ = 0;
    std::string name_;
};

struct RemoteProviderConfig {
    std::string base_url; // e.g. http://host:port ; path /v1/embeddings is appended
    std::string api_key;
    std::string model;
    std::size_t dimension = 0;
    std::optional<std::size_t> max_tokens;
    int max_attempts = 3;
    int backoff_initial_ms = 1000; // doubled per retry, jittered
    std::uint64_t jitter_seed = 0;
};

// OpenAI-compatible embeddings endpoint:
//   POST {"input": [texts], "model": name} -> {"data": [{"index", "embedding"}]}
// Results are reordered by the returned index so output i always matches
// input i. A dimension mismatch is fatal (misconfiguration), transport
// failures retry with exponential backoff.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit RemoteEmbeddingProvider(RemoteProviderConfig config);

    const std::string& name() const override { return name_; }
    std::size_t dimension() const override { return config_.dimension; }
    std::optional<std::size_t> max_tokens() const override { return config_.max_tokens; }
    std::vector<std::vector<double>> embed_batch(const std::vector<std::string>& texts) override;

private:
    RemoteProviderConfig config_;
    std::string name_;
};

// Durable store keyed by sha256(provider name, normalized text). On-disk
// format is a sequence of length-prefixed records
//   [u32 key bytes][key][u32 dim][dim f64 little-endian]
// appended as vectors arrive; safe for concurrent use within one process.
class EmbeddingCache {
public:
    explicit EmbeddingCache(std::string path);

    static std::string key_for(const std::string& provider_name, std::string_view normalized_text);

    std::optional<std::vector<double>> find(const std::string& key) const;
    void put(const std::string& key, const std::vector<double>& vector);

    std::size_t size() const;
    const std::string& path() const { return path_; }

private:
    std::string path_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, std::vector<double>> entries_;
};

// Cache-through embedding frontend: normalizes, truncates to the provider
// budget, batches cache misses, and persists results.
class Embedder {
public:
    Embedder(std::shared_ptr<EmbeddingProvider> provider, std::shared_ptr<EmbeddingCache> cache,
             std::size_t batch_size = 16);

    std::vector<double> embed(const std::string& text);
    std::vector<std::vector<double>> embed_all(const std::vector<std::string>& texts);

    const EmbeddingProvider& provider() const { return *provider_; }

private:
    std::shared_ptr<EmbeddingProvider> provider_;
    std::shared_ptr<EmbeddingCache> cache_; // may be null (no persistence)
    std::size_t batch_size_;
};

// embedding (+) scaled lexicon block; embedding alone when lex is null.
std::vector<double> assemble_features(std::span<const double> embedding,
                                      const std::vector<double>* scaled_lex);

} // namespace affectreg
