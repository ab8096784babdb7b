#include "affectreg/embedding.hpp"

#include "affectreg/digest.hpp"
#include "affectreg/errors.hpp"
#include "affectreg/rng.hpp"
#include "affectreg/tsv.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <thread>

namespace affectreg {

std::string normalize_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(c));
    }
    return out;
}

std::size_t approximate_token_count(std::string_view text) {
    return (text.size() + 3) / 4;
}

std::string truncate_to_token_budget(std::string_view text, std::size_t max_tokens) {
    const std::size_t budget = max_tokens * 4;
    if (text.size() <= budget) return std::string(text);

    std::size_t cut = budget;
    // Do not split a UTF-8 continuation run.
    while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xc0) == 0x80) --cut;
    // Prefer the last word boundary before the byte limit.
    std::size_t boundary = cut;
    while (boundary > 0 && !std::isspace(static_cast<unsigned char>(text[boundary - 1]))) {
        --boundary;
    }
    if (boundary > 0) cut = boundary;
    std::string out(text.substr(0, cut));
    while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
    return out;
}

HashEmbeddingProvider::HashEmbeddingProvider(std::size_t dimension, std::uint64_t seed,
                                             std::string name)
    : dimension_(dimension), seed_(seed), name_(std::move(name)) {
    if (dimension_ == 0) throw UsageError("embedding dimension must be positive");
}

std::vector<double> HashEmbeddingProvider::embed_one(std::string_view text) const {
    const std::string normalized = normalize_text(text);
    Rng rng(seed_ ^ fnv1a64(normalized));
    std::vector<double> v(dimension_);
    for (double& x : v) x = rng.symmetric();
    return v;
}

std::vector<std::vector<double>> HashEmbeddingProvider::embed_batch(
    const std::vector<std::string>& texts) {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& text : texts) out.push_back(embed_one(text));
    return out;
}

PrecomputedEmbeddingProvider::PrecomputedEmbeddingProvider(const std::string& table_path,
                                                           std::string name)
    : name_(std::move(name)) {
    std::ifstream in(table_path);
    if (!in) throw ProviderError("cannot open precomputed embedding table: " + table_path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_tab(line);
        if (fields.size() < 2) {
            throw ProviderError(table_path + ": row " + std::to_string(line_no) +
                                " has no vector components");
        }
        std::vector<double> vec;
        vec.reserve(fields.size() - 1);
        for (std::size_t i = 1; i < fields.size(); ++i) {
            char* end = nullptr;
            double v = std::strtod(fields[i].c_str(), &end);
            if (fields[i].empty() || end != fields[i].c_str() + fields[i].size() ||
                !std::isfinite(v)) {
                throw ProviderError(table_path + ": row " + std::to_string(line_no) +
                                    ": non-numeric component '" + fields[i] + "'");
            }
            vec.push_back(v);
        }
        if (dimension_ == 0) dimension_ = vec.size();
        if (vec.size() != dimension_) {
            throw ProviderError(table_path + ": row " + std::to_string(line_no) +
                                " has dimension " + std::to_string(vec.size()) + ", expected " +
                                std::to_string(dimension_));
        }
        table_[normalize_text(fields[0])] = std::move(vec);
    }
    if (table_.empty()) throw ProviderError("precomputed embedding table is empty: " + table_path);
}

std::vector<std::vector<double>> PrecomputedEmbeddingProvider::embed_batch(
    const std::vector<std::string>& texts) {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        auto it = table_.find(normalize_text(text));
        if (it == table_.end()) {
            throw ProviderError("text not present in the precomputed embedding table: '" +
                                normalize_text(text).substr(0, 60) + "...'");
        }
        out.push_back(it->second);
    }
    return out;
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(RemoteProviderConfig config)
    : config_(std::move(config)), name_("remote:" + config_.model) {
    if (config_.dimension == 0) throw UsageError("remote provider requires a dimension");
    if (config_.base_url.empty()) {
        throw ProviderError("remote provider requires an endpoint URL (EMBED_API_URL)");
    }
}

std::vector<std::vector<double>> RemoteEmbeddingProvider::embed_batch(
    const std::vector<std::string>& texts) {
    nlohmann::json body;
    body["input"] = texts;
    body["model"] = config_.model;
    const std::string payload = body.dump();

    httplib::Client client(config_.base_url);
    client.set_connection_timeout(30);
    client.set_read_timeout(120);
    httplib::Headers headers;
    if (!config_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + config_.api_key);
    }

    Rng jitter(config_.jitter_seed);
    std::string last_error;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        if (attempt > 1) {
            const double base = static_cast<double>(config_.backoff_initial_ms) *
                                std::pow(2.0, attempt - 2);
            const auto wait = std::chrono::milliseconds(
                static_cast<long>(base * (0.5 + jitter.uniform())));
            std::this_thread::sleep_for(wait);
        }
        auto res = client.Post("/v1/embeddings", headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
            continue;
        }
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(res->body);
            const auto& data = doc.at("data");
            if (data.size() != texts.size()) {
                throw ProviderError("provider returned " + std::to_string(data.size()) +
                                    " embeddings for " + std::to_string(texts.size()) + " inputs");
            }
            std::vector<std::vector<double>> out(texts.size());
            for (const auto& item : data) {
                const std::size_t index = item.at("index").get<std::size_t>();
                if (index >= out.size()) throw ProviderError("provider returned an invalid index");
                out[index] = item.at("embedding").get<std::vector<double>>();
            }
            for (const auto& vec : out) {
                if (vec.size() != config_.dimension) {
                    // Wrong dimension means the configured model/dimension pair
                    // is wrong; retrying cannot help.
                    throw ProviderError("provider returned dimension " +
                                        std::to_string(vec.size()) + ", configured " +
                                        std::to_string(config_.dimension));
                }
                for (double v : vec) {
                    if (!std::isfinite(v)) throw ProviderError("non-finite embedding component");
                }
            }
            return out;
        } catch (const nlohmann::json::exception& e) {
            last_error = std::string("malformed response: ") + e.what();
            continue;
        }
    }
    throw ProviderError("embedding request failed after " + std::to_string(config_.max_attempts) +
                        " attempts; last error: " + last_error);
}

EmbeddingCache::EmbeddingCache(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_, std::ios::binary);
    if (!in) return; // fresh cache
    while (true) {
        std::uint32_t key_len = 0;
        if (!in.read(reinterpret_cast<char*>(&key_len), 4)) break;
        std::string key(key_len, '\0');
        std::uint32_t dim = 0;
        if (!in.read(key.data(), key_len) || !in.read(reinterpret_cast<char*>(&dim), 4)) {
            throw DataError("truncated embedding cache: " + path_);
        }
        std::vector<double> vec(dim);
        if (!in.read(reinterpret_cast<char*>(vec.data()), static_cast<std::streamsize>(8) * dim)) {
            throw DataError("truncated embedding cache: " + path_);
        }
        entries_[std::move(key)] = std::move(vec);
    }
}

std::string EmbeddingCache::key_for(const std::string& provider_name,
                                    std::string_view normalized_text) {
    std::string material = provider_name;
    material.push_back('\n');
    material.append(normalized_text);
    return sha256_hex(material);
}

std::optional<std::vector<double>> EmbeddingCache::find(const std::string& key) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void EmbeddingCache::put(const std::string& key, const std::vector<double>& vector) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = entries_.emplace(key, vector);
    if (!inserted) return;
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) throw DataError("cannot append to embedding cache: " + path_);
    auto key_len = static_cast<std::uint32_t>(key.size());
    auto dim = static_cast<std::uint32_t>(vector.size());
    out.write(reinterpret_cast<const char*>(&key_len), 4);
    out.write(key.data(), key_len);
    out.write(reinterpret_cast<const char*>(&dim), 4);
    out.write(reinterpret_cast<const char*>(vector.data()),
              static_cast<std::streamsize>(8) * dim);
    if (!out) throw DataError("write failed on embedding cache: " + path_);
}

std::size_t EmbeddingCache::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.size();
}

Embedder::Embedder(std::shared_ptr<EmbeddingProvider> provider,
                   std::shared_ptr<EmbeddingCache> cache, std::size_t batch_size)
    : provider_(std::move(provider)), cache_(std::move(cache)),
      batch_size_(std::max<std::size_t>(1, batch_size)) {
    if (!provider_) throw UsageError("embedder requires a provider");
}

std::vector<double> Embedder::embed(const std::string& text) {
    return embed_all({text}).front();
}

std::vector<std::vector<double>> Embedder::embed_all(const std::vector<std::string>& texts) {
    std::vector<std::vector<double>> out(texts.size());
    std::vector<std::size_t> missing;
    std::vector<std::string> missing_texts;

    for (std::size_t i = 0; i < texts.size(); ++i) {
        std::string normalized = normalize_text(texts[i]);
        if (normalized.empty()) {
            throw DataError("cannot embed empty text (input row " + std::to_string(i + 1) + ")");
        }
        if (auto budget = provider_->max_tokens();
            budget && approximate_token_count(normalized) > *budget) {
            normalized = truncate_to_token_budget(normalized, *budget);
        }
        if (cache_) {
            const std::string key = EmbeddingCache::key_for(provider_->name(), normalized);
            if (auto hit = cache_->find(key)) {
                out[i] = std::move(*hit);
                continue;
            }
        }
        missing.push_back(i);
        missing_texts.push_back(std::move(normalized));
    }

    for (std::size_t start = 0; start < missing.size(); start += batch_size_) {
        const std::size_t end = std::min(start + batch_size_, missing.size());
        std::vector<std::string> batch(missing_texts.begin() + start, missing_texts.begin() + end);
        auto vectors = provider_->embed_batch(batch);
        if (vectors.size() != batch.size()) {
            throw ProviderError("provider returned a batch of the wrong size");
        }
        for (std::size_t k = 0; k < vectors.size(); ++k) {
            if (vectors[k].size() != provider_->dimension()) {
                throw ProviderError("provider returned dimension " +
                                    std::to_string(vectors[k].size()) + ", expected " +
                                    std::to_string(provider_->dimension()));
            }
            if (cache_) {
                cache_->put(EmbeddingCache::key_for(provider_->name(), batch[k]), vectors[k]);
            }
            out[missing[start + k]] = std::move(vectors[k]);
        }
    }
    return out;
}

std::vector<double> assemble_features(std::span<const double> embedding,
                                      const std::vector<double>* scaled_lex) {
    std::vector<double> out(embedding.begin(), embedding.end());
    if (scaled_lex) out.insert(out.end(), scaled_lex->begin(), scaled_lex->end());
    return out;
}

} // namespace affectreg
