#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace specfi {

struct EmbeddingVector {
    std::vector<float> values;
    bool unit_normalized = false;

    std::size_t dim() const { return values.size(); }
};

double dot(const EmbeddingVector& a, const EmbeddingVector& b);
double norm(const EmbeddingVector& v);
EmbeddingVector normalized(EmbeddingVector v);

// 1 - a.b / (|a||b|), in [0, 2]. Throws on zero-norm input.
double cosine_distance(const EmbeddingVector& a, const EmbeddingVector& b);

struct ProviderConfig {
    std::string endpoint;
    std::string model = "mock";
    std::string instruction;  // template with a {query} placeholder, may be empty
    int batch_size = 16;
    int timeout_ms = 30000;
    int max_retries = 3;
    int dimension = 64;
    std::string api_key_env = "SPECFI_API_KEY";
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
    virtual int dimension() const = 0;
    virtual std::string model_tag() const = 0;

    EmbeddingVector embed_one(const std::string& text);
};

// Deterministic token-bag embedder: each token hashes to a sparse component
// vector, components are summed over the bag and the sum is normalized.
// Shared tokens therefore raise cosine similarity.
EmbeddingVector mock_embed(const std::string& text, std::uint64_t seed, int dimension);

class MockEmbeddingProvider : public EmbeddingProvider {
public:
    MockEmbeddingProvider(std::uint64_t seed, int dimension);
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
    int dimension() const override { return dimension_; }
    std::string model_tag() const override;

private:
    std::uint64_t seed_;
    int dimension_;
};

// Content-addressed on-disk store; one file per key, payload = u32 dimension
// header + little-endian f32 values. Safe for concurrent readers/writers.
class EmbeddingCache {
public:
    explicit EmbeddingCache(std::string dir);

    static std::string key(const std::string& model, const std::string& instruction,
                           const std::string& text);

    std::optional<EmbeddingVector> get(const std::string& key) const;
    void put(const std::string& key, const EmbeddingVector& vec);

private:
    std::string dir_;
    mutable std::mutex mu_;
    std::string path_for(const std::string& key) const;
};

// OpenAI-shaped embeddings endpoint: POST {"model", "input": [...]} ->
// {"data": [{"index", "embedding": [...]}]}. Retries with exponential backoff.
class HttpEmbeddingProvider : public EmbeddingProvider {
public:
    explicit HttpEmbeddingProvider(ProviderConfig config);
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
    int dimension() const override { return config_.dimension; }
    std::string model_tag() const override { return config_.model; }

private:
    ProviderConfig config_;
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts);
};

// Wraps any provider with instruction templating and the disk cache.
// Cache key = hash(model || instruction || text); hits never touch the inner
// provider, so re-embedding identical hypotheticals across runs is free.
class CachedEmbeddingProvider : public EmbeddingProvider {
public:
    CachedEmbeddingProvider(std::shared_ptr<EmbeddingProvider> inner, std::string instruction,
                            std::shared_ptr<EmbeddingCache> cache);
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
    int dimension() const override { return inner_->dimension(); }
    std::string model_tag() const override { return inner_->model_tag(); }
    std::size_t network_calls() const { return misses_; }

private:
    std::shared_ptr<EmbeddingProvider> inner_;
    std::string instruction_;
    std::shared_ptr<EmbeddingCache> cache_;
    std::size_t misses_ = 0;
    std::string render(const std::string& text) const;
};

}  // namespace specfi
