#include "specfi/embedding.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

#include "specfi/errors.hpp"
#include "specfi/text.hpp"
#include "specfi/util.hpp"

namespace specfi {

using nlohmann::json;
namespace fs = std::filesystem;

double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) throw invariant_error("embedding dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        s += static_cast<double>(a.values[i]) * static_cast<double>(b.values[i]);
    return s;
}

double norm(const EmbeddingVector& v) {
    double s = 0.0;
    for (float x : v.values) s += static_cast<double>(x) * static_cast<double>(x);
    return std::sqrt(s);
}

EmbeddingVector normalized(EmbeddingVector v) {
    double n = norm(v);
    if (n < 1e-12) throw invariant_error("cannot normalize zero-norm vector");
    for (float& x : v.values) x = static_cast<float>(static_cast<double>(x) / n);
    v.unit_normalized = true;
    return v;
}

double cosine_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
    double na = norm(a);
    double nb = norm(b);
    if (na < 1e-12 || nb < 1e-12) throw invariant_error("cosine distance undefined for zero-norm input");
    double d = 1.0 - dot(a, b) / (na * nb);
    if (d < 0.0) d = 0.0;
    if (d > 2.0) d = 2.0;
    return d;
}

EmbeddingVector EmbeddingProvider::embed_one(const std::string& text) {
    return embed({text}).front();
}

EmbeddingVector mock_embed(const std::string& text, std::uint64_t seed, int dimension) {
    if (dimension < 2) throw invariant_error("mock embedding dimension must be >= 2");
    std::vector<double> acc(static_cast<std::size_t>(dimension), 0.0);
    auto tokens = tokenize(text);
    for (const auto& tok : tokens) {
        std::uint64_t h = fnv1a64(tok, fnv1a64_u64(seed));
        std::mt19937_64 rng(h);
        std::uniform_real_distribution<double> mag(0.5, 1.5);
        // 8 sparse components per token
        for (int c = 0; c < 8; ++c) {
            auto idx = static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(dimension));
            double sign = (rng() & 1) ? 1.0 : -1.0;
            acc[idx] += sign * mag(rng);
        }
    }
    EmbeddingVector v;
    v.values.resize(static_cast<std::size_t>(dimension), 0.0f);
    double n2 = 0.0;
    for (double x : acc) n2 += x * x;
    if (tokens.empty() || n2 < 1e-12) {
        // Empty bag (or pathological cancellation): deterministic unit basis vector.
        v.values[static_cast<std::size_t>(seed % static_cast<std::uint64_t>(dimension))] = 1.0f;
        v.unit_normalized = true;
        return v;
    }
    for (std::size_t i = 0; i < acc.size(); ++i) v.values[i] = static_cast<float>(acc[i]);
    return normalized(std::move(v));
}

MockEmbeddingProvider::MockEmbeddingProvider(std::uint64_t seed, int dimension)
    : seed_(seed), dimension_(dimension) {
    if (dimension < 2) throw invariant_error("mock embedding dimension must be >= 2");
}

std::vector<EmbeddingVector> MockEmbeddingProvider::embed(const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(mock_embed(t, seed_, dimension_));
    return out;
}

std::string MockEmbeddingProvider::model_tag() const {
    return "mock-embed-" + std::to_string(dimension_) + "-" + std::to_string(seed_);
}

EmbeddingCache::EmbeddingCache(std::string dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
}

std::string EmbeddingCache::key(const std::string& model, const std::string& instruction,
                                const std::string& text) {
    std::uint64_t h = fnv1a64(model);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(instruction, h);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(text, h);
    // second pass with a different offset to widen the key to 128 bits
    std::uint64_t h2 = fnv1a64(text, fnv1a64(instruction, fnv1a64(model, 0x9e3779b97f4a7c15ull)));
    return hex64(h) + hex64(h2);
}

std::string EmbeddingCache::path_for(const std::string& key) const {
    return (fs::path(dir_) / (key + ".vec")).string();
}

std::optional<EmbeddingVector> EmbeddingCache::get(const std::string& key) const {
    std::lock_guard<std::mutex> lock(mu_);
    std::ifstream in(path_for(key), std::ios::binary);
    if (!in) return std::nullopt;
    std::uint32_t dim = 0;
    in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
    if (!in || dim == 0 || dim > (1u << 20)) return std::nullopt;
    EmbeddingVector v;
    v.values.resize(dim);
    in.read(reinterpret_cast<char*>(v.values.data()),
            static_cast<std::streamsize>(dim * sizeof(float)));
    if (!in) return std::nullopt;
    v.unit_normalized = true;
    return v;
}

void EmbeddingCache::put(const std::string& key, const EmbeddingVector& vec) {
    std::lock_guard<std::mutex> lock(mu_);
    std::string final_path = path_for(key);
    std::string tmp_path = final_path + ".tmp";
    {
        std::ofstream out(tmp_path, std::ios::binary);
        if (!out) throw input_error("cannot write cache file: " + tmp_path);
        auto dim = static_cast<std::uint32_t>(vec.values.size());
        out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
        out.write(reinterpret_cast<const char*>(vec.values.data()),
                  static_cast<std::streamsize>(vec.values.size() * sizeof(float)));
    }
    fs::rename(tmp_path, final_path);
}

HttpEmbeddingProvider::HttpEmbeddingProvider(ProviderConfig config) : config_(std::move(config)) {
    if (config_.dimension < 2) throw invariant_error("embedding dimension must be >= 2");
    if (config_.batch_size < 1) throw invariant_error("batch_size must be >= 1");
}

namespace {

// Splits "http://host:port/path" into base url and path.
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) throw input_error("endpoint must include a scheme: " + endpoint);
    auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

}  // namespace

std::vector<EmbeddingVector> HttpEmbeddingProvider::embed_batch(const std::vector<std::string>& texts) {
    auto [base, path] = split_endpoint(config_.endpoint);
    json req;
    req["model"] = config_.model;
    req["input"] = texts;

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(100 << (attempt - 1)));
        httplib::Client cli(base);
        cli.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);
        httplib::Headers headers;
        if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
            headers.emplace("Authorization", std::string("Bearer ") + key);
        auto res = cli.Post(path, headers, req.dump(), "application/json");
        if (!res) {
            last_error = "no response from " + base;
            continue;
        }
        if (res->status >= 500 || res->status == 429) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw provider_error("embeddings endpoint returned HTTP " + std::to_string(res->status));
        json body = json::parse(res->body, nullptr, false);
        if (body.is_discarded() || !body.contains("data"))
            throw provider_error("malformed embeddings response");
        std::vector<EmbeddingVector> out(texts.size());
        for (const auto& item : body["data"]) {
            auto idx = item.at("index").get<std::size_t>();
            if (idx >= out.size()) throw provider_error("embedding index out of range");
            EmbeddingVector v;
            for (const auto& x : item.at("embedding")) v.values.push_back(x.get<float>());
            if (static_cast<int>(v.values.size()) != config_.dimension)
                throw invariant_error("provider returned dimension " + std::to_string(v.values.size()) +
                                      ", config expects " + std::to_string(config_.dimension));
            out[idx] = normalized(std::move(v));
        }
        for (const auto& v : out)
            if (v.values.empty()) throw provider_error("embeddings response missing an input index");
        return out;
    }
    throw provider_error("embedding request failed after " + std::to_string(config_.max_retries + 1) +
                         " attempts: " + last_error);
}

std::vector<EmbeddingVector> HttpEmbeddingProvider::embed(const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += static_cast<std::size_t>(config_.batch_size)) {
        std::size_t end = std::min(texts.size(), start + static_cast<std::size_t>(config_.batch_size));
        std::vector<std::string> batch(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                       texts.begin() + static_cast<std::ptrdiff_t>(end));
        auto vecs = embed_batch(batch);
        out.insert(out.end(), vecs.begin(), vecs.end());
    }
    return out;
}

CachedEmbeddingProvider::CachedEmbeddingProvider(std::shared_ptr<EmbeddingProvider> inner,
                                                 std::string instruction,
                                                 std::shared_ptr<EmbeddingCache> cache)
    : inner_(std::move(inner)), instruction_(std::move(instruction)), cache_(std::move(cache)) {}

std::string CachedEmbeddingProvider::render(const std::string& text) const {
    if (instruction_.empty()) return text;
    std::string out = instruction_;
    auto pos = out.find("{query}");
    if (pos == std::string::npos) throw input_error("instruction template lacks a {query} placeholder");
    out.replace(pos, 7, text);
    return out;
}

std::vector<EmbeddingVector> CachedEmbeddingProvider::embed(const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out(texts.size());
    std::vector<std::size_t> miss_idx;
    std::vector<std::string> miss_texts;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        auto key = EmbeddingCache::key(inner_->model_tag(), instruction_, texts[i]);
        if (auto hit = cache_->get(key)) {
            out[i] = std::move(*hit);
        } else {
            miss_idx.push_back(i);
            miss_texts.push_back(render(texts[i]));
        }
    }
    if (!miss_texts.empty()) {
        misses_ += miss_texts.size();
        auto vecs = inner_->embed(miss_texts);
        for (std::size_t j = 0; j < miss_idx.size(); ++j) {
            auto key = EmbeddingCache::key(inner_->model_tag(), instruction_, texts[miss_idx[j]]);
            cache_->put(key, vecs[j]);
            out[miss_idx[j]] = std::move(vecs[j]);
        }
    }
    return out;
}

}  // namespace specfi
