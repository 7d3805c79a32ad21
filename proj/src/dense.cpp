#include "specfi/dense.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "specfi/errors.hpp"

namespace specfi {

namespace fs = std::filesystem;
using nlohmann::json;

DenseIndex DenseIndex::build(const std::vector<std::pair<std::string, std::string>>& id_text_pairs,
                             EmbeddingProvider& provider) {
    if (id_text_pairs.empty()) throw input_error("cannot build a dense index over an empty corpus");
    std::vector<std::string> texts;
    std::vector<std::string> ids;
    for (const auto& [id, text] : id_text_pairs) {
        ids.push_back(id);
        texts.push_back(text);
    }
    auto rows = provider.embed(texts);
    return from_rows(std::move(ids), std::move(rows), provider.model_tag());
}

DenseIndex DenseIndex::from_rows(std::vector<std::string> ids, std::vector<EmbeddingVector> rows,
                                 std::string model_tag) {
    if (ids.size() != rows.size()) throw invariant_error("dense index id/row count mismatch");
    DenseIndex idx;
    for (auto& r : rows) {
        if (!r.unit_normalized) r = normalized(std::move(r));
        if (!rows.empty() && r.dim() != rows.front().dim())
            throw invariant_error("dense index rows have mixed dimensions");
    }
    idx.ids_ = std::move(ids);
    idx.rows_ = std::move(rows);
    idx.model_tag_ = std::move(model_tag);
    return idx;
}

RankedList DenseIndex::top_k(const EmbeddingVector& query, std::size_t k) const {
    if (!rows_.empty() && query.dim() != rows_.front().dim())
        throw invariant_error("query dimension does not match index");
    RankedList out;
    out.entries.reserve(rows_.size());
    for (std::size_t i = 0; i < rows_.size(); ++i)
        out.entries.push_back({ids_[i], dot(query, rows_[i])});
    finalize_ranking(out.entries, k);
    return out;
}

void DenseIndex::save(const std::string& dir) const {
    fs::create_directories(dir);
    json manifest;
    manifest["ids"] = ids_;
    manifest["model_tag"] = model_tag_;
    manifest["dimension"] = rows_.empty() ? 0 : rows_.front().dim();
    std::ofstream mf(fs::path(dir) / "manifest.json");
    mf << manifest.dump(2) << '\n';

    // same payload layout as the embedding cache: u32 dim + f32 rows
    std::ofstream out(fs::path(dir) / "rows.vec", std::ios::binary);
    auto dim = static_cast<std::uint32_t>(rows_.empty() ? 0 : rows_.front().dim());
    out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
    for (const auto& r : rows_)
        out.write(reinterpret_cast<const char*>(r.values.data()),
                  static_cast<std::streamsize>(r.values.size() * sizeof(float)));
}

DenseIndex DenseIndex::load(const std::string& dir) {
    std::ifstream mf(fs::path(dir) / "manifest.json");
    if (!mf) throw input_error("cannot open dense index manifest in " + dir);
    json manifest;
    mf >> manifest;
    std::vector<std::string> ids = manifest.at("ids").get<std::vector<std::string>>();

    std::ifstream in(fs::path(dir) / "rows.vec", std::ios::binary);
    if (!in) throw input_error("cannot open dense index payload in " + dir);
    std::uint32_t dim = 0;
    in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
    std::vector<EmbeddingVector> rows;
    rows.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        EmbeddingVector v;
        v.values.resize(dim);
        in.read(reinterpret_cast<char*>(v.values.data()),
                static_cast<std::streamsize>(dim * sizeof(float)));
        if (!in) throw input_error("dense index payload truncated in " + dir);
        v.unit_normalized = true;
        rows.push_back(std::move(v));
    }
    return from_rows(std::move(ids), std::move(rows), manifest.at("model_tag").get<std::string>());
}

EmbeddingVector aggregate(const std::vector<EmbeddingVector>& vectors, bool include_query,
                          const EmbeddingVector* query_vector) {
    if (vectors.empty()) throw invariant_error("aggregate requires at least one vector");
    if (include_query && query_vector == nullptr)
        throw invariant_error("include_query set but no query vector given");
    std::size_t dim = vectors.front().dim();
    std::vector<double> acc(dim, 0.0);
    std::size_t count = 0;
    auto add = [&](const EmbeddingVector& v) {
        if (v.dim() != dim) throw invariant_error("aggregate inputs have mixed dimensions");
        for (std::size_t i = 0; i < dim; ++i) acc[i] += static_cast<double>(v.values[i]);
        ++count;
    };
    for (const auto& v : vectors) add(v);
    if (include_query) add(*query_vector);
    EmbeddingVector mean;
    mean.values.resize(dim);
    for (std::size_t i = 0; i < dim; ++i)
        mean.values[i] = static_cast<float>(acc[i] / static_cast<double>(count));
    if (norm(mean) < 1e-12)
        throw invariant_error("degenerate aggregate: mean vector has zero norm");
    return normalized(std::move(mean));
}

}  // namespace specfi
