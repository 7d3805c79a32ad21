#pragma once

#include <string>
#include <vector>

#include "specfi/embedding.hpp"
#include "specfi/ranked_list.hpp"

namespace specfi {

// Exact exhaustive cosine top-k over a unit-normalized row matrix.
class DenseIndex {
public:
    static DenseIndex build(const std::vector<std::pair<std::string, std::string>>& id_text_pairs,
                            EmbeddingProvider& provider);
    static DenseIndex from_rows(std::vector<std::string> ids, std::vector<EmbeddingVector> rows,
                                std::string model_tag);

    std::size_t size() const { return ids_.size(); }
    const std::vector<std::string>& ids() const { return ids_; }
    const EmbeddingVector& row(std::size_t i) const { return rows_[i]; }
    const std::string& model_tag() const { return model_tag_; }

    // Similarity = dot product (rows and query are unit vectors); ties broken
    // by ascending doc id.
    RankedList top_k(const EmbeddingVector& query, std::size_t k) const;

    void save(const std::string& dir) const;
    static DenseIndex load(const std::string& dir);

private:
    std::vector<std::string> ids_;
    std::vector<EmbeddingVector> rows_;
    std::string model_tag_;
};

// Mean of the inputs (optionally including the query vector), re-normalized.
EmbeddingVector aggregate(const std::vector<EmbeddingVector>& vectors, bool include_query = false,
                          const EmbeddingVector* query_vector = nullptr);

}  // namespace specfi
