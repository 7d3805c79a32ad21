#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "specfi/ranked_list.hpp"

namespace specfi {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

class InvertedIndex {
public:
    struct Posting {
        std::size_t doc = 0;  // position into ids()
        std::size_t tf = 0;
    };

    static InvertedIndex build(const std::vector<std::pair<std::string, std::string>>& id_text_pairs);

    std::size_t doc_count() const { return doc_lengths_.size(); }
    double avgdl() const { return avgdl_; }
    const std::vector<std::string>& ids() const { return ids_; }

    // Okapi BM25 with IDF = ln(1 + (N - df + 0.5)/(df + 0.5)); scores are
    // therefore always non-negative and zero-score docs are dropped.
    RankedList search(const std::string& query, std::size_t k, const Bm25Params& params = {}) const;

private:
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    std::vector<std::size_t> doc_lengths_;
    std::vector<std::string> ids_;
    double avgdl_ = 0.0;
};

}  // namespace specfi
