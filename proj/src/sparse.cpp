#include "specfi/sparse.hpp"

#include <algorithm>
#include <cmath>

#include "specfi/errors.hpp"
#include "specfi/text.hpp"

namespace specfi {

void finalize_ranking(std::vector<RankedEntry>& entries, std::size_t k) {
    std::sort(entries.begin(), entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
    if (entries.size() > k) entries.resize(k);
}

InvertedIndex InvertedIndex::build(
    const std::vector<std::pair<std::string, std::string>>& id_text_pairs) {
    if (id_text_pairs.empty()) throw input_error("cannot build an index over an empty corpus");
    InvertedIndex idx;
    std::size_t total_len = 0;
    for (const auto& [id, text] : id_text_pairs) {
        std::size_t doc = idx.ids_.size();
        idx.ids_.push_back(id);
        auto tokens = tokenize(text);
        std::unordered_map<std::string, std::size_t> tf;
        for (const auto& t : tokens) ++tf[t];
        for (const auto& [term, freq] : tf) idx.postings_[term].push_back({doc, freq});
        idx.doc_lengths_.push_back(tokens.size());
        total_len += tokens.size();
    }
    idx.avgdl_ = static_cast<double>(total_len) / static_cast<double>(idx.ids_.size());
    return idx;
}

RankedList InvertedIndex::search(const std::string& query, std::size_t k,
                                 const Bm25Params& params) const {
    if (k < 1) throw input_error("k must be >= 1");
    std::vector<double> scores(ids_.size(), 0.0);
    auto n = static_cast<double>(doc_count());
    for (const auto& term : tokenize(query)) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        auto df = static_cast<double>(it->second.size());
        double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        for (const auto& p : it->second) {
            auto tf = static_cast<double>(p.tf);
            double dl = static_cast<double>(doc_lengths_[p.doc]);
            double denom = tf + params.k1 * (1.0 - params.b + params.b * dl / avgdl_);
            scores[p.doc] += idf * tf * (params.k1 + 1.0) / denom;
        }
    }
    RankedList out;
    for (std::size_t d = 0; d < scores.size(); ++d)
        if (scores[d] > 0.0) out.entries.push_back({ids_[d], scores[d]});
    finalize_ranking(out.entries, k);
    return out;
}

}  // namespace specfi
