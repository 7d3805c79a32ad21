#include "specfi/ir_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "specfi/errors.hpp"

namespace specfi {

using nlohmann::json;

double average_precision(const RankedList& ranked, const std::set<std::string>& relevant) {
    if (relevant.empty()) throw invariant_error("average precision undefined for empty judgment set");
    double hits = 0.0;
    double sum = 0.0;
    for (std::size_t r = 0; r < ranked.entries.size(); ++r) {
        if (relevant.count(ranked.entries[r].doc_id)) {
            hits += 1.0;
            sum += hits / static_cast<double>(r + 1);
        }
    }
    return sum / static_cast<double>(relevant.size());
}

double ndcg_at_k(const RankedList& ranked, const std::set<std::string>& relevant, std::size_t k) {
    if (relevant.empty()) throw invariant_error("nDCG undefined for empty judgment set");
    if (k < 1) throw invariant_error("nDCG cutoff must be >= 1");
    double dcg = 0.0;
    std::size_t depth = std::min(k, ranked.entries.size());
    for (std::size_t r = 0; r < depth; ++r)
        if (relevant.count(ranked.entries[r].doc_id))
            dcg += 1.0 / std::log2(static_cast<double>(r + 2));
    double idcg = 0.0;
    std::size_t ideal = std::min(k, relevant.size());
    for (std::size_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r + 2));
    return dcg / idcg;
}

double r_precision(const RankedList& ranked, const std::set<std::string>& relevant) {
    if (relevant.empty()) throw invariant_error("R-precision undefined for empty judgment set");
    std::size_t cap = std::min(relevant.size(), ranked.entries.size());
    std::size_t hits = 0;
    for (std::size_t r = 0; r < cap; ++r)
        if (relevant.count(ranked.entries[r].doc_id)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

EvalResult evaluate(const std::vector<RankedList>& runs,
                    const std::map<std::string, std::set<std::string>>& judgments) {
    EvalResult out;
    for (const auto& ranked : runs) {
        auto it = judgments.find(ranked.query_id);
        if (it == judgments.end())
            throw input_error("no judgment set for narrative '" + ranked.query_id + "'");
        if (it->second.empty()) {
            out.excluded.push_back(ranked.query_id);
            continue;
        }
        NarrativeScores s;
        s.ap = average_precision(ranked, it->second);
        s.ndcg10 = ndcg_at_k(ranked, it->second, 10);
        s.ndcg100 = ndcg_at_k(ranked, it->second, 100);
        s.r_precision = r_precision(ranked, it->second);
        s.m_i = it->second.size();
        out.per_narrative[ranked.query_id] = s;
    }
    auto n = static_cast<double>(out.per_narrative.size());
    if (n > 0) {
        for (const auto& [id, s] : out.per_narrative) {
            out.map += s.ap / n;
            out.ndcg10 += s.ndcg10 / n;
            out.ndcg100 += s.ndcg100 / n;
            out.avg_r_precision += s.r_precision / n;
        }
    }
    return out;
}

std::string eval_to_json(const EvalResult& result) {
    json j;
    for (const auto& [id, s] : result.per_narrative)
        j["per_narrative"][id] = {{"ap", s.ap},
                                  {"ndcg10", s.ndcg10},
                                  {"ndcg100", s.ndcg100},
                                  {"r_precision", s.r_precision},
                                  {"m_i", s.m_i}};
    j["macro"] = {{"map", result.map},
                  {"ndcg10", result.ndcg10},
                  {"ndcg100", result.ndcg100},
                  {"avg_r_precision", result.avg_r_precision}};
    j["excluded"] = result.excluded;
    return j.dump(2);
}

std::string eval_to_csv(const EvalResult& result) {
    std::ostringstream out;
    out << "narrative_id,m_i,ap,ndcg10,ndcg100,r_precision\n";
    out.precision(17);
    for (const auto& [id, s] : result.per_narrative)
        out << id << ',' << s.m_i << ',' << s.ap << ',' << s.ndcg10 << ',' << s.ndcg100 << ','
            << s.r_precision << '\n';
    out << "macro,," << result.map << ',' << result.ndcg10 << ',' << result.ndcg100 << ','
        << result.avg_r_precision << '\n';
    return out.str();
}

}  // namespace specfi
