#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "specfi/ranked_list.hpp"

namespace specfi {

struct NarrativeScores {
    double ap = 0.0;
    double ndcg10 = 0.0;
    double ndcg100 = 0.0;
    double r_precision = 0.0;
    std::size_t m_i = 0;  // relevant-document count
};

struct EvalResult {
    std::map<std::string, NarrativeScores> per_narrative;
    double map = 0.0;
    double ndcg10 = 0.0;
    double ndcg100 = 0.0;
    double avg_r_precision = 0.0;
    // Narratives with empty judgment sets, excluded from the macro averages.
    std::vector<std::string> excluded;
};

double average_precision(const RankedList& ranked, const std::set<std::string>& relevant);
double ndcg_at_k(const RankedList& ranked, const std::set<std::string>& relevant, std::size_t k);
double r_precision(const RankedList& ranked, const std::set<std::string>& relevant);

EvalResult evaluate(const std::vector<RankedList>& runs,
                    const std::map<std::string, std::set<std::string>>& judgments);

std::string eval_to_json(const EvalResult& result);
std::string eval_to_csv(const EvalResult& result);

}  // namespace specfi
