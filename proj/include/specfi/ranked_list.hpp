#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace specfi {

struct RankedEntry {
    std::string doc_id;
    double score = 0.0;
};

// Scores non-increasing; ties ordered by ascending doc id; doc ids unique.
struct RankedList {
    std::string query_id;
    std::vector<RankedEntry> entries;
    std::uint64_t run_seed = 0;
};

// Sorts by score descending, doc id ascending, and truncates to k.
void finalize_ranking(std::vector<RankedEntry>& entries, std::size_t k);

}  // namespace specfi
