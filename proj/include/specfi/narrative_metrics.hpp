#pragma once

#include <map>
#include <string>
#include <vector>

#include "specfi/corpus.hpp"
#include "specfi/embedding.hpp"

namespace specfi {

struct NarrativeEmbeddingSet {
    std::string narrative_id;
    std::vector<EmbeddingVector> embeddings;  // one per relevant test text
    EmbeddingVector centroid;                 // plain mean, not re-normalized
    std::size_t m_i = 0;
};

struct MetricRow {
    double distinctness = 0.0;  // D_i
    double variance = 0.0;      // V_i
    std::size_t m_i = 0;
    std::map<std::string, double> system_ap;  // one AP column per evaluated system
};

struct MetricTable {
    std::map<std::string, MetricRow> rows;
    bool embeddings_unit_normalized = true;
    std::string to_csv() const;
    static MetricTable from_csv(const std::string& csv);
};

EmbeddingVector centroid_of(const std::vector<EmbeddingVector>& embeddings);

// Groups test-split embeddings by narrative label; multi-label documents
// contribute to every one of their narratives.
std::vector<NarrativeEmbeddingSet> build_sets(const Dataset& dataset, EmbeddingProvider& provider);

// D_i = sqrt(mean_{j!=i} d_ij * min_{j!=i} d_ij) with d_ij the cosine
// distance between centroids.
std::map<std::string, double> distinctness(const std::vector<NarrativeEmbeddingSet>& sets);

// V_i = mean squared Euclidean distance from the centroid.
double variance(const NarrativeEmbeddingSet& set);

MetricTable build_metric_table(const std::vector<NarrativeEmbeddingSet>& sets);

}  // namespace specfi
