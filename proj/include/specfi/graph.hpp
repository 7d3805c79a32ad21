#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "specfi/embedding.hpp"
#include "specfi/llm.hpp"

namespace specfi {

enum class NodeKind { text_chunk, entity, relationship, semantic_unit, high_level_element };

std::string to_string(NodeKind k);
NodeKind node_kind_from_string(const std::string& s);

struct GraphNode {
    int id = -1;
    NodeKind kind = NodeKind::text_chunk;
    std::string content;
    std::optional<EmbeddingVector> embedding;
};

struct Community {
    int id = -1;
    std::set<int> members;
    std::optional<int> summary_node;
};

// Undirected weighted heterogeneous graph.
class Graph {
public:
    int add_node(NodeKind kind, std::string content,
                 std::optional<EmbeddingVector> embedding = std::nullopt);
    // Accumulates weight if the edge already exists. Rejects self-loops.
    void add_edge(int a, int b, double weight);

    std::size_t node_count() const { return nodes_.size(); }
    const std::vector<GraphNode>& nodes() const { return nodes_; }
    GraphNode& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
    const GraphNode& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
    const std::vector<std::pair<int, double>>& neighbors(int id) const {
        return adj_[static_cast<std::size_t>(id)];
    }

    std::vector<Community> communities;

    void save(const std::string& dir) const;
    static Graph load(const std::string& dir);

private:
    std::vector<GraphNode> nodes_;
    std::vector<std::vector<std::pair<int, double>>> adj_;
};

// ---- extraction -----------------------------------------------------------

struct ExtractionResult {
    std::vector<std::string> entities;  // normalized: case-folded, trimmed
    std::vector<std::tuple<std::string, std::string, std::string>> relationships;
    std::vector<std::string> semantic_units;
};

class Extractor {
public:
    virtual ~Extractor() = default;
    virtual ExtractionResult extract(const std::string& text) = 0;
};

// Capitalized-span heuristic for entities, sentence-level semantic units,
// adjacent entities within a sentence linked as relationships.
class MockExtractor : public Extractor {
public:
    ExtractionResult extract(const std::string& text) override;
};

// Structured-output extraction through a chat model. Malformed responses
// raise an extraction error that retains the raw payload.
class LlmExtractor : public Extractor {
public:
    explicit LlmExtractor(ChatProvider& llm) : llm_(llm) {}
    ExtractionResult extract(const std::string& text) override;
    static ExtractionResult parse_payload(const std::string& payload);

private:
    ChatProvider& llm_;
};

// ---- construction ---------------------------------------------------------

struct BuildGraphReport {
    std::size_t failed_docs = 0;
    std::vector<std::string> log;
};

// One text_chunk node per document; entity/relationship/semantic_unit nodes
// per extraction; chunk<->unit/entity edges w=1, relationship<->entity edges
// w=1, entity<->entity co-occurrence edges weighted by chunk count. Entities
// are merged across documents by normalized surface form. Per-doc failures
// are skipped and logged; the build fails if more than 10% of docs fail.
Graph build_graph(const std::vector<std::pair<std::string, std::string>>& id_text_pairs,
                  Extractor& extractor, EmbeddingProvider& provider,
                  BuildGraphReport* report = nullptr);

// ---- community detection --------------------------------------------------

// Full Leiden loop (local moving, refinement, aggregation) optimizing
// modularity with resolution gamma; deterministic given seed. Every output
// community is internally connected.
std::vector<Community> leiden_partition(const Graph& graph, double resolution, std::uint64_t seed);

double modularity(const Graph& graph, const std::vector<Community>& communities, double resolution);

// ---- summaries ------------------------------------------------------------

class Summarizer {
public:
    virtual ~Summarizer() = default;
    virtual std::string summarize(const std::vector<std::string>& member_contents) = 0;
};

// Concatenates the contents it is given (callers pass top-degree members
// first) and truncates to 60 whitespace tokens.
class MockSummarizer : public Summarizer {
public:
    std::string summarize(const std::vector<std::string>& member_contents) override;
};

class LlmSummarizer : public Summarizer {
public:
    explicit LlmSummarizer(ChatProvider& llm) : llm_(llm) {}
    std::string summarize(const std::vector<std::string>& member_contents) override;

private:
    ChatProvider& llm_;
};

struct SummarizeOptions {
    std::size_t min_members = 3;
};

// Attaches one embedded high_level_element node per community with at least
// min_members members, linked to every member semantic_unit/entity (w=1).
// Summarizer failures skip the community with a log entry.
void summarize_communities(Graph& graph, Summarizer& summarizer, EmbeddingProvider& provider,
                           const SummarizeOptions& opts = {},
                           std::vector<std::string>* log = nullptr);

// ---- search ---------------------------------------------------------------

struct PprParams {
    double damping = 0.85;
    double tol = 1e-8;
    int max_iter = 200;
};

struct PprResult {
    std::vector<double> scores;  // indexed by node id, sums to 1
    bool converged = true;
};

PprResult personalized_pagerank(const Graph& graph, const std::set<int>& seeds,
                                const PprParams& params = {});

struct GraphSearchParams {
    std::size_t seed_count = 10;  // top-s embedded nodes by query similarity
    PprParams ppr;
};

struct ScoredNode {
    int node_id = -1;
    double score = 0.0;
};

// Seeds = top-s embedded nodes by cosine similarity to the query embedding,
// plus entity nodes whose normalized surface form occurs in the query on
// word boundaries; ranking by Personalized PageRank from those seeds.
std::vector<ScoredNode> graph_search(const std::string& query_text, const Graph& graph,
                                     EmbeddingProvider& provider,
                                     const GraphSearchParams& params = {});

// Highest-ranked high_level_element (ties: lower node id); nullopt when the
// graph carries no summaries.
std::optional<std::pair<std::string, int>> top_high_level_element(
    const std::vector<ScoredNode>& search_result, const Graph& graph);

}  // namespace specfi
