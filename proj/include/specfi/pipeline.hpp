#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "specfi/corpus.hpp"
#include "specfi/dense.hpp"
#include "specfi/graph.hpp"
#include "specfi/ir_metrics.hpp"
#include "specfi/llm.hpp"
#include "specfi/sparse.hpp"

namespace specfi {

enum class Variant {
    zero_shot,
    static_labeled,
    specfi_dr,
    specfi_cs,
    cs_direct,
    dense_baseline,
    sparse_baseline,
};

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

enum class ExampleSource { dense_nearest, community_summary, static_labeled, none };

std::string to_string(ExampleSource s);

struct FewShotExample {
    std::string narrative_id;
    std::string example_text;  // empty only when source == none
    ExampleSource source = ExampleSource::none;
};

struct PromptTemplates {
    std::string system;
    std::string user;  // must contain {examples} and {query}
};

PromptTemplates default_prompt_templates();

struct PipelineConfig {
    Variant variant = Variant::specfi_dr;
    int n_hypotheticals = 10;
    int runs = 10;
    std::size_t k = 100;  // retrieval cutoff; >= 100 so nDCG@100 stays computable
    std::uint64_t base_seed = 0;
    bool include_query_in_aggregate = false;
    bool include_target_example = true;  // target narrative's own pair stays in the block
    double temperature = 1.0;
    int max_tokens = 256;
    PromptTemplates templates = default_prompt_templates();

    void validate() const;
    std::string digest() const;  // changes iff any field changes
};

struct HypotheticalDoc {
    std::string narrative_id;
    std::string text;
    int run_index = 0;
    std::vector<std::string> refusal_flags;
};

struct RefusalReport {
    std::size_t total = 0;
    std::size_t flagged = 0;
    double rate = 0.0;
};

// Everything a variant may need, prebuilt by the caller.
struct PipelineAssets {
    const DenseIndex* test_index = nullptr;   // dense variants
    const DenseIndex* train_index = nullptr;  // SpecFi-DR example selection + CS fallback
    std::map<std::string, std::string>* train_texts = nullptr;  // id -> text
    const InvertedIndex* sparse_index = nullptr;
    const Graph* graph = nullptr;             // SpecFi-CS / CS-direct
    EmbeddingProvider* query_embedder = nullptr;
    EmbeddingProvider* hyp_embedder = nullptr;
    ChatProvider* llm = nullptr;
};

struct RunOutput {
    std::vector<std::vector<RankedList>> per_run;  // [run][narrative]
    std::vector<HypotheticalDoc> hypotheticals;
    std::vector<FewShotExample> examples;
    RefusalReport refusals;
    double mean_hypothetical_words = 0.0;
    double std_hypothetical_words = 0.0;
    bool label_dependent = false;  // true only for the static variant
    std::vector<std::string> warnings;
};

// ---- example selection ----------------------------------------------------

std::vector<FewShotExample> select_examples_dr(const std::vector<NarrativeQuery>& queries,
                                               const DenseIndex& train_index,
                                               const std::map<std::string, std::string>& train_texts,
                                               EmbeddingProvider& query_embedder);

std::vector<FewShotExample> select_examples_cs(const std::vector<NarrativeQuery>& queries,
                                               const Graph& graph, EmbeddingProvider& query_embedder,
                                               const DenseIndex* fallback_train_index,
                                               const std::map<std::string, std::string>* train_texts,
                                               std::vector<std::string>* warnings = nullptr);

std::vector<FewShotExample> select_examples_static(const std::vector<NarrativeQuery>& queries,
                                                   const std::vector<const Document*>& train_docs);

// ---- prompting and generation --------------------------------------------

struct PromptPair {
    std::string system;
    std::string user;
};

// Examples rendered as "Narrative: ...\nText: ..." blocks in query-id order;
// an empty example list yields an empty block (the zero-shot case).
PromptPair assemble_prompt(const NarrativeQuery& target, const std::vector<FewShotExample>& examples,
                           const std::vector<NarrativeQuery>& queries,
                           const PromptTemplates& templates);

std::vector<HypotheticalDoc> generate_hypotheticals(const PromptPair& prompt,
                                                    const std::string& narrative_id, int n,
                                                    ChatProvider& llm, std::uint64_t seed,
                                                    int run_index, double temperature,
                                                    int max_tokens);

std::vector<std::string> default_refusal_lexicon();

RefusalReport scan_refusals(std::vector<HypotheticalDoc>& docs,
                            const std::vector<std::string>& lexicon = default_refusal_lexicon());

// ---- the workflow ---------------------------------------------------------

RunOutput run_pipeline(const PipelineConfig& config, const Dataset& dataset,
                       const PipelineAssets& assets);

struct MetricSummary {
    double mean = 0.0;
    double stddev = 0.0;  // population standard deviation
};

struct RunAverage {
    MetricSummary map;
    MetricSummary ndcg10;
    MetricSummary ndcg100;
    MetricSummary avg_r_precision;
    std::map<std::string, MetricSummary> per_narrative_ap;
};

RunAverage average_runs(const std::vector<EvalResult>& per_run);

}  // namespace specfi
