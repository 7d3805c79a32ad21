#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace specfi {

enum class Split { train, test };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct Document {
    std::string id;
    std::string text;
    std::set<std::string> labels;  // empty for non-disinformation texts
    Split split = Split::test;
    std::size_t words = 0;  // whitespace-token count of text
};

struct NarrativeQuery {
    std::string id;
    std::string description;
};

struct Dataset {
    std::string name;
    std::vector<Document> documents;
    std::vector<NarrativeQuery> queries;
    std::vector<std::string> load_warnings;

    std::vector<const Document*> split_docs(Split s) const;
    const NarrativeQuery* find_query(const std::string& id) const;
};

struct DatasetStats {
    std::size_t narratives = 0;  // attested in the test split
    double mean_texts_per_narrative = 0.0;
    double std_texts_per_narrative = 0.0;
    double mean_words_per_text = 0.0;
    double std_words_per_text = 0.0;
    std::size_t total_texts = 0;
    double disinfo_fraction = 0.0;
};

enum class CorpusFormat { jsonl, csv };

Dataset load_dataset(const std::string& path, CorpusFormat format);
void save_dataset_jsonl(const Dataset& dataset, const std::string& path);

// Taxonomy file: JSON array of {"id", "narrative", "subnarrative"}.
struct TaxonomyEntry {
    std::string id;
    std::string narrative;
    std::string subnarrative;
};

std::vector<TaxonomyEntry> load_taxonomy(const std::string& path);

// Query text = level-1 label + ". " + level-2 label.
std::vector<NarrativeQuery> build_queries(const std::vector<TaxonomyEntry>& taxonomy);

// Cross-checks query ids against test-split labels and attaches warnings.
void attach_queries(Dataset& dataset, std::vector<NarrativeQuery> queries);

// Relevant test-split document ids for one narrative.
std::set<std::string> judgments(const Dataset& dataset, const std::string& narrative_id);

DatasetStats dataset_stats(const Dataset& dataset);

// Copy with train-split labels removed; the non-static pipeline variants only
// ever see this view, so label hygiene holds by construction.
Dataset strip_train_labels(const Dataset& dataset);

}  // namespace specfi
