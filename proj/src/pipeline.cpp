#include "specfi/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "specfi/errors.hpp"
#include "specfi/text.hpp"
#include "specfi/util.hpp"

namespace specfi {

using nlohmann::json;

std::string to_string(Variant v) {
    switch (v) {
        case Variant::zero_shot: return "zero_shot";
        case Variant::static_labeled: return "static";
        case Variant::specfi_dr: return "specfi_dr";
        case Variant::specfi_cs: return "specfi_cs";
        case Variant::cs_direct: return "cs_direct";
        case Variant::dense_baseline: return "dense_baseline";
        case Variant::sparse_baseline: return "sparse_baseline";
    }
    throw invariant_error("unreachable variant");
}

Variant variant_from_string(const std::string& s) {
    if (s == "zero_shot") return Variant::zero_shot;
    if (s == "static") return Variant::static_labeled;
    if (s == "specfi_dr") return Variant::specfi_dr;
    if (s == "specfi_cs") return Variant::specfi_cs;
    if (s == "cs_direct") return Variant::cs_direct;
    if (s == "dense_baseline") return Variant::dense_baseline;
    if (s == "sparse_baseline") return Variant::sparse_baseline;
    throw input_error("unknown variant: '" + s + "'");
}

std::string to_string(ExampleSource s) {
    switch (s) {
        case ExampleSource::dense_nearest: return "dense_nearest";
        case ExampleSource::community_summary: return "community_summary";
        case ExampleSource::static_labeled: return "static_labeled";
        case ExampleSource::none: return "none";
    }
    throw invariant_error("unreachable example source");
}

PromptTemplates default_prompt_templates() {
    PromptTemplates t;
    t.system =
        "You are a disinformation investigator. Your first step is to generate short "
        "disinformation texts that sound like actual ones. You get a disinformation narrative "
        "and return a disinformation text that aligns with that narrative. Return only 1 "
        "single text!";
    t.user =
        "You are a disinformation investigator. Given a disinformation narrative, generate a "
        "short, realistic text (such as a news excerpt, blog post, or social media post) that "
        "supports or aligns with that narrative. The text should sound plausible and could be "
        "found in the wild.\n\nHere are some examples: {examples}\n\nNarrative: {query}\nText:";
    return t;
}

void PipelineConfig::validate() const {
    if (n_hypotheticals < 1) throw input_error("n_hypotheticals must be >= 1");
    if (runs < 1) throw input_error("runs must be >= 1");
    if (k < 100) throw input_error("k must be >= 100 so nDCG@100 stays computable");
}

std::string PipelineConfig::digest() const {
    json j;
    j["variant"] = to_string(variant);
    j["n_hypotheticals"] = n_hypotheticals;
    j["runs"] = runs;
    j["k"] = k;
    j["base_seed"] = base_seed;
    j["include_query_in_aggregate"] = include_query_in_aggregate;
    j["include_target_example"] = include_target_example;
    j["temperature"] = temperature;
    j["max_tokens"] = max_tokens;
    j["system_template"] = templates.system;
    j["user_template"] = templates.user;
    return hex64(fnv1a64(j.dump()));
}

// ---- example selection ----------------------------------------------------

std::vector<FewShotExample> select_examples_dr(const std::vector<NarrativeQuery>& queries,
                                               const DenseIndex& train_index,
                                               const std::map<std::string, std::string>& train_texts,
                                               EmbeddingProvider& query_embedder) {
    if (train_index.size() == 0) throw input_error("train index is empty");
    std::vector<std::string> descriptions;
    for (const auto& q : queries) descriptions.push_back(q.description);
    auto qvecs = query_embedder.embed(descriptions);
    std::vector<FewShotExample> out;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        auto ranked = train_index.top_k(qvecs[i], 1);
        const std::string& doc_id = ranked.entries.front().doc_id;
        auto it = train_texts.find(doc_id);
        if (it == train_texts.end())
            throw invariant_error("train index references unknown doc '" + doc_id + "'");
        out.push_back({queries[i].id, it->second, ExampleSource::dense_nearest});
    }
    return out;
}

std::vector<FewShotExample> select_examples_cs(const std::vector<NarrativeQuery>& queries,
                                               const Graph& graph, EmbeddingProvider& query_embedder,
                                               const DenseIndex* fallback_train_index,
                                               const std::map<std::string, std::string>* train_texts,
                                               std::vector<std::string>* warnings) {
    std::vector<FewShotExample> out;
    for (const auto& q : queries) {
        auto ranked = graph_search(q.description, graph, query_embedder);
        auto top = top_high_level_element(ranked, graph);
        if (top) {
            out.push_back({q.id, top->first, ExampleSource::community_summary});
            continue;
        }
        if (warnings)
            warnings->push_back("narrative '" + q.id +
                                "': no community summary in graph, falling back to dense nearest");
        if (!fallback_train_index || !train_texts)
            throw input_error("graph has no summaries and no dense fallback was provided");
        auto dr = select_examples_dr({q}, *fallback_train_index, *train_texts, query_embedder);
        out.push_back({q.id, dr.front().example_text, ExampleSource::dense_nearest});
    }
    return out;
}

std::vector<FewShotExample> select_examples_static(const std::vector<NarrativeQuery>& queries,
                                                   const std::vector<const Document*>& train_docs) {
    std::vector<const Document*> sorted = train_docs;
    std::sort(sorted.begin(), sorted.end(),
              [](const Document* a, const Document* b) { return a->id < b->id; });
    std::vector<FewShotExample> out;
    for (const auto& q : queries) {
        const Document* found = nullptr;
        for (const Document* d : sorted) {
            if (d->labels.count(q.id)) {
                found = d;
                break;
            }
        }
        if (found)
            out.push_back({q.id, found->text, ExampleSource::static_labeled});
        else
            out.push_back({q.id, "", ExampleSource::none});
    }
    return out;
}

// ---- prompting and generation --------------------------------------------

PromptPair assemble_prompt(const NarrativeQuery& target, const std::vector<FewShotExample>& examples,
                           const std::vector<NarrativeQuery>& queries,
                           const PromptTemplates& templates) {
    if (templates.user.find("{examples}") == std::string::npos)
        throw input_error("user template lacks the {examples} placeholder");
    if (templates.user.find("{query}") == std::string::npos)
        throw input_error("user template lacks the {query} placeholder");

    // blocks in query-id order
    std::map<std::string, const FewShotExample*> by_id;
    for (const auto& e : examples) by_id[e.narrative_id] = &e;
    std::string block;
    for (const auto& [id, ex] : by_id) {
        if (ex->source == ExampleSource::none || ex->example_text.empty()) continue;
        const NarrativeQuery* q = nullptr;
        for (const auto& cand : queries)
            if (cand.id == id) q = &cand;
        if (!q) throw invariant_error("example references unknown narrative '" + id + "'");
        if (!block.empty()) block += "\n\n";
        block += "Narrative: " + q->description + "\nText: " + ex->example_text;
    }

    std::string user = templates.user;
    auto replace_all = [](std::string& s, const std::string& from, const std::string& to) {
        std::size_t pos = 0;
        while ((pos = s.find(from, pos)) != std::string::npos) {
            s.replace(pos, from.size(), to);
            pos += to.size();
        }
    };
    replace_all(user, "{examples}", block);
    replace_all(user, "{query}", target.description);
    return {templates.system, user};
}

std::vector<HypotheticalDoc> generate_hypotheticals(const PromptPair& prompt,
                                                    const std::string& narrative_id, int n,
                                                    ChatProvider& llm, std::uint64_t seed,
                                                    int run_index, double temperature,
                                                    int max_tokens) {
    if (n < 1) throw input_error("n must be >= 1");
    std::vector<HypotheticalDoc> out;
    for (int i = 0; i < n; ++i) {
        ChatRequest req;
        req.system = prompt.system;
        req.user = prompt.user;
        req.temperature = temperature;
        req.max_tokens = max_tokens;
        req.seed = derive_seed(derive_seed(seed, narrative_id), static_cast<std::uint64_t>(i));
        std::string text = llm.complete(req);
        if (trim(text).empty()) {
            // one retry with a perturbed seed before giving up
            req.seed = derive_seed(*req.seed, std::uint64_t{1});
            text = llm.complete(req);
            if (trim(text).empty())
                throw provider_error("empty completion for narrative '" + narrative_id + "'");
        }
        out.push_back({narrative_id, trim(text), run_index, {}});
    }
    return out;
}

std::vector<std::string> default_refusal_lexicon() {
    return {
        // direct refusals
        "i cannot", "i can't", "i won't", "i will not", "cannot help", "can't help",
        "i'm sorry", "i am sorry", "i apologize", "i refuse", "i must decline",
        // role-breaking statements
        "as an ai", "as a language model", "i'm an ai", "i am an ai", "as an assistant",
        // safety-related language
        "against my guidelines", "ethical guidelines", "safety guidelines",
        "i'm not able to create", "cannot assist with", "harmful content",
        "spread misinformation", "cannot generate disinformation",
    };
}

RefusalReport scan_refusals(std::vector<HypotheticalDoc>& docs,
                            const std::vector<std::string>& lexicon) {
    if (lexicon.empty()) throw input_error("refusal lexicon must be non-empty");
    RefusalReport report;
    report.total = docs.size();
    for (auto& doc : docs) {
        std::string lower = to_lower(doc.text);
        doc.refusal_flags.clear();
        for (const auto& pattern : lexicon)
            if (lower.find(to_lower(pattern)) != std::string::npos)
                doc.refusal_flags.push_back(pattern);
        if (!doc.refusal_flags.empty()) ++report.flagged;
    }
    report.rate = report.total == 0
                      ? 0.0
                      : static_cast<double>(report.flagged) / static_cast<double>(report.total);
    return report;
}

// ---- the workflow ---------------------------------------------------------

namespace {

void require(const void* p, const char* what) {
    if (!p) throw input_error(std::string("pipeline requires ") + what);
}

std::vector<FewShotExample> select_for_variant(const PipelineConfig& config,
                                               const Dataset& dataset,
                                               const PipelineAssets& assets, RunOutput& out) {
    switch (config.variant) {
        case Variant::zero_shot:
            return {};
        case Variant::static_labeled: {
            out.label_dependent = true;
            return select_examples_static(dataset.queries, dataset.split_docs(Split::train));
        }
        case Variant::specfi_dr: {
            require(assets.train_index, "a train dense index");
            require(assets.train_texts, "train texts");
            require(assets.query_embedder, "a query embedder");
            return select_examples_dr(dataset.queries, *assets.train_index, *assets.train_texts,
                                      *assets.query_embedder);
        }
        case Variant::specfi_cs:
        case Variant::cs_direct: {
            require(assets.graph, "a summarized graph");
            require(assets.query_embedder, "a query embedder");
            return select_examples_cs(dataset.queries, *assets.graph, *assets.query_embedder,
                                      assets.train_index, assets.train_texts, &out.warnings);
        }
        default:
            return {};
    }
}

}  // namespace

RunOutput run_pipeline(const PipelineConfig& config, const Dataset& dataset,
                       const PipelineAssets& assets) {
    config.validate();
    if (dataset.queries.empty()) throw input_error("dataset has no narrative queries");

    // Label hygiene: only the static variant may see train labels.
    const Dataset* working = &dataset;
    Dataset stripped;
    if (config.variant != Variant::static_labeled) {
        stripped = strip_train_labels(dataset);
        working = &stripped;
    }

    RunOutput out;
    bool generative = config.variant == Variant::zero_shot ||
                      config.variant == Variant::static_labeled ||
                      config.variant == Variant::specfi_dr || config.variant == Variant::specfi_cs;

    if (config.variant != Variant::sparse_baseline && config.variant != Variant::dense_baseline)
        out.examples = select_for_variant(config, *working, assets, out);

    for (int run = 0; run < config.runs; ++run) {
        std::uint64_t run_seed = derive_seed(config.base_seed, static_cast<std::uint64_t>(run));
        std::vector<RankedList> lists;
        for (const auto& q : working->queries) {
            RankedList ranked;
            switch (config.variant) {
                case Variant::sparse_baseline: {
                    require(assets.sparse_index, "a sparse index");
                    ranked = assets.sparse_index->search(q.description, config.k);
                    break;
                }
                case Variant::dense_baseline: {
                    require(assets.test_index, "a test dense index");
                    require(assets.query_embedder, "a query embedder");
                    auto qvec = assets.query_embedder->embed_one(q.description);
                    ranked = assets.test_index->top_k(qvec, config.k);
                    break;
                }
                case Variant::cs_direct: {
                    require(assets.test_index, "a test dense index");
                    require(assets.query_embedder, "a query embedder");
                    const FewShotExample* ex = nullptr;
                    for (const auto& e : out.examples)
                        if (e.narrative_id == q.id) ex = &e;
                    std::string expanded = q.description;
                    if (ex && !ex->example_text.empty()) expanded += " " + ex->example_text;
                    auto qvec = assets.query_embedder->embed_one(expanded);
                    ranked = assets.test_index->top_k(qvec, config.k);
                    break;
                }
                default: {
                    require(assets.test_index, "a test dense index");
                    require(assets.hyp_embedder, "a hypothetical embedder");
                    require(assets.llm, "a chat provider");
                    std::vector<FewShotExample> block = out.examples;
                    if (!config.include_target_example)
                        std::erase_if(block, [&](const FewShotExample& e) {
                            return e.narrative_id == q.id;
                        });
                    auto prompt = assemble_prompt(q, block, working->queries, config.templates);
                    auto hyps = generate_hypotheticals(prompt, q.id, config.n_hypotheticals,
                                                       *assets.llm, run_seed, run,
                                                       config.temperature, config.max_tokens);
                    std::vector<std::string> texts;
                    for (const auto& h : hyps) texts.push_back(h.text);
                    auto vecs = assets.hyp_embedder->embed(texts);
                    std::optional<EmbeddingVector> qvec;
                    if (config.include_query_in_aggregate) {
                        require(assets.query_embedder, "a query embedder");
                        qvec = assets.query_embedder->embed_one(q.description);
                    }
                    auto agg = aggregate(vecs, config.include_query_in_aggregate,
                                         qvec ? &*qvec : nullptr);
                    ranked = assets.test_index->top_k(agg, config.k);
                    out.hypotheticals.insert(out.hypotheticals.end(), hyps.begin(), hyps.end());
                    break;
                }
            }
            ranked.query_id = q.id;
            ranked.run_seed = run_seed;
            lists.push_back(std::move(ranked));
        }
        out.per_run.push_back(std::move(lists));
    }

    if (generative) {
        out.refusals = scan_refusals(out.hypotheticals);
        std::vector<double> words;
        for (const auto& h : out.hypotheticals)
            words.push_back(static_cast<double>(word_count(h.text)));
        if (!words.empty()) {
            double mean = 0.0;
            for (double w : words) mean += w;
            mean /= static_cast<double>(words.size());
            double var = 0.0;
            for (double w : words) var += (w - mean) * (w - mean);
            var /= static_cast<double>(words.size());
            out.mean_hypothetical_words = mean;
            out.std_hypothetical_words = std::sqrt(var);
        }
    }
    return out;
}

namespace {

MetricSummary summarize(const std::vector<double>& xs) {
    MetricSummary s;
    if (xs.empty()) return s;
    for (double x : xs) s.mean += x;
    s.mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - s.mean) * (x - s.mean);
    var /= static_cast<double>(xs.size());
    s.stddev = std::sqrt(var);
    return s;
}

}  // namespace

RunAverage average_runs(const std::vector<EvalResult>& per_run) {
    if (per_run.empty()) throw input_error("average_runs requires at least one run");
    RunAverage out;
    std::vector<double> maps;
    std::vector<double> n10;
    std::vector<double> n100;
    std::vector<double> rp;
    std::map<std::string, std::vector<double>> aps;
    for (const auto& run : per_run) {
        maps.push_back(run.map);
        n10.push_back(run.ndcg10);
        n100.push_back(run.ndcg100);
        rp.push_back(run.avg_r_precision);
        for (const auto& [id, s] : run.per_narrative) aps[id].push_back(s.ap);
    }
    out.map = summarize(maps);
    out.ndcg10 = summarize(n10);
    out.ndcg100 = summarize(n100);
    out.avg_r_precision = summarize(rp);
    for (const auto& [id, xs] : aps) out.per_narrative_ap[id] = summarize(xs);
    return out;
}

}  // namespace specfi
