#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "specfi/errors.hpp"
#include "specfi/pipeline.hpp"

using namespace specfi;

namespace {

Dataset mini_dataset() {
    Dataset ds;
    ds.name = "mini";
    ds.documents = {
        {"t1", "The glacier is actually growing say local experts", {"n1"}, Split::test, 8},
        {"t2", "Glacier retreat numbers were faked by the survey", {"n1"}, Split::test, 8},
        {"t3", "Carbon dioxide makes crops thrive says farm blog", {"n2"}, Split::test, 8},
        {"t4", "More carbon means greener fields claims pundit", {"n2"}, Split::test, 7},
        {"t5", "Local bakery wins the annual bread contest", {}, Split::test, 7},
        {"r1", "Glacier Survey ice measurements are exaggerated claims insider", {"n1"}, Split::train, 8},
        {"r2", "Carbon Boon dioxide fertilizes crops worldwide", {"n2"}, Split::train, 6},
        {"r3", "Town Hall repaints the fence this weekend", {}, Split::train, 7},
    };
    attach_queries(ds, {{"n1", "glacier melt is exaggerated"},
                        {"n2", "carbon dioxide helps crops"}});
    return ds;
}

struct Fixture {
    Dataset ds = mini_dataset();
    MockEmbeddingProvider embedder{1234, 64};
    MockChatProvider chat;
    DenseIndex test_index;
    DenseIndex train_index;
    std::map<std::string, std::string> train_texts;
    InvertedIndex sparse;
    Graph graph;
    PipelineAssets assets;

    Fixture() {
        std::vector<std::pair<std::string, std::string>> test_docs;
        std::vector<std::pair<std::string, std::string>> train_docs;
        for (const auto& d : ds.documents) {
            if (d.split == Split::test) test_docs.emplace_back(d.id, d.text);
            else train_docs.emplace_back(d.id, d.text);
        }
        test_index = DenseIndex::build(test_docs, embedder);
        train_index = DenseIndex::build(train_docs, embedder);
        for (const auto& [id, text] : train_docs) train_texts[id] = text;
        sparse = InvertedIndex::build(test_docs);

        MockExtractor extractor;
        graph = build_graph(train_docs, extractor, embedder);
        graph.communities = leiden_partition(graph, 1.0, 7);
        MockSummarizer summarizer;
        summarize_communities(graph, summarizer, embedder);

        assets.test_index = &test_index;
        assets.train_index = &train_index;
        assets.train_texts = &train_texts;
        assets.sparse_index = &sparse;
        assets.graph = &graph;
        assets.query_embedder = &embedder;
        assets.hyp_embedder = &embedder;
        assets.llm = &chat;
    }
};

bool same_rankings(const RunOutput& a, const RunOutput& b) {
    if (a.per_run.size() != b.per_run.size()) return false;
    for (std::size_t r = 0; r < a.per_run.size(); ++r) {
        if (a.per_run[r].size() != b.per_run[r].size()) return false;
        for (std::size_t q = 0; q < a.per_run[r].size(); ++q) {
            const auto& x = a.per_run[r][q];
            const auto& y = b.per_run[r][q];
            if (x.query_id != y.query_id || x.entries.size() != y.entries.size()) return false;
            for (std::size_t i = 0; i < x.entries.size(); ++i)
                if (x.entries[i].doc_id != y.entries[i].doc_id ||
                    x.entries[i].score != y.entries[i].score)
                    return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("variant names round-trip") {
    for (auto v : {Variant::zero_shot, Variant::static_labeled, Variant::specfi_dr,
                   Variant::specfi_cs, Variant::cs_direct, Variant::dense_baseline,
                   Variant::sparse_baseline})
        CHECK(variant_from_string(to_string(v)) == v);
    CHECK_THROWS_AS(variant_from_string("bm42"), error);
}

TEST_CASE("config validation and digest sensitivity") {
    PipelineConfig cfg;
    cfg.validate();
    auto base = cfg.digest();
    CHECK(cfg.digest() == base);  // stable

    PipelineConfig other = cfg;
    other.n_hypotheticals = 3;
    CHECK(other.digest() != base);
    other = cfg;
    other.base_seed = 99;
    CHECK(other.digest() != base);
    other = cfg;
    other.variant = Variant::zero_shot;
    CHECK(other.digest() != base);
    other = cfg;
    other.templates.user += " {examples}";
    CHECK(other.digest() != base);

    PipelineConfig bad = cfg;
    bad.n_hypotheticals = 0;
    CHECK_THROWS_AS(bad.validate(), error);
    bad = cfg;
    bad.runs = 0;
    CHECK_THROWS_AS(bad.validate(), error);
    bad = cfg;
    bad.k = 99;
    CHECK_THROWS_AS(bad.validate(), error);
}

TEST_CASE("dense-nearest example selection picks the closest train doc") {
    Fixture f;
    auto examples = select_examples_dr(f.ds.queries, f.train_index, f.train_texts, f.embedder);
    REQUIRE(examples.size() == 2);
    CHECK(examples[0].narrative_id == "n1");
    CHECK(examples[0].example_text == f.train_texts.at("r1"));  // shared glacier vocabulary
    CHECK(examples[0].source == ExampleSource::dense_nearest);
    CHECK(examples[1].narrative_id == "n2");
    CHECK(examples[1].example_text == f.train_texts.at("r2"));

    std::map<std::string, std::string> missing;  // index id not in the map
    CHECK_THROWS_AS(select_examples_dr(f.ds.queries, f.train_index, missing, f.embedder), error);
}

TEST_CASE("static example selection uses train labels, first id wins") {
    Fixture f;
    auto train = f.ds.split_docs(Split::train);
    auto examples = select_examples_static(f.ds.queries, train);
    REQUIRE(examples.size() == 2);
    CHECK(examples[0].example_text == f.train_texts.at("r1"));
    CHECK(examples[0].source == ExampleSource::static_labeled);

    // unlabeled narrative gets a none placeholder
    auto none = select_examples_static({{"nx", "unheard of"}}, train);
    REQUIRE(none.size() == 1);
    CHECK(none[0].source == ExampleSource::none);
    CHECK(none[0].example_text.empty());
}

TEST_CASE("community-summary selection returns summaries or falls back") {
    Fixture f;
    auto examples = select_examples_cs(f.ds.queries, f.graph, f.embedder, nullptr, nullptr);
    REQUIRE(examples.size() == 2);
    for (const auto& e : examples) {
        CHECK(e.source == ExampleSource::community_summary);
        CHECK(!e.example_text.empty());
    }

    // a graph without summaries falls back to dense-nearest with a warning
    MockExtractor extractor;
    Graph bare = build_graph({{"r1", f.train_texts.at("r1")}}, extractor, f.embedder);
    std::vector<std::string> warnings;
    auto fallback =
        select_examples_cs(f.ds.queries, bare, f.embedder, &f.train_index, &f.train_texts, &warnings);
    REQUIRE(fallback.size() == 2);
    CHECK(fallback[0].source == ExampleSource::dense_nearest);
    CHECK(warnings.size() == 2);

    // ... and errors out when no fallback is available
    CHECK_THROWS_AS(select_examples_cs(f.ds.queries, bare, f.embedder, nullptr, nullptr), error);
}

TEST_CASE("assemble_prompt renders example blocks in query-id order") {
    std::vector<NarrativeQuery> queries = {{"n2", "carbon helps"}, {"n1", "glacier fine"}};
    std::vector<FewShotExample> examples = {
        {"n2", "crops love it", ExampleSource::dense_nearest},
        {"n1", "ice is thick", ExampleSource::dense_nearest},
    };
    auto templates = default_prompt_templates();
    auto prompt = assemble_prompt(queries[0], examples, queries, templates);
    CHECK(prompt.system == templates.system);
    auto n1 = prompt.user.find("Narrative: glacier fine\nText: ice is thick");
    auto n2 = prompt.user.find("Narrative: carbon helps\nText: crops love it");
    REQUIRE(n1 != std::string::npos);
    REQUIRE(n2 != std::string::npos);
    CHECK(n1 < n2);  // id order, not input order
    CHECK(prompt.user.find("{examples}") == std::string::npos);
    CHECK(prompt.user.find("{query}") == std::string::npos);
    CHECK(prompt.user.rfind("Narrative: carbon helps\nText:") != std::string::npos);
}

TEST_CASE("assemble_prompt: empty and none examples vanish; placeholders are required") {
    std::vector<NarrativeQuery> queries = {{"n1", "glacier fine"}};
    auto templates = default_prompt_templates();
    auto prompt = assemble_prompt(queries[0], {{"n1", "", ExampleSource::none}}, queries, templates);
    CHECK(prompt.user.find("Text: \n") == std::string::npos);
    CHECK(prompt.user.find("Here are some examples: \n") != std::string::npos);

    PromptTemplates bad = templates;
    bad.user = "no placeholders";
    CHECK_THROWS_AS(assemble_prompt(queries[0], {}, queries, bad), error);
    bad.user = "{query} only";
    CHECK_THROWS_AS(assemble_prompt(queries[0], {}, queries, bad), error);

    // example for a narrative absent from the query list
    CHECK_THROWS_AS(
        assemble_prompt(queries[0], {{"nx", "text", ExampleSource::dense_nearest}}, queries,
                        templates),
        error);
}

TEST_CASE("generate_hypotheticals derives distinct deterministic seeds") {
    MockChatProvider chat;
    PromptPair prompt{"sys", "Narrative: glacier melt\n"};
    auto a = generate_hypotheticals(prompt, "n1", 3, chat, 7, 0, 1.0, 256);
    auto b = generate_hypotheticals(prompt, "n1", 3, chat, 7, 0, 1.0, 256);
    REQUIRE(a.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(a[i].text == b[i].text);  // deterministic
        CHECK(a[i].narrative_id == "n1");
        CHECK(a[i].run_index == 0);
    }
    CHECK(a[0].text != a[1].text);  // per-sample seeds differ
    auto other_seed = generate_hypotheticals(prompt, "n1", 1, chat, 8, 0, 1.0, 256);
    CHECK(other_seed[0].text != a[0].text);
    auto other_narrative = generate_hypotheticals(prompt, "n2", 1, chat, 7, 0, 1.0, 256);
    CHECK(other_narrative[0].text != a[0].text);
    CHECK_THROWS_AS(generate_hypotheticals(prompt, "n1", 0, chat, 7, 0, 1.0, 256), error);
}

namespace {

struct EmptyThenOkChat : ChatProvider {
    int calls = 0;
    bool always_empty = false;
    std::string complete(const ChatRequest&) override {
        ++calls;
        if (always_empty || calls == 1) return "   ";
        return "recovered text";
    }
    std::string model_tag() const override { return "test"; }
};

}  // namespace

TEST_CASE("empty completions get one seed-perturbed retry") {
    EmptyThenOkChat chat;
    PromptPair prompt{"sys", "user"};
    auto docs = generate_hypotheticals(prompt, "n1", 1, chat, 7, 0, 1.0, 256);
    CHECK(docs[0].text == "recovered text");
    CHECK(chat.calls == 2);

    EmptyThenOkChat hopeless;
    hopeless.always_empty = true;
    try {
        generate_hypotheticals(prompt, "n1", 1, hopeless, 7, 0, 1.0, 256);
        FAIL("expected provider error");
    } catch (const error& e) {
        CHECK(e.kind() == errc::provider);
    }
    CHECK(hopeless.calls == 2);
}

TEST_CASE("refusal scan flags lexicon hits case-insensitively") {
    std::vector<HypotheticalDoc> docs = {
        {"n1", "The glacier is fine.", 0, {}},
        {"n1", "I'm sorry, but As An AI I cannot help.", 0, {}},
        {"n2", "Crops love carbon.", 0, {}},
    };
    auto report = scan_refusals(docs);
    CHECK(report.total == 3);
    CHECK(report.flagged == 1);
    CHECK(report.rate == doctest::Approx(1.0 / 3.0));
    CHECK(docs[0].refusal_flags.empty());
    CHECK(docs[1].refusal_flags.size() >= 2);  // "i'm sorry" and "as an ai" at least
    CHECK_THROWS_AS(scan_refusals(docs, {}), error);
}

TEST_CASE("run_pipeline is deterministic for every variant") {
    Fixture f;
    for (auto v : {Variant::zero_shot, Variant::static_labeled, Variant::specfi_dr,
                   Variant::specfi_cs, Variant::cs_direct, Variant::dense_baseline,
                   Variant::sparse_baseline}) {
        PipelineConfig cfg;
        cfg.variant = v;
        cfg.runs = 2;
        cfg.n_hypotheticals = 2;
        cfg.base_seed = 11;
        auto a = run_pipeline(cfg, f.ds, f.assets);
        auto b = run_pipeline(cfg, f.ds, f.assets);
        INFO("variant ", to_string(v));
        CHECK(same_rankings(a, b));
        CHECK(a.label_dependent == (v == Variant::static_labeled));
        CHECK(a.per_run.size() == 2);
        CHECK(a.per_run[0].size() == f.ds.queries.size());
    }
}

TEST_CASE("baseline runs are identical across run indices; generative seeds differ") {
    Fixture f;
    PipelineConfig cfg;
    cfg.variant = Variant::sparse_baseline;
    cfg.runs = 3;
    auto out = run_pipeline(cfg, f.ds, f.assets);
    CHECK(out.per_run[0][0].entries.size() == out.per_run[2][0].entries.size());
    for (std::size_t i = 0; i < out.per_run[0][0].entries.size(); ++i)
        CHECK(out.per_run[0][0].entries[i].doc_id == out.per_run[2][0].entries[i].doc_id);
    CHECK(out.hypotheticals.empty());

    cfg.variant = Variant::specfi_dr;
    cfg.n_hypotheticals = 1;
    auto gen = run_pipeline(cfg, f.ds, f.assets);
    REQUIRE(gen.hypotheticals.size() == 3 * f.ds.queries.size());
    CHECK(gen.hypotheticals[0].run_index == 0);
    // run seed enters the sample seed, so texts differ across runs
    std::string first_run = gen.hypotheticals[0].text;
    std::string last_run = gen.hypotheticals[2 * f.ds.queries.size()].text;
    CHECK(first_run != last_run);
    CHECK(gen.mean_hypothetical_words > 0.0);
}

TEST_CASE("the target narrative's own example is included by default, removable") {
    Fixture f;
    PipelineConfig cfg;
    cfg.variant = Variant::specfi_dr;
    cfg.runs = 1;
    cfg.n_hypotheticals = 1;
    auto with = run_pipeline(cfg, f.ds, f.assets);
    // the mock chat echoes "target description + its example text"
    CHECK(with.hypotheticals[0].text.find(f.train_texts.at("r1")) != std::string::npos);

    cfg.include_target_example = false;
    auto without = run_pipeline(cfg, f.ds, f.assets);
    CHECK(without.hypotheticals[0].text.find(f.train_texts.at("r1")) == std::string::npos);
    CHECK(with.examples.size() == without.examples.size());  // selection itself unchanged
}

TEST_CASE("label hygiene: non-static variants never see train labels") {
    Fixture f;
    Dataset stripped = strip_train_labels(f.ds);
    for (auto v : {Variant::zero_shot, Variant::specfi_dr, Variant::specfi_cs, Variant::cs_direct,
                   Variant::dense_baseline, Variant::sparse_baseline}) {
        PipelineConfig cfg;
        cfg.variant = v;
        cfg.runs = 1;
        cfg.n_hypotheticals = 2;
        auto labeled = run_pipeline(cfg, f.ds, f.assets);
        auto clean = run_pipeline(cfg, stripped, f.assets);
        INFO("variant ", to_string(v));
        CHECK(same_rankings(labeled, clean));
    }
}

TEST_CASE("missing assets raise input errors") {
    Fixture f;
    PipelineConfig cfg;
    cfg.variant = Variant::dense_baseline;
    PipelineAssets empty;
    CHECK_THROWS_AS(run_pipeline(cfg, f.ds, empty), error);
    cfg.variant = Variant::specfi_dr;
    CHECK_THROWS_AS(run_pipeline(cfg, f.ds, empty), error);

    Dataset no_queries = f.ds;
    no_queries.queries.clear();
    CHECK_THROWS_AS(run_pipeline(cfg, no_queries, f.assets), error);
}

TEST_CASE("average_runs matches a hand-computed mean and population stddev") {
    EvalResult r1;
    r1.map = 0.5;
    r1.ndcg10 = 0.6;
    r1.ndcg100 = 0.7;
    r1.avg_r_precision = 0.4;
    r1.per_narrative["n1"].ap = 0.2;
    EvalResult r2;
    r2.map = 0.9;
    r2.ndcg10 = 0.8;
    r2.ndcg100 = 0.7;
    r2.avg_r_precision = 0.6;
    r2.per_narrative["n1"].ap = 0.6;

    auto avg = average_runs({r1, r2});
    CHECK(avg.map.mean == doctest::Approx(0.7));
    CHECK(avg.map.stddev == doctest::Approx(0.2));  // population: sqrt(((.2)^2+(.2)^2)/2)
    CHECK(avg.ndcg10.mean == doctest::Approx(0.7));
    CHECK(avg.ndcg100.stddev == doctest::Approx(0.0));
    CHECK(avg.avg_r_precision.mean == doctest::Approx(0.5));
    CHECK(avg.per_narrative_ap.at("n1").mean == doctest::Approx(0.4));
    CHECK(avg.per_narrative_ap.at("n1").stddev == doctest::Approx(0.2));
    CHECK_THROWS_AS(average_runs({}), error);
}

TEST_CASE("specfi_dr beats the dense baseline on the mini corpus") {
    Fixture f;
    std::map<std::string, std::set<std::string>> judg;
    for (const auto& q : f.ds.queries) judg[q.id] = judgments(f.ds, q.id);

    auto map_of = [&](Variant v) {
        PipelineConfig cfg;
        cfg.variant = v;
        cfg.runs = 3;
        cfg.n_hypotheticals = 4;
        auto out = run_pipeline(cfg, f.ds, f.assets);
        std::vector<EvalResult> evals;
        for (const auto& run : out.per_run) evals.push_back(evaluate(run, judg));
        return average_runs(evals).map.mean;
    };
    CHECK(map_of(Variant::specfi_dr) >= map_of(Variant::dense_baseline));
}
