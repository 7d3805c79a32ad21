// specfi: command-line driver for the narrative-retrieval pipeline.
//
// Subcommands: ingest, build, run, eval, analyze, report. Artifacts live under
// a workspace directory and are content-addressed by config digest, so every
// command is idempotent for fixed inputs and seeds.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "specfi/artifacts.hpp"
#include "specfi/corpus.hpp"
#include "specfi/dense.hpp"
#include "specfi/embedding.hpp"
#include "specfi/errors.hpp"
#include "specfi/graph.hpp"
#include "specfi/ir_metrics.hpp"
#include "specfi/llm.hpp"
#include "specfi/narrative_metrics.hpp"
#include "specfi/pipeline.hpp"
#include "specfi/report.hpp"
#include "specfi/sparse.hpp"
#include "specfi/text.hpp"
#include "specfi/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace specfi;

namespace {

constexpr std::uint64_t kMockEmbedSeed = 1234;  // one embedding space for all mock providers
constexpr int kMockEmbedDim = 64;

// ---- config ---------------------------------------------------------------

// TOML-shaped key/value file: `[section]` headers, `key = value` lines,
// `#` comments. Values keep everything after the first `=`, trimmed, with
// optional surrounding quotes stripped. Nested sections are flattened with
// dots ("section.key").
std::map<std::string, std::string> parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open config file: " + path);
    std::map<std::string, std::string> out;
    std::string line;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw input_error(path + ":" + std::to_string(lineno) + ": unterminated section");
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw input_error(path + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (value.size() >= 2 && ((value.front() == '"' && value.back() == '"') ||
                                  (value.front() == '\'' && value.back() == '\'')))
            value = value.substr(1, value.size() - 2);
        if (key.empty())
            throw input_error(path + ":" + std::to_string(lineno) + ": empty key");
        out[section.empty() ? key : section + "." + key] = value;
    }
    return out;
}

std::string cfg(const std::map<std::string, std::string>& c, const std::string& key,
                const std::string& fallback) {
    auto it = c.find(key);
    return it == c.end() ? fallback : it->second;
}

int cfg_int(const std::map<std::string, std::string>& c, const std::string& key, int fallback) {
    auto it = c.find(key);
    if (it == c.end()) return fallback;
    try {
        return std::stoi(it->second);
    } catch (const std::exception&) {
        throw input_error("config key '" + key + "' is not an integer: " + it->second);
    }
}

const char* kQueryInstruction =
    "Instruct: Given a narrative description as a query, retrieve passages that serve this "
    "narrative; can be entailed from the narrative; can be aligned logically with the "
    "narrative\nQuery: {query}";
const char* kHypInstruction =
    "Instruct: Given a text as a query retrieve relevant passages that align with narratives "
    "similar to the query\nQuery: {query}";

// ---- workspace ------------------------------------------------------------

struct Workspace {
    fs::path root;

    fs::path dataset_jsonl(const std::string& name) const {
        return root / "datasets" / (name + ".jsonl");
    }
    fs::path dataset_meta(const std::string& name) const {
        return root / "datasets" / (name + ".meta.json");
    }
    fs::path dataset_queries(const std::string& name) const {
        return root / "datasets" / (name + ".queries.json");
    }
    fs::path index_dir(const std::string& name) const { return root / "indexes" / name; }
    fs::path graph_dir(const std::string& name) const { return root / "graphs" / name; }
    fs::path cache_dir() const { return root / "cache" / "embeddings"; }
    fs::path runs_dir() const { return root / "runs"; }
    fs::path eval_dir() const { return root / "eval"; }
    fs::path analysis_dir() const { return root / "analysis"; }
};

// Advisory lock: concurrent commands on one workspace get a warning, nothing
// stronger.
class WorkspaceLock {
public:
    explicit WorkspaceLock(const fs::path& root) : path_(root / ".lock") {
        fs::create_directories(root);
        if (fs::exists(path_)) {
            std::cerr << "warning: workspace lock " << path_
                      << " exists; another command may be running\n";
            owned_ = false;
            return;
        }
        std::ofstream out(path_);
        out << "locked\n";
        owned_ = true;
    }
    ~WorkspaceLock() {
        if (owned_) {
            std::error_code ec;
            fs::remove(path_, ec);
        }
    }

private:
    fs::path path_;
    bool owned_ = false;
};

std::string iso_now() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

class StageTimer {
public:
    void start(const std::string& stage) {
        current_ = stage;
        t0_ = std::chrono::steady_clock::now();
    }
    void stop() {
        auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
        seconds_[current_] += dt;
    }
    const std::map<std::string, double>& seconds() const { return seconds_; }

private:
    std::string current_;
    std::chrono::steady_clock::time_point t0_;
    std::map<std::string, double> seconds_;
};

Dataset load_workspace_dataset(const Workspace& ws, const std::string& name) {
    auto path = ws.dataset_jsonl(name);
    if (!fs::exists(path))
        throw input_error("dataset '" + name + "' not ingested (missing " + path.string() + ")");
    Dataset ds = load_dataset(path.string(), CorpusFormat::jsonl);
    ds.name = name;
    auto qpath = ws.dataset_queries(name);
    if (fs::exists(qpath)) {
        json arr = json::parse(read_file(qpath.string()), nullptr, false);
        if (arr.is_discarded() || !arr.is_array())
            throw input_error("malformed queries file: " + qpath.string());
        std::vector<NarrativeQuery> queries;
        for (const auto& rec : arr)
            queries.push_back({rec.at("id").get<std::string>(),
                               rec.at("description").get<std::string>()});
        attach_queries(ds, std::move(queries));
    }
    return ds;
}

// ---- providers ------------------------------------------------------------

struct Providers {
    std::shared_ptr<EmbeddingProvider> query;
    std::shared_ptr<EmbeddingProvider> document;
    std::shared_ptr<EmbeddingProvider> hypothetical;
    std::shared_ptr<EmbeddingProvider> metrics;
    std::shared_ptr<ChatProvider> chat;
};

std::shared_ptr<EmbeddingProvider> make_embedder(const std::map<std::string, std::string>& c,
                                                 const std::string& role, bool mock,
                                                 const Workspace& ws,
                                                 const std::string& default_instruction) {
    std::string instruction = cfg(c, "embeddings." + role + "_instruction", default_instruction);
    if (mock) {
        // One shared token space; role instructions are irrelevant to the mock.
        return std::make_shared<MockEmbeddingProvider>(kMockEmbedSeed, kMockEmbedDim);
    }
    ProviderConfig pc;
    pc.endpoint = cfg(c, "embeddings.endpoint", "");
    if (pc.endpoint.empty())
        throw input_error("embeddings.endpoint missing from config (or pass --mock)");
    pc.model = cfg(c, "embeddings.model", "embedding-model");
    pc.dimension = cfg_int(c, "embeddings.dimension", 1024);
    pc.batch_size = cfg_int(c, "embeddings.batch_size", 16);
    pc.max_retries = cfg_int(c, "embeddings.max_retries", 3);
    pc.timeout_ms = cfg_int(c, "embeddings.timeout_ms", 30000);
    pc.api_key_env = cfg(c, "embeddings.api_key_env", "SPECFI_API_KEY");
    auto inner = std::make_shared<HttpEmbeddingProvider>(pc);
    auto cache = std::make_shared<EmbeddingCache>(ws.cache_dir().string());
    return std::make_shared<CachedEmbeddingProvider>(inner, instruction, cache);
}

Providers make_providers(const std::map<std::string, std::string>& c, bool mock,
                         const Workspace& ws) {
    Providers p;
    p.query = make_embedder(c, "query", mock, ws, kQueryInstruction);
    p.document = make_embedder(c, "document", mock, ws, "");
    p.hypothetical = make_embedder(c, "hypothetical", mock, ws, kHypInstruction);
    p.metrics = make_embedder(c, "metrics", mock, ws, "");
    if (mock) {
        p.chat = std::make_shared<MockChatProvider>();
    } else {
        ProviderConfig pc;
        pc.endpoint = cfg(c, "chat.endpoint", "");
        if (!pc.endpoint.empty()) {
            pc.model = cfg(c, "chat.model", "chat-model");
            pc.max_retries = cfg_int(c, "chat.max_retries", 3);
            pc.timeout_ms = cfg_int(c, "chat.timeout_ms", 60000);
            pc.api_key_env = cfg(c, "chat.api_key_env", "SPECFI_API_KEY");
            p.chat = std::make_shared<HttpChatProvider>(pc);
        }
    }
    return p;
}

// ---- run artifact reload --------------------------------------------------

struct LoadedRun {
    std::string dataset;
    std::string variant;
    std::string config_digest;
    std::uint64_t base_seed = 0;
    bool label_dependent = false;
    double refusal_rate = 0.0;
    std::size_t refusal_total = 0;
    std::vector<std::vector<RankedList>> per_run;
};

LoadedRun load_run_artifact(const std::string& path) {
    json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw input_error("run artifact is not valid JSON: " + path);
    LoadedRun r;
    try {
        r.dataset = j.at("dataset").get<std::string>();
        r.variant = j.at("variant").get<std::string>();
        r.config_digest = j.at("config_digest").get<std::string>();
        r.base_seed = j.at("base_seed").get<std::uint64_t>();
        r.label_dependent = j.at("label_dependent").get<bool>();
        r.refusal_rate = j.at("refusals").at("rate").get<double>();
        r.refusal_total = j.at("refusals").at("total").get<std::size_t>();
        for (const auto& run : j.at("per_run")) {
            std::vector<RankedList> lists;
            for (const auto& entry : run) {
                RankedList rl;
                rl.query_id = entry.at("narrative_id").get<std::string>();
                rl.run_seed = entry.at("run_seed").get<std::uint64_t>();
                for (const auto& d : entry.at("ranking"))
                    rl.entries.push_back(
                        {d.at("id").get<std::string>(), d.at("score").get<double>()});
                lists.push_back(std::move(rl));
            }
            r.per_run.push_back(std::move(lists));
        }
    } catch (const json::exception& e) {
        throw input_error("run artifact " + path + " is malformed: " + e.what());
    }
    return r;
}

// ---- commands -------------------------------------------------------------

int cmd_ingest(const Workspace& ws, const std::string& dataset, const std::string& taxonomy,
               const std::string& format) {
    WorkspaceLock lock(ws.root);
    Dataset ds;
    if (dataset == "synthetic") {
        ds = synthetic_dataset();
    } else {
        CorpusFormat fmt;
        if (format == "csv")
            fmt = CorpusFormat::csv;
        else if (format == "jsonl")
            fmt = CorpusFormat::jsonl;
        else if (format == "auto")
            fmt = fs::path(dataset).extension() == ".csv" ? CorpusFormat::csv : CorpusFormat::jsonl;
        else
            throw input_error("unknown format '" + format + "' (expected jsonl, csv or auto)");
        ds = load_dataset(dataset, fmt);
        ds.name = fs::path(dataset).stem().string();
        if (taxonomy.empty())
            throw input_error("--taxonomy is required for file-based datasets");
        attach_queries(ds, build_queries(load_taxonomy(taxonomy)));
    }

    fs::create_directories(ws.root / "datasets");
    auto out_path = ws.dataset_jsonl(ds.name);
    save_dataset_jsonl(ds, out_path.string());
    json queries = json::array();
    for (const auto& q : ds.queries)
        queries.push_back({{"id", q.id}, {"description", q.description}});
    write_file(ws.dataset_queries(ds.name).string(), queries.dump(2));

    auto stats = dataset_stats(ds);
    json meta;
    meta["name"] = ds.name;
    meta["digest"] = hex64(fnv1a64(read_file(out_path.string())));
    meta["narratives"] = stats.narratives;
    meta["total_texts"] = stats.total_texts;
    meta["mean_texts_per_narrative"] = stats.mean_texts_per_narrative;
    meta["std_texts_per_narrative"] = stats.std_texts_per_narrative;
    meta["mean_words_per_text"] = stats.mean_words_per_text;
    meta["std_words_per_text"] = stats.std_words_per_text;
    meta["disinfo_fraction"] = stats.disinfo_fraction;
    meta["warnings"] = ds.load_warnings;
    write_file(ws.dataset_meta(ds.name).string(), meta.dump(2));

    for (const auto& w : ds.load_warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "ingested '" << ds.name << "': " << stats.total_texts << " texts, "
              << stats.narratives << " narratives, digest " << meta["digest"].get<std::string>()
              << '\n';
    return 0;
}

std::vector<std::pair<std::string, std::string>> split_pairs(const Dataset& ds, Split split) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto* d : ds.split_docs(split)) out.emplace_back(d->id, d->text);
    return out;
}

int cmd_build(const Workspace& ws, const std::string& what, const std::string& dataset, bool mock,
              const std::map<std::string, std::string>& config) {
    WorkspaceLock lock(ws.root);
    Dataset ds = load_workspace_dataset(ws, dataset);
    auto providers = make_providers(config, mock, ws);
    StageTimer timer;
    std::string started = iso_now();

    fs::path dir = ws.index_dir(dataset);
    fs::create_directories(dir);
    json manifest;

    if (what == "sparse") {
        timer.start("sparse_build");
        auto index = InvertedIndex::build(split_pairs(ds, Split::test));
        timer.stop();
        json art;
        art["dataset"] = dataset;
        art["docs"] = index.doc_count();
        art["avgdl"] = index.avgdl();
        write_file((dir / "sparse.json").string(), art.dump(2));
        manifest["artifact"] = "sparse.json";
    } else if (what == "dense") {
        timer.start("dense_test");
        auto test_index = DenseIndex::build(split_pairs(ds, Split::test), *providers.document);
        timer.stop();
        timer.start("dense_train");
        auto train_index = DenseIndex::build(split_pairs(ds, Split::train), *providers.document);
        timer.stop();
        test_index.save((dir / "dense_test").string());
        train_index.save((dir / "dense_train").string());
        manifest["artifact"] = "dense_test,dense_train";
        manifest["model"] = test_index.model_tag();
    } else if (what == "graph") {
        // Graph over the train split only; the test corpus must stay unseen.
        timer.start("graph_extract");
        BuildGraphReport report;
        std::unique_ptr<Extractor> extractor;
        std::unique_ptr<Summarizer> summarizer;
        if (mock || !providers.chat) {
            extractor = std::make_unique<MockExtractor>();
            summarizer = std::make_unique<MockSummarizer>();
        } else {
            extractor = std::make_unique<LlmExtractor>(*providers.chat);
            summarizer = std::make_unique<LlmSummarizer>(*providers.chat);
        }
        Graph g = build_graph(split_pairs(ds, Split::train), *extractor, *providers.document,
                              &report);
        timer.stop();
        timer.start("graph_communities");
        g.communities = leiden_partition(g, 1.0, 7);
        timer.stop();
        timer.start("graph_summaries");
        std::vector<std::string> log;
        summarize_communities(g, *summarizer, *providers.document, {}, &log);
        timer.stop();
        fs::path gdir = ws.graph_dir(dataset);
        fs::create_directories(gdir);
        g.save(gdir.string());
        manifest["artifact"] = gdir.string();
        manifest["nodes"] = g.node_count();
        manifest["communities"] = g.communities.size();
        manifest["failed_docs"] = report.failed_docs;
        for (const auto& line : report.log) std::cerr << "note: " << line << '\n';
        for (const auto& line : log) std::cerr << "note: " << line << '\n';
    } else {
        throw input_error("unknown build target '" + what + "' (expected sparse, dense or graph)");
    }

    manifest["dataset"] = dataset;
    manifest["what"] = what;
    manifest["started_at"] = started;
    manifest["finished_at"] = iso_now();
    manifest["stage_seconds"] = timer.seconds();
    write_file((dir / (what + ".manifest.json")).string(), manifest.dump(2));
    std::cout << "built " << what << " for '" << dataset << "'\n";
    return 0;
}

int cmd_run(const Workspace& ws, const std::string& dataset, const PipelineConfig& config,
            bool mock, const std::map<std::string, std::string>& cfg_map) {
    WorkspaceLock lock(ws.root);
    Dataset ds = load_workspace_dataset(ws, dataset);
    auto providers = make_providers(cfg_map, mock, ws);

    PipelineAssets assets;
    assets.query_embedder = providers.query.get();
    assets.hyp_embedder = providers.hypothetical.get();
    assets.llm = providers.chat.get();

    // Load only what the variant needs; missing prerequisites surface as
    // input errors from the pipeline itself.
    std::optional<InvertedIndex> sparse;
    std::optional<DenseIndex> test_index;
    std::optional<DenseIndex> train_index;
    std::map<std::string, std::string> train_texts;
    std::optional<Graph> graph;

    if (config.variant == Variant::sparse_baseline) {
        sparse = InvertedIndex::build(split_pairs(ds, Split::test));
        assets.sparse_index = &*sparse;
    } else {
        fs::path dense_test = ws.index_dir(dataset) / "dense_test";
        if (!fs::exists(dense_test))
            throw input_error("dense index not built for '" + dataset +
                              "' (run: specfi build dense --dataset " + dataset + ")");
        test_index = DenseIndex::load(dense_test.string());
        assets.test_index = &*test_index;
        fs::path dense_train = ws.index_dir(dataset) / "dense_train";
        if (fs::exists(dense_train)) {
            train_index = DenseIndex::load(dense_train.string());
            assets.train_index = &*train_index;
            for (const auto* d : ds.split_docs(Split::train)) train_texts[d->id] = d->text;
            assets.train_texts = &train_texts;
        }
        if (config.variant == Variant::specfi_cs || config.variant == Variant::cs_direct) {
            fs::path gdir = ws.graph_dir(dataset);
            if (!fs::exists(gdir))
                throw input_error("graph not built for '" + dataset +
                                  "' (run: specfi build graph --dataset " + dataset + ")");
            graph = Graph::load(gdir.string());
            assets.graph = &*graph;
        }
    }

    StageTimer timer;
    std::string started = iso_now();
    timer.start("run");
    RunOutput output = run_pipeline(config, ds, assets);
    timer.stop();

    fs::create_directories(ws.runs_dir());
    std::string digest = config.digest();
    std::string stem = dataset + "-" + to_string(config.variant) + "-" + digest;
    fs::path artifact = ws.runs_dir() / (stem + ".json");
    write_file(artifact.string(), run_artifact_json(config, dataset, output));

    RunManifest manifest;
    manifest.config_digest = digest;
    manifest.dataset_name = dataset;
    manifest.variant = to_string(config.variant);
    manifest.base_seed = config.base_seed;
    manifest.started_at = started;
    manifest.finished_at = iso_now();
    manifest.stage_seconds = timer.seconds();
    double total = 0.0;
    for (const auto& [_, s] : timer.seconds()) total += s;
    std::size_t cells = ds.queries.size() * static_cast<std::size_t>(config.runs);
    manifest.seconds_per_narrative = cells == 0 ? 0.0 : total / static_cast<double>(cells);
    write_file((ws.runs_dir() / (stem + ".manifest.json")).string(), manifest_json(manifest));

    for (const auto& w : output.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "run artifact: " << artifact.string() << '\n';
    if (output.refusals.total > 0)
        std::cout << "refusal rate: " << output.refusals.rate << " (" << output.refusals.flagged
                  << "/" << output.refusals.total << ")\n";
    return 0;
}

int cmd_eval(const Workspace& ws, const std::string& run_path, const std::string& dataset_flag) {
    WorkspaceLock lock(ws.root);
    LoadedRun run = load_run_artifact(run_path);
    std::string dataset = dataset_flag.empty() ? run.dataset : dataset_flag;
    Dataset ds = load_workspace_dataset(ws, dataset);

    std::map<std::string, std::set<std::string>> judg;
    for (const auto& q : ds.queries) judg[q.id] = judgments(ds, q.id);

    std::vector<EvalResult> per_run;
    for (const auto& lists : run.per_run) per_run.push_back(evaluate(lists, judg));
    RunAverage avg = average_runs(per_run);

    json j;
    j["system"] = run.variant;
    j["dataset"] = dataset;
    j["config_digest"] = run.config_digest;
    j["runs"] = run.per_run.size();
    j["label_dependent"] = run.label_dependent;
    j["refusal_rate"] = run.refusal_rate;
    j["map"] = {{"mean", avg.map.mean}, {"std", avg.map.stddev}};
    j["ndcg10"] = {{"mean", avg.ndcg10.mean}, {"std", avg.ndcg10.stddev}};
    j["ndcg100"] = {{"mean", avg.ndcg100.mean}, {"std", avg.ndcg100.stddev}};
    j["r_precision"] = {{"mean", avg.avg_r_precision.mean}, {"std", avg.avg_r_precision.stddev}};
    for (const auto& [id, s] : avg.per_narrative_ap)
        j["per_narrative_ap"][id] = {{"mean", s.mean}, {"std", s.stddev}};
    if (!per_run.empty() && !per_run.front().excluded.empty())
        j["excluded_narratives"] = per_run.front().excluded;

    fs::create_directories(ws.eval_dir());
    fs::path out = ws.eval_dir() / (dataset + "-" + run.variant + "-" + run.config_digest + ".json");
    write_file(out.string(), j.dump(2));
    write_file((ws.eval_dir() / (dataset + "-" + run.variant + "-" + run.config_digest + ".csv"))
                   .string(),
               eval_to_csv(per_run.front()));
    std::printf("%s on %s: MAP %.4f  nDCG@10 %.4f  nDCG@100 %.4f  R-Prec %.4f\n",
                run.variant.c_str(), dataset.c_str(), avg.map.mean, avg.ndcg10.mean,
                avg.ndcg100.mean, avg.avg_r_precision.mean);
    std::cout << "eval artifact: " << out.string() << '\n';
    return 0;
}

int cmd_analyze(const Workspace& ws, const std::string& dataset,
                const std::vector<std::string>& eval_paths, std::size_t permutations,
                std::uint64_t seed, bool mock, const std::map<std::string, std::string>& config) {
    WorkspaceLock lock(ws.root);
    if (eval_paths.empty()) throw input_error("analyze requires at least one --eval file");
    Dataset ds = load_workspace_dataset(ws, dataset);
    auto providers = make_providers(config, mock, ws);

    auto sets = build_sets(ds, *providers.metrics);
    MetricTable table = build_metric_table(sets);

    for (const auto& path : eval_paths) {
        json j = json::parse(read_file(path), nullptr, false);
        if (j.is_discarded()) throw input_error("eval file is not valid JSON: " + path);
        std::string system = j.value("system", fs::path(path).stem().string());
        if (!j.contains("per_narrative_ap"))
            throw input_error("eval file lacks per_narrative_ap: " + path);
        for (auto& [id, row] : table.rows) {
            auto it = j["per_narrative_ap"].find(id);
            if (it == j["per_narrative_ap"].end())
                throw input_error("eval file " + path + " has no AP for narrative '" + id + "'");
            row.system_ap[system] = it->at("mean").get<double>();
        }
    }

    AnalyzeOptions opts;
    opts.permutation_iterations = permutations;
    opts.seed = seed;
    AnalysisReport report = analyze_metric_table(table, opts);

    fs::create_directories(ws.analysis_dir());
    fs::path metrics_csv = ws.analysis_dir() / (dataset + "-metrics.csv");
    fs::path analysis = ws.analysis_dir() / (dataset + "-analysis.json");
    write_file(metrics_csv.string(), table.to_csv());
    write_file(analysis.string(), analysis_to_json(report));
    std::cout << render_correlation_table(report);
    std::cout << "analysis artifact: " << analysis.string() << '\n';
    return 0;
}

int cmd_report(const std::string& analysis_path, const std::vector<std::string>& eval_paths,
               const std::vector<std::string>& run_paths) {
    std::ostringstream out;
    bool label_dependent = false;

    if (!eval_paths.empty()) {
        out << "Retrieval results\n";
        out << std::left;
        out.width(24);
        out << "System";
        for (const char* col : {"MAP", "nDCG@10", "nDCG@100", "R-Prec"}) {
            out.width(12);
            out << col;
        }
        out << '\n';
        for (const auto& path : eval_paths) {
            json j = json::parse(read_file(path), nullptr, false);
            if (j.is_discarded()) throw input_error("eval file is not valid JSON: " + path);
            out.width(24);
            out << j.value("system", path);
            char buf[32];
            for (const char* key : {"map", "ndcg10", "ndcg100", "r_precision"}) {
                std::snprintf(buf, sizeof(buf), "%.4f", j.at(key).at("mean").get<double>());
                out.width(12);
                out << buf;
            }
            out << '\n';
            if (j.value("label_dependent", false)) label_dependent = true;
            if (j.value("refusal_rate", 0.0) > 0.0 || j.contains("refusal_rate"))
                out << "  refusal rate (" << j.value("system", path)
                    << "): " << j.value("refusal_rate", 0.0) << '\n';
        }
        out << '\n';
    }

    for (const auto& path : run_paths) {
        LoadedRun run = load_run_artifact(path);
        out << "Run " << run.config_digest << " (" << run.variant << " on " << run.dataset
            << "): " << run.per_run.size() << " runs";
        if (run.refusal_total > 0) out << ", refusal rate " << run.refusal_rate;
        out << '\n';
        if (run.label_dependent) label_dependent = true;
    }
    if (!run_paths.empty()) out << '\n';

    if (!analysis_path.empty()) {
        json j = json::parse(read_file(analysis_path), nullptr, false);
        if (j.is_discarded())
            throw input_error("analysis file is not valid JSON: " + analysis_path);
        out << "Correlation analysis (n = " << j.at("n").get<std::size_t>() << ", "
            << j.at("permutation_iterations").get<std::size_t>() << " permutation iterations)\n";
        for (const auto& [system, s] : j.at("systems").items()) {
            out << "  " << system << ":\n";
            for (const char* block : {"original", "partial"}) {
                for (const char* metric : {"D_i", "V_i"}) {
                    const auto& c = s.at(block).at(metric);
                    char buf[96];
                    std::snprintf(buf, sizeof(buf), "    %s %s: rho %+.3f (p_fdr %.3g)\n", block,
                                  metric, c.at("rho").get<double>(),
                                  c.value("p_fdr", c.at("p_raw").get<double>()));
                    out << buf;
                }
            }
            if (s.contains("permutation_p_V_i"))
                out << "    permutation p (V_i): " << s.at("permutation_p_V_i").get<double>()
                    << '\n';
            if (s.contains("median_split_V_i"))
                out << "    median split (V_i): MAP drop "
                    << s.at("median_split_V_i").at("drop_percent").get<double>() << "%\n";
        }
    }

    if (label_dependent)
        out << "\nNOTE: at least one reported setup used train-split labels (static examples); "
               "its scores are not comparable to label-free variants.\n";

    std::cout << out.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SpecFi narrative-retrieval pipeline"};
    app.require_subcommand(1);

    std::string workspace = "workspace";
    std::string config_path;
    bool mock = false;
    app.add_option("--workspace", workspace, "Workspace directory for artifacts");
    app.add_option("--config", config_path, "TOML-shaped config file");
    app.add_flag("--mock", mock, "Force deterministic mock providers (offline)");

    std::string dataset;
    std::string taxonomy;
    std::string format = "auto";
    auto* ingest = app.add_subcommand("ingest", "Load a dataset + taxonomy into the workspace");
    ingest->add_option("--dataset", dataset, "Dataset file (jsonl/csv) or 'synthetic'")
        ->required();
    ingest->add_option("--taxonomy", taxonomy, "Taxonomy JSON file");
    ingest->add_option("--format", format, "jsonl, csv or auto");

    std::string what;
    auto* build = app.add_subcommand("build", "Build an index or graph");
    build->add_option("what", what, "sparse, dense or graph")->required();
    build->add_option("--dataset", dataset, "Ingested dataset name")->required();

    std::string variant_str = "specfi_dr";
    int runs = 10;
    int n_hyp = 10;
    std::uint64_t seed = 0;
    std::size_t k = 100;
    auto* run = app.add_subcommand("run", "Execute a retrieval variant");
    run->add_option("--dataset", dataset, "Ingested dataset name")->required();
    run->add_option("--variant", variant_str, "Pipeline variant");
    run->add_option("--runs", runs, "Independent repetitions");
    run->add_option("--seed", seed, "Base seed");
    run->add_option("--n-hyp", n_hyp, "Hypothetical documents per narrative per run");
    run->add_option("--k", k, "Retrieval cutoff (>= 100)");

    std::string run_path;
    auto* eval = app.add_subcommand("eval", "Score a run artifact against judgments");
    eval->add_option("--run", run_path, "Run artifact JSON")->required();
    eval->add_option("--dataset", dataset, "Override dataset name");

    std::vector<std::string> eval_paths;
    std::size_t permutations = 10000;
    std::uint64_t analyze_seed = 42;
    auto* analyze = app.add_subcommand("analyze", "Correlate metrics with retrieval quality");
    analyze->add_option("--dataset", dataset, "Ingested dataset name")->required();
    analyze->add_option("--eval", eval_paths, "Eval artifact JSON (repeatable)")->required();
    analyze->add_option("--permutations", permutations, "Permutation test iterations");
    analyze->add_option("--seed", analyze_seed, "Analysis seed");

    std::string analysis_path;
    std::vector<std::string> report_runs;
    auto* report = app.add_subcommand("report", "Render human-readable tables from artifacts");
    report->add_option("--analysis", analysis_path, "Analysis artifact JSON");
    report->add_option("--eval", eval_paths, "Eval artifact JSON (repeatable)");
    report->add_option("--run", report_runs, "Run artifact JSON (repeatable)");

    // global options (--workspace/--config/--mock) may follow the subcommand
    for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        std::map<std::string, std::string> config;
        if (!config_path.empty()) config = parse_config(config_path);
        Workspace ws{fs::path(workspace)};

        if (ingest->parsed()) return cmd_ingest(ws, dataset, taxonomy, format);
        if (build->parsed()) return cmd_build(ws, what, dataset, mock, config);
        if (run->parsed()) {
            PipelineConfig pc;
            pc.variant = variant_from_string(variant_str);
            pc.runs = runs;
            pc.n_hypotheticals = n_hyp;
            pc.base_seed = seed;
            pc.k = k;
            pc.temperature = std::stod(cfg(config, "chat.temperature", "1.0"));
            pc.max_tokens = cfg_int(config, "chat.max_tokens", 256);
            return cmd_run(ws, dataset, pc, mock, config);
        }
        if (eval->parsed()) return cmd_eval(ws, run_path, dataset);
        if (analyze->parsed())
            return cmd_analyze(ws, dataset, eval_paths, permutations, analyze_seed, mock, config);
        if (report->parsed()) return cmd_report(analysis_path, eval_paths, report_runs);
        throw input_error("no subcommand given");
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 4;
    }
}
