#include "specfi/artifacts.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "specfi/errors.hpp"
#include "specfi/text.hpp"
#include "specfi/util.hpp"

namespace specfi {

using nlohmann::json;

std::string run_artifact_json(const PipelineConfig& config, const std::string& dataset_name,
                              const RunOutput& output) {
    json j;
    j["config_digest"] = config.digest();
    j["dataset"] = dataset_name;
    j["variant"] = to_string(config.variant);
    j["base_seed"] = config.base_seed;
    j["runs"] = config.runs;
    j["k"] = config.k;
    j["label_dependent"] = output.label_dependent;

    json runs = json::array();
    for (const auto& run : output.per_run) {
        json lists = json::array();
        for (const auto& ranked : run) {
            json entry;
            entry["narrative_id"] = ranked.query_id;
            entry["run_seed"] = ranked.run_seed;
            json docs = json::array();
            for (const auto& e : ranked.entries) docs.push_back({{"id", e.doc_id}, {"score", e.score}});
            entry["ranking"] = std::move(docs);
            lists.push_back(std::move(entry));
        }
        runs.push_back(std::move(lists));
    }
    j["per_run"] = std::move(runs);

    json examples = json::array();
    for (const auto& e : output.examples)
        examples.push_back({{"narrative_id", e.narrative_id},
                            {"source", to_string(e.source)},
                            {"text", e.example_text}});
    j["examples"] = std::move(examples);

    json hyps = json::array();
    for (const auto& h : output.hypotheticals)
        hyps.push_back({{"narrative_id", h.narrative_id},
                        {"run", h.run_index},
                        {"text", h.text},
                        {"refusal_flags", h.refusal_flags}});
    j["hypotheticals"] = std::move(hyps);

    j["refusals"] = {{"total", output.refusals.total},
                     {"flagged", output.refusals.flagged},
                     {"rate", output.refusals.rate}};
    j["hypothetical_words"] = {{"mean", output.mean_hypothetical_words},
                               {"std", output.std_hypothetical_words}};
    j["warnings"] = output.warnings;
    return j.dump(2);
}

std::string manifest_json(const RunManifest& manifest) {
    json j;
    j["config_digest"] = manifest.config_digest;
    j["dataset"] = manifest.dataset_name;
    j["variant"] = manifest.variant;
    j["base_seed"] = manifest.base_seed;
    j["started_at"] = manifest.started_at;
    j["finished_at"] = manifest.finished_at;
    j["stage_seconds"] = manifest.stage_seconds;
    j["seconds_per_narrative"] = manifest.seconds_per_narrative;
    j["valid"] = manifest.valid;
    return j.dump(2);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot write file: " + path);
    out << content;
}

namespace {

struct Cluster {
    const char* id;
    const char* topic;       // appears in query and documents
    const char* entity;      // capitalized span for the mock extractor
    const char* level1;      // taxonomy labels
    const char* level2;
    std::vector<const char*> vocab;  // cluster vocabulary, documents only
};

const std::vector<Cluster>& clusters() {
    static const std::vector<Cluster> cs = {
        {"n1", "glacier", "Northern Ice Survey", "Frozen regions are stable",
         "Glacier retreat is exaggerated",
         {"icecap", "meltwater", "moraine", "crevasse", "firn", "snowpack"}},
        {"n2", "carbon", "Plant Growth Council", "Emissions are beneficial",
         "Carbon enrichment helps crops",
         {"fertilizer", "greening", "photosynthesis", "biomass", "sequester", "yield"}},
        {"n3", "sunspot", "Solar Cycle Watch", "Warming is natural",
         "Sunspot cycles explain temperature",
         {"irradiance", "heliosphere", "flare", "magnetograph", "corona", "plasma"}},
        {"n4", "windmill", "Rural Energy Forum", "Clean energy fails",
         "Windmill power is unreliable",
         {"turbine", "blackout", "intermittent", "subsidy", "grid", "backup"}},
        {"n5", "thermometer", "Station Audit Group", "Measurements are flawed",
         "Thermometer records are corrupted",
         {"calibration", "urbanization", "adjustment", "homogenized", "bias", "sensor"}},
        {"n6", "lobbyist", "Policy Truth Desk", "Science is political",
         "Lobbyist money shapes climate science",
         {"funding", "grant", "agenda", "activist", "panel", "consensus"}},
    };
    return cs;
}

std::string cluster_doc_text(const Cluster& c, std::mt19937_64& rng, bool train) {
    std::uniform_int_distribution<std::size_t> pick(0, c.vocab.size() - 1);
    auto v = [&]() { return std::string(c.vocab[pick(rng)]); };
    static const std::vector<const char*> filler = {
        "reports suggest", "observers noted", "a recent post claimed",
        "commentators argue", "readers shared"};
    std::uniform_int_distribution<std::size_t> fpick(0, filler.size() - 1);
    std::ostringstream text;
    text << c.entity << " says the " << c.topic << " " << v() << " and " << v()
         << " numbers look different. " << (train ? "Earlier " : "New ") << filler[fpick(rng)]
         << " that " << c.topic << " " << v() << " data with " << v() << " patterns "
         << (train ? "keeps repeating." : "spreads online.");
    return text.str();
}

std::string distractor_text(std::mt19937_64& rng) {
    static const std::vector<const char*> subjects = {"weather", "sports", "market", "travel",
                                                      "cooking", "music"};
    static const std::vector<const char*> verbs = {"report covers", "show features",
                                                   "article lists", "podcast discusses"};
    std::uniform_int_distribution<std::size_t> sp(0, subjects.size() - 1);
    std::uniform_int_distribution<std::size_t> vp(0, verbs.size() - 1);
    std::ostringstream text;
    text << "Local Daily News " << verbs[vp(rng)] << " the " << subjects[sp(rng)]
         << " schedule for the week. Many readers follow the " << subjects[sp(rng)]
         << " updates every morning.";
    return text.str();
}

}  // namespace

std::vector<TaxonomyEntry> synthetic_taxonomy() {
    std::vector<TaxonomyEntry> out;
    for (const auto& c : clusters()) out.push_back({c.id, c.level1, c.level2});
    return out;
}

Dataset synthetic_dataset() {
    std::mt19937_64 rng(20240901);
    Dataset ds;
    ds.name = "synthetic";
    int doc_no = 0;
    auto add = [&](std::string text, std::set<std::string> labels, Split split) {
        Document d;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "d%03d", doc_no++);
        d.id = buf;
        d.text = std::move(text);
        d.labels = std::move(labels);
        d.split = split;
        d.words = word_count(d.text);
        ds.documents.push_back(std::move(d));
    };
    for (const auto& c : clusters()) {
        for (int i = 0; i < 6; ++i) add(cluster_doc_text(c, rng, true), {c.id}, Split::train);
        for (int i = 0; i < 8; ++i) add(cluster_doc_text(c, rng, false), {c.id}, Split::test);
    }
    for (int i = 0; i < 10; ++i) add(distractor_text(rng), {}, Split::train);
    for (int i = 0; i < 14; ++i) add(distractor_text(rng), {}, Split::test);
    attach_queries(ds, build_queries(synthetic_taxonomy()));
    return ds;
}

}  // namespace specfi
