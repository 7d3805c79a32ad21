#include "specfi/graph.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "specfi/errors.hpp"
#include "specfi/text.hpp"

namespace specfi {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(NodeKind k) {
    switch (k) {
        case NodeKind::text_chunk: return "text_chunk";
        case NodeKind::entity: return "entity";
        case NodeKind::relationship: return "relationship";
        case NodeKind::semantic_unit: return "semantic_unit";
        case NodeKind::high_level_element: return "high_level_element";
    }
    throw invariant_error("unreachable node kind");
}

NodeKind node_kind_from_string(const std::string& s) {
    if (s == "text_chunk") return NodeKind::text_chunk;
    if (s == "entity") return NodeKind::entity;
    if (s == "relationship") return NodeKind::relationship;
    if (s == "semantic_unit") return NodeKind::semantic_unit;
    if (s == "high_level_element") return NodeKind::high_level_element;
    throw input_error("unknown node kind: '" + s + "'");
}

int Graph::add_node(NodeKind kind, std::string content, std::optional<EmbeddingVector> embedding) {
    int id = static_cast<int>(nodes_.size());
    nodes_.push_back({id, kind, std::move(content), std::move(embedding)});
    adj_.emplace_back();
    return id;
}

void Graph::add_edge(int a, int b, double weight) {
    if (a == b) throw invariant_error("self-loops are not allowed");
    if (a < 0 || b < 0 || a >= static_cast<int>(nodes_.size()) || b >= static_cast<int>(nodes_.size()))
        throw invariant_error("edge endpoint does not exist");
    if (!(weight > 0.0) || !std::isfinite(weight))
        throw invariant_error("edge weight must be finite and positive");
    auto bump = [&](int from, int to) {
        auto& lst = adj_[static_cast<std::size_t>(from)];
        for (auto& [n, w] : lst) {
            if (n == to) {
                w += weight;
                return;
            }
        }
        lst.emplace_back(to, weight);
    };
    bump(a, b);
    bump(b, a);
}

// ---- extraction -----------------------------------------------------------

ExtractionResult MockExtractor::extract(const std::string& text) {
    if (trim(text).empty()) throw input_error("cannot extract from empty text");
    ExtractionResult out;
    std::set<std::string> seen;
    for (const auto& sentence : split_sentences(text)) {
        out.semantic_units.push_back(sentence);
        // capitalized spans: maximal runs of words starting with an uppercase
        // ASCII letter; every run counts, including the sentence-initial one
        std::vector<std::string> sentence_entities;
        std::string span;
        std::istringstream ss(sentence);
        std::string word;
        auto flush = [&]() {
            if (span.empty()) return;
            std::string normalized = to_lower(trim(span));
            while (!normalized.empty() && !std::isalnum(static_cast<unsigned char>(normalized.back())))
                normalized.pop_back();
            if (!normalized.empty()) {
                sentence_entities.push_back(normalized);
                if (seen.insert(normalized).second) out.entities.push_back(normalized);
            }
            span.clear();
        };
        while (ss >> word) {
            bool capitalized = !word.empty() && std::isupper(static_cast<unsigned char>(word[0]));
            if (capitalized) {
                if (!span.empty()) span += ' ';
                span += word;
            } else {
                flush();
            }
        }
        flush();
        for (std::size_t i = 0; i + 1 < sentence_entities.size(); ++i)
            out.relationships.emplace_back(sentence_entities[i], "with", sentence_entities[i + 1]);
    }
    return out;
}

namespace {

const char* kExtractionSystemPrompt =
    "You analyze a text and return strict JSON with three keys: \"entities\" (list of "
    "strings), \"relationships\" (list of [source, predicate, target] triples whose source "
    "and target appear in entities), and \"semantic_units\" (list of self-contained "
    "paraphrase sentences). Return only the JSON object.";

}  // namespace

ExtractionResult LlmExtractor::parse_payload(const std::string& payload) {
    // models sometimes wrap JSON in code fences
    std::string body = payload;
    auto fence = body.find("```");
    if (fence != std::string::npos) {
        auto start = body.find('\n', fence);
        auto end = body.rfind("```");
        if (start != std::string::npos && end != std::string::npos && end > start)
            body = body.substr(start + 1, end - start - 1);
    }
    json parsed = json::parse(body, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object())
        throw provider_error("extraction returned malformed structure; raw payload: " + payload);
    ExtractionResult out;
    try {
        for (const auto& e : parsed.at("entities"))
            out.entities.push_back(to_lower(trim(e.get<std::string>())));
        for (const auto& r : parsed.at("relationships")) {
            if (!r.is_array() || r.size() != 3)
                throw provider_error("relationship is not a triple");
            out.relationships.emplace_back(to_lower(trim(r[0].get<std::string>())),
                                           trim(r[1].get<std::string>()),
                                           to_lower(trim(r[2].get<std::string>())));
        }
        for (const auto& u : parsed.at("semantic_units"))
            out.semantic_units.push_back(trim(u.get<std::string>()));
    } catch (const json::exception& e) {
        throw provider_error(std::string("extraction returned malformed structure: ") + e.what() +
                             "; raw payload: " + payload);
    }
    // drop relationships referencing unextracted entities
    std::set<std::string> known(out.entities.begin(), out.entities.end());
    std::erase_if(out.relationships, [&](const auto& r) {
        return !known.count(std::get<0>(r)) || !known.count(std::get<2>(r));
    });
    return out;
}

ExtractionResult LlmExtractor::extract(const std::string& text) {
    if (trim(text).empty()) throw input_error("cannot extract from empty text");
    ChatRequest req;
    req.system = kExtractionSystemPrompt;
    req.user = text;
    req.temperature = 0.0;
    req.max_tokens = 1024;
    return parse_payload(llm_.complete(req));
}

// ---- construction ---------------------------------------------------------

Graph build_graph(const std::vector<std::pair<std::string, std::string>>& id_text_pairs,
                  Extractor& extractor, EmbeddingProvider& provider, BuildGraphReport* report) {
    if (id_text_pairs.empty()) throw input_error("cannot build a graph from an empty corpus");
    Graph g;
    std::unordered_map<std::string, int> entity_nodes;
    std::map<std::pair<int, int>, int> cooccur;
    BuildGraphReport local;
    BuildGraphReport& rep = report ? *report : local;

    for (const auto& [doc_id, text] : id_text_pairs) {
        ExtractionResult ex;
        EmbeddingVector chunk_vec;
        try {
            ex = extractor.extract(text);
            chunk_vec = provider.embed_one(text);
        } catch (const error& e) {
            ++rep.failed_docs;
            rep.log.push_back("doc '" + doc_id + "' skipped: " + e.what());
            continue;
        }
        int chunk = g.add_node(NodeKind::text_chunk, text, std::move(chunk_vec));

        std::vector<int> doc_entities;
        for (const auto& ename : ex.entities) {
            auto it = entity_nodes.find(ename);
            int eid;
            if (it == entity_nodes.end()) {
                eid = g.add_node(NodeKind::entity, ename);
                entity_nodes.emplace(ename, eid);
            } else {
                eid = it->second;
            }
            doc_entities.push_back(eid);
            g.add_edge(chunk, eid, 1.0);
        }
        // entity co-occurrence within this chunk, weight = chunk count overall
        std::set<int> uniq(doc_entities.begin(), doc_entities.end());
        for (auto a = uniq.begin(); a != uniq.end(); ++a)
            for (auto b = std::next(a); b != uniq.end(); ++b)
                ++cooccur[{*a, *b}];

        if (!ex.semantic_units.empty()) {
            auto unit_vecs = provider.embed(ex.semantic_units);
            for (std::size_t i = 0; i < ex.semantic_units.size(); ++i) {
                int uid = g.add_node(NodeKind::semantic_unit, ex.semantic_units[i],
                                     std::move(unit_vecs[i]));
                g.add_edge(chunk, uid, 1.0);
            }
        }
        for (const auto& [src, pred, dst] : ex.relationships) {
            auto si = entity_nodes.find(src);
            auto di = entity_nodes.find(dst);
            if (si == entity_nodes.end() || di == entity_nodes.end() || si->second == di->second)
                continue;
            int rid = g.add_node(NodeKind::relationship, src + " " + pred + " " + dst);
            g.add_edge(rid, si->second, 1.0);
            g.add_edge(rid, di->second, 1.0);
        }
    }
    if (rep.failed_docs * 10 > id_text_pairs.size())
        throw provider_error("graph build failed: more than 10% of documents failed extraction (" +
                             std::to_string(rep.failed_docs) + "/" +
                             std::to_string(id_text_pairs.size()) + ")");
    for (const auto& [pair, count] : cooccur)
        g.add_edge(pair.first, pair.second, static_cast<double>(count));
    return g;
}

// ---- summaries ------------------------------------------------------------

std::string MockSummarizer::summarize(const std::vector<std::string>& member_contents) {
    std::string joined;
    for (const auto& c : member_contents) {
        if (!joined.empty()) joined += ' ';
        joined += c;
    }
    // truncate to 60 whitespace tokens
    std::istringstream ss(joined);
    std::string word;
    std::string out;
    std::size_t count = 0;
    while (ss >> word && count < 60) {
        if (!out.empty()) out += ' ';
        out += word;
        ++count;
    }
    return out;
}

std::string LlmSummarizer::summarize(const std::vector<std::string>& member_contents) {
    std::string joined;
    for (const auto& c : member_contents) {
        joined += c;
        joined += '\n';
    }
    ChatRequest req;
    req.system =
        "Summarize the following related snippets into one or two sentences capturing their "
        "shared theme. Return only the summary.";
    req.user = joined;
    req.temperature = 0.0;
    req.max_tokens = 256;
    return llm_.complete(req);
}

void summarize_communities(Graph& graph, Summarizer& summarizer, EmbeddingProvider& provider,
                           const SummarizeOptions& opts, std::vector<std::string>* log) {
    for (auto& community : graph.communities) {
        if (community.members.size() < opts.min_members) continue;
        // members ordered by degree descending, ties by ascending id
        std::vector<int> members(community.members.begin(), community.members.end());
        std::sort(members.begin(), members.end(), [&](int a, int b) {
            auto da = graph.neighbors(a).size();
            auto db = graph.neighbors(b).size();
            if (da != db) return da > db;
            return a < b;
        });
        std::vector<std::string> contents;
        for (int m : members) contents.push_back(graph.node(m).content);
        std::string summary;
        try {
            summary = summarizer.summarize(contents);
        } catch (const error& e) {
            if (log)
                log->push_back("community " + std::to_string(community.id) +
                               " summary skipped: " + e.what());
            continue;
        }
        EmbeddingVector vec;
        try {
            vec = provider.embed_one(summary);
        } catch (const error& e) {
            if (log)
                log->push_back("community " + std::to_string(community.id) +
                               " embedding skipped: " + e.what());
            continue;
        }
        int sid = graph.add_node(NodeKind::high_level_element, summary, std::move(vec));
        community.summary_node = sid;
        for (int m : members) {
            NodeKind k = graph.node(m).kind;
            if (k == NodeKind::semantic_unit || k == NodeKind::entity) graph.add_edge(sid, m, 1.0);
        }
    }
}

// ---- search ---------------------------------------------------------------

std::vector<ScoredNode> graph_search(const std::string& query_text, const Graph& graph,
                                     EmbeddingProvider& provider, const GraphSearchParams& params) {
    std::vector<int> embedded;
    for (const auto& n : graph.nodes())
        if (n.embedding) embedded.push_back(n.id);
    if (embedded.empty()) throw input_error("graph_search requires at least one embedded node");

    EmbeddingVector qvec = normalized(provider.embed_one(query_text));
    std::vector<std::pair<double, int>> sims;
    sims.reserve(embedded.size());
    for (int id : embedded)
        sims.emplace_back(1.0 - cosine_distance(qvec, *graph.node(id).embedding), id);
    std::sort(sims.begin(), sims.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });

    std::set<int> seeds;
    for (std::size_t i = 0; i < std::min(params.seed_count, sims.size()); ++i)
        seeds.insert(sims[i].second);
    std::string query_lower = to_lower(query_text);
    for (const auto& n : graph.nodes())
        if (n.kind == NodeKind::entity && contains_word_boundary(query_lower, n.content))
            seeds.insert(n.id);

    auto ppr = personalized_pagerank(graph, seeds, params.ppr);
    std::vector<ScoredNode> out;
    out.reserve(graph.node_count());
    for (const auto& n : graph.nodes()) out.push_back({n.id, ppr.scores[static_cast<std::size_t>(n.id)]});
    std::sort(out.begin(), out.end(), [](const ScoredNode& a, const ScoredNode& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.node_id < b.node_id;
    });
    return out;
}

std::optional<std::pair<std::string, int>> top_high_level_element(
    const std::vector<ScoredNode>& search_result, const Graph& graph) {
    for (const auto& s : search_result) {
        const auto& n = graph.node(s.node_id);
        if (n.kind == NodeKind::high_level_element) return std::make_pair(n.content, n.id);
    }
    return std::nullopt;
}

// ---- persistence ----------------------------------------------------------

void Graph::save(const std::string& dir) const {
    fs::create_directories(dir);
    std::ofstream out(fs::path(dir) / "graph.jsonl");
    if (!out) throw input_error("cannot write graph to " + dir);
    std::vector<int> embedded_ids;
    for (const auto& n : nodes_) {
        json rec;
        rec["type"] = "node";
        rec["id"] = n.id;
        rec["kind"] = to_string(n.kind);
        rec["content"] = n.content;
        rec["embedded"] = n.embedding.has_value();
        if (n.embedding) embedded_ids.push_back(n.id);
        out << rec.dump() << '\n';
    }
    for (std::size_t a = 0; a < adj_.size(); ++a) {
        for (const auto& [b, w] : adj_[a]) {
            if (static_cast<int>(a) > b) continue;  // store each edge once
            json rec;
            rec["type"] = "edge";
            rec["a"] = a;
            rec["b"] = b;
            rec["w"] = w;
            out << rec.dump() << '\n';
        }
    }
    for (const auto& c : communities) {
        json rec;
        rec["type"] = "community";
        rec["id"] = c.id;
        rec["members"] = c.members;
        if (c.summary_node) rec["summary_node"] = *c.summary_node;
        out << rec.dump() << '\n';
    }

    // vector payload: u32 dim header + rows in embedded_ids order
    std::ofstream vec_out(fs::path(dir) / "embeddings.vec", std::ios::binary);
    std::uint32_t dim = 0;
    for (int id : embedded_ids) {
        dim = static_cast<std::uint32_t>(nodes_[static_cast<std::size_t>(id)].embedding->dim());
        break;
    }
    vec_out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
    for (int id : embedded_ids) {
        const auto& v = *nodes_[static_cast<std::size_t>(id)].embedding;
        vec_out.write(reinterpret_cast<const char*>(v.values.data()),
                      static_cast<std::streamsize>(v.values.size() * sizeof(float)));
    }
}

Graph Graph::load(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "graph.jsonl");
    if (!in) throw input_error("cannot open graph in " + dir);
    Graph g;
    std::vector<int> embedded_ids;
    struct PendingEdge {
        int a;
        int b;
        double w;
    };
    std::vector<PendingEdge> edges;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        json rec = json::parse(line);
        std::string type = rec.at("type").get<std::string>();
        if (type == "node") {
            int id = g.add_node(node_kind_from_string(rec.at("kind").get<std::string>()),
                                rec.at("content").get<std::string>());
            if (id != rec.at("id").get<int>())
                throw input_error("graph file has non-sequential node ids");
            if (rec.at("embedded").get<bool>()) embedded_ids.push_back(id);
        } else if (type == "edge") {
            edges.push_back({rec.at("a").get<int>(), rec.at("b").get<int>(), rec.at("w").get<double>()});
        } else if (type == "community") {
            Community c;
            c.id = rec.at("id").get<int>();
            for (const auto& m : rec.at("members")) c.members.insert(m.get<int>());
            if (rec.contains("summary_node")) c.summary_node = rec["summary_node"].get<int>();
            g.communities.push_back(std::move(c));
        } else {
            throw input_error("unknown graph record type: '" + type + "'");
        }
    }
    for (const auto& e : edges) g.add_edge(e.a, e.b, e.w);

    std::ifstream vec_in(fs::path(dir) / "embeddings.vec", std::ios::binary);
    if (!vec_in) throw input_error("cannot open graph embeddings in " + dir);
    std::uint32_t dim = 0;
    vec_in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
    for (int id : embedded_ids) {
        EmbeddingVector v;
        v.values.resize(dim);
        vec_in.read(reinterpret_cast<char*>(v.values.data()),
                    static_cast<std::streamsize>(dim * sizeof(float)));
        if (!vec_in) throw input_error("graph embedding payload truncated");
        v.unit_normalized = true;
        g.node(id).embedding = std::move(v);
    }
    return g;
}

}  // namespace specfi
