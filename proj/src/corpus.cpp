#include "specfi/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "specfi/errors.hpp"
#include "specfi/text.hpp"

namespace specfi {

using nlohmann::json;

std::string to_string(Split s) { return s == Split::train ? "train" : "test"; }

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "test") return Split::test;
    throw input_error("unknown split value: '" + s + "'");
}

std::vector<const Document*> Dataset::split_docs(Split s) const {
    std::vector<const Document*> out;
    for (const auto& d : documents)
        if (d.split == s) out.push_back(&d);
    return out;
}

const NarrativeQuery* Dataset::find_query(const std::string& id) const {
    for (const auto& q : queries)
        if (q.id == id) return &q;
    return nullptr;
}

namespace {

Document document_from_json(const json& rec, std::size_t line_no) {
    auto require = [&](const char* field) -> const json& {
        auto it = rec.find(field);
        if (it == rec.end())
            throw input_error("line " + std::to_string(line_no) + ": missing field '" + field + "'");
        return *it;
    };
    Document doc;
    doc.id = require("id").get<std::string>();
    doc.text = require("text").get<std::string>();
    for (const auto& l : require("labels")) doc.labels.insert(l.get<std::string>());
    doc.split = split_from_string(require("split").get<std::string>());
    doc.words = word_count(doc.text);
    return doc;
}

// Minimal RFC-4180 CSV reader. Returns one record per call, spanning
// physical lines when fields contain quoted newlines.
std::optional<std::vector<std::string>> read_csv_record(std::istream& in, std::size_t& line_no) {
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    bool any = false;
    int c;
    while ((c = in.get()) != EOF) {
        any = true;
        char ch = static_cast<char>(c);
        if (in_quotes) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    in_quotes = false;
                }
            } else {
                if (ch == '\n') ++line_no;
                field.push_back(ch);
            }
        } else if (ch == '"') {
            in_quotes = true;
        } else if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (ch == '\n') {
            ++line_no;
            break;
        } else if (ch != '\r') {
            field.push_back(ch);
        }
    }
    if (!any) return std::nullopt;
    fields.push_back(std::move(field));
    return fields;
}

std::set<std::string> parse_label_list(const std::string& raw) {
    std::set<std::string> labels;
    std::string current;
    std::istringstream ss(raw);
    while (std::getline(ss, current, '|')) {
        std::string t = trim(current);
        if (!t.empty()) labels.insert(t);
    }
    return labels;
}

void check_unique_ids(const std::vector<Document>& docs) {
    std::unordered_set<std::string> seen;
    for (const auto& d : docs)
        if (!seen.insert(d.id).second) throw input_error("duplicate document id: '" + d.id + "'");
}

}  // namespace

Dataset load_dataset(const std::string& path, CorpusFormat format) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open dataset file: " + path);

    Dataset ds;
    ds.name = path;
    if (format == CorpusFormat::jsonl) {
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            json rec;
            try {
                rec = json::parse(line);
            } catch (const json::exception& e) {
                throw input_error("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
            }
            ds.documents.push_back(document_from_json(rec, line_no));
        }
    } else {
        std::size_t line_no = 1;
        auto header = read_csv_record(in, line_no);
        const std::vector<std::string> expected = {"id", "text", "labels", "split"};
        if (!header || *header != expected)
            throw input_error("CSV header must be exactly 'id,text,labels,split'");
        while (auto rec = read_csv_record(in, line_no)) {
            if (rec->size() == 1 && trim((*rec)[0]).empty()) continue;
            if (rec->size() != 4)
                throw input_error("line " + std::to_string(line_no) + ": expected 4 CSV fields, got " +
                                  std::to_string(rec->size()));
            Document doc;
            doc.id = (*rec)[0];
            doc.text = (*rec)[1];
            doc.labels = parse_label_list((*rec)[2]);
            doc.split = split_from_string((*rec)[3]);
            doc.words = word_count(doc.text);
            ds.documents.push_back(std::move(doc));
        }
    }
    check_unique_ids(ds.documents);
    return ds;
}

void save_dataset_jsonl(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw input_error("cannot write dataset file: " + path);
    for (const auto& d : dataset.documents) {
        json rec;
        rec["id"] = d.id;
        rec["text"] = d.text;
        rec["labels"] = std::vector<std::string>(d.labels.begin(), d.labels.end());
        rec["split"] = to_string(d.split);
        out << rec.dump() << '\n';
    }
}

std::vector<TaxonomyEntry> load_taxonomy(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open taxonomy file: " + path);
    json arr;
    try {
        in >> arr;
    } catch (const json::exception& e) {
        throw input_error(std::string("malformed taxonomy JSON: ") + e.what());
    }
    if (!arr.is_array()) throw input_error("taxonomy file must hold a JSON array");
    std::vector<TaxonomyEntry> out;
    for (const auto& rec : arr) {
        TaxonomyEntry e;
        e.id = rec.at("id").get<std::string>();
        e.narrative = rec.at("narrative").get<std::string>();
        e.subnarrative = rec.at("subnarrative").get<std::string>();
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<NarrativeQuery> build_queries(const std::vector<TaxonomyEntry>& taxonomy) {
    std::vector<NarrativeQuery> queries;
    std::unordered_set<std::string> seen;
    for (const auto& e : taxonomy) {
        if (e.narrative.empty() || e.subnarrative.empty())
            throw input_error("taxonomy entry '" + e.id + "' has an empty label");
        if (!seen.insert(e.id).second) throw input_error("duplicate narrative id: '" + e.id + "'");
        queries.push_back({e.id, e.narrative + ". " + e.subnarrative});
    }
    return queries;
}

void attach_queries(Dataset& dataset, std::vector<NarrativeQuery> queries) {
    dataset.queries = std::move(queries);
    std::unordered_set<std::string> known;
    for (const auto& q : dataset.queries) known.insert(q.id);
    std::set<std::string> missing;
    for (const auto& d : dataset.documents) {
        if (d.split != Split::test) continue;
        for (const auto& l : d.labels)
            if (!known.count(l)) missing.insert(l);
    }
    for (const auto& l : missing)
        dataset.load_warnings.push_back("test label '" + l + "' has no matching query id");
}

std::set<std::string> judgments(const Dataset& dataset, const std::string& narrative_id) {
    if (!dataset.find_query(narrative_id))
        throw input_error("unknown narrative id: '" + narrative_id + "'");
    std::set<std::string> out;
    for (const auto& d : dataset.documents)
        if (d.split == Split::test && d.labels.count(narrative_id)) out.insert(d.id);
    return out;
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& xs) {
    if (xs.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size());
    return {mean, std::sqrt(var)};
}

}  // namespace

DatasetStats dataset_stats(const Dataset& dataset) {
    DatasetStats st;
    std::map<std::string, std::size_t> per_narrative;
    std::vector<double> words;
    std::size_t disinfo = 0;
    for (const auto& d : dataset.documents) {
        if (d.split != Split::test) continue;
        ++st.total_texts;
        words.push_back(static_cast<double>(d.words));
        if (!d.labels.empty()) ++disinfo;
        for (const auto& l : d.labels) ++per_narrative[l];
    }
    st.narratives = per_narrative.size();
    std::vector<double> counts;
    for (const auto& [id, n] : per_narrative) counts.push_back(static_cast<double>(n));
    std::tie(st.mean_texts_per_narrative, st.std_texts_per_narrative) = mean_std(counts);
    std::tie(st.mean_words_per_text, st.std_words_per_text) = mean_std(words);
    st.disinfo_fraction =
        st.total_texts == 0 ? 0.0 : static_cast<double>(disinfo) / static_cast<double>(st.total_texts);
    return st;
}

Dataset strip_train_labels(const Dataset& dataset) {
    Dataset out = dataset;
    for (auto& d : out.documents)
        if (d.split == Split::train) d.labels.clear();
    return out;
}

}  // namespace specfi
