#include "specfi/narrative_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "specfi/errors.hpp"
#include "specfi/text.hpp"

namespace specfi {

EmbeddingVector centroid_of(const std::vector<EmbeddingVector>& embeddings) {
    if (embeddings.empty()) throw invariant_error("centroid of an empty set");
    std::size_t dim = embeddings.front().dim();
    std::vector<double> acc(dim, 0.0);
    for (const auto& v : embeddings) {
        if (v.dim() != dim) throw invariant_error("centroid inputs have mixed dimensions");
        for (std::size_t i = 0; i < dim; ++i) acc[i] += static_cast<double>(v.values[i]);
    }
    EmbeddingVector c;
    c.values.resize(dim);
    for (std::size_t i = 0; i < dim; ++i)
        c.values[i] = static_cast<float>(acc[i] / static_cast<double>(embeddings.size()));
    return c;
}

std::vector<NarrativeEmbeddingSet> build_sets(const Dataset& dataset, EmbeddingProvider& provider) {
    std::vector<NarrativeEmbeddingSet> sets;
    for (const auto& q : dataset.queries) {
        std::vector<std::string> texts;
        for (const auto& d : dataset.documents)
            if (d.split == Split::test && d.labels.count(q.id)) texts.push_back(d.text);
        if (texts.empty()) continue;
        NarrativeEmbeddingSet s;
        s.narrative_id = q.id;
        s.embeddings = provider.embed(texts);
        s.centroid = centroid_of(s.embeddings);
        s.m_i = s.embeddings.size();
        sets.push_back(std::move(s));
    }
    return sets;
}

std::map<std::string, double> distinctness(const std::vector<NarrativeEmbeddingSet>& sets) {
    if (sets.size() < 2) throw invariant_error("distinctness requires at least two narratives");
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        double sum = 0.0;
        double min_d = 2.0;
        for (std::size_t j = 0; j < sets.size(); ++j) {
            if (j == i) continue;
            double d = cosine_distance(sets[i].centroid, sets[j].centroid);
            sum += d;
            min_d = std::min(min_d, d);
        }
        double mean_d = sum / static_cast<double>(sets.size() - 1);
        out[sets[i].narrative_id] = std::sqrt(mean_d * min_d);
    }
    return out;
}

double variance(const NarrativeEmbeddingSet& set) {
    if (set.embeddings.empty()) throw invariant_error("variance of an empty set");
    double sum = 0.0;
    for (const auto& t : set.embeddings) {
        double sq = 0.0;
        for (std::size_t i = 0; i < t.dim(); ++i) {
            double d = static_cast<double>(t.values[i]) - static_cast<double>(set.centroid.values[i]);
            sq += d * d;
        }
        sum += sq;
    }
    return sum / static_cast<double>(set.embeddings.size());
}

MetricTable build_metric_table(const std::vector<NarrativeEmbeddingSet>& sets) {
    MetricTable table;
    auto dist = distinctness(sets);
    for (const auto& s : sets) {
        MetricRow row;
        row.distinctness = dist.at(s.narrative_id);
        row.variance = variance(s);
        row.m_i = s.m_i;
        table.rows[s.narrative_id] = std::move(row);
    }
    return table;
}

std::string MetricTable::to_csv() const {
    std::vector<std::string> systems;
    for (const auto& [id, row] : rows)
        for (const auto& [sys, ap] : row.system_ap)
            if (std::find(systems.begin(), systems.end(), sys) == systems.end())
                systems.push_back(sys);
    std::sort(systems.begin(), systems.end());

    std::ostringstream out;
    out.precision(17);
    out << "narrative_id,m_i,D_i,V_i";
    for (const auto& s : systems) out << ",ap_" << s;
    out << '\n';
    for (const auto& [id, row] : rows) {
        out << id << ',' << row.m_i << ',' << row.distinctness << ',' << row.variance;
        for (const auto& s : systems) {
            auto it = row.system_ap.find(s);
            out << ',';
            if (it != row.system_ap.end()) out << it->second;
        }
        out << '\n';
    }
    return out.str();
}

MetricTable MetricTable::from_csv(const std::string& csv) {
    MetricTable table;
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line)) throw input_error("empty metric table");
    std::vector<std::string> header;
    {
        std::istringstream hs(line);
        std::string f;
        while (std::getline(hs, f, ',')) header.push_back(trim(f));
    }
    if (header.size() < 4 || header[0] != "narrative_id" || header[1] != "m_i" ||
        header[2] != "D_i" || header[3] != "V_i")
        throw input_error("metric table header must start with narrative_id,m_i,D_i,V_i");
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> fields;
        std::istringstream ls(line);
        std::string f;
        while (std::getline(ls, f, ',')) fields.push_back(trim(f));
        if (fields.size() != header.size())
            throw input_error("metric table row has " + std::to_string(fields.size()) +
                              " fields, header has " + std::to_string(header.size()));
        MetricRow row;
        row.m_i = static_cast<std::size_t>(std::stoull(fields[1]));
        row.distinctness = std::stod(fields[2]);
        row.variance = std::stod(fields[3]);
        for (std::size_t i = 4; i < header.size(); ++i) {
            if (fields[i].empty()) continue;
            std::string sys = header[i];
            if (sys.rfind("ap_", 0) == 0) sys = sys.substr(3);
            row.system_ap[sys] = std::stod(fields[i]);
        }
        table.rows[fields[0]] = std::move(row);
    }
    return table;
}

}  // namespace specfi
