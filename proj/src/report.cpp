#include "specfi/report.hpp"

#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "specfi/errors.hpp"
#include "specfi/util.hpp"

namespace specfi {

using nlohmann::json;

AnalysisReport analyze_metric_table(const MetricTable& table, const AnalyzeOptions& opts) {
    // rows in narrative-id order; systems in column order
    std::vector<std::string> ids;
    std::vector<double> d_vals;
    std::vector<double> v_vals;
    std::vector<double> m_vals;
    for (const auto& [id, row] : table.rows) {
        ids.push_back(id);
        d_vals.push_back(row.distinctness);
        v_vals.push_back(row.variance);
        m_vals.push_back(static_cast<double>(row.m_i));
    }
    if (ids.size() < 4) throw input_error("analysis requires at least 4 narratives");

    std::vector<std::string> systems;
    for (const auto& [sys, ap] : table.rows.begin()->second.system_ap) systems.push_back(sys);
    if (systems.empty()) throw input_error("metric table carries no AP columns");

    AnalysisReport report;
    report.n = ids.size();
    report.permutation_iterations = opts.permutation_iterations;
    report.seed = opts.seed;

    std::vector<double> orig_p;
    std::vector<double> part_p;
    for (const auto& sys : systems) {
        std::vector<double> ap;
        for (const auto& id : ids) {
            const auto& row = table.rows.at(id);
            auto it = row.system_ap.find(sys);
            if (it == row.system_ap.end())
                throw input_error("system '" + sys + "' is missing AP for narrative '" + id + "'");
            ap.push_back(it->second);
        }
        SystemAnalysis sa;
        sa.system = sys;
        sa.orig_d = spearman(ap, d_vals);
        sa.orig_v = spearman(ap, v_vals);
        sa.part_d = partial_spearman(ap, d_vals, m_vals);
        sa.part_v = partial_spearman(ap, v_vals, m_vals);
        orig_p.push_back(sa.orig_d.p_raw);
        orig_p.push_back(sa.orig_v.p_raw);
        part_p.push_back(sa.part_d.p_raw);
        part_p.push_back(sa.part_v.p_raw);

        if (!sa.part_v.degenerate)
            sa.perm_p_v = permutation_test(sa.part_v.resid_x, sa.part_v.resid_y,
                                           opts.permutation_iterations,
                                           derive_seed(opts.seed, sys));
        if (ids.size() >= 5) sa.loo_v = leave_one_out(ap, v_vals, m_vals, opts.loo_alpha);
        try {
            sa.split_v = median_split(v_vals, ap);
        } catch (const error&) {
            sa.split_v = std::nullopt;  // all V_i identical
        }
        report.systems.push_back(std::move(sa));
    }

    // FDR per block, mirroring the table layout
    auto orig_adj = bh_fdr(orig_p);
    auto part_adj = bh_fdr(part_p);
    for (std::size_t i = 0; i < report.systems.size(); ++i) {
        report.systems[i].orig_d.p_fdr = orig_adj[2 * i];
        report.systems[i].orig_v.p_fdr = orig_adj[2 * i + 1];
        report.systems[i].part_d.p_fdr = part_adj[2 * i];
        report.systems[i].part_v.p_fdr = part_adj[2 * i + 1];
    }
    return report;
}

namespace {

json corr_to_json(const CorrelationResult& c) {
    json j;
    j["rho"] = c.rho;
    j["p_raw"] = c.p_raw;
    if (c.p_fdr >= 0.0) j["p_fdr"] = c.p_fdr;
    j["n"] = c.n;
    j["degenerate"] = c.degenerate;
    if (c.constant_control) j["constant_control"] = true;
    return j;
}

}  // namespace

std::string analysis_to_json(const AnalysisReport& report) {
    json j;
    j["n"] = report.n;
    j["permutation_iterations"] = report.permutation_iterations;
    j["seed"] = report.seed;
    j["fdr_families"] = {"original_block", "partial_block"};
    for (const auto& sa : report.systems) {
        json s;
        s["original"]["D_i"] = corr_to_json(sa.orig_d);
        s["original"]["V_i"] = corr_to_json(sa.orig_v);
        s["partial"]["D_i"] = corr_to_json(sa.part_d);
        s["partial"]["V_i"] = corr_to_json(sa.part_v);
        if (sa.perm_p_v >= 0.0) s["permutation_p_V_i"] = sa.perm_p_v;
        if (sa.loo_v) {
            s["loo_V_i"]["min_rho"] = sa.loo_v->min_rho;
            s["loo_V_i"]["max_rho"] = sa.loo_v->max_rho;
            s["loo_V_i"]["all_significant"] = sa.loo_v->all_significant;
        }
        if (sa.split_v) {
            s["median_split_V_i"]["low_mean"] = sa.split_v->low_mean;
            s["median_split_V_i"]["high_mean"] = sa.split_v->high_mean;
            s["median_split_V_i"]["drop_percent"] = sa.split_v->drop_percent;
        }
        j["systems"][sa.system] = std::move(s);
    }
    return j.dump(2);
}

namespace {

std::string cell(const CorrelationResult& c) {
    std::ostringstream os;
    os << std::showpos << std::fixed << std::setprecision(3) << c.rho << std::noshowpos << " ("
       << std::setprecision(3) << (c.p_fdr >= 0.0 ? c.p_fdr : c.p_raw) << ")";
    return os.str();
}

}  // namespace

std::string render_correlation_table(const AnalysisReport& report) {
    std::ostringstream out;
    std::size_t width = 12;
    for (const auto& sa : report.systems) width = std::max(width, sa.system.size() + 2);

    auto block = [&](const char* title, bool partial) {
        out << title << '\n';
        out << std::left << std::setw(static_cast<int>(width)) << "Setup"
            << std::setw(18) << "D_i" << std::setw(18) << "V_i" << '\n';
        for (const auto& sa : report.systems) {
            out << std::left << std::setw(static_cast<int>(width)) << sa.system
                << std::setw(18) << cell(partial ? sa.part_d : sa.orig_d)
                << std::setw(18) << cell(partial ? sa.part_v : sa.orig_v) << '\n';
        }
    };
    block("Original correlations", false);
    out << '\n';
    block("Partial correlations (controlling for m_i)", true);
    out << "\nFDR correction: Benjamini-Hochberg per block (" << report.systems.size() * 2
        << " tests each), n = " << report.n << " narratives.\n";
    return out.str();
}

}  // namespace specfi
