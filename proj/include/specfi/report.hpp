#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "specfi/narrative_metrics.hpp"
#include "specfi/stats.hpp"

namespace specfi {

// Correlation analysis of one AP column against D_i and V_i, with m_i as the
// partial-correlation control.
struct SystemAnalysis {
    std::string system;
    CorrelationResult orig_d;
    CorrelationResult orig_v;
    CorrelationResult part_d;
    CorrelationResult part_v;
    double perm_p_v = -1.0;  // permutation p on the partial V_i residuals
    std::optional<LooResult> loo_v;
    std::optional<MedianSplitResult> split_v;
};

struct AnalysisReport {
    std::vector<SystemAnalysis> systems;
    std::size_t n = 0;  // narratives entering the analysis
    std::size_t permutation_iterations = 0;
    std::uint64_t seed = 0;
};

struct AnalyzeOptions {
    std::size_t permutation_iterations = 10000;
    std::uint64_t seed = 42;
    double loo_alpha = 0.05;
};

// FDR families mirror the table layout: one family over every cell of the
// original block, one over every cell of the partial block.
AnalysisReport analyze_metric_table(const MetricTable& table, const AnalyzeOptions& opts = {});

std::string analysis_to_json(const AnalysisReport& report);

// Text table with "Original correlations" and "Partial correlations
// (controlling for m_i)" blocks, one row per system, rho (p_fdr) cells.
std::string render_correlation_table(const AnalysisReport& report);

}  // namespace specfi
