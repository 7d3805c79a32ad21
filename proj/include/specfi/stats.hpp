#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace specfi {

enum class CorrMethod { spearman, partial_spearman };

struct CorrelationResult {
    double rho = 0.0;
    double p_raw = 1.0;
    double p_fdr = -1.0;  // < 0 until FDR-adjusted within a family
    std::size_t n = 0;
    CorrMethod method = CorrMethod::spearman;
    bool degenerate = false;          // constant input: rho reported 0, p 1
    bool constant_control = false;    // partial fell back to plain Spearman
    std::vector<double> resid_x;      // only set by partial_spearman
    std::vector<double> resid_y;
};

// Average ranks for ties.
std::vector<double> average_ranks(const std::vector<double>& xs);

// rho = Pearson of ranks; two-sided p via the t-approximation with n-2 df.
CorrelationResult spearman(const std::vector<double>& x, const std::vector<double>& y);

// Benjamini-Hochberg step-up adjustment, returned in input order.
std::vector<double> bh_fdr(const std::vector<double>& p_values);

// Residualize x and y against the control via OLS (intercept + slope), then
// Spearman on the residuals. Residuals are kept for the permutation test.
CorrelationResult partial_spearman(const std::vector<double>& x, const std::vector<double>& y,
                                   const std::vector<double>& control);

// Two-tailed: permute resid_y, count |rho_perm| >= |rho_obs|, add-one smoothing.
double permutation_test(const std::vector<double>& resid_x, const std::vector<double>& resid_y,
                        std::size_t iterations, std::uint64_t seed);

struct LooResult {
    std::vector<CorrelationResult> folds;  // fold i drops observation i
    double min_rho = 0.0;
    double max_rho = 0.0;
    bool all_significant = false;  // every fold's raw p below alpha
};

LooResult leave_one_out(const std::vector<double>& x, const std::vector<double>& y,
                        const std::vector<double>& control, double alpha = 0.05);

struct MedianSplitResult {
    double low_mean = 0.0;   // mean of map_values where value <= median
    double high_mean = 0.0;  // value > median
    double drop_percent = 0.0;
    std::size_t low_n = 0;
    std::size_t high_n = 0;
};

MedianSplitResult median_split(const std::vector<double>& values,
                               const std::vector<double>& map_values);

// Regularized incomplete beta, exposed for the oracle tests.
double incomplete_beta(double a, double b, double x);
double student_t_two_sided_p(double t, double df);

}  // namespace specfi
