#include "specfi/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "specfi/errors.hpp"

namespace specfi {

namespace {

bool is_constant(const std::vector<double>& xs) {
    for (double x : xs)
        if (x != xs.front()) return false;
    return true;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    auto n = static_cast<double>(x.size());
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double dx = x[i] - mx;
        double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-14;
    constexpr double kFpMin = 1e-300;
    double qab = a + b;
    double qap = a + 1.0;
    double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                   b * std::log(1.0 - x);
    double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
    double x = df / (df + t * t);
    return std::clamp(incomplete_beta(df / 2.0, 0.5, x), 0.0, 1.0);
}

std::vector<double> average_ranks(const std::vector<double>& xs) {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(xs.size(), 0.0);
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
        double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

CorrelationResult spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw input_error("spearman: input length mismatch");
    if (x.size() < 3) throw input_error("spearman requires n >= 3");
    CorrelationResult res;
    res.n = x.size();
    res.method = CorrMethod::spearman;
    if (is_constant(x) || is_constant(y)) {
        res.degenerate = true;
        res.rho = 0.0;
        res.p_raw = 1.0;
        return res;
    }
    double rho = pearson(average_ranks(x), average_ranks(y));
    if (std::isnan(rho)) {
        res.degenerate = true;
        res.rho = 0.0;
        res.p_raw = 1.0;
        return res;
    }
    res.rho = rho;
    auto df = static_cast<double>(x.size() - 2);
    if (std::fabs(rho) >= 1.0) {
        res.p_raw = 0.0;
    } else {
        double t = rho * std::sqrt(df / (1.0 - rho * rho));
        res.p_raw = student_t_two_sided_p(t, df);
    }
    return res;
}

std::vector<double> bh_fdr(const std::vector<double>& p_values) {
    for (double p : p_values)
        if (p < 0.0 || p > 1.0) throw input_error("p-value out of [0,1]");
    std::size_t m = p_values.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
    std::vector<double> adjusted(m, 0.0);
    double running_min = 1.0;
    for (std::size_t i = m; i-- > 0;) {
        double adj = p_values[order[i]] * static_cast<double>(m) / static_cast<double>(i + 1);
        running_min = std::min(running_min, adj);
        adjusted[order[i]] = std::min(running_min, 1.0);
    }
    return adjusted;
}

namespace {

// OLS residuals of y ~ 1 + c.
std::vector<double> ols_residuals(const std::vector<double>& y, const std::vector<double>& c) {
    auto n = static_cast<double>(y.size());
    double mc = std::accumulate(c.begin(), c.end(), 0.0) / n;
    double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double scc = 0.0;
    double scy = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        scc += (c[i] - mc) * (c[i] - mc);
        scy += (c[i] - mc) * (y[i] - my);
    }
    double slope = scc > 0.0 ? scy / scc : 0.0;
    std::vector<double> resid(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) resid[i] = y[i] - (my + slope * (c[i] - mc));
    return resid;
}

}  // namespace

CorrelationResult partial_spearman(const std::vector<double>& x, const std::vector<double>& y,
                                   const std::vector<double>& control) {
    if (x.size() != y.size() || x.size() != control.size())
        throw input_error("partial_spearman: input length mismatch");
    if (x.size() < 4) throw input_error("partial_spearman requires n >= 4");
    if (is_constant(control)) {
        auto res = spearman(x, y);
        res.method = CorrMethod::partial_spearman;
        res.constant_control = true;
        res.resid_x = x;
        res.resid_y = y;
        return res;
    }
    auto rx = ols_residuals(x, control);
    auto ry = ols_residuals(y, control);
    auto near_zero = [](const std::vector<double>& v) {
        double scale = 0.0;
        for (double e : v) scale = std::max(scale, std::fabs(e));
        return scale < 1e-10;
    };
    CorrelationResult res;
    res.n = x.size();
    res.method = CorrMethod::partial_spearman;
    res.resid_x = rx;
    res.resid_y = ry;
    if (near_zero(rx) || near_zero(ry)) {
        res.degenerate = true;
        res.rho = 0.0;
        res.p_raw = 1.0;
        return res;
    }
    auto plain = spearman(rx, ry);
    res.rho = plain.rho;
    res.p_raw = plain.p_raw;
    res.degenerate = plain.degenerate;
    return res;
}

double permutation_test(const std::vector<double>& resid_x, const std::vector<double>& resid_y,
                        std::size_t iterations, std::uint64_t seed) {
    if (resid_x.size() != resid_y.size()) throw input_error("permutation_test: length mismatch");
    if (iterations < 1000) throw input_error("permutation_test requires >= 1000 iterations");
    auto obs = spearman(resid_x, resid_y);
    if (obs.degenerate) throw input_error("permutation_test: degenerate residuals");
    double obs_abs = std::fabs(obs.rho);

    auto rank_x = average_ranks(resid_x);
    auto rank_y = average_ranks(resid_y);
    std::mt19937_64 rng(seed);
    std::size_t exceed = 0;
    std::vector<double> perm = rank_y;
    for (std::size_t it = 0; it < iterations; ++it) {
        for (std::size_t i = perm.size(); i > 1; --i) {
            std::uniform_int_distribution<std::size_t> pick(0, i - 1);
            std::swap(perm[i - 1], perm[pick(rng)]);
        }
        double r = pearson(rank_x, perm);
        if (!std::isnan(r) && std::fabs(r) >= obs_abs - 1e-12) ++exceed;
    }
    return static_cast<double>(1 + exceed) / static_cast<double>(1 + iterations);
}

LooResult leave_one_out(const std::vector<double>& x, const std::vector<double>& y,
                        const std::vector<double>& control, double alpha) {
    if (x.size() < 5) throw input_error("leave_one_out requires n >= 5");
    LooResult out;
    out.all_significant = true;
    out.min_rho = 2.0;
    out.max_rho = -2.0;
    for (std::size_t drop = 0; drop < x.size(); ++drop) {
        std::vector<double> fx;
        std::vector<double> fy;
        std::vector<double> fc;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (i == drop) continue;
            fx.push_back(x[i]);
            fy.push_back(y[i]);
            fc.push_back(control[i]);
        }
        auto res = partial_spearman(fx, fy, fc);
        if (!res.degenerate) {
            out.min_rho = std::min(out.min_rho, res.rho);
            out.max_rho = std::max(out.max_rho, res.rho);
        }
        if (res.degenerate || res.p_raw >= alpha) out.all_significant = false;
        out.folds.push_back(std::move(res));
    }
    return out;
}

MedianSplitResult median_split(const std::vector<double>& values,
                               const std::vector<double>& map_values) {
    if (values.size() != map_values.size()) throw input_error("median_split: length mismatch");
    if (values.size() < 2) throw input_error("median_split requires n >= 2");
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    std::size_t n = sorted.size();
    double median =
        n % 2 == 1 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
    MedianSplitResult res;
    double low_sum = 0.0;
    double high_sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] <= median) {
            low_sum += map_values[i];
            ++res.low_n;
        } else {
            high_sum += map_values[i];
            ++res.high_n;
        }
    }
    if (res.low_n == 0 || res.high_n == 0)
        throw input_error("median_split: one side of the split is empty");
    res.low_mean = low_sum / static_cast<double>(res.low_n);
    res.high_mean = high_sum / static_cast<double>(res.high_n);
    res.drop_percent = (res.low_mean - res.high_mean) / res.low_mean * 100.0;
    return res;
}

}  // namespace specfi
