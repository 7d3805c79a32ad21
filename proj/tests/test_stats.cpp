#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "specfi/errors.hpp"
#include "specfi/stats.hpp"

using namespace specfi;

namespace {

// Independent rank oracle: positions after a stable sort, tie groups averaged.
std::vector<double> rank_oracle(const std::vector<double>& xs) {
    std::vector<double> sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> ranks;
    for (double x : xs) {
        auto lo = std::lower_bound(sorted.begin(), sorted.end(), x) - sorted.begin();
        auto hi = std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin();
        // average of 1-based positions lo+1 .. hi
        ranks.push_back((static_cast<double>(lo + 1) + static_cast<double>(hi)) / 2.0);
    }
    return ranks;
}

double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
    auto n = static_cast<double>(x.size());
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_CASE("average_ranks handles ties by averaging positions") {
    CHECK(average_ranks({10.0, 20.0, 30.0}) == std::vector<double>({1.0, 2.0, 3.0}));
    CHECK(average_ranks({20.0, 10.0, 20.0}) == std::vector<double>({2.5, 1.0, 2.5}));
    CHECK(average_ranks({5.0, 5.0, 5.0}) == std::vector<double>({2.0, 2.0, 2.0}));
}

TEST_CASE("incomplete_beta matches reference values") {
    // Reference values computed with an independent implementation of the
    // regularized incomplete beta function.
    CHECK(incomplete_beta(0.5, 0.5, 0.3) == doctest::Approx(0.36901011956554536).epsilon(1e-12));
    CHECK(incomplete_beta(2.0, 3.0, 0.5) == doctest::Approx(0.6875).epsilon(1e-12));
    CHECK(incomplete_beta(5.0, 2.0, 0.8) == doctest::Approx(0.65536).epsilon(1e-12));
    CHECK(incomplete_beta(7.5, 0.5, 0.9) == doctest::Approx(0.2162483651372664).epsilon(1e-12));
    CHECK(incomplete_beta(2.0, 3.0, 0.0) == 0.0);
    CHECK(incomplete_beta(2.0, 3.0, 1.0) == 1.0);
}

TEST_CASE("student t two-sided p matches reference values") {
    CHECK(student_t_two_sided_p(2.0, 10.0) == doctest::Approx(0.07338803477074039).epsilon(1e-12));
    CHECK(student_t_two_sided_p(1.5, 4.0) == doctest::Approx(0.208).epsilon(1e-12));
    CHECK(student_t_two_sided_p(3.2, 15.0) ==
          doctest::Approx(0.005963848485531982).epsilon(1e-12));
    CHECK(student_t_two_sided_p(0.7, 5.0) == doctest::Approx(0.5151489483148165).epsilon(1e-12));
    CHECK(student_t_two_sided_p(-2.0, 10.0) == student_t_two_sided_p(2.0, 10.0));
}

TEST_CASE("spearman matches reference rho and p on fixed cases") {
    auto r = spearman({3, 1, 4, 1.5, 5, 9, 2, 6}, {2, 7, 1, 8, 2, 8, 1, 9});
    CHECK(r.rho == doctest::Approx(0.26671075473287964).epsilon(1e-12));
    CHECK(r.p_raw == doctest::Approx(0.5231267001703013).epsilon(1e-9));

    auto r2 = spearman({1, 2, 2, 3, 4, 5}, {2, 1, 3, 5, 4, 6});  // ties present
    CHECK(r2.rho == doctest::Approx(0.8406680016960504).epsilon(1e-12));
    CHECK(r2.p_raw == doctest::Approx(0.03605757284515918).epsilon(1e-9));
}

TEST_CASE("spearman extremes and degeneracy") {
    auto perfect = spearman({1, 2, 3, 4}, {10, 20, 30, 40});
    CHECK(perfect.rho == doctest::Approx(1.0));
    CHECK(perfect.p_raw == 0.0);
    auto anti = spearman({1, 2, 3, 4}, {4, 3, 2, 1});
    CHECK(anti.rho == doctest::Approx(-1.0));
    auto flat = spearman({1, 1, 1, 1}, {1, 2, 3, 4});
    CHECK(flat.degenerate);
    CHECK(flat.rho == 0.0);
    CHECK(flat.p_raw == 1.0);
    CHECK_THROWS_AS(spearman({1, 2}, {1, 2}), error);
    CHECK_THROWS_AS(spearman({1, 2, 3}, {1, 2}), error);
}

TEST_CASE("spearman equals pearson of oracle ranks on 500 random instances") {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<std::size_t> nd(3, 40);
    std::uniform_int_distribution<int> vd(0, 9);  // small support forces ties
    for (int trial = 0; trial < 500; ++trial) {
        std::size_t n = nd(rng);
        std::vector<double> x, y;
        for (std::size_t i = 0; i < n; ++i) {
            x.push_back(vd(rng));
            y.push_back(vd(rng));
        }
        bool cx = std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; });
        bool cy = std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
        auto res = spearman(x, y);
        if (cx || cy) {
            CHECK(res.degenerate);
            continue;
        }
        CHECK(average_ranks(x) == rank_oracle(x));
        double expect = pearson_oracle(rank_oracle(x), rank_oracle(y));
        if (std::isnan(expect)) {
            CHECK(res.degenerate);
        } else {
            CHECK(res.rho == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("bh_fdr matches the hand-evaluated step-up example") {
    // p sorted: .005 .01 .03 .04 .2 .5 ; m=6
    // raw adj:  .03  .03 .06 .06 .24 .5 (after running-min from the top)
    auto adj = bh_fdr({0.01, 0.04, 0.03, 0.005, 0.2, 0.5});
    REQUIRE(adj.size() == 6);
    CHECK(adj[0] == doctest::Approx(0.03).epsilon(1e-12));
    CHECK(adj[1] == doctest::Approx(0.06).epsilon(1e-12));
    CHECK(adj[2] == doctest::Approx(0.06).epsilon(1e-12));
    CHECK(adj[3] == doctest::Approx(0.03).epsilon(1e-12));
    CHECK(adj[4] == doctest::Approx(0.24).epsilon(1e-12));
    CHECK(adj[5] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("bh_fdr properties: monotone in input order, clipped to 1") {
    auto adj = bh_fdr({0.9, 0.95, 1.0});
    for (double a : adj) CHECK(a <= 1.0);
    CHECK(bh_fdr({}).empty());
    CHECK(bh_fdr({0.05})[0] == doctest::Approx(0.05));
    CHECK_THROWS_AS(bh_fdr({-0.1}), error);
    CHECK_THROWS_AS(bh_fdr({1.1}), error);
    // adjusted never below raw
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> pd(0.0, 1.0);
    std::vector<double> ps;
    for (int i = 0; i < 20; ++i) ps.push_back(pd(rng));
    auto a = bh_fdr(ps);
    for (std::size_t i = 0; i < ps.size(); ++i) CHECK(a[i] >= ps[i] - 1e-15);
}

TEST_CASE("partial_spearman removes a linear confounder") {
    // x and y driven purely by the control: residuals carry no signal.
    std::vector<double> c = {1, 2, 3, 4, 5, 6, 7, 8};
    std::vector<double> x, y;
    for (double v : c) {
        x.push_back(2.0 * v + 1.0);
        y.push_back(-3.0 * v + 5.0);
    }
    auto res = partial_spearman(x, y, c);
    CHECK(res.degenerate);  // residuals are numerically zero
    CHECK(res.rho == 0.0);
}

TEST_CASE("partial_spearman with constant control falls back to plain spearman") {
    std::vector<double> x = {1, 2, 3, 4, 5};
    std::vector<double> y = {2, 1, 4, 3, 5};
    auto res = partial_spearman(x, y, {7, 7, 7, 7, 7});
    auto plain = spearman(x, y);
    CHECK(res.constant_control);
    CHECK(res.rho == doctest::Approx(plain.rho));
    CHECK(res.p_raw == doctest::Approx(plain.p_raw));
    CHECK(res.resid_x == x);
    CHECK(res.resid_y == y);
}

TEST_CASE("partial_spearman residuals match an OLS oracle") {
    std::mt19937_64 rng(123);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> x, y, c;
    for (int i = 0; i < 12; ++i) {
        double ci = g(rng);
        c.push_back(ci);
        x.push_back(0.5 * ci + g(rng));
        y.push_back(-0.7 * ci + g(rng));
    }
    auto res = partial_spearman(x, y, c);
    REQUIRE(res.resid_x.size() == 12);
    // oracle: residuals orthogonal to control and to the intercept
    double sum_x = std::accumulate(res.resid_x.begin(), res.resid_x.end(), 0.0);
    CHECK(sum_x == doctest::Approx(0.0).epsilon(1e-9));
    double dot_c = 0.0;
    double mc = std::accumulate(c.begin(), c.end(), 0.0) / 12.0;
    for (int i = 0; i < 12; ++i) dot_c += res.resid_x[i] * (c[i] - mc);
    CHECK(dot_c == doctest::Approx(0.0).epsilon(1e-9));
    // rho equals spearman of the residual vectors
    auto check = spearman(res.resid_x, res.resid_y);
    CHECK(res.rho == doctest::Approx(check.rho));
    CHECK_THROWS_AS(partial_spearman({1, 2, 3}, {1, 2, 3}, {1, 2, 3}), error);
}

TEST_CASE("planted confounder simulation: partial kills the spurious correlation") {
    // x = a*c + e1, y = b*c + e2 with independent e1, e2: plain correlation is
    // large through c, partial correlation should be near zero.
    int ok = 0;
    int strong_plain = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(1000 + seed);
        std::normal_distribution<double> g(0.0, 1.0);
        std::vector<double> x, y, c;
        for (int i = 0; i < 150; ++i) {
            double ci = g(rng);
            c.push_back(ci);
            x.push_back(3.0 * ci + 0.5 * g(rng));
            y.push_back(3.0 * ci + 0.5 * g(rng));
        }
        auto plain = spearman(x, y);
        auto part = partial_spearman(x, y, c);
        if (std::fabs(plain.rho) > 0.6) ++strong_plain;
        if (std::fabs(part.rho) < 0.2) ++ok;
    }
    CHECK(strong_plain == 20);
    CHECK(ok >= 18);
}

TEST_CASE("permutation p matches exhaustive enumeration at n = 6") {
    // With n=6 there are 720 distinct orderings; the sampled estimate must sit
    // within 2/sqrt(iterations) of the exact tail probability.
    std::vector<double> x = {0.9, 0.2, 0.4, 0.8, 0.1, 0.6};
    std::vector<double> y = {0.8, 0.3, 0.35, 0.7, 0.2, 0.5};
    auto obs = spearman(x, y);
    double obs_abs = std::fabs(obs.rho);

    auto rx = average_ranks(x);
    auto ry = average_ranks(y);
    std::vector<std::size_t> idx = {0, 1, 2, 3, 4, 5};
    std::size_t exceed = 0;
    std::size_t total = 0;
    std::sort(idx.begin(), idx.end());
    do {
        std::vector<double> perm(6);
        for (std::size_t i = 0; i < 6; ++i) perm[i] = ry[idx[i]];
        double r = pearson_oracle(rx, perm);
        if (std::fabs(r) >= obs_abs - 1e-12) ++exceed;
        ++total;
    } while (std::next_permutation(idx.begin(), idx.end()));
    double exact = static_cast<double>(exceed) / static_cast<double>(total);

    std::size_t iters = 20000;
    double sampled = permutation_test(x, y, iters, 42);
    CHECK(std::fabs(sampled - exact) < 2.0 / std::sqrt(static_cast<double>(iters)));
}

TEST_CASE("permutation p uses add-one smoothing and is deterministic per seed") {
    std::vector<double> x = {1, 2, 3, 4, 5, 6, 7, 8};
    std::vector<double> y = {1, 2, 3, 4, 5, 6, 7, 8};
    double p1 = permutation_test(x, y, 1000, 9);
    double p2 = permutation_test(x, y, 1000, 9);
    CHECK(p1 == p2);
    CHECK(p1 >= 1.0 / 1001.0);  // never exactly zero
    CHECK(p1 <= 3.0 / 1001.0);  // identity permutation (and little else) reaches rho=1
    CHECK(permutation_test(x, y, 1000, 9) != doctest::Approx(permutation_test(x, y, 1000, 10)).epsilon(0));
    CHECK_THROWS_AS(permutation_test(x, y, 10, 1), error);
    CHECK_THROWS_AS(permutation_test({1, 1, 1, 1}, {1, 2, 3, 4}, 1000, 1), error);
}

TEST_CASE("leave_one_out drops each observation once") {
    std::vector<double> x = {0.1, 0.5, 0.3, 0.9, 0.7, 0.2};
    std::vector<double> y = {0.2, 0.6, 0.3, 0.8, 0.9, 0.1};
    std::vector<double> c = {1, 2, 3, 4, 5, 6};
    auto loo = leave_one_out(x, y, c, 0.05);
    REQUIRE(loo.folds.size() == 6);
    CHECK(loo.min_rho <= loo.max_rho);
    // fold 0 must equal a direct call without observation 0
    auto direct = partial_spearman({0.5, 0.3, 0.9, 0.7, 0.2}, {0.6, 0.3, 0.8, 0.9, 0.1},
                                   {2, 3, 4, 5, 6});
    CHECK(loo.folds[0].rho == doctest::Approx(direct.rho));
    CHECK_THROWS_AS(leave_one_out({1, 2, 3, 4}, {1, 2, 3, 4}, {1, 2, 3, 4}, 0.05), error);
}

TEST_CASE("leave_one_out significance flag follows alpha") {
    // strongly (but not perfectly) monotone data: p is small yet nonzero
    std::vector<double> x = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<double> y = {2, 1, 3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<double> c = {2, 1, 3, 1, 2, 3, 1, 2, 3, 2};  // unrelated control
    auto loo = leave_one_out(x, y, c, 0.05);
    CHECK(loo.all_significant);
    auto strict = leave_one_out(x, y, c, 1e-30);
    CHECK(!strict.all_significant);
}

TEST_CASE("median_split: low group holds values at or below the median") {
    // values: 1 2 3 4 -> median 2.5; low {1,2}, high {3,4}
    auto res = median_split({1, 2, 3, 4}, {0.8, 0.6, 0.3, 0.1});
    CHECK(res.low_n == 2);
    CHECK(res.high_n == 2);
    CHECK(res.low_mean == doctest::Approx(0.7));
    CHECK(res.high_mean == doctest::Approx(0.2));
    CHECK(res.drop_percent == doctest::Approx((0.7 - 0.2) / 0.7 * 100.0));
}

TEST_CASE("median_split with odd n puts the median itself in the low group") {
    auto res = median_split({1, 2, 3}, {0.9, 0.6, 0.3});
    CHECK(res.low_n == 2);  // 1 and 2 are <= median 2
    CHECK(res.high_n == 1);
    CHECK(res.low_mean == doctest::Approx(0.75));
    CHECK(res.high_mean == doctest::Approx(0.3));
}

TEST_CASE("median_split rejects degenerate inputs") {
    CHECK_THROWS_AS(median_split({1}, {0.5}), error);
    CHECK_THROWS_AS(median_split({2, 2, 2}, {0.1, 0.2, 0.3}), error);  // one side empty
    CHECK_THROWS_AS(median_split({1, 2}, {0.5}), error);
}
