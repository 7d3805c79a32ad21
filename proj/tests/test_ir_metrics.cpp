#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "specfi/errors.hpp"
#include "specfi/ir_metrics.hpp"

using namespace specfi;

namespace {

RankedList make_list(std::vector<std::string> ids) {
    RankedList rl;
    double score = static_cast<double>(ids.size());
    for (auto& id : ids) rl.entries.push_back({std::move(id), score--});
    return rl;
}

// Independent oracles: straightforward loops over the full ranking, written
// without reference to the library implementation.
double ap_oracle(const std::vector<std::string>& ranking, const std::set<std::string>& rel) {
    double num = 0.0;
    int seen = 0;
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        if (rel.count(ranking[i])) {
            ++seen;
            num += static_cast<double>(seen) / static_cast<double>(i + 1);
        }
    }
    return num / static_cast<double>(rel.size());
}

double dcg(const std::vector<int>& gains, std::size_t k) {
    double s = 0.0;
    for (std::size_t i = 0; i < std::min(k, gains.size()); ++i)
        s += gains[i] / std::log2(static_cast<double>(i) + 2.0);
    return s;
}

double ndcg_oracle(const std::vector<std::string>& ranking, const std::set<std::string>& rel,
                   std::size_t k) {
    std::vector<int> gains;
    for (const auto& id : ranking) gains.push_back(rel.count(id) ? 1 : 0);
    std::vector<int> ideal(rel.size(), 1);
    return dcg(gains, k) / dcg(ideal, k);
}

double rprec_oracle(const std::vector<std::string>& ranking, const std::set<std::string>& rel) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < std::min(rel.size(), ranking.size()); ++i)
        if (rel.count(ranking[i])) ++hits;
    return static_cast<double>(hits) / static_cast<double>(rel.size());
}

}  // namespace

TEST_CASE("hand case [rel, non, rel]") {
    auto rl = make_list({"r1", "n1", "r2"});
    std::set<std::string> rel = {"r1", "r2"};
    // AP = (1/1 + 2/3)/2 = 0.83333...
    CHECK(average_precision(rl, rel) == doctest::Approx(0.8333333333333333).epsilon(1e-12));
    // DCG = 1 + 1/log2(4) = 1.5; IDCG = 1 + 1/log2(3); nDCG ~= 0.9197
    double expected_ndcg = 1.5 / (1.0 + 1.0 / std::log2(3.0));
    CHECK(ndcg_at_k(rl, rel, 10) == doctest::Approx(expected_ndcg).epsilon(1e-12));
    CHECK(ndcg_at_k(rl, rel, 10) == doctest::Approx(0.9197).epsilon(1e-4));
    // top-2 contains 1 of 2 relevant
    CHECK(r_precision(rl, rel) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("perfect and empty rankings") {
    std::set<std::string> rel = {"a", "b"};
    auto perfect = make_list({"a", "b", "x"});
    CHECK(average_precision(perfect, rel) == doctest::Approx(1.0));
    CHECK(ndcg_at_k(perfect, rel, 10) == doctest::Approx(1.0));
    CHECK(r_precision(perfect, rel) == doctest::Approx(1.0));

    RankedList empty;
    CHECK(average_precision(empty, rel) == doctest::Approx(0.0));
    CHECK(ndcg_at_k(empty, rel, 10) == doctest::Approx(0.0));
    CHECK(r_precision(empty, rel) == doctest::Approx(0.0));
}

TEST_CASE("truncated rankings miss unretrieved relevant docs") {
    // 3 relevant, only 1 retrieved: AP divides by |rel| = 3
    auto rl = make_list({"a", "x"});
    std::set<std::string> rel = {"a", "b", "c"};
    CHECK(average_precision(rl, rel) == doctest::Approx(1.0 / 3.0));
    CHECK(r_precision(rl, rel) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("ndcg cutoff limits both dcg and idcg") {
    // 15 relevant docs, ranking puts one at position 12: outside nDCG@10
    std::vector<std::string> ranking;
    for (int i = 0; i < 11; ++i) ranking.push_back("non" + std::to_string(i));
    ranking.push_back("rel0");
    std::set<std::string> rel;
    for (int i = 0; i < 15; ++i) rel.insert("rel" + std::to_string(i));
    auto rl = make_list(ranking);
    CHECK(ndcg_at_k(rl, rel, 10) == doctest::Approx(0.0));
    CHECK(ndcg_at_k(rl, rel, 100) > 0.0);
    // ideal DCG at k=10 uses only 10 gains even with 15 relevant
    CHECK(ndcg_at_k(rl, rel, 100) ==
          doctest::Approx(ndcg_oracle(ranking, rel, 100)).epsilon(1e-12));
}

TEST_CASE("empty judgment sets are invariant violations at the metric level") {
    auto rl = make_list({"a"});
    CHECK_THROWS_AS(average_precision(rl, {}), error);
    CHECK_THROWS_AS(ndcg_at_k(rl, {}, 10), error);
    CHECK_THROWS_AS(r_precision(rl, {}), error);
    CHECK_THROWS_AS(ndcg_at_k(rl, {"a"}, 0), error);
}

TEST_CASE("evaluate macro-averages and excludes empty judgment sets") {
    std::vector<RankedList> runs;
    auto a = make_list({"r", "x"});
    a.query_id = "n1";
    auto b = make_list({"x", "r2"});
    b.query_id = "n2";
    auto c = make_list({"x"});
    c.query_id = "n3";
    runs = {a, b, c};
    std::map<std::string, std::set<std::string>> judg = {
        {"n1", {"r"}}, {"n2", {"r2"}}, {"n3", {}}};
    auto res = evaluate(runs, judg);
    REQUIRE(res.per_narrative.size() == 2);
    CHECK(res.excluded == std::vector<std::string>{"n3"});
    CHECK(res.per_narrative.at("n1").ap == doctest::Approx(1.0));
    CHECK(res.per_narrative.at("n2").ap == doctest::Approx(0.5));
    CHECK(res.map == doctest::Approx(0.75));
    CHECK(res.per_narrative.at("n1").m_i == 1);
}

TEST_CASE("evaluate requires a judgment set per query") {
    auto rl = make_list({"a"});
    rl.query_id = "nope";
    CHECK_THROWS_AS(evaluate({rl}, {}), error);
}

TEST_CASE("randomized oracle equivalence on 1000 seeded instances") {
    std::mt19937_64 rng(20240917);
    for (int trial = 0; trial < 1000; ++trial) {
        std::uniform_int_distribution<std::size_t> pool_size(1, 120);
        std::size_t pool = pool_size(rng);
        std::vector<std::string> docs;
        for (std::size_t i = 0; i < pool; ++i) docs.push_back("d" + std::to_string(i));

        std::shuffle(docs.begin(), docs.end(), rng);
        std::uniform_int_distribution<std::size_t> rel_count(1, pool);
        std::set<std::string> rel;
        std::size_t nrel = rel_count(rng);
        for (std::size_t i = 0; i < nrel; ++i) rel.insert(docs[i]);

        std::shuffle(docs.begin(), docs.end(), rng);
        std::uniform_int_distribution<std::size_t> depth_dist(0, pool);
        docs.resize(depth_dist(rng));  // truncated ranking

        auto rl = make_list(docs);
        CHECK(average_precision(rl, rel) ==
              doctest::Approx(ap_oracle(docs, rel)).epsilon(1e-12));
        CHECK(ndcg_at_k(rl, rel, 10) == doctest::Approx(ndcg_oracle(docs, rel, 10)).epsilon(1e-12));
        CHECK(ndcg_at_k(rl, rel, 100) ==
              doctest::Approx(ndcg_oracle(docs, rel, 100)).epsilon(1e-12));
        CHECK(r_precision(rl, rel) == doctest::Approx(rprec_oracle(docs, rel)).epsilon(1e-12));
    }
}

TEST_CASE("csv and json render macro rows") {
    auto rl = make_list({"r"});
    rl.query_id = "n1";
    auto res = evaluate({rl}, {{"n1", {"r"}}});
    auto csv = eval_to_csv(res);
    CHECK(csv.find("narrative_id,m_i,ap,ndcg10,ndcg100,r_precision") == 0);
    CHECK(csv.find("macro,,") != std::string::npos);
    auto js = eval_to_json(res);
    CHECK(js.find("\"map\"") != std::string::npos);
}
