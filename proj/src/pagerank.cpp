#include <cmath>

#include "specfi/errors.hpp"
#include "specfi/graph.hpp"

namespace specfi {

PprResult personalized_pagerank(const Graph& graph, const std::set<int>& seeds,
                                const PprParams& params) {
    if (seeds.empty()) throw input_error("personalized PageRank requires a non-empty seed set");
    if (!(params.damping > 0.0 && params.damping < 1.0))
        throw input_error("damping must lie in (0, 1)");
    std::size_t n = graph.node_count();
    for (int s : seeds)
        if (s < 0 || s >= static_cast<int>(n)) throw input_error("seed node does not exist");

    std::vector<double> teleport(n, 0.0);
    for (int s : seeds) teleport[static_cast<std::size_t>(s)] = 1.0 / static_cast<double>(seeds.size());

    std::vector<double> out_weight(n, 0.0);
    for (std::size_t v = 0; v < n; ++v)
        for (const auto& [u, w] : graph.neighbors(static_cast<int>(v))) out_weight[v] += w;

    std::vector<double> p = teleport;
    std::vector<double> next(n, 0.0);
    PprResult res;
    res.converged = false;
    for (int iter = 0; iter < params.max_iter; ++iter) {
        std::fill(next.begin(), next.end(), 0.0);
        double dangling = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            if (out_weight[v] <= 0.0) {
                dangling += p[v];
                continue;
            }
            double share = p[v] / out_weight[v];
            for (const auto& [u, w] : graph.neighbors(static_cast<int>(v)))
                next[static_cast<std::size_t>(u)] += share * w;
        }
        double delta = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            double value = (1.0 - params.damping) * teleport[v] +
                           params.damping * (next[v] + dangling * teleport[v]);
            delta += std::fabs(value - p[v]);
            next[v] = value;
        }
        std::swap(p, next);
        if (delta < params.tol) {
            res.converged = true;
            break;
        }
    }
    // renormalize away accumulated floating-point drift
    double sum = 0.0;
    for (double x : p) sum += x;
    for (double& x : p) x /= sum;
    res.scores = std::move(p);
    return res;
}

}  // namespace specfi
