#include <algorithm>
#include <deque>
#include <map>
#include <numeric>
#include <random>

#include "specfi/errors.hpp"
#include "specfi/graph.hpp"

namespace specfi {

namespace {

// Working representation for the aggregation levels. Self-loop weight is
// stored separately and contributes twice to a node's strength, so the
// aggregated graph preserves modularity exactly.
struct WGraph {
    std::size_t n = 0;
    std::vector<std::vector<std::pair<std::size_t, double>>> adj;  // no self entries
    std::vector<double> loops;
    double total = 0.0;  // 2m = sum of strengths

    double strength(std::size_t v) const {
        double s = 2.0 * loops[v];
        for (const auto& [u, w] : adj[v]) s += w;
        return s;
    }
};

WGraph to_wgraph(const Graph& g) {
    WGraph wg;
    wg.n = g.node_count();
    wg.adj.resize(wg.n);
    wg.loops.assign(wg.n, 0.0);
    for (std::size_t v = 0; v < wg.n; ++v)
        for (const auto& [u, w] : g.neighbors(static_cast<int>(v)))
            wg.adj[v].emplace_back(static_cast<std::size_t>(u), w);
    for (std::size_t v = 0; v < wg.n; ++v) wg.total += wg.strength(v);
    return wg;
}

double quality(const WGraph& g, const std::vector<std::size_t>& comm, double gamma) {
    if (g.total <= 0.0) return 0.0;
    std::size_t nc = *std::max_element(comm.begin(), comm.end()) + 1;
    std::vector<double> internal(nc, 0.0);  // sum over ordered pairs
    std::vector<double> tot(nc, 0.0);
    for (std::size_t v = 0; v < g.n; ++v) {
        tot[comm[v]] += g.strength(v);
        internal[comm[v]] += 2.0 * g.loops[v];
        for (const auto& [u, w] : g.adj[v])
            if (comm[u] == comm[v]) internal[comm[v]] += w;
    }
    double q = 0.0;
    for (std::size_t c = 0; c < nc; ++c)
        q += internal[c] / g.total - gamma * (tot[c] / g.total) * (tot[c] / g.total);
    return q;
}

std::vector<std::size_t> compact_labels(std::vector<std::size_t> labels) {
    std::size_t max_label = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
    std::vector<std::size_t> remap(max_label + 1, SIZE_MAX);
    std::size_t next = 0;
    for (auto& l : labels) {
        if (remap[l] == SIZE_MAX) remap[l] = next++;
        l = remap[l];
    }
    return labels;
}

// Queue-based local moving; returns true if any node moved.
bool local_move(const WGraph& g, std::vector<std::size_t>& comm, double gamma,
                std::mt19937_64& rng) {
    std::vector<double> tot(g.n, 0.0);
    std::vector<double> strength(g.n);
    for (std::size_t v = 0; v < g.n; ++v) strength[v] = g.strength(v);
    for (std::size_t v = 0; v < g.n; ++v) tot[comm[v]] += strength[v];

    std::vector<std::size_t> order(g.n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::deque<std::size_t> queue(order.begin(), order.end());
    std::vector<bool> queued(g.n, true);

    bool moved_any = false;
    std::vector<double> k_vc(g.n, 0.0);  // scratch: weight from v to community c
    while (!queue.empty()) {
        std::size_t v = queue.front();
        queue.pop_front();
        queued[v] = false;

        std::size_t old_c = comm[v];
        tot[old_c] -= strength[v];

        std::vector<std::size_t> touched;
        for (const auto& [u, w] : g.adj[v]) {
            std::size_t c = comm[u];
            if (k_vc[c] == 0.0) touched.push_back(c);
            k_vc[c] += w;
        }
        // candidate gain relative to being a singleton; staying counts too
        std::size_t best_c = old_c;
        double best_gain = k_vc[old_c] - gamma * strength[v] * tot[old_c] / g.total;
        for (std::size_t c : touched) {
            double gain = k_vc[c] - gamma * strength[v] * tot[c] / g.total;
            if (gain > best_gain + 1e-12 || (gain > best_gain - 1e-12 && c < best_c)) {
                best_gain = gain;
                best_c = c;
            }
        }
        // empty community option (node isolates itself) has gain 0
        if (best_gain < -1e-12) {
            // isolate: reuse old community if v was alone there, else a fresh label
            bool alone = tot[old_c] == 0.0;
            best_c = alone ? old_c : comm.size();
            if (!alone) {
                tot.push_back(0.0);
                best_c = tot.size() - 1;
            }
        }
        for (std::size_t c : touched) k_vc[c] = 0.0;
        k_vc[old_c] = 0.0;

        comm[v] = best_c;
        if (best_c >= tot.size()) tot.resize(best_c + 1, 0.0);
        if (tot.size() > k_vc.size()) k_vc.resize(tot.size(), 0.0);
        tot[best_c] += strength[v];
        if (best_c != old_c) {
            moved_any = true;
            for (const auto& [u, w] : g.adj[v]) {
                if (comm[u] != best_c && !queued[u]) {
                    queue.push_back(u);
                    queued[u] = true;
                }
            }
        }
    }
    comm = compact_labels(std::move(comm));
    return moved_any;
}

// Refinement: within each local-moving community, grow sub-communities by
// merging singleton nodes along edges only, which keeps every refined
// community internally connected.
std::vector<std::size_t> refine(const WGraph& g, const std::vector<std::size_t>& comm, double gamma,
                                std::mt19937_64& rng) {
    std::vector<std::size_t> refined(g.n);
    std::iota(refined.begin(), refined.end(), 0);
    std::vector<double> strength(g.n);
    for (std::size_t v = 0; v < g.n; ++v) strength[v] = g.strength(v);
    std::vector<double> tot = strength;  // per refined community
    std::vector<std::size_t> size(g.n, 1);

    std::vector<std::size_t> order(g.n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<double> k_vc(g.n, 0.0);
    for (std::size_t v : order) {
        if (size[refined[v]] != 1) continue;  // only merge nodes still alone
        std::vector<std::size_t> touched;
        for (const auto& [u, w] : g.adj[v]) {
            if (comm[u] != comm[v]) continue;  // stay within the local-move community
            std::size_t c = refined[u];
            if (c == refined[v]) continue;
            if (k_vc[c] == 0.0) touched.push_back(c);
            k_vc[c] += w;
        }
        std::size_t best_c = refined[v];
        double best_gain = 0.0;
        for (std::size_t c : touched) {
            double gain = k_vc[c] - gamma * strength[v] * tot[c] / g.total;
            if (gain > best_gain + 1e-12 || (gain > best_gain - 1e-12 && gain > 0.0 && c < best_c)) {
                best_gain = gain;
                best_c = c;
            }
        }
        for (std::size_t c : touched) k_vc[c] = 0.0;
        if (best_c != refined[v]) {
            tot[best_c] += strength[v];
            size[best_c] += size[refined[v]];
            size[refined[v]] = 0;
            refined[v] = best_c;
        }
    }
    return compact_labels(std::move(refined));
}

WGraph aggregate_graph(const WGraph& g, const std::vector<std::size_t>& refined) {
    std::size_t nc = *std::max_element(refined.begin(), refined.end()) + 1;
    WGraph ag;
    ag.n = nc;
    ag.adj.resize(nc);
    ag.loops.assign(nc, 0.0);
    std::vector<std::map<std::size_t, double>> acc(nc);
    for (std::size_t v = 0; v < g.n; ++v) {
        ag.loops[refined[v]] += g.loops[v];
        for (const auto& [u, w] : g.adj[v]) {
            if (v > u) continue;
            if (refined[v] == refined[u])
                ag.loops[refined[v]] += w;
            else
                acc[std::min(refined[v], refined[u])][std::max(refined[v], refined[u])] += w;
        }
    }
    for (std::size_t a = 0; a < nc; ++a) {
        for (const auto& [b, w] : acc[a]) {
            ag.adj[a].emplace_back(b, w);
            ag.adj[b].emplace_back(a, w);
        }
    }
    ag.total = g.total;
    return ag;
}

// Splits any disconnected community into its connected components; this can
// only increase modularity (tot splits, internal weight is preserved).
std::vector<std::size_t> split_disconnected(const WGraph& g, std::vector<std::size_t> comm) {
    std::size_t next = *std::max_element(comm.begin(), comm.end()) + 1;
    std::vector<bool> visited(g.n, false);
    for (std::size_t start = 0; start < g.n; ++start) {
        if (visited[start]) continue;
        // BFS within the community of `start`
        std::size_t c = comm[start];
        std::vector<std::size_t> component;
        std::deque<std::size_t> queue{start};
        visited[start] = true;
        bool first_component_of_c = true;
        for (std::size_t v = 0; v < start; ++v)
            if (comm[v] == c) first_component_of_c = false;
        while (!queue.empty()) {
            std::size_t v = queue.front();
            queue.pop_front();
            component.push_back(v);
            for (const auto& [u, w] : g.adj[v]) {
                if (!visited[u] && comm[u] == c) {
                    visited[u] = true;
                    queue.push_back(u);
                }
            }
        }
        if (!first_component_of_c) {
            for (std::size_t v : component) comm[v] = next;
            ++next;
        }
    }
    return compact_labels(std::move(comm));
}

}  // namespace

double modularity(const Graph& graph, const std::vector<Community>& communities, double resolution) {
    WGraph wg = to_wgraph(graph);
    std::vector<std::size_t> comm(wg.n, 0);
    for (const auto& c : communities)
        for (int m : c.members) comm[static_cast<std::size_t>(m)] = static_cast<std::size_t>(c.id);
    return quality(wg, compact_labels(std::move(comm)), resolution);
}

namespace {

// One full Leiden run: local moving, refinement, aggregation until fixed point.
std::vector<std::size_t> leiden_once(const WGraph& start, double resolution, std::uint64_t seed) {
    WGraph level = start;
    std::mt19937_64 rng(seed);

    // node_map[v] = aggregate node currently representing original node v
    std::vector<std::size_t> node_map(level.n);
    std::iota(node_map.begin(), node_map.end(), 0);
    std::vector<std::size_t> final_comm(level.n);
    std::iota(final_comm.begin(), final_comm.end(), 0);

    std::vector<std::size_t> comm(level.n);
    std::iota(comm.begin(), comm.end(), 0);
    for (int iter = 0; iter < 100; ++iter) {
        bool moved = local_move(level, comm, resolution, rng);
        for (std::size_t v = 0; v < node_map.size(); ++v) final_comm[v] = comm[node_map[v]];
        if (!moved && iter > 0) break;

        auto refined = refine(level, comm, resolution, rng);
        std::size_t nc = *std::max_element(refined.begin(), refined.end()) + 1;
        if (nc == level.n) break;  // refinement made no progress; fixed point

        WGraph next = aggregate_graph(level, refined);
        // the next level starts from the local-moving partition, carried over
        // through the refined nodes
        std::vector<std::size_t> next_comm(nc, 0);
        for (std::size_t v = 0; v < level.n; ++v) next_comm[refined[v]] = comm[v];
        for (auto& m : node_map) m = refined[m];
        level = std::move(next);
        comm = compact_labels(std::move(next_comm));
        if (level.n <= 1) {
            for (std::size_t v = 0; v < node_map.size(); ++v) final_comm[v] = comm[node_map[v]];
            break;
        }
    }
    return final_comm;
}

}  // namespace

std::vector<Community> leiden_partition(const Graph& graph, double resolution, std::uint64_t seed) {
    if (graph.node_count() == 0) throw input_error("cannot partition an empty graph");
    WGraph original = to_wgraph(graph);

    if (original.total <= 0.0) {
        // edgeless graph: every node is its own community
        std::vector<Community> out(original.n);
        for (std::size_t v = 0; v < original.n; ++v) {
            out[v].id = static_cast<int>(v);
            out[v].members.insert(static_cast<int>(v));
        }
        return out;
    }

    // A single pass can stall in visit-order-dependent local optima; a few
    // deterministic restarts keeping the best partition smooth that out.
    std::mt19937_64 seeder(seed);
    std::vector<std::size_t> final_comm;
    double best_q = 0.0;
    for (int restart = 0; restart < 8; ++restart) {
        auto fc = split_disconnected(
            original, compact_labels(leiden_once(original, resolution, seeder())));
        double q = quality(original, fc, resolution);
        if (final_comm.empty() || q > best_q + 1e-12) {
            best_q = q;
            final_comm = std::move(fc);
        }
    }

    std::size_t nc = *std::max_element(final_comm.begin(), final_comm.end()) + 1;
    std::vector<Community> out(nc);
    for (std::size_t c = 0; c < nc; ++c) out[c].id = static_cast<int>(c);
    for (std::size_t v = 0; v < final_comm.size(); ++v)
        out[final_comm[v]].members.insert(static_cast<int>(v));
    return out;
}

}  // namespace specfi
