#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mcmin/chain.hpp"
#include "mcmin/partition.hpp"

namespace mcmin {

/// Undirected graph with deduplicated edges and no self-loops.
struct Graph {
    int n_vertices = 0;
    std::vector<std::pair<int, int>> edges;  // endpoints ordered low,high; input order kept

    static Graph make(int n, std::vector<std::pair<int, int>> raw) {
        Graph g;
        g.n_vertices = n;
        std::set<std::pair<int, int>> seen;
        for (auto [u, v] : raw) {
            if (u == v) throw McError("self-loop in graph");
            if (u < 0 || v < 0 || u >= n || v >= n) throw McError("edge endpoint out of range");
            auto key = std::minmax(u, v);
            if (seen.insert(key).second) g.edges.push_back(key);
        }
        return g;
    }
};

/// Edge-list text: one "u v" pair per line, 0-based, '#' comments.
/// Vertex count is one past the largest endpoint.
inline Graph parse_graph(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    std::vector<std::pair<int, int>> raw;
    int max_v = -1;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        int u, v;
        if (!(ls >> u)) continue;
        if (!(ls >> v)) throw ParseError(lineno, 1, "expected two endpoints");
        if (u < 0 || v < 0) throw ParseError(lineno, 1, "negative vertex index");
        if (u == v) throw ParseError(lineno, 1, "self-loop");
        raw.emplace_back(u, v);
        max_v = std::max({max_v, u, v});
    }
    return Graph::make(max_v + 1, std::move(raw));
}

/// Smallest vertex cover by exhaustive search; desk scale only.
inline std::vector<int> min_vertex_cover(const Graph& g) {
    if (g.n_vertices > 20) throw McError("brute-force vertex cover limited to 20 vertices");
    std::vector<int> best;
    bool found = false;
    for (unsigned mask = 0; mask < (1u << g.n_vertices); ++mask) {
        bool covers = true;
        for (auto [u, v] : g.edges)
            if (!((mask >> u) & 1) && !((mask >> v) & 1)) {
                covers = false;
                break;
            }
        if (!covers) continue;
        int size = __builtin_popcount(mask);
        if (!found || size < static_cast<int>(best.size())) {
            best.clear();
            for (int v = 0; v < g.n_vertices; ++v)
                if ((mask >> v) & 1) best.push_back(v);
            found = true;
        }
    }
    return best;
}

/// IPv4 zeroconf protocol chain with n probes: m0..mn, err, ok.
/// m0 moves to m1 with q and to ok with 1-q; probe i moves on with p and
/// back to m0 with 1-p; the last probe errs with p. err and ok absorb.
inline MarkovChain<Rational> gen_ipv4(const Rational& p, const Rational& q, int n) {
    if (p < 0 || p > 1 || q < 0 || q > 1) throw BadProbability("parameters must lie in [0,1]");
    if (n < 1) throw BadProbability("need at least one probe");
    MarkovChain<Rational> mc;
    mc.name = "ipv4_" + std::to_string(n);
    int err = n + 1, ok = n + 2;
    int probe = intern_label("probe");
    mc.labels.assign(n + 3, probe);
    mc.labels[err] = intern_label("err");
    mc.labels[ok] = intern_label("ok");
    mc.rows.resize(n + 3);
    mc.rows[0] = Distribution<Rational>({{1, q}, {ok, Rational(1) - q}});
    for (int i = 1; i < n; ++i)
        mc.rows[i] = Distribution<Rational>({{i + 1, p}, {0, Rational(1) - p}});
    mc.rows[n] = Distribution<Rational>({{err, p}, {0, Rational(1) - p}});
    mc.rows[err] = Distribution<Rational>::dirac(err);
    mc.rows[ok] = Distribution<Rational>::dirac(ok);
    mc.initial = 0;
    return mc;
}

/// Drunkard's walk with n steps to home and k steps to the bar:
/// home, l_n..l_1, m0, r_1..r_k, bar. Interior states step toward the bar
/// with p and toward home with 1-p; home and bar absorb.
inline MarkovChain<Rational> gen_drunkard(const Rational& p, int n, int k) {
    if (p < 0 || p > 1) throw BadProbability("parameter must lie in [0,1]");
    if (n < 1 || k < 1) throw BadProbability("need at least one step on each side");
    MarkovChain<Rational> mc;
    mc.name = "drkw_" + std::to_string(n) + "_" + std::to_string(k);
    int total = n + k + 3;
    int walk = intern_label("walk");
    mc.labels.assign(total, walk);
    mc.labels[0] = intern_label("home");
    mc.labels[total - 1] = intern_label("bar");
    mc.rows.resize(total);
    mc.rows[0] = Distribution<Rational>::dirac(0);
    for (int s = 1; s < total - 1; ++s)
        mc.rows[s] = Distribution<Rational>({{s + 1, p}, {s - 1, Rational(1) - p}});
    mc.rows[total - 1] = Distribution<Rational>::dirac(total - 1);
    mc.initial = n + 1;  // m0 sits between l_1 and r_1
    return mc;
}

namespace detail {

/// State layout of the vertex-cover chain: root, twin edge states in input
/// order, vertex states, sink last.
struct VcLayout {
    int root = 0;
    int edge0 = 1;                 // twins at edge0 + 2*e and edge0 + 2*e + 1
    int vertex0 = 0, sink = 0;

    static VcLayout of(const Graph& g) {
        VcLayout l;
        l.vertex0 = 1 + 2 * static_cast<int>(g.edges.size());
        l.sink = l.vertex0 + g.n_vertices;
        return l;
    }
};

}  // namespace detail

/// NP-hardness gadget: root to each twin edge state with 1/2m; the twin
/// pair of edge (v1,v2) moves to v1 resp. v2 with 1/m and to the sink with
/// 1-1/m; vertex states and sink absorb. Twins share a label, everything
/// else is labelled distinctly. 2|E| + |V| + 2 states.
inline MarkovChain<Rational> vc_to_mc(const Graph& g) {
    const int m = static_cast<int>(g.edges.size());
    if (m < 2) throw TooFewEdges("vertex-cover gadget needs at least 2 edges");
    auto lay = detail::VcLayout::of(g);
    MarkovChain<Rational> mc;
    mc.name = "vc_gadget";
    int total = lay.sink + 1;
    mc.labels.assign(total, 0);
    mc.labels[lay.root] = intern_label("r");
    mc.labels[lay.sink] = intern_label("s");
    for (int v = 0; v < g.n_vertices; ++v)
        mc.labels[lay.vertex0 + v] = intern_label("v" + std::to_string(v));
    for (int e = 0; e < m; ++e) {
        int lab = intern_label("e" + std::to_string(e));
        mc.labels[lay.edge0 + 2 * e] = lab;
        mc.labels[lay.edge0 + 2 * e + 1] = lab;
    }
    mc.rows.resize(total);
    {
        std::vector<std::pair<int, Rational>> row;
        for (int e = 0; e < 2 * m; ++e) row.emplace_back(lay.edge0 + e, rat(1, 2 * m));
        mc.rows[lay.root] = Distribution<Rational>(std::move(row));
    }
    for (int e = 0; e < m; ++e) {
        auto [v1, v2] = g.edges[e];
        mc.rows[lay.edge0 + 2 * e] = Distribution<Rational>(
            {{lay.vertex0 + v1, rat(1, m)}, {lay.sink, rat(m - 1, m)}});
        mc.rows[lay.edge0 + 2 * e + 1] = Distribution<Rational>(
            {{lay.vertex0 + v2, rat(1, m)}, {lay.sink, rat(m - 1, m)}});
    }
    for (int v = 0; v < g.n_vertices; ++v)
        mc.rows[lay.vertex0 + v] = Distribution<Rational>::dirac(lay.vertex0 + v);
    mc.rows[lay.sink] = Distribution<Rational>::dirac(lay.sink);
    mc.initial = lay.root;
    return mc;
}

/// Cover-derived approximant: keeps one twin per edge (the one pointing to
/// the lowest-index covered endpoint), only the covered vertex states, and
/// redistributes the root mass uniformly. m + |C| + 2 states.
inline MarkovChain<Rational> cover_to_mc(const Graph& g, const std::vector<int>& cover) {
    const int m = static_cast<int>(g.edges.size());
    if (m < 2) throw TooFewEdges("vertex-cover gadget needs at least 2 edges");
    std::vector<char> in_cover(g.n_vertices, 0);
    for (int v : cover) {
        if (v < 0 || v >= g.n_vertices) throw NotACover("cover vertex out of range");
        in_cover[v] = 1;
    }
    for (auto [u, v] : g.edges)
        if (!in_cover[u] && !in_cover[v])
            throw NotACover("edge (" + std::to_string(u) + "," + std::to_string(v) +
                            ") is not covered");
    std::vector<int> kept(g.n_vertices, -1);
    std::vector<int> cover_sorted;
    for (int v = 0; v < g.n_vertices; ++v)
        if (in_cover[v]) {
            kept[v] = static_cast<int>(cover_sorted.size());
            cover_sorted.push_back(v);
        }
    const int c = static_cast<int>(cover_sorted.size());
    MarkovChain<Rational> mc;
    mc.name = "vc_cover";
    int root = 0, edge0 = 1, vertex0 = 1 + m, sink = vertex0 + c;
    mc.labels.assign(sink + 1, 0);
    mc.labels[root] = intern_label("r");
    mc.labels[sink] = intern_label("s");
    for (int i = 0; i < c; ++i)
        mc.labels[vertex0 + i] = intern_label("v" + std::to_string(cover_sorted[i]));
    mc.rows.resize(sink + 1);
    {
        std::vector<std::pair<int, Rational>> row;
        for (int e = 0; e < m; ++e) row.emplace_back(edge0 + e, rat(1, m));
        mc.rows[root] = Distribution<Rational>(std::move(row));
    }
    for (int e = 0; e < m; ++e) {
        auto [v1, v2] = g.edges[e];
        int target = in_cover[v1] ? v1 : v2;  // endpoints ordered, so lowest covered wins
        mc.labels[edge0 + e] = intern_label("e" + std::to_string(e));
        mc.rows[edge0 + e] = Distribution<Rational>(
            {{vertex0 + kept[target], rat(1, m)}, {sink, rat(m - 1, m)}});
    }
    for (int i = 0; i < c; ++i) mc.rows[vertex0 + i] = Distribution<Rational>::dirac(vertex0 + i);
    mc.rows[sink] = Distribution<Rational>::dirac(sink);
    mc.initial = root;
    return mc;
}

/// Significant-approximant gadget: edge states e_n..e_0 with endpoint
/// states in between; e_i branches to its two endpoints with 1/2, endpoints
/// move on to e_{i-1}, e_0 absorbs. Edge and sink states take pairwise
/// distinct labels, endpoint states are labelled by their vertex.
/// 3|E| + 1 states, initial e_n.
inline MarkovChain<Rational> sba_gadget(const Graph& g) {
    const int n = static_cast<int>(g.edges.size());
    if (n < 1) throw TooFewEdges("gadget needs at least one edge");
    MarkovChain<Rational> mc;
    mc.name = "sba_gadget";
    // layout: e_n, e_n^1, e_n^2, e_{n-1}, ..., e_1, e_1^1, e_1^2, e_0
    int total = 3 * n + 1;
    mc.labels.assign(total, 0);
    mc.rows.resize(total);
    auto edge_state = [&](int i) { return 3 * (n - i); };  // i = n..0
    for (int i = n; i >= 1; --i) {
        int e = edge_state(i);
        auto [v1, v2] = g.edges[i - 1];
        mc.labels[e] = intern_label("e" + std::to_string(i));
        mc.labels[e + 1] = intern_label("v" + std::to_string(v1));
        mc.labels[e + 2] = intern_label("v" + std::to_string(v2));
        mc.rows[e] = Distribution<Rational>({{e + 1, rat(1, 2)}, {e + 2, rat(1, 2)}});
        mc.rows[e + 1] = Distribution<Rational>::dirac(edge_state(i - 1));
        mc.rows[e + 2] = Distribution<Rational>::dirac(edge_state(i - 1));
    }
    mc.labels[edge_state(0)] = intern_label("e0");
    mc.rows[edge_state(0)] = Distribution<Rational>::dirac(edge_state(0));
    mc.initial = edge_state(n);
    return mc;
}

/// Certificate for the reflected-path characterization.
struct ReflectedPathWitness {
    std::vector<int> path;      // m_0 .. m_h from the initial state
    int split = 0;              // p: the suffix m_p..m_h is reflected
    std::vector<int> bscc;      // vertex set of the reflecting BSCC
    std::vector<int> reflected; // v_p .. v_h inside the BSCC, v_h = m_h
};

namespace detail {

/// Strongly connected components (iterative Tarjan); returns component id
/// per state, ids in reverse topological order.
template <class S>
std::pair<std::vector<int>, int> scc_of(const MarkovChain<S>& mc) {
    int n = mc.size();
    std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
    std::vector<char> on_stack(n, 0);
    std::vector<int> stack;
    int next_index = 0, n_comps = 0;
    struct Frame {
        int v;
        size_t edge;
    };
    for (int root = 0; root < n; ++root) {
        if (index[root] != -1) continue;
        std::vector<Frame> call{{root, 0}};
        index[root] = low[root] = next_index++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!call.empty()) {
            auto& fr = call.back();
            if (fr.edge < mc.rows[fr.v].entries.size()) {
                int w = mc.rows[fr.v].entries[fr.edge].first;
                ++fr.edge;
                if (index[w] == -1) {
                    index[w] = low[w] = next_index++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[fr.v] = std::min(low[fr.v], index[w]);
                }
            } else {
                int v = fr.v;
                call.pop_back();
                if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
                if (low[v] == index[v]) {
                    for (;;) {
                        int w = stack.back();
                        stack.pop_back();
                        on_stack[w] = 0;
                        comp[w] = n_comps;
                        if (w == v) break;
                    }
                    ++n_comps;
                }
            }
        }
    }
    return {comp, n_comps};
}

}  // namespace detail

/// Bottom strongly connected components (no edges leaving the component).
template <class S>
std::vector<std::vector<int>> bottom_sccs(const MarkovChain<S>& mc) {
    auto [comp, n_comps] = detail::scc_of(mc);
    std::vector<char> bottom(n_comps, 1);
    for (int v = 0; v < mc.size(); ++v)
        for (const auto& [w, p] : mc.rows[v].entries)
            if (comp[w] != comp[v]) bottom[comp[v]] = 0;
    std::vector<std::vector<int>> out(n_comps);
    for (int v = 0; v < mc.size(); ++v) out[comp[v]].push_back(v);
    std::erase_if(out, [&](const std::vector<int>& c) { return !bottom[comp[c.front()]]; });
    std::sort(out.begin(), out.end());
    return out;
}

namespace detail {

struct SbaSearchNode {
    int state;
    std::vector<int> labels;  // sorted distinct prefix labels
    bool operator<(const SbaSearchNode& o) const {
        return std::tie(state, labels) < std::tie(o.state, o.labels);
    }
};

}  // namespace detail

/// Decides the significant-approximant problem via the reflected-path
/// characterization: breadth-first search over (state, prefix-label-set)
/// with subset-dominance memoization, then a frontier search inside each
/// BSCC for the reflected suffix. Exponential in the label count; intended
/// for desk scale, guarded by `budget` explored nodes.
template <class S>
std::pair<bool, std::optional<ReflectedPathWitness>> sba_decide(const MarkovChain<S>& mc, int k,
                                                                int budget = 1000000) {
    validate(mc);
    auto bsccs = bottom_sccs(mc);
    int explored = 0;
    auto spend = [&](int units) {
        explored += units;
        if (explored > budget) throw StateBudgetExceeded("sba search budget exceeded");
    };

    // Phase 1: reachable (state, label set) nodes, smallest sets first.
    // parent chain reconstructs the prefix path. Sets capped at
    // k - (smallest BSCC size); dominated (superset) nodes are pruned.
    int min_bscc = mc.size();
    for (const auto& b : bsccs) min_bscc = std::min(min_bscc, static_cast<int>(b.size()));
    int label_cap = k - min_bscc;

    struct PrefixNode {
        int state;
        std::vector<int> labels;
        int parent;  // index into nodes
    };
    std::vector<PrefixNode> nodes;
    std::map<std::pair<int, std::vector<int>>, int> seen;
    std::deque<int> queue;
    auto push = [&](int state, std::vector<int> labels, int parent) {
        spend(1);
        auto key = std::make_pair(state, labels);
        if (seen.count(key)) return;
        // dominance: skip if a strictly smaller set is already known here
        for (const auto& [k2, idx] : seen) {
            if (k2.first != state) continue;
            if (std::includes(labels.begin(), labels.end(), k2.second.begin(), k2.second.end()))
                return;
        }
        seen.emplace(std::move(key), static_cast<int>(nodes.size()));
        nodes.push_back({state, std::move(labels), parent});
        queue.push_back(static_cast<int>(nodes.size()) - 1);
    };
    push(mc.initial, {}, -1);
    while (!queue.empty()) {
        int cur = queue.front();
        queue.pop_front();
        auto [state, labels, parent] = nodes[cur];
        // extend the prefix by consuming `state`
        std::vector<int> extended = labels;
        if (std::find(extended.begin(), extended.end(), mc.labels[state]) == extended.end()) {
            extended.push_back(mc.labels[state]);
            std::sort(extended.begin(), extended.end());
        }
        if (static_cast<int>(extended.size()) > label_cap) continue;
        for (const auto& [next, w] : mc.rows[state].entries) push(next, extended, cur);
    }

    // Phase 2: per BSCC, the set of states from which a reflected suffix
    // exists. Product search over (chain state, frontier of BSCC states).
    ReflectedPathWitness best;
    bool found = false;
    int best_cost = k + 1;
    for (const auto& bscc : bsccs) {
        int bsize = static_cast<int>(bscc.size());
        if (bsize > k) continue;
        std::vector<char> in_bscc(mc.size(), 0);
        for (int v : bscc) in_bscc[v] = 1;

        // reflection search. node: (state, frontier bitmask over bscc)
        // accepting when the state itself sits in the frontier.
        auto frontier_of = [&](int state) {
            std::vector<char> f(bsize, 0);
            for (int i = 0; i < bsize; ++i)
                if (mc.labels[bscc[i]] == mc.labels[state]) f[i] = 1;
            return f;
        };
        struct ReflNode {
            int state;
            std::vector<char> frontier;
            int parent;
        };
        // For every prefix node state, try to start a reflection there.
        // Memoize (state, frontier) globally for this BSCC.
        std::map<std::pair<int, std::vector<char>>, int> rseen;
        std::vector<ReflNode> rnodes;
        std::deque<int> rqueue;
        auto rpush = [&](int state, std::vector<char> frontier, int parent) -> int {
            spend(1);
            bool nonempty = false;
            for (char c : frontier) nonempty |= (c != 0);
            if (!nonempty) return -1;
            auto key = std::make_pair(state, frontier);
            auto it = rseen.find(key);
            if (it != rseen.end()) return it->second;
            int id = static_cast<int>(rnodes.size());
            rseen.emplace(std::move(key), id);
            rnodes.push_back({state, std::move(frontier), parent});
            rqueue.push_back(id);
            return id;
        };

        // candidate starts: states of prefix nodes within budget
        std::vector<std::pair<int, int>> starts;  // (refl node id, prefix node id)
        for (int pn = 0; pn < static_cast<int>(nodes.size()); ++pn) {
            if (static_cast<int>(nodes[pn].labels.size()) + bsize > k) continue;
            int id = rpush(nodes[pn].state, frontier_of(nodes[pn].state), -1);
            if (id >= 0) starts.emplace_back(id, pn);
        }
        // forward closure
        while (!rqueue.empty()) {
            int cur = rqueue.front();
            rqueue.pop_front();
            int state = rnodes[cur].state;
            for (const auto& [next, w] : mc.rows[state].entries) {
                std::vector<char> nf(bsize, 0);
                bool any = false;
                for (int i = 0; i < bsize; ++i) {
                    if (!rnodes[cur].frontier[i]) continue;
                    for (const auto& [bn, bw] : mc.rows[bscc[i]].entries) {
                        // successors inside the BSCC matching next's label
                        for (int j = 0; j < bsize; ++j)
                            if (bscc[j] == bn && mc.labels[bn] == mc.labels[next]) {
                                nf[j] = 1;
                                any = true;
                            }
                    }
                }
                if (any) rpush(next, std::move(nf), cur);
            }
        }
        // accepting reflection nodes: state in frontier
        auto accepting = [&](int id) {
            int state = rnodes[id].state;
            if (!in_bscc[state]) return false;
            for (int i = 0; i < bsize; ++i)
                if (bscc[i] == state && rnodes[id].frontier[i]) return true;
            return false;
        };
        // reachability of accepting nodes from each node (backward pass)
        std::vector<std::vector<int>> radj(rnodes.size());
        for (size_t id = 0; id < rnodes.size(); ++id)
            if (rnodes[id].parent >= 0) radj[rnodes[id].parent].push_back(static_cast<int>(id));
        // note: parent links hold only one predecessor; rebuild full edges
        // by re-walking transitions (cheap at desk scale)
        for (size_t id = 0; id < rnodes.size(); ++id) {
            int state = rnodes[id].state;
            for (const auto& [next, w] : mc.rows[state].entries) {
                std::vector<char> nf(bsize, 0);
                bool any = false;
                for (int i = 0; i < bsize; ++i) {
                    if (!rnodes[id].frontier[i]) continue;
                    for (const auto& [bn, bw] : mc.rows[bscc[i]].entries)
                        for (int j = 0; j < bsize; ++j)
                            if (bscc[j] == bn && mc.labels[bn] == mc.labels[next]) {
                                nf[j] = 1;
                                any = true;
                            }
                }
                if (!any) continue;
                auto it = rseen.find(std::make_pair(next, nf));
                if (it != rseen.end()) radj[id].push_back(it->second);
            }
        }
        // steps-to-accepting per reflection node (-1: cannot accept)
        std::vector<int> dist(rnodes.size(), -1);
        {
            std::vector<std::vector<int>> rev(rnodes.size());
            for (size_t id = 0; id < rnodes.size(); ++id)
                for (int next : radj[id]) rev[next].push_back(static_cast<int>(id));
            std::deque<int> q2;
            for (size_t id = 0; id < rnodes.size(); ++id)
                if (accepting(static_cast<int>(id))) {
                    dist[id] = 0;
                    q2.push_back(static_cast<int>(id));
                }
            while (!q2.empty()) {
                int cur = q2.front();
                q2.pop_front();
                for (int prev : rev[cur])
                    if (dist[prev] < 0) {
                        dist[prev] = dist[cur] + 1;
                        q2.push_back(prev);
                    }
            }
        }
        for (const auto& [rid, pid] : starts) {
            if (dist[rid] < 0) continue;
            int cost = static_cast<int>(nodes[pid].labels.size()) + bsize;
            if (cost > k || cost >= best_cost) continue;
            // reconstruct prefix path
            std::vector<int> prefix;
            for (int cur = pid; cur >= 0; cur = nodes[cur].parent) prefix.push_back(nodes[cur].state);
            std::reverse(prefix.begin(), prefix.end());
            // reconstruct suffix: strictly descend in steps-to-accepting
            std::vector<int> suffix{rnodes[rid].state};
            std::vector<int> refl_ids{rid};
            int cur = rid;
            while (dist[cur] > 0) {
                int chosen = -1;
                for (int next : radj[cur])
                    if (dist[next] >= 0 && dist[next] < dist[cur]) {
                        chosen = next;
                        break;
                    }
                if (chosen < 0) break;  // cannot happen: dist is a BFS layering
                cur = chosen;
                suffix.push_back(rnodes[cur].state);
                refl_ids.push_back(cur);
            }
            if (dist[cur] != 0) continue;
            // walk the frontier back to extract the reflected path
            std::vector<int> reflected(refl_ids.size(), -1);
            {
                int state = rnodes[cur].state;
                int pos = -1;
                for (int i = 0; i < bsize; ++i)
                    if (bscc[i] == state && rnodes[cur].frontier[i]) pos = i;
                reflected.back() = bscc[pos];
                for (int t = static_cast<int>(refl_ids.size()) - 2; t >= 0; --t) {
                    const auto& fr = rnodes[refl_ids[t]].frontier;
                    int want = reflected[t + 1];
                    int chosen = -1;
                    for (int i = 0; i < bsize && chosen < 0; ++i) {
                        if (!fr[i]) continue;
                        for (const auto& [bn, bw] : mc.rows[bscc[i]].entries)
                            if (bn == want) {
                                chosen = bscc[i];
                                break;
                            }
                    }
                    reflected[t] = chosen;
                }
            }
            best.path = prefix;
            best.path.insert(best.path.end(), suffix.begin() + 1, suffix.end());
            best.split = static_cast<int>(prefix.size()) - 1;
            best.bscc = bscc;
            best.reflected = reflected;
            best_cost = cost;
            found = true;
        }
    }
    if (!found) return {false, std::nullopt};
    return {true, best};
}

/// Validates a witness and builds the approximant of the reflected-path
/// construction: one fresh state per distinct prefix label with uniform
/// rows, plus a verbatim copy of the BSCC.
template <class S>
MarkovChain<S> sba_build(const MarkovChain<S>& mc, const ReflectedPathWitness& w) {
    // validation
    if (w.path.empty() || w.path.front() != mc.initial)
        throw InvalidWitness("path must start at the initial state");
    if (w.split < 0 || w.split >= static_cast<int>(w.path.size()))
        throw InvalidWitness("split index out of range");
    for (size_t t = 0; t + 1 < w.path.size(); ++t)
        if (num<S>::is_zero(mc.rows[w.path[t]].at(w.path[t + 1])))
            throw InvalidWitness("path uses a zero-probability transition");
    std::vector<char> in_bscc(mc.size(), 0);
    for (int v : w.bscc) {
        if (v < 0 || v >= mc.size()) throw InvalidWitness("BSCC state out of range");
        in_bscc[v] = 1;
    }
    for (int v : w.bscc)
        for (const auto& [to, p] : mc.rows[v].entries)
            if (!in_bscc[to]) throw InvalidWitness("BSCC set is not closed");
    if (w.reflected.size() != w.path.size() - w.split)
        throw InvalidWitness("reflected path length mismatch");
    for (size_t t = 0; t < w.reflected.size(); ++t) {
        int v = w.reflected[t];
        if (v < 0 || !in_bscc[v]) throw InvalidWitness("reflected path leaves the BSCC");
        if (mc.labels[v] != mc.labels[w.path[w.split + t]])
            throw InvalidWitness("reflected path labels differ");
        if (t + 1 < w.reflected.size() && num<S>::is_zero(mc.rows[v].at(w.reflected[t + 1])))
            throw InvalidWitness("reflected path uses a zero-probability transition");
    }
    if (w.reflected.back() != w.path.back())
        throw InvalidWitness("reflected path must end at the path end");

    // distinct prefix labels in first-occurrence order
    std::vector<int> prefix_labels;
    for (int t = 0; t < w.split; ++t) {
        int l = mc.labels[w.path[t]];
        if (std::find(prefix_labels.begin(), prefix_labels.end(), l) == prefix_labels.end())
            prefix_labels.push_back(l);
    }
    const int q = static_cast<int>(prefix_labels.size());
    const int total = q + static_cast<int>(w.bscc.size());
    MarkovChain<S> out;
    out.name = mc.name + "_sba";
    out.labels.resize(total);
    out.rows.resize(total);
    std::vector<int> bscc_index(mc.size(), -1);
    for (size_t i = 0; i < w.bscc.size(); ++i) bscc_index[w.bscc[i]] = q + static_cast<int>(i);
    for (int i = 0; i < q; ++i) {
        out.labels[i] = prefix_labels[i];
        std::vector<std::pair<int, S>> row;
        for (int t = 0; t < total; ++t)
            row.emplace_back(t, num<S>::from_rational(rat(1, total)));
        out.rows[i] = Distribution<S>(std::move(row));
    }
    for (size_t i = 0; i < w.bscc.size(); ++i) {
        int src = w.bscc[i];
        out.labels[q + i] = mc.labels[src];
        std::vector<std::pair<int, S>> row;
        for (const auto& [to, p] : mc.rows[src].entries) row.emplace_back(bscc_index[to], p);
        out.rows[q + i] = Distribution<S>(std::move(row));
    }
    out.initial = w.split > 0 ? 0 : bscc_index[w.reflected.front()];
    return out;
}

/// Minimum size of a significant approximant. Trivially 1 when the
/// distance is discounted; at lambda = 1 the smallest k accepted by the
/// reflected-path decision procedure.
template <class S>
int msab(const MarkovChain<S>& mc, const Rational& lambda, int budget = 1000000) {
    if (!(lambda > 0 && lambda <= 1)) throw BadDiscount("discount must lie in (0,1]");
    if (lambda < 1) return 1;
    for (int k = 1; k <= mc.size(); ++k)
        if (sba_decide(mc, k, budget).first) return k;
    return mc.size();
}

}  // namespace mcmin
