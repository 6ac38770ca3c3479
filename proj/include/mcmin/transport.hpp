#pragma once

#include <algorithm>
#include <optional>
#include <tuple>
#include <vector>

#include "mcmin/chain.hpp"
#include "mcmin/errors.hpp"
#include "mcmin/rational.hpp"

namespace mcmin {

/// Dense ground-cost matrix for the transportation problem.
template <class S>
struct CostMatrix {
    int n_src = 0, n_tgt = 0;
    std::vector<S> e;  // row-major, n_src * n_tgt

    CostMatrix() = default;
    CostMatrix(int src, int tgt) : n_src(src), n_tgt(tgt), e(static_cast<size_t>(src) * tgt, num<S>::zero()) {}
    S& at(int i, int j) { return e[static_cast<size_t>(i) * n_tgt + j]; }
    const S& at(int i, int j) const { return e[static_cast<size_t>(i) * n_tgt + j]; }
};

/// Transportation plan: joint mass with prescribed marginals.
template <class S>
struct Coupling {
    Distribution<S> left, right;
    std::vector<std::tuple<int, int, S>> cells;  // sorted (src, tgt, mass>0)

    S mass(int u, int v) const {
        for (const auto& [a, b, w] : cells)
            if (a == u && b == v) return w;
        return num<S>::zero();
    }
};

/// Checks nonnegativity and both marginal families.
template <class S>
void validate_coupling(const Coupling<S>& c) {
    std::vector<std::pair<int, S>> row_sum, col_sum;
    auto bump = [](std::vector<std::pair<int, S>>& acc, int idx, const S& w) {
        for (auto& [i, s] : acc)
            if (i == idx) {
                s += w;
                return;
            }
        acc.emplace_back(idx, w);
    };
    for (const auto& [u, v, w] : c.cells) {
        if (w < num<S>::zero()) throw MarginalViolation("negative coupling mass");
        bump(row_sum, u, w);
        bump(col_sum, v, w);
    }
    auto check = [](const std::vector<std::pair<int, S>>& got, const Distribution<S>& want,
                    const char* side) {
        for (const auto& [idx, w] : want.entries) {
            S g = num<S>::zero();
            for (const auto& [i, s] : got)
                if (i == idx) g = s;
            if (!num<S>::marginal_ok(g, w))
                throw MarginalViolation(std::string(side) + " marginal mismatch at index " +
                                        std::to_string(idx));
        }
        for (const auto& [idx, s] : got)
            if (!num<S>::is_zero(s) && num<S>::is_zero(want.at(idx)))
                throw MarginalViolation(std::string(side) + " marginal has unexpected mass at " +
                                        std::to_string(idx));
    };
    check(row_sum, c.left, "left");
    check(col_sum, c.right, "right");
}

/// Parallel synchronisation: mass(u,v) = mu(u) * nu(v).
template <class S>
Coupling<S> product_coupling(const Distribution<S>& mu, const Distribution<S>& nu) {
    Coupling<S> c;
    c.left = mu;
    c.right = nu;
    for (const auto& [u, wu] : mu.entries)
        for (const auto& [v, wv] : nu.entries) c.cells.emplace_back(u, v, wu * wv);
    return c;
}

template <class S>
struct TransportResult {
    S value;
    Coupling<S> plan;
};

/// Exact transportation simplex over the supports of mu and nu.
///
/// North-west-corner initialization; entering variable by Bland's rule
/// (lowest (row, col) with negative reduced cost), leaving variable the
/// lexicographically first minimizer, so results are deterministic and
/// cycling is impossible. Float mode declares optimality at reduced
/// costs >= -1e-12.
template <class S>
TransportResult<S> solve_transport(const CostMatrix<S>& cost, const Distribution<S>& mu,
                                   const Distribution<S>& nu) {
    const int a = static_cast<int>(mu.entries.size());
    const int b = static_cast<int>(nu.entries.size());
    if (a == 0 || b == 0) throw DimensionMismatch("empty distribution in transport instance");
    for (const auto& [i, w] : mu.entries)
        if (i < 0 || i >= cost.n_src) throw DimensionMismatch("source index outside cost matrix");
    for (const auto& [j, w] : nu.entries)
        if (j < 0 || j >= cost.n_tgt) throw DimensionMismatch("target index outside cost matrix");

    auto c = [&](int i, int j) -> const S& { return cost.at(mu.entries[i].first, nu.entries[j].first); };

    // mass[i][j]: current plan on support coordinates; basis flags.
    std::vector<std::vector<S>> mass(a, std::vector<S>(b, num<S>::zero()));
    std::vector<std::vector<char>> basic(a, std::vector<char>(b, 0));

    {  // north-west corner rule; keeps a+b-1 basic cells, zeros included
        std::vector<S> row(a), col(b);
        for (int i = 0; i < a; ++i) row[i] = mu.entries[i].second;
        for (int j = 0; j < b; ++j) col[j] = nu.entries[j].second;
        int i = 0, j = 0;
        while (true) {
            S m = std::min(row[i], col[j]);
            mass[i][j] = m;
            basic[i][j] = 1;
            row[i] -= m;
            col[j] -= m;
            if (i == a - 1 && j == b - 1) break;
            if (num<S>::is_zero(row[i]) && i < a - 1)
                ++i;
            else
                ++j;
        }
    }

    const int max_pivots = 10000 * (a + b + 1);
    for (int pivot_count = 0;; ++pivot_count) {
        if (pivot_count > max_pivots)
            throw NonTermination("transportation simplex exceeded pivot bound");

        // Potentials from the basis tree: u[i] + v[j] = c(i,j) on basic cells.
        std::vector<std::optional<S>> u(a), v(b);
        u[0] = num<S>::zero();
        for (bool progress = true; progress;) {
            progress = false;
            for (int i = 0; i < a; ++i)
                for (int j = 0; j < b; ++j) {
                    if (!basic[i][j]) continue;
                    if (u[i] && !v[j]) {
                        v[j] = c(i, j) - *u[i];
                        progress = true;
                    } else if (!u[i] && v[j]) {
                        u[i] = c(i, j) - *v[j];
                        progress = true;
                    }
                }
        }
        for (int i = 0; i < a; ++i)
            if (!u[i]) throw NonTermination("transport basis lost connectivity");
        for (int j = 0; j < b; ++j)
            if (!v[j]) throw NonTermination("transport basis lost connectivity");

        // Entering cell: first (row-major) nonbasic cell with negative reduced cost.
        int ei = -1, ej = -1;
        for (int i = 0; i < a && ei < 0; ++i)
            for (int j = 0; j < b; ++j) {
                if (basic[i][j]) continue;
                S reduced = c(i, j) - *u[i] - *v[j];
                if (!num<S>::optimal_reduced_cost(reduced)) {
                    ei = i;
                    ej = j;
                    break;
                }
            }
        if (ei < 0) break;  // optimal

        // Unique alternating cycle through the entering cell: path from row ei
        // to col ej in the bipartite basis graph.
        // parent encoding: node ids rows [0,a), cols [a, a+b)
        std::vector<int> parent(a + b, -2);
        std::vector<int> queue{ei};
        parent[ei] = -1;
        while (!queue.empty()) {
            int x = queue.back();
            queue.pop_back();
            if (x < a) {
                for (int j = 0; j < b; ++j)
                    if (basic[x][j] && parent[a + j] == -2) {
                        parent[a + j] = x;
                        queue.push_back(a + j);
                    }
            } else {
                int j = x - a;
                for (int i = 0; i < a; ++i)
                    if (basic[i][j] && parent[i] == -2) {
                        parent[i] = x;
                        queue.push_back(i);
                    }
            }
        }
        // Reconstruct cycle cells alternating +/-: entering cell is '+'.
        std::vector<std::pair<int, int>> minus_cells, plus_cells{{ei, ej}};
        int node = a + ej;
        bool minus = true;
        while (parent[node] != -1) {
            int p = parent[node];
            int i = (node < a) ? node : p;
            int j = (node < a) ? p - a : node - a;
            (minus ? minus_cells : plus_cells).emplace_back(i, j);
            minus = !minus;
            node = p;
        }

        // Leaving cell: minimum mass among '-' cells, lexicographic tie-break.
        int li = -1, lj = -1;
        S theta = num<S>::zero();
        bool first = true;
        for (const auto& [i, j] : minus_cells) {
            if (first || mass[i][j] < theta) {
                theta = mass[i][j];
                li = i;
                lj = j;
                first = false;
            } else if (mass[i][j] == theta && std::make_pair(i, j) < std::make_pair(li, lj)) {
                li = i;
                lj = j;
            }
        }
        for (const auto& [i, j] : plus_cells) mass[i][j] += theta;
        for (const auto& [i, j] : minus_cells) mass[i][j] -= theta;
        basic[li][lj] = 0;
        mass[li][lj] = num<S>::zero();
        basic[ei][ej] = 1;
    }

    TransportResult<S> out;
    out.value = num<S>::zero();
    out.plan.left = mu;
    out.plan.right = nu;
    for (int i = 0; i < a; ++i)
        for (int j = 0; j < b; ++j) {
            if (num<S>::is_zero(mass[i][j])) continue;
            out.value += c(i, j) * mass[i][j];
            out.plan.cells.emplace_back(mu.entries[i].first, nu.entries[j].first, mass[i][j]);
        }
    std::sort(out.plan.cells.begin(), out.plan.cells.end(), [](const auto& x, const auto& y) {
        return std::make_pair(std::get<0>(x), std::get<1>(x)) <
               std::make_pair(std::get<0>(y), std::get<1>(y));
    });
    return out;
}

/// Objective value of an arbitrary plan under a cost matrix.
template <class S>
S plan_cost(const CostMatrix<S>& cost, const Coupling<S>& plan) {
    S total = num<S>::zero();
    for (const auto& [u, v, w] : plan.cells) total += cost.at(u, v) * w;
    return total;
}

}  // namespace mcmin
