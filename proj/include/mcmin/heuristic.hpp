#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

#include "mcmin/distance.hpp"

namespace mcmin {

enum class Heuristic { AveragedMarginals, AveragedExpectations };

inline const char* heuristic_name(Heuristic h) {
    return h == Heuristic::AveragedMarginals ? "am" : "ae";
}

/// Expected occurrence counts of state pairs along label-matched prefixes
/// ending in the zero set or the discount sink; dimensionless, may exceed 1.
template <class S>
struct ExpectedVisits {
    PairFunction<S> z;
};

/// Expected traversal counts per coupling edge ((m,n) -> (u,v)); stored
/// sparsely per source pair.
template <class S>
struct EdgeExpectations {
    std::shared_ptr<const PairSpace<S>> space;
    // per pair p: cells ((u,v) pair-index in space, expectation)
    std::vector<std::vector<std::pair<int, S>>> cells;
};

namespace detail {

/// Restriction set for the visit system: label-matched, outside the zero
/// set of gamma, with positive beta. Edges from pairs outside this set can
/// never occur in a completed prefix, so fixing their z to 0 is exact.
template <class S>
std::vector<char> visit_support(const PairFunction<S>& gamma, const PairFunction<S>& beta) {
    const auto& sp = *gamma.space;
    std::vector<char> in(sp.size(), 0);
    for (int p = 0; p < sp.size(); ++p)
        in[p] = sp.matched[p] && !num<S>::is_zero(gamma.value[p]) && !num<S>::is_zero(beta.value[p]);
    return in;
}

}  // namespace detail

/// Solves the forward occurrence-count system
///   z_p = iota(p) + lambda * sum_q (z_q + 1) * C_q(p)
/// over the restricted pair set, with iota = 1 at the initial pair only.
/// All other pairs have z = 0.
template <class S>
ExpectedVisits<S> expected_pair_visits(const CouplingStructure<S>& c, const PairFunction<S>& gamma,
                                       const PairFunction<S>& beta, const Rational& lambda,
                                       int initial_left, int initial_right) {
    const auto& sp = *c.space;
    auto in = detail::visit_support(gamma, beta);
    std::vector<int> unknown;
    std::vector<int> slot(sp.size(), -1);
    for (int p = 0; p < sp.size(); ++p)
        if (in[p]) {
            slot[p] = static_cast<int>(unknown.size());
            unknown.push_back(p);
        }
    ExpectedVisits<S> out;
    out.z.tag = PairTag::Visits;
    out.z.space = c.space;
    out.z.value.assign(sp.size(), num<S>::zero());
    if (unknown.empty()) return out;

    const int n = static_cast<int>(unknown.size());
    S lam = num<S>::from_rational(lambda);
    std::vector<std::vector<S>> a(n, std::vector<S>(n, num<S>::zero()));
    std::vector<S> b(n, num<S>::zero());
    int p0 = sp.find(initial_left, initial_right);
    if (p0 >= 0 && slot[p0] >= 0) b[slot[p0]] += num<S>::one();
    for (int k = 0; k < n; ++k) a[k][k] = num<S>::one();
    // incoming sums: predecessors q in the restricted set feed (z_q + 1).
    for (int q = 0; q < sp.size(); ++q) {
        if (slot[q] < 0) continue;
        for (const auto& [u, v, w] : c.plan[q].cells) {
            int p = sp.find(u, v);
            if (p < 0 || slot[p] < 0) continue;
            a[slot[p]][slot[q]] -= lam * w;
            b[slot[p]] += lam * w;
        }
    }
    std::vector<S> sol;
    try {
        sol = solve_linear(std::move(a), std::move(b));
    } catch (const SingularSystem&) {
        throw DivergentCounts(
            "occurrence-count system is singular: a matched cycle has no escape mass; pairs: " +
            [&] {
                std::string s;
                for (int p : unknown) {
                    s += "(" + std::to_string(sp.pairs[p].first) + "," +
                         std::to_string(sp.pairs[p].second) + ")";
                }
                return s;
            }());
    }
    for (int k = 0; k < n; ++k) out.z.value[unknown[k]] = sol[k];
    return out;
}

/// E[Z^{m,n}_{u,v}] = lambda * z(m,n) * C(m,n)(u,v) * beta(u,v).
template <class S>
EdgeExpectations<S> expected_edge_counts(const ExpectedVisits<S>& visits,
                                         const CouplingStructure<S>& c,
                                         const PairFunction<S>& beta, const Rational& lambda) {
    const auto& sp = *c.space;
    S lam = num<S>::from_rational(lambda);
    EdgeExpectations<S> out;
    out.space = c.space;
    out.cells.resize(sp.size());
    for (int p = 0; p < sp.size(); ++p) {
        const S& z = visits.z.value[p];
        if (num<S>::is_zero(z)) continue;
        for (const auto& [u, v, w] : c.plan[p].cells) {
            int q = sp.find(u, v);
            if (q < 0) continue;
            const S& bq = beta.value[q];
            if (num<S>::is_zero(bq)) continue;
            out.cells[p].emplace_back(q, lam * z * w * bq);
        }
    }
    return out;
}

namespace detail {

/// Right states that stand in the zero set with some left state keep their
/// previous row (they are already matched exactly).
template <class S>
std::vector<char> zeroset_right_states(const PairFunction<S>& gamma) {
    const auto& sp = *gamma.space;
    std::vector<char> carve(sp.right.size(), 0);
    for (int p = 0; p < sp.size(); ++p)
        if (sp.matched[p] && num<S>::is_zero(gamma.value[p])) carve[sp.pairs[p].second] = 1;
    return carve;
}

template <class S>
std::vector<Distribution<S>> finish_rows(const std::vector<std::vector<S>>& accum,
                                         const std::vector<char>& carve,
                                         const std::vector<Distribution<S>>& prev) {
    const int k = static_cast<int>(prev.size());
    std::vector<Distribution<S>> rows(k);
    for (int nstate = 0; nstate < k; ++nstate) {
        S total = num<S>::zero();
        for (const S& w : accum[nstate]) total += w;
        if (carve[nstate] || num<S>::is_zero(total)) {
            rows[nstate] = prev[nstate];
            continue;
        }
        std::vector<std::pair<int, S>> cells;
        for (int v = 0; v < k; ++v)
            if (!num<S>::is_zero(accum[nstate][v])) cells.emplace_back(v, accum[nstate][v] / total);
        rows[nstate] = Distribution<S>(std::move(cells));
        // renormalization is a no-op in exact mode; float rows are exact
        // ratios of the accumulated sums, checked by validate downstream
    }
    return rows;
}

}  // namespace detail

/// Averaged-marginals update: relax the right-marginal constraints, take
/// the analytic optimum c = tau(m)(u) * e / sum_x e (0/0 -> 0), then
/// average its right marginals into the new row.
template <class S>
std::vector<Distribution<S>> am_update(const std::vector<Distribution<S>>& theta_prev,
                                       const EdgeExpectations<S>& e, const PairFunction<S>& gamma) {
    const auto& sp = *e.space;
    const int k = static_cast<int>(theta_prev.size());
    auto carve = detail::zeroset_right_states(gamma);
    std::vector<std::vector<S>> accum(k, std::vector<S>(k, num<S>::zero()));
    for (int p = 0; p < sp.size(); ++p) {
        if (e.cells[p].empty()) continue;
        const auto& [m, nstate] = sp.pairs[p];
        // group the pair's edge expectations by leading left successor u
        std::vector<std::pair<int, std::vector<std::pair<int, S>>>> by_u;
        for (const auto& [q, val] : e.cells[p]) {
            const auto& [u, v] = sp.pairs[q];
            if (by_u.empty() || by_u.back().first != u) by_u.push_back({u, {}});
            by_u.back().second.emplace_back(v, val);
        }
        for (const auto& [u, vs] : by_u) {
            S denom = num<S>::zero();
            for (const auto& [v, val] : vs) denom += val;
            if (num<S>::is_zero(denom)) continue;
            S tau_mu = sp.left.rows[m].at(u);
            for (const auto& [v, val] : vs) accum[nstate][v] += tau_mu * val / denom;
        }
    }
    return detail::finish_rows(accum, carve, theta_prev);
}

/// Averaged-expectations update: average the raw edge expectations.
template <class S>
std::vector<Distribution<S>> ae_update(const std::vector<Distribution<S>>& theta_prev,
                                       const EdgeExpectations<S>& e, const PairFunction<S>& gamma) {
    const auto& sp = *e.space;
    const int k = static_cast<int>(theta_prev.size());
    auto carve = detail::zeroset_right_states(gamma);
    std::vector<std::vector<S>> accum(k, std::vector<S>(k, num<S>::zero()));
    for (int p = 0; p < sp.size(); ++p) {
        const auto& [m, nstate] = sp.pairs[p];
        for (const auto& [q, val] : e.cells[p]) accum[nstate][sp.pairs[q].second] += val;
    }
    return detail::finish_rows(accum, carve, theta_prev);
}

/// Per-iteration record of the minimization loop.
template <class S>
struct RunTrace {
    struct Iter {
        int index;
        MarkovChain<S> approximant;
        S distance;
        double seconds;  // wall time spent producing this iterate
    };
    std::vector<Iter> iters;
};

template <class S>
struct MinimizeResult {
    MarkovChain<S> best;
    S distance;
    RunTrace<S> trace;
};

/// Convenience wrapper used to vet initial approximants.
template <class S>
S check_initial(const MarkovChain<S>& m, const MarkovChain<S>& n0, const Rational& lambda,
                const EngineOpts& opts = {}) {
    return distance_between(m, n0, lambda, opts);
}

/// EM-like approximate minimization: repeatedly compute an optimal coupling
/// structure, update the approximant's rows with the chosen heuristic, and
/// stop as soon as the distance fails to strictly improve (the plateau of
/// two equal iterations terminates the loop). Returns the last strictly
/// improving iterate and the full trace.
template <class S>
MinimizeResult<S> approximate_minimize(const MarkovChain<S>& m, const MarkovChain<S>& n0,
                                       int max_iters, Heuristic heur, const Rational& lambda,
                                       const EngineOpts& opts = {}) {
    validate(m);
    validate(n0);
    auto t0 = std::chrono::steady_clock::now();
    auto seconds_since = [](std::chrono::steady_clock::time_point a) {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - a).count();
    };

    MarkovChain<S> current = n0;
    auto space = PairSpace<S>::reachable(m, current, m.initial, current.initial);
    auto res = bisim_distance(space, lambda, opts);
    S dist = res.delta.at(m.initial, current.initial);

    RunTrace<S> trace;
    trace.iters.push_back({0, current, dist, seconds_since(t0)});
    if (num<S>::eq(dist, num<S>::one()))
        throw UselessInitialApproximant("initial approximant is at distance 1");

    MinimizeResult<S> out;
    out.best = current;
    out.distance = dist;
    for (int i = 1; i <= max_iters; ++i) {
        auto ti = std::chrono::steady_clock::now();
        if (opts.deadline && std::chrono::steady_clock::now() > *opts.deadline)
            throw ResourceTimeout("minimization deadline exceeded");
        PairFunction<S> beta = dual_discrepancy(res.witness, res.delta, lambda);
        auto visits = expected_pair_visits(res.witness, res.delta, beta, lambda, m.initial,
                                           current.initial);
        auto edges = expected_edge_counts(visits, res.witness, beta, lambda);
        std::vector<Distribution<S>> rows =
            heur == Heuristic::AveragedMarginals ? am_update(current.rows, edges, res.delta)
                                                 : ae_update(current.rows, edges, res.delta);
        MarkovChain<S> next;
        next.name = n0.name;
        next.labels = current.labels;
        next.initial = current.initial;
        next.rows = std::move(rows);
        validate(next);

        space = PairSpace<S>::reachable(m, next, m.initial, next.initial);
        res = bisim_distance(space, lambda, opts);
        S next_dist = res.delta.at(m.initial, next.initial);
        trace.iters.push_back({i, next, next_dist, seconds_since(ti)});

        if (!num<S>::improves(next_dist, dist)) break;  // plateau or regression: keep previous
        current = std::move(next);
        dist = next_dist;
        out.best = current;
        out.distance = dist;
    }
    return out;
}

}  // namespace mcmin
