#pragma once

#include <chrono>
#include <deque>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "mcmin/chain.hpp"
#include "mcmin/linsolve.hpp"
#include "mcmin/parallel.hpp"
#include "mcmin/transport.hpp"

namespace mcmin {

/// Which function a PairFunction instance represents.
enum class PairTag { Delta, Gamma, Beta, Visits };

/// Materialized set of (left-state, right-state) pairs of a product of two
/// chains. On-the-fly construction keeps only pairs reachable from a query
/// pair through product supports (label-mismatched pairs are absorbing and
/// not expanded); full construction keeps the whole rectangle. The space
/// owns copies of both chains, so results stay valid on their own.
template <class S>
struct PairSpace {
    MarkovChain<S> left;
    MarkovChain<S> right;
    std::vector<std::pair<int, int>> pairs;  // sorted lexicographically
    std::vector<char> matched;               // label equality per pair
    std::vector<int> dense;                  // (i * |right| + j) -> pair index or -1

    int size() const { return static_cast<int>(pairs.size()); }

    int find(int i, int j) const {
        return dense[static_cast<size_t>(i) * right.size() + j];
    }

    static std::shared_ptr<const PairSpace> full(const MarkovChain<S>& a, const MarkovChain<S>& b) {
        auto sp = std::make_shared<PairSpace>();
        sp->left = a;
        sp->right = b;
        sp->dense.assign(static_cast<size_t>(a.size()) * b.size(), -1);
        for (int i = 0; i < a.size(); ++i)
            for (int j = 0; j < b.size(); ++j) {
                sp->dense[static_cast<size_t>(i) * b.size() + j] = static_cast<int>(sp->pairs.size());
                sp->pairs.emplace_back(i, j);
                sp->matched.push_back(a.labels[i] == b.labels[j]);
            }
        return sp;
    }

    static std::shared_ptr<const PairSpace> reachable(const MarkovChain<S>& a,
                                                      const MarkovChain<S>& b, int i0, int j0) {
        auto sp = std::make_shared<PairSpace>();
        sp->left = a;
        sp->right = b;
        sp->dense.assign(static_cast<size_t>(a.size()) * b.size(), -1);
        std::deque<std::pair<int, int>> frontier{{i0, j0}};
        std::vector<char> seen(static_cast<size_t>(a.size()) * b.size(), 0);
        seen[static_cast<size_t>(i0) * b.size() + j0] = 1;
        std::vector<std::pair<int, int>> found;
        while (!frontier.empty()) {
            auto [i, j] = frontier.front();
            frontier.pop_front();
            found.emplace_back(i, j);
            if (a.labels[i] != b.labels[j]) continue;  // absorbing, don't expand
            for (const auto& [u, wu] : a.rows[i].entries)
                for (const auto& [v, wv] : b.rows[j].entries) {
                    size_t key = static_cast<size_t>(u) * b.size() + v;
                    if (!seen[key]) {
                        seen[key] = 1;
                        frontier.emplace_back(u, v);
                    }
                }
        }
        std::sort(found.begin(), found.end());
        for (const auto& [i, j] : found) {
            sp->dense[static_cast<size_t>(i) * b.size() + j] = static_cast<int>(sp->pairs.size());
            sp->pairs.emplace_back(i, j);
            sp->matched.push_back(a.labels[i] == b.labels[j]);
        }
        return sp;
    }
};

/// A value per materialized pair, tagged with the symbol it stands for.
template <class S>
struct PairFunction {
    PairTag tag = PairTag::Gamma;
    std::shared_ptr<const PairSpace<S>> space;
    std::vector<S> value;

    S at(int i, int j) const {
        int p = space->find(i, j);
        if (p < 0) throw McError("pair not materialized");
        return value[p];
    }
};

/// One coupling per materialized pair (Def.: C(m,n) couples the rows of m
/// and n). Mismatched pairs carry their product coupling.
template <class S>
struct CouplingStructure {
    std::shared_ptr<const PairSpace<S>> space;
    std::vector<Coupling<S>> plan;  // indexed like space->pairs

    const Coupling<S>& at(int i, int j) const {
        int p = space->find(i, j);
        if (p < 0) throw McError("pair not materialized");
        return plan[p];
    }
};

/// Product couplings everywhere; the deterministic starting policy.
template <class S>
CouplingStructure<S> product_structure(std::shared_ptr<const PairSpace<S>> space) {
    CouplingStructure<S> c;
    c.space = space;
    c.plan.reserve(space->size());
    for (const auto& [i, j] : space->pairs)
        c.plan.push_back(product_coupling(space->left.rows[i], space->right.rows[j]));
    return c;
}

template <class S>
void validate_structure(const CouplingStructure<S>& c) {
    const auto& sp = *c.space;
    for (int p = 0; p < sp.size(); ++p) {
        const auto& [i, j] = sp.pairs[p];
        if (!(c.plan[p].left == sp.left.rows[i]) || !(c.plan[p].right == sp.right.rows[j]))
            throw MarginalViolation("coupling structure marginals differ from transition rows");
        validate_coupling(c.plan[p]);
    }
}

namespace detail {

/// Pairs from which some label-mismatched pair is reachable in the support
/// graph of C (backward BFS from the mismatched set).
template <class S>
std::vector<char> can_reach_mismatch(const CouplingStructure<S>& c) {
    const auto& sp = *c.space;
    std::vector<std::vector<int>> preds(sp.size());
    for (int p = 0; p < sp.size(); ++p) {
        if (!sp.matched[p]) continue;  // transitions out of mismatches never matter
        for (const auto& [u, v, w] : c.plan[p].cells) {
            int q = sp.find(u, v);
            if (q >= 0) preds[q].push_back(p);
        }
    }
    std::vector<char> hit(sp.size(), 0);
    std::deque<int> queue;
    for (int p = 0; p < sp.size(); ++p)
        if (!sp.matched[p]) {
            hit[p] = 1;
            queue.push_back(p);
        }
    while (!queue.empty()) {
        int q = queue.front();
        queue.pop_front();
        for (int p : preds[q])
            if (!hit[p]) {
                hit[p] = 1;
                queue.push_back(p);
            }
    }
    return hit;
}

/// Solves f(p) = base(p) + lambda * sum_q C_p(q) f(q) over `unknown` pairs,
/// where pairs outside carry fixed values given by `fixed`.
template <class S, class FixedFn>
std::vector<S> solve_fixed_point(const CouplingStructure<S>& c, const Rational& lambda,
                                 const std::vector<int>& unknown, const S& inject,
                                 FixedFn fixed) {
    const auto& sp = *c.space;
    const int n = static_cast<int>(unknown.size());
    std::vector<int> slot(sp.size(), -1);
    for (int k = 0; k < n; ++k) slot[unknown[k]] = k;
    S lam = num<S>::from_rational(lambda);
    std::vector<std::vector<S>> a(n, std::vector<S>(n, num<S>::zero()));
    std::vector<S> b(n, inject);
    for (int k = 0; k < n; ++k) {
        int p = unknown[k];
        a[k][k] += num<S>::one();
        for (const auto& [u, v, w] : c.plan[p].cells) {
            int q = sp.find(u, v);
            if (q < 0) throw McError("coupling leaves the materialized pair set");
            int s = slot[q];
            if (s >= 0)
                a[k][s] -= lam * w;
            else
                b[k] += lam * w * fixed(q);
        }
    }
    return solve_linear(std::move(a), std::move(b));
}

}  // namespace detail

/// Least fixed point of the discrepancy operator for C: label-mismatched
/// pairs get 1; pairs from which no mismatch is reachable in the support
/// graph get 0 (this realizes leastness at lambda = 1); the rest solve the
/// linear system gamma = lambda * C gamma + absorption terms.
template <class S>
PairFunction<S> discrepancy(const CouplingStructure<S>& c, const Rational& lambda) {
    const auto& sp = *c.space;
    if (!(lambda > 0 && lambda <= 1)) throw BadDiscount("discount must lie in (0,1]");
    auto hit = detail::can_reach_mismatch(c);
    PairFunction<S> gamma;
    gamma.tag = PairTag::Gamma;
    gamma.space = c.space;
    gamma.value.assign(sp.size(), num<S>::zero());
    std::vector<int> unknown;
    for (int p = 0; p < sp.size(); ++p) {
        if (!sp.matched[p])
            gamma.value[p] = num<S>::one();
        else if (hit[p])
            unknown.push_back(p);
    }
    if (!unknown.empty()) {
        auto sol = detail::solve_fixed_point(c, lambda, unknown, num<S>::zero(),
                                             [&](int q) { return gamma.value[q]; });
        for (size_t k = 0; k < unknown.size(); ++k) gamma.value[unknown[k]] = sol[k];
    }
    return gamma;
}

/// Least fixed point of the dual operator: 1 on the zero set of gamma,
/// 0 on label mismatch, else (1 - lambda) + lambda * C beta. The linear
/// system is uniquely solvable because every remaining pair reaches a
/// mismatch inside the support graph.
template <class S>
PairFunction<S> dual_discrepancy(const CouplingStructure<S>& c, const PairFunction<S>& gamma,
                                 const Rational& lambda) {
    const auto& sp = *c.space;
    PairFunction<S> beta;
    beta.tag = PairTag::Beta;
    beta.space = c.space;
    beta.value.assign(sp.size(), num<S>::zero());
    std::vector<int> unknown;
    for (int p = 0; p < sp.size(); ++p) {
        if (!sp.matched[p])
            beta.value[p] = num<S>::zero();
        else if (num<S>::is_zero(gamma.value[p]))
            beta.value[p] = num<S>::one();
        else
            unknown.push_back(p);
    }
    if (!unknown.empty()) {
        S inject = num<S>::from_rational(Rational(1) - lambda);
        auto sol = detail::solve_fixed_point(c, lambda, unknown, inject,
                                             [&](int q) { return beta.value[q]; });
        for (size_t k = 0; k < unknown.size(); ++k) beta.value[unknown[k]] = sol[k];
    }
    return beta;
}

/// Zero set of a discrepancy: the greatest bisimulation induced by C.
template <class S>
std::vector<std::pair<int, int>> bisimulation_from_coupling(const PairFunction<S>& gamma) {
    std::vector<std::pair<int, int>> rel;
    for (int p = 0; p < gamma.space->size(); ++p)
        if (gamma.space->matched[p] && num<S>::is_zero(gamma.value[p]))
            rel.push_back(gamma.space->pairs[p]);
    return rel;
}

struct EngineOpts {
    int max_rounds = 1000000;  // diagnostic non-termination guard
    std::optional<std::chrono::steady_clock::time_point> deadline;
    bool parallel = true;
};

template <class S>
struct DistanceResult {
    std::shared_ptr<const PairSpace<S>> space;
    PairFunction<S> delta;       // gamma of the witness structure
    CouplingStructure<S> witness;
    int rounds = 0;
};

/// Policy iteration over coupling structures (minimal coupling criterion):
/// start from product couplings; repeatedly recompute the discrepancy and
/// replace the plan of every label-matched pair whose transportation value
/// strictly improves. Deterministic: ties are broken by the simplex rules,
/// never by scheduling.
template <class S>
DistanceResult<S> bisim_distance(std::shared_ptr<const PairSpace<S>> space, const Rational& lambda,
                                 const EngineOpts& opts = {}) {
    const auto& sp = *space;
    CouplingStructure<S> c = product_structure(space);
    CostMatrix<S> cost(sp.left.size(), sp.right.size());
    int rounds = 0;
    for (;;) {
        ++rounds;
        if (rounds > opts.max_rounds) throw NonTermination("policy iteration exceeded round bound");
        if (opts.deadline && std::chrono::steady_clock::now() > *opts.deadline)
            throw ResourceTimeout("policy iteration deadline exceeded");
        PairFunction<S> gamma = discrepancy(c, lambda);
        for (int p = 0; p < sp.size(); ++p) {
            const auto& [i, j] = sp.pairs[p];
            cost.at(i, j) = gamma.value[p];
        }
        std::vector<char> improved(sp.size(), 0);
        std::vector<Coupling<S>> candidate(sp.size());
        parallel_for(sp.size(), opts.parallel, [&](int p) {
            if (!sp.matched[p]) return;
            const auto& [i, j] = sp.pairs[p];
            auto r = solve_transport(cost, sp.left.rows[i], sp.right.rows[j]);
            S current = plan_cost(cost, c.plan[p]);
            if (num<S>::improves(r.value, current)) {
                improved[p] = 1;
                candidate[p] = std::move(r.plan);
            }
        });
        bool any = false;
        for (int p = 0; p < sp.size(); ++p)
            if (improved[p]) {
                c.plan[p] = std::move(candidate[p]);
                any = true;
            }
        if (!any) {
            DistanceResult<S> out;
            out.space = space;
            gamma.tag = PairTag::Delta;
            out.delta = std::move(gamma);
            out.witness = std::move(c);
            out.rounds = rounds;
            return out;
        }
    }
}

/// Direct Kantorovich iteration of the distance functional from the zero
/// function; independent oracle for the policy-iteration engine. For
/// lambda < 1 the error after `iters` steps is at most lambda^iters.
template <class S>
PairFunction<S> value_iteration(std::shared_ptr<const PairSpace<S>> space, const Rational& lambda,
                                int iters, bool parallel = true) {
    const auto& sp = *space;
    S lam = num<S>::from_rational(lambda);
    PairFunction<S> d;
    d.tag = PairTag::Delta;
    d.space = space;
    d.value.assign(sp.size(), num<S>::zero());
    CostMatrix<S> cost(sp.left.size(), sp.right.size());
    for (int t = 0; t < iters; ++t) {
        for (int p = 0; p < sp.size(); ++p) {
            const auto& [i, j] = sp.pairs[p];
            cost.at(i, j) = d.value[p];
        }
        std::vector<S> next(sp.size(), num<S>::zero());
        parallel_for(sp.size(), parallel, [&](int p) {
            const auto& [i, j] = sp.pairs[p];
            if (!sp.matched[p]) {
                next[p] = num<S>::one();
                return;
            }
            auto r = solve_transport(cost, sp.left.rows[i], sp.right.rows[j]);
            next[p] = lam * r.value;
        });
        d.value = std::move(next);
    }
    return d;
}

/// Distance between two chains: the pair function at their initial states,
/// computed on the on-the-fly pair space.
template <class S>
S distance_between(const MarkovChain<S>& a, const MarkovChain<S>& b, const Rational& lambda,
                   const EngineOpts& opts = {}) {
    auto space = PairSpace<S>::reachable(a, b, a.initial, b.initial);
    auto res = bisim_distance(space, lambda, opts);
    return res.delta.at(a.initial, b.initial);
}

}  // namespace mcmin
