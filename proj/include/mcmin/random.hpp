#pragma once

#include <random>
#include <string>
#include <vector>

#include "mcmin/chain.hpp"
#include "mcmin/transport.hpp"

namespace mcmin {

using Rng = std::mt19937_64;

/// Random rational in the open interval (0,1) with the given denominator.
inline Rational random_unit_rational(Rng& rng, int denominator = 1000) {
    std::uniform_int_distribution<int> d(1, denominator - 1);
    return rat(d(rng), denominator);
}

struct RandomChainCfg {
    int min_states = 2;
    int max_states = 5;
    int n_labels = 2;      // labels drawn from l0..l{n_labels-1}
    int max_out = 3;       // support size per row
    int weight_scale = 8;  // geometric-ish integer weights in [1, weight_scale]
};

/// Seeded random chain with exact rational rows: per-row supports of
/// bounded size, positive integer weights normalized by their sum.
inline MarkovChain<Rational> random_chain(Rng& rng, const RandomChainCfg& cfg = {}) {
    std::uniform_int_distribution<int> nd(cfg.min_states, cfg.max_states);
    int n = nd(rng);
    std::uniform_int_distribution<int> ld(0, cfg.n_labels - 1);
    std::uniform_int_distribution<int> sd(0, n - 1);
    std::geometric_distribution<int> gd(0.35);
    MarkovChain<Rational> mc;
    mc.name = "random";
    mc.labels.resize(n);
    for (int i = 0; i < n; ++i) mc.labels[i] = intern_label("l" + std::to_string(ld(rng)));
    mc.rows.resize(n);
    std::uniform_int_distribution<int> od(1, cfg.max_out);
    for (int i = 0; i < n; ++i) {
        int out = od(rng);
        std::vector<int> targets;
        for (int t = 0; t < out; ++t) {
            int s = sd(rng);
            if (std::find(targets.begin(), targets.end(), s) == targets.end()) targets.push_back(s);
        }
        std::vector<long> weights(targets.size());
        long total = 0;
        for (auto& w : weights) {
            w = 1 + std::min(gd(rng), cfg.weight_scale - 1);
            total += w;
        }
        std::vector<std::pair<int, Rational>> row;
        for (size_t t = 0; t < targets.size(); ++t) row.emplace_back(targets[t], rat(weights[t], total));
        mc.rows[i] = Distribution<Rational>(std::move(row));
    }
    mc.initial = sd(rng);
    return mc;
}

/// Random vertex of the transportation polytope: north-west corner rule on
/// independently shuffled supports.
inline Coupling<Rational> random_coupling(Rng& rng, const Distribution<Rational>& mu,
                                          const Distribution<Rational>& nu) {
    std::vector<int> ri(mu.entries.size()), ci(nu.entries.size());
    for (size_t i = 0; i < ri.size(); ++i) ri[i] = static_cast<int>(i);
    for (size_t j = 0; j < ci.size(); ++j) ci[j] = static_cast<int>(j);
    std::shuffle(ri.begin(), ri.end(), rng);
    std::shuffle(ci.begin(), ci.end(), rng);
    Coupling<Rational> c;
    c.left = mu;
    c.right = nu;
    std::vector<Rational> row(ri.size()), col(ci.size());
    for (size_t i = 0; i < ri.size(); ++i) row[i] = mu.entries[ri[i]].second;
    for (size_t j = 0; j < ci.size(); ++j) col[j] = nu.entries[ci[j]].second;
    size_t i = 0, j = 0;
    while (i < ri.size() && j < ci.size()) {
        Rational m = std::min(row[i], col[j]);
        if (sgn(m) > 0)
            c.cells.emplace_back(mu.entries[ri[i]].first, nu.entries[ci[j]].first, m);
        row[i] -= m;
        col[j] -= m;
        if (sgn(row[i]) == 0)
            ++i;
        else
            ++j;
    }
    std::sort(c.cells.begin(), c.cells.end(), [](const auto& x, const auto& y) {
        return std::make_pair(std::get<0>(x), std::get<1>(x)) <
               std::make_pair(std::get<0>(y), std::get<1>(y));
    });
    return c;
}

}  // namespace mcmin
