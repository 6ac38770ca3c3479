#pragma once

#include <map>
#include <numeric>
#include <utility>
#include <vector>

#include "mcmin/chain.hpp"

namespace mcmin {

/// Partition of the state set into dense consecutively-numbered blocks.
struct Partition {
    std::vector<int> block_of;  // block id per state
    int n_blocks = 0;

    std::vector<std::vector<int>> blocks() const {
        std::vector<std::vector<int>> out(n_blocks);
        for (int i = 0; i < static_cast<int>(block_of.size()); ++i)
            out[block_of[i]].push_back(i);
        return out;
    }
};

/// Coarsest probabilistic bisimulation partition: partition refinement
/// splitting on (label, probability-into-block) signatures. Exact
/// comparisons in rational mode.
template <class S>
Partition bisim_partition(const MarkovChain<S>& mc) {
    int n = mc.size();
    std::vector<int> block(n);
    {
        std::map<int, int> by_label;
        for (int i = 0; i < n; ++i) {
            auto it = by_label.emplace(mc.labels[i], static_cast<int>(by_label.size())).first;
            block[i] = it->second;
        }
    }
    for (;;) {
        // signature: current block + sorted vector of (target block, mass)
        std::map<std::pair<int, std::vector<std::pair<int, S>>>, int> sig_ids;
        std::vector<int> next(n);
        for (int i = 0; i < n; ++i) {
            std::map<int, S> into;
            for (const auto& [j, w] : mc.rows[i].entries) into[block[j]] += w;
            std::vector<std::pair<int, S>> sig(into.begin(), into.end());
            auto key = std::make_pair(block[i], std::move(sig));
            auto it = sig_ids.emplace(std::move(key), static_cast<int>(sig_ids.size())).first;
            next[i] = it->second;
        }
        bool changed = false;
        for (int i = 0; i < n; ++i)
            if (next[i] != block[i]) changed = true;
        block = std::move(next);
        if (!changed) break;
    }
    Partition p;
    p.block_of = std::move(block);
    p.n_blocks = *std::max_element(p.block_of.begin(), p.block_of.end()) + 1;
    return p;
}

/// Quotient by a bisimulation partition; rejects partitions that are not
/// bisimulations (non-uniform labels or differing block signatures).
template <class S>
MarkovChain<S> quotient(const MarkovChain<S>& mc, const Partition& p) {
    int n = mc.size();
    if (static_cast<int>(p.block_of.size()) != n) throw NotABisimulation("partition size mismatch");
    MarkovChain<S> out;
    out.name = mc.name + "/~";
    out.labels.assign(p.n_blocks, -1);
    out.rows.resize(p.n_blocks);
    std::vector<bool> done(p.n_blocks, false);
    std::vector<std::map<int, S>> block_sig(p.n_blocks);
    for (int i = 0; i < n; ++i) {
        int b = p.block_of[i];
        std::map<int, S> into;
        for (const auto& [j, w] : mc.rows[i].entries) into[p.block_of[j]] += w;
        std::erase_if(into, [](const auto& e) { return num<S>::is_zero(e.second); });
        if (!done[b]) {
            out.labels[b] = mc.labels[i];
            block_sig[b] = into;
            done[b] = true;
        } else {
            if (out.labels[b] != mc.labels[i])
                throw NotABisimulation("block " + std::to_string(b) + " mixes labels");
            if (block_sig[b] != into)
                throw NotABisimulation("block " + std::to_string(b) + " mixes signatures");
        }
    }
    for (int b = 0; b < p.n_blocks; ++b) {
        if (!done[b]) throw NotABisimulation("empty block " + std::to_string(b));
        std::vector<std::pair<int, S>> row(block_sig[b].begin(), block_sig[b].end());
        out.rows[b] = Distribution<S>(std::move(row));
    }
    out.initial = p.block_of[mc.initial];
    return out;
}

/// Bisimilarity quotient (the minimal chain).
template <class S>
MarkovChain<S> minimize(const MarkovChain<S>& mc) {
    return quotient(mc, bisim_partition(mc));
}

template <class S>
bool is_minimal(const MarkovChain<S>& mc) {
    return bisim_partition(mc).n_blocks == mc.size();
}

}  // namespace mcmin
