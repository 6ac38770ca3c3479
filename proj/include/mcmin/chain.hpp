#pragma once

#include <algorithm>
#include <mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mcmin/errors.hpp"
#include "mcmin/rational.hpp"

namespace mcmin {

/// Label reserved for the sink state introduced by discount_chain.
inline constexpr const char* kBottomLabel = "__bottom";

/// Process-wide label interner. Two labels are equal iff their ids are.
class LabelTable {
public:
    static LabelTable& instance() {
        static LabelTable table;
        return table;
    }

    int intern(const std::string& text) {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = ids_.find(text);
        if (it != ids_.end()) return it->second;
        int id = static_cast<int>(texts_.size());
        texts_.push_back(text);
        ids_.emplace(text, id);
        return id;
    }

    std::string text(int id) const {
        std::lock_guard<std::mutex> lock(mu_);
        return texts_.at(static_cast<size_t>(id));
    }

private:
    LabelTable() = default;
    mutable std::mutex mu_;
    std::vector<std::string> texts_;
    std::unordered_map<std::string, int> ids_;
};

inline int intern_label(const std::string& text) { return LabelTable::instance().intern(text); }
inline std::string label_text(int id) { return LabelTable::instance().text(id); }

/// Sparse probability distribution over dense state indices. Entries are
/// sorted by index and strictly positive; the support is exactly the
/// stored indices.
template <class S>
struct Distribution {
    std::vector<std::pair<int, S>> entries;

    Distribution() = default;
    explicit Distribution(std::vector<std::pair<int, S>> raw) {
        std::sort(raw.begin(), raw.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (auto& [idx, w] : raw) {
            if (!entries.empty() && entries.back().first == idx)
                entries.back().second += w;
            else
                entries.emplace_back(idx, w);
        }
        std::erase_if(entries, [](const auto& e) { return num<S>::is_zero(e.second); });
    }

    static Distribution dirac(int idx) { return Distribution({{idx, num<S>::one()}}); }

    S at(int idx) const {
        auto it = std::lower_bound(entries.begin(), entries.end(), idx,
                                   [](const auto& e, int i) { return e.first < i; });
        if (it != entries.end() && it->first == idx) return it->second;
        return num<S>::zero();
    }

    S total() const {
        S sum = num<S>::zero();
        for (const auto& [idx, w] : entries) sum += w;
        return sum;
    }

    bool operator==(const Distribution&) const = default;
};

/// Finite labelled Markov chain with a distinguished initial state.
/// Values are immutable after construction; all operations are pure.
template <class S>
struct MarkovChain {
    std::string name;
    std::vector<int> labels;              // label id per state
    std::vector<Distribution<S>> rows;    // transition row per state
    int initial = 0;

    int size() const { return static_cast<int>(labels.size()); }

    /// Label ids occurring in the chain, deduplicated, in state order.
    std::vector<int> label_set() const {
        std::vector<int> out;
        for (int l : labels)
            if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
        return out;
    }

    bool operator==(const MarkovChain&) const = default;
};

template <class S>
void validate(const MarkovChain<S>& mc) {
    int n = mc.size();
    if (n == 0) throw McError("chain has no states");
    if (static_cast<int>(mc.rows.size()) != n) throw McError("label/row count mismatch");
    if (mc.initial < 0 || mc.initial >= n)
        throw BadInitial("initial state " + std::to_string(mc.initial) + " out of range");
    for (int i = 0; i < n; ++i) {
        S sum = num<S>::zero();
        for (const auto& [j, w] : mc.rows[i].entries) {
            if (j < 0 || j >= n)
                throw McError("transition target " + std::to_string(j) + " out of range");
            if (w < num<S>::zero())
                throw NegativeWeight("negative weight in row " + std::to_string(i));
            sum += w;
        }
        if (!num<S>::sums_to_one(sum))
            throw RowSumError("row " + std::to_string(i) + " does not sum to 1");
    }
}

template <class S>
struct DisjointUnion {
    MarkovChain<S> chain;
    std::vector<int> left_index;   // embedding of a's states
    std::vector<int> right_index;  // embedding of b's states
};

/// States of `a` keep their indices, states of `b` are offset by |a|.
/// The union's initial state is a's initial.
template <class S>
DisjointUnion<S> disjoint_union(const MarkovChain<S>& a, const MarkovChain<S>& b) {
    DisjointUnion<S> out;
    int na = a.size(), nb = b.size();
    out.chain.name = a.name + "+" + b.name;
    out.chain.labels = a.labels;
    out.chain.labels.insert(out.chain.labels.end(), b.labels.begin(), b.labels.end());
    out.chain.rows = a.rows;
    for (const auto& row : b.rows) {
        std::vector<std::pair<int, S>> shifted;
        shifted.reserve(row.entries.size());
        for (const auto& [j, w] : row.entries) shifted.emplace_back(j + na, w);
        out.chain.rows.push_back(Distribution<S>(std::move(shifted)));
    }
    out.chain.initial = a.initial;
    out.left_index.resize(na);
    out.right_index.resize(nb);
    for (int i = 0; i < na; ++i) out.left_index[i] = i;
    for (int i = 0; i < nb; ++i) out.right_index[i] = na + i;
    return out;
}

/// Adds a sink state with the reserved label; every original row is scaled
/// by lambda with (1-lambda) mass redirected to the sink.
template <class S>
MarkovChain<S> discount_chain(const MarkovChain<S>& mc, const Rational& lambda) {
    if (!(lambda > 0 && lambda <= 1)) throw BadDiscount("discount must lie in (0,1]");
    int bottom_label = intern_label(kBottomLabel);
    for (int l : mc.labels)
        if (l == bottom_label) throw BadDiscount("chain already contains the reserved sink label");
    S lam = num<S>::from_rational(lambda);
    S rest = num<S>::from_rational(Rational(1) - lambda);
    int n = mc.size();
    MarkovChain<S> out;
    out.name = mc.name + "@" + rat_str(lambda);
    out.labels = mc.labels;
    out.labels.push_back(bottom_label);
    out.rows.reserve(n + 1);
    for (int i = 0; i < n; ++i) {
        std::vector<std::pair<int, S>> row;
        row.reserve(mc.rows[i].entries.size() + 1);
        for (const auto& [j, w] : mc.rows[i].entries) row.emplace_back(j, lam * w);
        row.emplace_back(n, rest);
        out.rows.push_back(Distribution<S>(std::move(row)));
    }
    out.rows.push_back(Distribution<S>::dirac(n));
    out.initial = mc.initial;
    return out;
}

/// Probability that the label trace of a run from the initial state begins
/// with `word`; forward vector-matrix products filtered by labels.
template <class S>
S cylinder_prob(const MarkovChain<S>& mc, const std::vector<int>& word) {
    if (word.empty()) return num<S>::one();
    int n = mc.size();
    std::vector<S> cur(n, num<S>::zero());
    if (mc.labels[mc.initial] != word[0]) return num<S>::zero();
    cur[mc.initial] = num<S>::one();
    for (size_t t = 1; t < word.size(); ++t) {
        std::vector<S> next(n, num<S>::zero());
        for (int i = 0; i < n; ++i) {
            if (num<S>::is_zero(cur[i])) continue;
            for (const auto& [j, w] : mc.rows[i].entries)
                if (mc.labels[j] == word[t]) next[j] += cur[i] * w;
        }
        cur = std::move(next);
    }
    S sum = num<S>::zero();
    for (const S& v : cur) sum += v;
    return sum;
}

/// Derives the float-mode copy of an exact chain.
inline MarkovChain<double> to_float(const MarkovChain<Rational>& mc) {
    MarkovChain<double> out;
    out.name = mc.name;
    out.labels = mc.labels;
    out.initial = mc.initial;
    out.rows.reserve(mc.rows.size());
    for (const auto& row : mc.rows) {
        std::vector<std::pair<int, double>> cells;
        cells.reserve(row.entries.size());
        for (const auto& [j, w] : row.entries) cells.emplace_back(j, w.get_d());
        out.rows.push_back(Distribution<double>(std::move(cells)));
    }
    return out;
}

}  // namespace mcmin
