#pragma once

#include <cmath>
#include <vector>

#include "mcmin/errors.hpp"
#include "mcmin/rational.hpp"

namespace mcmin {

/// Dense Gaussian elimination. Exact mode pivots on the first nonzero
/// entry (arithmetic is exact, so magnitude is irrelevant); float mode
/// uses partial pivoting by magnitude.
template <class S>
std::vector<S> solve_linear(std::vector<std::vector<S>> a, std::vector<S> b) {
    const int n = static_cast<int>(b.size());
    for (int col = 0; col < n; ++col) {
        int pivot = -1;
        if constexpr (num<S>::exact) {
            for (int r = col; r < n; ++r)
                if (!num<S>::is_zero(a[r][col])) {
                    pivot = r;
                    break;
                }
        } else {
            double best = 0.0;
            for (int r = col; r < n; ++r) {
                double mag = std::fabs(num<S>::as_double(a[r][col]));
                if (mag > best) {
                    best = mag;
                    pivot = r;
                }
            }
        }
        if (pivot < 0) throw SingularSystem("singular linear system at column " + std::to_string(col));
        std::swap(a[pivot], a[col]);
        std::swap(b[pivot], b[col]);
        for (int r = col + 1; r < n; ++r) {
            if (num<S>::is_zero(a[r][col])) continue;
            S factor = a[r][col] / a[col][col];
            a[r][col] = num<S>::zero();
            for (int c = col + 1; c < n; ++c) a[r][c] -= factor * a[col][c];
            b[r] -= factor * b[col];
        }
    }
    std::vector<S> x(n, num<S>::zero());
    for (int r = n - 1; r >= 0; --r) {
        S acc = b[r];
        for (int c = r + 1; c < n; ++c) acc -= a[r][c] * x[c];
        x[r] = acc / a[r][r];
    }
    return x;
}

}  // namespace mcmin
