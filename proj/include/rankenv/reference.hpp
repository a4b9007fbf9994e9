#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "rankenv/matrix.hpp"

// Serial reference implementations.  These deliberately use different
// algorithms than the parallel kernels (counting instead of sorting,
// quadratic pairwise comparison instead of one argsort) and are kept as
// oracles for the test suites and as the baseline for the benchmarks.

namespace rankenv::ref {

/// Pointwise ranks by direct counting: raw rank of entry (i,j) is
/// #{values below} + (1 + #{ties}) / 2, then the side transform.
inline Matrix pointwise_ranks(const TestMatrix& m) {
    m.validate();
    const std::size_t n = m.n_rows();
    const std::size_t d = m.dim();
    Matrix out(n, d);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t below = 0, equal = 0;
            for (std::size_t k = 0; k < n; ++k) {
                if (m.values(k, j) < m.values(i, j)) ++below;
                else if (m.values(k, j) == m.values(i, j)) ++equal;
            }
            const double raw = static_cast<double>(below) + 0.5 * static_cast<double>(equal + 1);
            const double flip = static_cast<double>(n) + 1.0 - raw;
            switch (m.sides[j]) {
                case Side::LowerExtreme: out(i, j) = raw; break;
                case Side::UpperExtreme: out(i, j) = flip; break;
                case Side::TwoSided: out(i, j) = std::min(raw, flip); break;
            }
        }
    }
    return out;
}

/// Row minima by plain scan.
inline std::vector<double> extreme_ranks(const Matrix& pointwise) {
    std::vector<double> r(pointwise.rows());
    for (std::size_t i = 0; i < pointwise.rows(); ++i) {
        double m = pointwise(i, 0);
        for (std::size_t j = 1; j < pointwise.cols(); ++j) m = std::min(m, pointwise(i, j));
        r[i] = m;
    }
    return r;
}

/// O(n^2 d) extreme rank counts: sort every row, then compare all pairs
/// with the printed lexicographic relation.
inline std::vector<std::int64_t> erc_ranks_quadratic(const Matrix& pointwise) {
    const std::size_t n = pointwise.rows();
    const std::size_t d = pointwise.cols();
    std::vector<std::vector<double>> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        rows[i].assign(pointwise.row(i).begin(), pointwise.row(i).end());
        std::sort(rows[i].begin(), rows[i].end());
    }
    auto precedes = [&](const std::vector<double>& a, const std::vector<double>& b) {
        for (std::size_t k = 0; k < d; ++k) {
            if (a[k] < b[k]) return true;
            if (a[k] > b[k]) return false;
        }
        return false;
    };
    std::vector<std::int64_t> counts(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (j != i && precedes(rows[j], rows[i])) ++counts[i];
    return counts;
}

/// Exhaustive scan for the critical rank: the unique value v among the
/// extreme ranks with  #{R < v}/n <= alpha < #{R <= v}/n.
inline double critical_rank_scan(const std::vector<double>& ranks, double alpha) {
    const auto n = static_cast<double>(ranks.size());
    std::vector<double> sorted(ranks);
    std::sort(sorted.begin(), sorted.end());
    for (const double v : sorted) {
        std::size_t lt = 0, le = 0;
        for (const double r : ranks) {
            if (r < v) ++lt;
            if (r <= v) ++le;
        }
        if (static_cast<double>(lt) / n <= alpha && static_cast<double>(le) / n > alpha) return v;
    }
    return sorted.back();
}

}  // namespace rankenv::ref
