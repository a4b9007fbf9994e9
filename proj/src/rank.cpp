#include "rankenv/rank.hpp"

#include <algorithm>
#include <numeric>

namespace rankenv {

namespace {

// Raw ranks of one column: smallest value -> 1, ties averaged (mid-rank).
// `order` and `raw` are scratch buffers of length n.
void raw_column_ranks(const Matrix& values, std::size_t col,
                      std::vector<std::size_t>& order, std::vector<double>& raw) {
    const std::size_t n = values.rows();
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return values(a, col) < values(b, col);
    });
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && values(order[j], col) == values(order[i], col)) ++j;
        // mean of the occupied raw ranks i+1 .. j
        const double mid = 0.5 * static_cast<double>(i + j + 1);
        for (std::size_t k = i; k < j; ++k) raw[order[k]] = mid;
        i = j;
    }
}

}  // namespace

Matrix pointwise_ranks(const TestMatrix& m) {
    m.validate();
    const std::size_t n = m.n_rows();
    const std::size_t d = m.dim();
    Matrix out(n, d);

#pragma omp parallel
    {
        std::vector<std::size_t> order(n);
        std::vector<double> raw(n);
#pragma omp for schedule(static)
        for (std::ptrdiff_t jj = 0; jj < static_cast<std::ptrdiff_t>(d); ++jj) {
            const auto j = static_cast<std::size_t>(jj);
            raw_column_ranks(m.values, j, order, raw);
            const double flip = static_cast<double>(n) + 1.0;
            switch (m.sides[j]) {
                case Side::LowerExtreme:
                    for (std::size_t i = 0; i < n; ++i) out(i, j) = raw[i];
                    break;
                case Side::UpperExtreme:
                    for (std::size_t i = 0; i < n; ++i) out(i, j) = flip - raw[i];
                    break;
                case Side::TwoSided:
                    for (std::size_t i = 0; i < n; ++i) out(i, j) = std::min(raw[i], flip - raw[i]);
                    break;
            }
        }
    }
    return out;
}

std::vector<double> extreme_ranks(const Matrix& pointwise) {
    const std::size_t n = pointwise.rows();
    const std::size_t d = pointwise.cols();
    if (n == 0 || d == 0) throw std::invalid_argument("extreme_ranks: empty rank matrix");
    std::vector<double> r(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
        const auto row = pointwise.row(static_cast<std::size_t>(ii));
        r[static_cast<std::size_t>(ii)] = *std::min_element(row.begin(), row.end());
    }
    return r;
}

namespace {

// counts[i] = #{i' : sorted row i' strictly precedes sorted row i}, computed
// by one lexicographic argsort of the row-sorted matrix.  Equal rows land in
// one run and share the run's start position as their count.
std::vector<std::int64_t> erc_by_sorting(const Matrix& sorted_rows) {
    const std::size_t n = sorted_rows.rows();
    const std::size_t d = sorted_rows.cols();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto lex_less = [&](std::size_t a, std::size_t b) {
        const auto ra = sorted_rows.row(a);
        const auto rb = sorted_rows.row(b);
        return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
    };
    std::sort(order.begin(), order.end(), lex_less);

    std::vector<std::int64_t> counts(n, 0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && !lex_less(order[i], order[j])) ++j;
        for (std::size_t k = i; k < j; ++k) counts[order[k]] = static_cast<std::int64_t>(i);
        i = j;
        (void)d;
    }
    return counts;
}

// Pairwise path used when a tolerance is requested; the tolerant comparison
// is not a strict weak order, so sorting cannot be used.
std::vector<std::int64_t> erc_pairwise(const Matrix& sorted_rows, double tol) {
    const std::size_t n = sorted_rows.rows();
    const std::size_t d = sorted_rows.cols();
    auto precedes = [&](std::size_t a, std::size_t b) {
        for (std::size_t k = 0; k < d; ++k) {
            const double diff = sorted_rows(a, k) - sorted_rows(b, k);
            if (diff < -tol) return true;
            if (diff > tol) return false;
        }
        return false;
    };
    std::vector<std::int64_t> counts(n, 0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        std::int64_t c = 0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i && precedes(j, i)) ++c;
        counts[i] = c;
    }
    return counts;
}

}  // namespace

std::vector<std::int64_t> erc_ranks(const Matrix& pointwise, const ErcOptions& opt) {
    const std::size_t n = pointwise.rows();
    const std::size_t d = pointwise.cols();
    if (n == 0 || d == 0) throw std::invalid_argument("erc_ranks: empty rank matrix");

    Matrix sorted_rows = pointwise;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
        auto row = sorted_rows.row(static_cast<std::size_t>(ii));
        std::sort(row.begin(), row.end());
    }

    if (opt.tie_tolerance > 0.0) return erc_pairwise(sorted_rows, opt.tie_tolerance);
    return erc_by_sorting(sorted_rows);
}

}  // namespace rankenv
