#pragma once

#include <cstdint>
#include <vector>

#include "rankenv/matrix.hpp"

namespace rankenv {

/// Pointwise ranks R_ij.  Per column: raw ranks r in {1..s+1} with the
/// smallest value getting rank 1 and ties replaced by the mean of the raw
/// ranks they occupy, then the side transform with n = s+1:
///
///   LowerExtreme   R = r
///   UpperExtreme   R = n+1-r          (largest value gets rank 1)
///   TwoSided       R = min(r, n+1-r)
///
/// Columns are independent and ranked in parallel; the result is
/// bit-identical for any thread count.
Matrix pointwise_ranks(const TestMatrix& m);

/// Extreme ranks R_i = min_j R_ij (row minima of the pointwise rank matrix).
std::vector<double> extreme_ranks(const Matrix& pointwise);

struct ErcOptions {
    /// Absolute tolerance for comparing (possibly tie-averaged) ranks in the
    /// lexicographic order.  Ranks are exact halves in double precision, so
    /// the default exact comparison is the right choice; a positive
    /// tolerance switches to the quadratic pairwise path.
    double tie_tolerance = 0.0;
};

/// Extreme rank count: counts[i] = number of rows whose ascending-sorted
/// pointwise rank vector strictly lexicographically precedes row i's.
/// Rows with identical sorted vectors receive identical counts.
std::vector<std::int64_t> erc_ranks(const Matrix& pointwise, const ErcOptions& opt = {});

}  // namespace rankenv
