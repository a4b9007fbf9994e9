#pragma once

#include <string>
#include <vector>

#include "rankenv/envelope.hpp"
#include "rankenv/matrix.hpp"

namespace rankenv {

/// A discretized test function: an argument grid and s+1 aligned curve
/// evaluations, row 0 observed.
struct CurveSet {
    std::vector<double> args;
    Matrix curves;  // (s+1) x K
    std::string name = "T";
    Side side = Side::TwoSided;

    std::size_t n_args() const { return args.size(); }
    std::size_t n_sim() const { return curves.rows() - 1; }
    void validate() const;
};

struct PartLayout {
    std::string name;
    std::size_t offset = 0;
    std::size_t length = 0;
    Side side = Side::TwoSided;
};

/// Concatenated test vector with the part boundaries kept for envelope
/// export and for the two-stage view.
struct CombinedTestMatrix {
    TestMatrix matrix;
    std::vector<PartLayout> parts;
};

struct ConcatOptions {
    /// Parts of unequal length break the equal-importance property of the
    /// combined test, so they are rejected unless explicitly allowed.
    bool allow_unequal = false;
};

/// Concatenate several curve sets into one test matrix: all values of the
/// first function followed by all values of the second, etc.  Each column
/// inherits its part's side.
CombinedTestMatrix concatenate(const std::vector<CurveSet>& parts, const ConcatOptions& opt = {});

/// Extreme ranks of the combined test computed per sub-test: pointwise
/// ranks and extreme ranks within each part, then the elementwise minimum
/// across parts.  Agrees exactly with extreme_ranks on the concatenation.
std::vector<double> two_stage_extreme_ranks(const std::vector<CurveSet>& parts);

enum class DeviationMeasure { IntL2, Max, ScaledMaxQ };

DeviationMeasure deviation_measure_from_string(const std::string& s);
std::string to_string(DeviationMeasure m);

struct DeviationOptions {
    double lower_quantile = 0.025;
    double upper_quantile = 0.975;
};

struct DeviationColumn {
    std::vector<double> u;  // one value per curve row
    int skipped_args = 0;   // grid points dropped for degenerate scaling
};

/// Summarize every curve's discrepancy from the central function (the
/// pointwise mean of all s+1 curves) into a single value:
///   IntL2       sum_k (T_i - T0)^2 dr_k        (trapezoidal grid weights)
///   Max         max |T_i - T0|  (two-sided) or the signed maximum toward
///               the extreme side (one-sided)
///   ScaledMaxQ  asymmetric-quantile scaled maximum, with pointwise
///               empirical quantiles of all curves as the scale
DeviationColumn deviation_measure(const CurveSet& c, DeviationMeasure m,
                                  const DeviationOptions& opt = {});

struct DeviationVector {
    Matrix u;  // (s+1) x d, one column per test function
    std::vector<std::string> names;
    int skipped_args = 0;
};

DeviationVector deviation_vector(const std::vector<CurveSet>& parts, DeviationMeasure m,
                                 const DeviationOptions& opt = {});

/// One-sided (large u extreme) rank test on the deviation columns.
RankTestResult combined_deviation_test(const DeviationVector& dv, double alpha);

/// Equally spaced grid of K points on [lo, hi].
std::vector<double> make_grid(double lo, double hi, std::size_t k);

}  // namespace rankenv
