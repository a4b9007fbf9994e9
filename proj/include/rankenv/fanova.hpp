#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rankenv/matrix.hpp"

namespace rankenv {

/// Observed curves with group labels for permutation-based group
/// comparison.  No simulated rows here; replicates come from permuting the
/// curves.  Weights, when present, are per-curve (e.g. point counts behind
/// an estimated summary function) and travel with the curve under
/// permutation.
struct GroupedCurveSet {
    std::vector<double> args;             // K grid values
    Matrix curves;                        // n x K
    std::vector<int> groups;              // size n, values in 0..J-1
    std::vector<std::string> group_names; // size J
    std::vector<double> weights;          // empty or size n, strictly positive

    std::size_t n_curves() const { return curves.rows(); }
    std::size_t n_groups() const { return group_names.size(); }
    void validate() const;
};

enum class GroupStat {
    FStat,               // pointwise one-way ANOVA statistic, length K
    GroupMeans,          // concatenated group means, length J*K
    PairwiseDiff,        // differences of group means, length J(J-1)/2*K
    PairwiseDiffScaled,  // the same rescaled to unit variance
    PairwiseDiffScaledMa,// unit variance with moving-average smoothed variances
    LeaveOneOutScaledMa  // group mean minus rest-mean, scaled, length J*K
};

GroupStat group_stat_from_string(const std::string& s);
std::string to_string(GroupStat g);

struct GroupStatOptions {
    int ma_window = 1;   // odd window for the variance moving average; 1 = none
    bool welch = false;  // FStat: variance-weighted (Welch) instead of classical
};

struct StatSegment {
    std::string label;
    std::size_t offset = 0;
    std::size_t length = 0;
};

struct StatVector {
    std::vector<double> values;
    std::vector<StatSegment> segments;
    int degenerate_points = 0;  // grid points with a zero-variance denominator
};

StatVector fstat_vector(const GroupedCurveSet& g, const GroupStatOptions& opt = {});
StatVector group_mean_vector(const GroupedCurveSet& g);
StatVector pairwise_diff_vector(const GroupedCurveSet& g, GroupStat scaling,
                                const GroupStatOptions& opt = {});
StatVector leave_one_out_vector(const GroupedCurveSet& g, const GroupStatOptions& opt = {});

StatVector group_statistic(const GroupedCurveSet& g, GroupStat stat, const GroupStatOptions& opt = {});

/// Side of the rank test matching a construction: the ANOVA statistic is
/// one-sided (large values extreme), mean/difference vectors two-sided.
Side group_stat_side(GroupStat stat);

struct PermutationSet {
    TestMatrix matrix;                  // row 0 = observed labeling
    std::vector<StatSegment> segments;
    int degenerate_points = 0;          // from the observed labeling
};

/// Row 0 is the statistic under the observed labeling; rows 1..s come from
/// statistics under uniformly random label permutations (curves permuted
/// whole).  Permutations are sampled with replacement, replicates are
/// generated in parallel from per-replicate substreams, and the output is
/// identical for any thread count.
PermutationSet permutation_engine(const GroupedCurveSet& g, GroupStat stat, long s,
                                  std::uint64_t seed, const GroupStatOptions& opt = {});

/// Centered moving average with the window truncated at the edges, so the
/// output keeps length K.  b must be odd; b = 1 returns the input.
std::vector<double> moving_average(const std::vector<double>& v, int b);

}  // namespace rankenv
