#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rankenv/matrix.hpp"
#include "rankenv/rank.hpp"

namespace rankenv {

/// Conservative/liberal Monte Carlo p-values (p_minus, p_plus].  Their
/// difference is the tie mass at the observed extreme rank and bounds the
/// grey zone of the test.
struct PInterval {
    double p_minus = 0.0;
    double p_plus = 1.0;
    double width() const { return p_plus - p_minus; }
};

enum class Decision { Reject, NotReject, Undecided };

std::string to_string(Decision d);

/// Pointwise hull of the vectors whose extreme rank is at least the
/// critical rank.  One-sided columns leave the non-binding bound at
/// -inf/+inf.  `central` is the pointwise median of the simulation rows;
/// it is a plotting aid only and takes no part in the test.
struct GlobalEnvelope {
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<double> central;
    double critical_rank = 0.0;
    double alpha = 0.0;
};

struct RankTestResult {
    PInterval p_interval;
    double p_erc = 1.0;
    GlobalEnvelope envelope;
    Decision decision = Decision::Undecided;
};

/// p_plus = #{R_i <= R_1}/(s+1), p_minus = #{R_i < R_1}/(s+1).
PInterval p_interval(const std::vector<double>& extreme_ranks);

/// Conservative p-value from the extreme rank counts:
/// #{counts_i <= counts_1}/(s+1); ties counted conservatively.
double p_erc(const std::vector<std::int64_t>& erc_counts);

/// Critical rank R(alpha): the unique value v among the extreme ranks with
/// #{R < v}/n <= alpha < #{R <= v}/n.  This makes the decision rule exact:
/// R_1 < R(alpha) iff p_plus <= alpha, R_1 > R(alpha) iff p_minus > alpha,
/// and equality is exactly the undecided boundary case.
double critical_rank(const std::vector<double>& extreme_ranks, double alpha);

GlobalEnvelope build_envelope(const TestMatrix& m, const std::vector<double>& extreme_ranks,
                              double alpha);

Decision decide(const PInterval& p, double alpha);

/// Full pipeline: pointwise ranks, extreme ranks, both p-values, envelope
/// and the three-way decision (driven by the p-interval).
RankTestResult run_rank_test(const TestMatrix& m, double alpha, const ErcOptions& erc = {});

/// Number of simulations needed for a p-interval of width at most 0.01
/// (the guidance value for testing at level 0.05).  `k_functions` = 0 means
/// a plain low-dimensional vector, where the worst-case width 2d/(s+1)
/// (two-sided) or d/(s+1) (one-sided) is used; k >= 1 means the vector is a
/// concatenation of k discretized test functions, where high within-function
/// correlation makes k * 2500 sufficient.
long recommend_simulations(long d, long k_functions, Side side, double alpha);

}  // namespace rankenv
