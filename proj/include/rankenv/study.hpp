#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rankenv/curves.hpp"
#include "rankenv/envelope.hpp"
#include "rankenv/spatial.hpp"

namespace rankenv {

/// Curves for several summary functions on one pattern, sharing the
/// empty-space and nearest-neighbour machinery when J is requested
/// alongside F or G.
std::vector<std::vector<double>> summary_curves(const PointPattern& p,
                                                const std::vector<SummaryFunction>& fns,
                                                const std::vector<double>& grid, EdgeCorrection corr,
                                                int f_lattice = 64, double j_truncation = 1e-6);

struct GofConfig {
    std::vector<SummaryFunction> functions = {SummaryFunction::L};
    double r_min = 0.0, r_max = 0.125;
    int grid_points = 500;
    EdgeCorrection correction = EdgeCorrection::Translational;
    int f_lattice = 64;
    long n_sim = 2500;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    FitFamily fit = FitFamily::None;
    std::optional<ModelSpec> null_model;  // required when fit == None
};

struct GofOutput {
    RankTestResult result;
    std::vector<CurveSet> parts;  // one per (pattern, function), concatenation order
    std::vector<PartLayout> layout;
    long n_sim = 0;
};

/// Goodness-of-fit test for one or several patterns jointly: fit or take
/// the null model per pattern, simulate, estimate the requested summary
/// functions, concatenate everything into one test vector and run the rank
/// test.  Simulations are generated in parallel from per-index substreams.
GofOutput run_gof(const std::vector<PointPattern>& patterns, const GofConfig& cfg);

struct ShiftTestConfig {
    double r_min = 0.0, r_max = 0.125;
    int grid_points = 500;
    EdgeCorrection correction = EdgeCorrection::Translational;
    long n_sim = 2500;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    std::set<int> fixed_types;  // empty: keep the smallest type fixed
};

/// Random-superposition test for a marked pattern: one sub-test per type
/// pair on the bivariate L function, simulated by toroidal shifts of all
/// non-fixed types (one shift set serves every sub-test of a replicate).
GofOutput run_shift_test(const PointPattern& marked, const ShiftTestConfig& cfg);

struct PowerStudyConfig {
    ModelSpec true_model = CsrModel{200.0};
    Window window;
    FitFamily fit = FitFamily::None;
    std::optional<ModelSpec> null_model;  // fit == None: defaults to the true model
    std::vector<std::vector<SummaryFunction>> combos = {{SummaryFunction::L}};
    double r_min = 0.0, r_max = 0.125;
    int grid_points = 500;
    EdgeCorrection correction = EdgeCorrection::Translational;
    int f_lattice = 64;
    long replications = 1000;
    long n_sim = 999;
    double alpha = 0.05;
    std::uint64_t seed = 0;
};

struct StudyCell {
    std::string label;
    long rejections = 0;  // erc p-value <= alpha, the headline rate
    long reject = 0, not_reject = 0, undecided = 0;  // p-interval decisions
    double proportion = 0.0, ci_low = 0.0, ci_high = 0.0;
};

struct StudyReport {
    std::vector<StudyCell> cells;
    long replications = 0;
    long failures = 0;
    double wall_seconds = 0.0;
};

/// Rejection-rate study: `replications` independent runs of the full
/// generate/fit/simulate/test pipeline, one shared simulation set per
/// replicate serving every function combination.  Parallel across
/// replicates, deterministic for any thread count.
StudyReport run_power_study(const PowerStudyConfig& cfg);

std::string combo_label(const std::vector<SummaryFunction>& fns);

}  // namespace rankenv
