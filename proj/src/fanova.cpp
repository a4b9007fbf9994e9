#include "rankenv/fanova.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "rankenv/rng.hpp"

namespace rankenv {

void GroupedCurveSet::validate() const {
    const std::size_t n = curves.rows();
    const std::size_t j = n_groups();
    if (j < 2) throw std::invalid_argument("GroupedCurveSet: need at least two groups");
    if (groups.size() != n)
        throw std::invalid_argument("GroupedCurveSet: label vector length does not match curve count");
    if (args.size() != curves.cols())
        throw std::invalid_argument("GroupedCurveSet: grid length does not match curve width");
    std::vector<std::size_t> sizes(j, 0);
    for (const int g : groups) {
        if (g < 0 || static_cast<std::size_t>(g) >= j)
            throw std::invalid_argument("GroupedCurveSet: group label out of range");
        ++sizes[static_cast<std::size_t>(g)];
    }
    for (std::size_t g = 0; g < j; ++g)
        if (sizes[g] == 0)
            throw std::invalid_argument("GroupedCurveSet: group '" + group_names[g] + "' is empty");
    if (!weights.empty()) {
        if (weights.size() != n)
            throw std::invalid_argument("GroupedCurveSet: weight vector length does not match curve count");
        for (const double w : weights)
            if (!(w > 0.0)) throw std::invalid_argument("GroupedCurveSet: weights must be strictly positive");
    }
    for (std::size_t k = 0; k + 1 < args.size(); ++k)
        if (!(args[k] < args[k + 1]))
            throw std::invalid_argument("GroupedCurveSet: argument grid not strictly increasing");
}

std::vector<double> moving_average(const std::vector<double>& v, int b) {
    if (b < 1 || b % 2 == 0) throw std::invalid_argument("moving_average: window must be odd and >= 1");
    if (b == 1) return v;
    const auto k = static_cast<std::ptrdiff_t>(v.size());
    const std::ptrdiff_t half = b / 2;
    std::vector<double> out(v.size());
    for (std::ptrdiff_t i = 0; i < k; ++i) {
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - half);
        const std::ptrdiff_t hi = std::min(k - 1, i + half);
        double acc = 0.0;
        for (std::ptrdiff_t t = lo; t <= hi; ++t) acc += v[static_cast<std::size_t>(t)];
        out[static_cast<std::size_t>(i)] = acc / static_cast<double>(hi - lo + 1);
    }
    return out;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Per-group accumulators over one labeling.  Sums of squares are taken on
// curves centered by the (label-invariant) global pointwise mean, which
// keeps the one-pass variance stable without affecting any statistic.
struct GroupSums {
    std::size_t n_groups = 0;
    std::size_t k = 0;
    std::vector<std::size_t> count;      // per group
    std::vector<double> wsum_scalar;     // per group: sum of weights
    std::vector<double> wsqsum_scalar;   // per group: sum of squared weights
    std::vector<double> sum;             // [g*k + j] raw sums
    std::vector<double> wsum;            // [g*k + j] weighted raw sums
    std::vector<double> sumsq_c;         // [g*k + j] centered sums of squares
    std::vector<double> sum_c;           // [g*k + j] centered sums
};

void accumulate(const GroupedCurveSet& g, const std::vector<int>& labels,
                const std::vector<double>& global_mean, GroupSums& a) {
    const std::size_t n = g.n_curves();
    const std::size_t k = g.args.size();
    const std::size_t nj = g.n_groups();
    const bool weighted = !g.weights.empty();

    a.n_groups = nj;
    a.k = k;
    a.count.assign(nj, 0);
    a.wsum_scalar.assign(nj, 0.0);
    a.wsqsum_scalar.assign(nj, 0.0);
    a.sum.assign(nj * k, 0.0);
    a.wsum.assign(weighted ? nj * k : 0, 0.0);
    a.sumsq_c.assign(nj * k, 0.0);
    a.sum_c.assign(nj * k, 0.0);

    for (std::size_t i = 0; i < n; ++i) {
        const auto gi = static_cast<std::size_t>(labels[i]);
        ++a.count[gi];
        const double w = weighted ? g.weights[i] : 1.0;
        a.wsum_scalar[gi] += w;
        a.wsqsum_scalar[gi] += w * w;
        const auto row = g.curves.row(i);
        double* s = a.sum.data() + gi * k;
        double* sc = a.sum_c.data() + gi * k;
        double* sq = a.sumsq_c.data() + gi * k;
        for (std::size_t j = 0; j < k; ++j) {
            const double y = row[j];
            const double c = y - global_mean[j];
            s[j] += y;
            sc[j] += c;
            sq[j] += c * c;
        }
        if (weighted) {
            double* ws = a.wsum.data() + gi * k;
            for (std::size_t j = 0; j < k; ++j) ws[j] += w * row[j];
        }
    }
}

// group mean curve (weighted if weights present)
double group_mean_at(const GroupedCurveSet& g, const GroupSums& a, std::size_t gi, std::size_t j) {
    if (!g.weights.empty()) return a.wsum[gi * a.k + j] / a.wsum_scalar[gi];
    return a.sum[gi * a.k + j] / static_cast<double>(a.count[gi]);
}

// plain sample variance (n-1) of the curves in group gi at grid point j
double group_var_at(const GroupSums& a, std::size_t gi, std::size_t j) {
    const auto ng = static_cast<double>(a.count[gi]);
    if (ng < 2.0) return 0.0;
    const double sc = a.sum_c[gi * a.k + j];
    const double sq = a.sumsq_c[gi * a.k + j];
    return std::max(0.0, (sq - sc * sc / ng) / (ng - 1.0));
}

// Var of the group mean: s^2/n_g, or s^2 * sum(w^2)/(sum w)^2 when weighted.
double group_mean_var_at(const GroupedCurveSet& g, const GroupSums& a, std::size_t gi, std::size_t j) {
    const double s2 = group_var_at(a, gi, j);
    if (!g.weights.empty()) {
        const double w = a.wsum_scalar[gi];
        return s2 * a.wsqsum_scalar[gi] / (w * w);
    }
    return s2 / static_cast<double>(a.count[gi]);
}

std::vector<double> global_pointwise_mean(const GroupedCurveSet& g) {
    const std::size_t k = g.args.size();
    std::vector<double> mean(k, 0.0);
    for (std::size_t i = 0; i < g.n_curves(); ++i) {
        const auto row = g.curves.row(i);
        for (std::size_t j = 0; j < k; ++j) mean[j] += row[j];
    }
    for (double& m : mean) m /= static_cast<double>(g.n_curves());
    return mean;
}

StatVector build_fstat(const GroupedCurveSet& g, const std::vector<int>& labels,
                       const std::vector<double>& global_mean, const GroupStatOptions& opt) {
    const std::size_t k = g.args.size();
    const std::size_t nj = g.n_groups();
    const auto n = static_cast<double>(g.n_curves());
    GroupSums a;
    accumulate(g, labels, global_mean, a);
    for (std::size_t gi = 0; gi < nj; ++gi)
        if (a.count[gi] < 2)
            throw std::invalid_argument("fstat_vector: group '" + g.group_names[gi] + "' needs >= 2 curves");

    StatVector out;
    out.values.assign(k, 0.0);
    out.segments = {{"F", 0, k}};

    for (std::size_t j = 0; j < k; ++j) {
        if (!opt.welch) {
            double grand = 0.0;
            for (std::size_t gi = 0; gi < nj; ++gi) grand += a.sum[gi * k + j];
            grand /= n;
            double ssb = 0.0, ssw = 0.0;
            for (std::size_t gi = 0; gi < nj; ++gi) {
                const auto ng = static_cast<double>(a.count[gi]);
                const double mean = a.sum[gi * k + j] / ng;
                ssb += ng * (mean - grand) * (mean - grand);
                ssw += (ng - 1.0) * group_var_at(a, gi, j);
            }
            const double msb = ssb / static_cast<double>(nj - 1);
            const double msw = ssw / (n - static_cast<double>(nj));
            if (msw <= 0.0) {
                out.values[j] = kInf;
                ++out.degenerate_points;
            } else {
                out.values[j] = msb / msw;
            }
        } else {
            // Welch's variance-weighted one-way statistic
            double wtot = 0.0, wmean = 0.0;
            bool degenerate = false;
            std::vector<double> w(nj);
            for (std::size_t gi = 0; gi < nj; ++gi) {
                const double s2 = group_var_at(a, gi, j);
                if (s2 <= 0.0) {
                    degenerate = true;
                    break;
                }
                w[gi] = static_cast<double>(a.count[gi]) / s2;
                wtot += w[gi];
                wmean += w[gi] * (a.sum[gi * k + j] / static_cast<double>(a.count[gi]));
            }
            if (degenerate) {
                out.values[j] = kInf;
                ++out.degenerate_points;
                continue;
            }
            wmean /= wtot;
            double num = 0.0, lambda = 0.0;
            for (std::size_t gi = 0; gi < nj; ++gi) {
                const double mean = a.sum[gi * k + j] / static_cast<double>(a.count[gi]);
                num += w[gi] * (mean - wmean) * (mean - wmean);
                const double frac = 1.0 - w[gi] / wtot;
                lambda += frac * frac / static_cast<double>(a.count[gi] - 1);
            }
            const auto jd = static_cast<double>(nj);
            num /= (jd - 1.0);
            const double denom = 1.0 + 2.0 * (jd - 2.0) / (jd * jd - 1.0) * lambda;
            out.values[j] = num / denom;
        }
    }
    return out;
}

StatVector build_group_means(const GroupedCurveSet& g, const std::vector<int>& labels,
                             const std::vector<double>& global_mean) {
    const std::size_t k = g.args.size();
    const std::size_t nj = g.n_groups();
    GroupSums a;
    accumulate(g, labels, global_mean, a);
    StatVector out;
    out.values.assign(nj * k, 0.0);
    for (std::size_t gi = 0; gi < nj; ++gi) {
        out.segments.push_back({g.group_names[gi], gi * k, k});
        for (std::size_t j = 0; j < k; ++j) out.values[gi * k + j] = group_mean_at(g, a, gi, j);
    }
    return out;
}

StatVector build_pairwise(const GroupedCurveSet& g, const std::vector<int>& labels,
                          const std::vector<double>& global_mean, GroupStat scaling,
                          const GroupStatOptions& opt) {
    const std::size_t k = g.args.size();
    const std::size_t nj = g.n_groups();
    GroupSums a;
    accumulate(g, labels, global_mean, a);

    const bool scaled = scaling != GroupStat::PairwiseDiff;
    const int b = scaling == GroupStat::PairwiseDiffScaledMa ? opt.ma_window : 1;
    if (scaled)
        for (std::size_t gi = 0; gi < nj; ++gi)
            if (a.count[gi] < 2)
                throw std::invalid_argument("pairwise_diff_vector: group '" + g.group_names[gi] +
                                            "' needs >= 2 curves for variance scaling");

    std::vector<std::vector<double>> mean_var(nj);
    if (scaled) {
        for (std::size_t gi = 0; gi < nj; ++gi) {
            std::vector<double> v(k);
            for (std::size_t j = 0; j < k; ++j) v[j] = group_mean_var_at(g, a, gi, j);
            mean_var[gi] = moving_average(v, b);
        }
    }

    StatVector out;
    out.values.assign(nj * (nj - 1) / 2 * k, 0.0);
    std::size_t seg = 0;
    for (std::size_t g1 = 0; g1 < nj; ++g1) {
        for (std::size_t g2 = g1 + 1; g2 < nj; ++g2, ++seg) {
            out.segments.push_back({g.group_names[g1] + " - " + g.group_names[g2], seg * k, k});
            for (std::size_t j = 0; j < k; ++j) {
                double diff = group_mean_at(g, a, g1, j) - group_mean_at(g, a, g2, j);
                if (scaled) {
                    const double denom = std::sqrt(mean_var[g1][j] + mean_var[g2][j]);
                    if (denom > 0.0) {
                        diff /= denom;
                    } else {
                        ++out.degenerate_points;
                    }
                }
                out.values[seg * k + j] = diff;
            }
        }
    }
    return out;
}

StatVector build_leave_one_out(const GroupedCurveSet& g, const std::vector<int>& labels,
                               const std::vector<double>& global_mean, const GroupStatOptions& opt) {
    const std::size_t k = g.args.size();
    const std::size_t nj = g.n_groups();
    const std::size_t n = g.n_curves();
    const bool weighted = !g.weights.empty();
    GroupSums a;
    accumulate(g, labels, global_mean, a);

    // totals, to derive every complement ("rest") from the group sums
    std::vector<double> tot_sum(k, 0.0), tot_sum_c(k, 0.0), tot_sumsq_c(k, 0.0), tot_wsum;
    double tot_w = 0.0, tot_wsq = 0.0;
    if (weighted) tot_wsum.assign(k, 0.0);
    for (std::size_t gi = 0; gi < nj; ++gi) {
        tot_w += a.wsum_scalar[gi];
        tot_wsq += a.wsqsum_scalar[gi];
        for (std::size_t j = 0; j < k; ++j) {
            tot_sum[j] += a.sum[gi * k + j];
            tot_sum_c[j] += a.sum_c[gi * k + j];
            tot_sumsq_c[j] += a.sumsq_c[gi * k + j];
            if (weighted) tot_wsum[j] += a.wsum[gi * k + j];
        }
    }

    StatVector out;
    out.values.assign(nj * k, 0.0);
    for (std::size_t gi = 0; gi < nj; ++gi) {
        out.segments.push_back({g.group_names[gi] + " - rest", gi * k, k});
        const auto n_rest = static_cast<double>(n - a.count[gi]);
        if (n_rest < 2.0)
            throw std::invalid_argument("leave_one_out_vector: complement of group '" + g.group_names[gi] +
                                        "' needs >= 2 curves");
        const double w_rest = tot_w - a.wsum_scalar[gi];
        const double wsq_rest = tot_wsq - a.wsqsum_scalar[gi];

        std::vector<double> var_g(k), var_rest(k);
        for (std::size_t j = 0; j < k; ++j) {
            var_g[j] = group_mean_var_at(g, a, gi, j);
            const double sc = tot_sum_c[j] - a.sum_c[gi * k + j];
            const double sq = tot_sumsq_c[j] - a.sumsq_c[gi * k + j];
            const double s2 = std::max(0.0, (sq - sc * sc / n_rest) / (n_rest - 1.0));
            var_rest[j] = weighted ? s2 * wsq_rest / (w_rest * w_rest) : s2 / n_rest;
        }
        var_g = moving_average(var_g, opt.ma_window);
        var_rest = moving_average(var_rest, opt.ma_window);

        for (std::size_t j = 0; j < k; ++j) {
            const double mean_g = group_mean_at(g, a, gi, j);
            const double mean_rest = weighted ? (tot_wsum[j] - a.wsum[gi * k + j]) / w_rest
                                              : (tot_sum[j] - a.sum[gi * k + j]) / n_rest;
            double diff = mean_g - mean_rest;
            const double denom = std::sqrt(var_g[j] + var_rest[j]);
            if (denom > 0.0) {
                diff /= denom;
            } else {
                ++out.degenerate_points;
            }
            out.values[gi * k + j] = diff;
        }
    }
    return out;
}

StatVector build(const GroupedCurveSet& g, const std::vector<int>& labels,
                 const std::vector<double>& global_mean, GroupStat stat, const GroupStatOptions& opt) {
    switch (stat) {
        case GroupStat::FStat: return build_fstat(g, labels, global_mean, opt);
        case GroupStat::GroupMeans: return build_group_means(g, labels, global_mean);
        case GroupStat::PairwiseDiff:
        case GroupStat::PairwiseDiffScaled:
        case GroupStat::PairwiseDiffScaledMa:
            return build_pairwise(g, labels, global_mean, stat, opt);
        case GroupStat::LeaveOneOutScaledMa: return build_leave_one_out(g, labels, global_mean, opt);
    }
    throw std::logic_error("group_statistic: unknown construction");
}

}  // namespace

StatVector fstat_vector(const GroupedCurveSet& g, const GroupStatOptions& opt) {
    g.validate();
    return build_fstat(g, g.groups, global_pointwise_mean(g), opt);
}

StatVector group_mean_vector(const GroupedCurveSet& g) {
    g.validate();
    return build_group_means(g, g.groups, global_pointwise_mean(g));
}

StatVector pairwise_diff_vector(const GroupedCurveSet& g, GroupStat scaling, const GroupStatOptions& opt) {
    g.validate();
    if (scaling != GroupStat::PairwiseDiff && scaling != GroupStat::PairwiseDiffScaled &&
        scaling != GroupStat::PairwiseDiffScaledMa)
        throw std::invalid_argument("pairwise_diff_vector: scaling must be a pairwise construction");
    return build_pairwise(g, g.groups, global_pointwise_mean(g), scaling, opt);
}

StatVector leave_one_out_vector(const GroupedCurveSet& g, const GroupStatOptions& opt) {
    g.validate();
    return build_leave_one_out(g, g.groups, global_pointwise_mean(g), opt);
}

StatVector group_statistic(const GroupedCurveSet& g, GroupStat stat, const GroupStatOptions& opt) {
    g.validate();
    return build(g, g.groups, global_pointwise_mean(g), stat, opt);
}

Side group_stat_side(GroupStat stat) {
    return stat == GroupStat::FStat ? Side::UpperExtreme : Side::TwoSided;
}

PermutationSet permutation_engine(const GroupedCurveSet& g, GroupStat stat, long s,
                                  std::uint64_t seed, const GroupStatOptions& opt) {
    g.validate();
    if (s < 1) throw std::invalid_argument("permutation_engine: s >= 1 required");
    const std::vector<double> global_mean = global_pointwise_mean(g);

    const StatVector observed = build(g, g.groups, global_mean, stat, opt);
    const std::size_t d = observed.values.size();

    PermutationSet out;
    out.segments = observed.segments;
    out.degenerate_points = observed.degenerate_points;
    out.matrix.values = Matrix(static_cast<std::size_t>(s) + 1, d);
    out.matrix.sides.assign(d, group_stat_side(stat));

    // Infinity sentinels from degenerate grid points are clamped to the
    // largest finite value; ranks depend on order only, and the test matrix
    // requires finite entries.
    auto copy_clamped = [](const std::vector<double>& src, std::span<double> dst) {
        constexpr double big = std::numeric_limits<double>::max();
        for (std::size_t j = 0; j < src.size(); ++j) dst[j] = std::min(src[j], big);
    };
    copy_clamped(observed.values, out.matrix.values.row(0));

    const std::size_t n = g.n_curves();
#pragma omp parallel for schedule(dynamic, 16)
    for (long rep = 1; rep <= s; ++rep) {
        Rng rng(seed, static_cast<std::uint64_t>(rep));
        std::vector<int> labels(g.groups);
        for (std::size_t i = n - 1; i > 0; --i)
            std::swap(labels[i], labels[rng.uniform_index(i + 1)]);
        const StatVector sv = build(g, labels, global_mean, stat, opt);
        copy_clamped(sv.values, out.matrix.values.row(static_cast<std::size_t>(rep)));
    }
    return out;
}

GroupStat group_stat_from_string(const std::string& s) {
    if (s == "fstat") return GroupStat::FStat;
    if (s == "means") return GroupStat::GroupMeans;
    if (s == "pairwise") return GroupStat::PairwiseDiff;
    if (s == "pairwise-scaled") return GroupStat::PairwiseDiffScaled;
    if (s == "pairwise-scaled-ma") return GroupStat::PairwiseDiffScaledMa;
    if (s == "leave-one-out") return GroupStat::LeaveOneOutScaledMa;
    throw std::invalid_argument("unknown construction '" + s + "'");
}

std::string to_string(GroupStat g) {
    switch (g) {
        case GroupStat::FStat: return "fstat";
        case GroupStat::GroupMeans: return "means";
        case GroupStat::PairwiseDiff: return "pairwise";
        case GroupStat::PairwiseDiffScaled: return "pairwise-scaled";
        case GroupStat::PairwiseDiffScaledMa: return "pairwise-scaled-ma";
        case GroupStat::LeaveOneOutScaledMa: return "leave-one-out";
    }
    return "fstat";
}

}  // namespace rankenv
