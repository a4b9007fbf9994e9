#include "rankenv/curves.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rankenv {

void CurveSet::validate() const {
    if (args.empty()) throw std::invalid_argument("CurveSet '" + name + "': empty argument grid");
    if (args.size() != curves.cols())
        throw std::invalid_argument("CurveSet '" + name + "': grid length " + std::to_string(args.size()) +
                                    " does not match curve width " + std::to_string(curves.cols()));
    if (curves.rows() < 2)
        throw std::invalid_argument("CurveSet '" + name + "': need the observed curve plus at least one simulation");
    for (std::size_t k = 0; k + 1 < args.size(); ++k)
        if (!(args[k] < args[k + 1]))
            throw std::invalid_argument("CurveSet '" + name + "': argument grid not strictly increasing at index " +
                                        std::to_string(k + 1));
    for (const double a : args)
        if (!std::isfinite(a))
            throw std::invalid_argument("CurveSet '" + name + "': non-finite grid value");
}

std::vector<double> make_grid(double lo, double hi, std::size_t k) {
    if (k < 1) throw std::invalid_argument("make_grid: K >= 1 required");
    if (!(lo < hi)) throw std::invalid_argument("make_grid: need lo < hi");
    std::vector<double> g(k);
    if (k == 1) {
        g[0] = lo;
        return g;
    }
    const double step = (hi - lo) / static_cast<double>(k - 1);
    for (std::size_t i = 0; i < k; ++i) g[i] = lo + step * static_cast<double>(i);
    g.back() = hi;
    return g;
}

CombinedTestMatrix concatenate(const std::vector<CurveSet>& parts, const ConcatOptions& opt) {
    if (parts.empty()) throw std::invalid_argument("concatenate: no parts");
    for (const auto& p : parts) p.validate();

    const std::size_t n = parts.front().curves.rows();
    const std::size_t k0 = parts.front().n_args();
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p.curves.rows() != n)
            throw std::invalid_argument("concatenate: part '" + p.name + "' has " +
                                        std::to_string(p.curves.rows() - 1) + " simulations, expected " +
                                        std::to_string(n - 1));
        if (!opt.allow_unequal && p.n_args() != k0)
            throw std::invalid_argument("concatenate: part '" + p.name +
                                        "' has a different grid length; equal lengths keep the parts "
                                        "equally weighted (pass allow_unequal to override)");
        total += p.n_args();
    }

    CombinedTestMatrix out;
    out.matrix.values = Matrix(n, total);
    out.matrix.sides.resize(total);
    out.parts.reserve(parts.size());

    std::size_t offset = 0;
    for (const auto& p : parts) {
        const std::size_t k = p.n_args();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < k; ++c)
                out.matrix.values(i, offset + c) = p.curves(i, c);
        std::fill(out.matrix.sides.begin() + static_cast<std::ptrdiff_t>(offset),
                  out.matrix.sides.begin() + static_cast<std::ptrdiff_t>(offset + k), p.side);
        out.parts.push_back({p.name, offset, k, p.side});
        offset += k;
    }
    return out;
}

std::vector<double> two_stage_extreme_ranks(const std::vector<CurveSet>& parts) {
    if (parts.empty()) throw std::invalid_argument("two_stage_extreme_ranks: no parts");
    std::vector<double> combined;
    for (const auto& p : parts) {
        p.validate();
        TestMatrix m(p.curves, p.side);
        const std::vector<double> sub = extreme_ranks(pointwise_ranks(m));
        if (combined.empty()) {
            combined = sub;
        } else {
            if (sub.size() != combined.size())
                throw std::invalid_argument("two_stage_extreme_ranks: parts disagree on s");
            for (std::size_t i = 0; i < sub.size(); ++i) combined[i] = std::min(combined[i], sub[i]);
        }
    }
    return combined;
}

namespace {

// Empirical quantile with linear interpolation between order statistics.
double interp_quantile(std::vector<double>& sorted_scratch, double prob) {
    const std::size_t n = sorted_scratch.size();
    const double h = prob * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted_scratch[lo] + frac * (sorted_scratch[hi] - sorted_scratch[lo]);
}

std::vector<double> trapezoid_weights(const std::vector<double>& args) {
    const std::size_t k = args.size();
    std::vector<double> w(k, 1.0);
    if (k == 1) return w;
    w[0] = 0.5 * (args[1] - args[0]);
    w[k - 1] = 0.5 * (args[k - 1] - args[k - 2]);
    for (std::size_t i = 1; i + 1 < k; ++i) w[i] = 0.5 * (args[i + 1] - args[i - 1]);
    return w;
}

}  // namespace

DeviationColumn deviation_measure(const CurveSet& c, DeviationMeasure m, const DeviationOptions& opt) {
    c.validate();
    const std::size_t n = c.curves.rows();
    const std::size_t k = c.n_args();
    if (n < 3) throw std::invalid_argument("deviation_measure: need s >= 2 to estimate the central function");

    std::vector<double> central(k, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) central[j] += c.curves(i, j);
    for (double& v : central) v /= static_cast<double>(n);

    DeviationColumn out;
    out.u.assign(n, 0.0);

    switch (m) {
        case DeviationMeasure::IntL2: {
            const std::vector<double> w = trapezoid_weights(c.args);
            for (std::size_t i = 0; i < n; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < k; ++j) {
                    const double diff = c.curves(i, j) - central[j];
                    acc += diff * diff * w[j];
                }
                out.u[i] = acc;
            }
            break;
        }
        case DeviationMeasure::Max: {
            for (std::size_t i = 0; i < n; ++i) {
                double best = -std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < k; ++j) {
                    const double diff = c.curves(i, j) - central[j];
                    double v = 0.0;
                    switch (c.side) {
                        case Side::TwoSided: v = std::abs(diff); break;
                        case Side::UpperExtreme: v = diff; break;
                        case Side::LowerExtreme: v = -diff; break;
                    }
                    best = std::max(best, v);
                }
                out.u[i] = best;
            }
            break;
        }
        case DeviationMeasure::ScaledMaxQ: {
            std::vector<double> q_low(k), q_upp(k), col(n);
            for (std::size_t j = 0; j < k; ++j) {
                for (std::size_t i = 0; i < n; ++i) col[i] = c.curves(i, j);
                std::sort(col.begin(), col.end());
                q_low[j] = interp_quantile(col, opt.lower_quantile);
                q_upp[j] = interp_quantile(col, opt.upper_quantile);
            }
            std::vector<bool> usable(k, true);
            for (std::size_t j = 0; j < k; ++j) {
                if (!(q_upp[j] > central[j]) || !(central[j] > q_low[j])) {
                    usable[j] = false;
                    ++out.skipped_args;
                }
            }
            for (std::size_t i = 0; i < n; ++i) {
                double best = 0.0;
                for (std::size_t j = 0; j < k; ++j) {
                    if (!usable[j]) continue;
                    const double diff = c.curves(i, j) - central[j];
                    const double up = diff / (q_upp[j] - central[j]);
                    const double down = -diff / (central[j] - q_low[j]);
                    best = std::max(best, std::max(up, down));
                }
                out.u[i] = best;
            }
            break;
        }
    }
    return out;
}

DeviationVector deviation_vector(const std::vector<CurveSet>& parts, DeviationMeasure m,
                                 const DeviationOptions& opt) {
    if (parts.empty()) throw std::invalid_argument("deviation_vector: no parts");
    const std::size_t n = parts.front().curves.rows();
    DeviationVector dv;
    dv.u = Matrix(n, parts.size());
    for (std::size_t p = 0; p < parts.size(); ++p) {
        if (parts[p].curves.rows() != n)
            throw std::invalid_argument("deviation_vector: part '" + parts[p].name + "' disagrees on s");
        const DeviationColumn col = deviation_measure(parts[p], m, opt);
        for (std::size_t i = 0; i < n; ++i) dv.u(i, p) = col.u[i];
        dv.names.push_back(parts[p].name);
        dv.skipped_args += col.skipped_args;
    }
    return dv;
}

RankTestResult combined_deviation_test(const DeviationVector& dv, double alpha) {
    TestMatrix m(dv.u, Side::UpperExtreme);
    return run_rank_test(m, alpha);
}

DeviationMeasure deviation_measure_from_string(const std::string& s) {
    if (s == "intl2") return DeviationMeasure::IntL2;
    if (s == "max") return DeviationMeasure::Max;
    if (s == "scaledmaxq") return DeviationMeasure::ScaledMaxQ;
    throw std::invalid_argument("unknown deviation measure '" + s + "' (expected intl2|max|scaledmaxq)");
}

std::string to_string(DeviationMeasure m) {
    switch (m) {
        case DeviationMeasure::IntL2: return "intl2";
        case DeviationMeasure::Max: return "max";
        case DeviationMeasure::ScaledMaxQ: return "scaledmaxq";
    }
    return "intl2";
}

}  // namespace rankenv
