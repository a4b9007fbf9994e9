#include "rankenv/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rankenv {

std::string to_string(Decision d) {
    switch (d) {
        case Decision::Reject: return "reject";
        case Decision::NotReject: return "not_reject";
        case Decision::Undecided: return "undecided";
    }
    return "undecided";
}

PInterval p_interval(const std::vector<double>& extreme_ranks) {
    const std::size_t n = extreme_ranks.size();
    if (n < 2) throw std::invalid_argument("p_interval: need s >= 1 (length >= 2)");
    const double r1 = extreme_ranks[0];
    std::size_t le = 0, lt = 0;
    for (const double r : extreme_ranks) {
        if (r <= r1) ++le;
        if (r < r1) ++lt;
    }
    return {static_cast<double>(lt) / static_cast<double>(n),
            static_cast<double>(le) / static_cast<double>(n)};
}

double p_erc(const std::vector<std::int64_t>& erc_counts) {
    const std::size_t n = erc_counts.size();
    if (n < 2) throw std::invalid_argument("p_erc: need s >= 1 (length >= 2)");
    const std::int64_t c1 = erc_counts[0];
    std::size_t le = 0;
    for (const auto c : erc_counts)
        if (c <= c1) ++le;
    return static_cast<double>(le) / static_cast<double>(n);
}

double critical_rank(const std::vector<double>& extreme_ranks, double alpha) {
    const std::size_t n = extreme_ranks.size();
    if (n < 2) throw std::invalid_argument("critical_rank: need s >= 1 (length >= 2)");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("critical_rank: alpha must be in (0,1)");
    const auto dn = static_cast<double>(n);
    // largest k with k/n <= alpha, using the same comparison as the p-values
    auto below = [&](std::size_t k) { return static_cast<double>(k) / dn <= alpha; };
    std::size_t k = std::min<std::size_t>(n - 1, static_cast<std::size_t>(std::floor(alpha * dn)) + 2);
    while (k > 0 && !below(k)) --k;
    while (k + 1 < n && below(k + 1)) ++k;
    std::vector<double> sorted(extreme_ranks);
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
    return sorted[k];
}

GlobalEnvelope build_envelope(const TestMatrix& m, const std::vector<double>& extreme_ranks,
                              double alpha) {
    const std::size_t n = m.n_rows();
    const std::size_t d = m.dim();
    if (extreme_ranks.size() != n)
        throw std::invalid_argument("build_envelope: rank vector length does not match matrix rows");

    GlobalEnvelope env;
    env.alpha = alpha;
    env.critical_rank = critical_rank(extreme_ranks, alpha);

    std::vector<std::size_t> retained;
    retained.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        if (extreme_ranks[i] >= env.critical_rank) retained.push_back(i);
    if (retained.empty())
        throw std::runtime_error("build_envelope: no vectors at or above the critical rank");

    const double inf = std::numeric_limits<double>::infinity();
    env.lower.assign(d, -inf);
    env.upper.assign(d, inf);
    env.central.assign(d, 0.0);

    std::vector<double> sims(n - 1);
    for (std::size_t j = 0; j < d; ++j) {
        const Side side = m.sides[j];
        if (side != Side::UpperExtreme) {  // lower bound binds
            double lo = inf;
            for (const std::size_t i : retained) lo = std::min(lo, m.values(i, j));
            env.lower[j] = lo;
        }
        if (side != Side::LowerExtreme) {  // upper bound binds
            double hi = -inf;
            for (const std::size_t i : retained) hi = std::max(hi, m.values(i, j));
            env.upper[j] = hi;
        }
        for (std::size_t i = 1; i < n; ++i) sims[i - 1] = m.values(i, j);
        const std::size_t mid = sims.size() / 2;
        std::nth_element(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(mid), sims.end());
        if (sims.size() % 2 == 1) {
            env.central[j] = sims[mid];
        } else {
            const double hi = sims[mid];
            const double lo = *std::max_element(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(mid));
            env.central[j] = 0.5 * (lo + hi);
        }
    }
    return env;
}

Decision decide(const PInterval& p, double alpha) {
    if (p.p_plus <= alpha) return Decision::Reject;
    if (p.p_minus > alpha) return Decision::NotReject;
    return Decision::Undecided;
}

RankTestResult run_rank_test(const TestMatrix& m, double alpha, const ErcOptions& erc) {
    const Matrix pr = pointwise_ranks(m);
    const std::vector<double> r = extreme_ranks(pr);
    RankTestResult res;
    res.p_interval = p_interval(r);
    res.p_erc = p_erc(erc_ranks(pr, erc));
    res.envelope = build_envelope(m, r, alpha);
    res.decision = decide(res.p_interval, alpha);
    return res;
}

long recommend_simulations(long d, long k_functions, Side side, double alpha) {
    if (d < 1) throw std::invalid_argument("recommend_simulations: d >= 1 required");
    if (k_functions < 0) throw std::invalid_argument("recommend_simulations: k >= 0 required");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("recommend_simulations: alpha must be in (0,1)");
    if (k_functions >= 1) return k_functions * 2500;
    const double width = 0.01;
    const double numer = (side == Side::TwoSided) ? 2.0 * static_cast<double>(d)
                                                  : static_cast<double>(d);
    return static_cast<long>(std::ceil(numer / width)) - 1;
}

}  // namespace rankenv
