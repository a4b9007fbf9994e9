#include "rankenv/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace rankenv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;

std::size_t grid_ge(const std::vector<double>& grid, double v) {
    return static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), v) - grid.begin());
}
std::size_t grid_gt(const std::vector<double>& grid, double v) {
    return static_cast<std::size_t>(std::upper_bound(grid.begin(), grid.end(), v) - grid.begin());
}

void check_grid(const std::vector<double>& grid, const Window& w) {
    if (grid.empty()) throw std::invalid_argument("summary grid is empty");
    for (std::size_t k = 0; k + 1 < grid.size(); ++k)
        if (!(grid[k] < grid[k + 1])) throw std::invalid_argument("summary grid not strictly increasing");
    if (grid.front() < 0.0) throw std::invalid_argument("summary grid must be nonnegative");
    if (grid.back() > 0.5 * w.min_side() + 1e-12)
        throw std::invalid_argument("summary grid exceeds half the smaller window side");
}

/// Uniform bucket grid for nearest-neighbour queries clamped at `reach`;
/// distances beyond reach are reported as +inf, which is all the estimators
/// need.
class CellGrid {
public:
    CellGrid(const std::vector<double>& xs, const std::vector<double>& ys, const Window& w, double reach)
        : xs_(xs), ys_(ys), reach2_(reach * reach) {
        const double cell = std::max(std::max(reach, 1e-9), w.min_side() / 64.0);
        nx_ = std::max<std::size_t>(1, static_cast<std::size_t>(w.width() / cell));
        ny_ = std::max<std::size_t>(1, static_cast<std::size_t>(w.height() / cell));
        cw_ = w.width() / static_cast<double>(nx_);
        ch_ = w.height() / static_cast<double>(ny_);
        x0_ = w.xmin;
        y0_ = w.ymin;
        buckets_.assign(nx_ * ny_, {});
        for (std::size_t i = 0; i < xs.size(); ++i)
            buckets_[cell_index(xs[i], ys[i])].push_back(i);
    }

    double nn_distance(double x, double y, std::ptrdiff_t exclude = -1) const {
        const auto cx = static_cast<std::ptrdiff_t>(clampx((x - x0_) / cw_, nx_));
        const auto cy = static_cast<std::ptrdiff_t>(clampx((y - y0_) / ch_, ny_));
        double best = kInf;
        for (std::ptrdiff_t ax = cx - 1; ax <= cx + 1; ++ax) {
            if (ax < 0 || ax >= static_cast<std::ptrdiff_t>(nx_)) continue;
            for (std::ptrdiff_t ay = cy - 1; ay <= cy + 1; ++ay) {
                if (ay < 0 || ay >= static_cast<std::ptrdiff_t>(ny_)) continue;
                for (const std::size_t i : buckets_[static_cast<std::size_t>(ay) * nx_ + static_cast<std::size_t>(ax)]) {
                    if (static_cast<std::ptrdiff_t>(i) == exclude) continue;
                    const double dx = xs_[i] - x;
                    const double dy = ys_[i] - y;
                    best = std::min(best, dx * dx + dy * dy);
                }
            }
        }
        return best <= reach2_ ? std::sqrt(best) : kInf;
    }

    /// true if any point other than `exclude` lies strictly closer than sqrt(limit2)
    bool has_point_within(double x, double y, double limit2) const {
        const auto cx = static_cast<std::ptrdiff_t>(clampx((x - x0_) / cw_, nx_));
        const auto cy = static_cast<std::ptrdiff_t>(clampx((y - y0_) / ch_, ny_));
        for (std::ptrdiff_t ax = cx - 1; ax <= cx + 1; ++ax) {
            if (ax < 0 || ax >= static_cast<std::ptrdiff_t>(nx_)) continue;
            for (std::ptrdiff_t ay = cy - 1; ay <= cy + 1; ++ay) {
                if (ay < 0 || ay >= static_cast<std::ptrdiff_t>(ny_)) continue;
                for (const std::size_t i : buckets_[static_cast<std::size_t>(ay) * nx_ + static_cast<std::size_t>(ax)]) {
                    const double dx = xs_[i] - x;
                    const double dy = ys_[i] - y;
                    if (dx * dx + dy * dy < limit2) return true;
                }
            }
        }
        return false;
    }

    void insert(std::size_t i) { buckets_[cell_index(xs_[i], ys_[i])].push_back(i); }

private:
    static std::size_t clampx(double v, std::size_t n) {
        if (v < 0.0) return 0;
        const auto c = static_cast<std::size_t>(v);
        return c >= n ? n - 1 : c;
    }
    std::size_t cell_index(double x, double y) const {
        return clampx((y - y0_) / ch_, ny_) * nx_ + clampx((x - x0_) / cw_, nx_);
    }

    const std::vector<double>& xs_;
    const std::vector<double>& ys_;
    double reach2_;
    std::size_t nx_, ny_;
    double cw_, ch_, x0_, y0_;
    std::vector<std::vector<std::size_t>> buckets_;
};

// Visit every unordered pair with |dx| <= rmax and distance <= rmax,
// sweeping over x-sorted points.
template <typename Fn>
void for_close_pairs(const std::vector<double>& xs, const std::vector<double>& ys, double rmax, Fn&& fn) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    const double r2 = rmax * rmax;
    for (std::size_t a = 0; a < n; ++a) {
        const std::size_t i = order[a];
        for (std::size_t b = a + 1; b < n; ++b) {
            const std::size_t j = order[b];
            const double dx = xs[j] - xs[i];
            if (dx > rmax) break;
            const double dy = ys[j] - ys[i];
            if (dy > rmax || dy < -rmax) continue;
            const double d2 = dx * dx + dy * dy;
            if (d2 <= r2) fn(i, j, dx, dy, std::sqrt(d2));
        }
    }
}

// Ordered pairs (a in A) x (b in B) within rmax.
template <typename Fn>
void for_close_cross_pairs(const std::vector<double>& ax, const std::vector<double>& ay,
                           const std::vector<double>& bx, const std::vector<double>& by, double rmax,
                           Fn&& fn) {
    std::vector<std::size_t> oa(ax.size()), ob(bx.size());
    std::iota(oa.begin(), oa.end(), std::size_t{0});
    std::iota(ob.begin(), ob.end(), std::size_t{0});
    std::sort(oa.begin(), oa.end(), [&](std::size_t a, std::size_t b) { return ax[a] < ax[b]; });
    std::sort(ob.begin(), ob.end(), [&](std::size_t a, std::size_t b) { return bx[a] < bx[b]; });
    const double r2 = rmax * rmax;
    std::size_t lo = 0;
    for (const std::size_t i : oa) {
        while (lo < ob.size() && bx[ob[lo]] < ax[i] - rmax) ++lo;
        for (std::size_t t = lo; t < ob.size(); ++t) {
            const std::size_t j = ob[t];
            const double dx = bx[j] - ax[i];
            if (dx > rmax) break;
            const double dy = by[j] - ay[i];
            if (dy > rmax || dy < -rmax) continue;
            const double d2 = dx * dx + dy * dy;
            if (d2 <= r2) fn(i, j, dx, dy, std::sqrt(d2));
        }
    }
}

void carry_forward(std::vector<double>& v, double initial) {
    double last = initial;
    for (double& x : v) {
        if (std::isfinite(x)) last = x;
        else x = last;
    }
}

}  // namespace

// --- PointPattern ----------------------------------------------------------

std::vector<int> PointPattern::mark_values() const {
    std::vector<int> v(marks);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

PointPattern PointPattern::subpattern(int mark) const {
    PointPattern sub;
    sub.window = window;
    for (std::size_t i = 0; i < size(); ++i) {
        if (marks[i] == mark) {
            sub.x.push_back(x[i]);
            sub.y.push_back(y[i]);
        }
    }
    return sub;
}

void PointPattern::validate() const {
    window.validate();
    if (y.size() != x.size()) throw std::invalid_argument("PointPattern: x/y length mismatch");
    if (!marks.empty() && marks.size() != x.size())
        throw std::invalid_argument("PointPattern: mark vector length mismatch");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!window.contains(x[i], y[i]))
            throw std::invalid_argument("PointPattern: point " + std::to_string(i) + " outside the window");
}

PointPattern mark_union(const std::vector<PointPattern>& components) {
    if (components.empty()) throw std::invalid_argument("mark_union: no components");
    PointPattern out;
    out.window = components.front().window;
    for (std::size_t c = 0; c < components.size(); ++c) {
        for (std::size_t i = 0; i < components[c].size(); ++i) {
            out.x.push_back(components[c].x[i]);
            out.y.push_back(components[c].y[i]);
            out.marks.push_back(static_cast<int>(c) + 1);
        }
    }
    return out;
}

// --- generators --------------------------------------------------------------

namespace {

PointPattern generate_csr_count(long n, const Window& w, Rng& rng) {
    PointPattern p;
    p.window = w;
    p.x.resize(static_cast<std::size_t>(n));
    p.y.resize(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        p.x[static_cast<std::size_t>(i)] = rng.uniform(w.xmin, w.xmax);
        p.y[static_cast<std::size_t>(i)] = rng.uniform(w.ymin, w.ymax);
    }
    return p;
}

PointPattern generate_matclust(const MatClustModel& m, const Window& w, Rng& rng) {
    if (!(m.parent_intensity > 0.0) || !(m.cluster_radius > 0.0) || !(m.mean_per_cluster > 0.0))
        throw std::invalid_argument("matclust: parameters must be positive");
    // parents on the R-dilated window so clusters near the edge are unbiased
    const Window dil{w.xmin - m.cluster_radius, w.xmax + m.cluster_radius,
                     w.ymin - m.cluster_radius, w.ymax + m.cluster_radius};
    const long n_parents = rng.poisson(m.parent_intensity * dil.area());
    PointPattern p;
    p.window = w;
    for (long k = 0; k < n_parents; ++k) {
        const double px = rng.uniform(dil.xmin, dil.xmax);
        const double py = rng.uniform(dil.ymin, dil.ymax);
        const long nd = rng.poisson(m.mean_per_cluster);
        for (long t = 0; t < nd; ++t) {
            const double rad = m.cluster_radius * std::sqrt(rng.uniform());
            const double ang = 2.0 * kPi * rng.uniform();
            const double x = px + rad * std::cos(ang);
            const double y = py + rad * std::sin(ang);
            if (w.contains(x, y)) {
                p.x.push_back(x);
                p.y.push_back(y);
            }
        }
    }
    return p;
}

PointPattern generate_hardcore(const HardCoreModel& m, const Window& w, Rng& rng) {
    if (m.n < 0) throw std::invalid_argument("hardcore: n must be >= 0");
    if (m.min_distance < 0.0) throw std::invalid_argument("hardcore: min distance must be >= 0");
    const long budget = m.max_proposals > 0 ? m.max_proposals : 10000 * std::max<long>(m.n, 1);
    PointPattern p;
    p.window = w;
    p.x.reserve(static_cast<std::size_t>(m.n));
    p.y.reserve(static_cast<std::size_t>(m.n));
    CellGrid grid(p.x, p.y, w, std::max(m.min_distance, 1e-9));
    const double h2 = m.min_distance * m.min_distance;
    long attempts = 0;
    while (static_cast<long>(p.size()) < m.n) {
        if (attempts >= budget)
            throw std::runtime_error("hardcore: placed " + std::to_string(p.size()) + " of " +
                                     std::to_string(m.n) + " points after " + std::to_string(attempts) +
                                     " proposals; packing may be unachievable");
        ++attempts;
        const double x = rng.uniform(w.xmin, w.xmax);
        const double y = rng.uniform(w.ymin, w.ymax);
        if (m.min_distance > 0.0 && grid.has_point_within(x, y, h2)) continue;
        p.x.push_back(x);
        p.y.push_back(y);
        grid.insert(p.size() - 1);
    }
    return p;
}

}  // namespace

PointPattern generate(const ModelSpec& model, const Window& w, Rng& rng) {
    w.validate();
    return std::visit(
        [&](const auto& m) -> PointPattern {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, CsrModel>) {
                if (!(m.intensity > 0.0)) throw std::invalid_argument("csr: intensity must be positive");
                return generate_csr_count(rng.poisson(m.intensity * w.area()), w, rng);
            } else if constexpr (std::is_same_v<T, BinomialModel>) {
                if (m.n < 1) throw std::invalid_argument("binomial: n must be >= 1");
                return generate_csr_count(m.n, w, rng);
            } else if constexpr (std::is_same_v<T, MatClustModel>) {
                return generate_matclust(m, w, rng);
            } else if constexpr (std::is_same_v<T, HardCoreModel>) {
                return generate_hardcore(m, w, rng);
            } else {
                PointPattern a = generate_matclust(m.first, w, rng);
                const PointPattern b = generate_matclust(m.second, w, rng);
                a.x.insert(a.x.end(), b.x.begin(), b.x.end());
                a.y.insert(a.y.end(), b.y.begin(), b.y.end());
                return a;
            }
        },
        model);
}

// --- summary estimators ------------------------------------------------------

namespace {

// Pair-count (Ripley) estimate via weighted distance histogram + prefix sum.
std::vector<double> k_function(const PointPattern& p, const std::vector<double>& grid,
                               EdgeCorrection corr) {
    const std::size_t n = p.size();
    const std::size_t kk = grid.size();
    const double area = p.window.area();
    const double rmax = grid.back();
    std::vector<double> acc(kk + 1, 0.0);

    switch (corr) {
        case EdgeCorrection::None: {
            const double w = 2.0 * area / (static_cast<double>(n) * static_cast<double>(n - 1));
            for_close_pairs(p.x, p.y, rmax, [&](std::size_t, std::size_t, double, double, double d) {
                acc[grid_ge(grid, d)] += w;
            });
            std::vector<double> k(kk);
            double run = 0.0;
            for (std::size_t t = 0; t < kk; ++t) {
                run += acc[t];
                k[t] = run;
            }
            return k;
        }
        case EdgeCorrection::Translational: {
            const double w0 = 2.0 * area * area / (static_cast<double>(n) * static_cast<double>(n - 1));
            const double ww = p.window.width(), wh = p.window.height();
            for_close_pairs(p.x, p.y, rmax, [&](std::size_t, std::size_t, double dx, double dy, double d) {
                const double overlap = (ww - std::abs(dx)) * (wh - std::abs(dy));
                acc[grid_ge(grid, d)] += w0 / overlap;
            });
            std::vector<double> k(kk);
            double run = 0.0;
            for (std::size_t t = 0; t < kk; ++t) {
                run += acc[t];
                k[t] = run;
            }
            return k;
        }
        case EdgeCorrection::Border: {
            // numerator: ordered pairs with d <= r < b_center; denominator:
            // points with b_i > r
            std::vector<double> num(kk + 1, 0.0), den(kk + 1, 0.0);
            std::vector<double> bdist(n);
            for (std::size_t i = 0; i < n; ++i) {
                bdist[i] = p.window.boundary_distance(p.x[i], p.y[i]);
                den[0] += 1.0;
                den[grid_ge(grid, bdist[i])] -= 1.0;
            }
            for_close_pairs(p.x, p.y, rmax, [&](std::size_t i, std::size_t j, double, double, double d) {
                for (const std::size_t c : {i, j}) {
                    if (bdist[c] > d) {
                        num[grid_ge(grid, d)] += 1.0;
                        num[grid_ge(grid, bdist[c])] -= 1.0;
                    }
                }
            });
            std::vector<double> k(kk);
            const double lambda = static_cast<double>(n) / area;
            double nrun = 0.0, drun = 0.0;
            for (std::size_t t = 0; t < kk; ++t) {
                nrun += num[t];
                drun += den[t];
                k[t] = drun > 0.0 ? nrun / (lambda * drun) : kInf;
            }
            carry_forward(k, 0.0);
            return k;
        }
    }
    throw std::logic_error("k_function: unknown correction");
}

std::vector<double> l_from_k(std::vector<double> k) {
    for (double& v : k) v = std::sqrt(std::max(v, 0.0) / kPi);
    return k;
}

std::vector<double> cross_k_function(const PointPattern& p, int from, int to,
                                     const std::vector<double>& grid, EdgeCorrection corr) {
    if (!p.marked()) throw std::invalid_argument("cross summary requires a marked pattern");
    if (corr == EdgeCorrection::Border)
        throw std::invalid_argument("cross L supports the translational or no correction");
    const PointPattern a = p.subpattern(from);
    if (from == to) {
        if (a.size() < 2)
            throw std::invalid_argument("cross L: fewer than 2 points of type " + std::to_string(from));
        return k_function(a, grid, corr);
    }
    const PointPattern b = p.subpattern(to);
    if (a.size() < 1) throw std::invalid_argument("cross L: no points of type " + std::to_string(from));
    if (b.size() < 1) throw std::invalid_argument("cross L: no points of type " + std::to_string(to));

    const std::size_t kk = grid.size();
    const double area = p.window.area();
    const double rmax = grid.back();
    const double ww = p.window.width(), wh = p.window.height();
    const double w0 = area * area / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
    std::vector<double> acc(kk + 1, 0.0);
    for_close_cross_pairs(a.x, a.y, b.x, b.y, rmax,
                          [&](std::size_t, std::size_t, double dx, double dy, double d) {
                              double w = w0 / area;
                              if (corr == EdgeCorrection::Translational)
                                  w = w0 / ((ww - std::abs(dx)) * (wh - std::abs(dy)));
                              acc[grid_ge(grid, d)] += w;
                          });
    std::vector<double> k(kk);
    double run = 0.0;
    for (std::size_t t = 0; t < kk; ++t) {
        run += acc[t];
        k[t] = run;
    }
    return k;
}

// shared reduced-sample machinery for F and G: distances d_i paired with
// boundary distances b_i
std::vector<double> reduced_sample_cdf(const std::vector<double>& dist, const std::vector<double>& bdist,
                                       const std::vector<double>& grid, bool border) {
    const std::size_t kk = grid.size();
    std::vector<double> num(kk + 1, 0.0), den(kk + 1, 0.0);
    for (std::size_t i = 0; i < dist.size(); ++i) {
        if (border) {
            const std::size_t stop = grid_gt(grid, bdist[i]);  // r <= b_i
            if (std::isfinite(dist[i])) {
                const std::size_t start = grid_ge(grid, dist[i]);  // r >= d_i
                if (start < stop) {
                    num[start] += 1.0;
                    num[stop] -= 1.0;
                }
            }
            den[0] += 1.0;
            den[stop] -= 1.0;
        } else {
            if (std::isfinite(dist[i])) num[grid_ge(grid, dist[i])] += 1.0;
            den[0] += 1.0;
        }
    }
    std::vector<double> cdf(kk);
    double nrun = 0.0, drun = 0.0;
    for (std::size_t t = 0; t < kk; ++t) {
        nrun += num[t];
        drun += den[t];
        cdf[t] = drun > 0.0 ? nrun / drun : kInf;
    }
    carry_forward(cdf, 0.0);
    return cdf;
}

}  // namespace

std::vector<double> empty_space_function(const PointPattern& p, const std::vector<double>& grid,
                                         EdgeCorrection corr, int lattice) {
    if (p.size() < 1) throw std::invalid_argument("empty space function: empty pattern");
    if (corr == EdgeCorrection::Translational)
        throw std::invalid_argument("empty space function supports the border or no correction");
    if (lattice < 2) throw std::invalid_argument("empty space function: lattice must be >= 2");
    check_grid(grid, p.window);

    const CellGrid cells(p.x, p.y, p.window, grid.back());
    const auto m = static_cast<std::size_t>(lattice);
    std::vector<double> dist, bdist;
    dist.reserve(m * m);
    bdist.reserve(m * m);
    const double sx = p.window.width() / static_cast<double>(m);
    const double sy = p.window.height() / static_cast<double>(m);
    for (std::size_t a = 0; a < m; ++a) {
        const double ux = p.window.xmin + (static_cast<double>(a) + 0.5) * sx;
        for (std::size_t b = 0; b < m; ++b) {
            const double uy = p.window.ymin + (static_cast<double>(b) + 0.5) * sy;
            dist.push_back(cells.nn_distance(ux, uy));
            bdist.push_back(p.window.boundary_distance(ux, uy));
        }
    }
    return reduced_sample_cdf(dist, bdist, grid, corr == EdgeCorrection::Border);
}

std::vector<double> nearest_neighbour_function(const PointPattern& p, const std::vector<double>& grid,
                                               EdgeCorrection corr) {
    if (p.size() < 2) throw std::invalid_argument("nearest neighbour function: need at least 2 points");
    if (corr == EdgeCorrection::Translational)
        throw std::invalid_argument("nearest neighbour function supports the border or no correction");
    check_grid(grid, p.window);

    const CellGrid cells(p.x, p.y, p.window, grid.back());
    std::vector<double> dist(p.size()), bdist(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        dist[i] = cells.nn_distance(p.x[i], p.y[i], static_cast<std::ptrdiff_t>(i));
        bdist[i] = p.window.boundary_distance(p.x[i], p.y[i]);
    }
    return reduced_sample_cdf(dist, bdist, grid, corr == EdgeCorrection::Border);
}

std::vector<double> j_from_fg(const std::vector<double>& f, const std::vector<double>& g,
                              double truncation) {
    if (f.size() != g.size()) throw std::invalid_argument("j_from_fg: length mismatch");
    std::vector<double> j(f.size());
    double last = 1.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
        const double denom = 1.0 - f[k];
        if (denom >= truncation) last = (1.0 - g[k]) / denom;
        j[k] = last;
    }
    return j;
}

std::vector<double> estimate_summary(const PointPattern& p, const SummarySpec& spec) {
    p.validate();
    check_grid(spec.grid, p.window);
    switch (spec.function) {
        case SummaryFunction::L:
            if (p.size() < 2) throw std::invalid_argument("L function: need at least 2 points");
            return l_from_k(k_function(p, spec.grid, spec.correction));
        case SummaryFunction::F:
            return empty_space_function(p, spec.grid, EdgeCorrection::Border, spec.f_lattice);
        case SummaryFunction::G:
            return nearest_neighbour_function(p, spec.grid, EdgeCorrection::Border);
        case SummaryFunction::J: {
            const auto f = empty_space_function(p, spec.grid, EdgeCorrection::Border, spec.f_lattice);
            const auto g = nearest_neighbour_function(p, spec.grid, EdgeCorrection::Border);
            return j_from_fg(f, g, spec.j_truncation);
        }
        case SummaryFunction::CrossL:
            return l_from_k(cross_k_function(p, spec.cross_from, spec.cross_to, spec.grid, spec.correction));
    }
    throw std::logic_error("estimate_summary: unknown function");
}

// --- toroidal shift -----------------------------------------------------------

PointPattern random_shift(const PointPattern& p, const std::set<int>& fixed_types, Rng& rng) {
    p.validate();
    if (!p.marked()) throw std::invalid_argument("random_shift: pattern must be marked");
    const std::vector<int> types = p.mark_values();
    if (types.size() < 2) throw std::invalid_argument("random_shift: need at least 2 types");

    const double w = p.window.width(), h = p.window.height();
    PointPattern out = p;
    for (const int t : types) {
        if (fixed_types.count(t)) continue;
        const double ux = rng.uniform(0.0, w);
        const double uy = rng.uniform(0.0, h);
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (p.marks[i] != t) continue;
            double nx = std::fmod(p.x[i] - p.window.xmin + ux, w);
            double ny = std::fmod(p.y[i] - p.window.ymin + uy, h);
            out.x[i] = p.window.xmin + nx;
            out.y[i] = p.window.ymin + ny;
        }
    }
    return out;
}

// --- fitting -------------------------------------------------------------------

CsrModel fit_csr(const PointPattern& p) {
    if (p.size() == 0) throw std::invalid_argument("fit_csr: empty pattern");
    return {static_cast<double>(p.size()) / p.window.area()};
}

std::vector<double> pair_correlation(const PointPattern& p, const std::vector<double>& r,
                                     double bandwidth) {
    if (p.size() < 2) throw std::invalid_argument("pair_correlation: need at least 2 points");
    if (!(bandwidth > 0.0)) throw std::invalid_argument("pair_correlation: bandwidth must be positive");
    const std::size_t kk = r.size();
    const double area = p.window.area();
    const auto n = static_cast<double>(p.size());
    const double ww = p.window.width(), wh = p.window.height();
    const double w0 = 2.0 * area * area / (n * (n - 1.0));
    const double rmax = r.back() + bandwidth;

    std::vector<double> acc(kk, 0.0);
    for_close_pairs(p.x, p.y, rmax, [&](std::size_t, std::size_t, double dx, double dy, double d) {
        const double overlap = (ww - std::abs(dx)) * (wh - std::abs(dy));
        const double w = w0 / overlap;
        const std::size_t lo = grid_ge(r, d - bandwidth);
        for (std::size_t t = lo; t < kk && r[t] <= d + bandwidth; ++t) {
            const double u = (r[t] - d) / bandwidth;
            acc[t] += w * 0.75 * (1.0 - u * u) / bandwidth;
        }
    });
    for (std::size_t t = 0; t < kk; ++t)
        acc[t] = r[t] > 1e-12 ? acc[t] / (2.0 * kPi * r[t]) : 0.0;
    return acc;
}

double matclust_pcf(double r, double parent_intensity, double cluster_radius) {
    if (!(parent_intensity > 0.0) || !(cluster_radius > 0.0))
        throw std::invalid_argument("matclust_pcf: parameters must be positive");
    const double z = r / (2.0 * cluster_radius);
    if (z >= 1.0 || r < 0.0) return 1.0;
    const double bump = std::acos(z) - z * std::sqrt(1.0 - z * z);
    return 1.0 + 2.0 * bump / (kPi * kPi * cluster_radius * cluster_radius * parent_intensity);
}

namespace {

template <typename F>
std::pair<std::array<double, 2>, double> nelder_mead_2d(F f, std::array<double, 2> start,
                                                        double step, int max_iter) {
    std::array<std::array<double, 2>, 3> pts{start,
                                             {start[0] + step, start[1]},
                                             {start[0], start[1] + step}};
    std::array<double, 3> vals{f(pts[0]), f(pts[1]), f(pts[2])};
    for (int it = 0; it < max_iter; ++it) {
        std::array<std::size_t, 3> ord{0, 1, 2};
        std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
        const auto [b, m, w] = std::tuple{ord[0], ord[1], ord[2]};
        if (std::abs(vals[w] - vals[b]) < 1e-12 * (1.0 + std::abs(vals[b]))) break;
        const std::array<double, 2> cen{0.5 * (pts[b][0] + pts[m][0]), 0.5 * (pts[b][1] + pts[m][1])};
        auto at = [&](double t) {
            return std::array<double, 2>{cen[0] + t * (pts[w][0] - cen[0]), cen[1] + t * (pts[w][1] - cen[1])};
        };
        const auto refl = at(-1.0);
        const double fr = f(refl);
        if (fr < vals[b]) {
            const auto exp_pt = at(-2.0);
            const double fe = f(exp_pt);
            if (fe < fr) {
                pts[w] = exp_pt;
                vals[w] = fe;
            } else {
                pts[w] = refl;
                vals[w] = fr;
            }
        } else if (fr < vals[m]) {
            pts[w] = refl;
            vals[w] = fr;
        } else {
            const auto con = at(0.5);
            const double fc = f(con);
            if (fc < vals[w]) {
                pts[w] = con;
                vals[w] = fc;
            } else {
                for (const std::size_t i : {m, w}) {
                    pts[i] = {0.5 * (pts[i][0] + pts[b][0]), 0.5 * (pts[i][1] + pts[b][1])};
                    vals[i] = f(pts[i]);
                }
            }
        }
    }
    const std::size_t best = static_cast<std::size_t>(
        std::min_element(vals.begin(), vals.end()) - vals.begin());
    return {pts[best], vals[best]};
}

}  // namespace

MatClustModel fit_matclust(const PointPattern& p, const MinContrastOptions& opt) {
    if (p.size() < 2) throw std::invalid_argument("fit_matclust: need at least 2 points");
    const double lambda = static_cast<double>(p.size()) / p.window.area();
    const double bw = opt.bandwidth > 0.0 ? opt.bandwidth : 0.15 / std::sqrt(lambda);

    const double r_lo = std::max(bw, opt.r_max / static_cast<double>(opt.n_r));
    if (!(r_lo < opt.r_max)) throw std::invalid_argument("fit_matclust: contrast range too narrow");
    std::vector<double> r(static_cast<std::size_t>(opt.n_r));
    const double dr = (opt.r_max - r_lo) / static_cast<double>(opt.n_r - 1);
    for (std::size_t t = 0; t < r.size(); ++t) r[t] = r_lo + dr * static_cast<double>(t);

    const std::vector<double> ghat = pair_correlation(p, r, bw);
    std::vector<double> ghat_q(ghat.size());
    for (std::size_t t = 0; t < ghat.size(); ++t) ghat_q[t] = std::pow(std::max(ghat[t], 0.0), opt.exponent);

    const double kappa_lo = lambda / 1000.0, kappa_hi = 10.0 * lambda;
    const double radius_lo = 1e-4 * p.window.min_side(), radius_hi = 0.5 * p.window.min_side();
    auto contrast = [&](const std::array<double, 2>& logs) {
        const double kappa = std::exp(logs[0]);
        const double radius = std::exp(logs[1]);
        if (kappa < kappa_lo || kappa > kappa_hi || radius < radius_lo || radius > radius_hi)
            return 1e12;
        double acc = 0.0;
        for (std::size_t t = 0; t < r.size(); ++t) {
            const double gq = std::pow(matclust_pcf(r[t], kappa, radius), opt.exponent);
            const double diff = ghat_q[t] - gq;
            acc += diff * diff * dr;
        }
        return acc;
    };

    // coarse grid start, then simplex refinement
    std::array<double, 2> best{std::log(lambda / 4.0), std::log(0.05 * p.window.min_side())};
    double best_val = contrast(best);
    for (const double kf : {0.015625, 0.03125, 0.0625, 0.125, 0.25, 0.5, 1.0, 2.0}) {
        for (const double rf : {0.005, 0.01, 0.02, 0.04, 0.08, 0.16, 0.3}) {
            const std::array<double, 2> cand{std::log(lambda * kf), std::log(rf * p.window.min_side())};
            const double v = contrast(cand);
            if (v < best_val) {
                best = cand;
                best_val = v;
            }
        }
    }
    const auto [sol, val] = nelder_mead_2d(contrast, best, 0.4, 300);
    if (!std::isfinite(val) || val >= 1e12) {
        std::ostringstream os;
        os << "fit_matclust: contrast minimization failed; best iterate kappa=" << std::exp(sol[0])
           << " radius=" << std::exp(sol[1]) << " contrast=" << val;
        throw std::runtime_error(os.str());
    }
    MatClustModel m;
    m.parent_intensity = std::exp(sol[0]);
    m.cluster_radius = std::exp(sol[1]);
    m.mean_per_cluster = static_cast<double>(p.size()) / (m.parent_intensity * p.window.area());
    return m;
}

// --- string forms ----------------------------------------------------------------

namespace {

std::vector<double> parse_params(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        std::size_t pos = 0;
        const double v = std::stod(tok, &pos);
        out.push_back(v);
    }
    return out;
}

}  // namespace

ModelSpec model_from_string(const std::string& spec) {
    const std::size_t colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::vector<double> par =
        colon == std::string::npos ? std::vector<double>{} : parse_params(spec.substr(colon + 1));
    auto need = [&](std::size_t n) {
        if (par.size() != n)
            throw std::invalid_argument("model '" + kind + "' expects " + std::to_string(n) + " parameters");
    };
    if (kind == "csr") {
        need(1);
        return CsrModel{par[0]};
    }
    if (kind == "binomial") {
        need(1);
        return BinomialModel{static_cast<long>(par[0])};
    }
    if (kind == "matclust") {
        need(3);
        return MatClustModel{par[0], par[1], par[2]};
    }
    if (kind == "hardcore") {
        need(2);
        return HardCoreModel{static_cast<long>(par[0]), par[1]};
    }
    if (kind == "superposition") {
        need(6);
        return SuperpositionModel{{par[0], par[1], par[2]}, {par[3], par[4], par[5]}};
    }
    throw std::invalid_argument("unknown model '" + kind +
                                "' (expected csr|binomial|matclust|hardcore|superposition)");
}

std::string to_string(const ModelSpec& model) {
    std::ostringstream os;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, CsrModel>) {
                os << "csr:" << m.intensity;
            } else if constexpr (std::is_same_v<T, BinomialModel>) {
                os << "binomial:" << m.n;
            } else if constexpr (std::is_same_v<T, MatClustModel>) {
                os << "matclust:" << m.parent_intensity << "," << m.cluster_radius << ","
                   << m.mean_per_cluster;
            } else if constexpr (std::is_same_v<T, HardCoreModel>) {
                os << "hardcore:" << m.n << "," << m.min_distance;
            } else {
                os << "superposition:" << m.first.parent_intensity << "," << m.first.cluster_radius << ","
                   << m.first.mean_per_cluster << "," << m.second.parent_intensity << ","
                   << m.second.cluster_radius << "," << m.second.mean_per_cluster;
            }
        },
        model);
    return os.str();
}

SummaryFunction summary_from_string(const std::string& s) {
    if (s == "L") return SummaryFunction::L;
    if (s == "F") return SummaryFunction::F;
    if (s == "G") return SummaryFunction::G;
    if (s == "J") return SummaryFunction::J;
    if (s == "crossL") return SummaryFunction::CrossL;
    throw std::invalid_argument("unknown summary function '" + s + "' (expected L|F|G|J|crossL)");
}

std::string to_string(SummaryFunction f) {
    switch (f) {
        case SummaryFunction::L: return "L";
        case SummaryFunction::F: return "F";
        case SummaryFunction::G: return "G";
        case SummaryFunction::J: return "J";
        case SummaryFunction::CrossL: return "crossL";
    }
    return "L";
}

EdgeCorrection correction_from_string(const std::string& s) {
    if (s == "none") return EdgeCorrection::None;
    if (s == "translational") return EdgeCorrection::Translational;
    if (s == "border") return EdgeCorrection::Border;
    throw std::invalid_argument("unknown edge correction '" + s + "'");
}

FitFamily fit_family_from_string(const std::string& s) {
    if (s == "none") return FitFamily::None;
    if (s == "csr") return FitFamily::Csr;
    if (s == "matclust") return FitFamily::MatClustMinContrast;
    throw std::invalid_argument("unknown fit family '" + s + "' (expected none|csr|matclust)");
}

}  // namespace rankenv
