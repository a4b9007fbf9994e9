#include "rankenv/study.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rankenv/rank.hpp"

namespace rankenv {

std::vector<std::vector<double>> summary_curves(const PointPattern& p,
                                                const std::vector<SummaryFunction>& fns,
                                                const std::vector<double>& grid, EdgeCorrection corr,
                                                int f_lattice, double j_truncation) {
    std::optional<std::vector<double>> fhat, ghat;
    bool need_f = false, need_g = false;
    for (const auto fn : fns) {
        if (fn == SummaryFunction::F || fn == SummaryFunction::J) need_f = true;
        if (fn == SummaryFunction::G || fn == SummaryFunction::J) need_g = true;
    }
    if (need_f) fhat = empty_space_function(p, grid, EdgeCorrection::Border, f_lattice);
    if (need_g) ghat = nearest_neighbour_function(p, grid, EdgeCorrection::Border);

    std::vector<std::vector<double>> out;
    out.reserve(fns.size());
    for (const auto fn : fns) {
        switch (fn) {
            case SummaryFunction::F: out.push_back(*fhat); break;
            case SummaryFunction::G: out.push_back(*ghat); break;
            case SummaryFunction::J: out.push_back(j_from_fg(*fhat, *ghat, j_truncation)); break;
            default: {
                SummarySpec spec;
                spec.function = fn;
                spec.grid = grid;
                spec.correction = corr;
                spec.f_lattice = f_lattice;
                out.push_back(estimate_summary(p, spec));
            }
        }
    }
    return out;
}

namespace {

ModelSpec null_model_for(const PointPattern& p, FitFamily fit, const std::optional<ModelSpec>& given,
                         double r_max) {
    switch (fit) {
        case FitFamily::None:
            if (!given) throw std::invalid_argument("null model required when no fitting is requested");
            return *given;
        case FitFamily::Csr:
            return fit_csr(p);
        case FitFamily::MatClustMinContrast: {
            MinContrastOptions opt;
            opt.r_max = r_max;
            return fit_matclust(p, opt);
        }
    }
    throw std::logic_error("unknown fit family");
}

std::string pattern_part_name(std::size_t pattern_idx, std::size_t n_patterns, SummaryFunction fn) {
    if (n_patterns == 1) return to_string(fn);
    return "pattern" + std::to_string(pattern_idx + 1) + ":" + to_string(fn);
}

}  // namespace

std::string combo_label(const std::vector<SummaryFunction>& fns) {
    std::string label;
    for (std::size_t i = 0; i < fns.size(); ++i) {
        if (i) label += ',';
        label += to_string(fns[i]);
    }
    return label;
}

GofOutput run_gof(const std::vector<PointPattern>& patterns, const GofConfig& cfg) {
    if (patterns.empty()) throw std::invalid_argument("run_gof: no patterns");
    if (cfg.functions.empty()) throw std::invalid_argument("run_gof: no summary functions");
    if (cfg.n_sim < 1) throw std::invalid_argument("run_gof: need at least one simulation");
    const std::vector<double> grid = make_grid(cfg.r_min, cfg.r_max, static_cast<std::size_t>(cfg.grid_points));
    const std::size_t kk = grid.size();
    const auto n_rows = static_cast<std::size_t>(cfg.n_sim) + 1;

    GofOutput out;
    out.n_sim = cfg.n_sim;
    for (std::size_t pi = 0; pi < patterns.size(); ++pi) {
        const PointPattern& obs = patterns[pi];
        obs.validate();
        const ModelSpec null_model = null_model_for(obs, cfg.fit, cfg.null_model, cfg.r_max);

        std::vector<CurveSet> parts(cfg.functions.size());
        for (std::size_t fi = 0; fi < cfg.functions.size(); ++fi) {
            parts[fi].args = grid;
            parts[fi].curves = Matrix(n_rows, kk);
            parts[fi].name = pattern_part_name(pi, patterns.size(), cfg.functions[fi]);
            parts[fi].side = Side::TwoSided;
        }
        const auto observed_curves =
            summary_curves(obs, cfg.functions, grid, cfg.correction, cfg.f_lattice);
        for (std::size_t fi = 0; fi < cfg.functions.size(); ++fi)
            std::copy(observed_curves[fi].begin(), observed_curves[fi].end(), parts[fi].curves.row(0).begin());

#pragma omp parallel for schedule(dynamic)
        for (long k = 1; k <= cfg.n_sim; ++k) {
            Rng rng(cfg.seed, pi, static_cast<std::uint64_t>(k));
            const PointPattern sim = generate(null_model, obs.window, rng);
            const auto curves = summary_curves(sim, cfg.functions, grid, cfg.correction, cfg.f_lattice);
            for (std::size_t fi = 0; fi < cfg.functions.size(); ++fi)
                std::copy(curves[fi].begin(), curves[fi].end(),
                          parts[fi].curves.row(static_cast<std::size_t>(k)).begin());
        }
        for (auto& part : parts) out.parts.push_back(std::move(part));
    }

    const CombinedTestMatrix combined = concatenate(out.parts);
    out.layout = combined.parts;
    out.result = run_rank_test(combined.matrix, cfg.alpha);
    return out;
}

GofOutput run_shift_test(const PointPattern& marked, const ShiftTestConfig& cfg) {
    marked.validate();
    if (!marked.marked()) throw std::invalid_argument("run_shift_test: pattern must be marked");
    const std::vector<int> types = marked.mark_values();
    if (types.size() < 2) throw std::invalid_argument("run_shift_test: need at least 2 types");
    if (cfg.n_sim < 1) throw std::invalid_argument("run_shift_test: need at least one simulation");

    std::set<int> fixed = cfg.fixed_types;
    if (fixed.empty()) fixed.insert(types.front());

    const std::vector<double> grid = make_grid(cfg.r_min, cfg.r_max, static_cast<std::size_t>(cfg.grid_points));
    const std::size_t kk = grid.size();
    const auto n_rows = static_cast<std::size_t>(cfg.n_sim) + 1;

    std::vector<std::pair<int, int>> pairs;
    for (std::size_t a = 0; a < types.size(); ++a)
        for (std::size_t b = a + 1; b < types.size(); ++b) pairs.emplace_back(types[a], types[b]);

    GofOutput out;
    out.n_sim = cfg.n_sim;
    out.parts.resize(pairs.size());
    for (std::size_t t = 0; t < pairs.size(); ++t) {
        out.parts[t].args = grid;
        out.parts[t].curves = Matrix(n_rows, kk);
        out.parts[t].name = "L" + std::to_string(pairs[t].first) + std::to_string(pairs[t].second);
        out.parts[t].side = Side::TwoSided;
    }

    auto cross_curves = [&](const PointPattern& p, std::size_t row) {
        for (std::size_t t = 0; t < pairs.size(); ++t) {
            SummarySpec spec;
            spec.function = SummaryFunction::CrossL;
            spec.grid = grid;
            spec.correction = cfg.correction;
            spec.cross_from = pairs[t].first;
            spec.cross_to = pairs[t].second;
            const auto curve = estimate_summary(p, spec);
            std::copy(curve.begin(), curve.end(), out.parts[t].curves.row(row).begin());
        }
    };
    cross_curves(marked, 0);

#pragma omp parallel for schedule(dynamic)
    for (long k = 1; k <= cfg.n_sim; ++k) {
        Rng rng(cfg.seed, static_cast<std::uint64_t>(k));
        const PointPattern shifted = random_shift(marked, fixed, rng);
        cross_curves(shifted, static_cast<std::size_t>(k));
    }

    const CombinedTestMatrix combined = concatenate(out.parts);
    out.layout = combined.parts;
    out.result = run_rank_test(combined.matrix, cfg.alpha);
    return out;
}

StudyReport run_power_study(const PowerStudyConfig& cfg) {
    if (cfg.combos.empty()) throw std::invalid_argument("run_power_study: no function combinations");
    if (cfg.replications < 1) throw std::invalid_argument("run_power_study: replications >= 1 required");
    const auto t0 = std::chrono::steady_clock::now();

    // stable union of all requested functions
    std::vector<SummaryFunction> universe;
    for (const auto& combo : cfg.combos)
        for (const auto fn : combo)
            if (std::find(universe.begin(), universe.end(), fn) == universe.end()) universe.push_back(fn);
    std::vector<std::vector<std::size_t>> combo_cols(cfg.combos.size());
    for (std::size_t c = 0; c < cfg.combos.size(); ++c)
        for (const auto fn : cfg.combos[c]) {
            const auto fi = static_cast<std::size_t>(
                std::find(universe.begin(), universe.end(), fn) - universe.begin());
            combo_cols[c].push_back(fi);
        }

    const std::vector<double> grid = make_grid(cfg.r_min, cfg.r_max, static_cast<std::size_t>(cfg.grid_points));
    const std::size_t kk = grid.size();
    const std::size_t total_cols = kk * universe.size();
    const auto n_rows = static_cast<std::size_t>(cfg.n_sim) + 1;
    const std::size_t n_combos = cfg.combos.size();
    const auto n_rep = static_cast<std::size_t>(cfg.replications);

    std::vector<std::uint8_t> failed(n_rep, 0);
    std::vector<double> erc_p(n_rep * n_combos, 1.0);
    std::vector<std::int8_t> decisions(n_rep * n_combos, 0);  // -1 nr, 0 und, +1 rej

#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t rr = 0; rr < static_cast<std::ptrdiff_t>(n_rep); ++rr) {
        const auto rep = static_cast<std::size_t>(rr);
        try {
            Rng rep_rng(cfg.seed, rep, 0);
            const PointPattern obs = generate(cfg.true_model, cfg.window, rep_rng);
            const ModelSpec null_model = null_model_for(obs, cfg.fit, cfg.null_model, cfg.r_max);

            TestMatrix m(Matrix(n_rows, total_cols), Side::TwoSided);
            const auto obs_curves = summary_curves(obs, universe, grid, cfg.correction, cfg.f_lattice);
            for (std::size_t fi = 0; fi < universe.size(); ++fi)
                std::copy(obs_curves[fi].begin(), obs_curves[fi].end(),
                          m.values.row(0).begin() + static_cast<std::ptrdiff_t>(fi * kk));
            for (long k = 1; k <= cfg.n_sim; ++k) {
                Rng rng(cfg.seed, rep, static_cast<std::uint64_t>(k));
                const PointPattern sim = generate(null_model, cfg.window, rng);
                const auto curves = summary_curves(sim, universe, grid, cfg.correction, cfg.f_lattice);
                for (std::size_t fi = 0; fi < universe.size(); ++fi)
                    std::copy(curves[fi].begin(), curves[fi].end(),
                              m.values.row(static_cast<std::size_t>(k)).begin() +
                                  static_cast<std::ptrdiff_t>(fi * kk));
            }

            const Matrix pr = pointwise_ranks(m);
            for (std::size_t c = 0; c < n_combos; ++c) {
                // extreme ranks over this combination's columns
                std::vector<double> r(n_rows);
                Matrix sub(n_rows, combo_cols[c].size() * kk);
                for (std::size_t i = 0; i < n_rows; ++i) {
                    double mn = std::numeric_limits<double>::infinity();
                    std::size_t sc = 0;
                    for (const std::size_t fi : combo_cols[c]) {
                        for (std::size_t j = 0; j < kk; ++j, ++sc) {
                            const double v = pr(i, fi * kk + j);
                            mn = std::min(mn, v);
                            sub(i, sc) = v;
                        }
                    }
                    r[i] = mn;
                }
                const PInterval pi = p_interval(r);
                erc_p[rep * n_combos + c] = p_erc(erc_ranks(sub));
                const Decision dec = decide(pi, cfg.alpha);
                decisions[rep * n_combos + c] =
                    dec == Decision::Reject ? 1 : (dec == Decision::NotReject ? -1 : 0);
            }
        } catch (const std::exception&) {
            failed[rep] = 1;
        }
    }

    StudyReport report;
    report.replications = cfg.replications;
    for (std::size_t c = 0; c < n_combos; ++c) {
        StudyCell cell;
        cell.label = combo_label(cfg.combos[c]);
        long n_ok = 0;
        for (std::size_t rep = 0; rep < n_rep; ++rep) {
            if (failed[rep]) continue;
            ++n_ok;
            if (erc_p[rep * n_combos + c] <= cfg.alpha) ++cell.rejections;
            const auto dec = decisions[rep * n_combos + c];
            if (dec > 0) ++cell.reject;
            else if (dec < 0) ++cell.not_reject;
            else ++cell.undecided;
        }
        if (n_ok > 0) {
            const double p = static_cast<double>(cell.rejections) / static_cast<double>(n_ok);
            const double half = 1.96 * std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n_ok));
            cell.proportion = p;
            cell.ci_low = std::max(0.0, p - half);
            cell.ci_high = std::min(1.0, p + half);
        }
        report.cells.push_back(cell);
    }
    for (std::size_t rep = 0; rep < n_rep; ++rep) report.failures += failed[rep];
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

}  // namespace rankenv
