#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "rankenv/io.hpp"
#include "rankenv/study.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using namespace rankenv;

void set_threads(int threads) {
    if (threads <= 0) {
        if (const char* env = std::getenv("RANKENV_THREADS")) threads = std::atoi(env);
    }
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, sep))
        if (!tok.empty()) out.push_back(tok);
    return out;
}

std::vector<SummaryFunction> parse_functions(const std::string& s) {
    std::vector<SummaryFunction> fns;
    for (const auto& tok : split(s, ',')) fns.push_back(summary_from_string(tok));
    if (fns.empty()) throw CLI::ValidationError("--functions", "no summary functions given");
    return fns;
}

Window parse_window(const std::string& s) {
    const auto parts = split(s, ',');
    if (parts.size() != 4)
        throw CLI::ValidationError("--window", "expected xmin,xmax,ymin,ymax");
    return {std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2]), std::stod(parts[3])};
}

std::string sanitize(std::string name) {
    for (char& c : name)
        if (c == ':' || c == '/' || c == ' ') c = '_';
    return name;
}

fs::path ensure_out(const std::string& out) {
    fs::path dir(out);
    fs::create_directories(dir);
    return dir;
}

// envelope CSVs for each part of a combined result + manifest
void export_combined(const fs::path& dir, const GofOutput& gof, double, long s) {
    std::vector<std::string> files;
    for (std::size_t i = 0; i < gof.parts.size(); ++i) {
        const auto& part = gof.parts[i];
        const auto& lay = gof.layout[i];
        const std::string file = "envelope_" + std::to_string(i) + "_" + sanitize(part.name) + ".csv";
        write_envelope_csv((dir / file).string(),
                           envelope_table(gof.result.envelope, part.args, part.curves.row(0),
                                          lay.offset, lay.length));
        files.push_back(file);
    }
    write_manifest_json((dir / "manifest.json").string(), gof.layout, files, gof.result, s);
    write_result_json((dir / "result.json").string(), gof.result, s);
}

struct GridFlags {
    double rmin = 0.0;
    double rmax = 0.125;
    int k = 500;
};

void add_grid_flags(CLI::App* cmd, GridFlags& g) {
    cmd->add_option("--rmin", g.rmin, "grid start");
    cmd->add_option("--rmax", g.rmax, "grid end");
    cmd->add_option("--K", g.k, "number of grid points");
}

int run(int argc, char** argv) {
    CLI::App app{"global rank envelope testing for curves and spatial point patterns"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (default: RANKENV_THREADS or all cores)");

    // ---- rank-test -------------------------------------------------------
    auto* rank_cmd = app.add_subcommand("rank-test", "rank envelope test on one curve set CSV");
    std::string rt_curves, rt_side = "two", rt_out = ".";
    double rt_alpha = 0.05;
    rank_cmd->add_option("--curves", rt_curves, "curve set CSV (r,obs,sim...)")->required();
    rank_cmd->add_option("--side", rt_side, "lower|upper|two");
    rank_cmd->add_option("--alpha", rt_alpha, "significance level");
    rank_cmd->add_option("--out", rt_out, "output directory");

    // ---- combine ---------------------------------------------------------
    auto* comb_cmd = app.add_subcommand("combine", "combined test over several curve set CSVs");
    std::vector<std::string> cb_curves;
    std::string cb_sides = "two", cb_measure, cb_out = ".";
    double cb_alpha = 0.05;
    comb_cmd->add_option("--curves", cb_curves, "curve set CSVs")->required()->expected(-1);
    comb_cmd->add_option("--sides", cb_sides, "side per input (comma list) or one side for all");
    comb_cmd->add_option("--measure", cb_measure,
                         "run the one-sided combined deviation test instead (intl2|max|scaledmaxq)");
    comb_cmd->add_option("--alpha", cb_alpha, "significance level");
    comb_cmd->add_option("--out", cb_out, "output directory");

    // ---- gof -------------------------------------------------------------
    auto* gof_cmd = app.add_subcommand("gof", "goodness-of-fit test for point pattern(s)");
    std::vector<std::string> gf_patterns;
    std::string gf_functions = "L", gf_fit = "none", gf_model, gf_corr = "translational", gf_out = ".";
    GridFlags gf_grid;
    long gf_nsim = 0;
    double gf_alpha = 0.05;
    std::uint64_t gf_seed = 0;
    gof_cmd->add_option("--pattern", gf_patterns, "pattern CSV(s); several = one joint test")
        ->required()
        ->expected(-1);
    gof_cmd->add_option("--functions", gf_functions, "comma list of L,F,G,J");
    gof_cmd->add_option("--fit", gf_fit, "none|csr|matclust");
    gof_cmd->add_option("--model", gf_model, "null model when --fit none, e.g. csr:200");
    gof_cmd->add_option("--correction", gf_corr, "edge correction for L");
    gof_cmd->add_option("--nsim", gf_nsim, "simulations (default: 2500 per function)");
    gof_cmd->add_option("--alpha", gf_alpha, "significance level");
    gof_cmd->add_option("--seed", gf_seed, "RNG seed");
    gof_cmd->add_option("--out", gf_out, "output directory");
    add_grid_flags(gof_cmd, gf_grid);

    // ---- simulate ----------------------------------------------------------
    auto* sim_cmd = app.add_subcommand("simulate", "draw point patterns from a model");
    std::vector<std::string> sm_models;
    std::string sm_window = "0,1,0,1", sm_out = ".";
    long sm_count = 1;
    std::uint64_t sm_seed = 0;
    sim_cmd->add_option("--model", sm_models, "model spec, e.g. csr:200 (repeat for a marked union)")
        ->required()
        ->expected(-1);
    sim_cmd->add_option("--window", sm_window, "xmin,xmax,ymin,ymax");
    sim_cmd->add_option("--count", sm_count, "number of patterns");
    sim_cmd->add_option("--seed", sm_seed, "RNG seed");
    sim_cmd->add_option("--out", sm_out, "output directory");

    // ---- summary -----------------------------------------------------------
    auto* sum_cmd = app.add_subcommand("summary", "estimate a summary function for a pattern");
    std::string su_pattern, su_window, su_function = "L", su_corr = "translational", su_out = "summary.csv";
    GridFlags su_grid;
    int su_from = 1, su_to = 2;
    sum_cmd->add_option("--pattern", su_pattern, "pattern CSV")->required();
    sum_cmd->add_option("--window", su_window, "window sidecar (default <pattern>.window.json)");
    sum_cmd->add_option("--function", su_function, "L|F|G|J|crossL");
    sum_cmd->add_option("--correction", su_corr, "edge correction");
    sum_cmd->add_option("--from", su_from, "crossL: first type");
    sum_cmd->add_option("--to", su_to, "crossL: second type");
    sum_cmd->add_option("--out", su_out, "output CSV");
    add_grid_flags(sum_cmd, su_grid);

    // ---- fanova -------------------------------------------------------------
    auto* fan_cmd = app.add_subcommand("fanova", "permutation functional ANOVA on grouped curves");
    std::string fa_curves, fa_stat = "plain", fa_out = ".";
    long fa_nsim = 2499;
    double fa_alpha = 0.05;
    std::uint64_t fa_seed = 0;
    fan_cmd->add_option("--curves", fa_curves, "grouped curve CSV (group,curve_id,r,value[,weight])")
        ->required();
    fan_cmd->add_option("--stat", fa_stat, "plain|welch pointwise ANOVA statistic");
    fan_cmd->add_option("--nsim", fa_nsim, "permutations");
    fan_cmd->add_option("--alpha", fa_alpha, "significance level");
    fan_cmd->add_option("--seed", fa_seed, "RNG seed");
    fan_cmd->add_option("--out", fa_out, "output directory");

    // ---- groupdiff ------------------------------------------------------------
    auto* gd_cmd = app.add_subcommand("groupdiff", "permutation group comparison on grouped curves");
    std::string gd_curves, gd_construction = "pairwise", gd_out = ".";
    int gd_window_b = 1;
    long gd_nsim = 2499;
    double gd_alpha = 0.05;
    std::uint64_t gd_seed = 0;
    gd_cmd->add_option("--curves", gd_curves, "grouped curve CSV")->required();
    gd_cmd->add_option("--construction", gd_construction,
                       "means|pairwise|pairwise-scaled|pairwise-scaled-ma|leave-one-out");
    gd_cmd->add_option("--window-b", gd_window_b, "moving-average window for variance smoothing (odd)");
    gd_cmd->add_option("--nsim", gd_nsim, "permutations");
    gd_cmd->add_option("--alpha", gd_alpha, "significance level");
    gd_cmd->add_option("--seed", gd_seed, "RNG seed");
    gd_cmd->add_option("--out", gd_out, "output directory");

    // ---- shift-test --------------------------------------------------------------
    auto* sh_cmd = app.add_subcommand("shift-test", "random superposition test for a marked pattern");
    std::string sh_pattern, sh_window, sh_fixed, sh_out = ".";
    GridFlags sh_grid;
    long sh_nsim = 2500;
    double sh_alpha = 0.05;
    std::uint64_t sh_seed = 0;
    sh_cmd->add_option("--pattern", sh_pattern, "marked pattern CSV")->required();
    sh_cmd->add_option("--window", sh_window, "window sidecar (default <pattern>.window.json)");
    sh_cmd->add_option("--fixed-types", sh_fixed, "comma list of types to keep fixed");
    sh_cmd->add_option("--nsim", sh_nsim, "shift simulations");
    sh_cmd->add_option("--alpha", sh_alpha, "significance level");
    sh_cmd->add_option("--seed", sh_seed, "RNG seed");
    sh_cmd->add_option("--out", sh_out, "output directory");
    add_grid_flags(sh_cmd, sh_grid);

    // ---- power-study ----------------------------------------------------------------
    auto* ps_cmd = app.add_subcommand("power-study", "rejection-rate study over replicated pipelines");
    std::string ps_true = "csr:200", ps_fit = "none", ps_null, ps_functions = "L", ps_combos,
                ps_window = "0,1,0,1", ps_corr = "translational", ps_out = ".";
    GridFlags ps_grid;
    long ps_reps = 1000, ps_nsim = 999;
    double ps_alpha = 0.05;
    std::uint64_t ps_seed = 0;
    ps_cmd->add_option("--true-model", ps_true, "data generating model");
    ps_cmd->add_option("--fit", ps_fit, "none|csr|matclust (null model fitting per replicate)");
    ps_cmd->add_option("--null-model", ps_null, "null model when --fit none (default: the true model)");
    ps_cmd->add_option("--functions", ps_functions, "function universe, comma list");
    ps_cmd->add_option("--combos", ps_combos,
                       "semicolon list of function combinations (default: all functions as one combo)");
    ps_cmd->add_option("--window", ps_window, "xmin,xmax,ymin,ymax");
    ps_cmd->add_option("--correction", ps_corr, "edge correction for L");
    ps_cmd->add_option("--replications", ps_reps, "number of replicates");
    ps_cmd->add_option("--nsim", ps_nsim, "simulations per replicate");
    ps_cmd->add_option("--alpha", ps_alpha, "significance level");
    ps_cmd->add_option("--seed", ps_seed, "RNG seed");
    ps_cmd->add_option("--out", ps_out, "output directory");
    add_grid_flags(ps_cmd, ps_grid);

    CLI11_PARSE(app, argc, argv);
    set_threads(threads);

    if (rank_cmd->parsed()) {
        CurveSet cs = read_curve_csv(rt_curves);
        cs.side = side_from_string(rt_side);
        const fs::path dir = ensure_out(rt_out);
        TestMatrix m(cs.curves, cs.side);
        const RankTestResult res = run_rank_test(m, rt_alpha);
        write_result_json((dir / "result.json").string(), res, static_cast<long>(cs.n_sim()));
        write_envelope_csv((dir / "envelope.csv").string(),
                           envelope_table(res.envelope, cs.args, cs.curves.row(0), 0, cs.n_args()));
        std::cout << "p-interval (" << res.p_interval.p_minus << ", " << res.p_interval.p_plus
                  << "]  p_erc " << res.p_erc << "  decision " << to_string(res.decision) << "\n";
        return 0;
    }

    if (comb_cmd->parsed()) {
        std::vector<CurveSet> parts;
        const auto side_tokens = split(cb_sides, ',');
        for (std::size_t i = 0; i < cb_curves.size(); ++i) {
            CurveSet cs = read_curve_csv(cb_curves[i]);
            cs.name = fs::path(cb_curves[i]).stem().string();
            cs.side = side_from_string(side_tokens.size() == 1 ? side_tokens[0]
                                                               : side_tokens.at(i));
            parts.push_back(std::move(cs));
        }
        const fs::path dir = ensure_out(cb_out);
        const long s = static_cast<long>(parts.front().n_sim());
        if (!cb_measure.empty()) {
            const DeviationVector dv = deviation_vector(parts, deviation_measure_from_string(cb_measure));
            if (dv.skipped_args > 0)
                std::cerr << "warning: " << dv.skipped_args
                          << " grid points skipped for degenerate quantile scaling\n";
            const RankTestResult res = combined_deviation_test(dv, cb_alpha);
            write_result_json((dir / "result.json").string(), res, s);
            EnvelopeTable t;
            std::vector<PartLayout> layout;
            for (std::size_t j = 0; j < dv.names.size(); ++j) {
                t.index.push_back(static_cast<long>(j));
                t.arg.push_back(static_cast<double>(j));
                t.lower.push_back(res.envelope.lower[j]);
                t.central.push_back(res.envelope.central[j]);
                t.upper.push_back(res.envelope.upper[j]);
                t.observed.push_back(dv.u(0, j));
                layout.push_back({dv.names[j], j, 1, Side::UpperExtreme});
            }
            write_envelope_csv((dir / "envelope.csv").string(), t);
            write_manifest_json((dir / "manifest.json").string(), layout, {}, res, s);
            std::cout << "deviation test p-interval (" << res.p_interval.p_minus << ", "
                      << res.p_interval.p_plus << "]  p_erc " << res.p_erc << "  decision "
                      << to_string(res.decision) << "\n";
            return 0;
        }
        const CombinedTestMatrix combined = concatenate(parts);
        GofOutput gof;
        gof.result = run_rank_test(combined.matrix, cb_alpha);
        gof.parts = std::move(parts);
        gof.layout = combined.parts;
        export_combined(dir, gof, cb_alpha, s);
        std::cout << "p-interval (" << gof.result.p_interval.p_minus << ", "
                  << gof.result.p_interval.p_plus << "]  p_erc " << gof.result.p_erc << "  decision "
                  << to_string(gof.result.decision) << "\n";
        return 0;
    }

    if (gof_cmd->parsed()) {
        GofConfig cfg;
        cfg.functions = parse_functions(gf_functions);
        cfg.fit = fit_family_from_string(gf_fit);
        if (cfg.fit == FitFamily::None) {
            if (gf_model.empty())
                throw CLI::ValidationError("--model", "required when --fit none");
            cfg.null_model = model_from_string(gf_model);
        }
        cfg.correction = correction_from_string(gf_corr);
        cfg.r_min = gf_grid.rmin;
        cfg.r_max = gf_grid.rmax;
        cfg.grid_points = gf_grid.k;
        cfg.alpha = gf_alpha;
        cfg.seed = gf_seed;
        cfg.n_sim = gf_nsim > 0
                        ? gf_nsim
                        : recommend_simulations(1, static_cast<long>(cfg.functions.size()) *
                                                       static_cast<long>(gf_patterns.size()),
                                                Side::TwoSided, gf_alpha);
        std::vector<PointPattern> patterns;
        for (const auto& path : gf_patterns)
            patterns.push_back(read_pattern_csv(path, default_window_path(path)));
        const GofOutput gof = run_gof(patterns, cfg);
        const fs::path dir = ensure_out(gf_out);
        export_combined(dir, gof, gf_alpha, gof.n_sim);
        std::cout << "p-interval (" << gof.result.p_interval.p_minus << ", "
                  << gof.result.p_interval.p_plus << "]  p_erc " << gof.result.p_erc << "  decision "
                  << to_string(gof.result.decision) << "\n";
        return 0;
    }

    if (sim_cmd->parsed()) {
        const Window w = parse_window(sm_window);
        const fs::path dir = ensure_out(sm_out);
        for (long c = 0; c < sm_count; ++c) {
            Rng rng(sm_seed, static_cast<std::uint64_t>(c));
            PointPattern p;
            if (sm_models.size() == 1) {
                p = generate(model_from_string(sm_models[0]), w, rng);
            } else {
                std::vector<PointPattern> comps;
                for (const auto& ms : sm_models) comps.push_back(generate(model_from_string(ms), w, rng));
                p = mark_union(comps);
            }
            const std::string name = sm_count == 1 ? "pattern" : "pattern_" + std::to_string(c);
            write_pattern_csv((dir / (name + ".csv")).string(), p,
                              (dir / (name + ".window.json")).string());
            std::cout << name << ".csv: " << p.size() << " points\n";
        }
        return 0;
    }

    if (sum_cmd->parsed()) {
        const std::string window = su_window.empty() ? default_window_path(su_pattern) : su_window;
        const PointPattern p = read_pattern_csv(su_pattern, window);
        SummarySpec spec;
        spec.function = summary_from_string(su_function);
        spec.grid = make_grid(su_grid.rmin, su_grid.rmax, static_cast<std::size_t>(su_grid.k));
        spec.correction = correction_from_string(su_corr);
        spec.cross_from = su_from;
        spec.cross_to = su_to;
        const std::vector<double> curve = estimate_summary(p, spec);
        std::ofstream out(su_out);
        if (!out) throw std::runtime_error("cannot open '" + su_out + "' for writing");
        out << "r,value\n";
        for (std::size_t k = 0; k < curve.size(); ++k)
            out << format_double(spec.grid[k]) << ',' << format_double(curve[k]) << "\n";
        return 0;
    }

    auto run_permutation_cmd = [&](const std::string& curves_path, GroupStat stat,
                                   const GroupStatOptions& opt, long nsim, double alpha,
                                   std::uint64_t seed, const std::string& out_dir) {
        const GroupedCurveSet g = read_grouped_csv(curves_path);
        const PermutationSet perm = permutation_engine(g, stat, nsim, seed, opt);
        if (perm.degenerate_points > 0)
            std::cerr << "warning: " << perm.degenerate_points
                      << " grid points had a degenerate variance denominator\n";
        const RankTestResult res = run_rank_test(perm.matrix, alpha);
        const fs::path dir = ensure_out(out_dir);
        write_result_json((dir / "result.json").string(), res, nsim);
        std::vector<PartLayout> layout;
        std::vector<std::string> files;
        for (std::size_t i = 0; i < perm.segments.size(); ++i) {
            const auto& seg = perm.segments[i];
            layout.push_back({seg.label, seg.offset, seg.length, group_stat_side(stat)});
            const std::string file = "envelope_" + std::to_string(i) + "_" + sanitize(seg.label) + ".csv";
            std::vector<double> observed(seg.length);
            for (std::size_t k = 0; k < seg.length; ++k) observed[k] = perm.matrix.values(0, seg.offset + k);
            write_envelope_csv((dir / file).string(),
                               envelope_table(res.envelope, g.args, observed, seg.offset, seg.length));
            files.push_back(file);
        }
        write_manifest_json((dir / "manifest.json").string(), layout, files, res, nsim);
        std::cout << "p-interval (" << res.p_interval.p_minus << ", " << res.p_interval.p_plus
                  << "]  p_erc " << res.p_erc << "  decision " << to_string(res.decision) << "\n";
    };

    if (fan_cmd->parsed()) {
        GroupStatOptions opt;
        if (fa_stat == "welch") opt.welch = true;
        else if (fa_stat != "plain") throw CLI::ValidationError("--stat", "expected plain|welch");
        run_permutation_cmd(fa_curves, GroupStat::FStat, opt, fa_nsim, fa_alpha, fa_seed, fa_out);
        return 0;
    }

    if (gd_cmd->parsed()) {
        GroupStatOptions opt;
        opt.ma_window = gd_window_b;
        run_permutation_cmd(gd_curves, group_stat_from_string(gd_construction), opt, gd_nsim,
                            gd_alpha, gd_seed, gd_out);
        return 0;
    }

    if (sh_cmd->parsed()) {
        const std::string window = sh_window.empty() ? default_window_path(sh_pattern) : sh_window;
        const PointPattern p = read_pattern_csv(sh_pattern, window);
        ShiftTestConfig cfg;
        cfg.r_min = sh_grid.rmin;
        cfg.r_max = sh_grid.rmax;
        cfg.grid_points = sh_grid.k;
        cfg.n_sim = sh_nsim;
        cfg.alpha = sh_alpha;
        cfg.seed = sh_seed;
        for (const auto& tok : split(sh_fixed, ',')) cfg.fixed_types.insert(std::stoi(tok));
        const GofOutput gof = run_shift_test(p, cfg);
        export_combined(ensure_out(sh_out), gof, sh_alpha, gof.n_sim);
        std::cout << gof.parts.size() << " sub-tests; p-interval (" << gof.result.p_interval.p_minus
                  << ", " << gof.result.p_interval.p_plus << "]  p_erc " << gof.result.p_erc
                  << "  decision " << to_string(gof.result.decision) << "\n";
        return 0;
    }

    if (ps_cmd->parsed()) {
        PowerStudyConfig cfg;
        cfg.true_model = model_from_string(ps_true);
        cfg.window = parse_window(ps_window);
        cfg.fit = fit_family_from_string(ps_fit);
        if (!ps_null.empty()) cfg.null_model = model_from_string(ps_null);
        const std::vector<SummaryFunction> universe = parse_functions(ps_functions);
        cfg.combos.clear();
        if (ps_combos.empty()) {
            cfg.combos.push_back(universe);
        } else {
            for (const auto& combo : split(ps_combos, ';')) cfg.combos.push_back(parse_functions(combo));
        }
        cfg.correction = correction_from_string(ps_corr);
        cfg.r_min = ps_grid.rmin;
        cfg.r_max = ps_grid.rmax;
        cfg.grid_points = ps_grid.k;
        cfg.replications = ps_reps;
        cfg.n_sim = ps_nsim;
        cfg.alpha = ps_alpha;
        cfg.seed = ps_seed;

        const StudyReport report = run_power_study(cfg);
        const fs::path dir = ensure_out(ps_out);
        json j;
        j["true_model"] = ps_true;
        j["fit"] = ps_fit;
        if (!ps_null.empty()) j["null_model"] = ps_null;
        j["alpha"] = ps_alpha;
        j["s"] = ps_nsim;
        j["replications"] = report.replications;
        j["failures"] = report.failures;
        j["wall_seconds"] = report.wall_seconds;
        json cells = json::array();
        for (const auto& cell : report.cells) {
            json c;
            c["combo"] = cell.label;
            c["rejections"] = cell.rejections;
            c["proportion"] = cell.proportion;
            c["ci_low"] = cell.ci_low;
            c["ci_high"] = cell.ci_high;
            c["reject"] = cell.reject;
            c["undecided"] = cell.undecided;
            c["not_reject"] = cell.not_reject;
            cells.push_back(c);
        }
        j["cells"] = cells;
        std::ofstream out(dir / "report.json");
        out << j.dump(2) << "\n";

        for (const auto& cell : report.cells)
            std::cout << cell.label << ": " << cell.proportion << "  [" << cell.ci_low << ", "
                      << cell.ci_high << "]  (reject/undecided/not: " << cell.reject << "/"
                      << cell.undecided << "/" << cell.not_reject << ")\n";
        if (report.failures > 0)
            std::cerr << report.failures << " replicates failed and were excluded\n";
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
