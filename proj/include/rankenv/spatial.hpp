#pragma once

#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "rankenv/rng.hpp"

namespace rankenv {

struct Window {
    double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;

    double width() const { return xmax - xmin; }
    double height() const { return ymax - ymin; }
    double area() const { return width() * height(); }
    double min_side() const { return std::min(width(), height()); }
    bool contains(double x, double y) const {
        return x >= xmin && x <= xmax && y >= ymin && y <= ymax;
    }
    double boundary_distance(double x, double y) const {
        return std::min(std::min(x - xmin, xmax - x), std::min(y - ymin, ymax - y));
    }
    void validate() const {
        if (!(xmin < xmax) || !(ymin < ymax))
            throw std::invalid_argument("Window: needs positive area");
    }
};

/// Planar point pattern in a rectangular window, optionally with integer
/// type marks.
struct PointPattern {
    std::vector<double> x, y;
    std::vector<int> marks;  // empty when unmarked
    Window window;

    std::size_t size() const { return x.size(); }
    bool marked() const { return !marks.empty(); }
    std::vector<int> mark_values() const;
    PointPattern subpattern(int mark) const;
    void validate() const;
};

/// Union of unmarked components into one marked pattern, types 1..m in
/// component order.  All components must share the window.
PointPattern mark_union(const std::vector<PointPattern>& components);

// --- models -----------------------------------------------------------

struct CsrModel {
    double intensity = 0.0;
};
struct BinomialModel {
    long n = 0;
};
struct MatClustModel {
    double parent_intensity = 0.0;
    double cluster_radius = 0.0;
    double mean_per_cluster = 0.0;
};
/// Fixed point count with a minimum pairwise distance, by dart throwing.
struct HardCoreModel {
    long n = 0;
    double min_distance = 0.0;
    long max_proposals = 0;  // 0 = 10000 * n
};
struct SuperpositionModel {
    MatClustModel first, second;
};

using ModelSpec = std::variant<CsrModel, BinomialModel, MatClustModel, HardCoreModel, SuperpositionModel>;

PointPattern generate(const ModelSpec& model, const Window& w, Rng& rng);

ModelSpec model_from_string(const std::string& spec);
std::string to_string(const ModelSpec& model);

// --- summary functions --------------------------------------------------

enum class SummaryFunction { L, F, G, J, CrossL };
enum class EdgeCorrection { None, Translational, Border };

SummaryFunction summary_from_string(const std::string& s);
std::string to_string(SummaryFunction f);
EdgeCorrection correction_from_string(const std::string& s);

struct SummarySpec {
    SummaryFunction function = SummaryFunction::L;
    std::vector<double> grid;
    EdgeCorrection correction = EdgeCorrection::Translational;
    int cross_from = 0, cross_to = 0;    // CrossL type pair
    int f_lattice = 64;                  // empty-space evaluation lattice (per side)
    double j_truncation = 1e-6;          // J cut where 1 - F falls below this
};

/// Estimate one summary function on the grid.
///   L       sqrt(K(r)/pi) from the edge-corrected pair-count estimator
///   F       empty-space distribution from a fixed lattice, border corrected
///   G       nearest-neighbour distribution, border corrected
///   J       (1-G)/(1-F), truncated (last valid value carried) where F
///           saturates
///   CrossL  bivariate L between two mark types, translational correction
std::vector<double> estimate_summary(const PointPattern& p, const SummarySpec& spec);

/// F and G share their machinery with J; exposed so callers evaluating
/// several functions on one pattern can reuse them.
std::vector<double> empty_space_function(const PointPattern& p, const std::vector<double>& grid,
                                         EdgeCorrection corr, int lattice);
std::vector<double> nearest_neighbour_function(const PointPattern& p, const std::vector<double>& grid,
                                               EdgeCorrection corr);
std::vector<double> j_from_fg(const std::vector<double>& f, const std::vector<double>& g,
                              double truncation);

/// Translate every non-fixed type by its own uniform random vector, with
/// periodic (toroidal) wrapping; fixed types stay put.
PointPattern random_shift(const PointPattern& p, const std::set<int>& fixed_types, Rng& rng);

// --- model fitting --------------------------------------------------------

enum class FitFamily { None, Csr, MatClustMinContrast };
FitFamily fit_family_from_string(const std::string& s);

CsrModel fit_csr(const PointPattern& p);

struct MinContrastOptions {
    double exponent = 0.25;
    double r_max = 0.125;   // contrast integration range upper end
    int n_r = 128;
    double bandwidth = 0.0; // kernel half-width for the pcf estimate; 0 = 0.15/sqrt(intensity)
};

/// Minimum contrast fit of the cluster parameters on the pair correlation
/// function; the mean cluster size comes from the observed intensity.
MatClustModel fit_matclust(const PointPattern& p, const MinContrastOptions& opt = {});

/// Kernel (Epanechnikov) pair correlation estimate with translational
/// edge correction.
std::vector<double> pair_correlation(const PointPattern& p, const std::vector<double>& r,
                                     double bandwidth);

/// Closed-form pair correlation of the Matern cluster process.
double matclust_pcf(double r, double parent_intensity, double cluster_radius);

}  // namespace rankenv
