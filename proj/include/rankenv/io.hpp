#pragma once

#include <string>
#include <vector>

#include "rankenv/curves.hpp"
#include "rankenv/envelope.hpp"
#include "rankenv/fanova.hpp"
#include "rankenv/spatial.hpp"

namespace rankenv {

/// Curve set CSV: header `r,obs,<sim...>`; one row per grid point, first
/// column the argument value, second the observed curve, remaining columns
/// the simulated curves.
CurveSet read_curve_csv(const std::string& path);
void write_curve_csv(const std::string& path, const CurveSet& c);

/// Envelope CSV: `index,arg,lower,central,upper,observed`.  Unbounded sides
/// of one-sided components are written as empty fields.  Values use full
/// round-trip precision, so re-importing reproduces the bounds bit-exactly.
struct EnvelopeTable {
    std::vector<long> index;
    std::vector<double> arg;
    std::vector<double> lower, central, upper, observed;  // +-inf for empty fields
};
void write_envelope_csv(const std::string& path, const EnvelopeTable& t);
EnvelopeTable read_envelope_csv(const std::string& path);

/// Slice of a (possibly combined) envelope for one part: `args` and
/// `observed` are the part's own grid and observed curve, while `offset`
/// locates the part inside the full test vector.
EnvelopeTable envelope_table(const GlobalEnvelope& env, const std::vector<double>& args,
                             std::span<const double> observed, std::size_t offset, std::size_t length);

/// Point pattern CSV `x,y[,mark]` with the window in a JSON sidecar
/// `{xmin, xmax, ymin, ymax}` (default sidecar path: <pattern>.window.json).
PointPattern read_pattern_csv(const std::string& path, const std::string& window_path);
void write_pattern_csv(const std::string& path, const PointPattern& p,
                       const std::string& window_path);
std::string default_window_path(const std::string& pattern_path);

/// Long-format grouped curves CSV: `group,curve_id,r,value[,weight]`.
/// Grids must be complete and identical across curves; weights constant
/// within a curve.
GroupedCurveSet read_grouped_csv(const std::string& path);
void write_grouped_csv(const std::string& path, const GroupedCurveSet& g);

/// result.json fields: alpha, s, p_minus, p_plus, p_erc, decision.
void write_result_json(const std::string& path, const RankTestResult& r, long s);

/// Combined-test manifest: part names/offsets/sides, per-part envelope CSV
/// file names, and the shared p-interval / erc p-value / decision.
void write_manifest_json(const std::string& path, const std::vector<PartLayout>& parts,
                         const std::vector<std::string>& envelope_files, const RankTestResult& r,
                         long s);

std::string format_double(double v);

}  // namespace rankenv
