#include "rankenv/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

namespace rankenv {

namespace {

using nlohmann::json;

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& field, const std::string& path, std::size_t lineno) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(field, &pos);
        while (pos < field.size() && std::isspace(static_cast<unsigned char>(field[pos]))) ++pos;
        if (pos != field.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": cannot parse number '" + field + "'");
    }
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    return out;
}

// strips trailing \r so Windows-style files parse
bool next_line(std::ifstream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// --- curve set ------------------------------------------------------------

CurveSet read_curve_csv(const std::string& path) {
    std::ifstream in = open_in(path);
    std::string line;
    std::size_t lineno = 0;
    if (!next_line(in, line)) throw std::runtime_error(path + ": empty file");
    ++lineno;
    const std::vector<std::string> header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "r" || header[1] != "obs")
        throw std::runtime_error(path + ":1: expected header 'r,obs,<sim...>'");
    const std::size_t ncol = header.size();

    std::vector<std::vector<double>> rows;
    while (next_line(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != ncol)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected " +
                                     std::to_string(ncol) + " fields, got " + std::to_string(fields.size()));
        std::vector<double> row(ncol);
        for (std::size_t c = 0; c < ncol; ++c) row[c] = parse_double(fields[c], path, lineno);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error(path + ": no data rows");

    CurveSet cs;
    cs.args.resize(rows.size());
    cs.curves = Matrix(ncol - 1, rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        cs.args[k] = rows[k][0];
        for (std::size_t c = 1; c < ncol; ++c) cs.curves(c - 1, k) = rows[k][c];
    }
    cs.validate();
    return cs;
}

void write_curve_csv(const std::string& path, const CurveSet& c) {
    c.validate();
    std::ofstream out = open_out(path);
    out << "r,obs";
    for (std::size_t i = 1; i < c.curves.rows(); ++i) out << ",sim" << i;
    out << "\n";
    for (std::size_t k = 0; k < c.n_args(); ++k) {
        out << format_double(c.args[k]);
        for (std::size_t i = 0; i < c.curves.rows(); ++i) out << ',' << format_double(c.curves(i, k));
        out << "\n";
    }
}

// --- envelope ---------------------------------------------------------------

EnvelopeTable envelope_table(const GlobalEnvelope& env, const std::vector<double>& args,
                             std::span<const double> observed, std::size_t offset, std::size_t length) {
    EnvelopeTable t;
    for (std::size_t k = 0; k < length; ++k) {
        const std::size_t j = offset + k;
        t.index.push_back(static_cast<long>(j));
        t.arg.push_back(args.empty() ? static_cast<double>(j) : args[k]);
        t.lower.push_back(env.lower[j]);
        t.central.push_back(env.central[j]);
        t.upper.push_back(env.upper[j]);
        t.observed.push_back(observed[k]);
    }
    return t;
}

void write_envelope_csv(const std::string& path, const EnvelopeTable& t) {
    std::ofstream out = open_out(path);
    out << "index,arg,lower,central,upper,observed\n";
    auto field = [](double v) { return std::isfinite(v) ? format_double(v) : std::string(); };
    for (std::size_t k = 0; k < t.index.size(); ++k) {
        out << t.index[k] << ',' << format_double(t.arg[k]) << ',' << field(t.lower[k]) << ','
            << format_double(t.central[k]) << ',' << field(t.upper[k]) << ','
            << format_double(t.observed[k]) << "\n";
    }
}

EnvelopeTable read_envelope_csv(const std::string& path) {
    std::ifstream in = open_in(path);
    std::string line;
    std::size_t lineno = 0;
    if (!next_line(in, line)) throw std::runtime_error(path + ": empty file");
    ++lineno;
    if (split_csv_line(line) != std::vector<std::string>{"index", "arg", "lower", "central", "upper", "observed"})
        throw std::runtime_error(path + ":1: unexpected envelope header");
    EnvelopeTable t;
    const double inf = std::numeric_limits<double>::infinity();
    while (next_line(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 6)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 6 fields");
        t.index.push_back(static_cast<long>(parse_double(fields[0], path, lineno)));
        t.arg.push_back(parse_double(fields[1], path, lineno));
        t.lower.push_back(fields[2].empty() ? -inf : parse_double(fields[2], path, lineno));
        t.central.push_back(parse_double(fields[3], path, lineno));
        t.upper.push_back(fields[4].empty() ? inf : parse_double(fields[4], path, lineno));
        t.observed.push_back(parse_double(fields[5], path, lineno));
    }
    return t;
}

// --- point pattern ------------------------------------------------------------

std::string default_window_path(const std::string& pattern_path) {
    const std::size_t dot = pattern_path.rfind('.');
    const std::string stem = dot == std::string::npos ? pattern_path : pattern_path.substr(0, dot);
    return stem + ".window.json";
}

PointPattern read_pattern_csv(const std::string& path, const std::string& window_path) {
    PointPattern p;
    {
        std::ifstream win = open_in(window_path);
        json j;
        try {
            win >> j;
            p.window = {j.at("xmin").get<double>(), j.at("xmax").get<double>(),
                        j.at("ymin").get<double>(), j.at("ymax").get<double>()};
        } catch (const json::exception& e) {
            throw std::runtime_error(window_path + ": invalid window JSON (" + e.what() + ")");
        }
    }
    std::ifstream in = open_in(path);
    std::string line;
    std::size_t lineno = 0;
    if (!next_line(in, line)) throw std::runtime_error(path + ": empty file");
    ++lineno;
    const auto header = split_csv_line(line);
    bool marked = false;
    if (header.size() == 3 && header[0] == "x" && header[1] == "y" && header[2] == "mark") marked = true;
    else if (!(header.size() == 2 && header[0] == "x" && header[1] == "y"))
        throw std::runtime_error(path + ":1: expected header 'x,y' or 'x,y,mark'");
    while (next_line(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": wrong field count");
        p.x.push_back(parse_double(fields[0], path, lineno));
        p.y.push_back(parse_double(fields[1], path, lineno));
        if (marked) p.marks.push_back(static_cast<int>(parse_double(fields[2], path, lineno)));
    }
    p.validate();
    return p;
}

void write_pattern_csv(const std::string& path, const PointPattern& p, const std::string& window_path) {
    p.validate();
    {
        std::ofstream out = open_out(path);
        out << (p.marked() ? "x,y,mark\n" : "x,y\n");
        for (std::size_t i = 0; i < p.size(); ++i) {
            out << format_double(p.x[i]) << ',' << format_double(p.y[i]);
            if (p.marked()) out << ',' << p.marks[i];
            out << "\n";
        }
    }
    json j;
    j["xmin"] = p.window.xmin;
    j["xmax"] = p.window.xmax;
    j["ymin"] = p.window.ymin;
    j["ymax"] = p.window.ymax;
    open_out(window_path) << j.dump(2) << "\n";
}

// --- grouped curves --------------------------------------------------------------

GroupedCurveSet read_grouped_csv(const std::string& path) {
    std::ifstream in = open_in(path);
    std::string line;
    std::size_t lineno = 0;
    if (!next_line(in, line)) throw std::runtime_error(path + ": empty file");
    ++lineno;
    const auto header = split_csv_line(line);
    bool weighted = false;
    if (header.size() == 5 && header[4] == "weight") weighted = true;
    else if (header.size() != 4)
        throw std::runtime_error(path + ":1: expected header 'group,curve_id,r,value[,weight]'");
    if (header[0] != "group" || header[1] != "curve_id" || header[2] != "r" || header[3] != "value")
        throw std::runtime_error(path + ":1: expected header 'group,curve_id,r,value[,weight]'");

    struct CurveRec {
        std::string group;
        std::vector<double> r, v;
        double weight = 1.0;
        bool has_weight = false;
    };
    std::vector<std::string> curve_order;
    std::map<std::string, CurveRec> curves;
    while (next_line(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": wrong field count");
        const std::string key = fields[0] + "\x1f" + fields[1];
        auto [it, inserted] = curves.try_emplace(key);
        if (inserted) {
            it->second.group = fields[0];
            curve_order.push_back(key);
        }
        it->second.r.push_back(parse_double(fields[2], path, lineno));
        it->second.v.push_back(parse_double(fields[3], path, lineno));
        if (weighted) {
            const double w = parse_double(fields[4], path, lineno);
            if (it->second.has_weight && it->second.weight != w)
                throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                         ": weight differs within curve '" + fields[1] + "'");
            it->second.weight = w;
            it->second.has_weight = true;
        }
    }
    if (curve_order.empty()) throw std::runtime_error(path + ": no data rows");

    // sort each curve by r, then demand identical grids
    GroupedCurveSet g;
    std::vector<std::string> group_order;
    for (const auto& key : curve_order) {
        CurveRec& rec = curves[key];
        std::vector<std::size_t> ord(rec.r.size());
        std::iota(ord.begin(), ord.end(), std::size_t{0});
        std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return rec.r[a] < rec.r[b]; });
        std::vector<double> r(rec.r.size()), v(rec.r.size());
        for (std::size_t i = 0; i < ord.size(); ++i) {
            r[i] = rec.r[ord[i]];
            v[i] = rec.v[ord[i]];
        }
        rec.r = std::move(r);
        rec.v = std::move(v);
        if (g.args.empty()) g.args = rec.r;
        else if (g.args != rec.r)
            throw std::runtime_error(path + ": curve grids differ (curve '" + key.substr(key.find('\x1f') + 1) +
                                     "'); every curve must be evaluated on the same r grid");
        if (std::find(group_order.begin(), group_order.end(), rec.group) == group_order.end())
            group_order.push_back(rec.group);
    }

    g.curves = Matrix(curve_order.size(), g.args.size());
    g.group_names = group_order;
    for (std::size_t i = 0; i < curve_order.size(); ++i) {
        const CurveRec& rec = curves[curve_order[i]];
        std::copy(rec.v.begin(), rec.v.end(), g.curves.row(i).begin());
        g.groups.push_back(static_cast<int>(
            std::find(group_order.begin(), group_order.end(), rec.group) - group_order.begin()));
        if (weighted) g.weights.push_back(rec.weight);
    }
    g.validate();
    return g;
}

void write_grouped_csv(const std::string& path, const GroupedCurveSet& g) {
    g.validate();
    std::ofstream out = open_out(path);
    const bool weighted = !g.weights.empty();
    out << (weighted ? "group,curve_id,r,value,weight\n" : "group,curve_id,r,value\n");
    for (std::size_t i = 0; i < g.n_curves(); ++i) {
        for (std::size_t k = 0; k < g.args.size(); ++k) {
            out << g.group_names[static_cast<std::size_t>(g.groups[i])] << ",c" << i << ','
                << format_double(g.args[k]) << ',' << format_double(g.curves(i, k));
            if (weighted) out << ',' << format_double(g.weights[i]);
            out << "\n";
        }
    }
}

// --- results ------------------------------------------------------------------------

void write_result_json(const std::string& path, const RankTestResult& r, long s) {
    json j;
    j["alpha"] = r.envelope.alpha;
    j["s"] = s;
    j["p_minus"] = r.p_interval.p_minus;
    j["p_plus"] = r.p_interval.p_plus;
    j["p_erc"] = r.p_erc;
    j["decision"] = to_string(r.decision);
    open_out(path) << j.dump(2) << "\n";
}

void write_manifest_json(const std::string& path, const std::vector<PartLayout>& parts,
                         const std::vector<std::string>& envelope_files, const RankTestResult& r,
                         long s) {
    json j;
    j["alpha"] = r.envelope.alpha;
    j["s"] = s;
    j["p_minus"] = r.p_interval.p_minus;
    j["p_plus"] = r.p_interval.p_plus;
    j["p_erc"] = r.p_erc;
    j["decision"] = to_string(r.decision);
    json arr = json::array();
    for (std::size_t i = 0; i < parts.size(); ++i) {
        json part;
        part["name"] = parts[i].name;
        part["offset"] = parts[i].offset;
        part["length"] = parts[i].length;
        part["side"] = to_string(parts[i].side);
        if (i < envelope_files.size()) part["envelope"] = envelope_files[i];
        arr.push_back(part);
    }
    j["parts"] = arr;
    open_out(path) << j.dump(2) << "\n";
}

}  // namespace rankenv
