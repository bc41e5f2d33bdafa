#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bflab/phasespace.hpp"

namespace bflab {

using json = nlohmann::ordered_json;

/// Writes `content` to `path` through a sibling temporary and a rename, so a
/// reader never sees a partial file.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        os.write(content.data(), static_cast<std::streamsize>(content.size()));
        os.flush();
        if (!os) throw std::runtime_error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_atomic(path, j.dump(2) + "\n"); }

inline json read_json(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw InvalidArgument("cannot open " + path.string());
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw InvalidArgument(path.string() + ": " + e.what());
    }
}

/// Columns in the given order; every column must have the same length.
struct Table {
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;

    void add(const std::string& name, std::vector<double> values) {
        require(columns.empty() || values.size() == columns.front().size(), "table columns differ in length");
        names.push_back(name);
        columns.push_back(std::move(values));
    }

    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }

    std::string csv() const { return render(",", ""); }
    /// gnuplot-friendly: whitespace separated, header as a comment.
    std::string dat() const { return render(" ", "# "); }

private:
    std::string render(const char* sep, const char* header_prefix) const {
        std::ostringstream os;
        os.precision(17);
        os << header_prefix;
        for (std::size_t c = 0; c < names.size(); ++c) os << (c ? sep : "") << names[c];
        os << '\n';
        for (std::size_t r = 0; r < rows(); ++r) {
            for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? sep : "") << columns[c][r];
            os << '\n';
        }
        return os.str();
    }
};

/// Time column plus every named series of a trajectory.
template <class Traj>
Table trajectory_table(const Traj& traj) {
    Table t;
    t.add("t", traj.times);
    for (const auto& [name, values] : traj.series) t.add(name, values);
    return t;
}

/// Raw little-endian doubles in `stem`.bin plus a JSON header in `stem`.json
/// describing the axes. For d = 1 a long-format CSV (x, p, f) is added.
inline void write_phase_snapshot(const std::filesystem::path& stem, const PhaseSpaceDistribution& f, double t) {
    json h;
    h["t"] = t;
    h["dim"] = f.dim();
    h["x"] = {{"n", f.xgrid.points_per_dim()}, {"length", f.xgrid.length()}, {"origin", f.xgrid.origin()}};
    h["p"] = {{"count", f.paxis.count}, {"spacing", f.paxis.spacing}, {"first", f.paxis.first}};
    h["layout"] = "row-major, position index outermost, float64";
    h["mass"] = f.mass();
    std::string bin(reinterpret_cast<const char*>(f.values.data()), f.values.size() * sizeof(double));
    auto p = stem;
    write_atomic(p.replace_extension(".bin"), bin);
    write_json(p.replace_extension(".json"), h);
    if (f.dim() == 1) {
        std::ostringstream os;
        os.precision(17);
        os << "x,p,f\n";
        for (std::size_t ix = 0; ix < f.x_size(); ++ix)
            for (std::size_t ip = 0; ip < f.p_size(); ++ip)
                os << f.xgrid.position(ix)[0] << ',' << f.momentum(ip)[0] << ',' << f(ix, ip) << '\n';
        write_atomic(p.replace_extension(".csv"), os.str());
    }
}

inline PhaseSpaceDistribution read_phase_snapshot(const std::filesystem::path& stem) {
    auto p = stem;
    const json h = read_json(p.replace_extension(".json"));
    const int d = h.at("dim");
    auto g = make_grid(d, h.at("x").at("n"), h.at("x").at("length"), h.at("x").at("origin"));
    PhaseAxis pa{h.at("p").at("count"), h.at("p").at("spacing"), h.at("p").at("first")};
    PhaseSpaceDistribution f(g, pa);
    std::ifstream is(p.replace_extension(".bin"), std::ios::binary);
    is.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    if (!is) throw InvalidArgument("truncated phase snapshot " + p.string());
    return f;
}

}  // namespace bflab
