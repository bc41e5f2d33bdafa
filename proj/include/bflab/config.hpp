#pragma once

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "bflab/hartree.hpp"
#include "bflab/io.hpp"
#include "bflab/recipes.hpp"

namespace bflab {

/// Schema violation in an experiment config; the CLI maps it to exit code 2.
class ConfigError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// Read-only view of a JSON object that reports errors with their key path
/// and rejects unknown keys on request.
class Node {
public:
    Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {
        if (!j.is_object()) fail("expected an object");
    }

    const std::string& path() const { return path_; }
    const json& raw() const { return *j_; }
    bool has(const std::string& key) const { return j_->contains(key); }

    Node sub(const std::string& key) const {
        if (!has(key)) fail("missing section '" + key + "'");
        return Node(j_->at(key), child(key));
    }

    template <class T>
    T get(const std::string& key) const {
        if (!has(key)) fail("missing key '" + key + "'");
        return convert<T>(j_->at(key), child(key));
    }

    template <class T>
    T get(const std::string& key, T fallback) const {
        return has(key) ? convert<T>(j_->at(key), child(key)) : fallback;
    }

    double positive(const std::string& key) const {
        const double v = get<double>(key);
        if (!(v > 0.0) || !std::isfinite(v)) fail("'" + key + "' must be a positive number");
        return v;
    }

    double nonnegative(const std::string& key) const {
        const double v = get<double>(key);
        if (!(v >= 0.0) || !std::isfinite(v)) fail("'" + key + "' must be a nonnegative number");
        return v;
    }

    template <class T>
    std::vector<T> list(const std::string& key, std::size_t min_size = 1) const {
        auto v = get<std::vector<T>>(key);
        if (v.size() < min_size) fail("'" + key + "' needs at least " + std::to_string(min_size) + " entries");
        return v;
    }

    void only(std::initializer_list<const char*> keys) const {
        std::set<std::string> allowed(keys.begin(), keys.end());
        for (const auto& [k, _] : j_->items())
            if (!allowed.count(k)) fail("unknown key '" + k + "'");
    }

    [[noreturn]] void fail(const std::string& what) const { throw ConfigError(path_ + ": " + what); }

private:
    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    template <class T>
    static T convert(const json& v, const std::string& where) {
        try {
            if constexpr (std::is_same_v<T, int> || std::is_same_v<T, long>) {
                if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
            }
            return v.get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(where + ": " + e.what());
        }
    }

    const json* j_;
    std::string path_;
};

inline SpectralGrid parse_grid(const Node& n, int max_points = 1 << 12) {
    n.only({"dim", "n", "length", "origin"});
    const int dim = n.get<int>("dim", 1);
    const int pts = n.get<int>("n");
    if (dim != 1) n.fail("only d = 1 experiments are configured");
    if (pts < 4 || pts > max_points) n.fail("'n' must lie in [4, " + std::to_string(max_points) + "]");
    return make_grid(dim, pts, n.positive("length"), n.get<double>("origin", 0.0));
}

inline PotentialSpec parse_potential(const Node& n) {
    const auto type = n.get<std::string>("type");
    if (type == "zero") {
        n.only({"type"});
        return PotentialSpec::zero();
    }
    if (type == "gaussian") {
        n.only({"type", "amplitude", "width"});
        return PotentialSpec::gaussian(n.get<double>("amplitude"), n.positive("width"));
    }
    if (type == "cosine") {
        n.only({"type", "amplitude", "mode"});
        return PotentialSpec::cosine(n.get<double>("amplitude"), n.get<int>("mode"));
    }
    n.fail("unknown potential type '" + type + "' (zero, gaussian, cosine)");
}

inline ScalingRegime parse_regime(const Node& n) {
    const auto kind = n.get<std::string>("kind");
    try {
        if (kind == "macroscopic") {
            n.only({"kind", "fermions"});
            return ScalingRegime::macroscopic(n.get<long>("fermions"), 1);
        }
        if (kind == "microscopic") {
            n.only({"kind", "particles"});
            return ScalingRegime::microscopic(n.get<long>("particles"), 1);
        }
        if (kind == "custom") {
            n.only({"kind", "lambda", "hbar", "mass_fermion", "mass_boson", "bosons", "fermions"});
            return ScalingRegime::custom(n.nonnegative("lambda"), n.positive("hbar"), n.positive("mass_fermion"),
                                         n.positive("mass_boson"), n.get<long>("bosons"), n.get<long>("fermions"), 1);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidArgument& e) {
        n.fail(e.what());
    }
    n.fail("unknown regime kind '" + kind + "' (macroscopic, microscopic, custom)");
}

inline std::array<double, 3> at_fraction(const SpectralGrid& g, double frac) {
    return {g.origin() + frac * g.length(), 0.0, 0.0};
}

/// Orbital recipes: hermite {center, width} (center as a box fraction),
/// plane_waves, random {band}. `seed` feeds the random recipe.
inline std::vector<Field> parse_orbitals(const Node& n, const SpectralGrid& g, int M, std::uint64_t seed) {
    const auto recipe = n.get<std::string>("recipe");
    try {
        if (recipe == "hermite") {
            n.only({"recipe", "center", "width"});
            return hermite_orbitals(g, M, at_fraction(g, n.get<double>("center", 0.5))[0], n.positive("width"));
        }
        if (recipe == "plane_waves") {
            n.only({"recipe"});
            return plane_wave_orbitals(g, M);
        }
        if (recipe == "random") {
            n.only({"recipe", "band"});
            return random_orbitals(g, M, seed, n.get<int>("band", 0));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidArgument& e) {
        n.fail(e.what());
    }
    n.fail("unknown orbital recipe '" + recipe + "' (hermite, plane_waves, random)");
}

/// Boson recipe: gaussian {center (box fraction), momentum, width}.
inline Field parse_phi(const Node& n, const SpectralGrid& g) {
    const auto recipe = n.get<std::string>("recipe");
    if (recipe != "gaussian") n.fail("unknown phi recipe '" + recipe + "' (gaussian)");
    n.only({"recipe", "center", "momentum", "width"});
    return gaussian_packet(g, at_fraction(g, n.get<double>("center", 0.5)), {n.get<double>("momentum", 0.0), 0, 0},
                           n.positive("width"));
}

/// Phase-space recipes on the x grid times symmetric(p_count, p_max):
/// thomas_fermi {left, right, edge, p_edge, c} or gaussian {center, momentum, sx, sp}.
inline PhaseSpaceDistribution parse_f(const Node& n, const SpectralGrid& g) {
    const auto recipe = n.get<std::string>("recipe");
    const int count = n.get<int>("p_count");
    if (count < 4 || count > 4096) n.fail("'p_count' must lie in [4, 4096]");
    const auto axis = PhaseAxis::symmetric(count, n.positive("p_max"));
    try {
        if (recipe == "thomas_fermi") {
            n.only({"recipe", "p_count", "p_max", "left", "right", "edge", "p_edge", "c"});
            ThomasFermiSpec tf;
            tf.left = n.get<double>("left", tf.left);
            tf.right = n.get<double>("right", tf.right);
            tf.edge = n.get<double>("edge", tf.edge);
            tf.p_edge = n.get<double>("p_edge", tf.p_edge);
            tf.c = n.get<double>("c", tf.c);
            return thomas_fermi(g, axis, tf);
        }
        if (recipe == "gaussian") {
            n.only({"recipe", "p_count", "p_max", "center", "momentum", "sx", "sp"});
            return gaussian_phase_density(g, axis, at_fraction(g, n.get<double>("center", 0.5)),
                                          {n.get<double>("momentum", 0.0), 0, 0}, n.positive("sx"), n.positive("sp"));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidArgument& e) {
        n.fail(e.what());
    }
    n.fail("unknown f recipe '" + recipe + "' (thomas_fermi, gaussian)");
}

struct TimeConfig {
    double T = 0.0;
    double dt = 0.0;
    long steps = 0;
    long sample_every = 1;
};

/// {T, dt, sample_every} or {T, dt, checkpoint_every}; T must be a multiple of dt.
inline TimeConfig parse_time(const Node& n) {
    n.only({"T", "dt", "sample_every", "checkpoint_every"});
    TimeConfig t{n.nonnegative("T"), n.positive("dt")};
    try {
        t.steps = step_count(t.T, t.dt);
    } catch (const InvalidArgument& e) {
        n.fail(e.what());
    }
    if (n.has("checkpoint_every")) {
        const double ce = n.positive("checkpoint_every");
        t.sample_every = std::lround(ce / t.dt);
        if (t.sample_every < 1 || std::abs(t.sample_every * t.dt - ce) > 1e-9 * ce)
            n.fail("'checkpoint_every' must be a multiple of dt");
    } else {
        t.sample_every = n.get<long>("sample_every", std::max(1L, t.steps));
        if (t.sample_every < 1) n.fail("'sample_every' must be positive");
    }
    return t;
}

}  // namespace bflab
