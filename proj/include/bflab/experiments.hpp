#pragma once

#include <filesystem>
#include <string>

#include "bflab/experiments_quantum.hpp"
#include "bflab/experiments_semiclassical.hpp"

namespace bflab {

inline const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> kinds{"hh-baseline",      "semiclassical-sweep", "meanfield-smallN",
                                                "stability-perturb", "commutator-monitor", "transform-roundtrip"};
    return kinds;
}

/// Parses and checks a config without running it. Throws ConfigError.
inline void validate_config(const json& cfg) {
    const Node root(cfg, "");
    const auto kind = root.get<std::string>("experiment");
    if (kind == "hh-baseline") plan_hh_baseline(root);
    else if (kind == "semiclassical-sweep") plan_semiclassical(root);
    else if (kind == "meanfield-smallN") plan_meanfield(root);
    else if (kind == "stability-perturb") plan_stability(root);
    else if (kind == "commutator-monitor") plan_commutator(root);
    else if (kind == "transform-roundtrip") plan_roundtrip(root);
    else root.fail("unknown experiment '" + kind + "'");
}

/// Runs a config. Deterministic given the config (including its seed).
inline RunReport run_experiment(const json& cfg) {
    const Node root(cfg, "");
    const auto kind = root.get<std::string>("experiment");
    RunReport rep;
    if (kind == "hh-baseline") rep = run_hh_baseline(plan_hh_baseline(root));
    else if (kind == "semiclassical-sweep") rep = run_semiclassical(plan_semiclassical(root));
    else if (kind == "meanfield-smallN") rep = run_meanfield(plan_meanfield(root));
    else if (kind == "stability-perturb") rep = run_stability(plan_stability(root));
    else if (kind == "commutator-monitor") rep = run_commutator(plan_commutator(root));
    else if (kind == "transform-roundtrip") rep = run_roundtrip(plan_roundtrip(root));
    else root.fail("unknown experiment '" + kind + "'");
    rep.experiment = kind;
    rep.config = cfg;
    return rep;
}

}  // namespace bflab
