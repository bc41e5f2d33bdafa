#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "bflab/io.hpp"

namespace bflab {

/// One pass/fail decision: `value` compared against a config threshold.
struct Flag {
    std::string name;
    std::string rule;  ///< acceptance rule the flag implements
    double value = 0.0;
    double threshold = 0.0;
    bool passed = false;
};

struct RunReport {
    std::string experiment;
    json config;
    json metrics = json::object();
    std::map<std::string, Table> tables;
    std::vector<Flag> flags;
    double wall_seconds = 0.0;

    bool passed() const {
        for (const auto& f : flags)
            if (!f.passed) return false;
        return true;
    }

    const Flag* flag(const std::string& name) const {
        for (const auto& f : flags)
            if (f.name == name) return &f;
        return nullptr;
    }

    /// value <= threshold
    void at_most(const std::string& name, const std::string& rule, double value, double threshold) {
        flags.push_back({name, rule, value, threshold, value <= threshold});
    }

    /// value >= threshold
    void at_least(const std::string& name, const std::string& rule, double value, double threshold) {
        flags.push_back({name, rule, value, threshold, value >= threshold});
    }

    void holds(const std::string& name, const std::string& rule, bool ok) {
        flags.push_back({name, rule, ok ? 1.0 : 0.0, 1.0, ok});
    }

    /// Everything except wall-clock time, so equal configs give equal bytes.
    json to_json() const {
        json j;
        j["experiment"] = experiment;
        j["config"] = config;
        j["metrics"] = metrics;
        json fl = json::array();
        for (const auto& f : flags)
            fl.push_back({{"name", f.name}, {"rule", f.rule}, {"value", f.value}, {"threshold", f.threshold},
                          {"passed", f.passed}});
        j["flags"] = fl;
        json files = json::array();
        for (const auto& [name, _] : tables) files.push_back(name + ".csv");
        j["series_files"] = files;
        j["passed"] = passed();
        return j;
    }

    /// report.json, timing.json, and <table>.csv / <table>.dat per table.
    void write(const std::filesystem::path& dir) const {
        std::filesystem::create_directories(dir);
        for (const auto& [name, t] : tables) {
            write_atomic(dir / (name + ".csv"), t.csv());
            write_atomic(dir / (name + ".dat"), t.dat());
        }
        write_json(dir / "timing.json", json{{"wall_seconds", wall_seconds}});
        write_json(dir / "report.json", to_json());
    }
};

class Stopwatch {
public:
    double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace bflab
