#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "bflab/experiments.hpp"

namespace fs = std::filesystem;
using namespace bflab;

namespace {

enum Exit { kOk = 0, kAcceptanceFailed = 1, kInvalidConfig = 2, kNumericalAbort = 3 };

void print_flags(const json& report, std::ostream& os) {
    for (const auto& f : report.at("flags"))
        os << "  " << (f.at("passed").get<bool>() ? "PASS" : "FAIL") << "  " << f.at("name").get<std::string>()
           << "  value=" << f.at("value").get<double>() << "  threshold=" << f.at("threshold").get<double>() << "  ("
           << f.at("rule").get<std::string>() << ")\n";
}

int cmd_validate(const fs::path& file) {
    try {
        validate_config(read_json(file));
    } catch (const std::exception& e) {
        std::cerr << "invalid config: " << e.what() << '\n';
        return kInvalidConfig;
    }
    std::cout << file.string() << ": ok\n";
    return kOk;
}

int cmd_run(const fs::path& file, std::string output, bool quiet) {
    json cfg;
    try {
        cfg = read_json(file);
        validate_config(cfg);
    } catch (const std::exception& e) {
        std::cerr << "invalid config: " << e.what() << '\n';
        return kInvalidConfig;
    }
    if (output.empty()) output = cfg.value("output", "out/" + cfg.at("experiment").get<std::string>());
    RunReport rep;
    try {
        rep = run_experiment(cfg);
    } catch (const NumericalAbort& e) {
        std::cerr << "numerical abort: " << e.what() << '\n';
        return kNumericalAbort;
    } catch (const BudgetExceeded& e) {
        std::cerr << "budget exceeded: " << e.what() << '\n';
        return kInvalidConfig;
    } catch (const InvalidArgument& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kInvalidConfig;
    }
    rep.write(output);
    if (!quiet) {
        std::cout << rep.experiment << " -> " << output << " (" << rep.wall_seconds << " s)\n";
        print_flags(rep.to_json(), std::cout);
    }
    return rep.passed() ? kOk : kAcceptanceFailed;
}

int cmd_report(const fs::path& dir) {
    std::vector<fs::path> reports;
    if (fs::is_regular_file(dir / "report.json")) reports.push_back(dir / "report.json");
    else if (fs::is_directory(dir))
        for (const auto& e : fs::recursive_directory_iterator(dir))
            if (e.is_regular_file() && e.path().filename() == "report.json") reports.push_back(e.path());
    if (reports.empty()) {
        std::cerr << "no report.json under " << dir.string() << '\n';
        return kInvalidConfig;
    }
    std::sort(reports.begin(), reports.end());
    bool all = true;
    for (const auto& path : reports) {
        try {
            const json r = read_json(path);
            const bool ok = r.at("passed").get<bool>();
            all = all && ok;
            std::cout << (ok ? "PASS " : "FAIL ") << r.at("experiment").get<std::string>() << "  "
                      << path.parent_path().string() << '\n';
            print_flags(r, std::cout);
        } catch (const std::exception& e) {
            std::cerr << path.string() << ": malformed report: " << e.what() << '\n';
            return kInvalidConfig;
        }
    }
    return all ? kOk : kAcceptanceFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bose-Fermi mean-field and semiclassical experiment runner"};
    app.require_subcommand(1);

    std::string run_file, run_output, validate_file, report_dir;
    bool quiet = false;
    auto* run = app.add_subcommand("run", "run an experiment config and write its report");
    run->add_option("config", run_file, "JSON experiment config")->required();
    run->add_option("-o,--output", run_output, "output directory (default: config 'output' or out/<experiment>)");
    run->add_flag("-q,--quiet", quiet, "suppress the flag summary");
    auto* validate = app.add_subcommand("validate", "check a config against the schema without running it");
    validate->add_option("config", validate_file, "JSON experiment config")->required();
    auto* report = app.add_subcommand("report", "summarize report.json files under a directory");
    report->add_option("dir", report_dir, "run output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kInvalidConfig;
    }
    if (*run) return cmd_run(run_file, run_output, quiet);
    if (*validate) return cmd_validate(validate_file);
    return cmd_report(report_dir);
}
