#include <CLI11.hpp>

#include <liouville/harness.hpp>

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

namespace h = liouville::harness;

namespace {

enum Exit { kPass = 0, kFail = 1, kConfigError = 2 };

void print_checks(const h::Report& r) {
    for (const auto& c : r.checks) {
        std::cout << (c.pass ? "PASS  " : "FAIL  ") << c.name << "  measured=" << h::format_number(c.measured);
        if (c.min) std::cout << "  min=" << h::format_number(*c.min);
        if (c.max) std::cout << "  max=" << h::format_number(*c.max);
        std::cout << '\n';
    }
    if (!r.error.empty()) std::cout << "error: " << r.error << '\n';
}

void print_files(const std::vector<std::filesystem::path>& files) {
    for (const auto& f : files) std::cout << "wrote " << f.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conserved-charge, zero-curvature and Backlund verification harness for the Liouville lattice and field theory"};
    app.require_subcommand(1);

    h::Overrides ov;
    std::uint64_t seed = 0;
    double scale = 1.0;
    auto add_overrides = [&](CLI::App* sub) {
        sub->add_option("--seed", seed, "Seed for all random sampling (overrides the config)");
        sub->add_option("--tolerance-scale", scale, "Multiplier for every upper-bound tolerance")
            ->check(CLI::PositiveNumber);
    };

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run one JSON configuration and write its report and series");
    run->add_option("--config", config_path, "Path to the JSON config")->required();
    add_overrides(run);

    std::string out_dir = "suite-out";
    auto* suite = app.add_subcommand("suite", "Run every mode at default parameters");
    suite->add_option("--out", out_dir, "Directory for reports, series and timing files");
    add_overrides(suite);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kPass : kConfigError;
    }
    for (auto* sub : {run, suite}) {
        if (sub->count("--seed")) ov.seed = seed;
        if (sub->count("--tolerance-scale")) ov.tolerance_scale = scale;
    }

    try {
        if (*run) {
            auto [report, secs] = h::timed([&] { return h::run(h::read_config(config_path), ov); });
            print_checks(report);
            const std::string dir = report.config.value("output_dir", std::string("."));
            print_files(h::write_artifacts(report, dir, report.mode, secs));
            std::cout << "status: " << (report.pass() ? "pass" : "fail") << " (" << report.checks.size() << " checks, "
                      << secs << " s)\n";
            return report.pass() ? kPass : kFail;
        }
        const auto result = h::suite(ov);
        for (const auto& r : result.runs) {
            std::cout << "== " << r.report.mode << " (" << r.seconds << " s)\n";
            print_checks(r.report);
        }
        print_files(h::write_suite(result, out_dir));
        std::cout << "status: " << (result.summary.pass() ? "pass" : "fail") << " (" << result.summary.checks.size()
                  << " checks, " << result.seconds << " s)\n";
        return result.summary.pass() ? kPass : kFail;
    } catch (const liouville::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFail;
    }
}
