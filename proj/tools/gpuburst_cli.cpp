#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "gpuburst/economics/economics.hpp"
#include "gpuburst/errors.hpp"
#include "gpuburst/scenario/runner.hpp"
#include "gpuburst/scenario/scenario.hpp"

namespace {

namespace fs = std::filesystem;
using namespace gpuburst;

constexpr int kOk = 0;
constexpr int kValidationFailure = 1;
constexpr int kAcceptanceFailure = 2;
constexpr int kInternalError = 3;

constexpr const char* kOutDirEnv = "GPUBURST_OUT_DIR";

fs::path default_out_dir(const scenario::Scenario& s) {
    if (const char* env = std::getenv(kOutDirEnv); env && *env) return fs::path(env) / s.name;
    return fs::path("out") / s.name;
}

void print_problems(const ValidationError& e) {
    std::cerr << "invalid scenario:\n";
    for (const auto& p : e.problems()) std::cerr << "  " << p << '\n';
}

int cmd_simulate(const std::string& path, std::optional<std::uint64_t> seed, double scale,
                 const std::string& out, bool check) {
    auto s = scenario::parse_scenario(path);
    if (seed) s.seed = *seed;
    s = scenario::scaled(s, scale);
    const fs::path dir = out.empty() ? default_out_dir(s) : fs::path(out);

    const auto result = scenario::run(s);
    const auto checks = scenario::evaluate_checks(result);
    const auto manifest = scenario::emit_outputs(result, dir, checks);

    std::cout << fmt::format("scenario {} seed {} scale {} ({:.2f} s wall)\n\n", s.name, s.seed, s.scale,
                             result.wall_seconds);
    std::cout << economics::format_peak_table(result.peak) << '\n' << economics::format_totals_table(result.totals);
    std::cout << fmt::format("\nmilestones: 65% at {:.0f} s, 90% at {:.0f} s\n", result.milestone_65_s,
                             result.milestone_90_s);
    for (const auto& p : manifest) std::cout << "wrote " << p.string() << '\n';
    if (!check) return kOk;

    bool all = true;
    std::cout << '\n';
    for (const auto& c : checks) {
        std::cout << fmt::format("[{}] {}: {}\n", c.passed ? "PASS" : "FAIL", c.name, c.detail);
        all = all && c.passed;
    }
    return all ? kOk : kAcceptanceFailure;
}

int cmd_validate(const std::string& path) {
    const auto s = scenario::parse_scenario(path);
    std::cout << fmt::format("{}: ok ({} regions, {} groups, {} provisioning steps)\n", s.name, s.regions.size(),
                             s.groups.size(), s.provisioning.size());
    return kOk;
}

int cmd_report(const std::string& dir, const std::string& gpu_table) {
    const fs::path trace_path = fs::path(dir) / "trace.csv";
    std::ifstream in(trace_path);
    if (!in) throw IoError("cannot read " + trace_path.string());
    const auto trace = sim::read_trace_csv(in);

    workload::WorkloadConfig cfg;
    if (std::ifstream summary(fs::path(dir) / "summary.json"); summary) {
        const auto j = nlohmann::json::parse(summary, nullptr, false);
        if (!j.is_discarded() && j.contains("small_size_factor")) cfg.small_size_factor = j["small_size_factor"].get<double>();
    }
    const auto table = gpu_table.empty() ? workload::GpuTable::builtin() : workload::GpuTable::load_csv(gpu_table);
    const workload::WorkloadModel model(table, cfg, {});
    const auto prices = economics::PriceBook::from_table(table);
    std::cout << economics::format_peak_table(economics::peak_report(trace, prices, table)) << '\n'
              << economics::format_totals_table(economics::totals_report(trace, prices, model));
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete-event simulator of a multi-cloud GPU burst"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::optional<std::uint64_t> seed;
    double scale = 0.01;
    std::string out;
    bool check = false;
    auto* sim = app.add_subcommand("simulate", "Run a scenario and write traces and reports");
    sim->add_option("scenario", scenario_path, "Scenario file")->required();
    sim->add_option("--seed", seed, "Override the scenario seed");
    sim->add_option("--scale", scale, "Multiply job counts, quotas, group sizes and launch rates")->capture_default_str();
    sim->add_option("--out", out, std::string("Output directory (default: $") + kOutDirEnv + "/<name> or out/<name>)");
    sim->add_flag("--check", check, "Evaluate acceptance checks; exit 2 if any fail");

    std::string validate_path;
    auto* val = app.add_subcommand("validate", "Parse and validate a scenario");
    val->add_option("scenario", validate_path, "Scenario file")->required();

    std::string report_dir;
    std::string gpu_table;
    auto* rep = app.add_subcommand("report", "Recompute peak and totals tables from a run directory");
    rep->add_option("trace-dir", report_dir, "Directory holding trace.csv")->required();
    rep->add_option("--gpu-table", gpu_table, "GPU table CSV (default: built-in)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kValidationFailure;
    }

    try {
        if (*sim) return cmd_simulate(scenario_path, seed, scale, out, check);
        if (*val) return cmd_validate(validate_path);
        if (*rep) return cmd_report(report_dir, gpu_table);
    } catch (const ValidationError& e) {
        print_problems(e);
        return kValidationFailure;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kValidationFailure;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kValidationFailure;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kInternalError;
    }
    return kInternalError;
}
