#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "gpuburst/economics/economics.hpp"
#include "gpuburst/errors.hpp"
#include "gpuburst/scenario/runner.hpp"
#include "gpuburst/scenario/scenario.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace gpuburst;

namespace {

py::dict peak_dict(const economics::PeakReport& p) {
    py::list rows;
    for (const auto& r : p.rows) {
        py::dict d;
        d["gpu"] = std::string(workload::to_string(r.gpu));
        d["count"] = r.count;
        d["pflops32"] = r.pflops32;
        d["cost_per_hour"] = r.cost_per_hour;
        d["cost_min"] = r.cost_min;
        d["cost_max"] = r.cost_max;
        rows.append(d);
    }
    py::dict d;
    d["at_s"] = p.at.seconds();
    d["total_count"] = p.total_count;
    d["total_pflops32"] = p.total_pflops32;
    d["total_cost_per_hour"] = p.total_cost_per_hour;
    d["rows"] = rows;
    return d;
}

py::dict totals_dict(const economics::TotalsReport& t) {
    py::list rows;
    for (const auto& r : t.rows) {
        py::dict d;
        d["gpu"] = std::string(workload::to_string(r.gpu));
        d["walltime_hours"] = r.walltime_hours;
        d["pflop32_hours"] = r.pflop32_hours;
        d["cost"] = r.cost;
        d["science"] = r.science;
        d["completed_jobs"] = r.completed_jobs;
        d["walltime_fraction"] = r.walltime_fraction;
        d["cost_fraction"] = r.cost_fraction;
        d["science_fraction"] = r.science_fraction;
        rows.append(d);
    }
    py::dict d;
    d["end_s"] = t.end.seconds();
    d["walltime_hours"] = t.walltime_hours;
    d["pflop32_hours"] = t.pflop32_hours;
    d["cost"] = t.cost;
    d["rogue_cost"] = t.rogue_cost;
    d["science"] = t.science;
    d["completed_jobs"] = t.completed_jobs;
    d["preemptions"] = t.preemptions;
    d["rows"] = rows;
    return d;
}

py::dict scenario_dict(const scenario::Scenario& s) {
    py::list regions, groups;
    for (const auto& r : s.regions) regions.append(r.spec.id);
    for (const auto& g : s.groups) groups.append(g.name);
    py::dict d;
    d["name"] = s.name;
    d["seed"] = s.seed;
    d["scale"] = s.scale;
    d["horizon_s"] = s.horizon.seconds();
    d["regions"] = regions;
    d["groups"] = groups;
    d["provisioning_steps"] = s.provisioning.size();
    d["has_expectations"] = !s.expect.empty();
    return d;
}

py::dict simulate(const fs::path& path, std::optional<std::uint64_t> seed, double scale,
                  std::optional<fs::path> out) {
    auto s = scenario::parse_scenario(path);
    if (seed) s.seed = *seed;
    s = scenario::scaled(s, scale);

    scenario::RunResult r;
    std::vector<scenario::CheckResult> checks;
    std::vector<fs::path> files;
    {
        py::gil_scoped_release release;
        r = scenario::run(s);
        checks = scenario::evaluate_checks(r);
        if (out) files = scenario::emit_outputs(r, *out, checks);
    }

    py::list check_list;
    bool all = true;
    for (const auto& c : checks) {
        py::dict d;
        d["name"] = c.name;
        d["passed"] = c.passed;
        d["detail"] = c.detail;
        check_list.append(d);
        all = all && c.passed;
    }
    py::list written;
    for (const auto& f : files) written.append(f.string());

    py::dict d;
    d["scenario"] = scenario_dict(r.scenario);
    d["peak"] = peak_dict(r.peak);
    d["totals"] = totals_dict(r.totals);
    d["milestone_65_s"] = r.milestone_65_s;
    d["milestone_90_s"] = r.milestone_90_s;
    d["ledger_total"] = r.ledger_total;
    d["end_alive"] = r.end_alive;
    d["end_rogue_alive"] = r.end_rogue_alive;
    d["trace_events"] = r.trace.size();
    d["checks"] = check_list;
    d["passed"] = all;
    d["files"] = written;
    d["wall_seconds"] = r.wall_seconds;
    return d;
}

py::dict report(const fs::path& dir, double small_size_factor, std::optional<fs::path> gpu_table) {
    const fs::path trace_path = dir / "trace.csv";
    std::ifstream in(trace_path);
    if (!in) throw IoError("cannot read " + trace_path.string());
    const auto trace = sim::read_trace_csv(in);
    const auto table = gpu_table ? workload::GpuTable::load_csv(*gpu_table) : workload::GpuTable::builtin();
    workload::WorkloadConfig cfg;
    cfg.small_size_factor = small_size_factor;
    const workload::WorkloadModel model(table, cfg, {});
    const auto prices = economics::PriceBook::from_table(table);
    py::dict d;
    d["peak"] = peak_dict(economics::peak_report(trace, prices, table));
    d["totals"] = totals_dict(economics::totals_report(trace, prices, model));
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "gpuburst simulator core";

    static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
    static py::exception<ValidationError> validation_error(m, "ValidationError", error.ptr());
    static py::exception<ParseError> parse_error(m, "ParseError", error.ptr());
    static py::exception<IoError> io_error(m, "IoError", error.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ValidationError& e) {
            py::object exc = py::reinterpret_borrow<py::object>(validation_error.ptr())(e.what());
            exc.attr("problems") = py::cast(e.problems());
            PyErr_SetObject(validation_error.ptr(), exc.ptr());
        } catch (const ParseError& e) {
            parse_error(e.what());
        } catch (const IoError& e) {
            io_error(e.what());
        } catch (const Error& e) {
            error(e.what());
        }
    });

    m.def("parse_scenario", [](const fs::path& path) { return scenario_dict(scenario::parse_scenario(path)); },
          py::arg("path"), "Parse and validate a scenario file; returns a short description.");
    m.def(
        "validate",
        [](const fs::path& path) {
            try {
                scenario::parse_scenario(path);
            } catch (const ValidationError& e) {
                return e.problems();
            }
            return std::vector<std::string>{};
        },
        py::arg("path"), "List of validation problems; empty when the scenario is valid. Raises ParseError.");
    m.def("simulate", &simulate, py::arg("path"), py::kw_only(), py::arg("seed") = py::none(), py::arg("scale") = 1.0,
          py::arg("out") = py::none(),
          "Run a scenario. Returns peak and totals tables, milestones and check results; writes the output "
          "files when `out` is given.");
    m.def("report", &report, py::arg("trace_dir"), py::kw_only(), py::arg("small_size_factor") = 0.125,
          py::arg("gpu_table") = py::none(), "Recompute peak and totals tables from a run directory.");
}
