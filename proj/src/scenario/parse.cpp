#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "gpuburst/errors.hpp"
#include "gpuburst/scenario/scenario.hpp"

namespace gpuburst::scenario {

namespace {

using providers::FaultKind;
using providers::FaultSpec;

// Collects typed reads with their field paths so every problem is reported.
class Reader {
public:
    std::vector<std::string> problems;

    void unknown_keys(const YAML::Node& node, const std::string& path, std::initializer_list<std::string_view> known) {
        if (!node.IsMap()) return;
        for (const auto& kv : node) {
            const auto key = kv.first.as<std::string>();
            if (std::find(known.begin(), known.end(), key) == known.end())
                problems.push_back(fmt::format("{}: unknown key '{}'", join(path, key), key));
        }
    }

    template <typename T>
    void read(const YAML::Node& parent, std::string_view key, const std::string& path, T& out) {
        const YAML::Node node = parent[std::string(key)];
        if (!node) return;
        try {
            out = node.as<T>();
        } catch (const YAML::Exception&) {
            problems.push_back(fmt::format("{}: expected {}", join(path, key), type_name<T>()));
        }
    }

    void read_time(const YAML::Node& parent, std::string_view key, const std::string& path, sim::SimTime& out) {
        double s = out.seconds();
        const auto before = problems.size();
        read(parent, key, path, s);
        if (problems.size() != before) return;
        if (!std::isfinite(s) || s < 0) {
            problems.push_back(fmt::format("{}: must be a non-negative number of seconds", join(path, key)));
            return;
        }
        out = sim::seconds(s);
    }

    template <typename Enum, typename Parse>
    void read_enum(const YAML::Node& parent, std::string_view key, const std::string& path, Enum& out, Parse parse) {
        std::string text;
        const auto before = problems.size();
        read(parent, key, path, text);
        if (problems.size() != before || !parent[std::string(key)]) return;
        try {
            out = parse(text);
        } catch (const Error& e) {
            problems.push_back(fmt::format("{}: {}", join(path, key), e.what()));
        }
    }

    bool require(const YAML::Node& parent, std::string_view key, const std::string& path) {
        if (parent[std::string(key)]) return true;
        problems.push_back(fmt::format("{}: required", join(path, key)));
        return false;
    }

    static std::string join(const std::string& path, std::string_view key) {
        return path.empty() ? std::string(key) : path + "." + std::string(key);
    }

private:
    template <typename T>
    static std::string_view type_name() {
        if constexpr (std::is_same_v<T, bool>) return "a boolean";
        else if constexpr (std::is_integral_v<T>) return "an integer";
        else if constexpr (std::is_floating_point_v<T>) return "a number";
        else if constexpr (std::is_same_v<T, std::string>) return "a string";
        else return "a list of strings";
    }
};

std::string at(std::string_view list, std::size_t i) { return fmt::format("{}[{}]", list, i); }

pool::JobClass parse_job_class(std::string_view s) {
    if (s == "GPU" || s == "gpu") return pool::JobClass::Gpu;
    if (s == "CPU" || s == "cpu") return pool::JobClass::Cpu;
    throw ParseError(fmt::format("unknown job class '{}'", s));
}

OperatorKind parse_operator_kind(std::string_view s) {
    if (s == "ManualRecovery") return OperatorKind::ManualRecovery;
    if (s == "ManualSweep") return OperatorKind::ManualSweep;
    throw ParseError(fmt::format("unknown operator action '{}'", s));
}

void read_target(Reader& rd, const YAML::Node& node, const std::string& path, std::optional<Target>& out) {
    if (!node) return;
    Target t;
    rd.read(node, "value", path, t.value);
    rd.read(node, "rel_tol", path, t.rel_tol);
    out = t;
}

void read_range(Reader& rd, const YAML::Node& node, const std::string& path, std::optional<Range>& out) {
    if (!node) return;
    if (!node.IsSequence() || node.size() != 2) {
        rd.problems.push_back(fmt::format("{}: expected [lo, hi]", path));
        return;
    }
    try {
        out = Range{node[0].as<double>(), node[1].as<double>()};
    } catch (const YAML::Exception&) {
        rd.problems.push_back(fmt::format("{}: expected [lo, hi]", path));
    }
}

void read_model_targets(Reader& rd, const YAML::Node& node, const std::string& path, double rel_tol,
                        std::map<GpuModel, Target>& out) {
    if (!node) return;
    if (!node.IsMap()) {
        rd.problems.push_back(fmt::format("{}: expected a map of GPU model to value", path));
        return;
    }
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        try {
            out[workload::parse_gpu_model(key)] = Target{kv.second.as<double>(), rel_tol};
        } catch (const Error& e) {
            rd.problems.push_back(fmt::format("{}.{}: {}", path, key, e.what()));
        } catch (const YAML::Exception&) {
            rd.problems.push_back(fmt::format("{}.{}: expected a number", path, key));
        }
    }
}

void read_expectations(Reader& rd, const YAML::Node& node, Expectations& e) {
    if (!node) return;
    const std::string p = "expect";
    rd.unknown_keys(node, p,
                    {"peak_total", "peak_counts", "peak_pflops32", "milestone_65_s", "milestone_90_s",
                     "walltime_hours", "pflop32_hours", "model_pflop32_hours", "cost_per_hour",
                     "cost_within_price_range", "science_fraction"});
    read_target(rd, node["peak_total"], p + ".peak_total", e.peak_total);
    if (const auto pc = node["peak_counts"]) {
        double tol = 0;
        rd.read(pc, "rel_tol", p + ".peak_counts", tol);
        read_model_targets(rd, pc["values"], p + ".peak_counts.values", tol, e.peak_counts);
    }
    read_target(rd, node["peak_pflops32"], p + ".peak_pflops32", e.peak_pflops32);
    read_range(rd, node["milestone_65_s"], p + ".milestone_65_s", e.milestone_65_s);
    read_range(rd, node["milestone_90_s"], p + ".milestone_90_s", e.milestone_90_s);
    read_target(rd, node["walltime_hours"], p + ".walltime_hours", e.walltime_hours);
    read_target(rd, node["pflop32_hours"], p + ".pflop32_hours", e.pflop32_hours);
    if (const auto mp = node["model_pflop32_hours"]) {
        double tol = 0;
        rd.read(mp, "rel_tol", p + ".model_pflop32_hours", tol);
        read_model_targets(rd, mp["values"], p + ".model_pflop32_hours.values", tol, e.model_pflop32_hours);
    }
    read_target(rd, node["cost_per_hour"], p + ".cost_per_hour", e.cost_per_hour);
    rd.read(node, "cost_within_price_range", p, e.cost_within_price_range);
    if (const auto sf = node["science_fraction"]) {
        for (const auto& kv : sf) {
            const auto key = kv.first.as<std::string>();
            std::optional<Range> r;
            read_range(rd, kv.second, p + ".science_fraction." + key, r);
            if (r) e.science_fraction[key] = *r;
        }
    }
}

Scenario from_yaml(const YAML::Node& root, std::string name) {
    if (!root.IsMap()) throw ParseError("scenario must be a mapping at the top level");
    Reader rd;
    Scenario s;
    s.name = std::move(name);
    rd.unknown_keys(root, "",
                    {"name", "seed", "horizon_s", "sample_s", "pool", "workload", "providers", "gpu_table", "regions",
                     "groups", "provisioning", "shutdown", "faults", "operator", "expect"});
    rd.read(root, "name", "", s.name);
    rd.read(root, "seed", "", s.seed);
    rd.read_time(root, "horizon_s", "", s.horizon);
    rd.read_time(root, "sample_s", "", s.sample_period);
    if (root["gpu_table"]) {
        std::string path;
        rd.read(root, "gpu_table", "", path);
        s.gpu_table_path = path;
    }

    if (const auto p = root["pool"]) {
        const std::string path = "pool";
        rd.unknown_keys(p, path,
                        {"gpu_schedds", "cpu_schedds", "schedd_cap", "cpu_slots_per_instance", "leaves_per_region",
                         "registration_service_ms", "forward_latency_s", "cycle_s", "prefetch_bug"});
        rd.read(p, "gpu_schedds", path, s.pool.gpu_schedds);
        rd.read(p, "cpu_schedds", path, s.pool.cpu_schedds);
        rd.read(p, "schedd_cap", path, s.pool.schedd_cap);
        rd.read(p, "cpu_slots_per_instance", path, s.pool.cpu_slots_per_instance);
        rd.read(p, "leaves_per_region", path, s.pool.collector.leaves_per_region);
        if (p["registration_service_ms"]) {
            std::int64_t ms = 0;
            rd.read(p, "registration_service_ms", path, ms);
            s.pool.collector.registration_service = sim::SimTime::from_ms(ms);
        }
        rd.read_time(p, "forward_latency_s", path, s.pool.collector.forward_latency);
        rd.read_time(p, "cycle_s", path, s.pool.negotiator.cycle_period);
        rd.read(p, "prefetch_bug", path, s.pool.negotiator.prefetch_bug);
    }

    if (const auto pr = root["providers"]) {
        rd.unknown_keys(pr, "providers", {"tick_s"});
        rd.read_time(pr, "tick_s", "providers", s.provider_tick);
    }

    if (const auto w = root["workload"]) {
        const std::string path = "workload";
        rd.unknown_keys(w, path,
                        {"small_size_factor", "runtime_jitter", "input_bytes", "output_bytes", "jobs", "replicas"});
        rd.read(w, "small_size_factor", path, s.workload.small_size_factor);
        rd.read(w, "runtime_jitter", path, s.workload.runtime_jitter);
        rd.read(w, "input_bytes", path, s.workload.input_bytes);
        rd.read(w, "output_bytes", path, s.workload.output_bytes);
        const auto jobs = w["jobs"];
        for (std::size_t i = 0; jobs && i < jobs.size(); ++i) {
            const auto j = jobs[i];
            const std::string jp = path + "." + at("jobs", i);
            rd.unknown_keys(j, jp, {"class", "input", "count"});
            JobBatch b;
            rd.read_enum(j, "class", jp, b.cls, parse_job_class);
            rd.read_enum(j, "input", jp, b.input, workload::parse_input_class);
            if (rd.require(j, "count", jp)) rd.read(j, "count", jp, b.count);
            s.jobs.push_back(b);
        }
        if (const auto rep = w["replicas"]) {
            for (const auto& kv : rep) {
                const auto key = kv.first.as<std::string>();
                try {
                    s.replicas[workload::parse_input_class(key)] = kv.second.as<std::vector<std::string>>();
                } catch (const Error& e) {
                    rd.problems.push_back(fmt::format("{}.replicas.{}: {}", path, key, e.what()));
                } catch (const YAML::Exception&) {
                    rd.problems.push_back(fmt::format("{}.replicas.{}: expected a list of region ids", path, key));
                }
            }
        }
    }

    const auto regions = root["regions"];
    for (std::size_t i = 0; regions && i < regions.size(); ++i) {
        const auto r = regions[i];
        const std::string rp = at("regions", i);
        rd.unknown_keys(r, rp,
                        {"id", "provider", "geo", "quota", "boot", "wan_latency_s", "launch_rate_per_min", "collector",
                         "storage_read_bps", "storage_write_bps"});
        RegionConfig rc;
        if (rd.require(r, "id", rp)) rd.read(r, "id", rp, rc.spec.id);
        if (rd.require(r, "provider", rp)) rd.read_enum(r, "provider", rp, rc.spec.provider, providers::parse_provider);
        rd.read(r, "geo", rp, rc.spec.geo_area);
        rd.read(r, "wan_latency_s", rp, rc.spec.wan_latency_s);
        rd.read(r, "launch_rate_per_min", rp, rc.spec.launch_rate_per_min);
        rd.read(r, "collector", rp, rc.has_collector);
        rd.read(r, "storage_read_bps", rp, rc.storage_read_bps);
        rd.read(r, "storage_write_bps", rp, rc.storage_write_bps);
        if (const auto b = r["boot"]) {
            rd.unknown_keys(b, rp + ".boot", {"median_s", "sigma"});
            rd.read(b, "median_s", rp + ".boot", rc.spec.boot.median_s);
            rd.read(b, "sigma", rp + ".boot", rc.spec.boot.sigma);
        }
        if (const auto q = r["quota"]) {
            for (const auto& kv : q) {
                const auto key = kv.first.as<std::string>();
                try {
                    rc.spec.quota[workload::parse_gpu_model(key)] = kv.second.as<std::int64_t>();
                } catch (const Error& e) {
                    rd.problems.push_back(fmt::format("{}.quota.{}: {}", rp, key, e.what()));
                } catch (const YAML::Exception&) {
                    rd.problems.push_back(fmt::format("{}.quota.{}: expected an integer", rp, key));
                }
            }
        }
        s.regions.push_back(std::move(rc));
    }

    const auto groups = root["groups"];
    for (std::size_t i = 0; groups && i < groups.size(); ++i) {
        const auto g = groups[i];
        const std::string gp = at("groups", i);
        rd.unknown_keys(g, gp, {"name", "region", "gpu", "max_size"});
        GroupSpec spec;
        if (rd.require(g, "name", gp)) rd.read(g, "name", gp, spec.name);
        if (rd.require(g, "region", gp)) rd.read(g, "region", gp, spec.region);
        rd.read(g, "max_size", gp, spec.max_size);
        if (rd.require(g, "gpu", gp)) {
            std::vector<std::string> names;
            const auto node = g["gpu"];
            try {
                names = node.IsSequence() ? node.as<std::vector<std::string>>()
                                          : std::vector<std::string>{node.as<std::string>()};
            } catch (const YAML::Exception&) {
                rd.problems.push_back(fmt::format("{}.gpu: expected a model name or list", gp));
            }
            for (const auto& n : names) {
                try {
                    spec.gpus.push_back(workload::parse_gpu_model(n));
                } catch (const Error& e) {
                    rd.problems.push_back(fmt::format("{}.gpu: {}", gp, e.what()));
                }
            }
        }
        s.groups.push_back(std::move(spec));
    }

    const auto prov = root["provisioning"];
    for (std::size_t i = 0; prov && i < prov.size(); ++i) {
        const auto a = prov[i];
        const std::string ap = at("provisioning", i);
        rd.unknown_keys(a, ap, {"t_s", "group", "size"});
        ProvisionStep step;
        rd.read_time(a, "t_s", ap, step.at);
        if (rd.require(a, "group", ap)) rd.read(a, "group", ap, step.group);
        if (rd.require(a, "size", ap)) rd.read(a, "size", ap, step.size);
        s.provisioning.push_back(std::move(step));
    }

    if (const auto sd = root["shutdown"]) {
        rd.unknown_keys(sd, "shutdown", {"t_s"});
        sim::SimTime t;
        if (rd.require(sd, "t_s", "shutdown")) {
            rd.read_time(sd, "t_s", "shutdown", t);
            s.shutdown_at = t;
        }
    }

    const auto faults = root["faults"];
    for (std::size_t i = 0; faults && i < faults.size(); ++i) {
        const auto f = faults[i];
        const std::string fp = at("faults", i);
        rd.unknown_keys(f, fp,
                        {"kind", "regions", "start_s", "end_s", "stall_fraction", "rogue_per_call", "rate_per_hour"});
        FaultSpec spec;
        if (rd.require(f, "kind", fp)) rd.read_enum(f, "kind", fp, spec.kind, providers::parse_fault_kind);
        rd.read(f, "regions", fp, spec.regions);
        rd.read_time(f, "start_s", fp, spec.start);
        spec.end = s.horizon;
        rd.read_time(f, "end_s", fp, spec.end);
        rd.read(f, "stall_fraction", fp, spec.stall_fraction);
        rd.read(f, "rogue_per_call", fp, spec.rogue_per_call);
        rd.read(f, "rate_per_hour", fp, spec.preemption_rate_per_hour);
        s.faults.push_back(std::move(spec));
    }

    const auto ops = root["operator"];
    for (std::size_t i = 0; ops && i < ops.size(); ++i) {
        const auto o = ops[i];
        const std::string op = at("operator", i);
        rd.unknown_keys(o, op, {"t_s", "action", "region"});
        OperatorStep step;
        rd.read_time(o, "t_s", op, step.at);
        if (rd.require(o, "action", op)) rd.read_enum(o, "action", op, step.kind, parse_operator_kind);
        if (rd.require(o, "region", op)) rd.read(o, "region", op, step.region);
        s.operator_steps.push_back(std::move(step));
    }

    read_expectations(rd, root["expect"], s.expect);

    if (!rd.problems.empty()) throw ValidationError(std::move(rd.problems));
    return s;
}

}  // namespace

Scenario parse_scenario_text(std::string_view text, std::string name) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::Exception& e) {
        throw ParseError(fmt::format("{}: {}", name, e.what()));
    }
    if (!root || root.IsNull()) throw ParseError(fmt::format("{}: empty scenario", name));
    Scenario s = from_yaml(root, std::move(name));
    auto problems = validate(s);
    if (!problems.empty()) throw ValidationError(std::move(problems));
    return s;
}

Scenario parse_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot read {}", path.string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    Scenario s = parse_scenario_text(buf.str(), path.stem().string());
    if (s.gpu_table_path && s.gpu_table_path->is_relative()) s.gpu_table_path = path.parent_path() / *s.gpu_table_path;
    return s;
}

}  // namespace gpuburst::scenario
