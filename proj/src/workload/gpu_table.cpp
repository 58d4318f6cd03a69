#include "gpuburst/workload/gpu_table.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "gpuburst/errors.hpp"

namespace gpuburst::workload {
namespace {

constexpr std::string_view kHeader = "model,runtime_min,tflops32,corr,price_min,price_max,price_point";

constexpr std::string_view kBuiltinCsv =
#include "gpu_perf_builtin.inc"
    ;

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double number(const std::string& s, std::size_t lineno, std::string_view column) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("gpu table line " + std::to_string(lineno) + ": bad " + std::string(column) + " '" +
                         s + "'");
    }
}

}  // namespace

const GpuTable& GpuTable::builtin() {
    static const GpuTable table = parse_csv(kBuiltinCsv);
    return table;
}

GpuTable GpuTable::parse_csv(std::string_view text) {
    GpuTable table;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!header_seen) {
            if (line != kHeader) throw ParseError("gpu table: expected header '" + std::string(kHeader) + "'");
            header_seen = true;
            continue;
        }
        const auto f = split(line);
        if (f.size() != 7) {
            throw ParseError("gpu table line " + std::to_string(lineno) + ": expected 7 fields");
        }
        GpuPerfEntry e;
        e.model = parse_gpu_model(f[0]);
        e.runtime_standard_min = number(f[1], lineno, "runtime_min");
        e.peak_tflops32 = number(f[2], lineno, "tflops32");
        e.efficacy_correlation = number(f[3], lineno, "corr");
        if (e.runtime_standard_min <= 0 || e.peak_tflops32 <= 0 || e.efficacy_correlation <= 0) {
            throw ParseError("gpu table line " + std::to_string(lineno) + ": values must be positive");
        }
        const auto i = index_of(e.model);
        if (table.perf_[i]) throw ParseError("gpu table: duplicate row for " + f[0]);
        table.perf_[i] = e;

        const bool any_price = !f[4].empty() || !f[5].empty() || !f[6].empty();
        if (any_price) {
            PriceColumns p{number(f[4], lineno, "price_min"), number(f[5], lineno, "price_max"),
                           number(f[6], lineno, "price_point")};
            if (p.min <= 0 || p.min > p.max) {
                throw ParseError("gpu table line " + std::to_string(lineno) + ": bad price range");
            }
            table.price_[i] = p;
        }
    }
    if (!header_seen) throw ParseError("gpu table: empty input");
    return table;
}

GpuTable GpuTable::load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read gpu table " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str());
}

const GpuPerfEntry& GpuTable::perf(GpuModel m) const {
    const auto& e = perf_[index_of(m)];
    if (!e) throw UnknownGpuModel("no performance row for " + std::string(to_string(m)));
    return *e;
}

std::string GpuTable::to_csv() const {
    std::ostringstream out;
    out << kHeader << '\n';
    for (auto m : kAllGpuModels) {
        const auto& e = perf_[index_of(m)];
        if (!e) continue;
        out << to_string(m) << ',' << e->runtime_standard_min << ',' << e->peak_tflops32 << ','
            << e->efficacy_correlation << ',';
        if (const auto& p = price_[index_of(m)]) out << p->min << ',' << p->max << ',' << p->point;
        else out << ",,";
        out << '\n';
    }
    return out.str();
}

}  // namespace gpuburst::workload
