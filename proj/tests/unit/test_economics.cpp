#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include <fmt/format.h>

#include "gpuburst/economics/economics.hpp"
#include "gpuburst/errors.hpp"

using namespace gpuburst;
using namespace gpuburst::economics;
using sim::SimTime;
using sim::seconds;

namespace {

PriceBook book() { return PriceBook::from_table(workload::GpuTable::builtin()); }

workload::WorkloadModel workload_model() {
    return workload::WorkloadModel(workload::GpuTable::builtin(), {}, {});
}

struct TraceBuilder {
    sim::EventTrace trace;
    sim::EventId seq = 0;

    TraceBuilder& state(double t, EntityId id, const char* from, const char* to, const char* gpu, bool rogue = false,
                        const char* reason = "") {
        trace.push_back({seconds(t), seq++, sim::EventKind::InstanceState, id,
                         fmt::format("from={};to={};gpu={};region=r0;group=0;rogue={};reason={}", from, to, gpu,
                                     rogue ? 1 : 0, reason)});
        return *this;
    }
    TraceBuilder& boot_and_run(double t, EntityId id, const char* gpu, bool rogue = false) {
        state(t, id, "Requested", "Booting", gpu, rogue);
        return state(t, id, "Booting", "Running", gpu, rogue);
    }
    TraceBuilder& complete(double t, JobId job, const char* gpu, const char* input) {
        trace.push_back({seconds(t), seq++, sim::EventKind::JobComplete, job,
                         fmt::format("gpu={};input={};region=r0;instance=0;schedd=0", gpu, input)});
        return *this;
    }
};

}  // namespace

TEST(PriceBook, PointPricesAndOnDemandMultiplier) {
    const auto p = book();
    EXPECT_DOUBLE_EQ(p.hourly_price(GpuModel::V100), 0.783);
    EXPECT_DOUBLE_EQ(p.hourly_price(GpuModel::K80), 0.232);
    EXPECT_NEAR(p.hourly_price(GpuModel::V100, Market::OnDemand), 2.349, 1e-12);
    EXPECT_FALSE(p.contains(GpuModel::GTX1080));
    EXPECT_THROW(p.hourly_price(GpuModel::GTX1080), UnknownGpuModel);
}

TEST(PriceBook, RangesArePublished) {
    const auto p = book();
    const std::map<GpuModel, std::pair<double, double>> published = {
        {GpuModel::V100, {0.6, 1.0}}, {GpuModel::P100, {0.4, 0.6}}, {GpuModel::P40, {0.4, 0.6}},
        {GpuModel::T4, {0.2, 0.3}},   {GpuModel::P4, {0.2, 0.2}},   {GpuModel::M60, {0.2, 0.3}},
        {GpuModel::K80, {0.13, 0.3}}, {GpuModel::K520, {0.2, 0.2}},
    };
    for (const auto& [gpu, range] : published) {
        EXPECT_DOUBLE_EQ(p.entry(gpu).min, range.first) << workload::to_string(gpu);
        EXPECT_DOUBLE_EQ(p.entry(gpu).max, range.second) << workload::to_string(gpu);
    }
}

TEST(PriceBook, SetRejectsPointOutsideRange) {
    PriceBook p;
    EXPECT_THROW(p.set(GpuModel::T4, {0.3, 0.2, 0.25}), ValidationError);
    EXPECT_THROW(p.set(GpuModel::T4, {0.2, 0.3, 0.35}), ValidationError);
    EXPECT_THROW(p.set(GpuModel::T4, {-0.1, 0.3, 0.2}), ValidationError);
    p.set(GpuModel::T4, {0.2, 0.3, 0.25});
    EXPECT_DOUBLE_EQ(p.hourly_price(GpuModel::T4), 0.25);
}

TEST(IntervalCost, BillsStartedSeconds) {
    EXPECT_DOUBLE_EQ(interval_cost(0.783, SimTime{}, seconds(3600)), 0.783);
    EXPECT_DOUBLE_EQ(interval_cost(3.6, SimTime{}, SimTime::from_ms(1)), 0.001);
    EXPECT_DOUBLE_EQ(interval_cost(3.6, SimTime{}, SimTime::from_ms(1001)), 0.002);
    EXPECT_DOUBLE_EQ(interval_cost(1.0, seconds(5), seconds(5)), 0.0);
}

TEST(CostLedger, AccruesAndRejectsOverlap) {
    CostLedger ledger(book());
    ledger.accrue(1, GpuModel::V100, "r0", SimTime{}, seconds(3600), false);
    ledger.accrue(1, GpuModel::V100, "r0", seconds(3600), seconds(5400), false);
    EXPECT_THROW(ledger.accrue(1, GpuModel::V100, "r0", seconds(5000), seconds(6000), false), OverlappingInterval);
    EXPECT_THROW(ledger.accrue(2, GpuModel::V100, "r0", seconds(10), seconds(5), false), OverlappingInterval);
    ledger.accrue(2, GpuModel::K80, "r1", seconds(5000), seconds(8600), true);
    EXPECT_NEAR(ledger.total(), 0.783 * 1.5 + 0.232, 1e-12);
    EXPECT_NEAR(ledger.rogue_total(), 0.232, 1e-12);
    EXPECT_NEAR(ledger.total_for(GpuModel::V100), 0.783 * 1.5, 1e-12);
    const auto regions = ledger.by_region();
    EXPECT_NEAR(regions.at("r1"), 0.232, 1e-12);
    EXPECT_EQ(ledger.entries().size(), 3u);
}

TEST(CostLedger, OnDemandMarketTriplesRates) {
    CostLedger ledger(book(), Market::OnDemand);
    ledger.accrue(1, GpuModel::V100, "r0", SimTime{}, seconds(3600), false);
    EXPECT_NEAR(ledger.total(), 2.349, 1e-12);
}

TEST(Reports, EmptyTraceThrows) {
    EXPECT_THROW(peak_report({}, book(), workload::GpuTable::builtin()), EmptyTrace);
    EXPECT_THROW(totals_report({}, book(), workload_model()), EmptyTrace);
    EXPECT_TRUE(running_curve({}).empty());
}

TEST(Reports, SingleV100Peak) {
    TraceBuilder b;
    b.boot_and_run(0, 1, "V100").state(3600, 1, "Running", "Terminated", "V100");
    const auto r = peak_report(b.trace, book(), workload::GpuTable::builtin());
    EXPECT_EQ(r.total_count, 1);
    EXPECT_NEAR(r.total_pflops32, 0.014, 1e-12);
    EXPECT_NEAR(r.total_cost_per_hour, 0.783, 1e-12);
    ASSERT_EQ(r.rows.size(), 1u);
    EXPECT_EQ(r.rows[0].gpu, GpuModel::V100);
    EXPECT_EQ(r.at, SimTime{});
}

TEST(Reports, BillingFollowsInstanceState) {
    // Running 1 h, Stopped 1 h (still billed), Deallocated 1 h (not billed).
    TraceBuilder b;
    b.boot_and_run(0, 1, "V100")
        .state(3600, 1, "Running", "Stopped", "V100")
        .state(7200, 1, "Stopped", "Deallocated", "V100")
        .state(10800, 1, "Deallocated", "Terminated", "V100");
    const auto t = totals_report(b.trace, book(), workload_model());
    EXPECT_NEAR(t.cost, 2 * 0.783, 1e-12);
    EXPECT_NEAR(t.walltime_hours, 1.0, 1e-12);
    EXPECT_NEAR(t.pflop32_hours, 0.014, 1e-12);
    EXPECT_EQ(t.rogue_cost, 0.0);
}

TEST(Reports, OpenSpansCloseAtTraceEnd) {
    TraceBuilder b;
    b.boot_and_run(0, 1, "K80");
    b.state(1800, 2, "Requested", "Booting", "T4");
    b.complete(3600, 0, "K80", "Small");
    const auto t = totals_report(b.trace, book(), workload_model());
    EXPECT_NEAR(t.cost, 0.232 + 0.261 * 0.5, 1e-12);
    EXPECT_NEAR(t.walltime_hours, 1.0, 1e-12);
    EXPECT_EQ(t.end, seconds(3600));
}

TEST(Reports, RoguesCostButDoNotCountAsWalltime) {
    TraceBuilder b;
    b.boot_and_run(0, 1, "V100").boot_and_run(0, 2, "V100", true);
    b.state(1800, 2, "Running", "Terminated", "V100", true);
    b.state(3600, 1, "Running", "Terminated", "V100", false, "Preempted");
    const auto t = totals_report(b.trace, book(), workload_model());
    EXPECT_NEAR(t.walltime_hours, 1.0, 1e-12);
    EXPECT_NEAR(t.rogue_cost, 0.783 / 2, 1e-12);
    EXPECT_NEAR(t.cost, 0.783 * 1.5, 1e-12);
    EXPECT_EQ(t.preemptions, 1u);
    const auto p = peak_report(b.trace, book(), workload::GpuTable::builtin());
    EXPECT_EQ(p.total_count, 1);
}

TEST(Reports, ScienceFractionsWeightSmallJobs) {
    TraceBuilder b;
    b.boot_and_run(0, 1, "V100").boot_and_run(0, 2, "K80");
    for (int i = 0; i < 3; ++i) b.complete(1440.0 * (i + 1), static_cast<JobId>(i), "V100", "Standard");
    for (int i = 0; i < 8; ++i) b.complete(1035.0 * (i + 1), static_cast<JobId>(10 + i), "K80", "Small");
    const auto t = totals_report(b.trace, book(), workload_model());
    // 3 standard units and 8 eighth-units
    EXPECT_NEAR(t.science, 4.0, 1e-12);
    EXPECT_EQ(t.completed_jobs, 11u);
    std::map<GpuModel, double> frac;
    for (const auto& row : t.rows) frac[row.gpu] = row.science_fraction;
    EXPECT_NEAR(frac[GpuModel::V100], 0.75, 1e-12);
    EXPECT_NEAR(frac[GpuModel::K80], 0.25, 1e-12);
}

TEST(Reports, NoCompletionsMeansZeroScienceWithPositiveCost) {
    TraceBuilder b;
    b.boot_and_run(0, 1, "T4").state(600, 1, "Running", "Terminated", "T4");
    const auto t = totals_report(b.trace, book(), workload_model());
    EXPECT_GT(t.cost, 0.0);
    EXPECT_EQ(t.science, 0.0);
    for (const auto& row : t.rows) EXPECT_EQ(row.science_fraction, 0.0);
}

TEST(Reports, PublishedPeakCompositionCostsAboutTwentyThousandPerHour) {
    const std::map<const char*, int> counts = {{"V100", 9200}, {"P100", 7100}, {"P40", 2100}, {"T4", 4600},
                                               {"P4", 500},    {"M60", 10100}, {"K80", 12500}, {"K520", 5400}};
    TraceBuilder b;
    EntityId id = 0;
    double oracle = 0;
    for (const auto& [gpu, n] : counts) {
        for (int i = 0; i < n; ++i) b.boot_and_run(60, id++, gpu);
        oracle += n * book().hourly_price(workload::parse_gpu_model(gpu));
    }
    const auto r = peak_report(b.trace, book(), workload::GpuTable::builtin());
    EXPECT_EQ(r.total_count, 51500);
    EXPECT_NEAR(r.total_cost_per_hour, 19680.8, 1e-6);
    EXPECT_NEAR(r.total_cost_per_hour, oracle, 1e-6);
    EXPECT_NEAR(r.total_cost_per_hour, 19600, 19600 * 0.01);
    EXPECT_NEAR(r.total_pflops32, 373.36, 1e-9);
}

TEST(Reports, RunningCurveStepsAtChanges) {
    TraceBuilder b;
    b.boot_and_run(10, 1, "V100").boot_and_run(20, 2, "T4").state(30, 1, "Running", "Terminated", "V100");
    const auto curve = running_curve(b.trace);
    ASSERT_EQ(curve.size(), 3u);
    EXPECT_EQ(curve[0], std::make_pair(seconds(10), std::int64_t{1}));
    EXPECT_EQ(curve[1], std::make_pair(seconds(20), std::int64_t{2}));
    EXPECT_EQ(curve[2], std::make_pair(seconds(30), std::int64_t{1}));
}

TEST(Reports, CsvWritersEmitTotalsRow) {
    TraceBuilder b;
    b.boot_and_run(0, 1, "V100").state(3600, 1, "Running", "Terminated", "V100");
    b.complete(1440, 0, "V100", "Standard");
    std::stringstream peak, totals;
    write_peak_csv(peak, peak_report(b.trace, book(), workload::GpuTable::builtin()));
    write_totals_csv(totals, totals_report(b.trace, book(), workload_model()));
    EXPECT_EQ(peak.str(), "gpu,count,pflops32,cost_per_hour,cost_min,cost_max\n"
                          "V100,1,0.014,0.78,0.60,1.00\n"
                          "Total,1,0.014,0.78,,\n");
    EXPECT_NE(totals.str().find("V100,1.000,0.0140,0.78,1.000,1,"), std::string::npos);
}
