#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "gpuburst/errors.hpp"
#include "gpuburst/workload/gpu_table.hpp"
#include "gpuburst/workload/workload.hpp"

using namespace gpuburst;
using namespace gpuburst::workload;

namespace {

WorkloadModel model(double jitter = 0.0) {
    WorkloadConfig cfg;
    cfg.runtime_jitter = jitter;
    return WorkloadModel(GpuTable::builtin(), cfg,
                         {{"r1", 1e12, 1e12}, {"r2", 100e9, 100e9}});
}

// Peak composition and per-GPU fp32 peaks as published.
const std::map<GpuModel, int> kPeakCounts = {
    {GpuModel::V100, 9200}, {GpuModel::P100, 7100}, {GpuModel::P40, 2100},  {GpuModel::T4, 4600},
    {GpuModel::P4, 500},    {GpuModel::M60, 10100}, {GpuModel::K80, 12500}, {GpuModel::K520, 5400},
};

}  // namespace

TEST(GpuTable, BuiltinMatchesPublishedRuntimesAndPeaks) {
    const auto& t = GpuTable::builtin();
    const std::map<GpuModel, std::pair<double, double>> published = {
        {GpuModel::V100, {24, 14}},  {GpuModel::P100, {43, 9.5}}, {GpuModel::P40, {38, 12}},
        {GpuModel::T4, {50, 8.1}},   {GpuModel::P4, {80, 5.0}},   {GpuModel::M60, {95, 4.8}},
        {GpuModel::K80, {138, 4.1}}, {GpuModel::K520, {310, 2.3}}, {GpuModel::GTX1080, {50, 8.9}},
    };
    for (const auto& [gpu, rt] : published) {
        EXPECT_DOUBLE_EQ(t.perf(gpu).runtime_standard_min, rt.first) << to_string(gpu);
        EXPECT_DOUBLE_EQ(t.perf(gpu).peak_tflops32, rt.second) << to_string(gpu);
    }
    EXPECT_FALSE(t.price(GpuModel::GTX1080).has_value());
    ASSERT_TRUE(t.price(GpuModel::K80).has_value());
    EXPECT_DOUBLE_EQ(t.price(GpuModel::K80)->min, 0.13);
}

TEST(GpuTable, CsvRoundTrip) {
    const auto& t = GpuTable::builtin();
    const auto back = GpuTable::parse_csv(t.to_csv());
    for (auto m : kAllGpuModels) {
        ASSERT_EQ(back.contains(m), t.contains(m));
        EXPECT_DOUBLE_EQ(back.perf(m).runtime_standard_min, t.perf(m).runtime_standard_min);
    }
}

TEST(GpuTable, MissingRowThrows) {
    const auto t = GpuTable::parse_csv("model,runtime_min,tflops32,corr,price_min,price_max,price_point\n"
                                       "V100,24,14,1.1,0.6,1.0,0.783\n");
    EXPECT_TRUE(t.contains(GpuModel::V100));
    EXPECT_THROW(t.perf(GpuModel::K80), UnknownGpuModel);
}

TEST(GpuModelNames, ParseAndPrint) {
    EXPECT_EQ(parse_gpu_model("GTX 1080"), GpuModel::GTX1080);
    EXPECT_EQ(parse_gpu_model("K520"), GpuModel::K520);
    EXPECT_THROW(parse_gpu_model("A100"), UnknownGpuModel);
    for (auto m : kAllGpuModels) EXPECT_EQ(parse_gpu_model(to_string(m)), m);
}

TEST(Runtime, StandardJobsUseMeasuredMinutes) {
    const auto w = model();
    EXPECT_EQ(w.runtime_for(GpuModel::V100, InputClass::Standard), sim::seconds(1440));
    EXPECT_EQ(w.runtime_for(GpuModel::K520, InputClass::Standard), sim::seconds(18600));
}

TEST(Runtime, SmallJobsScaleByFactor) {
    const auto w = model();
    // 138 min * 60 / 8 and 310 min * 60 / 8.
    EXPECT_EQ(w.runtime_for(GpuModel::K80, InputClass::Small), sim::seconds(1035));
    EXPECT_EQ(w.runtime_for(GpuModel::K520, InputClass::Small), sim::seconds(2325));
}

TEST(Runtime, JitterIsBoundedAndSeeded) {
    const auto w = model(0.05);
    const double base = 1440.0;
    double lo = 1e9, hi = 0;
    for (int i = 0; i < 2000; ++i) {
        sim::RngStream a(5, "job/" + std::to_string(i));
        sim::RngStream b(5, "job/" + std::to_string(i));
        const auto ta = w.runtime_for(GpuModel::V100, InputClass::Standard, a);
        ASSERT_EQ(ta, w.runtime_for(GpuModel::V100, InputClass::Standard, b));
        lo = std::min(lo, ta.seconds());
        hi = std::max(hi, ta.seconds());
    }
    EXPECT_GE(lo, base * 0.95);
    EXPECT_LE(hi, base * 1.05);
    EXPECT_LT(lo, base * 0.96);
    EXPECT_GT(hi, base * 1.04);
}

TEST(Science, CompletedJobsOnly) {
    const auto w = model();
    EXPECT_DOUBLE_EQ(w.science_output(GpuModel::T4, InputClass::Standard, true).value, 1.0);
    EXPECT_DOUBLE_EQ(w.science_output(GpuModel::K80, InputClass::Small, true).value, 0.125);
    EXPECT_DOUBLE_EQ(w.science_output(GpuModel::V100, InputClass::Standard, false).value, 0.0);
}

TEST(Storage, ResolvesOnlyConfiguredRegions) {
    const auto w = model();
    EXPECT_EQ(w.resolve_storage("r1").region, "r1");
    EXPECT_THROW(w.resolve_storage("nowhere"), NoEndpointForRegion);
}

TEST(Storage, TransferTimeArithmetic) {
    const StorageEndpoint tbps{"r", 1e12, 1e12};
    const StorageEndpoint gbps100{"r", 100e9, 100e9};
    EXPECT_DOUBLE_EQ(WorkloadModel::transfer_time(0, tbps, Direction::Read), 0.0);
    EXPECT_NEAR(WorkloadModel::transfer_time(10e9, tbps, Direction::Read), 0.08, 1e-12);
    EXPECT_NEAR(WorkloadModel::transfer_time(10e9, gbps100, Direction::Write), 0.8, 1e-12);
}

TEST(Storage, IoTimeIsSubSecondAtBenchmarkRates) {
    const auto w = model();
    EXPECT_LT(w.io_time(InputClass::Standard, "r2"), sim::seconds(1));
    EXPECT_LT(w.io_time(InputClass::Small, "r2"), w.io_time(InputClass::Standard, "r2"));
}

TEST(Pflops, EmptyIsZero) {
    EXPECT_DOUBLE_EQ(model().pflops32_of(GpuCounts{}), 0.0);
}

TEST(Pflops, SingleModel) {
    GpuCounts c;
    c[GpuModel::V100] = 9200;
    EXPECT_NEAR(model().pflops32_of(c), 128.8, 1e-9);
}

TEST(Pflops, PeakCompositionMatchesPublishedTotal) {
    GpuCounts c;
    double oracle = 0;
    for (const auto& [gpu, n] : kPeakCounts) {
        c[gpu] = n;
        oracle += n * GpuTable::builtin().perf(gpu).peak_tflops32 / 1000.0;
    }
    const double got = model().pflops32_of(c);
    EXPECT_NEAR(got, 373.36, 1e-9);
    EXPECT_NEAR(got, oracle, 1e-9);
    EXPECT_NEAR(got, 379.4, 379.4 * 0.02);
}

TEST(Pflops, UnknownModelWithCountThrows) {
    const auto t = GpuTable::parse_csv("model,runtime_min,tflops32,corr,price_min,price_max,price_point\n"
                                       "V100,24,14,1.1,0.6,1.0,0.783\n");
    WorkloadModel w(t, {}, {});
    GpuCounts c;
    c[GpuModel::K80] = 1;
    EXPECT_THROW(w.pflops32_of(c), UnknownGpuModel);
    c[GpuModel::K80] = 0;
    EXPECT_DOUBLE_EQ(w.pflops32_of(c), 0.0);
}
