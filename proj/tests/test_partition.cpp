#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "epic/partition.hpp"
#include "epic/rng.hpp"

using namespace epic;

namespace {

SequenceRecord rec(std::string id, std::string country, int month, std::string lineage) {
    return {std::move(id), "ACDE", std::move(country), month, "2020-01", std::move(lineage)};
}

std::vector<SequenceRecord> uniform_records(std::size_t n, std::string country = "c", int month = 0,
                                            std::string lineage = "L") {
    std::vector<SequenceRecord> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(rec("r" + std::to_string(i), country, month, lineage));
    return out;
}

std::set<std::uint32_t> as_set(const std::vector<std::uint32_t>& v) { return {v.begin(), v.end()}; }

// every index lands in exactly one of the four sets of exactly one cell
void expect_plan_invariants(const PartitionPlan& plan, const std::vector<SequenceRecord>& records) {
    std::vector<int> seen(records.size(), 0);
    for (std::size_t mi = 0; mi < plan.months.size(); ++mi)
        for (std::size_t ci = 0; ci < plan.countries.size(); ++ci) {
            const auto& cell = plan.cells[mi][ci];
            for (const auto* part : {&cell.gt, &cell.gtr, &cell.ltr, &cell.lt})
                for (auto i : *part) {
                    ASSERT_LT(i, records.size());
                    EXPECT_EQ(records[i].month, plan.months[mi]);
                    EXPECT_EQ(records[i].country, plan.countries[ci]);
                    ++seen[i];
                }
        }
    for (std::size_t i = 0; i < records.size(); ++i) EXPECT_EQ(seen[i], 1) << "index " << i;

    // leak-freedom: nothing in a training set appears in any test set
    std::set<std::uint32_t> train, test;
    for (const auto& row : plan.cells)
        for (const auto& cell : row) {
            train.insert(cell.ltr.begin(), cell.ltr.end());
            train.insert(cell.gtr.begin(), cell.gtr.end());
            test.insert(cell.gt.begin(), cell.gt.end());
            test.insert(cell.lt.begin(), cell.lt.end());
        }
    for (auto i : train) EXPECT_FALSE(test.count(i));
}

} // namespace

TEST(FilterOps, MonthAndCountry) {
    std::vector<SequenceRecord> rs = {rec("a", "England", 0, "L"), rec("b", "USA", 1, "L"),
                                      rec("c", "England", 0, "L")};
    EXPECT_EQ(filter_month(rs, 0), (std::vector<std::uint32_t>{0, 2}));
    EXPECT_EQ(filter_month(rs, 7), std::vector<std::uint32_t>{});
    std::vector<std::uint32_t> all = {0, 1, 2};
    EXPECT_EQ(filter_country(rs, all, "England"), (std::vector<std::uint32_t>{0, 2}));
    EXPECT_EQ(filter_country(rs, all, "Spain"), std::vector<std::uint32_t>{});
    // filters commute
    EXPECT_EQ(filter_country(rs, filter_month(rs, 0), "England"),
              filter_month(rs, 0).size() == 2 ? (std::vector<std::uint32_t>{0, 2}) : std::vector<std::uint32_t>{});
}

TEST(FilterOps, MonthsPartitionAllRecords) {
    std::vector<SequenceRecord> rs;
    Rng rng(6);
    for (int i = 0; i < 40; ++i) rs.push_back(rec("r" + std::to_string(i), "c", int(rng.below(4)), "L"));
    std::set<std::uint32_t> seen;
    for (int m = 0; m < 4; ++m)
        for (auto i : filter_month(rs, m)) EXPECT_TRUE(seen.insert(i).second);
    EXPECT_EQ(seen.size(), rs.size());
}

TEST(Split, SizesDisjointnessDeterminism) {
    std::vector<std::uint32_t> idx(10);
    std::iota(idx.begin(), idx.end(), 100);
    std::vector<int> labels(200, 0);
    Rng r1(42), r2(42);
    const auto [held1, rest1] = split(idx, 0.30, r1, labels, false);
    const auto [held2, rest2] = split(idx, 0.30, r2, labels, false);
    EXPECT_EQ(held1.size(), 3u);
    EXPECT_EQ(rest1.size(), 7u);
    EXPECT_EQ(held1, held2);
    EXPECT_EQ(rest1, rest2);
    auto all = as_set(held1);
    for (auto i : rest1) EXPECT_TRUE(all.insert(i).second);
    EXPECT_EQ(all.size(), 10u);
}

TEST(Split, StratifiedKeepsClassBalance) {
    // 100 indices, labels 50/50, fraction 0.30 -> 15 of each class held out
    std::vector<std::uint32_t> idx(100);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<int> labels(100);
    for (int i = 0; i < 100; ++i) labels[std::size_t(i)] = i % 2;
    Rng rng(7);
    const auto [held, rest] = split(idx, 0.30, rng, labels, true);
    ASSERT_EQ(held.size(), 30u);
    std::size_t class0 = 0;
    for (auto i : held) class0 += labels[i] == 0;
    EXPECT_EQ(class0, 15u);
    EXPECT_EQ(rest.size(), 70u);
}

TEST(Split, DegenerateSizes) {
    std::vector<int> labels(10, 0);
    Rng rng(8);
    const auto [h0, r0] = split({}, 0.3, rng, labels);
    EXPECT_TRUE(h0.empty());
    EXPECT_TRUE(r0.empty());
    // a single index goes to the remainder even at high fractions
    const auto [h1, r1] = split({5}, 0.9, rng, labels);
    EXPECT_TRUE(h1.empty());
    EXPECT_EQ(r1, std::vector<std::uint32_t>{5});
}

TEST(BuildPlan, NestedFractionArithmetic) {
    // 100 records, defaults 0.30/0.20/0.20:
    // gt 30, remainder 70 -> gtr 14, remainder 56 -> lt 11, ltr 45
    const auto rs = uniform_records(100);
    SplitConfig cfg;
    cfg.seed = 3;
    const auto plan = build_plan(rs, {"c"}, {0}, cfg);
    const auto& cell = plan.cells[0][0];
    EXPECT_EQ(cell.gt.size(), 30u);
    EXPECT_EQ(cell.gtr.size(), 14u);
    EXPECT_EQ(cell.lt.size(), 11u);
    EXPECT_EQ(cell.ltr.size(), 45u);
    expect_plan_invariants(plan, rs);
}

TEST(BuildPlan, EmptyCellsAreValid) {
    auto rs = uniform_records(30, "England", 0);
    SplitConfig cfg;
    cfg.seed = 4;
    const auto plan = build_plan(rs, {"England", "USA"}, {0, 1}, cfg);
    const auto& empty_cell = plan.cells[1][1];
    EXPECT_TRUE(empty_cell.gt.empty() && empty_cell.gtr.empty() && empty_cell.ltr.empty() &&
                empty_cell.lt.empty());
    expect_plan_invariants(plan, rs);
}

TEST(BuildPlan, ConservationAndLeakFreedomRandomized) {
    Rng rng(123);
    for (int it = 0; it < 25; ++it) {
        std::vector<SequenceRecord> rs;
        const int n = 1 + int(rng.below(150));
        const int nc = 1 + int(rng.below(3));
        const int nm = 1 + int(rng.below(3));
        for (int i = 0; i < n; ++i)
            rs.push_back(rec("r" + std::to_string(i), "c" + std::to_string(rng.below(std::uint64_t(nc))),
                             int(rng.below(std::uint64_t(nm))), "L" + std::to_string(rng.below(3))));
        std::vector<std::string> countries;
        for (int c = 0; c < nc; ++c) countries.push_back("c" + std::to_string(c));
        std::vector<int> months;
        for (int m = 0; m < nm; ++m) months.push_back(m);
        SplitConfig cfg;
        cfg.seed = rng.next_u64();
        const auto plan = build_plan(rs, countries, months, cfg);
        expect_plan_invariants(plan, rs);
        std::size_t total = 0;
        for (const auto& row : plan.cells)
            for (const auto& cell : row) total += cell.total();
        EXPECT_EQ(total, rs.size());
    }
}

TEST(BuildPlan, AccumulationOrderAndDeterminism) {
    std::vector<SequenceRecord> rs;
    Rng rng(9);
    for (int i = 0; i < 240; ++i)
        rs.push_back(rec("r" + std::to_string(i), i % 2 ? "A" : "B", int(rng.below(3)), "L" + std::to_string(i % 2)));
    SplitConfig cfg;
    cfg.seed = 10;
    const auto plan1 = build_plan(rs, {"A", "B"}, {0, 1, 2}, cfg);
    const auto plan2 = build_plan(rs, {"A", "B"}, {0, 1, 2}, cfg);
    EXPECT_EQ(plan1.global_test, plan2.global_test);

    // global_test is the concatenation of gt cells in (month, country) order
    std::vector<std::uint32_t> expected;
    for (std::size_t mi = 0; mi < 3; ++mi)
        for (std::size_t ci = 0; ci < 2; ++ci)
            expected.insert(expected.end(), plan1.cells[mi][ci].gt.begin(), plan1.cells[mi][ci].gt.end());
    EXPECT_EQ(plan1.global_test, expected);

    // local_test of a country is its lt cells in month order
    std::vector<std::uint32_t> expected_local;
    for (std::size_t mi = 0; mi < 3; ++mi)
        expected_local.insert(expected_local.end(), plan1.cells[mi][0].lt.begin(), plan1.cells[mi][0].lt.end());
    EXPECT_EQ(plan1.local_test[0], expected_local);
}

TEST(BuildPlan, PlanExportIsDeterministic) {
    const auto rs = uniform_records(40);
    SplitConfig cfg;
    cfg.seed = 77;
    const auto plan = build_plan(rs, {"c"}, {0}, cfg);
    std::ostringstream a, b;
    write_plan(a, plan, cfg);
    write_plan(b, plan, cfg);
    EXPECT_EQ(a.str(), b.str());
    EXPECT_NE(a.str().find("cell month=0 country=c"), std::string::npos);
    EXPECT_NE(a.str().find("gt n=12"), std::string::npos);  // round(0.3*40)
}

TEST(BuildPlan, RejectsBadInputs) {
    const auto rs = uniform_records(10);
    SplitConfig cfg;
    EXPECT_THROW(build_plan(rs, {}, {0}, cfg), InvalidSpec);
    EXPECT_THROW(build_plan(rs, {"c"}, {}, cfg), InvalidSpec);
    SplitConfig bad;
    bad.global_test_fraction = 1.0;
    EXPECT_THROW(build_plan(rs, {"c"}, {0}, bad), InvalidSpec);
}
