#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "epic/errors.hpp"
#include "epic/records.hpp"
#include "epic/rng.hpp"

namespace epic {

struct SplitConfig {
    double global_test_fraction = 0.30;
    double global_train_fraction = 0.20;  // of the post-holdout remainder
    double local_test_fraction = 0.20;    // of the local remainder
    std::uint64_t seed = 0;
    bool stratified = true;

    void validate() const {
        for (double f : {global_test_fraction, global_train_fraction, local_test_fraction})
            if (!(f > 0.0 && f < 1.0)) throw InvalidSpec("split fractions must be strictly between 0 and 1");
    }
};

// Index sets of one (month, country) shard: global test, global train,
// local train, local test. Pairwise disjoint, union = the whole shard.
struct CellSplit {
    std::vector<std::uint32_t> gt, gtr, ltr, lt;

    std::size_t total() const { return gt.size() + gtr.size() + ltr.size() + lt.size(); }
};

struct PartitionPlan {
    std::vector<int> months;
    std::vector<std::string> countries;
    std::vector<std::vector<CellSplit>> cells;             // [month][country]
    std::vector<std::uint32_t> global_test;                // gt cells in (month, country) order
    std::vector<std::vector<std::uint32_t>> local_test;    // per country, lt cells in month order
};

inline std::vector<std::uint32_t> filter_month(const std::vector<SequenceRecord>& records, int month) {
    std::vector<std::uint32_t> out;
    for (std::size_t i = 0; i < records.size(); ++i)
        if (records[i].month == month) out.push_back(std::uint32_t(i));
    return out;
}

inline std::vector<std::uint32_t> filter_country(const std::vector<SequenceRecord>& records,
                                                 const std::vector<std::uint32_t>& indices,
                                                 const std::string& country) {
    std::vector<std::uint32_t> out;
    for (auto i : indices)
        if (records[i].country == country) out.push_back(i);
    return out;
}

namespace detail {

inline std::size_t round_half_up(double x) { return std::size_t(std::floor(x + 0.5)); }

} // namespace detail

// Seeded shuffle, then hold out round(fraction*n) indices. When every label
// occurring in the set has at least two members the held-out count is
// apportioned per label by largest remainder, so rare classes survive in
// both halves and the total still equals round(fraction*n) exactly.
// n == 0 yields two empty sets; a single index goes to the remainder
// (training side) rather than being held out.
inline std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>>
split(const std::vector<std::uint32_t>& indices, double fraction, Rng& rng, const std::vector<int>& labels,
      bool stratify = true) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidSpec("split: fraction must be strictly between 0 and 1");
    const std::size_t n = indices.size();
    if (n == 0) return {{}, {}};
    if (n == 1) return {{}, indices};

    std::vector<std::uint32_t> shuffled = indices;
    rng.shuffle(shuffled);
    const std::size_t k = detail::round_half_up(fraction * double(n));
    if (k == 0) return {{}, shuffled};

    bool use_strata = stratify;
    std::map<int, std::vector<std::uint32_t>> groups;
    if (stratify) {
        for (auto i : shuffled) groups[labels[i]].push_back(i);
        for (const auto& [lab, g] : groups)
            if (g.size() < 2) {
                use_strata = false;
                break;
            }
        if (groups.size() < 2) use_strata = false;
    }
    if (!use_strata) {
        std::vector<std::uint32_t> held(shuffled.begin(), shuffled.begin() + std::ptrdiff_t(k));
        std::vector<std::uint32_t> rest(shuffled.begin() + std::ptrdiff_t(k), shuffled.end());
        return {held, rest};
    }

    // per-label quota: floor share, then largest fractional remainders take
    // the leftover so the quotas sum to k
    struct Quota {
        int label;
        std::size_t take;
        double remainder;
    };
    std::vector<Quota> quotas;
    std::size_t assigned = 0;
    for (const auto& [lab, g] : groups) {
        const double share = fraction * double(g.size());
        const auto base = std::size_t(std::floor(share));
        quotas.push_back({lab, base, share - double(base)});
        assigned += base;
    }
    std::size_t leftover = k > assigned ? k - assigned : 0;
    std::vector<std::size_t> order(quotas.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return quotas[a].remainder > quotas[b].remainder; });
    for (std::size_t i = 0; i < order.size() && leftover > 0; ++i) {
        auto& q = quotas[order[i]];
        if (q.take < groups[q.label].size()) {
            ++q.take;
            --leftover;
        }
    }

    std::vector<std::uint32_t> held, rest;
    held.reserve(k);
    for (const auto& q : quotas) {
        const auto& g = groups[q.label];
        held.insert(held.end(), g.begin(), g.begin() + std::ptrdiff_t(q.take));
        rest.insert(rest.end(), g.begin() + std::ptrdiff_t(q.take), g.end());
    }
    return {held, rest};
}

// The full month x country partitioning pass: per cell, split off global
// test, then global train, then local test; what remains is the local
// training shard. Each (month, country, stage) draws from its own derived
// stream, so cells can be built in any order with identical results.
inline PartitionPlan build_plan(const std::vector<SequenceRecord>& records,
                                const std::vector<std::string>& countries, const std::vector<int>& months,
                                const SplitConfig& cfg) {
    cfg.validate();
    if (countries.empty() || months.empty()) throw InvalidSpec("build_plan: countries and months must be nonempty");

    // label ids for stratification (sorted distinct lineages)
    const auto lineages = distinct_lineages(records);
    std::vector<int> label_of(records.size(), 0);
    for (std::size_t i = 0; i < records.size(); ++i)
        label_of[i] = int(std::lower_bound(lineages.begin(), lineages.end(), records[i].lineage) - lineages.begin());

    PartitionPlan plan;
    plan.months = months;
    plan.countries = countries;
    plan.cells.resize(months.size());
    plan.local_test.resize(countries.size());

    for (std::size_t mi = 0; mi < months.size(); ++mi) {
        plan.cells[mi].resize(countries.size());
        const auto month_idx = filter_month(records, months[mi]);
        for (std::size_t ci = 0; ci < countries.size(); ++ci) {
            const auto cell_idx = filter_country(records, month_idx, countries[ci]);
            CellSplit& cell = plan.cells[mi][ci];

            Rng gt_rng(derive_seed(cfg.seed, "split", months[mi], countries[ci], "gt"));
            auto [gt, rest1] = split(cell_idx, cfg.global_test_fraction, gt_rng, label_of, cfg.stratified);

            Rng gtr_rng(derive_seed(cfg.seed, "split", months[mi], countries[ci], "gtr"));
            auto [gtr, rest2] = split(rest1, cfg.global_train_fraction, gtr_rng, label_of, cfg.stratified);

            Rng lt_rng(derive_seed(cfg.seed, "split", months[mi], countries[ci], "lt"));
            auto [lt, ltr] = split(rest2, cfg.local_test_fraction, lt_rng, label_of, cfg.stratified);

            cell.gt = std::move(gt);
            cell.gtr = std::move(gtr);
            cell.lt = std::move(lt);
            cell.ltr = std::move(ltr);

            plan.global_test.insert(plan.global_test.end(), cell.gt.begin(), cell.gt.end());
            plan.local_test[ci].insert(plan.local_test[ci].end(), cell.lt.begin(), cell.lt.end());
        }
    }
    return plan;
}

// Audit/replay export: per cell, the four index sets.
inline void write_plan(std::ostream& out, const PartitionPlan& plan, const SplitConfig& cfg) {
    out << "# partition plan\n";
    out << "seed " << cfg.seed << "\n";
    out << "fractions gt=" << cfg.global_test_fraction << " gtr=" << cfg.global_train_fraction
        << " lt=" << cfg.local_test_fraction << "\n";
    out << "stratified " << (cfg.stratified ? 1 : 0) << "\n";
    auto dump = [&](const char* tag, const std::vector<std::uint32_t>& v) {
        out << "  " << tag << " n=" << v.size() << " :";
        for (auto i : v) out << ' ' << i;
        out << "\n";
    };
    for (std::size_t mi = 0; mi < plan.months.size(); ++mi)
        for (std::size_t ci = 0; ci < plan.countries.size(); ++ci) {
            const auto& cell = plan.cells[mi][ci];
            out << "cell month=" << plan.months[mi] << " country=" << plan.countries[ci] << "\n";
            dump("gt", cell.gt);
            dump("gtr", cell.gtr);
            dump("ltr", cell.ltr);
            dump("lt", cell.lt);
        }
    out << "global_test n=" << plan.global_test.size() << "\n";
    for (std::size_t ci = 0; ci < plan.countries.size(); ++ci)
        out << "local_test country=" << plan.countries[ci] << " n=" << plan.local_test[ci].size() << "\n";
}

} // namespace epic
