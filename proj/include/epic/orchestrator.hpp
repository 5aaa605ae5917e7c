#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

#include "epic/encode.hpp"
#include "epic/errors.hpp"
#include "epic/fed.hpp"
#include "epic/metrics.hpp"
#include "epic/nn.hpp"
#include "epic/partition.hpp"
#include "epic/records.hpp"
#include "epic/weights.hpp"

namespace epic {

struct FedConfig {
    AggregationScheme scheme = AggregationScheme::sample_weighted;
    double local_fraction = 0.5;  // weight of the client's own parameters in the monthly merge
    bool include_global = true;   // global weights join the aggregation as one member
};

// What a client hands back after a monthly round. Weights and counts only;
// the shard itself never leaves the client.
struct ClientUpdate {
    WeightSet<float> weights;
    std::uint64_t sample_count = 0;
    TrainHistory history;
    double seconds = 0.0;
};

static_assert(std::is_same_v<decltype(ClientUpdate::weights), WeightSet<float>>,
              "the client/server boundary carries parameter tensors only");

// A per-country participant. It owns its monthly training shards and its
// current local weights; the only outputs are ClientUpdate values.
class CountryClient {
public:
    CountryClient(std::string name, std::vector<Mat<float>> month_x, std::vector<Mat<float>> month_y,
                  std::uint64_t init_seed)
        : name_(std::move(name)), month_x_(std::move(month_x)), month_y_(std::move(month_y)),
          init_seed_(init_seed) {}

    const std::string& name() const { return name_; }
    bool has_weights() const { return lw_.has_value(); }
    const WeightSet<float>& weights() const { return *lw_; }

    bool shard_empty(std::size_t month_pos) const { return month_x_[month_pos].rows == 0; }

    // One round: fresh init on first participation, otherwise continue from
    // the merge of the previous local weights with the global weights.
    std::optional<ClientUpdate> train_month(std::size_t month_pos, const WeightSet<float>* global_weights,
                                            const ModelSpec& spec, const FedConfig& fed, TrainConfig train_cfg) {
        const Mat<float>& x = month_x_[month_pos];
        const Mat<float>& y = month_y_[month_pos];
        if (x.rows == 0) return std::nullopt;  // carry current weights forward

        WeightSet<float> start;
        if (!lw_) {
            ModelSpec seeded = spec;
            seeded.seed = init_seed_;
            start = init_model<float>(seeded);
        } else if (global_weights) {
            start = merge_local_global(*lw_, *global_weights, fed.local_fraction);
        } else {
            start = *lw_;
        }

        const auto t0 = std::chrono::steady_clock::now();
        auto [trained, history] = train(start, spec, x, y, train_cfg);
        const auto t1 = std::chrono::steady_clock::now();
        lw_ = std::move(trained);

        ClientUpdate up;
        up.weights = *lw_;
        up.sample_count = x.rows;
        up.history = std::move(history);
        up.seconds = std::chrono::duration<double>(t1 - t0).count();
        return up;
    }

private:
    std::string name_;
    std::vector<Mat<float>> month_x_, month_y_;  // one shard per month, rows may be zero
    std::uint64_t init_seed_ = 0;
    std::optional<WeightSet<float>> lw_;
};

// Interface-level privacy checks: the aggregation entry points consume
// WeightedContribution/WeightSet values and cannot be handed datasets.
static_assert(!std::is_invocable_v<decltype(aggregate<float>), const std::vector<EncodedDataset>&,
                                   AggregationScheme>,
              "aggregate must not accept datasets");
static_assert(!std::is_invocable_v<decltype(merge_local_global<float>), const EncodedDataset&,
                                   const EncodedDataset&, double>,
              "merge must not accept datasets");

struct ModelRun {
    std::string name;
    std::vector<int> months;
    std::vector<TrainHistory> histories;  // parallel to months
    double seconds = 0.0;
};

struct ExperimentReport {
    std::vector<std::string> countries;
    std::vector<MetricsReport> local;  // parallel to countries
    MetricsReport global;
    std::vector<ModelRun> runs;  // per-country runs then the global run
    std::vector<std::string> labels;
};

using CheckpointSink = std::function<void(const std::string& model, int month, const WeightSet<float>&)>;

struct RunOptions {
    int parallel = 1;  // client trainings per month run concurrently; results identical to serial
    CheckpointSink checkpoint_sink;
};

namespace detail {

inline std::pair<Mat<float>, Mat<float>> gather_rows(const EncodedDataset& ds,
                                                     const std::vector<std::uint32_t>& idx) {
    Mat<float> x(idx.size(), ds.features.cols), y(idx.size(), ds.labels.cols);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        std::copy(ds.features.row(idx[i]), ds.features.row(idx[i]) + ds.features.cols, x.row(i));
        std::copy(ds.labels.row(idx[i]), ds.labels.row(idx[i]) + ds.labels.cols, y.row(i));
    }
    return {std::move(x), std::move(y)};
}

inline std::vector<int> true_classes(const Mat<float>& y) {
    std::vector<int> out(y.rows);
    for (std::size_t i = 0; i < y.rows; ++i) out[i] = int(argmax_row(y.row(i), y.cols));
    return out;
}

inline void ensure_finite(const WeightSet<float>& w, const std::string& model) {
    if (!w.all_finite()) throw NumericError("non-finite value in weights of model '" + model + "'");
}

} // namespace detail

struct Prepared {
    EncodingContext ctx;
    EncodedDataset data;
    PartitionPlan plan;
};

inline Prepared prepare_run(const std::vector<SequenceRecord>& records, const std::vector<std::string>& countries,
                            const std::vector<int>& months, const SplitConfig& split_cfg,
                            std::size_t max_len_override = 0, std::vector<std::string> label_set = {}) {
    Prepared p;
    p.ctx = make_context(records, max_len_override, std::move(label_set));
    p.data = encode_dataset(records, p.ctx);
    p.plan = build_plan(records, countries, months, split_cfg);
    return p;
}

// Eval-mode predictions on the given test rows, reduced to the full metrics
// report.
inline MetricsReport evaluate(const WeightSet<float>& weights, const ModelSpec& spec,
                              const std::vector<std::uint32_t>& test_indices, const EncodedDataset& dataset) {
    if (test_indices.empty()) throw EmptyTestSet("evaluate: empty test set");
    auto [x, y] = detail::gather_rows(dataset, test_indices);
    const auto pred = predict(weights, spec, x);
    return compute_metrics(detail::true_classes(y), pred.classes, pred.probs, int(spec.num_classes));
}

// The monthly federated protocol. For each month every country trains on its
// local shard (first round from a fresh model, later rounds from its
// previous weights merged with the global ones); afterwards the global model
// restarts from the aggregate of all current local weights plus its own and
// trains on the pooled global-train shard of the month. After the last month
// each local model is scored on its accumulated local test set and the
// global model on the accumulated global holdout.
inline ExperimentReport run_epic_prepared(const Prepared& prep, const ModelSpec& spec_in,
                                          const TrainConfig& train_cfg, const FedConfig& fed,
                                          const RunOptions& opts = {}) {
    const auto& plan = prep.plan;
    const auto& countries = plan.countries;
    const auto& months = plan.months;

    ModelSpec spec = spec_in;
    if (spec.input_dim == 0) spec.input_dim = prep.ctx.feature_width();
    if (spec.num_classes == 0) spec.num_classes = prep.ctx.label_set.size();
    if (spec.input_dim != prep.ctx.feature_width() || spec.num_classes != prep.ctx.label_set.size())
        throw ShapeMismatch("model spec does not match the encoding context");
    spec.validate();

    {
        std::size_t first_month_total = 0;
        for (const auto& cell : plan.cells[0]) first_month_total += cell.total();
        if (first_month_total == 0) throw NoDataError("every shard of the first month is empty");
    }

    // clients receive their shards once, up front
    std::vector<CountryClient> clients;
    clients.reserve(countries.size());
    for (std::size_t ci = 0; ci < countries.size(); ++ci) {
        std::vector<Mat<float>> xs(months.size()), ys(months.size());
        for (std::size_t mi = 0; mi < months.size(); ++mi) {
            auto [x, y] = detail::gather_rows(prep.data, plan.cells[mi][ci].ltr);
            xs[mi] = std::move(x);
            ys[mi] = std::move(y);
        }
        clients.emplace_back(countries[ci], std::move(xs), std::move(ys),
                             derive_seed(spec.seed, "local-init", countries[ci]));
    }

    std::optional<WeightSet<float>> gw;
    std::uint64_t gw_samples = 0;

    ExperimentReport report;
    report.countries = countries;
    report.labels = prep.ctx.label_set;
    report.runs.resize(countries.size() + 1);
    for (std::size_t ci = 0; ci < countries.size(); ++ci) report.runs[ci].name = countries[ci];
    report.runs.back().name = "global";

    for (std::size_t mi = 0; mi < months.size(); ++mi) {
        const int month = months[mi];

        // per-country rounds; independent, so they may run on worker threads
        std::vector<std::optional<ClientUpdate>> updates(countries.size());
        auto train_client = [&](std::size_t ci) {
            TrainConfig cfg = train_cfg;
            cfg.shuffle_seed = derive_seed(spec.seed, "train", countries[ci], month);
            updates[ci] = clients[ci].train_month(mi, gw ? &*gw : nullptr, spec, fed, cfg);
        };
        const int workers = std::max(1, opts.parallel);
        if (workers == 1) {
            for (std::size_t ci = 0; ci < countries.size(); ++ci) train_client(ci);
        } else {
            std::size_t next = 0;
            while (next < countries.size()) {
                std::vector<std::thread> pool;
                for (int t = 0; t < workers && next < countries.size(); ++t, ++next)
                    pool.emplace_back(train_client, next);
                for (auto& th : pool) th.join();
            }
        }

        std::vector<WeightedContribution<float>> contributions;
        for (std::size_t ci = 0; ci < countries.size(); ++ci) {
            if (!updates[ci]) continue;  // empty shard: weights carried forward unchanged
            auto& up = *updates[ci];
            detail::ensure_finite(up.weights, countries[ci]);
            auto& run = report.runs[ci];
            run.months.push_back(month);
            run.histories.push_back(up.history);
            run.seconds += up.seconds;
            if (opts.checkpoint_sink) opts.checkpoint_sink(countries[ci], month, up.weights);
            contributions.push_back({std::move(up.weights), up.sample_count});
        }

        // global round on the pooled global-train shards of this month
        std::vector<std::uint32_t> pooled;
        for (std::size_t ci = 0; ci < countries.size(); ++ci)
            pooled.insert(pooled.end(), plan.cells[mi][ci].gtr.begin(), plan.cells[mi][ci].gtr.end());
        if (!pooled.empty()) {
            WeightSet<float> start;
            if (!gw) {
                ModelSpec seeded = spec;
                seeded.seed = derive_seed(spec.seed, "global-init");
                start = init_model<float>(seeded);
            } else {
                if (fed.include_global) contributions.push_back({*gw, gw_samples});
                start = contributions.empty() ? *gw : aggregate(contributions, fed.scheme);
            }
            auto [gx, gy] = detail::gather_rows(prep.data, pooled);
            TrainConfig cfg = train_cfg;
            cfg.shuffle_seed = derive_seed(spec.seed, "train", "global", month);
            const auto t0 = std::chrono::steady_clock::now();
            auto [trained, history] = train(start, spec, gx, gy, cfg);
            const auto t1 = std::chrono::steady_clock::now();
            gw = std::move(trained);
            gw_samples = pooled.size();
            detail::ensure_finite(*gw, "global");
            auto& grun = report.runs.back();
            grun.months.push_back(month);
            grun.histories.push_back(std::move(history));
            grun.seconds += std::chrono::duration<double>(t1 - t0).count();
            if (opts.checkpoint_sink) opts.checkpoint_sink("global", month, *gw);
        }
    }

    if (!gw) throw NoDataError("global model was never trained (all global-train shards empty)");

    // final evaluation: each local model on its accumulated local test set,
    // the global model on the accumulated global holdout
    report.local.resize(countries.size());
    for (std::size_t ci = 0; ci < countries.size(); ++ci) {
        if (!clients[ci].has_weights() || plan.local_test[ci].empty()) {
            MetricsReport empty;
            empty.confusion.assign(prep.ctx.label_set.size(),
                                   std::vector<std::uint64_t>(prep.ctx.label_set.size(), 0));
            empty.per_class.resize(prep.ctx.label_set.size());
            report.local[ci] = empty;
            continue;
        }
        report.local[ci] = evaluate(clients[ci].weights(), spec, plan.local_test[ci], prep.data);
    }
    if (plan.global_test.empty()) throw EmptyTestSet("accumulated global test set is empty");
    report.global = evaluate(*gw, spec, plan.global_test, prep.data);
    return report;
}

inline ExperimentReport run_epic(const std::vector<SequenceRecord>& records,
                                 const std::vector<std::string>& countries, const std::vector<int>& months,
                                 const SplitConfig& split_cfg, const ModelSpec& spec, const TrainConfig& train_cfg,
                                 const FedConfig& fed, const RunOptions& opts = {}) {
    return run_epic_prepared(prepare_run(records, countries, months, split_cfg), spec, train_cfg, fed, opts);
}

struct CentralizedReport {
    MetricsReport metrics;
    ModelRun run;
};

// Baseline with the same plan and the same accumulated global holdout: one
// model trained on every training shard (local-train plus global-train,
// pooled) for months x epochs total epochs.
inline CentralizedReport run_centralized_prepared(const Prepared& prep, const ModelSpec& spec_in,
                                                  const TrainConfig& train_cfg,
                                                  const RunOptions& opts = {}) {
    const auto& plan = prep.plan;
    ModelSpec spec = spec_in;
    if (spec.input_dim == 0) spec.input_dim = prep.ctx.feature_width();
    if (spec.num_classes == 0) spec.num_classes = prep.ctx.label_set.size();
    spec.validate();

    std::vector<std::uint32_t> pooled;
    for (const auto& row : plan.cells)
        for (const auto& cell : row) {
            pooled.insert(pooled.end(), cell.ltr.begin(), cell.ltr.end());
            pooled.insert(pooled.end(), cell.gtr.begin(), cell.gtr.end());
        }
    if (pooled.empty()) throw NoDataError("centralized baseline has no training data");

    ModelSpec seeded = spec;
    seeded.seed = derive_seed(spec.seed, "centralized-init");
    TrainConfig cfg = train_cfg;
    cfg.epochs = train_cfg.epochs * int(plan.months.size());
    cfg.shuffle_seed = derive_seed(spec.seed, "train", "centralized", 0);

    auto [x, y] = detail::gather_rows(prep.data, pooled);
    const auto t0 = std::chrono::steady_clock::now();
    auto [weights, history] = train(init_model<float>(seeded), spec, x, y, cfg);
    const auto t1 = std::chrono::steady_clock::now();
    detail::ensure_finite(weights, "centralized");
    if (opts.checkpoint_sink) opts.checkpoint_sink("centralized", -1, weights);

    CentralizedReport out;
    out.run.name = "centralized";
    out.run.seconds = std::chrono::duration<double>(t1 - t0).count();
    // history reported in month-sized blocks to match the schema of the
    // federated runs
    for (std::size_t mi = 0; mi < plan.months.size(); ++mi) {
        out.run.months.push_back(plan.months[mi]);
        const auto begin = history.begin() + std::ptrdiff_t(mi * std::size_t(train_cfg.epochs));
        out.run.histories.emplace_back(begin, begin + train_cfg.epochs);
    }
    if (plan.global_test.empty()) throw EmptyTestSet("accumulated global test set is empty");
    out.metrics = evaluate(weights, spec, plan.global_test, prep.data);
    return out;
}

inline CentralizedReport run_centralized(const std::vector<SequenceRecord>& records,
                                         const std::vector<std::string>& countries, const std::vector<int>& months,
                                         const SplitConfig& split_cfg, const ModelSpec& spec,
                                         const TrainConfig& train_cfg, const RunOptions& opts = {}) {
    return run_centralized_prepared(prepare_run(records, countries, months, split_cfg), spec, train_cfg, opts);
}

} // namespace epic
