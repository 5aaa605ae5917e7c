#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "epic/config.hpp"
#include "epic/datagen.hpp"
#include "epic/orchestrator.hpp"
#include "epic/records.hpp"

namespace epic {

struct RunResult {
    ExperimentReport report;
    std::optional<CentralizedReport> centralized;
    std::filesystem::path directory;
};

namespace detail {

inline std::string fmt_g(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw IoError("cannot write '" + p.string() + "'");
    return out;
}

inline void write_history_csv(std::ostream& out, const std::vector<ModelRun>& runs) {
    out << "model,month,epoch,accuracy,loss\n";
    for (const auto& run : runs)
        for (std::size_t mi = 0; mi < run.months.size(); ++mi)
            for (std::size_t e = 0; e < run.histories[mi].size(); ++e)
                out << run.name << ',' << run.months[mi] << ',' << e << ','
                    << fmt_g(run.histories[mi][e].accuracy) << ',' << fmt_g(run.histories[mi][e].loss) << "\n";
}

inline void write_report(std::ostream& out, const ExperimentReport& rep,
                         const std::optional<CentralizedReport>& central) {
    out << "epic_report v1\n";
    out << "labels";
    for (const auto& l : rep.labels) out << ' ' << l;
    out << "\n";
    out << "countries " << rep.countries.size() << "\n";
    out << "global {\n";
    write_metrics(out, rep.global, rep.labels, "  ");
    out << "}\n";
    for (std::size_t ci = 0; ci < rep.countries.size(); ++ci) {
        out << "local " << rep.countries[ci] << " {\n";
        write_metrics(out, rep.local[ci], rep.labels, "  ");
        out << "}\n";
    }
    if (central) {
        out << "centralized {\n";
        write_metrics(out, central->metrics, rep.labels, "  ");
        out << "}\n";
    }
}

} // namespace detail

inline std::string checkpoint_filename(const std::string& model, int month) {
    char buf[16];
    if (month < 0) return model + ".epicw";
    std::snprintf(buf, sizeof buf, "m%02d_", month);
    return buf + model + ".epicw";
}

// Executes the configured experiment into a self-describing run directory:
// config copy, partition plan, global-test export, per-round checkpoints,
// per-epoch history CSV, deterministic report, and a metadata file carrying
// everything time-dependent (kept separate so reports stay byte-comparable
// across runs).
inline RunResult run_directory(const RunConfig& cfg, const std::string& config_path,
                               const std::filesystem::path& outdir, int parallel = 1) {
    namespace fs = std::filesystem;
    const auto started = detail::timestamp_utc();
    const auto t0 = std::chrono::steady_clock::now();

    std::error_code ec;
    fs::create_directories(outdir / "checkpoints", ec);
    if (ec) throw IoError("cannot create run directory '" + outdir.string() + "'");

    std::vector<SequenceRecord> records;
    std::vector<std::string> countries;
    std::vector<int> months;
    if (cfg.synthetic) {
        records = generate(*cfg.synthetic);
        for (const auto& c : cfg.synthetic->countries) countries.push_back(c.name);
        months.resize(std::size_t(cfg.synthetic->months));
        std::iota(months.begin(), months.end(), 0);
    } else {
        records = read_tsv_file(*cfg.dataset_path);
        if (records.empty()) throw NoDataError("dataset '" + *cfg.dataset_path + "' has no records");
        countries = distinct_countries(records);
        months = distinct_months(records);
    }

    const Prepared prep =
        prepare_run(records, countries, months, cfg.split, cfg.effective_max_len(), cfg.label_set());

    // copy the config verbatim
    {
        std::ifstream src(config_path, std::ios::binary);
        if (!src) throw IoError("cannot reopen config file '" + config_path + "'");
        auto dst = detail::open_out(outdir / "config.json");
        dst << src.rdbuf();
    }
    {
        auto out = detail::open_out(outdir / "plan.txt");
        write_plan(out, prep.plan, cfg.split);
    }
    {
        std::vector<SequenceRecord> gt;
        gt.reserve(prep.plan.global_test.size());
        for (auto i : prep.plan.global_test) gt.push_back(records[i]);
        write_tsv_file((outdir / "global_test.tsv").string(), gt);
    }

    RunOptions opts;
    opts.parallel = parallel;
    opts.checkpoint_sink = [&](const std::string& model, int month, const WeightSet<float>& w) {
        save_checkpoint((outdir / "checkpoints" / checkpoint_filename(model, month)).string(), w);
    };

    RunResult result;
    result.directory = outdir;
    result.report = run_epic_prepared(prep, cfg.model, cfg.train, cfg.fed, opts);
    if (cfg.centralized_baseline)
        result.centralized = run_centralized_prepared(prep, cfg.model, cfg.train, opts);

    {
        auto out = detail::open_out(outdir / "history.csv");
        auto runs = result.report.runs;
        if (result.centralized) runs.push_back(result.centralized->run);
        detail::write_history_csv(out, runs);
    }
    {
        auto out = detail::open_out(outdir / "report.txt");
        detail::write_report(out, result.report, result.centralized);
    }
    {
        const auto t1 = std::chrono::steady_clock::now();
        auto out = detail::open_out(outdir / "metadata.txt");
        out << "started " << started << "\n";
        out << "finished " << detail::timestamp_utc() << "\n";
        for (const auto& run : result.report.runs)
            out << "train_seconds " << run.name << " " << detail::fmt_g(run.seconds) << "\n";
        if (result.centralized)
            out << "train_seconds centralized " << detail::fmt_g(result.centralized->run.seconds) << "\n";
        out << "total_seconds " << detail::fmt_g(std::chrono::duration<double>(t1 - t0).count()) << "\n";
    }
    return result;
}

} // namespace epic
