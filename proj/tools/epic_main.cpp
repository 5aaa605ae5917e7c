// Command-line driver: `gen` writes a synthetic corpus, `run` executes a
// full federated experiment into a run directory, `eval` scores a saved
// checkpoint against a dataset.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "epic/epic.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNoData = 4;
constexpr int kExitNumeric = 5;
constexpr int kExitFingerprint = 6;

int cmd_gen(const std::string& config_path, const std::string& out_path) {
    const epic::RunConfig cfg = epic::load_config_file(config_path);
    if (!cfg.synthetic)
        throw epic::ConfigError("config: 'synthetic' block is required by gen");
    const auto records = epic::generate(*cfg.synthetic);
    epic::write_tsv_file(out_path, records);

    std::map<std::string, std::size_t> per_class;
    for (const auto& r : records) ++per_class[r.lineage];
    std::cout << "wrote " << records.size() << " records to " << out_path << "\n";
    for (const auto& [name, count] : per_class) std::cout << "  " << name << " " << count << "\n";
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, int parallel) {
    const epic::RunConfig cfg = epic::load_config_file(config_path);
    const auto result = epic::run_directory(cfg, config_path, out_dir, parallel);
    const auto& g = result.report.global;
    std::printf("global: accuracy=%.4f f1_weighted=%.4f f1_macro=%.4f roc_auc=%.4f (n=%llu)\n", g.accuracy,
                g.f1_weighted, g.f1_macro, g.roc_auc_macro, static_cast<unsigned long long>(g.evaluated));
    std::cout << "run directory: " << result.directory.string() << "\n";
    return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& data_path, const std::string& config_path) {
    const epic::RunConfig cfg = epic::load_config_file(config_path);
    const auto weights = epic::load_checkpoint(checkpoint_path);

    auto records = epic::read_tsv_file(data_path);
    if (records.empty()) throw epic::NoDataError("dataset '" + data_path + "' has no records");

    epic::EncodingContext ctx = epic::make_context(records, cfg.effective_max_len(), cfg.label_set());
    epic::ModelSpec spec = cfg.model;
    spec.input_dim = ctx.feature_width();
    spec.num_classes = ctx.label_set.size();
    if (spec.fingerprint() != weights.fingerprint)
        throw epic::FingerprintMismatch("checkpoint fingerprint does not match the configured model spec");

    epic::EncodedDataset data;
    try {
        data = epic::encode_dataset(records, ctx);
    } catch (const epic::UnknownLabel& e) {
        throw epic::ConfigError(e.what());
    }
    std::vector<std::uint32_t> all(records.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = std::uint32_t(i);
    const auto report = epic::evaluate(weights, spec, all, data);
    epic::write_metrics(std::cout, report, ctx.label_set);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"federated sequence-classification experiments"};
    app.require_subcommand(1);

    std::string config_path, out_path, out_dir = "run", checkpoint_path, data_path;
    int parallel = 1;

    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset TSV");
    gen->add_option("--config", config_path, "config file (JSON)")->required();
    gen->add_option("--out", out_path, "output TSV path")->required();

    auto* run = app.add_subcommand("run", "run the federated experiment from a config");
    run->add_option("--config", config_path, "config file (JSON)")->required();
    run->add_option("--out-dir", out_dir, "run directory to create");
    run->add_option("--parallel", parallel, "max concurrent client trainings")->check(CLI::PositiveNumber);

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    eval->add_option("--checkpoint", checkpoint_path, "weight checkpoint")->required();
    eval->add_option("--data", data_path, "dataset TSV")->required();
    eval->add_option("--config", config_path, "config file (JSON)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(config_path, out_path);
        if (run->parsed()) return cmd_run(config_path, out_dir, parallel);
        if (eval->parsed()) return cmd_eval(checkpoint_path, data_path, config_path);
    } catch (const epic::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const epic::FingerprintMismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFingerprint;
    } catch (const epic::NoDataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNoData;
    } catch (const epic::NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const epic::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const epic::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
