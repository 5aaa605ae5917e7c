#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "epic/datagen.hpp"
#include "epic/errors.hpp"
#include "epic/nn.hpp"
#include "epic/orchestrator.hpp"
#include "epic/partition.hpp"

namespace epic {

// A whole run in one file: data source (synthetic spec or dataset path),
// split fractions, model, training and aggregation settings, plus the single
// master seed every stream is derived from.
struct RunConfig {
    std::uint64_t seed = 0;
    std::optional<std::string> dataset_path;
    std::optional<SyntheticSpec> synthetic;
    SplitConfig split;
    ModelSpec model;
    TrainConfig train;
    FedConfig fed;
    bool centralized_baseline = true;
    std::size_t max_len = 0;  // 0: derived from the corpus

    std::vector<std::string> label_set() const {
        std::vector<std::string> out;
        if (synthetic)
            for (const auto& l : synthetic->lineages) out.push_back(l.name);
        return out;
    }

    std::size_t effective_max_len() const {
        if (max_len) return max_len;
        if (synthetic) return synthetic->ancestral_length;
        return 0;
    }
};

namespace detail {

using json = nlohmann::json;

inline void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError("config: '" + where + "' must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: bad value for '" + key + "' in " + where);
    }
}

inline SyntheticSpec parse_synthetic(const json& j) {
    check_keys(j, "synthetic",
               {"ancestral_length", "lineages", "countries", "months", "total_samples",
                "noise_mutations_per_sample", "month_ramp"});
    SyntheticSpec s;
    s.ancestral_length = get_or<std::size_t>(j, "ancestral_length", 1274, "synthetic");
    s.months = get_or<int>(j, "months", 6, "synthetic");
    s.total_samples = get_or<std::size_t>(j, "total_samples", 8000, "synthetic");
    s.noise_mutations_per_sample = get_or<int>(j, "noise_mutations_per_sample", 2, "synthetic");
    s.month_ramp = get_or<bool>(j, "month_ramp", false, "synthetic");

    const SyntheticSpec defaults = default_synthetic_spec();
    s.lineages = defaults.lineages;
    s.countries = defaults.countries;
    if (j.contains("lineages")) {
        s.lineages.clear();
        if (!j.at("lineages").is_array() || j.at("lineages").empty())
            throw ConfigError("config: 'lineages' must be a nonempty array");
        for (const auto& e : j.at("lineages")) {
            check_keys(e, "lineages entry", {"name", "signature_mutations", "frequency"});
            LineageSpec l;
            l.name = get_or<std::string>(e, "name", "", "lineages entry");
            if (l.name.empty()) throw ConfigError("config: lineage entry is missing 'name'");
            l.signature_mutations = get_or<int>(e, "signature_mutations", 0, "lineages entry");
            l.frequency = get_or<double>(e, "frequency", 1.0, "lineages entry");
            s.lineages.push_back(std::move(l));
        }
    }
    if (j.contains("countries")) {
        s.countries.clear();
        if (!j.at("countries").is_array() || j.at("countries").empty())
            throw ConfigError("config: 'countries' must be a nonempty array");
        for (const auto& e : j.at("countries")) {
            check_keys(e, "countries entry", {"name", "frequency"});
            CountrySpec c;
            c.name = get_or<std::string>(e, "name", "", "countries entry");
            if (c.name.empty()) throw ConfigError("config: country entry is missing 'name'");
            c.frequency = get_or<double>(e, "frequency", 1.0, "countries entry");
            s.countries.push_back(std::move(c));
        }
    }
    try {
        s.validate();
    } catch (const SpecInfeasible& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return s;
}

} // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
    using detail::check_keys;
    using detail::get_or;
    check_keys(j, "config root",
               {"seed", "dataset", "synthetic", "split", "model", "train", "fed", "centralized_baseline",
                "max_len"});
    RunConfig cfg;
    cfg.seed = get_or<std::uint64_t>(j, "seed", 0, "config root");
    if (j.contains("dataset")) cfg.dataset_path = get_or<std::string>(j, "dataset", "", "config root");
    if (j.contains("synthetic")) cfg.synthetic = detail::parse_synthetic(j.at("synthetic"));
    if (cfg.dataset_path && cfg.synthetic)
        throw ConfigError("config: 'dataset' and 'synthetic' are mutually exclusive");
    if (!cfg.dataset_path && !cfg.synthetic)
        throw ConfigError("config: exactly one of 'dataset' or 'synthetic' is required");

    if (j.contains("split")) {
        const auto& s = j.at("split");
        check_keys(s, "split", {"global_test_fraction", "global_train_fraction", "local_test_fraction",
                                "stratified"});
        cfg.split.global_test_fraction = get_or<double>(s, "global_test_fraction", 0.30, "split");
        cfg.split.global_train_fraction = get_or<double>(s, "global_train_fraction", 0.20, "split");
        cfg.split.local_test_fraction = get_or<double>(s, "local_test_fraction", 0.20, "split");
        cfg.split.stratified = get_or<bool>(s, "stratified", true, "split");
        try {
            cfg.split.validate();
        } catch (const InvalidSpec& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
    }

    if (j.contains("model")) {
        const auto& m = j.at("model");
        check_keys(m, "model", {"hidden_dims", "dropout_rate", "use_batchnorm", "activation"});
        cfg.model.hidden_dims = get_or<std::vector<std::size_t>>(m, "hidden_dims", {128, 64}, "model");
        cfg.model.dropout_rate = get_or<float>(m, "dropout_rate", 0.3f, "model");
        cfg.model.use_batchnorm = get_or<bool>(m, "use_batchnorm", true, "model");
        const auto act = get_or<std::string>(m, "activation", "relu", "model");
        if (act != "relu") throw ConfigError("config: unsupported activation '" + act + "'");
        if (!(cfg.model.dropout_rate >= 0.0f && cfg.model.dropout_rate < 1.0f))
            throw ConfigError("config: dropout_rate must be in [0,1)");
        for (auto h : cfg.model.hidden_dims)
            if (h == 0) throw ConfigError("config: hidden layer width must be positive");
    }

    if (j.contains("train")) {
        const auto& t = j.at("train");
        check_keys(t, "train",
                   {"epochs", "batch_size", "learning_rate", "adam_beta1", "adam_beta2", "adam_epsilon"});
        cfg.train.epochs = get_or<int>(t, "epochs", 10, "train");
        cfg.train.batch_size = get_or<std::size_t>(t, "batch_size", 32, "train");
        cfg.train.learning_rate = get_or<double>(t, "learning_rate", 1e-3, "train");
        cfg.train.adam_beta1 = get_or<double>(t, "adam_beta1", 0.9, "train");
        cfg.train.adam_beta2 = get_or<double>(t, "adam_beta2", 0.999, "train");
        cfg.train.adam_epsilon = get_or<double>(t, "adam_epsilon", 1e-8, "train");
        if (cfg.train.epochs < 1) throw ConfigError("config: train.epochs must be >= 1");
        try {
            cfg.train.validate();
        } catch (const InvalidSpec& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
    }

    if (j.contains("fed")) {
        const auto& f = j.at("fed");
        check_keys(f, "fed", {"scheme", "local_fraction", "include_global"});
        const auto scheme = get_or<std::string>(f, "scheme", "sample_weighted", "fed");
        if (scheme == "uniform") cfg.fed.scheme = AggregationScheme::uniform;
        else if (scheme == "sample_weighted") cfg.fed.scheme = AggregationScheme::sample_weighted;
        else throw ConfigError("config: unknown aggregation scheme '" + scheme + "'");
        cfg.fed.local_fraction = get_or<double>(f, "local_fraction", 0.5, "fed");
        cfg.fed.include_global = get_or<bool>(f, "include_global", true, "fed");
        if (!(cfg.fed.local_fraction >= 0.0 && cfg.fed.local_fraction <= 1.0))
            throw ConfigError("config: fed.local_fraction must be in [0,1]");
    }

    cfg.centralized_baseline = get_or<bool>(j, "centralized_baseline", true, "config root");
    cfg.max_len = get_or<std::size_t>(j, "max_len", 0, "config root");

    // one master seed; every module stream is derived from it by label
    cfg.split.seed = derive_seed(cfg.seed, "partition");
    if (cfg.synthetic) cfg.synthetic->seed = derive_seed(cfg.seed, "datagen");
    cfg.model.seed = derive_seed(cfg.seed, "models");
    return cfg;
}

inline RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in, nullptr, true, true);  // allow comments
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: parse error in '" + path + "': " + e.what());
    }
    return parse_config(j);
}

} // namespace epic
