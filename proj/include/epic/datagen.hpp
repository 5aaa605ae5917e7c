#pragma once

#include <cstdint>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "epic/alphabet.hpp"
#include "epic/errors.hpp"
#include "epic/records.hpp"
#include "epic/rng.hpp"

namespace epic {

struct LineageSpec {
    std::string name;
    int signature_mutations = 0;
    double frequency = 1.0;
};

struct CountrySpec {
    std::string name;
    double frequency = 1.0;
};

// Shape of a synthetic corpus: one random ancestral sequence, per-lineage
// signature substitutions at disjoint positions, per-sample noise
// substitutions away from any signature position. Signature disjointness
// makes the classes exactly separable, which is what the convergence checks
// lean on.
struct SyntheticSpec {
    std::size_t ancestral_length = 1274;
    std::vector<LineageSpec> lineages;
    std::vector<CountrySpec> countries;
    int months = 6;
    std::size_t total_samples = 8000;
    int noise_mutations_per_sample = 2;
    bool month_ramp = false;  // later lineages drift toward later months
    std::uint64_t seed = 0;

    void validate() const {
        if (ancestral_length == 0) throw SpecInfeasible("synthetic: ancestral_length must be positive");
        if (lineages.empty() || countries.empty())
            throw SpecInfeasible("synthetic: lineages and countries must be nonempty");
        if (months < 1) throw SpecInfeasible("synthetic: months must be >= 1");
        if (total_samples == 0) throw SpecInfeasible("synthetic: total_samples must be positive");
        if (noise_mutations_per_sample < 0) throw SpecInfeasible("synthetic: noise must be >= 0");
        std::size_t signature_total = 0;
        for (const auto& l : lineages) {
            if (l.signature_mutations < 0) throw SpecInfeasible("synthetic: signature count must be >= 0");
            if (l.frequency <= 0) throw SpecInfeasible("synthetic: lineage frequency must be positive");
            signature_total += std::size_t(l.signature_mutations);
        }
        for (const auto& c : countries)
            if (c.frequency <= 0) throw SpecInfeasible("synthetic: country frequency must be positive");
        if (signature_total > ancestral_length)
            throw SpecInfeasible("synthetic: " + std::to_string(signature_total) +
                                 " signature positions exceed ancestral_length " +
                                 std::to_string(ancestral_length));
        if (signature_total + std::size_t(noise_mutations_per_sample) > ancestral_length)
            throw SpecInfeasible("synthetic: no room for noise positions outside the signatures");
    }
};

// Defaults shaped like real surveillance data: per-lineage signature counts
// and relative abundances, with skewed per-country sampling.
inline SyntheticSpec default_synthetic_spec() {
    SyntheticSpec s;
    s.lineages = {{"Alpha", 8, 593236}, {"Beta", 9, 7746}, {"Delta", 8, 69886},
                  {"Gamma", 10, 16471}, {"Epsilon", 3, 11993}};
    s.countries = {{"England", 245695}, {"USA", 190851},        {"Germany", 72149}, {"Denmark", 59353},
                   {"Sweden", 39536},   {"Scotland", 38054},    {"Netherlands", 27504}, {"France", 26185}};
    return s;
}

namespace detail {

inline std::size_t pick_weighted(const std::vector<double>& cumulative, double u) {
    // u in [0,1); cumulative is normalized and ends at 1
    for (std::size_t i = 0; i + 1 < cumulative.size(); ++i)
        if (u < cumulative[i]) return i;
    return cumulative.size() - 1;
}

inline std::vector<double> cumulative_of(const std::vector<double>& freqs) {
    std::vector<double> cum(freqs.size());
    const double total = std::accumulate(freqs.begin(), freqs.end(), 0.0);
    double run = 0.0;
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        run += freqs[i] / total;
        cum[i] = run;
    }
    cum.back() = 1.0;
    return cum;
}

} // namespace detail

inline std::vector<SequenceRecord> generate(const SyntheticSpec& spec) {
    spec.validate();
    const std::string canonical = "ACDEFGHIKLMNPQRSTVWY";  // no 'X' in generated data

    // ancestral sequence
    Rng anc_rng(derive_seed(spec.seed, "ancestral"));
    std::string ancestral(spec.ancestral_length, 'A');
    for (auto& c : ancestral) c = canonical[std::size_t(anc_rng.below(canonical.size()))];

    // disjoint signature positions, drawn once
    Rng sig_rng(derive_seed(spec.seed, "signatures"));
    std::vector<std::uint32_t> positions(spec.ancestral_length);
    std::iota(positions.begin(), positions.end(), 0);
    sig_rng.shuffle(positions);
    std::vector<bool> is_signature(spec.ancestral_length, false);
    std::vector<std::string> lineage_sequence(spec.lineages.size(), ancestral);
    std::size_t cursor = 0;
    for (std::size_t li = 0; li < spec.lineages.size(); ++li) {
        for (int s = 0; s < spec.lineages[li].signature_mutations; ++s) {
            const std::uint32_t pos = positions[cursor++];
            is_signature[pos] = true;
            // substitute with a different canonical residue
            const char cur = ancestral[pos];
            const auto alt = std::size_t(sig_rng.below(canonical.size() - 1));
            char sub = canonical[alt];
            if (sub == cur) sub = canonical.back() == cur ? canonical[canonical.size() - 2] : canonical.back();
            lineage_sequence[li][pos] = sub;
        }
    }

    std::vector<std::uint32_t> noise_pool;
    for (std::uint32_t p = 0; p < spec.ancestral_length; ++p)
        if (!is_signature[p]) noise_pool.push_back(p);

    std::vector<double> lineage_freqs, country_freqs;
    for (const auto& l : spec.lineages) lineage_freqs.push_back(l.frequency);
    for (const auto& c : spec.countries) country_freqs.push_back(c.frequency);
    const auto lineage_cum = detail::cumulative_of(lineage_freqs);
    const auto country_cum = detail::cumulative_of(country_freqs);

    // month distribution per lineage: uniform, or a linear early/late
    // crossfade so lineage k grows more common in later months
    std::vector<std::vector<double>> month_cum(spec.lineages.size());
    for (std::size_t li = 0; li < spec.lineages.size(); ++li) {
        std::vector<double> w(std::size_t(spec.months), 1.0);
        if (spec.month_ramp && spec.lineages.size() > 1) {
            const double t = double(li) / double(spec.lineages.size() - 1);
            for (int m = 0; m < spec.months; ++m)
                w[std::size_t(m)] = (1.0 - t) * double(spec.months - m) + t * double(m + 1);
        }
        month_cum[li] = detail::cumulative_of(w);
    }

    constexpr int kBaseMonth = 2020 * 12;  // generated labels start at 2020-01
    std::vector<SequenceRecord> records;
    records.reserve(spec.total_samples);
    for (std::size_t i = 0; i < spec.total_samples; ++i) {
        Rng rng(derive_seed(spec.seed, "sample", std::uint64_t(i)));
        const std::size_t li = detail::pick_weighted(lineage_cum, rng.uniform());
        const std::size_t ci = detail::pick_weighted(country_cum, rng.uniform());
        const int month = int(detail::pick_weighted(month_cum[li], rng.uniform()));

        std::string seq = lineage_sequence[li];
        std::vector<std::uint32_t> chosen;
        for (int nm = 0; nm < spec.noise_mutations_per_sample && nm < int(noise_pool.size()); ++nm) {
            std::uint32_t pos;
            bool fresh;
            do {
                pos = noise_pool[std::size_t(rng.below(noise_pool.size()))];
                fresh = true;
                for (auto c : chosen)
                    if (c == pos) fresh = false;
            } while (!fresh);
            chosen.push_back(pos);
            const char cur = seq[pos];
            const auto alt = std::size_t(rng.below(canonical.size() - 1));
            char sub = canonical[alt];
            if (sub == cur) sub = canonical.back() == cur ? canonical[canonical.size() - 2] : canonical.back();
            seq[pos] = sub;
        }

        SequenceRecord rec;
        char id[16];
        std::snprintf(id, sizeof id, "s%07zu", i);
        rec.id = id;
        rec.sequence = std::move(seq);
        rec.country = spec.countries[ci].name;
        rec.month = month;
        rec.month_label = detail::format_month_label(kBaseMonth + month);
        rec.lineage = spec.lineages[li].name;
        records.push_back(std::move(rec));
    }
    return records;
}

} // namespace epic
