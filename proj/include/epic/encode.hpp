#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "epic/alphabet.hpp"
#include "epic/errors.hpp"
#include "epic/matrix.hpp"
#include "epic/records.hpp"

namespace epic {

// Shared encoding context. Every client and the server must use the same
// instance (same max_len, same label order), otherwise feature widths and
// label columns would disagree and weight exchange would be meaningless.
struct EncodingContext {
    Alphabet alphabet = Alphabet::amino_acids();
    std::size_t max_len = 0;
    std::vector<std::string> label_set;

    std::size_t feature_width() const { return max_len * alphabet.size(); }

    std::size_t label_index(std::string_view lineage) const {
        for (std::size_t i = 0; i < label_set.size(); ++i)
            if (label_set[i] == lineage) return i;
        throw UnknownLabel("unknown lineage label '" + std::string(lineage) + "'");
    }
};

struct EncodedMeta {
    std::string country;
    int month = 0;
};

// One-hot features and labels plus the (country, month) metadata needed for
// partitioning. Rows are parallel to the input record order.
struct EncodedDataset {
    Mat<float> features;
    Mat<float> labels;
    std::vector<EncodedMeta> meta;

    std::size_t size() const { return features.rows; }
};

// Position i of the sequence sets bit i*|alphabet| + index(seq[i]); trailing
// positions stay zero (trailing zero-padding). Characters outside the
// alphabet land in the final 'unknown' slot.
inline std::vector<float> encode_sequence(std::string_view seq, const EncodingContext& ctx) {
    if (seq.size() > ctx.max_len)
        throw SequenceTooLong("sequence length " + std::to_string(seq.size()) + " exceeds max_len " +
                              std::to_string(ctx.max_len));
    std::vector<float> out(ctx.feature_width(), 0.0f);
    const std::size_t a = ctx.alphabet.size();
    for (std::size_t i = 0; i < seq.size(); ++i) out[i * a + ctx.alphabet.index_of(seq[i])] = 1.0f;
    return out;
}

inline std::vector<float> encode_label(std::string_view lineage, const EncodingContext& ctx) {
    std::vector<float> out(ctx.label_set.size(), 0.0f);
    out[ctx.label_index(lineage)] = 1.0f;
    return out;
}

inline EncodedDataset encode_dataset(const std::vector<SequenceRecord>& records, const EncodingContext& ctx) {
    EncodedDataset ds;
    ds.features = Mat<float>(records.size(), ctx.feature_width());
    ds.labels = Mat<float>(records.size(), ctx.label_set.size());
    ds.meta.reserve(records.size());
    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& rec = records[r];
        try {
            const auto f = encode_sequence(rec.sequence, ctx);
            std::copy(f.begin(), f.end(), ds.features.row(r));
            ds.labels(r, ctx.label_index(rec.lineage)) = 1.0f;
        } catch (const SequenceTooLong& e) {
            throw SequenceTooLong(std::string(e.what()) + " (record '" + rec.id + "')");
        } catch (const UnknownLabel& e) {
            throw UnknownLabel(std::string(e.what()) + " (record '" + rec.id + "')");
        }
        ds.meta.push_back({rec.country, rec.month});
    }
    return ds;
}

// Inverse of encode_sequence for rows without unknown symbols: argmax per
// block, stopping at the first all-zero (padding) block.
inline std::string decode_feature_row(const float* row, const EncodingContext& ctx) {
    const std::size_t a = ctx.alphabet.size();
    std::string seq;
    for (std::size_t i = 0; i < ctx.max_len; ++i) {
        std::size_t best = 0;
        float best_v = row[i * a];
        bool any = row[i * a] != 0.0f;
        for (std::size_t j = 1; j < a; ++j) {
            const float v = row[i * a + j];
            if (v != 0.0f) any = true;
            if (v > best_v) {
                best_v = v;
                best = j;
            }
        }
        if (!any) break;
        seq.push_back(ctx.alphabet.symbols[best]);
    }
    return seq;
}

// max_len defaults to the corpus maximum, label_set to the sorted distinct
// lineages. Overrides must cover the corpus or encoding will fail loudly.
inline EncodingContext make_context(const std::vector<SequenceRecord>& records, std::size_t max_len_override = 0,
                                    std::vector<std::string> label_set_override = {}) {
    EncodingContext ctx;
    std::size_t longest = 0;
    for (const auto& r : records) longest = std::max(longest, r.sequence.size());
    ctx.max_len = max_len_override ? max_len_override : longest;
    if (ctx.max_len < longest)
        throw InvalidSpec("max_len " + std::to_string(ctx.max_len) + " is below the corpus maximum " +
                          std::to_string(longest));
    ctx.label_set = label_set_override.empty() ? distinct_lineages(records) : std::move(label_set_override);
    if (ctx.label_set.empty()) throw InvalidSpec("label set is empty");
    return ctx;
}

} // namespace epic
