#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "epic/errors.hpp"
#include "epic/matrix.hpp"

namespace epic {

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::uint64_t support = 0;
    bool precision_defined = true;  // false when no prediction hit the class
    bool recall_defined = true;     // false when the class has no true examples
};

struct MetricsReport {
    std::vector<std::vector<std::uint64_t>> confusion;  // rows = true, cols = predicted
    double accuracy = 0.0;
    double precision_weighted = 0.0;
    double recall_weighted = 0.0;
    double f1_weighted = 0.0;
    double f1_macro = 0.0;
    double roc_auc_macro = 0.0;
    std::vector<ClassMetrics> per_class;
    std::uint64_t evaluated = 0;
    int auc_classes_used = 0;  // classes with >= 1 positive and >= 1 negative
};

// One-vs-rest AUC from scores via midranks (Mann-Whitney); ties contribute
// half. Returns -1 when the class has no positives or no negatives.
inline double binary_auc(const std::vector<double>& scores, const std::vector<bool>& is_positive) {
    const std::size_t n = scores.size();
    std::size_t pos = 0;
    for (bool b : is_positive) pos += b ? 1 : 0;
    const std::size_t neg = n - pos;
    if (pos == 0 || neg == 0) return -1.0;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * double(i + 1 + j);  // ranks are 1-based
        for (std::size_t t = i; t < j; ++t)
            if (is_positive[order[t]]) rank_sum_pos += midrank;
        i = j;
    }
    return (rank_sum_pos - 0.5 * double(pos) * double(pos + 1)) / (double(pos) * double(neg));
}

// All Table-style statistics from labels, predictions and class scores.
// Zero-denominator precision/recall/F1 are reported as 0 and flagged;
// ROC-AUC is the unweighted mean of one-vs-rest AUCs over classes that have
// both positives and negatives.
template <typename S>
MetricsReport compute_metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                              const Mat<S>& probabilities, int num_classes) {
    if (y_true.empty()) throw EmptyInput("metrics: no examples");
    if (y_true.size() != y_pred.size() || probabilities.rows != y_true.size() ||
        probabilities.cols != std::size_t(num_classes))
        throw LengthMismatch("metrics: labels, predictions and probabilities disagree in size");
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] < 0 || y_true[i] >= num_classes || y_pred[i] < 0 || y_pred[i] >= num_classes)
            throw LengthMismatch("metrics: class index out of range");
        double row = 0.0;
        for (int j = 0; j < num_classes; ++j) row += double(probabilities(i, std::size_t(j)));
        if (std::abs(row - 1.0) > 1e-4) throw InvalidSpec("metrics: probability row does not sum to 1");
    }

    MetricsReport r;
    const std::size_t n = y_true.size();
    const auto k = std::size_t(num_classes);
    r.evaluated = n;
    r.confusion.assign(k, std::vector<std::uint64_t>(k, 0));
    for (std::size_t i = 0; i < n; ++i) ++r.confusion[std::size_t(y_true[i])][std::size_t(y_pred[i])];

    std::uint64_t trace = 0;
    for (std::size_t c = 0; c < k; ++c) trace += r.confusion[c][c];
    r.accuracy = double(trace) / double(n);

    r.per_class.resize(k);
    double f1_sum = 0.0, wp = 0.0, wr = 0.0, wf = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        std::uint64_t tp = r.confusion[c][c], fp = 0, fn = 0;
        for (std::size_t o = 0; o < k; ++o) {
            if (o == c) continue;
            fp += r.confusion[o][c];
            fn += r.confusion[c][o];
        }
        ClassMetrics& m = r.per_class[c];
        m.support = tp + fn;
        m.precision_defined = tp + fp > 0;
        m.recall_defined = tp + fn > 0;
        m.precision = m.precision_defined ? double(tp) / double(tp + fp) : 0.0;
        m.recall = m.recall_defined ? double(tp) / double(tp + fn) : 0.0;
        m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
        f1_sum += m.f1;
        wp += m.precision * double(m.support);
        wr += m.recall * double(m.support);
        wf += m.f1 * double(m.support);
    }
    r.f1_macro = f1_sum / double(k);
    r.precision_weighted = wp / double(n);
    r.recall_weighted = wr / double(n);
    r.f1_weighted = wf / double(n);

    double auc_sum = 0.0;
    int auc_used = 0;
    std::vector<double> scores(n);
    std::vector<bool> is_pos(n);
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = double(probabilities(i, c));
            is_pos[i] = std::size_t(y_true[i]) == c;
        }
        const double auc = binary_auc(scores, is_pos);
        if (auc >= 0.0) {
            auc_sum += auc;
            ++auc_used;
        }
    }
    r.auc_classes_used = auc_used;
    r.roc_auc_macro = auc_used > 0 ? auc_sum / double(auc_used) : 0.0;
    return r;
}

// Nested key/value rendering used in run reports and by the eval command.
inline void write_metrics(std::ostream& out, const MetricsReport& r, const std::vector<std::string>& class_names,
                          const std::string& indent = "") {
    char buf[64];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.6f", v);
        return std::string(buf);
    };
    out << indent << "examples " << r.evaluated << "\n";
    out << indent << "accuracy " << fmt(r.accuracy) << "\n";
    out << indent << "precision_weighted " << fmt(r.precision_weighted) << "\n";
    out << indent << "recall_weighted " << fmt(r.recall_weighted) << "\n";
    out << indent << "f1_weighted " << fmt(r.f1_weighted) << "\n";
    out << indent << "f1_macro " << fmt(r.f1_macro) << "\n";
    out << indent << "roc_auc_macro " << fmt(r.roc_auc_macro) << "\n";
    out << indent << "roc_auc_scheme one_vs_rest_macro classes_used=" << r.auc_classes_used << "\n";
    out << indent << "per_class {\n";
    for (std::size_t c = 0; c < r.per_class.size(); ++c) {
        const auto& m = r.per_class[c];
        out << indent << "  " << class_names[c] << " { precision " << fmt(m.precision) << " recall "
            << fmt(m.recall) << " f1 " << fmt(m.f1) << " support " << m.support;
        if (!m.precision_defined) out << " precision_undefined";
        if (!m.recall_defined) out << " recall_undefined";
        out << " }\n";
    }
    out << indent << "}\n";
    out << indent << "confusion {\n";
    for (std::size_t c = 0; c < r.confusion.size(); ++c) {
        out << indent << "  " << class_names[c] << " :";
        for (auto v : r.confusion[c]) out << ' ' << v;
        out << "\n";
    }
    out << indent << "}\n";
}

} // namespace epic
