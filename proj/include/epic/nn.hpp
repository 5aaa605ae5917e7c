#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "epic/detail/sha256.hpp"
#include "epic/encode.hpp"
#include "epic/errors.hpp"
#include "epic/matrix.hpp"
#include "epic/rng.hpp"
#include "epic/weights.hpp"

namespace epic {

enum class Activation { relu };
enum class Mode { train, eval };

// Feed-forward classifier: per hidden layer dense -> batchnorm -> relu ->
// dropout, then a dense softmax head.
struct ModelSpec {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden_dims = {128, 64};
    std::size_t num_classes = 0;
    float dropout_rate = 0.3f;
    bool use_batchnorm = true;
    Activation activation = Activation::relu;
    std::uint64_t seed = 0;

    void validate() const {
        if (input_dim == 0) throw InvalidSpec("model: input_dim must be positive");
        if (num_classes == 0) throw InvalidSpec("model: num_classes must be positive");
        for (auto h : hidden_dims)
            if (h == 0) throw InvalidSpec("model: hidden layer width must be positive");
        if (!(dropout_rate >= 0.0f && dropout_rate < 1.0f)) throw InvalidSpec("model: dropout_rate must be in [0,1)");
    }

    // Architecture hash. The init seed is deliberately left out: clients
    // seeded differently must still be aggregation-compatible.
    Fingerprint fingerprint() const {
        std::ostringstream os;
        os << "ffnn;in=" << input_dim << ";hidden=";
        for (std::size_t i = 0; i < hidden_dims.size(); ++i) os << (i ? "," : "") << hidden_dims[i];
        os << ";classes=" << num_classes << ";dropout=" << dropout_rate
           << ";batchnorm=" << (use_batchnorm ? 1 : 0) << ";act=relu";
        return detail::sha256(os.str());
    }
};

struct TrainConfig {
    int epochs = 10;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::uint64_t shuffle_seed = 0;

    void validate() const {
        if (epochs < 0) throw InvalidSpec("train: epochs must be >= 0");
        if (batch_size == 0) throw InvalidSpec("train: batch_size must be positive");
        if (learning_rate <= 0) throw InvalidSpec("train: learning_rate must be positive");
        if (!(adam_beta1 > 0 && adam_beta1 < 1) || !(adam_beta2 > 0 && adam_beta2 < 1))
            throw InvalidSpec("train: adam betas must be in (0,1)");
        if (adam_epsilon <= 0) throw InvalidSpec("train: adam_epsilon must be positive");
    }
};

struct EpochStats {
    double accuracy = 0.0;
    double loss = 0.0;
};
using TrainHistory = std::vector<EpochStats>;

inline constexpr double kBatchnormMomentum = 0.9;
inline constexpr double kBatchnormEpsilon = 1e-5;
inline constexpr double kLogFloor = 1e-12;

namespace detail {

struct LayerLayout {
    std::size_t in = 0, out = 0;
    std::size_t weight = 0, bias = 0;       // tensor indices
    std::size_t bn = std::size_t(-1);       // index of gamma; beta/mean/var follow
    bool has_bn = false;
};

// Tensor order: per hidden layer weight, bias, [gamma, beta, running_mean,
// running_var], then the output head's weight and bias.
inline std::vector<LayerLayout> model_layout(const ModelSpec& spec) {
    spec.validate();
    std::vector<LayerLayout> out;
    std::size_t idx = 0, in = spec.input_dim;
    for (std::size_t h : spec.hidden_dims) {
        LayerLayout l;
        l.in = in;
        l.out = h;
        l.weight = idx++;
        l.bias = idx++;
        if (spec.use_batchnorm) {
            l.has_bn = true;
            l.bn = idx;
            idx += 4;
        }
        out.push_back(l);
        in = h;
    }
    LayerLayout head;
    head.in = in;
    head.out = spec.num_classes;
    head.weight = idx++;
    head.bias = idx++;
    out.push_back(head);
    return out;
}

template <typename S>
void check_weights(const WeightSet<S>& w, const ModelSpec& spec) {
    const auto layout = model_layout(spec);
    std::size_t expect = layout.back().bias + 1;
    if (w.layers.size() != expect)
        throw ShapeMismatch("weights have " + std::to_string(w.layers.size()) + " tensors, spec expects " +
                            std::to_string(expect));
    if (w.fingerprint != spec.fingerprint()) throw ShapeMismatch("weights fingerprint does not match model spec");
    for (const auto& l : layout) {
        const auto& wt = w.layers[l.weight];
        if (wt.shape.size() != 2 || wt.shape[0] != l.in || wt.shape[1] != l.out)
            throw ShapeMismatch("tensor '" + wt.name + "' has unexpected shape");
        if (w.layers[l.bias].shape != std::vector<std::uint32_t>{std::uint32_t(l.out)})
            throw ShapeMismatch("tensor '" + w.layers[l.bias].name + "' has unexpected shape");
        if (l.has_bn)
            for (std::size_t k = 0; k < 4; ++k)
                if (w.layers[l.bn + k].values.size() != l.out)
                    throw ShapeMismatch("tensor '" + w.layers[l.bn + k].name + "' has unexpected shape");
    }
}

template <typename S>
Mat<S> tensor_as_mat(const Tensor<S>& t) {
    Mat<S> m(t.shape[0], t.shape[1]);
    m.v = t.values;
    return m;
}

// Z = X * W + b with W given as a (in x out) tensor.
template <typename S>
Mat<S> affine(const Mat<S>& x, const Tensor<S>& w, const Tensor<S>& b) {
    if (x.cols != w.shape[0]) throw ShapeMismatch("affine: input width " + std::to_string(x.cols) +
                                                  " vs weight rows " + std::to_string(w.shape[0]));
    Mat<S> z(x.rows, w.shape[1]);
    const std::size_t out = w.shape[1];
    for (std::size_t i = 0; i < x.rows; ++i) {
        const S* xrow = x.row(i);
        S* zrow = z.row(i);
        for (std::size_t j = 0; j < out; ++j) zrow[j] = b.values[j];
        for (std::size_t k = 0; k < x.cols; ++k) {
            const S s = xrow[k];
            if (s == S(0)) continue;
            const S* wrow = w.values.data() + k * out;
            for (std::size_t j = 0; j < out; ++j) zrow[j] += s * wrow[j];
        }
    }
    return z;
}

template <typename S>
void softmax_rows(Mat<S>& m) {
    for (std::size_t i = 0; i < m.rows; ++i) {
        S* row = m.row(i);
        S mx = row[0];
        for (std::size_t j = 1; j < m.cols; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) {
            const double e = std::exp(double(row[j] - mx));
            row[j] = S(e);
            sum += e;
        }
        const double inv = 1.0 / sum;
        for (std::size_t j = 0; j < m.cols; ++j) row[j] = S(double(row[j]) * inv);
    }
}

inline std::size_t argmax_row_lowest(const float* row, std::size_t n) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < n; ++j)
        if (row[j] > row[best]) best = j;
    return best;
}

template <typename S>
std::size_t argmax_row(const S* row, std::size_t n) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < n; ++j)
        if (row[j] > row[best]) best = j;
    return best;
}

} // namespace detail

template <typename S>
struct BnBatchStats {
    std::vector<S> mean, var;
};

template <typename S>
struct ForwardCache {
    std::vector<Mat<S>> act;             // act[l]: input to dense layer l, for l >= 1
    std::vector<Mat<S>> preact;          // post-batchnorm, pre-relu, per hidden layer
    std::vector<Mat<S>> xhat;            // per hidden layer (batchnorm only)
    std::vector<std::vector<S>> invstd;  // per hidden layer (batchnorm only)
    std::vector<BnBatchStats<S>> bn_batch;
    std::vector<Mat<S>> dropout_factor;  // per hidden layer (train mode, rate > 0)
    Mat<S> probs;
};

// He-uniform dense weights, zero biases, identity batchnorm, running mean 0 /
// variance 1. Deterministic in spec.seed.
template <typename S>
WeightSet<S> init_model(const ModelSpec& spec) {
    const auto layout = detail::model_layout(spec);
    Rng rng(derive_seed(spec.seed, "init"));
    WeightSet<S> w;
    w.fingerprint = spec.fingerprint();
    w.layers.resize(layout.back().bias + 1);
    for (std::size_t li = 0; li < layout.size(); ++li) {
        const auto& l = layout[li];
        const std::string base = "dense" + std::to_string(li);
        Tensor<S>& wt = w.layers[l.weight];
        wt.name = base + ".weight";
        wt.shape = {std::uint32_t(l.in), std::uint32_t(l.out)};
        wt.values.resize(l.in * l.out);
        const double limit = std::sqrt(6.0 / double(l.in));
        for (auto& v : wt.values) v = S(rng.uniform(-limit, limit));
        Tensor<S>& bt = w.layers[l.bias];
        bt.name = base + ".bias";
        bt.shape = {std::uint32_t(l.out)};
        bt.values.assign(l.out, S(0));
        if (l.has_bn) {
            const std::string bn = "bn" + std::to_string(li);
            const char* suffix[4] = {".gamma", ".beta", ".running_mean", ".running_var"};
            const S fill[4] = {S(1), S(0), S(0), S(1)};
            for (std::size_t k = 0; k < 4; ++k) {
                Tensor<S>& t = w.layers[l.bn + k];
                t.name = bn + suffix[k];
                t.shape = {std::uint32_t(l.out)};
                t.values.assign(l.out, fill[k]);
            }
        }
    }
    return w;
}

// Softmax probabilities for a batch. Train mode uses batch statistics for
// batchnorm (recorded in the cache together with everything backward needs)
// and applies inverted dropout; eval mode uses running statistics and no
// dropout, so it is a plain deterministic pass.
template <typename S>
Mat<S> forward(const WeightSet<S>& weights, const ModelSpec& spec, const Mat<S>& batch, Mode mode,
               Rng* dropout_rng = nullptr, ForwardCache<S>* cache = nullptr) {
    detail::check_weights(weights, spec);
    if (batch.cols != spec.input_dim)
        throw ShapeMismatch("batch width " + std::to_string(batch.cols) + " vs input_dim " +
                            std::to_string(spec.input_dim));
    const auto layout = detail::model_layout(spec);
    const std::size_t nhidden = layout.size() - 1;
    const bool dropout_active = mode == Mode::train && spec.dropout_rate > 0.0f;
    if (dropout_active && !dropout_rng) throw InvalidSpec("train-mode forward with dropout needs an rng");

    if (cache) {
        cache->act.assign(layout.size(), {});
        cache->preact.assign(nhidden, {});
        cache->xhat.assign(nhidden, {});
        cache->invstd.assign(nhidden, {});
        cache->bn_batch.assign(nhidden, {});
        cache->dropout_factor.assign(nhidden, {});
    }

    Mat<S> a;
    const Mat<S>* cur = &batch;
    for (std::size_t li = 0; li < nhidden; ++li) {
        const auto& l = layout[li];
        Mat<S> z = detail::affine(*cur, weights.layers[l.weight], weights.layers[l.bias]);
        const std::size_t n = z.rows, m = z.cols;

        if (l.has_bn) {
            const auto& gamma = weights.layers[l.bn].values;
            const auto& beta = weights.layers[l.bn + 1].values;
            std::vector<S> mean(m), var(m), invstd(m);
            if (mode == Mode::train) {
                for (std::size_t j = 0; j < m; ++j) {
                    double s = 0.0;
                    for (std::size_t i = 0; i < n; ++i) s += double(z(i, j));
                    mean[j] = S(s / double(n));
                }
                for (std::size_t j = 0; j < m; ++j) {
                    double s = 0.0;
                    for (std::size_t i = 0; i < n; ++i) {
                        const double d = double(z(i, j)) - double(mean[j]);
                        s += d * d;
                    }
                    var[j] = S(s / double(n));
                }
            } else {
                mean = weights.layers[l.bn + 2].values;
                var = weights.layers[l.bn + 3].values;
            }
            for (std::size_t j = 0; j < m; ++j) invstd[j] = S(1.0 / std::sqrt(double(var[j]) + kBatchnormEpsilon));
            Mat<S> xh(n, m);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j) {
                    xh(i, j) = (z(i, j) - mean[j]) * invstd[j];
                    z(i, j) = gamma[j] * xh(i, j) + beta[j];
                }
            if (cache) {
                cache->xhat[li] = std::move(xh);
                cache->invstd[li] = invstd;
                if (mode == Mode::train) cache->bn_batch[li] = {mean, var};
            }
        }

        if (cache) cache->preact[li] = z;
        for (auto& v : z.v) v = v > S(0) ? v : S(0);

        if (dropout_active) {
            const S keep_scale = S(1.0 / (1.0 - double(spec.dropout_rate)));
            Mat<S> factor(n, m);
            for (auto& f : factor.v) f = dropout_rng->uniform_float() < spec.dropout_rate ? S(0) : keep_scale;
            for (std::size_t i = 0; i < z.v.size(); ++i) z.v[i] *= factor.v[i];
            if (cache) cache->dropout_factor[li] = std::move(factor);
        }

        a = std::move(z);
        if (cache) cache->act[li + 1] = a;
        cur = &a;
    }

    Mat<S> logits = detail::affine(*cur, weights.layers[layout.back().weight], weights.layers[layout.back().bias]);
    detail::softmax_rows(logits);
    if (cache) cache->probs = logits;
    return logits;
}

template <typename S>
struct LossGrad {
    double loss = 0.0;
    WeightSet<S> grads;  // same shape as the weights; running-stat entries stay zero
    Mat<S> probs;
    std::vector<BnBatchStats<S>> bn_batch;  // batch statistics seen this pass
};

// Mean categorical cross-entropy and its gradient for every trainable
// parameter, via one train-mode forward and full backpropagation (including
// through the batch statistics of batchnorm).
template <typename S>
LossGrad<S> loss_and_grad(const WeightSet<S>& weights, const ModelSpec& spec, const Mat<S>& batch,
                          const Mat<S>& labels, Rng* dropout_rng = nullptr) {
    if (labels.rows != batch.rows || labels.cols != spec.num_classes)
        throw ShapeMismatch("labels shape does not match batch/num_classes");
    const auto layout = detail::model_layout(spec);
    const std::size_t nhidden = layout.size() - 1;

    ForwardCache<S> cache;
    forward(weights, spec, batch, Mode::train, dropout_rng, &cache);

    const std::size_t n = batch.rows;
    LossGrad<S> out;
    out.probs = cache.probs;
    out.bn_batch = std::move(cache.bn_batch);
    out.grads = zeros_like(weights);

    double loss = 0.0;
    Mat<S> dz(n, spec.num_classes);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < spec.num_classes; ++j) {
            const double p = double(out.probs(i, j));
            if (labels(i, j) != S(0)) loss -= std::log(std::max(p, kLogFloor)) * double(labels(i, j));
            dz(i, j) = S((p - double(labels(i, j))) / double(n));
        }
    out.loss = loss / double(n);

    // head
    {
        const auto& l = layout.back();
        const Mat<S>& input = nhidden == 0 ? batch : cache.act[nhidden];
        Mat<S> dw(l.in, l.out);
        linalg::add_at_b(input, dz, dw);
        out.grads.layers[l.weight].values = std::move(dw.v);
        out.grads.layers[l.bias].values = linalg::colsum(dz);
        if (nhidden > 0) dz = linalg::matmul_bt(dz, detail::tensor_as_mat(weights.layers[l.weight]));
    }

    for (std::size_t li = nhidden; li-- > 0;) {
        const auto& l = layout[li];
        const std::size_t m = l.out;

        if (!cache.dropout_factor[li].empty())
            for (std::size_t i = 0; i < dz.v.size(); ++i) dz.v[i] *= cache.dropout_factor[li].v[i];

        const Mat<S>& pre = cache.preact[li];
        for (std::size_t i = 0; i < dz.v.size(); ++i)
            if (pre.v[i] <= S(0)) dz.v[i] = S(0);

        if (l.has_bn) {
            const auto& gamma = weights.layers[l.bn].values;
            const Mat<S>& xh = cache.xhat[li];
            const auto& invstd = cache.invstd[li];
            std::vector<double> sum_dy(m, 0.0), sum_dy_xhat(m, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j) {
                    sum_dy[j] += double(dz(i, j));
                    sum_dy_xhat[j] += double(dz(i, j)) * double(xh(i, j));
                }
            auto& dgamma = out.grads.layers[l.bn].values;
            auto& dbeta = out.grads.layers[l.bn + 1].values;
            for (std::size_t j = 0; j < m; ++j) {
                dgamma[j] = S(sum_dy_xhat[j]);
                dbeta[j] = S(sum_dy[j]);
            }
            const double invn = 1.0 / double(n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j)
                    dz(i, j) = S(double(gamma[j]) * double(invstd[j]) *
                                 (double(dz(i, j)) - sum_dy[j] * invn - double(xh(i, j)) * sum_dy_xhat[j] * invn));
        }

        const Mat<S>& input = li == 0 ? batch : cache.act[li];
        Mat<S> dw(l.in, l.out);
        linalg::add_at_b(input, dz, dw);
        out.grads.layers[l.weight].values = std::move(dw.v);
        out.grads.layers[l.bias].values = linalg::colsum(dz);
        if (li > 0) dz = linalg::matmul_bt(dz, detail::tensor_as_mat(weights.layers[l.weight]));
    }
    return out;
}

template <typename S>
struct AdamState {
    std::vector<std::vector<S>> m, v;

    static AdamState zero_for(const WeightSet<S>& w) {
        AdamState st;
        st.m.reserve(w.layers.size());
        st.v.reserve(w.layers.size());
        for (const auto& t : w.layers) {
            st.m.emplace_back(t.values.size(), S(0));
            st.v.emplace_back(t.values.size(), S(0));
        }
        return st;
    }
};

// Standard bias-corrected Adam update, step index t >= 1. Tensors whose
// gradient is identically zero (batchnorm running statistics) are untouched.
template <typename S>
void adam_step_inplace(WeightSet<S>& w, const WeightSet<S>& grads, AdamState<S>& st, const TrainConfig& cfg,
                       std::int64_t t) {
    if (t < 1) throw InvalidSpec("adam step index must be >= 1");
    if (!w.compatible_with(grads)) throw IncompatibleShapes("adam: gradient tensors do not match weights");
    const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, double(t));
    const double c2 = 1.0 - std::pow(b2, double(t));
    for (std::size_t li = 0; li < w.layers.size(); ++li) {
        auto& wv = w.layers[li].values;
        const auto& gv = grads.layers[li].values;
        auto& mv = st.m[li];
        auto& vv = st.v[li];
        for (std::size_t i = 0; i < wv.size(); ++i) {
            const double g = double(gv[i]);
            const double m = b1 * double(mv[i]) + (1.0 - b1) * g;
            const double v = b2 * double(vv[i]) + (1.0 - b2) * g * g;
            mv[i] = S(m);
            vv[i] = S(v);
            wv[i] = S(double(wv[i]) - cfg.learning_rate * (m / c1) / (std::sqrt(v / c2) + cfg.adam_epsilon));
        }
    }
}

template <typename S>
std::pair<WeightSet<S>, AdamState<S>> adam_step(const WeightSet<S>& w, const WeightSet<S>& grads, AdamState<S> st,
                                                const TrainConfig& cfg, std::int64_t t) {
    WeightSet<S> out = w;
    adam_step_inplace(out, grads, st, cfg, t);
    return {std::move(out), std::move(st)};
}

// Epoch-level training loop: seeded shuffle, mini-batches (tail batch kept),
// Adam updates and batchnorm running-statistic updates. Returns the final
// weights and per-epoch mean training accuracy/loss; the input weights are
// not modified.
template <typename S>
std::pair<WeightSet<S>, TrainHistory> train(const WeightSet<S>& start, const ModelSpec& spec, const Mat<S>& x,
                                            const Mat<S>& y, const TrainConfig& cfg) {
    cfg.validate();
    detail::check_weights(start, spec);
    if (cfg.epochs == 0) return {start, {}};
    if (x.rows == 0) throw EmptyDataset("train: dataset is empty");
    if (x.cols != spec.input_dim || y.cols != spec.num_classes || y.rows != x.rows)
        throw ShapeMismatch("train: dataset shapes do not match spec");

    const auto layout = detail::model_layout(spec);
    WeightSet<S> w = start;
    AdamState<S> opt = AdamState<S>::zero_for(w);
    Rng shuffle_rng(derive_seed(cfg.shuffle_seed, "shuffle"));
    Rng dropout_rng(derive_seed(cfg.shuffle_seed, "dropout"));

    const std::size_t n = x.rows;
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    TrainHistory history;
    history.reserve(std::size_t(cfg.epochs));
    std::int64_t t = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t off = 0; off < n; off += cfg.batch_size) {
            const std::size_t nb = std::min(cfg.batch_size, n - off);
            Mat<S> xb(nb, x.cols), yb(nb, y.cols);
            for (std::size_t i = 0; i < nb; ++i) {
                const std::uint32_t src = order[off + i];
                std::copy(x.row(src), x.row(src) + x.cols, xb.row(i));
                std::copy(y.row(src), y.row(src) + y.cols, yb.row(i));
            }
            auto lg = loss_and_grad(w, spec, xb, yb, &dropout_rng);
            adam_step_inplace(w, lg.grads, opt, cfg, ++t);

            for (std::size_t li = 0; li + 1 < layout.size(); ++li) {
                const auto& l = layout[li];
                if (!l.has_bn || lg.bn_batch[li].mean.empty()) continue;
                auto& rmean = w.layers[l.bn + 2].values;
                auto& rvar = w.layers[l.bn + 3].values;
                for (std::size_t j = 0; j < l.out; ++j) {
                    rmean[j] = S(kBatchnormMomentum * double(rmean[j]) +
                                 (1.0 - kBatchnormMomentum) * double(lg.bn_batch[li].mean[j]));
                    rvar[j] = S(kBatchnormMomentum * double(rvar[j]) +
                                (1.0 - kBatchnormMomentum) * double(lg.bn_batch[li].var[j]));
                }
            }

            loss_sum += lg.loss * double(nb);
            for (std::size_t i = 0; i < nb; ++i)
                if (detail::argmax_row(lg.probs.row(i), lg.probs.cols) ==
                    detail::argmax_row(yb.row(i), yb.cols))
                    ++correct;
        }
        history.push_back({double(correct) / double(n), loss_sum / double(n)});
    }
    return {std::move(w), std::move(history)};
}

inline std::pair<WeightSet<float>, TrainHistory> train(const WeightSet<float>& start, const ModelSpec& spec,
                                                       const EncodedDataset& ds, const TrainConfig& cfg) {
    return train(start, spec, ds.features, ds.labels, cfg);
}

template <typename S>
struct Prediction {
    std::vector<int> classes;
    Mat<S> probs;
};

// Eval-mode forward; argmax per row with lowest-index tie-break.
template <typename S>
Prediction<S> predict(const WeightSet<S>& weights, const ModelSpec& spec, const Mat<S>& x) {
    Prediction<S> p;
    p.probs = forward(weights, spec, x, Mode::eval);
    p.classes.resize(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i)
        p.classes[i] = int(detail::argmax_row(p.probs.row(i), p.probs.cols));
    return p;
}

inline Prediction<float> predict(const WeightSet<float>& weights, const ModelSpec& spec, const EncodedDataset& ds) {
    return predict(weights, spec, ds.features);
}

} // namespace epic
