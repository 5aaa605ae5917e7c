#include <gtest/gtest.h>

#include <cmath>

#include "epic/nn.hpp"
#include "epic/weights.hpp"
#include "test_util.hpp"

using namespace epic;

namespace {

ModelSpec tiny_spec(std::size_t in, std::vector<std::size_t> hidden, std::size_t classes, bool bn,
                    float dropout = 0.0f, std::uint64_t seed = 7) {
    ModelSpec s;
    s.input_dim = in;
    s.hidden_dims = std::move(hidden);
    s.num_classes = classes;
    s.dropout_rate = dropout;
    s.use_batchnorm = bn;
    s.seed = seed;
    return s;
}

template <typename S>
bool bitwise_equal(const WeightSet<S>& a, const WeightSet<S>& b) {
    if (a.layers.size() != b.layers.size()) return false;
    for (std::size_t i = 0; i < a.layers.size(); ++i)
        if (a.layers[i].name != b.layers[i].name || a.layers[i].values != b.layers[i].values) return false;
    return a.fingerprint == b.fingerprint;
}

} // namespace

TEST(InitModel, DeterministicGivenSeed) {
    const auto spec = tiny_spec(4, {3}, 2, true);
    EXPECT_TRUE(bitwise_equal(init_model<float>(spec), init_model<float>(spec)));
}

TEST(InitModel, NoHiddenLayerShapes) {
    const auto spec = tiny_spec(4, {}, 2, true);
    const auto w = init_model<float>(spec);
    ASSERT_EQ(w.layers.size(), 2u);  // batchnorm applies to hidden layers only
    EXPECT_EQ(w.layers[0].name, "dense0.weight");
    EXPECT_EQ(w.layers[0].shape, (std::vector<std::uint32_t>{4, 2}));
    EXPECT_EQ(w.layers[1].name, "dense0.bias");
    EXPECT_EQ(w.layers[1].shape, (std::vector<std::uint32_t>{2}));
}

TEST(InitModel, DefaultArchitectureShapes) {
    const auto spec = tiny_spec(26754, {128, 64}, 5, true);
    const auto w = init_model<float>(spec);
    // dense + bias + 4 batchnorm tensors per hidden layer, plus the head
    ASSERT_EQ(w.layers.size(), 2u * 6u + 2u);
    EXPECT_EQ(w.layers[0].shape, (std::vector<std::uint32_t>{26754, 128}));
    EXPECT_EQ(w.layers[6].shape, (std::vector<std::uint32_t>{128, 64}));
    EXPECT_EQ(w.layers[12].shape, (std::vector<std::uint32_t>{64, 5}));
    EXPECT_EQ(w.layers[2].name, "bn0.gamma");
    EXPECT_EQ(w.layers[5].name, "bn0.running_var");
    for (float v : w.layers[5].values) EXPECT_EQ(v, 1.0f);
}

TEST(InitModel, RejectsZeroDims) {
    EXPECT_THROW(init_model<float>(tiny_spec(0, {}, 2, false)), InvalidSpec);
    EXPECT_THROW(init_model<float>(tiny_spec(4, {0}, 2, false)), InvalidSpec);
    EXPECT_THROW(init_model<float>(tiny_spec(4, {}, 0, false)), InvalidSpec);
}

TEST(Fingerprint, ArchitectureOnly) {
    auto a = tiny_spec(4, {3}, 2, true);
    auto b = a;
    b.seed = 1234;  // different init seed, same architecture
    EXPECT_EQ(a.fingerprint(), b.fingerprint());
    b.hidden_dims = {4};
    EXPECT_NE(a.fingerprint(), b.fingerprint());
}

TEST(Forward, RowsSumToOne) {
    const auto spec = tiny_spec(6, {5, 4}, 3, true, 0.3f);
    const auto w = init_model<float>(spec);
    Rng rng(11);
    Mat<float> x(7, 6);
    for (auto& v : x.v) v = float(rng.uniform(-2, 2));
    const auto p = forward(w, spec, x, Mode::eval);
    for (std::size_t i = 0; i < p.rows; ++i) {
        double s = 0;
        for (std::size_t j = 0; j < p.cols; ++j) s += p(i, j);
        EXPECT_NEAR(s, 1.0, 1e-6);
    }
}

TEST(Forward, DropoutZeroTrainEqualsEval) {
    const auto spec = tiny_spec(5, {4}, 3, false, 0.0f);
    const auto w = init_model<float>(spec);
    Rng rng(12);
    Mat<float> x(4, 5);
    for (auto& v : x.v) v = float(rng.uniform(-1, 1));
    // without batchnorm the train pass has no batch-dependent statistics
    const auto train_out = forward(w, spec, x, Mode::train);
    const auto eval_out = forward(w, spec, x, Mode::eval);
    EXPECT_EQ(train_out.v, eval_out.v);
}

TEST(Forward, HandComputedDenseReluSoftmax) {
    // x=[1,2], W1=[[1,-1],[0.5,0.25]], b1=[0.1,-0.2] -> z=[2.1,-0.7]
    // relu -> [2.1, 0]; identity head -> softmax([2.1, 0])
    const auto spec = tiny_spec(2, {2}, 2, false);
    auto w = init_model<float>(spec);
    w.layers[0].values = {1.0f, -1.0f, 0.5f, 0.25f};
    w.layers[1].values = {0.1f, -0.2f};
    w.layers[2].values = {1.0f, 0.0f, 0.0f, 1.0f};
    w.layers[3].values = {0.0f, 0.0f};
    Mat<float> x(1, 2);
    x(0, 0) = 1.0f;
    x(0, 1) = 2.0f;
    const auto p = forward(w, spec, x, Mode::eval);
    EXPECT_NEAR(p(0, 0), 0.8909031788, 1e-6);
    EXPECT_NEAR(p(0, 1), 0.1090968212, 1e-6);
}

TEST(Forward, ShapeMismatchThrows) {
    const auto spec = tiny_spec(5, {4}, 3, false);
    const auto w = init_model<float>(spec);
    Mat<float> x(2, 6);
    EXPECT_THROW(forward(w, spec, x, Mode::eval), ShapeMismatch);
}

TEST(Loss, NearZeroForConfidentCorrectPrediction) {
    const auto spec = tiny_spec(2, {}, 2, false);
    auto w = init_model<double>(spec);
    w.layers[0].values = {50.0, -50.0, 0.0, 0.0};  // huge margin on feature 0
    w.layers[1].values = {0.0, 0.0};
    Mat<double> x(1, 2), y(1, 2);
    x(0, 0) = 1.0;
    y(0, 0) = 1.0;
    const auto lg = loss_and_grad(w, spec, x, y);
    EXPECT_LT(lg.loss, 1e-12);
    EXPECT_GE(lg.loss, 0.0);
}

TEST(Loss, UniformPredictorGivesLogK) {
    const auto spec = tiny_spec(3, {}, 5, false);
    auto w = init_model<double>(spec);
    for (auto& t : w.layers)
        for (auto& v : t.values) v = 0.0;
    Mat<double> x(4, 3), y(4, 5);
    Rng rng(5);
    for (auto& v : x.v) v = rng.uniform(-1, 1);
    for (std::size_t i = 0; i < 4; ++i) y(i, std::size_t(rng.below(5))) = 1.0;
    const auto lg = loss_and_grad(w, spec, x, y);
    EXPECT_NEAR(lg.loss, std::log(5.0), 1e-9);
}

TEST(Gradients, MatchFiniteDifferences) {
    Rng rng(21);
    for (bool bn : {false, true}) {
        auto spec = tiny_spec(6, {5, 4}, 3, bn, 0.0f, 31);
        const auto res = testutil::fd_gradient_check(spec, 6, rng);
        EXPECT_GT(res.probes, 50u);
        EXPECT_LT(res.max_rel, 1e-4) << "batchnorm=" << bn;
    }
}

TEST(Adam, ZeroGradientLeavesWeightsAndDecaysMoments) {
    const auto spec = tiny_spec(3, {}, 2, false);
    const auto w = init_model<float>(spec);
    const auto g = zeros_like(w);
    auto st = AdamState<float>::zero_for(w);
    st.m[0][0] = 1.0f;  // nonzero moment decays toward zero
    TrainConfig cfg;
    auto [w1, st1] = adam_step(w, g, st, cfg, 1);
    EXPECT_NEAR(st1.m[0][0], 0.9f, 1e-7);
    // weight 0 moved only by the decaying stale moment; all-zero state moves nothing
    auto st_zero = AdamState<float>::zero_for(w);
    auto [w2, st2] = adam_step(w, g, st_zero, cfg, 1);
    EXPECT_TRUE(bitwise_equal(w2, w));
}

TEST(Adam, SingleStepHandComputation) {
    // w=0, g=1, lr=0.1, defaults: bias correction makes the first step ~ -lr
    const auto spec = tiny_spec(1, {}, 1, false);
    auto w = init_model<float>(spec);
    w.layers[0].values = {0.0f};
    w.layers[1].values = {0.0f};
    auto g = zeros_like(w);
    g.layers[0].values = {1.0f};
    TrainConfig cfg;
    cfg.learning_rate = 0.1;
    auto st = AdamState<float>::zero_for(w);
    auto [w1, st1] = adam_step(w, g, st, cfg, 1);
    EXPECT_NEAR(w1.layers[0].values[0], -0.1f, 1e-6);
}

TEST(Adam, PureGivenExplicitState) {
    const auto spec = tiny_spec(2, {}, 2, false);
    const auto w = init_model<float>(spec);
    Rng rng(3);
    auto g = zeros_like(w);
    for (auto& t : g.layers)
        for (auto& v : t.values) v = float(rng.uniform(-1, 1));
    const auto st = AdamState<float>::zero_for(w);
    TrainConfig cfg;
    auto [w1, st1] = adam_step(w, g, st, cfg, 1);
    auto [w2, st2] = adam_step(w, g, st, cfg, 1);
    EXPECT_TRUE(bitwise_equal(w1, w2));
    EXPECT_EQ(st1.m, st2.m);
    EXPECT_EQ(st1.v, st2.v);
}

namespace {

// two tight clusters on the x axis, one per class
void toy_separable(Mat<float>& x, Mat<float>& y) {
    x = Mat<float>(20, 2);
    y = Mat<float>(20, 2);
    Rng rng(17);
    for (std::size_t i = 0; i < 20; ++i) {
        const int cls = i % 2;
        x(i, 0) = float((cls == 0 ? -2.0 : 2.0) + rng.uniform(-0.1, 0.1));
        x(i, 1) = float(rng.uniform(-0.1, 0.1));
        y(i, std::size_t(cls)) = 1.0f;
    }
}

} // namespace

TEST(Train, ToySeparableReachesFullAccuracy) {
    const auto spec = tiny_spec(2, {}, 2, false, 0.0f, 5);
    Mat<float> x, y;
    toy_separable(x, y);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.learning_rate = 0.05;
    cfg.shuffle_seed = 9;
    const auto start = init_model<float>(spec);
    const auto [w, hist] = train(start, spec, x, y, cfg);
    ASSERT_EQ(hist.size(), 50u);
    EXPECT_EQ(hist.back().accuracy, 1.0);
    const auto pred = predict(w, spec, x);
    for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(pred.classes[i], int(i % 2));
}

TEST(Train, ZeroEpochsReturnsInputBitForBit) {
    const auto spec = tiny_spec(3, {2}, 2, true, 0.2f);
    const auto start = init_model<float>(spec);
    Mat<float> x(4, 3), y(4, 2);
    for (std::size_t i = 0; i < 4; ++i) y(i, i % 2) = 1.0f;
    TrainConfig cfg;
    cfg.epochs = 0;
    const auto [w, hist] = train(start, spec, x, y, cfg);
    EXPECT_TRUE(bitwise_equal(w, start));
    EXPECT_TRUE(hist.empty());
}

TEST(Train, DeterministicAndNonMutating) {
    const auto spec = tiny_spec(4, {3}, 2, true, 0.25f, 13);
    Rng rng(31);
    Mat<float> x(11, 4), y(11, 2);
    for (auto& v : x.v) v = float(rng.uniform(-1, 1));
    for (std::size_t i = 0; i < 11; ++i) y(i, i % 2) = 1.0f;
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 4;  // exercises the short tail batch
    cfg.shuffle_seed = 77;
    const auto start = init_model<float>(spec);
    const auto snapshot = start;
    const auto [w1, h1] = train(start, spec, x, y, cfg);
    const auto [w2, h2] = train(start, spec, x, y, cfg);
    EXPECT_TRUE(bitwise_equal(w1, w2));
    EXPECT_TRUE(bitwise_equal(start, snapshot));
    ASSERT_EQ(h1.size(), h2.size());
    for (std::size_t e = 0; e < h1.size(); ++e) {
        EXPECT_EQ(h1[e].loss, h2[e].loss);
        EXPECT_EQ(h1[e].accuracy, h2[e].accuracy);
    }
}

TEST(Train, EmptyDatasetThrows) {
    const auto spec = tiny_spec(3, {}, 2, false);
    const auto w = init_model<float>(spec);
    Mat<float> x(0, 3), y(0, 2);
    TrainConfig cfg;
    EXPECT_THROW(train(w, spec, x, y, cfg), EmptyDataset);
}

TEST(Batchnorm, EvalOutputIndependentOfBatchComposition) {
    const auto spec = tiny_spec(4, {3}, 2, true);
    const auto w = init_model<float>(spec);
    Rng rng(41);
    Mat<float> batch(5, 4);
    for (auto& v : batch.v) v = float(rng.uniform(-1, 1));
    const auto full = forward(w, spec, batch, Mode::eval);
    for (std::size_t i = 0; i < batch.rows; ++i) {
        Mat<float> single(1, 4);
        std::copy(batch.row(i), batch.row(i) + 4, single.row(0));
        const auto alone = forward(w, spec, single, Mode::eval);
        for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(alone(0, j), full(i, j));
    }
}

TEST(Batchnorm, TrainUpdatesRunningStatistics) {
    const auto spec = tiny_spec(3, {2}, 2, true, 0.0f, 2);
    Rng rng(8);
    Mat<float> x(16, 3), y(16, 2);
    for (auto& v : x.v) v = float(rng.uniform(1.0, 2.0));  // biased inputs move the running mean
    for (std::size_t i = 0; i < 16; ++i) y(i, i % 2) = 1.0f;
    TrainConfig cfg;
    cfg.epochs = 3;
    const auto start = init_model<float>(spec);
    const auto [w, hist] = train(start, spec, x, y, cfg);
    const auto* rmean = w.find("bn0.running_mean");
    ASSERT_NE(rmean, nullptr);
    bool moved = false;
    for (float v : rmean->values) moved |= v != 0.0f;
    EXPECT_TRUE(moved);
}

TEST(Predict, ArgmaxAndTieBreak) {
    // all-zero weights give exactly uniform probabilities: tie -> class 0
    const auto spec = tiny_spec(3, {}, 2, false);
    auto w = init_model<float>(spec);
    for (auto& t : w.layers)
        for (auto& v : t.values) v = 0.0f;
    Mat<float> x(1, 3, 1.0f);
    EXPECT_EQ(predict(w, spec, x).classes[0], 0);
    // bias picks the middle class
    const auto spec3 = tiny_spec(3, {}, 3, false);
    auto w3 = init_model<float>(spec3);
    for (auto& t : w3.layers)
        for (auto& v : t.values) v = 0.0f;
    w3.layers[1].values = {std::log(0.2f), std::log(0.5f), std::log(0.3f)};
    const auto pred = predict(w3, spec3, x);
    EXPECT_EQ(pred.classes[0], 1);
    EXPECT_NEAR(pred.probs(0, 1), 0.5f, 1e-6);
}

TEST(Checkpoint, RoundTripAndExactLayout) {
    WeightSet<float> w;
    for (std::size_t i = 0; i < 32; ++i) w.fingerprint[i] = static_cast<unsigned char>(i);
    w.layers.push_back({"t", {2}, {1.0f, -2.0f}});
    const auto bytes = serialize_weights(w);
    const std::vector<unsigned char> expected = {
        'E', 'P', 'I', 'C', 'W', '0', '0', '1',
        0,  1,  2,  3,  4,  5,  6,  7,  8,  9,  10, 11, 12, 13, 14, 15,
        16, 17, 18, 19, 20, 21, 22, 23, 24, 25, 26, 27, 28, 29, 30, 31,
        1, 0, 0, 0,              // layer count
        1, 0, 0, 0, 't',         // name
        1, 0, 0, 0, 2, 0, 0, 0,  // rank, dims
        0x00, 0x00, 0x80, 0x3f,  // 1.0f
        0x00, 0x00, 0x00, 0xc0,  // -2.0f
    };
    EXPECT_EQ(bytes, expected);
    const auto back = deserialize_weights(bytes);
    EXPECT_TRUE(bitwise_equal(back, w));

    auto bad = bytes;
    bad[0] = 'X';
    EXPECT_THROW(deserialize_weights(bad), IoError);
}

TEST(Checkpoint, FileRoundTrip) {
    const auto spec = tiny_spec(5, {4}, 3, true, 0.1f, 99);
    const auto w = init_model<float>(spec);
    const std::string path = "checkpoint_test.epicw";
    save_checkpoint(path, w);
    const auto back = load_checkpoint(path);
    EXPECT_TRUE(bitwise_equal(back, w));
    std::remove(path.c_str());
}
