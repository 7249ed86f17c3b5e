#include "clare/errors.hpp"
#include "clare/model/checkpoint.hpp"
#include "clare/model/clare_model.hpp"
#include "clare/model/losses.hpp"
#include "clare/numkit/ops.hpp"
#include "clare/numkit/optimizer.hpp"

#include "../support/gradcheck.hpp"
#include "../support/toy.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

using namespace clare;
using namespace clare::model;
using numkit::Tensor;

namespace {

ModelShape mini_shape(std::size_t classes = 2) { return {6, 5, 4, 2, classes}; }

Tensor uniform_tensor(numkit::Shape shape, numkit::Rng& rng, double lo, double hi) {
    Tensor t(std::move(shape));
    for (auto& v : t.values()) {
        v = rng.uniform(lo, hi);
    }
    return t;
}

// Direct-sum oracles.
double bce_oracle(const Tensor& x, const Tensor& x_hat) {
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        total -= x[i] * std::log(x_hat[i]) + (1.0 - x[i]) * std::log(1.0 - x_hat[i]);
    }
    return total / static_cast<double>(x.rows());
}

} // namespace

TEST(Model, LayerShapesFollowTheClassCount) {
    numkit::Rng rng(1);
    const ClareModel m({784, 512, 256, 64, 10}, rng);
    EXPECT_EQ(m.params().value(names::kClsWeight).shape(), (numkit::Shape{10, 64}));
    EXPECT_EQ(m.params().value(names::kEncFc1Cond).shape(), (numkit::Shape{512, 10}));
    EXPECT_EQ(m.params().value(names::kDecFc1Cond).shape(), (numkit::Shape{256, 10}));
    EXPECT_EQ(m.params().value(names::kDecOutWeight).shape(), (numkit::Shape{784, 512}));
}

TEST(Model, RejectsOversizedLatent) {
    numkit::Rng rng(1);
    EXPECT_THROW(ClareModel({784, 512, 256, 300, 2}, rng), ConfigError);
}

TEST(Encode, ShapesAndDeterminism) {
    numkit::Rng rng(2);
    const ClareModel m(mini_shape(), rng);
    const auto x = uniform_tensor({3, 6}, rng, 0.0, 1.0);
    const std::vector<std::int32_t> c = {0, 1, 1};
    const auto a = encode(m, x, c);
    const auto b = encode(m, x, c);
    EXPECT_EQ(a.mu.shape(), (numkit::Shape{3, 2}));
    EXPECT_EQ(a.log_var.shape(), (numkit::Shape{3, 2}));
    EXPECT_TRUE(a.mu.all_finite());
    EXPECT_EQ(a.mu, b.mu);
    EXPECT_EQ(a.log_var, b.log_var);
}

TEST(Encode, FreshModelOnZeroInputRespectsClamp) {
    numkit::Rng rng(3);
    const ClareModel m({784, 512, 256, 64, 10}, rng);
    const Tensor x({2, 784}, 0.0);
    const std::vector<std::int32_t> c = {0, 9};
    const auto g = encode(m, x, c);
    EXPECT_TRUE(g.mu.all_finite());
    for (const auto v : g.log_var.values()) {
        EXPECT_LE(std::abs(v), 10.0);
    }
}

TEST(Encode, ClassOutOfRangeIsConditionError) {
    numkit::Rng rng(4);
    const ClareModel m(mini_shape(), rng);
    const Tensor x({1, 6}, 0.5);
    const std::vector<std::int32_t> c = {2};
    EXPECT_THROW(encode(m, x, c), ConditionError);
}

TEST(Reparameterize, ZeroNoiseGivesMean) {
    const LatentGaussian g{Tensor::matrix({{1, -2}}), Tensor::matrix({{0.3, -0.7}})};
    EXPECT_EQ(reparameterize(g, Tensor({1, 2}, 0.0)), g.mu);
}

TEST(Reparameterize, UnitVarianceAddsNoise) {
    const LatentGaussian g{Tensor::matrix({{1, -2}}), Tensor::matrix({{0, 0}})};
    EXPECT_EQ(reparameterize(g, Tensor::matrix({{0.5, 0.25}})), Tensor::matrix({{1.5, -1.75}}));
}

TEST(Reparameterize, ShapeMismatch) {
    const LatentGaussian g{Tensor::matrix({{1, -2}}), Tensor::matrix({{0, 0}})};
    EXPECT_THROW(reparameterize(g, Tensor({1, 3}, 0.0)), DimensionError);
}

TEST(Reparameterize, MonteCarloMoments) {
    const std::size_t n = 100000;
    numkit::Rng rng(5);
    const LatentGaussian g{Tensor({n, 1}, 1.0), Tensor({n, 1}, std::log(4.0))};
    const auto z = reparameterize(g, rng.normal_tensor({n, 1}));
    double sum = 0.0;
    for (const auto v : z.values()) {
        sum += v;
    }
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto v : z.values()) {
        ss += (v - mean) * (v - mean);
    }
    EXPECT_NEAR(mean, 1.0, 0.05);
    EXPECT_NEAR(ss / (n - 1), 4.0, 0.2);
}

TEST(Decode, OutputStrictlyInsideUnitInterval) {
    numkit::Rng rng(6);
    const ClareModel m(mini_shape(), rng);
    const auto z = Tensor::matrix({{0, 0}, {1e3, -1e3}, {-1e3, 1e3}, {50, 50}});
    const std::vector<std::int32_t> c = {0, 1, 0, 1};
    const auto a = decode(m, z, c);
    const auto b = decode(m, z, c);
    EXPECT_EQ(a, b);
    for (const auto v : a.values()) {
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
}

TEST(Decode, ConditionWidthMismatch) {
    numkit::Rng rng(7);
    const ClareModel m(mini_shape(), rng);
    const std::vector<std::int32_t> c = {0};
    EXPECT_THROW(decode(m, Tensor({1, 3}, 0.0), c), DimensionError);
    const std::vector<std::int32_t> two = {0, 1};
    EXPECT_THROW(decode(m, Tensor({1, 2}, 0.0), two), DimensionError);
}

TEST(Classify, ZeroWeightsGiveUniformRows) {
    numkit::Rng rng(8);
    ClareModel m(mini_shape(4), rng);
    m.params().value(names::kClsWeight).fill(0.0);
    const auto p = classify(m, uniform_tensor({3, 6}, rng, 0.0, 1.0));
    for (const auto v : p.values()) {
        EXPECT_DOUBLE_EQ(v, 0.25);
    }
}

TEST(Classify, RowsSumToOne) {
    numkit::Rng rng(9);
    const ClareModel m(mini_shape(3), rng);
    const auto p = classify(m, uniform_tensor({5, 6}, rng, 0.0, 1.0));
    for (std::size_t i = 0; i < p.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < p.cols(); ++j) {
            s += p(i, j);
        }
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(KlDivergence, ZeroAtStandardNormal) {
    EXPECT_EQ(kl_divergence({Tensor({3, 4}, 0.0), Tensor({3, 4}, 0.0)}), 0.0);
}

TEST(KlDivergence, UnitShiftIsHalf) {
    EXPECT_DOUBLE_EQ(kl_divergence({Tensor::matrix({{1.0}}), Tensor::matrix({{0.0}})}), 0.5);
}

TEST(KlDivergence, MatchesMonteCarlo) {
    // E_q[log q(z) - log p(z)] with z ~ q, one random pair in d_z = 4.
    numkit::Rng rng(10);
    const auto mu = uniform_tensor({1, 4}, rng, -1.0, 1.0);
    const auto lv = uniform_tensor({1, 4}, rng, -1.0, 1.0);
    const int draws = 200000;
    double acc = 0.0;
    for (int s = 0; s < draws; ++s) {
        double log_ratio = 0.0;
        for (std::size_t j = 0; j < 4; ++j) {
            const double sd = std::exp(0.5 * lv[j]);
            const double e = rng.normal();
            const double z = mu[j] + sd * e;
            log_ratio += -0.5 * e * e - 0.5 * lv[j] + 0.5 * z * z;
        }
        acc += log_ratio;
    }
    const double mc = acc / draws;
    const double closed = kl_divergence({mu, lv});
    EXPECT_NEAR(closed, mc, 0.02 * closed);
}

TEST(ReconstructionLoss, HalfEverywhereIsLn2PerPixel) {
    const Tensor half({1, 784}, 0.5);
    EXPECT_NEAR(reconstruction_loss(half, half), 784.0 * std::numbers::ln2, 1e-9);
    EXPECT_NEAR(784.0 * std::numbers::ln2, 543.43, 0.01);
}

TEST(ReconstructionLoss, PerfectLimitGoesToZero) {
    const Tensor x({1, 784}, 0.0);
    EXPECT_LT(reconstruction_loss(x, Tensor({1, 784}, 1e-12)), 1e-8);
}

TEST(ReconstructionLoss, MatchesDirectSum) {
    numkit::Rng rng(11);
    const auto x = uniform_tensor({4, 30}, rng, 0.0, 1.0);
    const auto x_hat = uniform_tensor({4, 30}, rng, 0.01, 0.99);
    EXPECT_NEAR(reconstruction_loss(x, x_hat), bce_oracle(x, x_hat), 1e-10);
}

TEST(ReconstructionLoss, RejectsOutOfRange) {
    const Tensor x({1, 2}, 0.5);
    EXPECT_THROW(reconstruction_loss(x, Tensor::matrix({{0.5, 1.0}})), NumericError);
    EXPECT_THROW(reconstruction_loss(x, Tensor::matrix({{0.0, 0.5}})), NumericError);
}

TEST(ClassificationLoss, UniformTenClasses) {
    const Tensor p({2, 10}, 0.1);
    const std::vector<std::int32_t> y = {3, 7};
    EXPECT_NEAR(classification_loss(p, y), 2.302585, 1e-6);
}

TEST(ClassificationLoss, CertainTrueClassIsZero) {
    const std::vector<std::int32_t> y = {1};
    EXPECT_EQ(classification_loss(Tensor::matrix({{0, 1, 0}}), y), 0.0);
}

TEST(ClassificationLoss, MatchesNegativeLogProbability) {
    numkit::Rng rng(12);
    const auto logits = uniform_tensor({3, 4}, rng, -3.0, 3.0);
    const auto p = numkit::softmax_rows(logits);
    const std::vector<std::int32_t> y = {0, 3, 2};
    double expected = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        double z = 0.0;
        for (std::size_t j = 0; j < 4; ++j) {
            z += std::exp(logits(i, j));
        }
        expected -= std::log(std::exp(logits(i, static_cast<std::size_t>(y[i]))) / z);
    }
    EXPECT_NEAR(classification_loss(p, y), expected / 3.0, 1e-12);
}

TEST(ClassificationLoss, LabelOutOfRange) {
    const std::vector<std::int32_t> y = {5};
    EXPECT_THROW(classification_loss(Tensor({1, 3}, 1.0 / 3.0), y), ConditionError);
}

class TotalLoss : public ::testing::Test {
protected:
    numkit::Rng rng{13};
    ClareModel model{mini_shape(), rng};
    Tensor x = uniform_tensor({4, 6}, rng, 0.0, 1.0);
    std::vector<std::int32_t> labels = {0, 1, 1, 0};
    Tensor noise = rng.normal_tensor({4, 2});
};

TEST_F(TotalLoss, ComponentsAreNonNegativeAndAdditive) {
    const auto l = total_loss(model, x, labels, noise);
    EXPECT_GE(l.classification, 0.0);
    EXPECT_GE(l.reconstruction, 0.0);
    EXPECT_GE(l.kl, 0.0);
    EXPECT_NEAR(l.total, l.classification + l.reconstruction + l.kl, 1e-12);
}

TEST_F(TotalLoss, ComponentsMatchStandaloneFunctions) {
    const auto l = total_loss(model, x, labels, noise);
    const auto g = encode(model, x, labels);
    const auto x_hat = decode(model, reparameterize(g, noise), labels);
    EXPECT_NEAR(l.kl, kl_divergence(g), 1e-12);
    EXPECT_NEAR(l.reconstruction, reconstruction_loss(x, x_hat), 1e-9);
    EXPECT_NEAR(l.classification, classification_loss(classify(model, x), labels), 1e-12);
}

TEST_F(TotalLoss, GradientsMatchFiniteDifferences) {
    clare::testing::randomize_biases(model.params(), rng);
    const auto check = clare::testing::check_gradients(
        model.params(), [&] { return total_loss(model, x, labels, noise).total; },
        [&] { accumulate_gradients(model, x, labels, noise); });
    EXPECT_LT(check.max_rel_error, 1e-5) << check.worst;
    EXPECT_EQ(check.checked, 6u * 5 + 5 * 2 + 5 + 4 * 5 + 4 + 2 * 4 + 2 + 2 * 4 + 2 + 2 * 2 + 2 + 4 * 2 + 4 * 2 + 4 +
                                 5 * 4 + 5 + 6 * 5 + 6);
}

TEST_F(TotalLoss, ClassifierTermDoesNotTouchDecoderGradients) {
    auto& tape = model.params();
    tape.zero_grad();
    accumulate_gradients(model, x, labels, noise, {1.0, true, true});
    std::vector<Tensor> both;
    for (const auto& p : tape) {
        both.push_back(p.grad);
    }
    tape.zero_grad();
    accumulate_gradients(model, x, labels, noise, {1.0, false, true});
    for (std::size_t i = 0; i < tape.size(); ++i) {
        if (tape[i].name.rfind("dec.", 0) == 0) {
            for (std::size_t k = 0; k < tape[i].grad.size(); ++k) {
                EXPECT_NEAR(tape[i].grad[k], both[i][k], 1e-12) << tape[i].name;
            }
        }
        if (tape[i].name.rfind("cls.", 0) == 0) {
            for (const auto v : tape[i].grad.values()) {
                EXPECT_EQ(v, 0.0);
            }
        }
    }
}

TEST_F(TotalLoss, SingleStepDecreasesLossOnSingleton) {
    const auto x1 = numkit::gather_rows(x, std::vector<std::size_t>{2});
    const std::vector<std::int32_t> y1 = {1};
    const auto n1 = numkit::gather_rows(noise, std::vector<std::size_t>{2});
    const double before = total_loss(model, x1, y1, n1).total;
    numkit::Optimizer opt({numkit::OptimizerKind::Adam, 1e-3}, model.params());
    model.params().zero_grad();
    accumulate_gradients(model, x1, y1, n1);
    opt.step(model.params());
    EXPECT_LT(total_loss(model, x1, y1, n1).total, before);
}

TEST(ExpandClasses, OldLogitsAreBitIdentical) {
    numkit::Rng rng(14);
    const ClareModel m(mini_shape(2), rng);
    const auto x = uniform_tensor({5, 6}, rng, 0.0, 1.0);
    auto expanded = expand_classes(m, 3, rng);
    auto& w = expanded.params().value(names::kClsWeight);
    for (std::size_t j = 0; j < w.cols(); ++j) {
        w(2, j) = 0.0;
    }
    const auto before = classify_logits(m, x);
    const auto after = classify_logits(expanded, x);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            EXPECT_EQ(after(i, j), before(i, j));
        }
    }
}

TEST(ExpandClasses, ComposesLikeASingleExpansion) {
    numkit::Rng rng(15);
    const ClareModel m(mini_shape(2), rng);
    numkit::Rng r1(1);
    numkit::Rng r2(2);
    const auto twice = expand_classes(expand_classes(m, 3, r1), 5, r1);
    const auto once = expand_classes(m, 5, r2);
    for (std::size_t p = 0; p < once.params().size(); ++p) {
        const auto& a = twice.params()[p].value;
        const auto& b = once.params()[p].value;
        ASSERT_EQ(a.shape(), b.shape());
        const std::string& name = once.params()[p].name;
        if (name == names::kClsWeight || name == names::kClsBias) {
            for (std::size_t i = 0; i < 2 * (a.size() / 5); ++i) {
                EXPECT_EQ(a[i], b[i]) << name;
            }
        } else if (name == names::kEncFc1Cond || name == names::kDecFc1Cond) {
            for (std::size_t r = 0; r < a.rows(); ++r) {
                for (std::size_t c = 0; c < 2; ++c) {
                    EXPECT_EQ(a(r, c), b(r, c)) << name;
                }
            }
        } else {
            EXPECT_EQ(a, b) << name;
        }
    }
}

TEST(ExpandClasses, ShrinkingIsUnsupported) {
    numkit::Rng rng(16);
    const ClareModel m(mini_shape(3), rng);
    EXPECT_THROW(expand_classes(m, 2, rng), UsageError);
}

TEST(ExpandClasses, TrainedDecoderUnchangedForOldClasses) {
    auto fixture = clare::testing::trained_toy_model();
    numkit::Rng rng(17);
    const auto expanded = expand_classes(fixture.model, 10, rng);
    const auto z = rng.normal_tensor({6, fixture.model.latent_dim()});
    const std::vector<std::int32_t> c = {0, 1, 2, 2, 1, 0};
    const auto before = decode(fixture.model, z, c);
    const auto after = decode(expanded, z, c);
    for (std::size_t i = 0; i < before.size(); ++i) {
        EXPECT_NEAR(after[i], before[i], 1e-12);
    }
}

TEST(ToyTraining, ClassifierSeparatesHeldOutBlobs) {
    const auto fixture = clare::testing::trained_toy_model();
    const auto p = classify(fixture.model, fixture.test.images());
    std::size_t correct = 0;
    for (std::size_t i = 0; i < p.rows(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < p.cols(); ++j) {
            if (p(i, j) > p(i, best)) {
                best = j;
            }
        }
        correct += static_cast<std::int32_t>(best) == fixture.test.labels()[i];
    }
    EXPECT_GE(static_cast<double>(correct) / static_cast<double>(p.rows()), 0.95);
}

TEST(ToyTraining, DecodedOriginLandsNearClassCentroid) {
    const auto fixture = clare::testing::trained_toy_model();
    const double bound = 0.15 * std::sqrt(static_cast<double>(clare::testing::kToyDim));
    for (std::int32_t c = 0; c < 3; ++c) {
        const std::vector<std::int32_t> cls = {c};
        const auto x_hat = decode(fixture.model, Tensor({1, fixture.model.latent_dim()}, 0.0), cls);
        const auto centroid = clare::testing::class_centroid(fixture.train, c);
        EXPECT_LT(clare::testing::l2_distance(centroid, x_hat.data()), bound) << "class " << c;
    }
}

TEST(Checkpoint, RoundTripIsBitIdentical) {
    numkit::Rng rng(18);
    const ClareModel m(mini_shape(3), rng);
    std::stringstream buffer;
    write_checkpoint(buffer, 3, 2, m.params());
    const auto restored = model_from_checkpoint(read_checkpoint(buffer));
    EXPECT_EQ(restored.shape(), m.shape());
    for (std::size_t p = 0; p < m.params().size(); ++p) {
        EXPECT_EQ(restored.params()[p].name, m.params()[p].name);
        EXPECT_EQ(restored.params()[p].value, m.params()[p].value);
    }
}

TEST(Checkpoint, SaveAndLoadFile) {
    numkit::Rng rng(19);
    const ClareModel m(mini_shape(2), rng);
    const auto path = std::filesystem::temp_directory_path() / "clare_model_test.ckpt";
    save_model(m, path);
    const auto restored = load_model(path);
    EXPECT_EQ(restored.params()[0].value, m.params()[0].value);
    std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsBadMagicAndVersion) {
    std::stringstream bad("XXXX");
    EXPECT_THROW(read_checkpoint(bad), ParseError);
    numkit::Rng rng(20);
    const ClareModel m(mini_shape(2), rng);
    std::stringstream buffer;
    write_checkpoint(buffer, 2, 2, m.params());
    auto bytes = buffer.str();
    bytes[4] = 9;
    std::stringstream wrong(bytes);
    EXPECT_THROW(read_checkpoint(wrong), ParseError);
}

TEST(Checkpoint, TruncationReportsOffset) {
    numkit::Rng rng(21);
    const ClareModel m(mini_shape(2), rng);
    std::stringstream buffer;
    write_checkpoint(buffer, 2, 2, m.params());
    auto bytes = buffer.str();
    bytes.resize(bytes.size() - 3);
    std::stringstream cut(bytes);
    try {
        read_checkpoint(cut);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_GT(e.offset(), 16u);
    }
}
