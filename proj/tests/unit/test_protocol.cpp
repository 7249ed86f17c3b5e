#include "clare/errors.hpp"
#include "clare/protocol/protocol.hpp"
#include "clare/protocol/schedule.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace clare;
using namespace clare::protocol;

namespace {

std::vector<std::int32_t> ten_classes() {
    std::vector<std::int32_t> ids(10);
    std::iota(ids.begin(), ids.end(), 0);
    return ids;
}

TrainConfig toy_config(std::size_t epochs = 15) {
    TrainConfig c;
    c.epochs = epochs;
    c.batch_size = 32;
    c.hidden1 = 64;
    c.hidden2 = 32;
    c.latent_dim = 4;
    return c;
}

double accuracy_of(const MetricsRecord& r, std::int32_t label) {
    for (const auto& c : r.per_class) {
        if (c.label == label) {
            return c.accuracy;
        }
    }
    return -1.0;
}

} // namespace

TEST(Schedule, TwoGroupsOfFive) {
    const auto ids = ten_classes();
    const auto s = build_schedule(ids, 5);
    EXPECT_EQ(s.groups,
              (std::vector<std::vector<std::int32_t>>{{0, 1, 2, 3, 4}, {5, 6, 7, 8, 9}}));
    EXPECT_EQ(s.class_count(), 10u);
}

TEST(Schedule, SingleGroup) {
    const auto ids = ten_classes();
    EXPECT_EQ(build_schedule(ids, 10).groups.size(), 1u);
}

TEST(Schedule, RemainderGoesLast) {
    const auto ids = ten_classes();
    EXPECT_EQ(build_schedule(ids, 3).groups,
              (std::vector<std::vector<std::int32_t>>{{0, 1, 2}, {3, 4, 5}, {6, 7, 8}, {9}}));
}

TEST(Schedule, RejectsZeroGroupAndDuplicates) {
    const auto ids = ten_classes();
    EXPECT_THROW(build_schedule(ids, 0), ConfigError);
    const std::vector<std::int32_t> dup = {1, 2, 1};
    EXPECT_THROW(build_schedule(dup, 1), ConfigError);
}

TEST(Schedule, SortsClassIds) {
    const std::vector<std::int32_t> ids = {7, 3, 5};
    EXPECT_EQ(build_schedule(ids, 2).groups, (std::vector<std::vector<std::int32_t>>{{3, 5}, {7}}));
}

class ToyProtocol : public ::testing::Test {
protected:
    dataio::LabeledDataset train = dataio::make_toy_dataset(2, 300, 64, 0.5, 31);
    dataio::LabeledDataset test = dataio::make_toy_dataset(2, 200, 64, 0.5, 32);
    std::vector<std::int32_t> ids = {0, 1};
    Schedule one_per_phase = build_schedule(ids, 1);
};

TEST_F(ToyProtocol, ReplayRemembersClassZero) {
    const auto records = run_experiment(train, test, one_per_phase, toy_config(), 5);
    ASSERT_EQ(records.size(), 2u);
    EXPECT_EQ(records[0].replay_samples, 0u);
    EXPECT_EQ(records[1].replay_samples, 300u);
    EXPECT_GE(accuracy_of(records[1], 0), 90.0);
}

TEST_F(ToyProtocol, FinetuneForgetsClassZero) {
    const auto records = run_finetune_baseline(train, test, one_per_phase, toy_config(), 5);
    ASSERT_EQ(records.size(), 2u);
    EXPECT_EQ(records[1].replay_samples, 0u);
    EXPECT_LT(accuracy_of(records[1], 0), 20.0);
}

TEST_F(ToyProtocol, PhaseZeroIsPlainTraining) {
    const auto subset = dataio::subset_by_classes(train, std::vector<std::int32_t>{0, 1});
    const auto via_protocol = run_experiment(train, test, build_schedule(ids, 2), toy_config(3), 9);
    const auto joint = run_joint_baseline(train, test, toy_config(3), 9);
    EXPECT_EQ(via_protocol.front().overall_accuracy, joint.overall_accuracy);
    EXPECT_EQ(via_protocol.front().loss_trace.size(), 3u);
    EXPECT_EQ(via_protocol.front().loss_trace.back().total, joint.loss_trace.back().total);
    EXPECT_EQ(via_protocol.front().train_samples, subset.size());
}

TEST_F(ToyProtocol, JointBaselineOnToyData) {
    const auto four = dataio::make_toy_dataset(4, 300, 64, 0.5, 41);
    const auto four_test = dataio::make_toy_dataset(4, 100, 64, 0.5, 42);
    EXPECT_GE(run_joint_baseline(four, four_test, toy_config(), 3).overall_accuracy, 98.0);
}

TEST_F(ToyProtocol, FinetuneOnSingleGroupEqualsJoint) {
    const auto single = build_schedule(ids, 2);
    const auto ft = run_finetune_baseline(train, test, single, toy_config(3), 4);
    const auto joint = run_joint_baseline(train, test, toy_config(3), 4);
    EXPECT_EQ(ft.front().overall_accuracy, joint.overall_accuracy);
    EXPECT_EQ(ft.front().loss_trace.back().total, joint.loss_trace.back().total);
}

TEST_F(ToyProtocol, RecordsMatchGroupsAndSeedsAreDeterministic) {
    const auto a = run_experiment(train, test, one_per_phase, toy_config(2), 11);
    const auto b = run_experiment(train, test, one_per_phase, toy_config(2), 11);
    ASSERT_EQ(a.size(), one_per_phase.groups.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].overall_accuracy, b[i].overall_accuracy);
        EXPECT_EQ(a[i].loss_trace.back().total, b[i].loss_trace.back().total);
        EXPECT_EQ(a[i].classes_seen, b[i].classes_seen);
    }
}

TEST_F(ToyProtocol, WarmStartKeepsTraining) {
    auto config = toy_config(5);
    config.start = StartMode::Warm;
    const auto records = run_experiment(train, test, one_per_phase, config, 6);
    EXPECT_GE(records.back().overall_accuracy, 90.0);
}

TEST_F(ToyProtocol, IncrementRejectsOverlapAndEmptyData) {
    auto state = run_increment({}, dataio::subset_by_classes(train, std::vector<std::int32_t>{0}), test,
                               toy_config(1), 1);
    EXPECT_EQ(state.learned, (std::vector<std::int32_t>{0}));
    EXPECT_TRUE(state.snapshot.has_value());
    EXPECT_THROW(run_increment(state, dataio::subset_by_classes(train, std::vector<std::int32_t>{0}), test,
                               toy_config(1), 2),
                 ConfigError);
    EXPECT_THROW(run_increment(state, dataio::LabeledDataset(64), test, toy_config(1), 2), ConfigError);
}

TEST_F(ToyProtocol, KeepsLastReplayWhenAsked) {
    auto config = toy_config(1);
    config.keep_last_replay = true;
    const auto state = run_schedule(train, test, one_per_phase, config, 3);
    ASSERT_TRUE(state.last_replay.has_value());
    EXPECT_EQ(state.last_replay->size(), 300u);
    for (const auto y : state.last_replay->labels) {
        EXPECT_EQ(y, 0);
    }
}

TEST(StartMode, ParseAndPrint) {
    EXPECT_EQ(parse_start_mode("warm"), StartMode::Warm);
    EXPECT_EQ(to_string(StartMode::Scratch), "scratch");
    EXPECT_THROW(parse_start_mode("hot"), ConfigError);
}
