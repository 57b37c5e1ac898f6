#include <gtest/gtest.h>

#include "hdp/replay.hpp"

using namespace hdp;
using Eigen::VectorXd;

namespace {

Transition make_transition(double tag) {
  Transition t;
  t.s = VectorXd::Constant(2, tag);
  t.e = VectorXd::Constant(3, tag + 0.1);
  t.k = static_cast<int>(tag);
  t.a_c = VectorXd::Constant(1, tag + 0.2);
  t.r = tag + 0.3;
  t.s_next = VectorXd::Constant(2, tag + 0.4);
  t.done = static_cast<int>(tag) % 2 == 0;
  return t;
}

}  // namespace

TEST(Replay, PushSampleRoundTrip) {
  ReplayBuffer buf(16);
  buf.push(make_transition(7.0));
  Rng rng(0);
  Batch b = buf.sample(1, rng);
  EXPECT_EQ(b.size(), 1);
  EXPECT_EQ(b.s(0, 0), 7.0);
  EXPECT_EQ(b.e(0, 2), 7.1);
  EXPECT_EQ(b.k[0], 7);
  EXPECT_EQ(b.a_c(0, 0), 7.2);
  EXPECT_EQ(b.r(0), 7.3);
  EXPECT_EQ(b.s_next(0, 1), 7.4);
  EXPECT_EQ(b.done(0), 0.0);
}

TEST(Replay, RingOverwriteKeepsCapacity) {
  ReplayBuffer buf(4);
  for (int i = 0; i < 10; ++i) buf.push(make_transition(i));
  EXPECT_EQ(buf.size(), 4u);
  // oldest entries were overwritten; all remaining tags >= 2
  double min_tag = 1e9;
  for (size_t i = 0; i < buf.size(); ++i) min_tag = std::min(min_tag, buf.at(i).r - 0.3);
  EXPECT_GE(min_tag, 2.0);
}

TEST(Replay, SampleWithoutReplacementWithinBatch) {
  ReplayBuffer buf(64);
  for (int i = 0; i < 64; ++i) buf.push(make_transition(i));
  Rng rng(3);
  Batch b = buf.sample(64, rng);
  std::vector<int> seen(64, 0);
  for (int r = 0; r < 64; ++r) seen[static_cast<int>(std::lround(b.r(r) - 0.3))]++;
  for (int i = 0; i < 64; ++i) EXPECT_EQ(seen[i], 1);
}

TEST(Replay, SampleDeterministicUnderSeed) {
  ReplayBuffer buf(32);
  for (int i = 0; i < 32; ++i) buf.push(make_transition(i));
  Rng r1(5), r2(5);
  Batch a = buf.sample(8, r1);
  Batch b = buf.sample(8, r2);
  EXPECT_EQ((a.s - b.s).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((a.r - b.r).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Replay, ErrorsOnBadUse) {
  EXPECT_THROW(ReplayBuffer(0), std::invalid_argument);
  ReplayBuffer buf(8);
  buf.push(make_transition(0));
  Rng rng(0);
  EXPECT_THROW(buf.sample(2, rng), std::runtime_error);
}
