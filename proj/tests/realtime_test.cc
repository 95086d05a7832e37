#include <gtest/gtest.h>

#include <random>
#include <thread>

#include "hi/realtime.h"
#include "test_util.h"

namespace hi {
namespace {

using testing::dense;

RtModel random_rt(int n, int k, double beta, uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  RtModel m;
  m.n = n;
  m.beta = beta;
  m.factors.k = k;
  m.factors.left = RowMatrix(2 * n, k);
  m.factors.right = Eigen::MatrixXd(k, n);
  for (int i = 0; i < m.factors.left.size(); ++i) m.factors.left.data()[i] = normal(gen);
  for (int i = 0; i < m.factors.right.size(); ++i) m.factors.right.data()[i] = normal(gen);
  return m;
}

SessionState state_of(const std::map<int, double>& x, const std::map<int, double>& y) {
  SessionState s;
  s.user = 0;
  s.x_row = x;
  s.y_row = y;
  return s;
}

Eigen::RowVectorXd dense_row(const SessionState& s, int n, double beta) {
  Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(2 * n);
  for (const auto& [j, v] : s.x_row) r[j] = v;
  for (const auto& [j, v] : s.y_row) r[n + j] = beta * v;
  return r;
}

TEST(TrainRt, DenseOracleAndDeterminism) {
  std::mt19937_64 gen(1);
  const auto fm = testing::random_feedback(4, 5, 0.8, 0.5, gen);
  RtOptions o;
  o.k = 3;
  const RtModel a = train_rt(fm, o);
  const RtModel b = train_rt(fm, o);
  ASSERT_TRUE(a.has_negative_block());
  EXPECT_EQ(a.factors.left, b.factors.left);
  EXPECT_EQ(a.factors.right, b.factors.right);
  const Eigen::MatrixXd h = a.factors.left * a.factors.right;
  EXPECT_LE((a.factors.reconstruct() - h).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_EQ(h.rows(), 10);
}

TEST(TrainRt, NoNegativesReducesToP2p) {
  // With Y = 0 the bottom block is empty, its factors are zero, and scores of
  // the stacked model equal those of the top block alone.
  Eigen::MatrixXd x(4, 5);
  x << 1, 1, 0, 0, 1, 0, 1, 1, 0, 0, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0;
  const auto fm = testing::feedback_from(x, x);
  const RtModel m = train_rt(fm, RtOptions{});
  EXPECT_EQ(m.factors.left.bottomRows(5).norm(), 0.0);
  FactorModel top = m.factors;
  top.left = m.factors.left.topRows(5);
  const RtModel p2p = p2p_rt_model(top);
  const SessionState s = SessionState::from_matrices(fm, 0);
  EXPECT_LE((score_state(m, s) - score_state(p2p, s)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(RecommendRt, MatchesDenseOracle) {
  const int n = 7;
  const RtModel m = random_rt(n, 3, 0.7, 2);
  const SessionState s = state_of({{1, 1.0}, {4, 1.0}}, {{2, 1.0}});
  const Eigen::VectorXd expect = (dense_row(s, n, 0.7) * m.factors.reconstruct()).transpose();
  EXPECT_LE((score_state(m, s) - expect).cwiseAbs().maxCoeff(), 1e-10);
  const auto list = recommend_rt(m, s, 3);
  ASSERT_EQ(list.items.size(), 3u);
  for (const auto& it : list.items) {
    EXPECT_FALSE(s.engaged(it.item));
    EXPECT_NEAR(it.score, expect[it.item], 1e-10);
  }
  EXPECT_GE(list.items[0].score, list.items[1].score);
}

TEST(RecommendRt, BetaZeroIgnoresNegatives) {
  RtModel m = random_rt(6, 2, 0.0, 3);
  const SessionState with_y = state_of({{0, 1.0}}, {{3, 1.0}, {5, 1.0}});
  const SessionState without_y = state_of({{0, 1.0}}, {});
  EXPECT_EQ(score_state(m, with_y), score_state(m, without_y));
}

TEST(RecommendRt, EmptyStateGivesFlaggedEmptyList) {
  const RtModel m = random_rt(6, 2, 1.0, 4);
  const auto list = recommend_rt(m, SessionState{}, 5);
  EXPECT_TRUE(list.items.empty());
  EXPECT_TRUE(list.short_list);
  EXPECT_EQ(score_state(m, SessionState{}), Eigen::VectorXd::Zero(6));
}

TEST(RecommendRt, DimensionMismatchThrows) {
  const RtModel m = random_rt(4, 2, 1.0, 5);
  EXPECT_THROW(recommend_rt(m, state_of({{9, 1.0}}, {}), 2), UsageError);
  EXPECT_THROW(recommend_rt(m, state_of({{1, 1.0}}, {}), 0), UsageError);
}

TEST(RecommendRt, FactoredScoringEquivalence) {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 30;
  const RtModel m = random_rt(n, 5, 1.3, 6);
  const Eigen::MatrixXd h = m.factors.reconstruct();
  for (int t = 0; t < 50; ++t) {
    SessionState s;
    for (int j = 0; j < n; ++j) {
      const double r = u(gen);
      if (r < 0.1) s.x_row[j] = 1.0;
      else if (r < 0.2) s.y_row[j] = 1.0;
    }
    const Eigen::VectorXd full = (dense_row(s, n, 1.3) * h).transpose();
    EXPECT_LE((score_state(m, s) - full).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(RecommendRt, PositiveEventChangesScoresThroughItsRowOnly) {
  const RtModel m = random_rt(8, 3, 1.0, 7);
  const SessionState before = state_of({{1, 1.0}}, {{2, 1.0}});
  const SessionState after = apply_event(before, 5, Feedback::kPositive);
  const Eigen::VectorXd delta = score_state(m, after) - score_state(m, before);
  const Eigen::VectorXd expect = (m.factors.left.row(5) * m.factors.right).transpose();
  EXPECT_LE((delta - expect).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ApplyEvent, LatestWins) {
  SessionState s = apply_event(SessionState{}, 3, Feedback::kPositive);
  EXPECT_EQ(s.x_row.size(), 1u);
  EXPECT_EQ(s.x_row.at(3), 1.0);
  s = apply_event(s, 3, Feedback::kNegative);
  EXPECT_FALSE(s.x_row.contains(3));
  EXPECT_TRUE(s.y_row.contains(3));
}

TEST(ApplyEvent, RandomReplayKeepsSupportsDisjoint) {
  std::mt19937_64 gen(8);
  std::uniform_int_distribution<int> item(0, 19);
  std::bernoulli_distribution positive(0.5);
  SessionState s;
  for (int e = 0; e < 100; ++e)
    s = apply_event(s, item(gen), positive(gen) ? Feedback::kPositive : Feedback::kNegative);
  for (const auto& [j, v] : s.x_row) EXPECT_FALSE(s.y_row.contains(j));
  EXPECT_LE(s.x_row.size() + s.y_row.size(), 100u);
}

TEST(SessionStore, JournalReplay) {
  testing::TempDir dir;
  {
    SessionStore store(10);
    store.open_journal(dir / "events.log");
    store.record(1, 4, Feedback::kPositive);
    store.record(1, 4, Feedback::kNegative);
    store.record(2, 7, Feedback::kPositive);
  }
  SessionStore restored(10);
  EXPECT_EQ(restored.replay_journal(dir / "events.log"), 3);
  EXPECT_TRUE(restored.snapshot(1).y_row.contains(4));
  EXPECT_FALSE(restored.snapshot(1).x_row.contains(4));
  EXPECT_TRUE(restored.snapshot(2).x_row.contains(7));
  EXPECT_THROW(restored.record(1, 10, Feedback::kPositive), DataError);
}

TEST(SessionStore, ConcurrentUsers) {
  SessionStore store(100);
  std::vector<std::jthread> workers;
  for (int t = 0; t < 8; ++t)
    workers.emplace_back([&store, t] {
      for (int j = 0; j < 100; ++j) store.record(t % 4, j, (j + t) % 2 ? Feedback::kPositive : Feedback::kNegative);
    });
  workers.clear();
  for (int u = 0; u < 4; ++u) {
    const SessionState s = store.snapshot(u);
    EXPECT_EQ(s.x_row.size() + s.y_row.size(), 100u);
  }
}

}  // namespace
}  // namespace hi
