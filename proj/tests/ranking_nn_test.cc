#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "hi/baselines.h"
#include "hi/ranking_nn.h"
#include "test_util.h"

namespace hi {
namespace {

FeedbackMatrices tiny(uint64_t seed, double p_observed = 0.6) {
  std::mt19937_64 gen(seed);
  return testing::random_feedback(10, 12, p_observed, 0.5, gen);
}

HiNnHyper tiny_hyper(int hidden = 0) {
  HiNnHyper h;
  h.k = 3;
  h.embedding_hidden = hidden;
  h.head_hidden = 4;
  h.lambda_pos = 0.03;
  h.lambda_neg = 0.02;
  h.alpha = 0.7;
  h.gamma = 1.3;
  return h;
}

// Pointers to every phase-1 parameter group paired with its gradient.
std::vector<std::pair<Eigen::Map<Eigen::VectorXd>, Eigen::Map<Eigen::VectorXd>>> groups(HiNnModel& m,
                                                                                        Phase1Gradients& g) {
  auto flat = [](auto& mat) { return Eigen::Map<Eigen::VectorXd>(mat.data(), mat.size()); };
  std::vector<std::pair<Eigen::Map<Eigen::VectorXd>, Eigen::Map<Eigen::VectorXd>>> out;
  out.emplace_back(flat(m.u_pos.first), flat(g.u_pos_first));
  out.emplace_back(flat(m.v_pos.first), flat(g.v_pos_first));
  out.emplace_back(flat(m.u_neg.first), flat(g.u_neg_first));
  out.emplace_back(flat(m.v_neg.first), flat(g.v_neg_first));
  out.emplace_back(flat(m.w), flat(g.w));
  if (m.u_pos.hidden_units()) {
    out.emplace_back(flat(m.u_pos.second), flat(g.u_pos_second));
    out.emplace_back(flat(m.v_pos.second), flat(g.v_pos_second));
    out.emplace_back(flat(m.u_neg.second), flat(g.u_neg_second));
    out.emplace_back(flat(m.v_neg.second), flat(g.v_neg_second));
  }
  return out;
}

// Below 1e-3 the central difference is dominated by roundoff in the summed
// loss, so small gradients are compared against an absolute 1e-7.
double relative_error(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-3});
  return std::abs(a - b) / scale;
}

// On/off state of every rectifier unit over the batch. A probe whose +eps and
// -eps sides differ straddles a kink and is not a derivative estimate.
std::vector<bool> relu_pattern(const HiNnModel& model, const FeedbackMatrices& fm,
                               const std::vector<TrainingExample>& batch) {
  std::vector<bool> out;
  EmbeddingMap::Trace trace;
  for (const auto& ex : batch) {
    const ChannelInputs in = channel_inputs(fm, ex.user, ex.item, true);
    const std::pair<const EmbeddingMap*, const SparseVector*> maps[] = {
        {&model.u_pos, &in.x_row}, {&model.v_pos, &in.x_col}, {&model.u_neg, &in.y_row}, {&model.v_neg, &in.x_col}};
    for (auto [map, input] : maps) {
      map->forward(*input, &trace);
      for (Eigen::Index q = 0; q < trace.pre.size(); ++q) out.push_back(trace.pre[q] > 0);
    }
  }
  return out;
}

void check_phase1_gradients(int hidden, uint64_t seed) {
  const FeedbackMatrices fm = tiny(seed);
  HiNnHyper h = tiny_hyper(hidden);
  h.seed = seed;
  HiNnModel model = make_hi_nn(fm, h);
  // Larger weights so every term is exercised away from zero.
  model.w *= 5.0;
  const auto batch = observed_examples(fm);
  Phase1Gradients grad(model);
  loss_phase1(model, fm, batch, &grad);
  const double eps = 1e-5;
  int checked = 0;
  for (auto& [param, g] : groups(model, grad)) {
    for (Eigen::Index p = 0; p < param.size(); ++p) {
      const double keep = param[p];
      param[p] = keep + eps;
      const double up = loss_phase1(model, fm, batch);
      const auto up_pattern = hidden ? relu_pattern(model, fm, batch) : std::vector<bool>{};
      param[p] = keep - eps;
      const double down = loss_phase1(model, fm, batch);
      const auto down_pattern = hidden ? relu_pattern(model, fm, batch) : std::vector<bool>{};
      param[p] = keep;
      if (up_pattern != down_pattern) continue;
      const double numeric = (up - down) / (2 * eps);
      if (std::abs(numeric) < 1e-9 && std::abs(g[p]) < 1e-9) continue;
      ASSERT_LE(relative_error(g[p], numeric), 1e-4) << "param " << p << " analytic " << g[p] << " numeric " << numeric;
      ++checked;
    }
  }
  EXPECT_GT(checked, 50);
}

TEST(Phase1Gradients, LinearMapsMatchFiniteDifferences) {
  for (uint64_t seed : {1, 2, 3}) check_phase1_gradients(0, seed);
}

TEST(Phase1Gradients, HiddenLayerMapsMatchFiniteDifferences) {
  for (uint64_t seed : {4, 5, 6, 71}) check_phase1_gradients(5, seed);
}

TEST(Phase2Gradients, HeadMatchesFiniteDifferences) {
  std::mt19937_64 gen(9);
  std::normal_distribution<double> normal;
  std::bernoulli_distribution label(0.4);
  for (int trial = 0; trial < 3; ++trial) {
    const FeedbackMatrices fm = tiny(10 + trial);
    HiNnHyper hyper = tiny_hyper();
    hyper.seed = 20 + trial;
    Head head = make_hi_nn(fm, hyper).head;
    head.b1.setConstant(0.1);
    head.b2 = -0.2;
    std::vector<Eigen::Vector3d> f(40);
    std::vector<double> t(40);
    for (int e = 0; e < 40; ++e) {
      f[e] = Eigen::Vector3d(normal(gen), normal(gen), normal(gen));
      t[e] = label(gen) ? 1.0 : 0.0;
    }
    HeadGradients g(head);
    loss_phase2(head, f, t, &g);
    const double eps = 1e-6;
    auto check = [&](double& param, double analytic) {
      const double keep = param;
      param = keep + eps;
      const double up = loss_phase2(head, f, t);
      param = keep - eps;
      const double down = loss_phase2(head, f, t);
      param = keep;
      EXPECT_LE(relative_error(analytic, (up - down) / (2 * eps)), 1e-4);
    };
    for (Eigen::Index p = 0; p < head.w1.size(); ++p) check(head.w1.data()[p], g.w1.data()[p]);
    for (Eigen::Index p = 0; p < head.b1.size(); ++p) check(head.b1[p], g.b1[p]);
    for (Eigen::Index p = 0; p < head.w2.size(); ++p) check(head.w2[p], g.w2[p]);
    check(head.b2, g.b2);
  }
}

TEST(ChannelScores, ZeroInputsGiveZero) {
  const FeedbackMatrices fm = testing::feedback_from(Eigen::MatrixXd::Zero(2, 3), Eigen::MatrixXd::Zero(2, 3));
  HiNnModel m = make_hi_nn(fm, tiny_hyper());
  const ChannelScores s = channel_scores(m, channel_inputs(fm, 0, 1, false));
  EXPECT_EQ(s.features(), Eigen::Vector3d::Zero());
}

TEST(ChannelScores, ScalarHandValues) {
  Eigen::VectorXd up(1), vp(1), un(1), vn(1);
  up << 2;
  vp << 3;
  un << 1;
  vn << 4;
  Eigen::MatrixXd w(1, 1);
  w << 5;
  const ChannelScores s = channel_scores_from_latents(up, vp, un, vn, w);
  EXPECT_EQ(s.r_pos, 6.0);
  EXPECT_EQ(s.r_int, 10.0);
  EXPECT_EQ(s.r_neg, 4.0);
  EXPECT_THROW(channel_scores_from_latents(up, vp, un, vn, Eigen::MatrixXd::Ones(2, 2)), UsageError);
}

TEST(ChannelScores, MatchesStraightLineRecomputation) {
  const FeedbackMatrices fm = tiny(30);
  HiNnModel m = make_hi_nn(fm, tiny_hyper());
  const int k = m.k();
  for (int user = 0; user < fm.m(); ++user) {
    for (int item = 0; item < fm.n(); item += 3) {
      const ChannelScores s = channel_scores(m, channel_inputs(fm, user, item, false));
      // Independent loops over the dense rows.
      auto embed = [&](const RowMatrix& w, const Eigen::MatrixXd& in) {
        std::vector<double> out(k, 0.0);
        int nnz = 0;
        for (Eigen::Index p = 0; p < in.size(); ++p) nnz += in.data()[p] != 0.0;
        if (nnz == 0) return out;
        for (int c = 0; c < k; ++c) {
          double acc = 0.0;
          for (Eigen::Index p = 0; p < in.size(); ++p) acc += in.data()[p] * w(p, c);
          out[c] = acc / std::sqrt(static_cast<double>(nnz));
        }
        return out;
      };
      const Eigen::MatrixXd xr = Eigen::MatrixXd(fm.x()).row(user);
      const Eigen::MatrixXd yr = Eigen::MatrixXd(fm.y()).row(user);
      const Eigen::MatrixXd xc = Eigen::MatrixXd(fm.x()).col(item);
      const auto up = embed(m.u_pos.first, xr), vp = embed(m.v_pos.first, xc);
      const auto un = embed(m.u_neg.first, yr), vn = embed(m.v_neg.first, xc);
      double rp = 0.0, rn = 0.0, ri = 0.0;
      for (int a = 0; a < k; ++a) {
        rp += up[a] * vp[a];
        rn += un[a] * vn[a];
        for (int b = 0; b < k; ++b) ri += un[a] * m.w(a, b) * up[b];
      }
      EXPECT_NEAR(s.r_pos, rp, 1e-12);
      EXPECT_NEAR(s.r_neg, rn, 1e-12);
      EXPECT_NEAR(s.r_int, ri, 1e-12);
    }
  }
}

TEST(LossPhase1, HandComputedSingleExample) {
  // One user, two items; inputs for (0, 1) after leave-one-out are x_row = {item 0: 1},
  // y_row = {}, x_col = {} -> only U+ is nonzero, so every score is 0.
  Eigen::MatrixXd x(1, 2), o(1, 2);
  x << 1, 1;
  o << 1, 1;
  const auto fm = testing::feedback_from(x, o);
  HiNnHyper h;
  h.k = 1;
  h.alpha = 0.5;
  h.gamma = 2.0;
  h.lambda_pos = 0.1;
  h.lambda_neg = 0.0;
  HiNnModel m = make_hi_nn(fm, h);
  m.u_pos.first.setConstant(2.0);
  const double loss = loss_phase1(m, fm, {{0, 1, 1.0}});
  // (1-0)^2 + 0.5 (1-0)^2 + 2 (1-0)^2 + 0.1 * (|U+|^2 = 4)
  EXPECT_NEAR(loss, 1.0 + 0.5 + 2.0 + 0.4, 1e-12);
}

TEST(LossPhase1, PerfectPredictionsAreZero) {
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(3, 4);
  const auto fm = testing::feedback_from(z, Eigen::MatrixXd::Ones(3, 4));
  HiNnHyper h = tiny_hyper();
  h.lambda_pos = h.lambda_neg = 0.0;
  HiNnModel m = make_hi_nn(fm, h);
  // X = 0 everywhere: all p2p inputs are empty, and zeroing the negative maps
  // makes every score 0 = target.
  m.u_neg.first.setZero();
  EXPECT_EQ(loss_phase1(m, fm, observed_examples(fm)), 0.0);
  EXPECT_THROW(loss_phase1(m, fm, {}), UsageError);
}

TEST(LossPhase1, GatedConfigurationIsPureP2p) {
  const FeedbackMatrices fm = tiny(40);
  HiNnHyper h = tiny_hyper();
  h.alpha = h.gamma = 0.0;
  h.lambda_pos = h.lambda_neg = 0.0;
  HiNnModel hi_model = make_hi_nn(fm, h);
  double direct = 0.0;
  for (const auto& ex : observed_examples(fm)) {
    const double r = channel_scores(hi_model, channel_inputs(fm, ex.user, ex.item, true)).r_pos;
    direct += (ex.target - r) * (ex.target - r);
  }
  EXPECT_NEAR(loss_phase1(hi_model, fm, observed_examples(fm)), direct, 1e-12);

  // The p2p-only preset runs the same code with the negative side switched off.
  HiNnHyper cf = h;
  cf.use_negative = false;
  HiNnModel cf_model = make_hi_nn(fm, cf);
  cf_model.u_pos = hi_model.u_pos;
  cf_model.v_pos = hi_model.v_pos;
  EXPECT_NEAR(loss_phase1(cf_model, fm, observed_examples(fm)), direct, 1e-12);
}

TEST(TrainPhase1, LossDecreasesOnTinyInstance) {
  const FeedbackMatrices fm = tiny(50);
  HiNnHyper h = tiny_hyper();
  h.epochs = 60;
  h.batch_size = 8;
  h.learning_rate = 0.05;
  HiNnModel m = make_hi_nn(fm, h);
  const TrainingCurve curve = train_phase1(m, fm);
  ASSERT_EQ(curve.epoch_loss.size(), 60u);
  auto window = [&](int from) {
    return std::accumulate(curve.epoch_loss.begin() + from, curve.epoch_loss.begin() + from + 10, 0.0) / 10;
  };
  for (int from = 0; from + 20 <= 60; from += 10) EXPECT_LT(window(from + 10), window(from) + 1e-9);
}

TEST(TrainPhase1, Deterministic) {
  const FeedbackMatrices fm = tiny(51);
  HiNnHyper h = tiny_hyper();
  h.epochs = 5;
  HiNnModel a = make_hi_nn(fm, h), b = make_hi_nn(fm, h);
  train_phase1(a, fm);
  train_phase1(b, fm);
  EXPECT_EQ(a.embedding_fingerprint(), b.embedding_fingerprint());
}

TEST(TrainPhase1, P2pChannelCloseToAls) {
  // Every cell observed so both fits target the same entries.
  std::mt19937_64 gen(52);
  const FeedbackMatrices fm = testing::random_feedback(10, 12, 1.0, 0.5, gen);
  const int k = 3;
  FactorizeOptions fo;
  fo.k = k;
  fo.lambda = 1e-6;
  fo.iters = 200;
  fo.observed_only = false;
  fo.tolerance = 0.0;
  const Eigen::MatrixXd x = Eigen::MatrixXd(fm.x());
  const FactorModel als = factorize(SimilarityInput{fm.x(), SimilarityKind::kP2p}, fo);
  const double als_error = (als.reconstruct() - x).squaredNorm();

  HiNnHyper h;
  h.k = k;
  h.alpha = h.gamma = 0.0;
  h.lambda_pos = h.lambda_neg = 0.0;
  h.use_negative = false;
  h.epochs = 3000;
  h.batch_size = 16;
  h.learning_rate = 0.1;
  HiNnModel m = make_hi_nn(fm, h);
  const TrainingCurve curve = train_phase1(m, fm);
  const double nn_error = curve.epoch_loss.back() * static_cast<double>(fm.nnz());
  EXPECT_LE(nn_error, 1.1 * als_error) << "als " << als_error << " nn " << nn_error;
}

TEST(TrainPhase2, EmbeddingsFrozen) {
  const FeedbackMatrices fm = tiny(60);
  HiNnHyper h = tiny_hyper();
  h.epochs = 3;
  h.head_epochs = 5;
  HiNnModel m = make_hi_nn(fm, h);
  train_phase1(m, fm);
  const uint64_t before = m.embedding_fingerprint();
  const Head head_before = m.head;
  train_phase2(m, fm);
  EXPECT_EQ(m.embedding_fingerprint(), before);
  EXPECT_NE(m.head.w1, head_before.w1);
}

TEST(TrainPhase2, CalibratesToPositiveRate) {
  // All-zero embeddings make every feature vector (0, 0, 0), so the best
  // head output is the empirical positive rate.
  std::mt19937_64 gen(61);
  const FeedbackMatrices fm = testing::random_feedback(40, 30, 0.8, 0.3, gen);
  HiNnHyper h = tiny_hyper();
  h.head_epochs = 200;
  h.batch_size = 64;
  h.head_learning_rate = 0.5;
  HiNnModel m = make_hi_nn(fm, h);
  for (EmbeddingMap* map : {&m.u_pos, &m.v_pos, &m.u_neg, &m.v_neg}) map->first.setZero();
  train_phase2(m, fm, observed_examples(fm));
  const double rate = Eigen::MatrixXd(fm.x()).sum() / static_cast<double>(fm.nnz());
  EXPECT_NEAR(m.head.predict(Eigen::Vector3d::Zero()), rate, 0.02);
}

TEST(Head, MonotoneWithNonnegativeWeights) {
  Head g;
  g.w1 = Eigen::MatrixXd(3, 3);
  g.w1 << 0.5, -1, 2, 1.0, 0.3, -0.2, 0.0, 1, 1;
  g.b1 = Eigen::VectorXd::Constant(3, 0.1);
  g.w2 = Eigen::Vector3d(0.7, 1.2, 0.4);
  g.b2 = -0.3;
  double last = 0.0;
  for (double r = -5; r <= 5; r += 0.25) {
    const double p = g.predict(Eigen::Vector3d(r, 0.3, -0.1));
    EXPECT_GE(p, last);
    last = p;
  }
}

TEST(Head, OutputsInOpenUnitInterval) {
  const FeedbackMatrices fm = tiny(70);
  HiNnModel m = make_hi_nn(fm, tiny_hyper());
  m.head.w2 *= 100.0;
  std::mt19937_64 gen(71);
  std::normal_distribution<double> normal(0.0, 50.0);
  for (int t = 0; t < 10000; ++t) {
    const double p = m.head.predict(Eigen::Vector3d(normal(gen), normal(gen), normal(gen)));
    ASSERT_GT(p, 0.0);
    ASSERT_LT(p, 1.0);
  }
}

TEST(PredictWarm, Deterministic) {
  const FeedbackMatrices fm = tiny(72);
  HiNnModel m = make_hi_nn(fm, tiny_hyper());
  EXPECT_EQ(predict_warm(m, fm, 3, 4), predict_warm(m, fm, 3, 4));
}

TEST(PredictCold, ZeroHistoryGivesHeadAtOrigin) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, 4), o = Eigen::MatrixXd::Zero(3, 4);
  x(0, 0) = o(0, 0) = o(0, 1) = 1;
  x(1, 2) = o(1, 2) = o(1, 3) = 1;
  const auto fm = testing::feedback_from(x, o);
  FactorizeOptions fo;
  fo.k = 2;
  const FactorModel c = factorize(gram_p2p(fm), fo), d = factorize(cross_n2p(fm), fo);
  HiNnHyper h = tiny_hyper();
  h.k = 2;
  const HiNnModel m = make_hi_nn(fm, h, {&c, &d});
  EXPECT_EQ(approximate_u_pos(fm, c, 2), Eigen::VectorXd::Zero(2));
  EXPECT_EQ(approximate_u_neg(fm, d, 2), Eigen::VectorXd::Zero(2));
  EXPECT_DOUBLE_EQ(predict_cold(m, {&c, &d}, fm, 2, 0), m.head.predict(Eigen::Vector3d::Zero()));
  EXPECT_DOUBLE_EQ(predict(m, {&c, &d}, fm, 2, 0), m.head.predict(Eigen::Vector3d::Zero()));
}

TEST(PredictCold, RankOneHandProducts) {
  Eigen::MatrixXd x(1, 3), o(1, 3);
  x << 1, 0, 1;
  o << 1, 1, 1;
  const auto fm = testing::feedback_from(x, o);
  FactorModel c, d;
  c.k = d.k = 1;
  c.left = RowMatrix(3, 1);
  c.left << 2, 3, 5;
  c.right = Eigen::MatrixXd(1, 3);
  c.right << 1, 2, 3;
  d.left = RowMatrix(3, 1);
  d.left << 7, 11, 13;
  d.right = Eigen::MatrixXd(1, 3);
  d.right << 4, 5, 6;
  EXPECT_DOUBLE_EQ(approximate_u_pos(fm, c, 0)[0], 2.0 + 5.0);
  EXPECT_DOUBLE_EQ(approximate_u_neg(fm, d, 0)[0], 11.0);
  EXPECT_DOUBLE_EQ(approximate_w(c, d, 2)(0, 0), 6.0 * 3.0);
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](size_t i, size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (size_t s = 0; s < idx.size();) {
      size_t e = s;
      while (e < idx.size() && v[idx[e]] == v[idx[s]]) ++e;
      for (size_t p = s; p < e; ++p) r[idx[p]] = 0.5 * (s + e - 1);
      s = e;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / ra.size();
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / rb.size();
  double num = 0, da = 0, db = 0;
  for (size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  return da > 0 && db > 0 ? num / std::sqrt(da * db) : 0.0;
}

TEST(PredictCold, WarmAndColdPathsAgreeInRank) {
  TopicConfig tc;
  tc.n_users = 200;
  tc.n_items = 120;
  tc.impressions_per_user = 25;
  const auto world = synthesize_topics(tc);
  const auto fm = build_matrices(world.data.interactions, world.data.users, world.data.items);
  const FactorModel c = factorize(gram_p2p(fm), FactorizeOptions{});
  const FactorModel d = factorize(cross_n2p(fm), FactorizeOptions{});
  HiNnHyper h;
  h.epochs = 10;
  h.head_epochs = 10;
  HiNnModel m = make_hi_nn(fm, h, {&c, &d});
  train_phase1(m, fm);
  train_phase2(m, fm);
  double total = 0.0;
  int users = 0;
  for (int u = 0; u < fm.m(); u += 10) {
    std::vector<double> warm, cold;
    for (int j = 0; j < fm.n(); ++j) {
      warm.push_back(predict_warm(m, fm, u, j));
      cold.push_back(predict_cold(m, {&c, &d}, fm, u, j));
    }
    total += spearman(warm, cold);
    ++users;
  }
  EXPECT_GE(total / users, 0.5);
}

TEST(HiNnCheckpoint, RoundTrip) {
  const FeedbackMatrices fm = tiny(80);
  HiNnModel m = make_hi_nn(fm, tiny_hyper(4));
  m.user_scale_pos = 1.5;
  m.item_scale_neg = -0.25;
  m.head.b2 = 0.125;
  testing::TempDir dir;
  save_hi_nn(m, dir / "m.hinn");
  const HiNnModel r = load_hi_nn(dir / "m.hinn");
  EXPECT_EQ(r.embedding_fingerprint(), m.embedding_fingerprint());
  EXPECT_EQ(r.head.w1, m.head.w1);
  EXPECT_EQ(r.head.b1, m.head.b1);
  EXPECT_EQ(r.head.w2, m.head.w2);
  EXPECT_EQ(r.head.b2, 0.125);
  EXPECT_EQ(r.user_scale_pos, 1.5);
  EXPECT_EQ(r.item_scale_neg, -0.25);
  EXPECT_EQ(r.hyper.alpha, m.hyper.alpha);
  EXPECT_EQ(r.hyper.embedding_hidden, 4);
  for (int u = 0; u < fm.m(); ++u) EXPECT_EQ(predict_warm(r, fm, u, 2), predict_warm(m, fm, u, 2));
}

TEST(Presets, NeuralVariantsDifferOnlyInGating) {
  const Preset hi = preset("HI-NN"), cf = preset("CF-NN");
  EXPECT_EQ(hi.pipeline, cf.pipeline);
  EXPECT_EQ(hi.rerank, cf.rerank);
  EXPECT_TRUE(hi.use_negative);
  EXPECT_FALSE(cf.use_negative);
  EXPECT_TRUE(hi.nn.use_negative);
  EXPECT_FALSE(cf.nn.use_negative);
  EXPECT_DOUBLE_EQ(hi.ratio_p2p, 0.67);
  EXPECT_EQ(hi.nn.epochs, cf.nn.epochs);
  EXPECT_EQ(hi.nn.learning_rate, cf.nn.learning_rate);
  EXPECT_EQ(hi.k, cf.k);
}

}  // namespace
}  // namespace hi
