#include "hi/ranking_nn.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>

namespace hi {

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void fill_uniform(RowMatrix& m, Rng& rng, double half_width) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-half_width, half_width);
}

// Least-squares scale c minimizing sum (x - c r)^2.
double fit_scale(const std::vector<double>& r, const std::vector<double>& x) {
  double xr = 0.0, rr = 0.0;
  for (size_t i = 0; i < r.size(); ++i) {
    xr += x[i] * r[i];
    rr += r[i] * r[i];
  }
  return rr > 0.0 ? xr / rr : 1.0;
}

RowMatrix solve_right(const Eigen::MatrixXd& lhs, const RowMatrix& factors) {
  // lhs * (F^T F + eps I)^{-1}
  Eigen::MatrixXd gram = factors.transpose() * factors;
  const double eps = 1e-9 * std::max(1.0, gram.trace() / std::max<Eigen::Index>(1, gram.rows()));
  gram.diagonal().array() += eps;
  return gram.ldlt().solve(lhs.transpose()).transpose();
}

}  // namespace

SparseVector sparse_row(const SparseRows& m, int row, int skip_col) {
  SparseVector v;
  for (SparseRows::InnerIterator it(m, row); it; ++it) {
    if (it.col() == skip_col) continue;
    v.index.push_back(static_cast<int>(it.col()));
    v.value.push_back(it.value());
  }
  return v;
}

SparseVector sparse_col(const SparseCols& m, int col, int skip_row) {
  SparseVector v;
  for (SparseCols::InnerIterator it(m, col); it; ++it) {
    if (it.row() == skip_row) continue;
    v.index.push_back(static_cast<int>(it.row()));
    v.value.push_back(it.value());
  }
  return v;
}

EmbeddingMap::EmbeddingMap(int input_dim, int k, int hidden, bool normalize)
    : first(RowMatrix::Zero(input_dim, hidden > 0 ? hidden : k)),
      second(hidden > 0 ? RowMatrix::Zero(hidden, k) : RowMatrix()),
      normalize_input(normalize) {}

double EmbeddingMap::input_scale(const SparseVector& input) const {
  if (!normalize_input) return 1.0;
  return input.empty() ? 0.0 : 1.0 / std::sqrt(static_cast<double>(input.size()));
}

Eigen::VectorXd EmbeddingMap::forward(const SparseVector& input, Trace* trace) const {
  const double scale = input_scale(input);
  Eigen::VectorXd pre = Eigen::VectorXd::Zero(first.cols());
  for (size_t p = 0; p < input.size(); ++p) {
    if (input.index[p] < 0 || input.index[p] >= first.rows())
      throw UsageError("embedding input index out of range");
    pre.noalias() += (scale * input.value[p]) * first.row(input.index[p]).transpose();
  }
  if (trace) trace->scale = scale;
  if (hidden_units() == 0) return pre;
  Eigen::VectorXd h = pre.cwiseMax(0.0);
  Eigen::VectorXd out = second.transpose() * h;
  if (trace) {
    trace->pre = std::move(pre);
    trace->hidden = std::move(h);
  }
  return out;
}

void EmbeddingMap::backward(const SparseVector& input, const Trace& trace,
                            const Eigen::VectorXd& d_out, RowMatrix& first_grad,
                            RowMatrix& second_grad) const {
  Eigen::VectorXd d_pre;
  if (hidden_units() == 0) {
    d_pre = d_out;
  } else {
    second_grad.noalias() += trace.hidden * d_out.transpose();
    d_pre = (second * d_out).cwiseProduct((trace.pre.array() > 0.0).cast<double>().matrix());
  }
  for (size_t p = 0; p < input.size(); ++p)
    first_grad.row(input.index[p]).noalias() += (trace.scale * input.value[p]) * d_pre.transpose();
}

double Head::logit(const Eigen::Vector3d& features, Eigen::VectorXd* activation) const {
  Eigen::VectorXd a = (w1 * features + b1).array().tanh().matrix();
  const double z = w2.dot(a) + b2;
  if (activation) *activation = std::move(a);
  return z;
}

double Head::predict(const Eigen::Vector3d& features) const {
  // Keep the output strictly inside (0, 1) even when the logistic saturates.
  return std::clamp(sigmoid(logit(features)), 1e-12, 1.0 - 1e-12);
}

uint64_t HiNnModel::embedding_fingerprint() const {
  uint64_t h = fnv1a("embeddings");
  for (const EmbeddingMap* map : {&u_pos, &v_pos, &u_neg, &v_neg}) {
    h = fnv1a(map->first.data(), sizeof(double) * map->first.size(), h);
    h = fnv1a(map->second.data(), sizeof(double) * map->second.size(), h);
  }
  return fnv1a(w.data(), sizeof(double) * w.size(), h);
}

ChannelInputs channel_inputs(const FeedbackMatrices& fm, int user, int item, bool leave_one_out) {
  if (user < 0 || user >= fm.m() || item < 0 || item >= fm.n())
    throw UsageError("channel_inputs: index out of range");
  ChannelInputs in;
  in.x_row = sparse_row(fm.x(), user, leave_one_out ? item : -1);
  in.y_row = sparse_row(fm.y(), user, leave_one_out ? item : -1);
  in.x_col = sparse_col(fm.x_cols(), item, leave_one_out ? user : -1);
  return in;
}

ChannelScores channel_scores_from_latents(const Eigen::VectorXd& u_pos, const Eigen::VectorXd& v_pos,
                                          const Eigen::VectorXd& u_neg, const Eigen::VectorXd& v_neg,
                                          const Eigen::MatrixXd& w) {
  const Eigen::Index k = u_pos.size();
  if (v_pos.size() != k || u_neg.size() != k || v_neg.size() != k || w.rows() != k || w.cols() != k)
    throw UsageError("channel_scores: latent dimension mismatch");
  ChannelScores s;
  s.u_pos = u_pos;
  s.v_pos = v_pos;
  s.u_neg = u_neg;
  s.v_neg = v_neg;
  s.r_pos = u_pos.dot(v_pos);
  s.r_neg = u_neg.dot(v_neg);
  s.r_int = u_neg.dot(w * u_pos);
  return s;
}

ChannelScores channel_scores(const HiNnModel& model, const ChannelInputs& inputs) {
  const int k = model.k();
  if (model.u_pos.input_dim() != model.n || model.v_pos.input_dim() != model.m)
    throw UsageError("channel_scores: model dimension mismatch");
  const Eigen::VectorXd u_pos = model.u_pos.forward(inputs.x_row);
  const Eigen::VectorXd v_pos = model.v_pos.forward(inputs.x_col);
  if (!model.hyper.use_negative) {
    ChannelScores s;
    s.u_pos = u_pos;
    s.v_pos = v_pos;
    s.u_neg = s.v_neg = Eigen::VectorXd::Zero(k);
    s.r_pos = u_pos.dot(v_pos);
    return s;
  }
  return channel_scores_from_latents(u_pos, v_pos, model.u_neg.forward(inputs.y_row),
                                     model.v_neg.forward(inputs.x_col), model.w);
}

HiNnModel make_hi_nn(const FeedbackMatrices& fm, const HiNnHyper& hyper, const MfFactors& mf) {
  if (hyper.k < 1) throw UsageError("make_hi_nn: k must be >= 1");
  HiNnModel model;
  model.m = fm.m();
  model.n = fm.n();
  model.hyper = hyper;
  const int k = hyper.k;
  const int hid = hyper.embedding_hidden;
  model.u_pos = EmbeddingMap(fm.n(), k, hid);
  model.v_pos = EmbeddingMap(fm.m(), k, hid);
  model.u_neg = EmbeddingMap(fm.n(), k, hid);
  model.v_neg = EmbeddingMap(fm.m(), k, hid);

  Rng rng(hyper.seed, "hi_nn_init");
  for (EmbeddingMap* map : {&model.u_pos, &model.v_pos, &model.u_neg, &model.v_neg}) {
    fill_uniform(map->first, rng, 0.1);
    if (hid > 0) fill_uniform(map->second, rng, 1.0 / std::sqrt(static_cast<double>(hid)));
  }
  model.w = Eigen::MatrixXd(k, k);
  for (Eigen::Index i = 0; i < model.w.size(); ++i) model.w.data()[i] = rng.uniform(-0.1, 0.1);
  if (!hyper.use_negative) {
    model.u_neg.first.setZero();
    model.v_neg.first.setZero();
    model.u_neg.second.setZero();
    model.v_neg.second.setZero();
    model.w.setZero();
  }

  Rng head_rng(hyper.seed, "head_init");
  const int hh = std::max(1, hyper.head_hidden);
  model.head.w1 = Eigen::MatrixXd(hh, 3);
  for (Eigen::Index i = 0; i < model.head.w1.size(); ++i)
    model.head.w1.data()[i] = head_rng.normal() / std::sqrt(3.0);
  model.head.b1 = Eigen::VectorXd::Zero(hh);
  model.head.w2 = Eigen::VectorXd(hh);
  for (int i = 0; i < hh; ++i) model.head.w2[i] = head_rng.normal() / std::sqrt(static_cast<double>(hh));
  model.head.b2 = 0.0;

  const bool can_use_mf = hid == 0 && mf.c != nullptr && mf.c->k == k && mf.c->rows() == fm.n();
  if (!can_use_mf) return model;

  // Calibration sample: every stride-th observed entry.
  const auto examples = observed_examples(fm);
  const size_t stride = std::max<size_t>(1, examples.size() / 4000);
  auto calibrate = [&](EmbeddingMap& user_map, EmbeddingMap& item_map, bool negative,
                       double& user_scale, double& item_scale) {
    std::vector<double> r, x;
    double user_sq = 0.0, item_sq = 0.0;
    for (size_t e = 0; e < examples.size(); e += stride) {
      const ChannelInputs in = channel_inputs(fm, examples[e].user, examples[e].item, true);
      const Eigen::VectorXd u = user_map.forward(negative ? in.y_row : in.x_row);
      const Eigen::VectorXd v = item_map.forward(in.x_col);
      r.push_back(u.dot(v));
      x.push_back(examples[e].target);
      user_sq += u.squaredNorm();
      item_sq += v.squaredNorm();
    }
    const double c = fit_scale(r, x);
    // Split c so user and item latents end up with equal RMS norm. Factor
    // magnitudes otherwise sit almost entirely on the user side, and the
    // interaction term's curvature makes SGD diverge.
    const double balance = user_sq > 0.0 && item_sq > 0.0 ? std::pow(item_sq / user_sq, 0.25) : 1.0;
    user_scale = std::sqrt(std::abs(c)) * balance;
    item_scale = (c < 0 ? -1.0 : 1.0) * std::sqrt(std::abs(c)) / balance;
    user_map.first *= user_scale;
    item_map.first *= item_scale;
  };

  const RowMatrix& p = mf.c->left;
  model.u_pos.first = p;
  model.v_pos.first = solve_right(Eigen::MatrixXd(fm.x() * p), p);
  calibrate(model.u_pos, model.v_pos, false, model.user_scale_pos, model.item_scale_pos);

  if (hyper.use_negative && mf.d != nullptr && mf.d->k == k && mf.d->rows() == fm.n()) {
    const RowMatrix& r = mf.d->left;
    model.u_neg.first = r;
    model.v_neg.first = solve_right(Eigen::MatrixXd(fm.y() * r), r);
    calibrate(model.u_neg, model.v_neg, true, model.user_scale_neg, model.item_scale_neg);
  }
  return model;
}

std::vector<TrainingExample> observed_examples(const FeedbackMatrices& fm) {
  std::vector<TrainingExample> out;
  out.reserve(fm.nnz());
  for (int i = 0; i < fm.m(); ++i)
    for (SparseRows::InnerIterator it(fm.o(), i); it; ++it)
      out.push_back({i, static_cast<int>(it.col()), fm.x_at(i, static_cast<int>(it.col()))});
  return out;
}

Phase1Gradients::Phase1Gradients(const HiNnModel& model)
    : u_pos_first(model.u_pos.first.rows(), model.u_pos.first.cols()),
      u_pos_second(model.u_pos.second.rows(), model.u_pos.second.cols()),
      v_pos_first(model.v_pos.first.rows(), model.v_pos.first.cols()),
      v_pos_second(model.v_pos.second.rows(), model.v_pos.second.cols()),
      u_neg_first(model.u_neg.first.rows(), model.u_neg.first.cols()),
      u_neg_second(model.u_neg.second.rows(), model.u_neg.second.cols()),
      v_neg_first(model.v_neg.first.rows(), model.v_neg.first.cols()),
      v_neg_second(model.v_neg.second.rows(), model.v_neg.second.cols()),
      w(model.w.rows(), model.w.cols()) {
  set_zero();
}

void Phase1Gradients::set_zero() {
  for (RowMatrix* m : {&u_pos_first, &u_pos_second, &v_pos_first, &v_pos_second, &u_neg_first,
                       &u_neg_second, &v_neg_first, &v_neg_second})
    m->setZero();
  w.setZero();
}

double loss_phase1(const HiNnModel& model, const FeedbackMatrices& fm,
                   const std::vector<TrainingExample>& batch, Phase1Gradients* grad) {
  if (batch.empty()) throw UsageError("loss_phase1: empty batch");
  const HiNnHyper& h = model.hyper;
  const bool neg = h.use_negative;
  double loss = 0.0;
  EmbeddingMap::Trace tu_pos, tv_pos, tu_neg, tv_neg;
  for (const TrainingExample& ex : batch) {
    const ChannelInputs in = channel_inputs(fm, ex.user, ex.item, true);
    const Eigen::VectorXd u_pos = model.u_pos.forward(in.x_row, &tu_pos);
    const Eigen::VectorXd v_pos = model.v_pos.forward(in.x_col, &tv_pos);
    const double e_pos = u_pos.dot(v_pos) - ex.target;
    loss += e_pos * e_pos + h.lambda_pos * (u_pos.squaredNorm() + v_pos.squaredNorm());

    Eigen::VectorXd d_u_pos = 2.0 * e_pos * v_pos + 2.0 * h.lambda_pos * u_pos;
    const Eigen::VectorXd d_v_pos = 2.0 * e_pos * u_pos + 2.0 * h.lambda_pos * v_pos;

    if (neg) {
      const Eigen::VectorXd u_neg = model.u_neg.forward(in.y_row, &tu_neg);
      const Eigen::VectorXd v_neg = model.v_neg.forward(in.x_col, &tv_neg);
      const Eigen::VectorXd w_u_pos = model.w * u_pos;
      const double e_neg = u_neg.dot(v_neg) - ex.target;
      const double e_int = u_neg.dot(w_u_pos) - ex.target;
      loss += h.alpha * e_neg * e_neg + h.gamma * e_int * e_int +
              h.lambda_neg * (u_neg.squaredNorm() + v_neg.squaredNorm());
      if (grad) {
        const double d_r_neg = 2.0 * h.alpha * e_neg;
        const double d_r_int = 2.0 * h.gamma * e_int;
        d_u_pos.noalias() += d_r_int * (model.w.transpose() * u_neg);
        const Eigen::VectorXd d_u_neg = d_r_neg * v_neg + d_r_int * w_u_pos + 2.0 * h.lambda_neg * u_neg;
        const Eigen::VectorXd d_v_neg = d_r_neg * u_neg + 2.0 * h.lambda_neg * v_neg;
        grad->w.noalias() += d_r_int * u_neg * u_pos.transpose();
        model.u_neg.backward(in.y_row, tu_neg, d_u_neg, grad->u_neg_first, grad->u_neg_second);
        model.v_neg.backward(in.x_col, tv_neg, d_v_neg, grad->v_neg_first, grad->v_neg_second);
      }
    }
    if (grad) {
      model.u_pos.backward(in.x_row, tu_pos, d_u_pos, grad->u_pos_first, grad->u_pos_second);
      model.v_pos.backward(in.x_col, tv_pos, d_v_pos, grad->v_pos_first, grad->v_pos_second);
    }
  }
  return loss;
}

HeadGradients::HeadGradients(const Head& head)
    : w1(head.w1.rows(), head.w1.cols()), b1(head.b1.size()), w2(head.w2.size()) {
  set_zero();
}

void HeadGradients::set_zero() {
  w1.setZero();
  b1.setZero();
  w2.setZero();
  b2 = 0.0;
}

double loss_phase2(const Head& head, const std::vector<Eigen::Vector3d>& features,
                   const std::vector<double>& targets, HeadGradients* grad) {
  if (features.empty() || features.size() != targets.size())
    throw UsageError("loss_phase2: empty batch or size mismatch");
  double loss = 0.0;
  Eigen::VectorXd a;
  for (size_t e = 0; e < features.size(); ++e) {
    const double z = head.logit(features[e], &a);
    const double t = targets[e];
    // -[t log s(z) + (1 - t) log(1 - s(z))]
    loss += t * softplus(-z) + (1.0 - t) * softplus(z);
    if (grad) {
      const double d_z = sigmoid(z) - t;
      grad->b2 += d_z;
      grad->w2.noalias() += d_z * a;
      const Eigen::VectorXd d_pre = (d_z * head.w2).cwiseProduct((1.0 - a.array().square()).matrix());
      grad->b1 += d_pre;
      grad->w1.noalias() += d_pre * features[e].transpose();
    }
  }
  return loss;
}

ExampleSplit split_examples(const FeedbackMatrices& fm, const HiNnHyper& hyper) {
  if (!(hyper.head_holdout >= 0.0 && hyper.head_holdout < 1.0))
    throw UsageError("head_holdout must be in [0, 1)");
  ExampleSplit out;
  const auto all = observed_examples(fm);
  const uint64_t salt = fnv1a("head_holdout") ^ hyper.seed;
  for (const TrainingExample& ex : all) {
    const uint64_t key[2] = {static_cast<uint64_t>(ex.user), static_cast<uint64_t>(ex.item)};
    const double u = static_cast<double>(fnv1a(key, sizeof key, salt) >> 11) * 0x1.0p-53;
    (u < hyper.head_holdout ? out.head : out.embedding).push_back(ex);
  }
  if (out.embedding.empty()) out.embedding = all;
  if (out.head.empty()) out.head = all;
  return out;
}

TrainingCurve train_phase1(HiNnModel& model, const FeedbackMatrices& fm) {
  return train_phase1(model, fm, split_examples(fm, model.hyper).embedding);
}

TrainingCurve train_phase1(HiNnModel& model, const FeedbackMatrices& fm,
                           std::vector<TrainingExample> examples) {
  const HiNnHyper& h = model.hyper;
  if (h.batch_size < 1 || h.epochs < 0) throw UsageError("train_phase1: bad batch size or epochs");
  if (examples.empty()) throw DataError("train_phase1: no observed entries");
  Rng rng(h.seed, "phase1_shuffle");
  Phase1Gradients grad(model);
  TrainingCurve curve;
  std::vector<TrainingExample> batch;
  for (int epoch = 0; epoch < h.epochs; ++epoch) {
    for (size_t i = examples.size() - 1; i > 0; --i) std::swap(examples[i], examples[rng.below(i + 1)]);
    double total = 0.0;
    for (size_t start = 0; start < examples.size(); start += h.batch_size) {
      const size_t end = std::min(examples.size(), start + h.batch_size);
      batch.assign(examples.begin() + start, examples.begin() + end);
      grad.set_zero();
      total += loss_phase1(model, fm, batch, &grad);
      const double step = h.learning_rate / static_cast<double>(batch.size());
      model.u_pos.first -= step * grad.u_pos_first;
      model.u_pos.second -= step * grad.u_pos_second;
      model.v_pos.first -= step * grad.v_pos_first;
      model.v_pos.second -= step * grad.v_pos_second;
      if (h.use_negative) {
        model.u_neg.first -= step * grad.u_neg_first;
        model.u_neg.second -= step * grad.u_neg_second;
        model.v_neg.first -= step * grad.v_neg_first;
        model.v_neg.second -= step * grad.v_neg_second;
        model.w -= step * grad.w;
      }
    }
    curve.epoch_loss.push_back(total / static_cast<double>(examples.size()));
  }
  return curve;
}

TrainingCurve train_phase2(HiNnModel& model, const FeedbackMatrices& fm) {
  return train_phase2(model, fm, split_examples(fm, model.hyper).head);
}

TrainingCurve train_phase2(HiNnModel& model, const FeedbackMatrices& fm,
                           const std::vector<TrainingExample>& examples) {
  if (examples.empty()) throw DataError("train_phase2: no observed entries");
  const HiNnHyper& h = model.hyper;
  std::vector<Eigen::Vector3d> features;
  std::vector<double> targets;
  features.reserve(examples.size());
  targets.reserve(examples.size());
  for (const TrainingExample& ex : examples) {
    features.push_back(channel_scores(model, channel_inputs(fm, ex.user, ex.item, true)).features());
    targets.push_back(ex.target);
  }
  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(h.seed, "phase2_shuffle");
  HeadGradients grad(model.head);
  TrainingCurve curve;
  std::vector<Eigen::Vector3d> bf;
  std::vector<double> bt;
  for (int epoch = 0; epoch < h.head_epochs; ++epoch) {
    for (size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
    double total = 0.0;
    for (size_t start = 0; start < order.size(); start += h.batch_size) {
      const size_t end = std::min(order.size(), start + h.batch_size);
      bf.clear();
      bt.clear();
      for (size_t p = start; p < end; ++p) {
        bf.push_back(features[order[p]]);
        bt.push_back(targets[order[p]]);
      }
      grad.set_zero();
      total += loss_phase2(model.head, bf, bt, &grad);
      const double step = h.head_learning_rate / static_cast<double>(bf.size());
      model.head.w1 -= step * grad.w1;
      model.head.b1 -= step * grad.b1;
      model.head.w2 -= step * grad.w2;
      model.head.b2 -= step * grad.b2;
    }
    curve.epoch_loss.push_back(total / static_cast<double>(order.size()));
  }
  return curve;
}

double predict_warm(const HiNnModel& model, const ChannelInputs& inputs) {
  return model.head.predict(channel_scores(model, inputs).features());
}

double predict_warm(const HiNnModel& model, const FeedbackMatrices& fm, int user, int item) {
  return predict_warm(model, channel_inputs(fm, user, item, false));
}

Eigen::VectorXd approximate_latent(const SparseVector& row, const FactorModel& f) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(f.k);
  for (size_t e = 0; e < row.size(); ++e) {
    if (row.index[e] < 0 || row.index[e] >= f.rows()) throw UsageError("approximate_latent: index out of range");
    u.noalias() += row.value[e] * f.left.row(row.index[e]).transpose();
  }
  return u;
}

Eigen::VectorXd approximate_u_pos(const FeedbackMatrices& fm, const FactorModel& c, int user) {
  if (c.rows() != fm.n()) throw UsageError("approximate_u_pos: factor shape mismatch");
  return approximate_latent(sparse_row(fm.x(), user), c);
}

Eigen::VectorXd approximate_u_neg(const FeedbackMatrices& fm, const FactorModel& d, int user) {
  if (d.rows() != fm.n()) throw UsageError("approximate_u_neg: factor shape mismatch");
  return approximate_latent(sparse_row(fm.y(), user), d);
}

Eigen::MatrixXd approximate_w(const FactorModel& c, const FactorModel& d, int item) {
  return d.right.col(item) * c.right.col(item).transpose();
}

double predict_cold(const HiNnModel& model, const MfFactors& mf, const ChannelInputs& in, int item) {
  if (mf.c == nullptr) throw UsageError("predict_cold: p2p factorization required");
  const Eigen::VectorXd v_pos = model.v_pos.forward(in.x_col);
  const Eigen::VectorXd u_pos =
      model.user_scale_pos * model.u_pos.input_scale(in.x_row) * approximate_latent(in.x_row, *mf.c);
  if (!model.hyper.use_negative || mf.d == nullptr) {
    Eigen::Vector3d f(u_pos.dot(v_pos), 0.0, 0.0);
    return model.head.predict(f);
  }
  const Eigen::VectorXd v_neg = model.v_neg.forward(in.x_col);
  const Eigen::VectorXd u_neg =
      model.user_scale_neg * model.u_neg.input_scale(in.y_row) * approximate_latent(in.y_row, *mf.d);
  const double s_item = model.v_pos.input_scale(in.x_col);
  const Eigen::MatrixXd w = (model.item_scale_neg * model.item_scale_pos * s_item * s_item) *
                            approximate_w(*mf.c, *mf.d, item);
  return model.head.predict(channel_scores_from_latents(u_pos, v_pos, u_neg, v_neg, w).features());
}

double predict_cold(const HiNnModel& model, const MfFactors& mf, const FeedbackMatrices& fm,
                    int user, int item) {
  return predict_cold(model, mf, channel_inputs(fm, user, item, false), item);
}

namespace {

// Distinct items across the positive and negative rows.
int history_size(const ChannelInputs& in) {
  int count = 0;
  size_t a = 0, b = 0;
  while (a < in.x_row.size() || b < in.y_row.size()) {
    if (b == in.y_row.size() || (a < in.x_row.size() && in.x_row.index[a] < in.y_row.index[b])) {
      ++a;
    } else if (a == in.x_row.size() || in.y_row.index[b] < in.x_row.index[a]) {
      ++b;
    } else {
      ++a;
      ++b;
    }
    ++count;
  }
  return count;
}

}  // namespace

double predict(const HiNnModel& model, const MfFactors& mf, const ChannelInputs& inputs, int item) {
  if (history_size(inputs) >= model.hyper.warm_threshold || mf.c == nullptr)
    return predict_warm(model, inputs);
  return predict_cold(model, mf, inputs, item);
}

double predict(const HiNnModel& model, const MfFactors& mf, const FeedbackMatrices& fm, int user,
               int item) {
  return predict(model, mf, channel_inputs(fm, user, item, false), item);
}

namespace {

constexpr char kNnMagic[4] = {'H', 'I', 'N', 'N'};
constexpr uint16_t kNnVersion = 1;

void put_u16(std::ostream& out, uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  out.write(reinterpret_cast<const char*>(b), 2);
}
void put_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}
uint16_t get_u16(std::istream& in) {
  unsigned char b[2] = {0, 0};
  in.read(reinterpret_cast<char*>(b), 2);
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}
uint32_t get_u32(std::istream& in) {
  unsigned char b[4] = {0, 0, 0, 0};
  in.read(reinterpret_cast<char*>(b), 4);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

void put_section(std::ostream& out, const char* tag, const RowMatrix& m) {
  out.write(tag, 4);
  put_u32(out, static_cast<uint32_t>(m.rows()));
  put_u32(out, static_cast<uint32_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
}

}  // namespace

void save_hi_nn(const HiNnModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(kNnMagic, 4);
  put_u16(out, kNnVersion);
  put_u16(out, static_cast<uint16_t>(model.k()));
  put_u32(out, static_cast<uint32_t>(model.m));
  put_u32(out, static_cast<uint32_t>(model.n));
  put_section(out, "UP.1", model.u_pos.first);
  put_section(out, "UP.2", model.u_pos.second);
  put_section(out, "VP.1", model.v_pos.first);
  put_section(out, "VP.2", model.v_pos.second);
  put_section(out, "UN.1", model.u_neg.first);
  put_section(out, "UN.2", model.u_neg.second);
  put_section(out, "VN.1", model.v_neg.first);
  put_section(out, "VN.2", model.v_neg.second);
  put_section(out, "WINT", model.w);
  put_section(out, "G.W1", model.head.w1);
  put_section(out, "G.B1", model.head.b1.transpose());
  put_section(out, "G.W2", model.head.w2.transpose());
  RowMatrix scalars(1, 5);
  scalars << model.head.b2, model.user_scale_pos, model.item_scale_pos, model.user_scale_neg,
      model.item_scale_neg;
  put_section(out, "SCAL", scalars);
  if (!out) throw DataError("failed writing checkpoint " + path.string());

  const HiNnHyper& h = model.hyper;
  std::ofstream meta(path.string() + ".meta");
  meta.precision(17);
  meta << "alpha=" << h.alpha << "\ngamma=" << h.gamma << "\nlambda_pos=" << h.lambda_pos
       << "\nlambda_neg=" << h.lambda_neg << "\nlearning_rate=" << h.learning_rate
       << "\nbatch_size=" << h.batch_size << "\nepochs=" << h.epochs
       << "\nhead_learning_rate=" << h.head_learning_rate << "\nhead_epochs=" << h.head_epochs
       << "\nhead_hidden=" << h.head_hidden << "\nembedding_hidden=" << h.embedding_hidden
       << "\nuse_negative=" << (h.use_negative ? 1 : 0) << "\nwarm_threshold=" << h.warm_threshold
       << "\nseed=" << h.seed << '\n';
}

HiNnModel load_hi_nn(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kNnMagic, 4) != 0) throw DataError(path.string() + ": bad magic");
  if (get_u16(in) != kNnVersion) throw DataError(path.string() + ": unsupported version");
  HiNnModel model;
  model.hyper.k = get_u16(in);
  model.m = static_cast<int>(get_u32(in));
  model.n = static_cast<int>(get_u32(in));
  std::map<std::string, RowMatrix> sections;
  while (true) {
    char tag[4];
    if (!in.read(tag, 4)) break;
    const uint32_t rows = get_u32(in);
    const uint32_t cols = get_u32(in);
    RowMatrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!in) throw DataError(path.string() + ": truncated section");
    sections.emplace(std::string(tag, 4), std::move(m));
  }
  auto take = [&](const char* tag) -> RowMatrix& {
    auto it = sections.find(tag);
    if (it == sections.end()) throw DataError(path.string() + ": missing section " + tag);
    return it->second;
  };
  model.u_pos.first = take("UP.1");
  model.u_pos.second = take("UP.2");
  model.v_pos.first = take("VP.1");
  model.v_pos.second = take("VP.2");
  model.u_neg.first = take("UN.1");
  model.u_neg.second = take("UN.2");
  model.v_neg.first = take("VN.1");
  model.v_neg.second = take("VN.2");
  model.w = take("WINT");
  model.head.w1 = take("G.W1");
  model.head.b1 = take("G.B1").transpose();
  model.head.w2 = take("G.W2").transpose();
  const RowMatrix& s = take("SCAL");
  model.head.b2 = s(0, 0);
  model.user_scale_pos = s(0, 1);
  model.item_scale_pos = s(0, 2);
  model.user_scale_neg = s(0, 3);
  model.item_scale_neg = s(0, 4);

  std::ifstream meta(path.string() + ".meta");
  std::string line;
  HiNnHyper& h = model.hyper;
  while (meta && std::getline(meta, line)) {
    const size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string v = line.substr(eq + 1);
    if (key == "alpha") h.alpha = std::stod(v);
    else if (key == "gamma") h.gamma = std::stod(v);
    else if (key == "lambda_pos") h.lambda_pos = std::stod(v);
    else if (key == "lambda_neg") h.lambda_neg = std::stod(v);
    else if (key == "learning_rate") h.learning_rate = std::stod(v);
    else if (key == "batch_size") h.batch_size = std::stoi(v);
    else if (key == "epochs") h.epochs = std::stoi(v);
    else if (key == "head_learning_rate") h.head_learning_rate = std::stod(v);
    else if (key == "head_epochs") h.head_epochs = std::stoi(v);
    else if (key == "head_hidden") h.head_hidden = std::stoi(v);
    else if (key == "embedding_hidden") h.embedding_hidden = std::stoi(v);
    else if (key == "use_negative") h.use_negative = v == "1";
    else if (key == "warm_threshold") h.warm_threshold = std::stoi(v);
    else if (key == "seed") h.seed = std::stoull(v);
  }
  return model;
}

}  // namespace hi
