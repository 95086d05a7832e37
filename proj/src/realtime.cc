#include "hi/realtime.h"

#include <sstream>

namespace hi {

RtModel train_rt(const FeedbackMatrices& fm, const RtOptions& options) {
  if (options.beta < 0.0) throw UsageError("train_rt: beta must be >= 0");
  FactorizeOptions fo;
  fo.k = options.k;
  fo.lambda = options.lambda;
  fo.iters = options.iters;
  fo.seed = options.seed;
  fo.tolerance = options.tolerance;
  fo.threads = options.threads;
  fo.observed_only = options.observed_only;
  RtModel model;
  model.factors = factorize(stacked_h(fm), fo);
  model.beta = options.beta;
  model.n = fm.n();
  return model;
}

RtModel p2p_rt_model(FactorModel c) {
  if (c.rows() != c.cols()) throw UsageError("p2p_rt_model: expected a square factorization");
  RtModel model;
  model.n = c.cols();
  model.beta = 0.0;
  model.factors = std::move(c);
  return model;
}

Feedback parse_feedback(std::string_view name) {
  if (name == "positive") return Feedback::kPositive;
  if (name == "negative") return Feedback::kNegative;
  throw DataError("feedback must be 'positive' or 'negative', got '" + std::string(name) + "'");
}

std::string_view to_string(Feedback feedback) {
  return feedback == Feedback::kPositive ? "positive" : "negative";
}

SessionState SessionState::from_matrices(const FeedbackMatrices& fm, int user) {
  if (user < 0 || user >= fm.m()) throw UsageError("session user out of range");
  SessionState s;
  s.user = user;
  for (SparseRows::InnerIterator it(fm.x(), user); it; ++it) s.x_row[it.col()] = it.value();
  for (SparseRows::InnerIterator it(fm.y(), user); it; ++it) s.y_row[it.col()] = it.value();
  return s;
}

SessionState apply_event(SessionState state, int item, Feedback feedback) {
  if (item < 0) throw UsageError("apply_event: negative item index");
  if (feedback == Feedback::kPositive) {
    state.y_row.erase(item);
    state.x_row[item] = 1.0;
  } else {
    state.x_row.erase(item);
    state.y_row[item] = 1.0;
  }
  return state;
}

Eigen::RowVectorXd project_state(const RtModel& model, const SessionState& state) {
  const auto& a = model.factors.left;
  Eigen::RowVectorXd z = Eigen::RowVectorXd::Zero(model.factors.k);
  for (const auto& [item, v] : state.x_row) {
    if (item >= model.n) throw UsageError("recommend_rt: state item outside the model");
    z.noalias() += v * a.row(item);
  }
  if (model.has_negative_block() && model.beta != 0.0) {
    for (const auto& [item, v] : state.y_row) {
      if (item >= model.n) throw UsageError("recommend_rt: state item outside the model");
      z.noalias() += (model.beta * v) * a.row(model.n + item);
    }
  }
  return z;
}

Eigen::VectorXd score_state(const RtModel& model, const SessionState& state) {
  return (project_state(model, state) * model.factors.right).transpose();
}

double score_item(const RtModel& model, const Eigen::RowVectorXd& projection, int item) {
  return projection.dot(model.factors.right.col(item));
}

RecommendationList recommend_rt(const RtModel& model, const SessionState& state, int n) {
  if (n < 1) throw UsageError("recommend_rt: n must be >= 1");
  RecommendationList out;
  out.user = state.user;
  out.requested = n;
  if (state.empty()) {
    out.short_list = true;
    return out;
  }
  const Eigen::VectorXd scores = score_state(model, state);
  out.items = top_n(scores, n, Channel::kP2p, [&](int j) { return state.engaged(j); });
  if (model.has_negative_block() && model.beta != 0.0 && !state.y_row.empty()) {
    // Tag each item with the block that contributes more to its score.
    SessionState negatives_only = state;
    negatives_only.x_row.clear();
    const Eigen::RowVectorXd z_neg = project_state(model, negatives_only);
    const Eigen::RowVectorXd z_all = project_state(model, state);
    for (auto& s : out.items) {
      const double neg = score_item(model, z_neg, s.item);
      const double pos = score_item(model, z_all, s.item) - neg;
      s.channel = neg > pos ? Channel::kN2p : Channel::kP2p;
    }
  }
  out.short_list = static_cast<int>(out.items.size()) < n;
  return out;
}

SessionStore::Slot& SessionStore::slot(int user) {
  {
    std::shared_lock lock(registry_mutex_);
    auto it = slots_.find(user);
    if (it != slots_.end()) return *it->second;
  }
  std::unique_lock lock(registry_mutex_);
  auto& ptr = slots_[user];
  if (!ptr) {
    ptr = std::make_unique<Slot>();
    ptr->state.user = user;
  }
  return *ptr;
}

void SessionStore::open_journal(const std::filesystem::path& path) {
  std::lock_guard lock(journal_mutex_);
  journal_.open(path, std::ios::app);
  if (!journal_) throw DataError("cannot open event journal " + path.string());
}

int SessionStore::replay_journal(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return 0;
  std::string line;
  int count = 0;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    int user = -1, item = -1;
    std::string fb;
    if (!(fields >> user >> item >> fb) || item >= n_items_)
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed journal line");
    Slot& s = slot(user);
    std::lock_guard lock(s.mutex);
    s.state = apply_event(std::move(s.state), item, parse_feedback(fb));
    ++count;
  }
  return count;
}

void SessionStore::seed(int user, SessionState state) {
  Slot& s = slot(user);
  std::lock_guard lock(s.mutex);
  state.user = user;
  s.state = std::move(state);
}

SessionState SessionStore::snapshot(int user) {
  Slot& s = slot(user);
  std::lock_guard lock(s.mutex);
  return s.state;
}

void SessionStore::record(int user, int item, Feedback feedback) {
  if (item < 0 || item >= n_items_) throw DataError("event item index out of range");
  Slot& s = slot(user);
  std::lock_guard lock(s.mutex);
  s.state = apply_event(std::move(s.state), item, feedback);
  std::lock_guard jlock(journal_mutex_);
  if (journal_.is_open()) {
    journal_ << user << '\t' << item << '\t' << to_string(feedback) << '\n';
    journal_.flush();
  }
}

}  // namespace hi
