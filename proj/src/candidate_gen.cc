#include "hi/candidate_gen.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace hi {

namespace {

Eigen::VectorXd project_scores(const SparseRows& source, const FactorModel& model, int user,
                               int n, const char* what) {
  if (user < 0 || user >= source.rows())
    throw UsageError(std::string(what) + ": user index out of range");
  if (model.rows() != n || model.cols() != n)
    throw UsageError(std::string(what) + ": model shape does not match the item count");
  Eigen::RowVectorXd z = Eigen::RowVectorXd::Zero(model.k);
  for (SparseRows::InnerIterator it(source, user); it; ++it)
    z.noalias() += it.value() * model.left.row(it.col());
  return (z * model.right).transpose();
}

bool row_empty(const SparseRows& m, int user) {
  return m.outerIndexPtr()[user + 1] == m.outerIndexPtr()[user];
}

}  // namespace

std::string_view to_string(Channel channel) {
  return channel == Channel::kP2p ? "p2p" : "n2p";
}

std::vector<int> RecommendationList::item_ids() const {
  std::vector<int> ids;
  ids.reserve(items.size());
  for (const ScoredItem& s : items) ids.push_back(s.item);
  return ids;
}

bool ranks_before(double score_a, int item_a, double score_b, int item_b) {
  if (score_a != score_b) return score_a > score_b;
  return item_a < item_b;
}

std::vector<ScoredItem> top_n(const Eigen::VectorXd& scores, int n, Channel channel,
                              const std::function<bool(int)>& skip) {
  std::vector<int> ids;
  ids.reserve(scores.size());
  for (int j = 0; j < scores.size(); ++j) {
    if (skip && skip(j)) continue;
    if (!std::isfinite(scores[j])) continue;
    ids.push_back(j);
  }
  const size_t take = std::min<size_t>(std::max(n, 0), ids.size());
  auto cmp = [&](int a, int b) { return ranks_before(scores[a], a, scores[b], b); };
  std::partial_sort(ids.begin(), ids.begin() + take, ids.end(), cmp);
  std::vector<ScoredItem> out;
  out.reserve(take);
  for (size_t r = 0; r < take; ++r) out.push_back({ids[r], scores[ids[r]], channel});
  return out;
}

Eigen::VectorXd p2p_scores(const FeedbackMatrices& fm, const FactorModel& c, int user) {
  return project_scores(fm.x(), c, user, fm.n(), "p2p_scores");
}

Eigen::VectorXd n2p_scores(const FeedbackMatrices& fm, const FactorModel& d, int user) {
  return project_scores(fm.y(), d, user, fm.n(), "n2p_scores");
}

RecommendationList mixed_candidates(const FeedbackMatrices& fm, const FactorModel& c,
                                    const FactorModel& d, int user, int n, double ratio_p2p,
                                    bool exclude_engaged) {
  if (n < 1) throw UsageError("mixed_candidates: n must be >= 1");
  if (!(ratio_p2p >= 0.0 && ratio_p2p <= 1.0))
    throw UsageError("mixed_candidates: ratio must be in [0, 1]");
  if (user < 0 || user >= fm.m()) throw UsageError("mixed_candidates: user index out of range");

  const bool p2p_silent = row_empty(fm.x(), user);
  const bool n2p_silent = row_empty(fm.y(), user);

  std::function<bool(int)> skip;
  if (exclude_engaged) skip = [&](int j) { return fm.observed(user, j); };

  int p2p_quota = static_cast<int>(ceil_fraction(ratio_p2p, n));
  if (p2p_silent) p2p_quota = 0;
  if (n2p_silent) p2p_quota = n;

  RecommendationList out;
  out.user = user;
  out.requested = n;
  std::unordered_set<int> taken;

  if (!p2p_silent && p2p_quota > 0) {
    for (const ScoredItem& s : top_n(p2p_scores(fm, c, user), p2p_quota, Channel::kP2p, skip)) {
      out.items.push_back(s);
      taken.insert(s.item);
    }
  }
  if (!n2p_silent && static_cast<int>(out.items.size()) < n) {
    // Enough n2p items to backfill every possible collision.
    const int want = n - static_cast<int>(out.items.size());
    const auto ranked = top_n(n2p_scores(fm, d, user), want + static_cast<int>(taken.size()),
                              Channel::kN2p, skip);
    for (const ScoredItem& s : ranked) {
      if (static_cast<int>(out.items.size()) >= n) break;
      if (taken.insert(s.item).second) out.items.push_back(s);
    }
  }
  out.short_list = static_cast<int>(out.items.size()) < n;
  return out;
}

}  // namespace hi
