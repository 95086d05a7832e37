// Candidate generation: p2p scores X_i * C, n2p scores Y_i * D, and a mixed
// list drawing a fixed share of slots from each channel.

#ifndef HI_CANDIDATE_GEN_H_
#define HI_CANDIDATE_GEN_H_

#include <functional>
#include <string_view>
#include <vector>

#include "hi/factorization.h"
#include "hi/feedback_store.h"

namespace hi {

enum class Channel { kP2p, kN2p };

std::string_view to_string(Channel channel);

struct ScoredItem {
  int item;
  double score;
  Channel channel;

  bool operator==(const ScoredItem&) const = default;
};

struct RecommendationList {
  int user = -1;
  std::vector<ScoredItem> items;
  int requested = 0;
  // Set when fewer than `requested` items could be produced.
  bool short_list = false;

  std::vector<int> item_ids() const;
};

// Orders by (score desc, item asc); the tie-break used everywhere.
bool ranks_before(double score_a, int item_a, double score_b, int item_b);

// Top-n of a dense score row. `skip` (may be empty) marks excluded items.
std::vector<ScoredItem> top_n(const Eigen::VectorXd& scores, int n, Channel channel,
                              const std::function<bool(int)>& skip = {});

// X_{user,:} * C where C = L * Rt of a model trained on gram_p2p(fm).
// Computed through the k-dimensional projection (X_i L) Rt.
Eigen::VectorXd p2p_scores(const FeedbackMatrices& fm, const FactorModel& c, int user);
// Y_{user,:} * D where D comes from cross_n2p(fm).
Eigen::VectorXd n2p_scores(const FeedbackMatrices& fm, const FactorModel& d, int user);

// ceil(ratio * n) slots from the p2p ranking, the rest from n2p. A channel
// whose source row is empty is silent and cedes its slots to the other.
// Collisions keep the p2p copy and pull the next n2p item.
RecommendationList mixed_candidates(const FeedbackMatrices& fm, const FactorModel& c,
                                    const FactorModel& d, int user, int n, double ratio_p2p,
                                    bool exclude_engaged = true);

}  // namespace hi

#endif  // HI_CANDIDATE_GEN_H_
