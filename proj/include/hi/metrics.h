// Relevance, diversity and distribution metrics.

#ifndef HI_METRICS_H_
#define HI_METRICS_H_

#include <optional>
#include <span>
#include <vector>

#include "hi/candidate_gen.h"
#include "hi/common.h"
#include "hi/factorization.h"

namespace hi {

// Probability that a random positive outranks a random negative, ties
// counting one half. Midrank statistic, O(N log N). Labels are 0/1; throws
// UsageError unless both classes are present.
double auc_roc(std::span<const double> scores, std::span<const int> labels);

// Each inner vector holds one user's labels in rank order. AP is the mean of
// precision@k over the positive positions; lists without positives are
// skipped. Throws UsageError if no list has a positive.
double average_precision(std::span<const int> ranked_labels);
double mean_average_precision(const std::vector<std::vector<int>>& ranked_lists);

// Groups (score, label) pairs by `groups` and orders each group by score
// descending (ties: original order) for mean_average_precision.
std::vector<std::vector<int>> ranked_label_lists(std::span<const double> scores,
                                                 std::span<const int> labels,
                                                 std::span<const int> groups);

struct PrPoint {
  double threshold;
  double precision;
  double recall;
};

// One point per distinct score, predicting positive when score >= threshold,
// from the highest threshold down. Throws UsageError without positives.
std::vector<PrPoint> pr_sweep(std::span<const double> scores, std::span<const int> labels);

// Best precision among thresholds whose recall is >= `recall`; nullopt when
// no threshold reaches it.
std::optional<double> precision_at_recall(const std::vector<PrPoint>& curve, double recall);
// Best recall among thresholds whose precision is >= `precision`.
std::optional<double> recall_at_precision(const std::vector<PrPoint>& curve, double precision);

// Item-item similarity, symmetrized as (s_ij + s_ji) / 2 and min-max
// normalized to [0, 1] over all entries (self-pairs included). A constant
// matrix normalizes to 1 everywhere.
class ItemSimilarity {
 public:
  explicit ItemSimilarity(Eigen::MatrixXd raw);
  // Entries are computed on demand from the factors: s_ij = left_i . right_j.
  explicit ItemSimilarity(const FactorModel& model);

  int size() const { return n_; }
  double raw(int i, int j) const;
  double normalized(int i, int j) const;
  double min_raw() const { return min_; }
  double max_raw() const { return max_; }

 private:
  double entry(int i, int j) const;
  void compute_range();

  int n_ = 0;
  Eigen::MatrixXd dense_;
  RowMatrix left_;
  Eigen::MatrixXd right_;
  double min_ = 0.0, max_ = 0.0;
};

double pair_diversity(const ItemSimilarity& sim, int i, int j);

// Mean pair diversity over unordered pairs. With `literal_denominator` the
// ordered-pair sum is divided by 2n(n-1) instead, which halves the value.
// Throws UsageError for lists shorter than 2.
double user_diversity(const std::vector<int>& items, const ItemSimilarity& sim,
                      bool literal_denominator = false);

// Linear interpolation between closest ranks; q in [0, 1].
double percentile(std::vector<double> values, double q);

struct Histogram {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<long> counts;
};

// Fixed-width bins over [lo, hi]; the last bin is closed.
Histogram make_histogram(std::span<const double> values, int bins, double lo = 0.0, double hi = 1.0);

struct DiversityReport {
  std::vector<double> values;
  double median = 0.0;
  double p25 = 0.0;
  Histogram histogram;
};

// Throws UsageError on an empty set.
DiversityReport diversity_report(std::vector<double> values, int bins = 20);
// Per-list diversity; lists with fewer than 2 items are skipped and counted
// in `skipped` when given.
DiversityReport diversity_report(const std::vector<RecommendationList>& lists,
                                 const ItemSimilarity& sim, int bins = 20, int* skipped = nullptr);

struct Skew {
  double entropy;  // Shannon entropy / log(n), in [0, 1]
  double gini;
};

// Scores are shifted so the minimum is >= 0 and normalized to a distribution;
// an all-zero row counts as uniform.
Skew relevance_skew(std::span<const double> scores);

struct InfoSample {
  int target;    // discretized x
  int x_bucket;  // positives-only context
  int o_bucket;  // observation context
};

// Plug-in estimate of I(target; O | X) = H(target | X) - H(target | O, X), in nats.
double feede_info_gain(const std::vector<InfoSample>& samples);

}  // namespace hi

#endif  // HI_METRICS_H_
