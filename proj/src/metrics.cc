#include "hi/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace hi {

namespace {

void check_labels(std::span<const double> scores, std::span<const int> labels, const char* what) {
  if (scores.size() != labels.size())
    throw UsageError(std::string(what) + ": scores and labels differ in length");
  for (int l : labels)
    if (l != 0 && l != 1) throw UsageError(std::string(what) + ": labels must be 0 or 1");
}

// Indices sorted by score descending, stable.
std::vector<size_t> order_desc(std::span<const double> scores) {
  std::vector<size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace

double auc_roc(std::span<const double> scores, std::span<const int> labels) {
  check_labels(scores, labels, "auc_roc");
  std::vector<size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  // Sum of positive midranks (1-based).
  double rank_sum = 0.0;
  long positives = 0;
  for (size_t start = 0; start < idx.size();) {
    size_t end = start;
    while (end < idx.size() && scores[idx[end]] == scores[idx[start]]) ++end;
    const double midrank = 0.5 * static_cast<double>(start + 1 + end);
    for (size_t p = start; p < end; ++p) {
      if (labels[idx[p]] == 1) {
        rank_sum += midrank;
        ++positives;
      }
    }
    start = end;
  }
  const long negatives = static_cast<long>(labels.size()) - positives;
  if (positives == 0 || negatives == 0) throw UsageError("auc_roc: need both positive and negative labels");
  const double np = static_cast<double>(positives);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(negatives));
}

double average_precision(std::span<const int> ranked_labels) {
  double sum = 0.0;
  int hits = 0;
  for (size_t r = 0; r < ranked_labels.size(); ++r) {
    if (ranked_labels[r] == 1) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return hits ? sum / hits : 0.0;
}

double mean_average_precision(const std::vector<std::vector<int>>& ranked_lists) {
  double sum = 0.0;
  int users = 0;
  for (const auto& list : ranked_lists) {
    if (std::find(list.begin(), list.end(), 1) == list.end()) continue;
    sum += average_precision(list);
    ++users;
  }
  if (users == 0) throw UsageError("mean_average_precision: no list has a positive");
  return sum / users;
}

std::vector<std::vector<int>> ranked_label_lists(std::span<const double> scores,
                                                 std::span<const int> labels,
                                                 std::span<const int> groups) {
  check_labels(scores, labels, "ranked_label_lists");
  if (groups.size() != scores.size()) throw UsageError("ranked_label_lists: groups differ in length");
  std::map<int, std::vector<size_t>> by_group;
  for (size_t e = 0; e < scores.size(); ++e) by_group[groups[e]].push_back(e);
  std::vector<std::vector<int>> out;
  out.reserve(by_group.size());
  for (auto& [g, members] : by_group) {
    std::stable_sort(members.begin(), members.end(),
                     [&](size_t a, size_t b) { return scores[a] > scores[b]; });
    std::vector<int> list;
    list.reserve(members.size());
    for (size_t e : members) list.push_back(labels[e]);
    out.push_back(std::move(list));
  }
  return out;
}

std::vector<PrPoint> pr_sweep(std::span<const double> scores, std::span<const int> labels) {
  check_labels(scores, labels, "pr_sweep");
  const long positives = std::count(labels.begin(), labels.end(), 1);
  if (positives == 0) throw UsageError("pr_sweep: no positive labels");
  const auto idx = order_desc(scores);
  std::vector<PrPoint> curve;
  long tp = 0, predicted = 0;
  for (size_t start = 0; start < idx.size();) {
    size_t end = start;
    while (end < idx.size() && scores[idx[end]] == scores[idx[start]]) {
      tp += labels[idx[end]];
      ++predicted;
      ++end;
    }
    curve.push_back({scores[idx[start]], static_cast<double>(tp) / static_cast<double>(predicted),
                     static_cast<double>(tp) / static_cast<double>(positives)});
    start = end;
  }
  return curve;
}

std::optional<double> precision_at_recall(const std::vector<PrPoint>& curve, double recall) {
  std::optional<double> best;
  for (const PrPoint& p : curve)
    if (p.recall >= recall && (!best || p.precision > *best)) best = p.precision;
  return best;
}

std::optional<double> recall_at_precision(const std::vector<PrPoint>& curve, double precision) {
  std::optional<double> best;
  for (const PrPoint& p : curve)
    if (p.precision >= precision && (!best || p.recall > *best)) best = p.recall;
  return best;
}

ItemSimilarity::ItemSimilarity(Eigen::MatrixXd raw) : n_(static_cast<int>(raw.rows())), dense_(std::move(raw)) {
  if (dense_.rows() != dense_.cols()) throw UsageError("ItemSimilarity: matrix must be square");
  compute_range();
}

ItemSimilarity::ItemSimilarity(const FactorModel& model)
    : n_(model.rows()), left_(model.left), right_(model.right) {
  if (model.rows() != model.cols()) throw UsageError("ItemSimilarity: factorization must be square");
  compute_range();
}

double ItemSimilarity::entry(int i, int j) const {
  if (dense_.size() > 0) return dense_(i, j);
  return left_.row(i).dot(right_.col(j));
}

double ItemSimilarity::raw(int i, int j) const {
  if (i < 0 || j < 0 || i >= n_ || j >= n_) throw UsageError("ItemSimilarity: index out of range");
  return 0.5 * (entry(i, j) + entry(j, i));
}

double ItemSimilarity::normalized(int i, int j) const {
  const double range = max_ - min_;
  if (range <= 0.0) return 1.0;
  return std::clamp((raw(i, j) - min_) / range, 0.0, 1.0);
}

void ItemSimilarity::compute_range() {
  if (n_ == 0) throw UsageError("ItemSimilarity: empty matrix");
  min_ = std::numeric_limits<double>::infinity();
  max_ = -std::numeric_limits<double>::infinity();
  auto scan = [&](const Eigen::MatrixXd& block, int row0) {
    // block holds rows row0.. of the raw matrix; symmetrize against its transpose
    for (Eigen::Index r = 0; r < block.rows(); ++r) {
      const int i = row0 + static_cast<int>(r);
      for (int j = i; j < n_; ++j) {
        const double s = 0.5 * (block(r, j) + entry(j, i));
        min_ = std::min(min_, s);
        max_ = std::max(max_, s);
      }
    }
  };
  if (dense_.size() > 0) {
    scan(dense_, 0);
    return;
  }
  constexpr int kBlock = 256;
  for (int row0 = 0; row0 < n_; row0 += kBlock) {
    const int rows = std::min(kBlock, n_ - row0);
    scan(left_.middleRows(row0, rows) * right_, row0);
  }
}

double pair_diversity(const ItemSimilarity& sim, int i, int j) { return 1.0 - sim.normalized(i, j); }

double user_diversity(const std::vector<int>& items, const ItemSimilarity& sim, bool literal_denominator) {
  const size_t n = items.size();
  if (n < 2) throw UsageError("user_diversity: need at least 2 items");
  double sum = 0.0;
  for (size_t a = 0; a < n; ++a)
    for (size_t b = a + 1; b < n; ++b) sum += pair_diversity(sim, items[a], items[b]);
  const double nd = static_cast<double>(n);
  if (literal_denominator) return 2.0 * sum / (2.0 * nd * (nd - 1.0));
  return sum / (nd * (nd - 1.0) / 2.0);
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw UsageError("percentile: empty input");
  if (!(q >= 0.0 && q <= 1.0)) throw UsageError("percentile: q must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Histogram make_histogram(std::span<const double> values, int bins, double lo, double hi) {
  if (bins < 1 || !(hi > lo)) throw UsageError("make_histogram: bad bins or range");
  Histogram h;
  h.edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b) h.edges[b] = lo + (hi - lo) * b / bins;
  h.counts.assign(bins, 0);
  for (double v : values) {
    if (v < lo || v > hi || std::isnan(v)) continue;
    int b = static_cast<int>((v - lo) / (hi - lo) * bins);
    h.counts[std::clamp(b, 0, bins - 1)]++;
  }
  return h;
}

DiversityReport diversity_report(std::vector<double> values, int bins) {
  if (values.empty()) throw UsageError("diversity_report: no users");
  DiversityReport r;
  r.median = percentile(values, 0.5);
  r.p25 = percentile(values, 0.25);
  r.histogram = make_histogram(values, bins);
  r.values = std::move(values);
  return r;
}

DiversityReport diversity_report(const std::vector<RecommendationList>& lists,
                                 const ItemSimilarity& sim, int bins, int* skipped) {
  std::vector<double> values;
  int short_lists = 0;
  for (const auto& list : lists) {
    if (list.items.size() < 2) {
      ++short_lists;
      continue;
    }
    values.push_back(user_diversity(list.item_ids(), sim));
  }
  if (skipped) *skipped = short_lists;
  return diversity_report(std::move(values), bins);
}

Skew relevance_skew(std::span<const double> scores) {
  const size_t n = scores.size();
  if (n == 0) throw UsageError("relevance_skew: empty row");
  const double lo = *std::min_element(scores.begin(), scores.end());
  const double shift = lo < 0.0 ? -lo : 0.0;
  std::vector<double> p(scores.begin(), scores.end());
  double total = 0.0;
  for (double& v : p) {
    v += shift;
    total += v;
  }
  if (total <= 0.0) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(n));
  } else {
    for (double& v : p) v /= total;
  }
  Skew s{0.0, 0.0};
  if (n > 1) {
    double h = 0.0;
    for (double v : p)
      if (v > 0.0) h -= v * std::log(v);
    s.entropy = h / std::log(static_cast<double>(n));
  }
  std::sort(p.begin(), p.end());
  double g = 0.0;
  for (size_t i = 0; i < n; ++i) g += (2.0 * static_cast<double>(i + 1) - static_cast<double>(n) - 1.0) * p[i];
  s.gini = g / static_cast<double>(n);
  return s;
}

namespace {

// Plug-in H(target | context) in nats, contexts keyed by an integer pair.
double conditional_entropy(const std::vector<InfoSample>& samples, bool with_o) {
  std::map<std::pair<int, int>, std::map<int, long>> counts;
  for (const auto& s : samples) counts[{s.x_bucket, with_o ? s.o_bucket : 0}][s.target]++;
  const double total = static_cast<double>(samples.size());
  double h = 0.0;
  for (const auto& [ctx, by_target] : counts) {
    long ctx_count = 0;
    for (const auto& [t, c] : by_target) ctx_count += c;
    for (const auto& [t, c] : by_target) {
      const double p = static_cast<double>(c) / static_cast<double>(ctx_count);
      h -= (static_cast<double>(c) / total) * std::log(p);
    }
  }
  return h;
}

}  // namespace

double feede_info_gain(const std::vector<InfoSample>& samples) {
  if (samples.empty()) throw UsageError("feede_info_gain: no samples");
  const double gain = conditional_entropy(samples, false) - conditional_entropy(samples, true);
  // Conditioning never raises the plug-in entropy; clear rounding residue.
  return gain < 0.0 ? 0.0 : gain;
}

}  // namespace hi
