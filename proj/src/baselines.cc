#include "hi/baselines.h"

#include <algorithm>
#include <limits>

namespace hi {

namespace {

std::vector<ScoredItem> by_relevance(std::vector<ScoredItem> items) {
  std::stable_sort(items.begin(), items.end(), [](const ScoredItem& a, const ScoredItem& b) {
    return ranks_before(a.score, a.item, b.score, b.item);
  });
  return items;
}

}  // namespace

RecommendationList cf_da_rerank(const std::vector<ScoredItem>& candidates, const ItemSimilarity& sim,
                                double phi, int n, int user) {
  if (candidates.empty()) throw UsageError("cf_da_rerank: empty candidate pool");
  if (!(phi >= 0.0)) throw UsageError("cf_da_rerank: phi must be >= 0");
  if (n < 1) throw UsageError("cf_da_rerank: n must be >= 1");
  const auto pool = by_relevance(candidates);
  const size_t size = pool.size();
  const double hi = pool.front().score;
  const double lo = pool.back().score;
  std::vector<double> relevance(size, 1.0);
  if (hi > lo)
    for (size_t c = 0; c < size; ++c) relevance[c] = (pool[c].score - lo) / (hi - lo);

  RecommendationList out;
  out.user = user;
  out.requested = n;
  std::vector<bool> used(size, false);
  std::vector<double> diversity_sum(size, 0.0);
  const size_t take = std::min<size_t>(n, size);
  for (size_t step = 0; step < take; ++step) {
    size_t best = size;
    double best_value = -std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < size; ++c) {
      if (used[c]) continue;
      double value = relevance[c];
      if (step > 0 && phi > 0.0) value += phi * diversity_sum[c] / static_cast<double>(step);
      if (value > best_value) {
        best_value = value;
        best = c;
      }
    }
    used[best] = true;
    out.items.push_back(pool[best]);
    for (size_t c = 0; c < size; ++c)
      if (!used[c]) diversity_sum[c] += pair_diversity(sim, pool[c].item, pool[best].item);
  }
  out.short_list = static_cast<int>(out.items.size()) < n;
  return out;
}

RecommendationList cf_dm_rerank(const std::vector<ScoredItem>& candidates, const ItemSimilarity& sim,
                                int n, int user) {
  if (candidates.empty()) throw UsageError("cf_dm_rerank: empty candidate pool");
  if (n < 1) throw UsageError("cf_dm_rerank: n must be >= 1");
  const auto pool = by_relevance(candidates);
  const size_t size = pool.size();
  RecommendationList out;
  out.user = user;
  out.requested = n;
  std::vector<bool> used(size, false);
  std::vector<double> diversity_sum(size, 0.0);
  auto select = [&](size_t c) {
    used[c] = true;
    out.items.push_back(pool[c]);
    for (size_t o = 0; o < size; ++o)
      if (!used[o]) diversity_sum[o] += pair_diversity(sim, pool[o].item, pool[c].item);
  };

  if (n == 1 || size == 1) {
    select(0);
  } else {
    size_t best_a = 0, best_b = 1;
    double best = -1.0;
    for (size_t a = 0; a < size; ++a) {
      for (size_t b = a + 1; b < size; ++b) {
        const double d = pair_diversity(sim, pool[a].item, pool[b].item);
        if (d > best) {
          best = d;
          best_a = a;
          best_b = b;
        }
      }
    }
    select(best_a);
    select(best_b);
  }
  const size_t take = std::min<size_t>(n, size);
  while (out.items.size() < take) {
    size_t best = size;
    double best_value = -1.0;
    for (size_t c = 0; c < size; ++c) {
      if (!used[c] && diversity_sum[c] > best_value) {
        best_value = diversity_sum[c];
        best = c;
      }
    }
    select(best);
  }
  out.short_list = static_cast<int>(out.items.size()) < n;
  return out;
}

std::string_view to_string(Pipeline pipeline) {
  switch (pipeline) {
    case Pipeline::kRealtime: return "realtime";
    case Pipeline::kBatchMf: return "batch-mf";
    case Pipeline::kNeural: return "neural";
  }
  return "?";
}

std::string_view to_string(Rerank rerank) {
  switch (rerank) {
    case Rerank::kNone: return "none";
    case Rerank::kDiversityAugmented: return "diversity-augmented";
    case Rerank::kDiversityMaximized: return "diversity-maximized";
  }
  return "?";
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"CF-RT", "CF-MF", "CF-NN", "CF-DA",
                                                 "CF-DM", "HI-RT", "HI-NN"};
  return names;
}

Preset preset(std::string_view name) {
  Preset p;
  p.name = std::string(name);
  if (name == "CF-RT") {
    p.pipeline = Pipeline::kRealtime;
  } else if (name == "HI-RT") {
    p.pipeline = Pipeline::kRealtime;
    p.use_negative = true;
    p.beta = 1.0;
  } else if (name == "CF-DM") {
    p.pipeline = Pipeline::kRealtime;
    p.rerank = Rerank::kDiversityMaximized;
    p.pool = 5 * p.n;
  } else if (name == "CF-MF") {
    p.pipeline = Pipeline::kBatchMf;
  } else if (name == "CF-DA") {
    p.pipeline = Pipeline::kBatchMf;
    p.rerank = Rerank::kDiversityAugmented;
  } else if (name == "HI-NN" || name == "CF-NN") {
    p.pipeline = Pipeline::kNeural;
    p.use_negative = name == "HI-NN";
    p.ratio_p2p = p.use_negative ? 0.67 : 1.0;
    p.nn.use_negative = p.use_negative;
  } else {
    std::string valid;
    for (const auto& n : preset_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw UsageError("unknown algorithm '" + std::string(name) + "' (valid: " + valid + ")");
  }
  p.nn.k = p.k;
  return p;
}

}  // namespace hi
