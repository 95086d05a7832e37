// Diversity re-ranking baselines and the named algorithm presets.

#ifndef HI_BASELINES_H_
#define HI_BASELINES_H_

#include <string>
#include <string_view>
#include <vector>

#include "hi/candidate_gen.h"
#include "hi/metrics.h"
#include "hi/ranking_nn.h"

namespace hi {

// Greedy relevance + phi * diversity. Relevance is min-max normalized over the
// pool (a constant pool normalizes to 1); diversity is the mean pair diversity
// to the items already selected, so the first pick is pure relevance. Ties go
// to the better-ranked candidate. Output scores are the original relevance.
RecommendationList cf_da_rerank(const std::vector<ScoredItem>& candidates, const ItemSimilarity& sim,
                                double phi, int n, int user = -1);

// Greedy dispersion over the pool: start from the most dissimilar pair, then
// repeatedly add the item with the largest summed diversity to the selection.
// Ties go to the better-ranked candidate. Output is in selection order.
RecommendationList cf_dm_rerank(const std::vector<ScoredItem>& pool, const ItemSimilarity& sim, int n,
                                int user = -1);

enum class Pipeline {
  kRealtime,  // session scoring through a factorized similarity
  kBatchMf,   // static p2p (and optionally n2p) candidate scores
  kNeural,    // two-channel embedding ranker over an MF candidate pool
};

enum class Rerank { kNone, kDiversityAugmented, kDiversityMaximized };

std::string_view to_string(Pipeline pipeline);
std::string_view to_string(Rerank rerank);

struct Preset {
  std::string name;
  Pipeline pipeline = Pipeline::kRealtime;
  Rerank rerank = Rerank::kNone;
  // Negative feedback enters the model: the stacked block for realtime, the
  // n2p channel for batch and neural pipelines.
  bool use_negative = false;
  int k = 10;
  double lambda = 0.05;
  int iters = 15;
  double beta = 0.0;       // realtime negative-block weight
  double ratio_p2p = 1.0;  // candidate slots drawn from p2p
  int n = 10;              // final list length
  int pool = 50;           // candidate pool before re-ranking or neural ranking
  double phi = 0.5;        // CF-DA diversity weight
  HiNnHyper nn;
};

// CF-RT, CF-MF, CF-NN, CF-DA, CF-DM, HI-RT, HI-NN. Unknown names throw
// UsageError listing the valid ones.
Preset preset(std::string_view name);
const std::vector<std::string>& preset_names();

}  // namespace hi

#endif  // HI_BASELINES_H_
