// Experiment orchestration: configuration, evaluation of a preset on a
// temporal split, comparison tables, the closed-loop topic simulator and
// latency measurement.

#ifndef HI_HARNESS_H_
#define HI_HARNESS_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hi/baselines.h"
#include "hi/feedback_store.h"
#include "hi/metrics.h"
#include "hi/ranking_nn.h"
#include "hi/realtime.h"

namespace hi {

struct ExperimentConfig {
  std::string dataset;
  std::string encoding = "binary";
  double threshold = 4.0;
  std::string algo = "HI-RT";
  double split_ratio = 0.8;
  uint64_t seed = 1;
  std::string out;
  int threads = 1;
  int bins = 20;
  // Preset overrides.
  std::optional<int> k, n, iters, pool, epochs, head_epochs;
  std::optional<double> lambda, beta, phi, ratio, alpha, gamma, learning_rate;
};

ExperimentConfig load_config(const std::filesystem::path& path);
// The preset for config.algo with every override applied.
Preset resolve_preset(const ExperimentConfig& config);
// Config plus every resolved preset field; loading it back reproduces the run.
std::string resolved_config_json(const ExperimentConfig& config);
Encoding resolve_encoding(const ExperimentConfig& config);

struct EvalReport {
  std::string algo;
  std::optional<double> auc;
  std::optional<double> map;
  std::optional<double> precision_at_recall;  // recall = 0.8
  std::optional<double> recall_at_precision;  // precision = 0.85
  std::optional<DiversityReport> diversity;
  long test_examples = 0;
  int users_listed = 0;
  // Test users whose list had fewer than 2 items (no diversity value).
  int users_without_list = 0;
  std::vector<RecommendationList> lists;
};

struct PreparedData {
  Dataset dataset;
  SplitPair split;
};

// Ingests and splits config.dataset. Throws DataError when it is missing.
PreparedData prepare_data(const ExperimentConfig& config);

// Trains the neural ranker of a neural preset. The head is fitted on the
// latest head_holdout share of the training log and the maps on the rest.
HiNnModel train_ranker(const Preset& preset, const PreparedData& data, const MfFactors& mf,
                       uint64_t seed);

EvalReport evaluate_preset(const Preset& preset, const PreparedData& data, uint64_t seed,
                           int threads = 1, int bins = 20);

// Flat "key=value" text; absent values print as "absent".
std::string format_report(const EvalReport& report);
// user<TAB>rank<TAB>item<TAB>score<TAB>channel with raw ids, rank from 1.
std::string format_recommendations(const std::vector<RecommendationList>& lists, const Dataset& data);
// bin_low,bin_high,count
std::string format_histogram(const std::optional<DiversityReport>& diversity, int bins = 20);

// Evaluates config.algo; with config.out set, writes report.txt,
// recommendations.tsv, diversity_hist.csv and config.json there.
EvalReport run_experiment(const ExperimentConfig& config);

// One table: metric rows, one column per algorithm.
std::string compare_table(const std::vector<EvalReport>& reports);
std::vector<EvalReport> run_compare(const ExperimentConfig& config, const std::vector<std::string>& algos);

struct LoopConfig {
  TopicConfig topics;
  // Share of slots from the p2p channel; 1.0 is pure p2p.
  double ratio_p2p = 1.0;
  int rounds = 20;
  int n = 5;
  int k = 10;
  double lambda = 0.05;
  int iters = 15;
  uint64_t seed = 1;
};

struct LoopRound {
  int round = 0;
  // Mean over users of the topic entropy of their list, divided by log(topics).
  double entropy = 0.0;
  double diversity = 0.0;
  long log_size = 0;
  int users_listed = 0;
};

struct LoopState {
  std::vector<LoopRound> rounds;
  std::vector<Interaction> log;
};

// Each round: recommend n new items per user, sample responses from the
// ground-truth model, append them to the log and retrain from scratch.
// Throws UsageError for fewer than 2 rounds.
LoopState simulate_loop(const LoopConfig& config);

// round,entropy,diversity,log_size,users_listed
std::string format_loop(const LoopState& state);

// Writes diversity_hist.csv for a report.
void emit_plot_data(const EvalReport& report, const std::filesystem::path& dir, int bins = 20);
// Writes loop_rounds.csv.
void emit_plot_data(const LoopState& state, const std::filesystem::path& dir);

struct LatencyStats {
  double mean_ms = 0.0;
  double p99_ms = 0.0;
  int requests = 0;
};

// Times recommend_rt over `requests` calls cycling through `states`.
LatencyStats benchmark_recommend_rt(const RtModel& model, const std::vector<SessionState>& states,
                                    int requests, int n);

}  // namespace hi

#endif  // HI_HARNESS_H_
