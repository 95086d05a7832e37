// Realtime recommender over a factorized similarity matrix.
//
// Offline, H = [X^T X ; Y^T X] is factorized into A (2n x k) and B (k x n).
// Online, a session's sparse rows give scores [x, beta * y] * A * B, computed
// through the k-dimensional projection so a request costs
// O((|x| + |y|) k + n k). A model whose A has only n rows scores positives
// alone (the p2p-only variant).

#ifndef HI_REALTIME_H_
#define HI_REALTIME_H_

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>

#include "hi/candidate_gen.h"
#include "hi/factorization.h"
#include "hi/feedback_store.h"

namespace hi {

struct RtModel {
  FactorModel factors;
  double beta = 1.0;
  int n = 0;

  bool has_negative_block() const { return factors.rows() == 2 * n; }
};

struct RtOptions {
  int k = 10;
  double lambda = 0.05;
  int iters = 15;
  uint64_t seed = 1;
  double beta = 1.0;
  double tolerance = 1e-4;
  int threads = 1;
  // See FactorizeOptions::observed_only.
  bool observed_only = true;
};

// Factorizes stacked_h(fm).
RtModel train_rt(const FeedbackMatrices& fm, const RtOptions& options);
// Wraps a p2p factorization (of X^T X) as a realtime model.
RtModel p2p_rt_model(FactorModel c);

enum class Feedback { kPositive, kNegative };

Feedback parse_feedback(std::string_view name);
std::string_view to_string(Feedback feedback);

struct SessionState {
  int user = -1;
  std::map<int, double> x_row;
  std::map<int, double> y_row;

  static SessionState from_matrices(const FeedbackMatrices& fm, int user);
  bool empty() const { return x_row.empty() && y_row.empty(); }
  bool engaged(int item) const { return x_row.contains(item) || y_row.contains(item); }
};

// Latest event wins: the item moves to the support named by `feedback`.
SessionState apply_event(SessionState state, int item, Feedback feedback);

// Projection z = [x, beta * y] * A.
Eigen::RowVectorXd project_state(const RtModel& model, const SessionState& state);
// Full score row z * B.
Eigen::VectorXd score_state(const RtModel& model, const SessionState& state);
double score_item(const RtModel& model, const Eigen::RowVectorXd& projection, int item);

// Top-n excluding engaged items. An empty state yields an empty, flagged list.
RecommendationList recommend_rt(const RtModel& model, const SessionState& state, int n);

// Thread-safe session registry. Different users proceed in parallel; events
// for one user are serialized. Events can be journaled to an append-only
// file ("user<TAB>item<TAB>positive|negative") and replayed on startup.
class SessionStore {
 public:
  explicit SessionStore(int n_items) : n_items_(n_items) {}

  void open_journal(const std::filesystem::path& path);
  // Replays a journal written by this class. Returns the number of events.
  int replay_journal(const std::filesystem::path& path);

  void seed(int user, SessionState state);
  SessionState snapshot(int user);
  void record(int user, int item, Feedback feedback);

 private:
  struct Slot {
    std::mutex mutex;
    SessionState state;
  };
  Slot& slot(int user);

  int n_items_;
  std::shared_mutex registry_mutex_;
  std::unordered_map<int, std::unique_ptr<Slot>> slots_;
  std::mutex journal_mutex_;
  std::ofstream journal_;
};

}  // namespace hi

#endif  // HI_REALTIME_H_
