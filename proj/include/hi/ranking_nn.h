// Two-channel embedding ranker.
//
// Four embedding maps turn sparse feedback vectors into k-dim latents:
//   U+ = fU+(X_i)   V+ = fV+(X_:j)   (p2p channel)
//   U- = fU-(Y_i)   V- = fV-(X_:j)   (n2p channel)
// giving r+ = <U+, V+>, r- = <U-, V->, r* = U- W U+^T. A small head g maps
// (r+, r-, r*) to a probability. Phase 1 fits the maps and W to the observed
// x_ij with squared error on all three scores; phase 2 freezes them and fits
// g with cross-entropy.

#ifndef HI_RANKING_NN_H_
#define HI_RANKING_NN_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hi/common.h"
#include "hi/factorization.h"
#include "hi/feedback_store.h"

namespace hi {

struct SparseVector {
  std::vector<int> index;
  std::vector<double> value;

  size_t size() const { return index.size(); }
  bool empty() const { return index.empty(); }
};

// Row `row` of a compressed sparse matrix, optionally without one column.
SparseVector sparse_row(const SparseRows& m, int row, int skip_col = -1);
SparseVector sparse_col(const SparseCols& m, int col, int skip_row = -1);

// Linear map, or one rectified hidden layer followed by a linear layer.
// Inputs are scaled by 1/sqrt(nnz) before the first layer when
// `normalize_input` is set. No bias terms, so zero input maps to zero.
class EmbeddingMap {
 public:
  EmbeddingMap() = default;
  EmbeddingMap(int input_dim, int k, int hidden = 0, bool normalize_input = true);

  struct Trace {
    double scale = 0.0;
    Eigen::VectorXd pre;  // hidden pre-activation (hidden layer only)
    Eigen::VectorXd hidden;
  };

  Eigen::VectorXd forward(const SparseVector& input, Trace* trace = nullptr) const;
  // Accumulates d(loss)/d(params) into first_grad/second_grad given d(loss)/d(output).
  void backward(const SparseVector& input, const Trace& trace, const Eigen::VectorXd& d_out,
                RowMatrix& first_grad, RowMatrix& second_grad) const;

  double input_scale(const SparseVector& input) const;

  int input_dim() const { return static_cast<int>(first.rows()); }
  int k() const { return hidden_units() ? static_cast<int>(second.cols()) : static_cast<int>(first.cols()); }
  int hidden_units() const { return static_cast<int>(second.rows()); }

  RowMatrix first;   // input_dim x (hidden ? hidden : k)
  RowMatrix second;  // hidden x k, empty for the linear form
  bool normalize_input = true;
};

// g: 3 -> hidden (tanh) -> 1 (logistic).
struct Head {
  Eigen::MatrixXd w1;  // hidden x 3
  Eigen::VectorXd b1;
  Eigen::VectorXd w2;
  double b2 = 0.0;

  double logit(const Eigen::Vector3d& features, Eigen::VectorXd* activation = nullptr) const;
  double predict(const Eigen::Vector3d& features) const;
};

struct HiNnHyper {
  int k = 10;
  double alpha = 1.0;
  double gamma = 1.0;
  double lambda_pos = 0.01;
  double lambda_neg = 0.01;
  double learning_rate = 0.05;
  int batch_size = 256;
  int epochs = 30;
  double head_learning_rate = 0.05;
  int head_epochs = 30;
  int head_hidden = 8;
  // Share of observed entries withheld from phase 1 and used to fit g, so the
  // head sees channel scores on entries the maps were not fitted to. 0 fits
  // both phases on everything.
  double head_holdout = 0.2;
  // Hidden units inside each embedding map; 0 keeps them linear.
  int embedding_hidden = 0;
  // False drops fU-, fV- and W: the p2p-only ranker.
  bool use_negative = true;
  // Observed events needed for the warm path.
  int warm_threshold = 5;
  uint64_t seed = 1;
};

struct HiNnModel {
  int m = 0;
  int n = 0;
  HiNnHyper hyper;
  EmbeddingMap u_pos, v_pos, u_neg, v_neg;
  Eigen::MatrixXd w;  // k x k
  Head head;
  // Factor-to-embedding scales set by MF initialization; used by the cold path.
  double user_scale_pos = 1.0, item_scale_pos = 1.0;
  double user_scale_neg = 1.0, item_scale_neg = 1.0;

  int k() const { return hyper.k; }
  // Hash of the embedding parameters (maps and W).
  uint64_t embedding_fingerprint() const;
};

// Pre-trained factorizations: c over X^T X (P = left, Q = right) and d over
// Y^T X (R = left, S = right).
struct MfFactors {
  const FactorModel* c = nullptr;
  const FactorModel* d = nullptr;
};

// Random initialization, or (linear maps with `mf` given) initialization from
// the factorizations: fU+ <- P, fV+ <- X P (P^T P)^-1, fU- <- R,
// fV- <- Y R (R^T R)^-1, each pair rescaled to fit x by least squares.
HiNnModel make_hi_nn(const FeedbackMatrices& fm, const HiNnHyper& hyper,
                     const MfFactors& mf = {});

struct ChannelInputs {
  SparseVector x_row;
  SparseVector y_row;
  SparseVector x_col;
};

// Inputs for (user, item). With `leave_one_out` the (user, item) entry itself
// is removed so a training target never appears in its own inputs.
ChannelInputs channel_inputs(const FeedbackMatrices& fm, int user, int item, bool leave_one_out);

struct ChannelScores {
  double r_pos = 0.0;
  double r_neg = 0.0;
  double r_int = 0.0;
  Eigen::VectorXd u_pos, v_pos, u_neg, v_neg;

  Eigen::Vector3d features() const { return {r_pos, r_neg, r_int}; }
};

ChannelScores channel_scores(const HiNnModel& model, const ChannelInputs& inputs);
// Scores from latents directly: r+ = <U+,V+>, r- = <U-,V->, r* = U- W U+^T.
ChannelScores channel_scores_from_latents(const Eigen::VectorXd& u_pos, const Eigen::VectorXd& v_pos,
                                          const Eigen::VectorXd& u_neg, const Eigen::VectorXd& v_neg,
                                          const Eigen::MatrixXd& w);

struct TrainingExample {
  int user;
  int item;
  double target;
};

// All observed (o = 1) entries of fm with target x_ij.
std::vector<TrainingExample> observed_examples(const FeedbackMatrices& fm);

// Observed entries split by a seeded per-entry hash into the phase-1 set and
// the head set. Either side falls back to all entries if it would be empty.
struct ExampleSplit {
  std::vector<TrainingExample> embedding;
  std::vector<TrainingExample> head;
};
ExampleSplit split_examples(const FeedbackMatrices& fm, const HiNnHyper& hyper);

struct Phase1Gradients {
  RowMatrix u_pos_first, u_pos_second, v_pos_first, v_pos_second;
  RowMatrix u_neg_first, u_neg_second, v_neg_first, v_neg_second;
  Eigen::MatrixXd w;

  explicit Phase1Gradients(const HiNnModel& model);
  void set_zero();
};

// Summed squared-error loss of the three scores plus the L2 terms on the
// latents produced for this batch. Throws UsageError on an empty batch.
// Inputs use leave-one-out. Accumulates gradients when `grad` is non-null.
double loss_phase1(const HiNnModel& model, const FeedbackMatrices& fm,
                   const std::vector<TrainingExample>& batch, Phase1Gradients* grad = nullptr);

struct HeadGradients {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::VectorXd w2;
  double b2 = 0.0;

  explicit HeadGradients(const Head& head);
  void set_zero();
};

// Summed binary cross-entropy of g over (features, target) pairs.
double loss_phase2(const Head& head, const std::vector<Eigen::Vector3d>& features,
                   const std::vector<double>& targets, HeadGradients* grad = nullptr);

struct TrainingCurve {
  // Mean per-example loss per epoch.
  std::vector<double> epoch_loss;
};

// Without explicit examples both phases use split_examples(fm, hyper).
TrainingCurve train_phase1(HiNnModel& model, const FeedbackMatrices& fm);
TrainingCurve train_phase1(HiNnModel& model, const FeedbackMatrices& fm,
                           std::vector<TrainingExample> examples);
// Leaves every embedding parameter untouched.
TrainingCurve train_phase2(HiNnModel& model, const FeedbackMatrices& fm);
TrainingCurve train_phase2(HiNnModel& model, const FeedbackMatrices& fm,
                           const std::vector<TrainingExample>& examples);

// Full forward pass; inputs are the user's and item's complete rows.
double predict_warm(const HiNnModel& model, const FeedbackMatrices& fm, int user, int item);
// Same from explicit inputs, e.g. a live session's rows.
double predict_warm(const HiNnModel& model, const ChannelInputs& inputs);

// Latent approximations from the factorizations: (X P)_i and (Y R)_i.
Eigen::VectorXd approximate_u_pos(const FeedbackMatrices& fm, const FactorModel& c, int user);
Eigen::VectorXd approximate_u_neg(const FeedbackMatrices& fm, const FactorModel& d, int user);
// row . left, for any sparse feedback row.
Eigen::VectorXd approximate_latent(const SparseVector& row, const FactorModel& f);
// S_{:,j} Q_{:,j}^T.
Eigen::MatrixXd approximate_w(const FactorModel& c, const FactorModel& d, int item);

// Cold path: U+, U- and W come from the factorizations (rescaled into the
// embedding space), V+ and V- from the item maps, then g.
double predict_cold(const HiNnModel& model, const MfFactors& mf, const FeedbackMatrices& fm,
                    int user, int item);
double predict_cold(const HiNnModel& model, const MfFactors& mf, const ChannelInputs& inputs, int item);

// Warm path when the user has at least warm_threshold observed events.
double predict(const HiNnModel& model, const MfFactors& mf, const FeedbackMatrices& fm, int user,
               int item);
double predict(const HiNnModel& model, const MfFactors& mf, const ChannelInputs& inputs, int item);

// Checkpoint: header {magic "HINN", u16 version, u16 k, u32 m, u32 n}, then
// tagged sections (4-byte tag, u32 rows, u32 cols, float64 row-major data).
// Hyperparameters go to the "<path>.meta" sidecar.
void save_hi_nn(const HiNnModel& model, const std::filesystem::path& path);
HiNnModel load_hi_nn(const std::filesystem::path& path);

}  // namespace hi

#endif  // HI_RANKING_NN_H_
