// Item-item similarity inputs and their rank-k factorization by alternating
// least squares.
//
//   gram_p2p:  X^T X            (n x n, symmetric)
//   cross_n2p: Y^T X            (n x n)
//   stacked_h: [X^T X ; Y^T X]  (2n x n)

#ifndef HI_FACTORIZATION_H_
#define HI_FACTORIZATION_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hi/common.h"
#include "hi/feedback_store.h"

namespace hi {

enum class SimilarityKind { kP2p, kN2p, kStacked };

std::string_view to_string(SimilarityKind kind);
SimilarityKind parse_similarity_kind(std::string_view name);

struct SimilarityInput {
  SparseRows matrix;
  SimilarityKind kind;
};

SimilarityInput gram_p2p(const FeedbackMatrices& fm);
SimilarityInput cross_n2p(const FeedbackMatrices& fm);
SimilarityInput stacked_h(const FeedbackMatrices& fm);

struct FactorizeOptions {
  int k = 10;
  double lambda = 0.05;
  int iters = 15;
  // Zeros of the input are unobserved and do not enter the loss.
  bool observed_only = true;
  uint64_t seed = 1;
  // Stop once the relative objective improvement of a full sweep drops below
  // this value. Zero disables early stopping.
  double tolerance = 1e-4;
  int threads = 1;
};

// M ~= L * Rt with L: n1 x k and Rt: k x n2.
struct FactorModel {
  RowMatrix left;
  Eigen::MatrixXd right;  // k x n2, column j holds item j's factors
  int k = 0;
  double lambda = 0.0;
  int iters = 0;
  uint64_t seed = 0;
  SimilarityKind kind = SimilarityKind::kP2p;
  bool observed_only = true;
  // RMSE over the fitted entries after each sweep.
  std::vector<double> training_error;
  // Regularized objective after each half-sweep (starts with the initial value).
  std::vector<double> objective;

  int rows() const { return static_cast<int>(left.rows()); }
  int cols() const { return static_cast<int>(right.cols()); }

  // Row r of L * Rt.
  Eigen::VectorXd reconstruct_row(int row) const;
  // Dense L * Rt; callers are responsible for the memory budget.
  Eigen::MatrixXd reconstruct() const;
};

// Throws DataError on non-finite input values and UsageError on bad options.
FactorModel factorize(const SimilarityInput& input, const FactorizeOptions& options);

// Binary layout: 16-byte header {magic "HIFM", u16 version, u16 k, u32 n1,
// u32 n2} then L row-major and Rt row-major as little-endian float64.
// The sidecar "<path>.meta" carries lambda, iters, seed and kind.
void save_factor_model(const FactorModel& model, const std::filesystem::path& path);
FactorModel load_factor_model(const std::filesystem::path& path);

}  // namespace hi

#endif  // HI_FACTORIZATION_H_
