// Shared types, errors and seeded randomness for the hi toolkit.

#ifndef HI_COMMON_H_
#define HI_COMMON_H_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace hi {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using SparseCols = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

// Base error; the CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or invalid input data (CLI exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

// Bad arguments or configuration (CLI exit code 1).
class UsageError : public Error {
 public:
  using Error::Error;
};

// Seeded generator. Every consumer draws from a named sub-stream of one
// root seed so components stay reproducible independently of each other.
class Rng {
 public:
  explicit Rng(uint64_t seed);
  Rng(uint64_t root_seed, std::string_view stream);

  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  uint64_t below(uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }
  double normal();

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// Stable 64-bit FNV-1a hash, used for stream names and parameter fingerprints.
uint64_t fnv1a(const void* data, size_t size, uint64_t h = 14695981039346656037ULL);
inline uint64_t fnv1a(std::string_view s) { return fnv1a(s.data(), s.size()); }

// ceil(ratio * count) that ignores floating noise such as 0.7 * 10 = 7.000...01.
int64_t ceil_fraction(double ratio, int64_t count);

void log_warning(std::string_view message);
void set_quiet(bool quiet);

}  // namespace hi

#endif  // HI_COMMON_H_
