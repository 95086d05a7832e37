#include "hi/factorization.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <thread>

namespace hi {

namespace {

constexpr char kMagic[4] = {'H', 'I', 'F', 'M'};
constexpr uint16_t kVersion = 1;

template <typename Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    fn(0, count);
    return;
  }
  std::vector<std::jthread> pool;
  const int chunk = (count + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int begin = t * chunk;
    const int end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
}

using ConstFactorView = Eigen::Map<const Eigen::MatrixXd>;

// Ridge solves for every outer vector of a compressed sparse matrix against
// the fixed factors `other` (k x n_other, column j = factors of index j).
// Results are written row-major into `out` (n_outer x k).
void solve_block(const int* outer, const int* inner, const double* values, int n_outer,
                 const ConstFactorView& other, double lambda, int threads, double* out) {
  const int k = static_cast<int>(other.rows());
  parallel_for(n_outer, threads, [&](int begin, int end) {
    Eigen::MatrixXd gathered;
    Eigen::MatrixXd normal(k, k);
    Eigen::VectorXd rhs(k);
    for (int a = begin; a < end; ++a) {
      Eigen::Map<Eigen::RowVectorXd> row(out + static_cast<size_t>(a) * k, k);
      const int lo = outer[a];
      const int hi = outer[a + 1];
      const int count = hi - lo;
      if (count == 0) {
        row.setZero();
        continue;
      }
      if (gathered.rows() < count) gathered.resize(count, k);
      rhs.setZero();
      for (int p = 0; p < count; ++p) {
        const auto f = other.col(inner[lo + p]);
        gathered.row(p) = f.transpose();
        rhs.noalias() += values[lo + p] * f;
      }
      const auto g = gathered.topRows(count);
      normal.noalias() = g.transpose() * g;
      normal.diagonal().array() += lambda;
      row = normal.ldlt().solve(rhs).transpose();
    }
  });
}

double observed_loss(const SparseRows& m, const RowMatrix& left, const Eigen::MatrixXd& right) {
  double loss = 0.0;
  for (int a = 0; a < m.outerSize(); ++a) {
    for (SparseRows::InnerIterator it(m, a); it; ++it) {
      const double r = it.value() - left.row(a).dot(right.col(it.col()));
      loss += r * r;
    }
  }
  return loss;
}

void write_u16(std::ostream& out, uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  out.write(reinterpret_cast<const char*>(b), 2);
}

void write_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

uint16_t read_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

// The target platforms are little-endian; doubles are written as-is.
static_assert(sizeof(double) == 8);

}  // namespace

std::string_view to_string(SimilarityKind kind) {
  switch (kind) {
    case SimilarityKind::kP2p: return "p2p";
    case SimilarityKind::kN2p: return "n2p";
    case SimilarityKind::kStacked: return "stacked";
  }
  return "p2p";
}

SimilarityKind parse_similarity_kind(std::string_view name) {
  if (name == "p2p") return SimilarityKind::kP2p;
  if (name == "n2p") return SimilarityKind::kN2p;
  if (name == "stacked") return SimilarityKind::kStacked;
  throw DataError("unknown similarity kind '" + std::string(name) + "'");
}

SimilarityInput gram_p2p(const FeedbackMatrices& fm) {
  SparseRows g = (fm.x_cols().transpose() * fm.x_cols()).pruned();
  g.makeCompressed();
  return {std::move(g), SimilarityKind::kP2p};
}

SimilarityInput cross_n2p(const FeedbackMatrices& fm) {
  SparseRows c = (fm.y_cols().transpose() * fm.x_cols()).pruned();
  c.makeCompressed();
  return {std::move(c), SimilarityKind::kN2p};
}

SimilarityInput stacked_h(const FeedbackMatrices& fm) {
  const SparseRows top = gram_p2p(fm).matrix;
  const SparseRows bottom = cross_n2p(fm).matrix;
  const int n = fm.n();
  SparseRows h(2 * n, n);
  h.reserve(top.nonZeros() + bottom.nonZeros());
  // Row-major blocks stack by appending outer vectors.
  for (int r = 0; r < n; ++r) {
    h.startVec(r);
    for (SparseRows::InnerIterator it(top, r); it; ++it) h.insertBack(r, it.col()) = it.value();
  }
  for (int r = 0; r < n; ++r) {
    h.startVec(n + r);
    for (SparseRows::InnerIterator it(bottom, r); it; ++it)
      h.insertBack(n + r, it.col()) = it.value();
  }
  h.finalize();
  return {std::move(h), SimilarityKind::kStacked};
}

Eigen::VectorXd FactorModel::reconstruct_row(int row) const {
  if (row < 0 || row >= rows()) throw UsageError("reconstruct_row: row out of range");
  return (left.row(row) * right).transpose();
}

Eigen::MatrixXd FactorModel::reconstruct() const { return left * right; }

FactorModel factorize(const SimilarityInput& input, const FactorizeOptions& options) {
  if (options.k < 1) throw UsageError("factorize: k must be >= 1");
  if (options.iters < 1) throw UsageError("factorize: iters must be >= 1");
  if (options.lambda < 0.0) throw UsageError("factorize: lambda must be >= 0");
  const SparseRows& m = input.matrix;
  for (int64_t p = 0; p < m.nonZeros(); ++p) {
    if (!std::isfinite(m.valuePtr()[p])) throw DataError("factorize: non-finite input value");
  }
  const int n1 = static_cast<int>(m.rows());
  const int n2 = static_cast<int>(m.cols());
  const int k = options.k;

  FactorModel model;
  model.k = k;
  model.lambda = options.lambda;
  model.seed = options.seed;
  model.kind = input.kind;
  model.observed_only = options.observed_only;
  model.left.resize(n1, k);
  model.right.resize(k, n2);

  Rng rng(options.seed, "factorize_init");
  const double scale = 1.0 / std::sqrt(static_cast<double>(k));
  for (int a = 0; a < n1; ++a)
    for (int c = 0; c < k; ++c) model.left(a, c) = scale * rng.uniform();
  for (int b = 0; b < n2; ++b)
    for (int c = 0; c < k; ++c) model.right(c, b) = scale * rng.uniform();

  const double lambda = options.lambda;
  auto penalty = [&] {
    return lambda * (model.left.squaredNorm() + model.right.squaredNorm());
  };

  if (options.observed_only) {
    SparseCols by_col = m;
    by_col.makeCompressed();
    SparseRows by_row = m;
    by_row.makeCompressed();
    const double count = std::max<double>(1.0, static_cast<double>(m.nonZeros()));
    auto objective = [&] { return observed_loss(by_row, model.left, model.right) + penalty(); };
    model.objective.push_back(objective());
    for (int it = 0; it < options.iters; ++it) {
      const double before = model.objective.back();
      solve_block(by_row.outerIndexPtr(), by_row.innerIndexPtr(), by_row.valuePtr(), n1,
                  ConstFactorView(model.right.data(), k, n2), lambda, options.threads,
                  model.left.data());
      model.objective.push_back(objective());
      // Rt is column-major k x n2, i.e. row-major n2 x k: solve_block's layout.
      solve_block(by_col.outerIndexPtr(), by_col.innerIndexPtr(), by_col.valuePtr(), n2,
                  ConstFactorView(model.left.data(), k, n1), lambda, options.threads,
                  model.right.data());
      const double loss = observed_loss(by_row, model.left, model.right);
      model.objective.push_back(loss + penalty());
      model.training_error.push_back(std::sqrt(loss / count));
      model.iters = it + 1;
      const double after = model.objective.back();
      if (options.tolerance > 0.0 && (before - after) < options.tolerance * std::max(before, 1e-300))
        break;
    }
  } else {
    const Eigen::MatrixXd dense = Eigen::MatrixXd(m);
    const double count = std::max<double>(1.0, static_cast<double>(n1) * n2);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(k, k);
    auto loss = [&] { return (dense - model.left * model.right).squaredNorm(); };
    model.objective.push_back(loss() + penalty());
    for (int it = 0; it < options.iters; ++it) {
      const double before = model.objective.back();
      {
        const Eigen::MatrixXd normal = model.right * model.right.transpose() + lambda * eye;
        const Eigen::MatrixXd rhs = model.right * dense.transpose();
        model.left = normal.ldlt().solve(rhs).transpose();
      }
      model.objective.push_back(loss() + penalty());
      {
        const Eigen::MatrixXd normal = model.left.transpose() * model.left + lambda * eye;
        const Eigen::MatrixXd rhs = model.left.transpose() * dense;
        model.right = normal.ldlt().solve(rhs);
      }
      const double l = loss();
      model.objective.push_back(l + penalty());
      model.training_error.push_back(std::sqrt(l / count));
      model.iters = it + 1;
      const double after = model.objective.back();
      if (options.tolerance > 0.0 && (before - after) < options.tolerance * std::max(before, 1e-300))
        break;
    }
  }
  return model;
}

void save_factor_model(const FactorModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file " + path.string());
  out.write(kMagic, 4);
  write_u16(out, kVersion);
  write_u16(out, static_cast<uint16_t>(model.k));
  write_u32(out, static_cast<uint32_t>(model.rows()));
  write_u32(out, static_cast<uint32_t>(model.cols()));
  out.write(reinterpret_cast<const char*>(model.left.data()),
            static_cast<std::streamsize>(sizeof(double) * model.left.size()));
  // Rt row-major: component c across all columns.
  const RowMatrix rt = model.right;
  out.write(reinterpret_cast<const char*>(rt.data()),
            static_cast<std::streamsize>(sizeof(double) * rt.size()));
  if (!out) throw DataError("failed writing model file " + path.string());

  std::ofstream meta(path.string() + ".meta");
  meta.precision(17);
  meta << "lambda=" << model.lambda << '\n'
       << "iters=" << model.iters << '\n'
       << "seed=" << model.seed << '\n'
       << "kind=" << to_string(model.kind) << '\n'
       << "observed_only=" << (model.observed_only ? 1 : 0) << '\n';
}

FactorModel load_factor_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read model file " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw DataError(path.string() + ": bad magic");
  const uint16_t version = read_u16(in);
  if (version != kVersion) throw DataError(path.string() + ": unsupported version");
  FactorModel model;
  model.k = read_u16(in);
  const uint32_t n1 = read_u32(in);
  const uint32_t n2 = read_u32(in);
  model.left.resize(n1, model.k);
  RowMatrix rt(model.k, n2);
  in.read(reinterpret_cast<char*>(model.left.data()),
          static_cast<std::streamsize>(sizeof(double) * model.left.size()));
  in.read(reinterpret_cast<char*>(rt.data()), static_cast<std::streamsize>(sizeof(double) * rt.size()));
  if (!in) throw DataError(path.string() + ": truncated model file");
  model.right = rt;

  std::ifstream meta(path.string() + ".meta");
  std::string line;
  while (meta && std::getline(meta, line)) {
    const size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "lambda") model.lambda = std::stod(value);
    else if (key == "iters") model.iters = std::stoi(value);
    else if (key == "seed") model.seed = std::stoull(value);
    else if (key == "kind") model.kind = parse_similarity_kind(value);
    else if (key == "observed_only") model.observed_only = value == "1";
  }
  return model;
}

}  // namespace hi
