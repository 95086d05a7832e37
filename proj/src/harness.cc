#include "hi/harness.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "hi/candidate_gen.h"
#include "hi/ranking_nn.h"

namespace hi {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "absent"; }

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

template <typename T>
void read_optional(const json& j, const char* key, std::optional<T>& field) {
  if (j.contains(key) && !j.at(key).is_null()) field = j.at(key).get<T>();
}

template <typename T>
void put_optional(json& j, const char* key, const std::optional<T>& field) {
  if (field) j[key] = *field;
}

FactorizeOptions factor_options(const Preset& p, uint64_t seed, int threads) {
  FactorizeOptions fo;
  fo.k = p.k;
  fo.lambda = p.lambda;
  fo.iters = p.iters;
  fo.seed = seed;
  fo.threads = threads;
  fo.observed_only = true;
  return fo;
}

bool row_empty(const SparseRows& m, int row) {
  return m.outerIndexPtr()[row + 1] == m.outerIndexPtr()[row];
}

// Static p2p ranking; an empty positive row yields no list.
RecommendationList p2p_list(const FeedbackMatrices& fm, const FactorModel& c, int user, int n) {
  RecommendationList out;
  out.user = user;
  out.requested = n;
  if (!row_empty(fm.x(), user))
    out.items = top_n(p2p_scores(fm, c, user), n, Channel::kP2p,
                      [&](int j) { return fm.observed(user, j); });
  out.short_list = static_cast<int>(out.items.size()) < n;
  return out;
}

struct ScoredTest {
  std::vector<double> scores;
  std::vector<int> labels;
  std::vector<int> users;

  void add(double s, bool label, int user) {
    scores.push_back(s);
    labels.push_back(label ? 1 : 0);
    users.push_back(user);
  }
};

void fill_relevance(EvalReport& r, const ScoredTest& t) {
  r.test_examples = static_cast<long>(t.scores.size());
  const long pos = std::count(t.labels.begin(), t.labels.end(), 1);
  if (pos == 0 || pos == r.test_examples) return;
  r.auc = auc_roc(t.scores, t.labels);
  r.map = mean_average_precision(ranked_label_lists(t.scores, t.labels, t.users));
  const auto curve = pr_sweep(t.scores, t.labels);
  r.precision_at_recall = precision_at_recall(curve, 0.8);
  r.recall_at_precision = recall_at_precision(curve, 0.85);
}

std::vector<int> test_users(const SplitPair& split) {
  std::set<int> users;
  for (const auto& ex : split.test) users.insert(ex.user);
  return {users.begin(), users.end()};
}

void fill_diversity(EvalReport& r, const ItemSimilarity& sim, int bins) {
  std::vector<double> values;
  for (const auto& list : r.lists) {
    if (list.items.size() >= 2) {
      values.push_back(user_diversity(list.item_ids(), sim));
      ++r.users_listed;
    } else {
      ++r.users_without_list;
    }
  }
  if (!values.empty()) r.diversity = diversity_report(std::move(values), bins);
}

// Chronological replay of the test window: every test event is scored
// against its user's session as it stood just before the event, then applied.
// Models stay fixed; only the user-side feedback rows grow.
class Replay {
 public:
  explicit Replay(const FeedbackMatrices& train) : train_(train) {}

  SessionState& state(int user) {
    auto it = sessions_.find(user);
    if (it == sessions_.end()) it = sessions_.emplace(user, SessionState::from_matrices(train_, user)).first;
    return it->second;
  }

  // Writes the encoded value the training rows would hold, x and y = 1 - x,
  // which for binary encoding is apply_event's latest-wins update.
  void apply(const LabeledExample& ex) {
    SessionState& s = state(ex.user);
    s.x_row.erase(ex.item);
    s.y_row.erase(ex.item);
    if (ex.value != 0.0) s.x_row[ex.item] = ex.value;
    if (ex.value != 1.0) s.y_row[ex.item] = 1.0 - ex.value;
  }

  // Training matrices with every replayed session substituted for its user.
  FeedbackMatrices final_matrices() const {
    std::vector<FeedbackMatrices::Entry> entries;
    for (int u = 0; u < train_.m(); ++u) {
      auto it = sessions_.find(u);
      if (it == sessions_.end()) {
        for (SparseRows::InnerIterator e(train_.o(), u); e; ++e)
          entries.push_back({u, static_cast<int>(e.col()), train_.x_at(u, static_cast<int>(e.col()))});
        continue;
      }
      for (const auto& [j, v] : it->second.x_row) entries.push_back({u, j, v});
      for (const auto& [j, v] : it->second.y_row)
        if (!it->second.x_row.contains(j)) entries.push_back({u, j, 0.0});
    }
    return FeedbackMatrices(train_.m(), train_.n(), entries);
  }

 private:
  const FeedbackMatrices& train_;
  std::unordered_map<int, SessionState> sessions_;
};

SparseVector to_sparse(const std::map<int, double>& row) {
  SparseVector v;
  for (const auto& [j, x] : row) {
    v.index.push_back(j);
    v.value.push_back(x);
  }
  return v;
}

// sum_i row_i * (left_i . right_j)
double factored_score(const std::map<int, double>& row, const FactorModel& f, int item) {
  double s = 0.0;
  for (const auto& [i, v] : row) s += v * f.left.row(i).dot(f.right.col(item));
  return s;
}

void evaluate_realtime(EvalReport& r, const Preset& p, const PreparedData& data, uint64_t seed,
                       int threads, int bins) {
  const FeedbackMatrices& train = data.split.train;
  FactorModel c = factorize(gram_p2p(train), factor_options(p, seed, threads));
  const ItemSimilarity sim(c);
  RtModel model;
  if (p.use_negative) {
    RtOptions ro;
    ro.k = p.k;
    ro.lambda = p.lambda;
    ro.iters = p.iters;
    ro.seed = seed;
    ro.beta = p.beta;
    ro.threads = threads;
    model = train_rt(train, ro);
  } else {
    model = p2p_rt_model(c);
  }

  Replay replay(train);
  ScoredTest t;
  for (const auto& ex : data.split.test) {
    const SessionState& s = replay.state(ex.user);
    t.add(s.empty() ? 0.0 : score_item(model, project_state(model, s), ex.item), ex.label, ex.user);
    replay.apply(ex);
  }
  fill_relevance(r, t);

  for (int u : test_users(data.split)) {
    const SessionState& s = replay.state(u);
    if (p.rerank == Rerank::kDiversityMaximized) {
      RecommendationList pool = recommend_rt(model, s, p.pool);
      if (pool.items.empty()) {
        pool.requested = p.n;
        r.lists.push_back(std::move(pool));
      } else {
        r.lists.push_back(cf_dm_rerank(pool.items, sim, p.n, u));
      }
    } else {
      r.lists.push_back(recommend_rt(model, s, p.n));
    }
  }
  fill_diversity(r, sim, bins);
}

void evaluate_batch(EvalReport& r, const Preset& p, const PreparedData& data, uint64_t seed,
                    int threads, int bins) {
  const FeedbackMatrices& train = data.split.train;
  const FactorModel c = factorize(gram_p2p(train), factor_options(p, seed, threads));
  std::optional<FactorModel> d;
  if (p.use_negative) d = factorize(cross_n2p(train), factor_options(p, seed, threads));
  const ItemSimilarity sim(c);

  const bool with_n2p = d && p.ratio_p2p < 1.0;
  Replay replay(train);
  ScoredTest t;
  for (const auto& ex : data.split.test) {
    const SessionState& s = replay.state(ex.user);
    double score = factored_score(s.x_row, c, ex.item);
    if (with_n2p) score += factored_score(s.y_row, *d, ex.item);
    t.add(score, ex.label, ex.user);
    replay.apply(ex);
  }
  fill_relevance(r, t);

  const FeedbackMatrices after = replay.final_matrices();
  const int want = p.rerank == Rerank::kNone ? p.n : p.pool;
  for (int u : test_users(data.split)) {
    RecommendationList list = d ? mixed_candidates(after, c, *d, u, want, p.ratio_p2p)
                                : p2p_list(after, c, u, want);
    if (p.rerank == Rerank::kDiversityAugmented && !list.items.empty())
      list = cf_da_rerank(list.items, sim, p.phi, p.n, u);
    r.lists.push_back(std::move(list));
  }
  fill_diversity(r, sim, bins);
}

}  // namespace

HiNnModel train_ranker(const Preset& p, const PreparedData& data, const MfFactors& mf, uint64_t seed) {
  const FeedbackMatrices& train = data.split.train;
  HiNnHyper hyper = p.nn;
  hyper.k = p.k;
  hyper.seed = seed;
  hyper.use_negative = p.use_negative;
  HiNnModel model = make_hi_nn(train, hyper, mf);

  const auto& log = data.split.train_log;
  const size_t cut = log.size() - static_cast<size_t>(hyper.head_holdout * static_cast<double>(log.size()));
  std::vector<TrainingExample> embedding, head;
  for (size_t k = 0; k < log.size(); ++k) {
    const TrainingExample ex{data.dataset.users.find(log[k].user_id), data.dataset.items.find(log[k].item_id),
                             log[k].value};
    (k < cut ? embedding : head).push_back(ex);
  }
  if (embedding.empty() || head.empty()) {
    const ExampleSplit split = split_examples(train, hyper);
    embedding = split.embedding;
    head = split.head;
  }
  train_phase1(model, train, std::move(embedding));
  train_phase2(model, train, head);
  return model;
}

namespace {

void evaluate_neural(EvalReport& r, const Preset& p, const PreparedData& data, uint64_t seed,
                     int threads, int bins) {
  const FeedbackMatrices& train = data.split.train;
  const FactorModel c = factorize(gram_p2p(train), factor_options(p, seed, threads));
  std::optional<FactorModel> d;
  if (p.use_negative) d = factorize(cross_n2p(train), factor_options(p, seed, threads));
  const ItemSimilarity sim(c);
  const MfFactors mf{&c, d ? &*d : nullptr};

  const HiNnModel model = train_ranker(p, data, mf, seed);

  Replay replay(train);
  ScoredTest t;
  for (const auto& ex : data.split.test) {
    const SessionState& s = replay.state(ex.user);
    ChannelInputs in;
    in.x_row = to_sparse(s.x_row);
    in.y_row = to_sparse(s.y_row);
    in.x_col = sparse_col(train.x_cols(), ex.item);
    t.add(predict(model, mf, in, ex.item), ex.label, ex.user);
    replay.apply(ex);
  }
  fill_relevance(r, t);

  const FeedbackMatrices after = replay.final_matrices();
  for (int u : test_users(data.split)) {
    RecommendationList pool = d ? mixed_candidates(after, c, *d, u, p.pool, p.ratio_p2p)
                                : p2p_list(after, c, u, p.pool);
    for (auto& s : pool.items) s.score = predict(model, mf, after, u, s.item);
    std::stable_sort(pool.items.begin(), pool.items.end(), [](const ScoredItem& a, const ScoredItem& b) {
      return ranks_before(a.score, a.item, b.score, b.item);
    });
    if (static_cast<int>(pool.items.size()) > p.n) pool.items.resize(p.n);
    pool.requested = p.n;
    pool.short_list = static_cast<int>(pool.items.size()) < p.n;
    r.lists.push_back(std::move(pool));
  }
  fill_diversity(r, sim, bins);
}

}  // namespace

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw UsageError(path.string() + ": config must be a JSON object");
  static const std::set<std::string> known = {
      "dataset", "encoding", "threshold", "algo",  "split_ratio", "seed",   "out",
      "threads", "bins",     "k",         "n",     "iters",       "pool",   "epochs",
      "head_epochs", "lambda", "beta",    "phi",   "ratio",       "alpha",  "gamma",
      "learning_rate", "preset"};
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw UsageError(path.string() + ": unknown config key '" + key + "'");
  ExperimentConfig c;
  try {
    c.dataset = j.value("dataset", c.dataset);
    c.encoding = j.value("encoding", c.encoding);
    c.threshold = j.value("threshold", c.threshold);
    c.algo = j.value("algo", c.algo);
    c.split_ratio = j.value("split_ratio", c.split_ratio);
    c.seed = j.value("seed", c.seed);
    c.out = j.value("out", c.out);
    c.threads = j.value("threads", c.threads);
    c.bins = j.value("bins", c.bins);
    read_optional(j, "k", c.k);
    read_optional(j, "n", c.n);
    read_optional(j, "iters", c.iters);
    read_optional(j, "pool", c.pool);
    read_optional(j, "epochs", c.epochs);
    read_optional(j, "head_epochs", c.head_epochs);
    read_optional(j, "lambda", c.lambda);
    read_optional(j, "beta", c.beta);
    read_optional(j, "phi", c.phi);
    read_optional(j, "ratio", c.ratio);
    read_optional(j, "alpha", c.alpha);
    read_optional(j, "gamma", c.gamma);
    read_optional(j, "learning_rate", c.learning_rate);
  } catch (const json::exception& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
  return c;
}

Encoding resolve_encoding(const ExperimentConfig& config) {
  Encoding e;
  e.mode = parse_encoding_mode(config.encoding);
  e.threshold = config.threshold;
  return e;
}

Preset resolve_preset(const ExperimentConfig& config) {
  Preset p = preset(config.algo);
  if (config.k) p.k = *config.k;
  if (config.n) {
    p.n = *config.n;
    if (p.rerank == Rerank::kDiversityMaximized) p.pool = 5 * p.n;
  }
  if (config.iters) p.iters = *config.iters;
  if (config.pool) p.pool = *config.pool;
  if (config.lambda) p.lambda = *config.lambda;
  if (config.beta) p.beta = *config.beta;
  if (config.phi) p.phi = *config.phi;
  if (config.ratio) p.ratio_p2p = *config.ratio;
  if (config.epochs) p.nn.epochs = *config.epochs;
  if (config.head_epochs) p.nn.head_epochs = *config.head_epochs;
  if (config.alpha) p.nn.alpha = *config.alpha;
  if (config.gamma) p.nn.gamma = *config.gamma;
  if (config.learning_rate) p.nn.learning_rate = *config.learning_rate;
  p.nn.k = p.k;
  if (p.k < 1 || p.n < 1 || p.pool < 1 || p.iters < 1) throw UsageError("k, n, pool and iters must be >= 1");
  if (config.pool && p.pool < p.n) throw UsageError("pool must be >= n");
  if (p.pool < p.n) p.pool = p.n;
  if (p.beta < 0.0 || p.phi < 0.0) throw UsageError("beta and phi must be >= 0");
  if (!(p.ratio_p2p >= 0.0 && p.ratio_p2p <= 1.0)) throw UsageError("ratio must be in [0, 1]");
  return p;
}

std::string resolved_config_json(const ExperimentConfig& config) {
  const Preset p = resolve_preset(config);
  json j;
  j["dataset"] = config.dataset;
  j["encoding"] = config.encoding;
  j["threshold"] = config.threshold;
  j["algo"] = config.algo;
  j["split_ratio"] = config.split_ratio;
  j["seed"] = config.seed;
  j["out"] = config.out;
  j["threads"] = config.threads;
  j["bins"] = config.bins;
  j["k"] = p.k;
  j["n"] = p.n;
  j["iters"] = p.iters;
  j["pool"] = p.pool;
  j["lambda"] = p.lambda;
  j["beta"] = p.beta;
  j["phi"] = p.phi;
  j["ratio"] = p.ratio_p2p;
  j["epochs"] = p.nn.epochs;
  j["head_epochs"] = p.nn.head_epochs;
  j["alpha"] = p.nn.alpha;
  j["gamma"] = p.nn.gamma;
  j["learning_rate"] = p.nn.learning_rate;
  j["preset"] = {{"pipeline", to_string(p.pipeline)},
                 {"rerank", to_string(p.rerank)},
                 {"use_negative", p.use_negative},
                 {"lambda_pos", p.nn.lambda_pos},
                 {"lambda_neg", p.nn.lambda_neg},
                 {"batch_size", p.nn.batch_size},
                 {"head_hidden", p.nn.head_hidden},
                 {"head_learning_rate", p.nn.head_learning_rate},
                 {"warm_threshold", p.nn.warm_threshold}};
  return j.dump(2) + "\n";
}

PreparedData prepare_data(const ExperimentConfig& config) {
  if (config.dataset.empty()) throw DataError("no dataset given");
  if (!std::filesystem::exists(config.dataset)) throw DataError("dataset not found: " + config.dataset);
  Dataset dataset = index_interactions(deduplicate(ingest_movielens(config.dataset, resolve_encoding(config))));
  SplitPair split = temporal_split(dataset, config.split_ratio);
  return PreparedData{std::move(dataset), std::move(split)};
}

EvalReport evaluate_preset(const Preset& preset, const PreparedData& data, uint64_t seed, int threads,
                           int bins) {
  EvalReport r;
  r.algo = preset.name;
  switch (preset.pipeline) {
    case Pipeline::kRealtime: evaluate_realtime(r, preset, data, seed, threads, bins); break;
    case Pipeline::kBatchMf: evaluate_batch(r, preset, data, seed, threads, bins); break;
    case Pipeline::kNeural: evaluate_neural(r, preset, data, seed, threads, bins); break;
  }
  return r;
}

std::string format_report(const EvalReport& r) {
  std::ostringstream out;
  out << "algo=" << r.algo << '\n'
      << "test_examples=" << r.test_examples << '\n'
      << "auc_roc=" << fmt(r.auc) << '\n'
      << "map=" << fmt(r.map) << '\n'
      << "precision_at_recall_0.8=" << fmt(r.precision_at_recall) << '\n'
      << "recall_at_precision_0.85=" << fmt(r.recall_at_precision) << '\n'
      << "diversity_median=" << (r.diversity ? fmt(r.diversity->median) : "absent") << '\n'
      << "diversity_p25=" << (r.diversity ? fmt(r.diversity->p25) : "absent") << '\n'
      << "users_listed=" << r.users_listed << '\n'
      << "users_without_list=" << r.users_without_list << '\n';
  return out.str();
}

std::string format_recommendations(const std::vector<RecommendationList>& lists, const Dataset& data) {
  std::ostringstream out;
  for (const auto& list : lists) {
    for (size_t rank = 0; rank < list.items.size(); ++rank) {
      const ScoredItem& s = list.items[rank];
      out << data.users.raw(list.user) << '\t' << rank + 1 << '\t' << data.items.raw(s.item) << '\t'
          << fmt(s.score) << '\t' << to_string(s.channel) << '\n';
    }
  }
  return out.str();
}

std::string format_histogram(const std::optional<DiversityReport>& diversity, int bins) {
  std::ostringstream out;
  out << "bin_low,bin_high,count\n";
  if (!diversity) return out.str();
  const Histogram h = make_histogram(diversity->values, bins);
  for (size_t b = 0; b < h.counts.size(); ++b)
    out << fmt(h.edges[b]) << ',' << fmt(h.edges[b + 1]) << ',' << h.counts[b] << '\n';
  return out.str();
}

void emit_plot_data(const EvalReport& report, const std::filesystem::path& dir, int bins) {
  std::filesystem::create_directories(dir);
  write_file(dir / "diversity_hist.csv", format_histogram(report.diversity, bins));
}

EvalReport run_experiment(const ExperimentConfig& config) {
  const Preset p = resolve_preset(config);
  const PreparedData data = prepare_data(config);
  EvalReport r = evaluate_preset(p, data, config.seed, config.threads, config.bins);
  if (!config.out.empty()) {
    const std::filesystem::path dir(config.out);
    std::filesystem::create_directories(dir);
    write_file(dir / "report.txt", format_report(r));
    write_file(dir / "recommendations.tsv", format_recommendations(r.lists, data.dataset));
    write_file(dir / "config.json", resolved_config_json(config));
    emit_plot_data(r, dir, config.bins);
  }
  return r;
}

std::string compare_table(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  out << "metric";
  for (const auto& r : reports) out << '\t' << r.algo;
  out << '\n';
  auto row = [&](const char* name, auto get) {
    out << name;
    for (const auto& r : reports) out << '\t' << fmt(get(r));
    out << '\n';
  };
  auto div = [](const EvalReport& r, bool median) -> std::optional<double> {
    if (!r.diversity) return std::nullopt;
    return median ? r.diversity->median : r.diversity->p25;
  };
  row("AUC-ROC", [](const EvalReport& r) { return r.auc; });
  row("Precision (recall=0.8)", [](const EvalReport& r) { return r.precision_at_recall; });
  row("Recall (precision=0.85)", [](const EvalReport& r) { return r.recall_at_precision; });
  row("Diversity median", [&](const EvalReport& r) { return div(r, true); });
  row("Diversity 25%ile", [&](const EvalReport& r) { return div(r, false); });
  row("mAP", [](const EvalReport& r) { return r.map; });
  return out.str();
}

std::vector<EvalReport> run_compare(const ExperimentConfig& config, const std::vector<std::string>& algos) {
  if (algos.empty()) throw UsageError("compare: no algorithms given");
  std::vector<Preset> presets;
  for (const auto& a : algos) {
    ExperimentConfig c = config;
    c.algo = a;
    presets.push_back(resolve_preset(c));
  }
  const PreparedData data = prepare_data(config);
  std::vector<EvalReport> reports;
  for (const auto& p : presets) reports.push_back(evaluate_preset(p, data, config.seed, config.threads, config.bins));
  if (!config.out.empty()) {
    const std::filesystem::path dir(config.out);
    std::filesystem::create_directories(dir);
    write_file(dir / "compare.tsv", compare_table(reports));
    for (const auto& r : reports) {
      const auto sub = dir / r.algo;
      std::filesystem::create_directories(sub);
      write_file(sub / "report.txt", format_report(r));
      write_file(sub / "recommendations.tsv", format_recommendations(r.lists, data.dataset));
      emit_plot_data(r, sub, config.bins);
    }
  }
  return reports;
}

LoopState simulate_loop(const LoopConfig& config) {
  if (config.rounds < 2) throw UsageError("simulate_loop: need at least 2 rounds");
  if (config.n < 1) throw UsageError("simulate_loop: n must be >= 1");
  if (!(config.ratio_p2p >= 0.0 && config.ratio_p2p <= 1.0))
    throw UsageError("simulate_loop: ratio must be in [0, 1]");
  TopicConfig tc = config.topics;
  tc.seed = config.seed;
  const SyntheticTopics world = synthesize_topics(tc);
  const Dataset& base = world.data;
  const int m = base.users.size();
  const double log_topics = std::log(static_cast<double>(tc.n_topics));

  LoopState state;
  state.log = base.interactions;
  int64_t clock = 0;
  for (const auto& e : state.log) clock = std::max(clock, e.timestamp + 1);
  Rng rng(config.seed, "loop_feedback");

  FactorizeOptions fo;
  fo.k = config.k;
  fo.lambda = config.lambda;
  fo.iters = config.iters;
  fo.seed = config.seed;

  for (int round = 1; round <= config.rounds; ++round) {
    const FeedbackMatrices fm = build_matrices(state.log, base.users, base.items);
    const FactorModel c = factorize(gram_p2p(fm), fo);
    std::optional<FactorModel> d;
    if (config.ratio_p2p < 1.0) d = factorize(cross_n2p(fm), fo);
    const ItemSimilarity sim(c);

    LoopRound rec;
    rec.round = round;
    double entropy_sum = 0.0, diversity_sum = 0.0;
    int diversity_users = 0;
    std::vector<RecommendationList> lists;
    lists.reserve(m);
    for (int u = 0; u < m; ++u) {
      RecommendationList list = d ? mixed_candidates(fm, c, *d, u, config.n, config.ratio_p2p)
                                  : p2p_list(fm, c, u, config.n);
      if (!list.items.empty()) {
        std::vector<int> counts(tc.n_topics, 0);
        for (const auto& s : list.items) counts[world.item_topic[s.item]]++;
        double h = 0.0;
        for (int cnt : counts) {
          if (cnt == 0) continue;
          const double q = static_cast<double>(cnt) / static_cast<double>(list.items.size());
          h -= q * std::log(q);
        }
        entropy_sum += log_topics > 0.0 ? h / log_topics : 0.0;
        ++rec.users_listed;
      }
      if (list.items.size() >= 2) {
        diversity_sum += user_diversity(list.item_ids(), sim);
        ++diversity_users;
      }
      lists.push_back(std::move(list));
    }
    rec.entropy = rec.users_listed ? entropy_sum / rec.users_listed : 0.0;
    rec.diversity = diversity_users ? diversity_sum / diversity_users : 0.0;

    for (const auto& list : lists) {
      for (const auto& s : list.items) {
        const bool positive = rng.bernoulli(world.positive_probability(list.user, s.item));
        Interaction e;
        e.user_id = base.users.raw(list.user);
        e.item_id = base.items.raw(s.item);
        e.value = positive ? 1.0 : 0.0;
        e.positive = positive;
        e.timestamp = clock++;
        state.log.push_back(std::move(e));
      }
    }
    rec.log_size = static_cast<long>(state.log.size());
    state.rounds.push_back(rec);
  }
  return state;
}

std::string format_loop(const LoopState& state) {
  std::ostringstream out;
  out << "round,entropy,diversity,log_size,users_listed\n";
  for (const auto& r : state.rounds)
    out << r.round << ',' << fmt(r.entropy) << ',' << fmt(r.diversity) << ',' << r.log_size << ','
        << r.users_listed << '\n';
  return out.str();
}

void emit_plot_data(const LoopState& state, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "loop_rounds.csv", format_loop(state));
}

LatencyStats benchmark_recommend_rt(const RtModel& model, const std::vector<SessionState>& states,
                                    int requests, int n) {
  if (states.empty() || requests < 1) throw UsageError("benchmark_recommend_rt: nothing to time");
  std::vector<double> ms;
  ms.reserve(requests);
  volatile size_t sink = 0;
  for (int r = 0; r < requests; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    const RecommendationList list = recommend_rt(model, states[r % states.size()], n);
    const auto t1 = std::chrono::steady_clock::now();
    sink = sink + list.items.size();
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  LatencyStats s;
  s.requests = requests;
  double total = 0.0;
  for (double v : ms) total += v;
  s.mean_ms = total / requests;
  s.p99_ms = percentile(std::move(ms), 0.99);
  return s;
}

}  // namespace hi
