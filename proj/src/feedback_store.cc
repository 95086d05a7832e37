#include "hi/feedback_store.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <tuple>

namespace hi {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  const bool dat = line.find("::") != std::string_view::npos;
  const std::string_view sep = dat ? "::" : ",";
  size_t start = 0;
  while (true) {
    const size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + sep.size();
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  // std::from_chars for double is available in libstdc++ 11.
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_int64(std::string_view s, int64_t& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace

EncodingMode parse_encoding_mode(std::string_view name) {
  if (name == "binary") return EncodingMode::kBinary;
  if (name == "normalized") return EncodingMode::kNormalized;
  throw UsageError("unknown encoding mode '" + std::string(name) +
                   "' (expected binary or normalized)");
}

std::string_view to_string(EncodingMode mode) {
  return mode == EncodingMode::kBinary ? "binary" : "normalized";
}

IdIndex IdIndex::sequential(int count) {
  IdIndex index;
  for (int i = 0; i < count; ++i) index.intern(std::to_string(i));
  return index;
}

int IdIndex::intern(const std::string& raw) {
  auto [it, inserted] = lookup_.try_emplace(raw, static_cast<int>(raw_.size()));
  if (inserted) raw_.push_back(raw);
  return it->second;
}

int IdIndex::find(const std::string& raw) const {
  auto it = lookup_.find(raw);
  return it == lookup_.end() ? -1 : it->second;
}

void IdIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write index file " + path.string());
  for (size_t i = 0; i < raw_.size(); ++i) out << i << '\t' << raw_[i] << '\n';
}

IdIndex IdIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read index file " + path.string());
  IdIndex index;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    int64_t pos = 0;
    if (tab == std::string::npos || !parse_int64(std::string_view(line).substr(0, tab), pos) ||
        pos != index.size()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": malformed index line");
    }
    index.intern(line.substr(tab + 1));
  }
  return index;
}

FeedbackMatrices::FeedbackMatrices(int m, int n, const std::vector<Entry>& entries)
    : m_(m), n_(n), x_(m, n), y_(m, n), o_(m, n) {
  std::vector<Eigen::Triplet<double>> xt, yt, ot;
  xt.reserve(entries.size());
  yt.reserve(entries.size());
  ot.reserve(entries.size());
  for (const Entry& e : entries) {
    if (e.user < 0 || e.user >= m || e.item < 0 || e.item >= n)
      throw DataError("feedback entry index out of range");
    if (!(e.x >= 0.0 && e.x <= 1.0)) throw DataError("feedback value outside [0, 1]");
    const double y = 1.0 - e.x;
    if (e.x != 0.0) xt.emplace_back(e.user, e.item, e.x);
    if (y != 0.0) yt.emplace_back(e.user, e.item, y);
    ot.emplace_back(e.user, e.item, 1.0);
  }
  // Duplicates would be summed by setFromTriplets; reject them instead.
  auto no_duplicates = [](const double&, const double&) -> double {
    throw DataError("duplicate (user, item) entry in feedback matrices");
  };
  x_.setFromTriplets(xt.begin(), xt.end(), no_duplicates);
  y_.setFromTriplets(yt.begin(), yt.end(), no_duplicates);
  o_.setFromTriplets(ot.begin(), ot.end(), no_duplicates);
  x_.makeCompressed();
  y_.makeCompressed();
  o_.makeCompressed();
  x_cols_ = x_;
  y_cols_ = y_;
  x_cols_.makeCompressed();
  y_cols_.makeCompressed();
}

int FeedbackMatrices::observed_count(int user) const {
  return static_cast<int>(o_.outerIndexPtr()[user + 1] - o_.outerIndexPtr()[user]);
}

Interaction encode_rating(std::string user, std::string item, double rating,
                          int64_t timestamp, const Encoding& encoding) {
  if (!(rating >= 1.0 && rating <= encoding.max_rating)) {
    std::ostringstream msg;
    msg << "rating " << rating << " outside 1.." << encoding.max_rating;
    throw DataError(msg.str());
  }
  Interaction out;
  out.user_id = std::move(user);
  out.item_id = std::move(item);
  out.timestamp = timestamp;
  out.positive = rating >= encoding.threshold;
  out.value = encoding.mode == EncodingMode::kBinary
                  ? (out.positive ? 1.0 : 0.0)
                  : rating / static_cast<double>(encoding.max_rating + 1);
  return out;
}

std::vector<Interaction> ingest_movielens(const std::filesystem::path& path,
                                          const Encoding& encoding) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ratings file " + path.string());
  std::vector<Interaction> out;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    const auto fields = split_fields(view);
    auto fail = [&](const std::string& why) {
      return DataError(path.string() + ":" + std::to_string(line_no) + ": " + why);
    };
    if (fields.size() != 4) throw fail("expected 4 fields, got " + std::to_string(fields.size()));
    double rating = 0.0;
    int64_t ts = 0;
    const bool rating_ok = parse_double(fields[2], rating);
    if (!rating_ok && line_no == 1 && out.empty()) continue;  // CSV header
    if (!rating_ok) throw fail("rating is not a number");
    if (!parse_int64(fields[3], ts)) throw fail("timestamp is not an integer");
    const std::string_view user = trim(fields[0]);
    const std::string_view item = trim(fields[1]);
    if (user.empty() || item.empty()) throw fail("empty identifier");
    try {
      out.push_back(encode_rating(std::string(user), std::string(item), rating, ts, encoding));
    } catch (const DataError& e) {
      throw fail(e.what());
    }
  }
  return out;
}

Dataset index_interactions(std::vector<Interaction> interactions) {
  Dataset d;
  for (const Interaction& it : interactions) {
    d.users.intern(it.user_id);
    d.items.intern(it.item_id);
  }
  d.interactions = std::move(interactions);
  return d;
}

std::vector<Interaction> deduplicate(std::vector<Interaction> interactions) {
  std::vector<size_t> order(interactions.size());
  std::iota(order.begin(), order.end(), 0);
  auto key = [&](size_t i) {
    const Interaction& a = interactions[i];
    return std::tie(a.user_id, a.item_id, a.timestamp, a.value);
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return key(a) < key(b); });
  std::vector<bool> keep(interactions.size(), false);
  for (size_t k = 0; k < order.size(); ++k) {
    const bool last = k + 1 == order.size() ||
                      interactions[order[k]].user_id != interactions[order[k + 1]].user_id ||
                      interactions[order[k]].item_id != interactions[order[k + 1]].item_id;
    if (last) keep[order[k]] = true;
  }
  std::vector<Interaction> out;
  out.reserve(interactions.size());
  for (size_t i = 0; i < interactions.size(); ++i)
    if (keep[i]) out.push_back(std::move(interactions[i]));
  return out;
}

FeedbackMatrices build_matrices(const std::vector<Interaction>& interactions,
                                const IdIndex& users, const IdIndex& items) {
  const auto unique = deduplicate(interactions);
  std::vector<FeedbackMatrices::Entry> entries;
  entries.reserve(unique.size());
  for (const Interaction& it : unique) {
    const int u = users.find(it.user_id);
    const int i = items.find(it.item_id);
    if (u < 0 || i < 0)
      throw DataError("interaction references unindexed id " + it.user_id + "/" + it.item_id);
    entries.push_back({u, i, it.value});
  }
  return FeedbackMatrices(users.size(), items.size(), entries);
}

FeedbackMatrices build_matrices(const std::vector<Interaction>& interactions) {
  if (interactions.empty()) throw DataError("cannot build feedback matrices from an empty log");
  Dataset d = index_interactions(interactions);
  return build_matrices(d.interactions, d.users, d.items);
}

SplitPair temporal_split(const Dataset& dataset, double ratio) {
  const auto& log = dataset.interactions;
  if (log.size() < 2) throw DataError("temporal split needs at least 2 events");
  if (!(ratio > 0.0 && ratio < 1.0)) throw UsageError("split ratio must be in (0, 1)");
  std::vector<size_t> order(log.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return log[a].timestamp < log[b].timestamp;
  });
  const int64_t total = static_cast<int64_t>(log.size());
  const int64_t n_train = std::clamp<int64_t>(ceil_fraction(ratio, total), 1, total - 1);

  std::vector<Interaction> train_log;
  train_log.reserve(n_train);
  for (int64_t k = 0; k < n_train; ++k) train_log.push_back(log[order[k]]);

  const bool tie = log[order[n_train - 1]].timestamp == log[order[n_train]].timestamp;
  if (tie) {
    log_warning("timestamp tie at the split boundary; falling back to stable file order");
  }

  std::vector<LabeledExample> test;
  test.reserve(total - n_train);
  for (int64_t k = n_train; k < total; ++k) {
    const Interaction& it = log[order[k]];
    test.push_back({dataset.users.find(it.user_id), dataset.items.find(it.item_id),
                    it.positive, it.value, it.timestamp});
  }
  FeedbackMatrices train = build_matrices(train_log, dataset.users, dataset.items);
  return SplitPair{std::move(train_log), std::move(train), std::move(test), tie};
}

double SyntheticTopics::positive_probability(int user, int item) const {
  return user_topic.at(user) == item_topic.at(item) ? config.affinity
                                                    : 1.0 - config.affinity;
}

SyntheticTopics synthesize_topics(const TopicConfig& config) {
  if (!(config.affinity > 0.5 && config.affinity <= 1.0))
    throw UsageError("affinity must be in (0.5, 1]");
  if (config.n_topics < 1 || config.n_users < 1 || config.n_items < config.n_topics)
    throw UsageError("topic model needs n_topics >= 1 and n_items >= n_topics");
  if (config.impressions_per_user < 0 || config.impressions_per_user > config.n_items)
    throw UsageError("impressions_per_user must be in [0, n_items]");

  Rng rng(config.seed, "synthesize_topics");
  SyntheticTopics out;
  out.config = config;

  auto balanced = [&](int count) {
    std::vector<int> perm(count);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = count - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    std::vector<int> topic(count);
    for (int i = 0; i < count; ++i) topic[perm[i]] = i % config.n_topics;
    return topic;
  };
  out.item_topic = balanced(config.n_items);
  out.user_topic = balanced(config.n_users);

  for (int u = 0; u < config.n_users; ++u) out.data.users.intern("u" + std::to_string(u));
  for (int j = 0; j < config.n_items; ++j) out.data.items.intern("i" + std::to_string(j));

  // Per-user impressions without replacement, then interleaved across users
  // so that timestamps do not cluster by user.
  std::vector<std::vector<int>> shown(config.n_users);
  std::vector<int> pool(config.n_items);
  for (int u = 0; u < config.n_users; ++u) {
    std::iota(pool.begin(), pool.end(), 0);
    for (int k = 0; k < config.impressions_per_user; ++k) {
      const int pick = k + static_cast<int>(rng.below(config.n_items - k));
      std::swap(pool[k], pool[pick]);
      shown[u].push_back(pool[k]);
    }
  }
  int64_t clock = 0;
  for (int k = 0; k < config.impressions_per_user; ++k) {
    for (int u = 0; u < config.n_users; ++u) {
      const int item = shown[u][k];
      Interaction it;
      it.user_id = out.data.users.raw(u);
      it.item_id = out.data.items.raw(item);
      it.positive = rng.bernoulli(out.positive_probability(u, item));
      it.value = it.positive ? 1.0 : 0.0;
      it.timestamp = clock++;
      out.data.interactions.push_back(std::move(it));
    }
  }
  return out;
}

}  // namespace hi
