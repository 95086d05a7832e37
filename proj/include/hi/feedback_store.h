// Interaction logs and their feedback-differentiating encoding.
//
// Every observed impression (o = 1) carries a positive part x and a negative
// part y = 1 - x. In binary mode x is 0 or 1; in normalized mode x is
// rating / (h + 1). The matrices X, Y and O built here always satisfy
// X + Y = O elementwise.

#ifndef HI_FEEDBACK_STORE_H_
#define HI_FEEDBACK_STORE_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "hi/common.h"

namespace hi {

enum class EncodingMode { kBinary, kNormalized };

EncodingMode parse_encoding_mode(std::string_view name);
std::string_view to_string(EncodingMode mode);

struct Encoding {
  EncodingMode mode = EncodingMode::kBinary;
  // Ratings >= threshold count as positive feedback (binary value and label).
  double threshold = 4.0;
  // Highest rating on the scale; normalized values are rating / (max + 1).
  int max_rating = 5;
};

struct Interaction {
  std::string user_id;
  std::string item_id;
  // Encoded positive feedback x in [0, 1].
  double value = 0.0;
  // Binary engagement label used for evaluation.
  bool positive = false;
  int64_t timestamp = 0;
};

// Dense index assignment in first-seen order.
class IdIndex {
 public:
  static IdIndex sequential(int count);

  int intern(const std::string& raw);
  // -1 when unknown.
  int find(const std::string& raw) const;
  const std::string& raw(int index) const { return raw_.at(index); }
  int size() const { return static_cast<int>(raw_.size()); }

  // One "index<TAB>raw_id" line per entry.
  void save(const std::filesystem::path& path) const;
  static IdIndex load(const std::filesystem::path& path);

  bool operator==(const IdIndex& other) const { return raw_ == other.raw_; }

 private:
  std::vector<std::string> raw_;
  std::unordered_map<std::string, int> lookup_;
};

// Immutable after construction; safe to share read-only across threads.
class FeedbackMatrices {
 public:
  // Entries are (user, item, x) triples for observed impressions. Duplicates
  // must already be resolved.
  struct Entry {
    int user;
    int item;
    double x;
  };
  FeedbackMatrices(int m, int n, const std::vector<Entry>& entries);

  int m() const { return m_; }
  int n() const { return n_; }

  const SparseRows& x() const { return x_; }
  const SparseRows& y() const { return y_; }
  const SparseRows& o() const { return o_; }
  // Column-major companions for transpose products and item columns.
  const SparseCols& x_cols() const { return x_cols_; }
  const SparseCols& y_cols() const { return y_cols_; }

  double x_at(int user, int item) const { return x_.coeff(user, item); }
  double y_at(int user, int item) const { return y_.coeff(user, item); }
  bool observed(int user, int item) const { return o_.coeff(user, item) != 0.0; }
  int observed_count(int user) const;
  int64_t nnz() const { return o_.nonZeros(); }

 private:
  int m_;
  int n_;
  SparseRows x_, y_, o_;
  SparseCols x_cols_, y_cols_;
};

struct LabeledExample {
  int user;
  int item;
  bool label;
  double value;
  int64_t timestamp;
};

struct Dataset {
  std::vector<Interaction> interactions;
  IdIndex users;
  IdIndex items;
};

struct SplitPair {
  std::vector<Interaction> train_log;
  FeedbackMatrices train;
  // Chronological; labels come only from observed impressions.
  std::vector<LabeledExample> test;
  // True when a timestamp tie straddles the boundary and the split fell back
  // to stable file order.
  bool ordering_fallback = false;
};

// Reads `user::item::rating::timestamp` or CSV `userId,movieId,rating,timestamp`
// (an optional header line is skipped). Throws DataError with the line number
// on malformed input and on ratings outside 1..max_rating.
std::vector<Interaction> ingest_movielens(const std::filesystem::path& path,
                                          const Encoding& encoding);

// Encodes one raw rating. Throws DataError when out of range.
Interaction encode_rating(std::string user, std::string item, double rating,
                          int64_t timestamp, const Encoding& encoding);

// Indices in first-seen order over the whole log.
Dataset index_interactions(std::vector<Interaction> interactions);

// Keeps the latest record per (user, item); equal timestamps resolve to the
// largest value so the result never depends on input order.
std::vector<Interaction> deduplicate(std::vector<Interaction> interactions);

FeedbackMatrices build_matrices(const std::vector<Interaction>& interactions,
                                const IdIndex& users, const IdIndex& items);
// Convenience overload indexing the log itself. Throws DataError when empty.
FeedbackMatrices build_matrices(const std::vector<Interaction>& interactions);

// First ceil(ratio * N) events by timestamp go to train. Users and items
// that only appear in test keep their indices (cold start is evaluated).
SplitPair temporal_split(const Dataset& dataset, double ratio = 0.8);

struct TopicConfig {
  int n_users = 300;
  int n_items = 600;
  int n_topics = 3;
  // Probability of a positive response to an in-topic impression;
  // out-of-topic impressions are positive with 1 - affinity.
  double affinity = 0.9;
  int impressions_per_user = 10;
  uint64_t seed = 1;
};

struct SyntheticTopics {
  Dataset data;
  std::vector<int> user_topic;
  std::vector<int> item_topic;
  TopicConfig config;

  // Ground-truth response model.
  double positive_probability(int user, int item) const;
};

// Latent-topic generator. User u and item j have raw ids "u<u>" and "i<j>"
// and dense indices u and j.
SyntheticTopics synthesize_topics(const TopicConfig& config);

}  // namespace hi

#endif  // HI_FEEDBACK_STORE_H_
