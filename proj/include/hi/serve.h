// HTTP front end for realtime recommendation.
//
//   GET  /recommend?user=<id>&n=<count>  -> [{"item": id, "score": s, "channel": c}, ...]
//   POST /event  {"user": id, "item": id, "feedback": "positive"|"negative"}
//
// Ids are the raw dataset ids. Users unknown to the training data start with
// an empty session.

#ifndef HI_SERVE_H_
#define HI_SERVE_H_

#include <filesystem>
#include <mutex>
#include <string>
#include <unordered_map>

#include "hi/feedback_store.h"
#include "hi/realtime.h"

namespace hi {

class RecommendService {
 public:
  // Sessions of known users are seeded from `train`.
  RecommendService(RtModel model, IdIndex users, IdIndex items, const FeedbackMatrices& train);

  // Appends accepted events to `path` and replays any events already there.
  void attach_journal(const std::filesystem::path& path);

  // JSON array body. Throws UsageError for n < 1.
  std::string recommend(const std::string& user, int n);
  // Parses and applies one event. Throws DataError on malformed input or an
  // unknown item.
  void event(const std::string& json_body);

 private:
  int user_index(const std::string& raw);

  RtModel model_;
  IdIndex items_;
  SessionStore store_;
  std::mutex users_mutex_;
  IdIndex users_;
};

// Blocks until the server stops. Returns false when the port cannot be bound.
bool serve_http(RecommendService& service, const std::string& host, int port);

}  // namespace hi

#endif  // HI_SERVE_H_
