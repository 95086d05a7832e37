#include "hi/serve.h"

#include <httplib.h>

#include <json.hpp>

namespace hi {

using nlohmann::json;

RecommendService::RecommendService(RtModel model, IdIndex users, IdIndex items,
                                   const FeedbackMatrices& train)
    : model_(std::move(model)), items_(std::move(items)), store_(model_.n), users_(std::move(users)) {
  if (items_.size() != model_.n) throw UsageError("serve: item index does not match the model");
  for (int u = 0; u < train.m(); ++u) {
    SessionState s = SessionState::from_matrices(train, u);
    if (!s.empty()) store_.seed(u, std::move(s));
  }
}

void RecommendService::attach_journal(const std::filesystem::path& path) {
  store_.replay_journal(path);
  store_.open_journal(path);
}

int RecommendService::user_index(const std::string& raw) {
  std::lock_guard lock(users_mutex_);
  return users_.intern(raw);
}

std::string RecommendService::recommend(const std::string& user, int n) {
  if (n < 1) throw UsageError("n must be >= 1");
  const RecommendationList list = recommend_rt(model_, store_.snapshot(user_index(user)), n);
  json out = json::array();
  for (const auto& s : list.items)
    out.push_back({{"item", items_.raw(s.item)}, {"score", s.score}, {"channel", to_string(s.channel)}});
  return out.dump();
}

void RecommendService::event(const std::string& json_body) {
  json j;
  try {
    j = json::parse(json_body);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed event: ") + e.what());
  }
  if (!j.is_object() || !j.contains("user") || !j.contains("item") || !j.contains("feedback"))
    throw DataError("event needs user, item and feedback");
  auto as_id = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
  const std::string item_raw = as_id(j["item"]);
  const int item = items_.find(item_raw);
  if (item < 0) throw DataError("unknown item '" + item_raw + "'");
  if (!j["feedback"].is_string()) throw DataError("feedback must be a string");
  store_.record(user_index(as_id(j["user"])), item, parse_feedback(j["feedback"].get<std::string>()));
}

bool serve_http(RecommendService& service, const std::string& host, int port) {
  httplib::Server server;
  auto fail = [](httplib::Response& res, int status, const std::string& message) {
    res.status = status;
    res.set_content(json{{"error", message}}.dump(), "application/json");
  };
  server.Get("/recommend", [&](const httplib::Request& req, httplib::Response& res) {
    try {
      if (!req.has_param("user")) return fail(res, 400, "missing user");
      const int n = req.has_param("n") ? std::stoi(req.get_param_value("n")) : 10;
      res.set_content(service.recommend(req.get_param_value("user"), n), "application/json");
    } catch (const Error& e) {
      fail(res, 400, e.what());
    } catch (const std::logic_error& e) {
      fail(res, 400, e.what());
    }
  });
  server.Post("/event", [&](const httplib::Request& req, httplib::Response& res) {
    try {
      service.event(req.body);
      res.set_content("{\"ok\":true}", "application/json");
    } catch (const Error& e) {
      fail(res, 400, e.what());
    }
  });
  return server.listen(host, port);
}

}  // namespace hi
