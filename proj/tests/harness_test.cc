#include <gtest/gtest.h>

#include <cstdlib>
#include <random>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "hi/harness.h"
#include "hi/serve.h"
#include "test_util.h"

namespace hi {
namespace {

using testing::TempDir;
using testing::read_text;
using testing::write_text;

// 60 users x 40 items, two taste groups, ~18 ratings each, distinct timestamps.
std::string synthetic_ratings() {
  std::mt19937_64 gen(11);
  std::uniform_int_distribution<int> item(0, 39);
  std::ostringstream out;
  int64_t clock = 1000;
  for (int round = 0; round < 18; ++round) {
    for (int u = 0; u < 60; ++u) {
      const int j = item(gen);
      const bool liked = (u % 2) == (j % 2);
      const int rating = liked ? 4 + static_cast<int>(gen() % 2) : 1 + static_cast<int>(gen() % 3);
      out << u << "::" << j << "::" << rating << "::" << clock++ << "\n";
    }
  }
  return out.str();
}

struct Fixture {
  TempDir dir;
  std::string ratings;

  Fixture() : ratings((dir / "ratings.dat").string()) { write_text(ratings, synthetic_ratings()); }

  ExperimentConfig config(const std::string& algo) const {
    ExperimentConfig c;
    c.dataset = ratings;
    c.algo = algo;
    c.k = 4;
    c.n = 5;
    c.epochs = 3;
    c.head_epochs = 3;
    return c;
  }
};

TEST(Config, LoadRejectsUnknownKeys) {
  TempDir dir;
  write_text(dir / "bad.json", R"({"dataset": "x", "kk": 3})");
  EXPECT_THROW(load_config(dir / "bad.json"), UsageError);
  write_text(dir / "broken.json", "{");
  EXPECT_THROW(load_config(dir / "broken.json"), UsageError);
  EXPECT_THROW(load_config(dir / "missing.json"), UsageError);
}

TEST(Config, ResolvedConfigRoundTrips) {
  TempDir dir;
  ExperimentConfig c;
  c.dataset = "r.dat";
  c.algo = "CF-DA";
  c.phi = 0.8;
  c.n = 7;
  const std::string first = resolved_config_json(c);
  write_text(dir / "config.json", first);
  const ExperimentConfig loaded = load_config(dir / "config.json");
  EXPECT_EQ(resolved_config_json(loaded), first);
  EXPECT_EQ(resolve_preset(loaded).phi, 0.8);
  EXPECT_EQ(resolve_preset(loaded).n, 7);
}

TEST(Config, OverridesAndValidation) {
  ExperimentConfig c;
  c.algo = "CF-DM";
  c.n = 4;
  EXPECT_EQ(resolve_preset(c).pool, 20);
  c.algo = "CF-DA";
  c.pool = 3;
  EXPECT_THROW(resolve_preset(c), UsageError);
  c.pool.reset();
  c.ratio = 1.5;
  EXPECT_THROW(resolve_preset(c), UsageError);
  c.ratio.reset();
  c.algo = "nope";
  EXPECT_THROW(resolve_preset(c), UsageError);
  c.algo = "HI-RT";
  c.encoding = "weird";
  EXPECT_THROW(resolve_encoding(c), UsageError);
}

TEST(Experiment, MissingDatasetIsDataError) {
  ExperimentConfig c;
  c.dataset = "/nonexistent/ratings.dat";
  EXPECT_THROW(prepare_data(c), DataError);
}

TEST(Experiment, EveryPresetEvaluates) {
  Fixture f;
  set_quiet(true);
  const PreparedData data = prepare_data(f.config("HI-RT"));
  for (const auto& name : preset_names()) {
    const EvalReport r = evaluate_preset(resolve_preset(f.config(name)), data, 1);
    ASSERT_TRUE(r.auc.has_value()) << name;
    EXPECT_GE(*r.auc, 0.0);
    EXPECT_LE(*r.auc, 1.0);
    EXPECT_GT(r.test_examples, 0);
    EXPECT_GT(r.users_listed, 0) << name;
    for (const auto& list : r.lists) {
      EXPECT_LE(static_cast<int>(list.items.size()), 5) << name;
      for (const auto& s : list.items) EXPECT_FALSE(data.split.train.observed(list.user, s.item)) << name;
    }
    if (r.diversity) {
      EXPECT_GE(r.diversity->median, 0.0);
      EXPECT_LE(r.diversity->median, 1.0);
    }
  }
  set_quiet(false);
}

TEST(Experiment, OutputsAreByteIdenticalAcrossRuns) {
  Fixture f;
  set_quiet(true);
  for (const char* algo : {"HI-RT", "CF-DA", "HI-NN"}) {
    ExperimentConfig a = f.config(algo), b = f.config(algo);
    a.out = (f.dir / (std::string(algo) + "_a")).string();
    b.out = (f.dir / (std::string(algo) + "_b")).string();
    run_experiment(a);
    run_experiment(b);
    for (const char* file : {"report.txt", "recommendations.tsv", "diversity_hist.csv"})
      EXPECT_EQ(read_text(std::filesystem::path(a.out) / file), read_text(std::filesystem::path(b.out) / file))
          << algo << " " << file;
    const auto cfg = nlohmann::json::parse(read_text(std::filesystem::path(a.out) / "config.json"));
    EXPECT_EQ(cfg["algo"], algo);
  }
  set_quiet(false);
}

TEST(Experiment, ReportFormat) {
  EvalReport r;
  r.algo = "CF-RT";
  r.auc = 0.5;
  const std::string text = format_report(r);
  EXPECT_NE(text.find("auc_roc=0.500000"), std::string::npos) << text;
  EXPECT_NE(text.find("map=absent"), std::string::npos) << text;
}

TEST(Compare, TableLayout) {
  EvalReport a, b;
  a.algo = "CF-RT";
  b.algo = "HI-RT";
  a.auc = 0.55;
  b.auc = 0.6;
  b.diversity = diversity_report({0.2, 0.4});
  const std::string table = compare_table({a, b});
  std::istringstream in(table);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 7u);
  EXPECT_EQ(lines[0], "metric\tCF-RT\tHI-RT");
  EXPECT_EQ(lines[1].rfind("AUC-ROC\t", 0), 0u);
  EXPECT_EQ(lines[4], "Diversity median\tabsent\t0.300000");
  EXPECT_EQ(lines[6].rfind("mAP\t", 0), 0u);
}

TEST(Compare, WritesTableAndSubdirectories) {
  Fixture f;
  set_quiet(true);
  ExperimentConfig c = f.config("HI-RT");
  c.out = (f.dir / "cmp").string();
  const auto reports = run_compare(c, {"CF-RT", "HI-RT"});
  set_quiet(false);
  ASSERT_EQ(reports.size(), 2u);
  EXPECT_EQ(read_text(f.dir / "cmp" / "compare.tsv"), compare_table(reports));
  EXPECT_TRUE(std::filesystem::exists(f.dir / "cmp" / "CF-RT" / "report.txt"));
  EXPECT_THROW(run_compare(c, {}), UsageError);
}

TEST(Histogram, EmptyDiversityGivesHeaderOnly) {
  EXPECT_EQ(format_histogram(std::nullopt), "bin_low,bin_high,count\n");
  const std::string csv = format_histogram(diversity_report({0.01, 0.02, 0.99}, 20), 20);
  std::istringstream in(csv);
  std::string line;
  int rows = 0;
  std::getline(in, line);
  std::getline(in, line);
  EXPECT_EQ(line, "0.000000,0.050000,2");
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 19);
}

TEST(Loop, ValidationAndSingleTopic) {
  LoopConfig lc;
  lc.rounds = 1;
  EXPECT_THROW(simulate_loop(lc), UsageError);
  lc.rounds = 2;
  lc.topics.n_topics = 1;
  lc.topics.n_users = 40;
  lc.topics.n_items = 60;
  const LoopState s = simulate_loop(lc);
  ASSERT_EQ(s.rounds.size(), 2u);
  for (const auto& r : s.rounds) EXPECT_EQ(r.entropy, 0.0);
  EXPECT_GT(s.rounds[1].log_size, s.rounds[0].log_size);
}

TEST(Loop, DeterministicAndPlotData) {
  LoopConfig lc;
  lc.rounds = 3;
  lc.topics.n_users = 60;
  lc.topics.n_items = 90;
  const LoopState a = simulate_loop(lc), b = simulate_loop(lc);
  EXPECT_EQ(format_loop(a), format_loop(b));
  TempDir dir;
  emit_plot_data(a, dir.path());
  const std::string csv = read_text(dir / "loop_rounds.csv");
  EXPECT_EQ(csv.rfind("round,entropy,diversity,log_size,users_listed\n", 0), 0u);
  for (const auto& r : a.rounds) {
    EXPECT_GE(r.entropy, 0.0);
    EXPECT_LE(r.entropy, 1.0);
  }
}

TEST(Latency, CountsRequests) {
  RtModel m;
  m.n = 50;
  m.beta = 1.0;
  m.factors.k = 4;
  m.factors.left = RowMatrix::Ones(100, 4);
  m.factors.right = Eigen::MatrixXd::Ones(4, 50);
  SessionState s;
  s.x_row[3] = 1.0;
  const LatencyStats st = benchmark_recommend_rt(m, {s}, 200, 10);
  EXPECT_EQ(st.requests, 200);
  EXPECT_GE(st.p99_ms, 0.0);
  EXPECT_THROW(benchmark_recommend_rt(m, {}, 10, 10), UsageError);
}

RecommendService tiny_service() {
  std::vector<Interaction> log;
  Encoding e;
  log.push_back(encode_rating("alice", "a", 5, 1, e));
  log.push_back(encode_rating("alice", "b", 1, 2, e));
  log.push_back(encode_rating("bob", "b", 5, 3, e));
  log.push_back(encode_rating("bob", "c", 5, 4, e));
  log.push_back(encode_rating("carol", "a", 5, 5, e));
  log.push_back(encode_rating("carol", "c", 4, 6, e));
  log.push_back(encode_rating("carol", "d", 2, 7, e));
  const Dataset d = index_interactions(log);
  const FeedbackMatrices fm = build_matrices(d.interactions, d.users, d.items);
  RtOptions o;
  o.k = 2;
  return RecommendService(train_rt(fm, o), d.users, d.items, fm);
}

TEST(Service, RecommendAndEvents) {
  RecommendService svc = tiny_service();
  const auto list = nlohmann::json::parse(svc.recommend("alice", 2));
  ASSERT_TRUE(list.is_array());
  for (const auto& entry : list) {
    EXPECT_NE(entry["item"], "a");
    EXPECT_NE(entry["item"], "b");
    EXPECT_TRUE(entry.contains("score"));
    EXPECT_TRUE(entry.contains("channel"));
  }
  EXPECT_TRUE(nlohmann::json::parse(svc.recommend("stranger", 3)).empty());
  svc.event(R"({"user": "stranger", "item": "c", "feedback": "positive"})");
  const auto after = nlohmann::json::parse(svc.recommend("stranger", 3));
  EXPECT_FALSE(after.empty());
  for (const auto& entry : after) EXPECT_NE(entry["item"], "c");
  EXPECT_THROW(svc.event(R"({"user": "alice", "item": "zzz", "feedback": "positive"})"), DataError);
  EXPECT_THROW(svc.event(R"({"user": "alice", "item": "c", "feedback": "meh"})"), DataError);
  EXPECT_THROW(svc.event("not json"), DataError);
  EXPECT_THROW(svc.recommend("alice", 0), UsageError);
}

TEST(Service, JournalSurvivesRestart) {
  TempDir dir;
  {
    RecommendService svc = tiny_service();
    svc.attach_journal(dir / "events.log");
    svc.event(R"({"user": "dave", "item": "d", "feedback": "positive"})");
  }
  RecommendService restored = tiny_service();
  restored.attach_journal(dir / "events.log");
  for (const auto& entry : nlohmann::json::parse(restored.recommend("dave", 4))) EXPECT_NE(entry["item"], "d");
  EXPECT_FALSE(nlohmann::json::parse(restored.recommend("dave", 4)).empty());
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(HI_CLI_PATH) + " -q " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  Fixture f;
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli("frobnicate"), 1);
  EXPECT_EQ(run_cli("evaluate --input " + f.ratings + " --algo NOPE"), 1);
  EXPECT_EQ(run_cli("evaluate --input /nonexistent.dat --algo CF-RT"), 2);
  write_text(f.dir / "bad.dat", "1::2::9::3\n");
  EXPECT_EQ(run_cli("ingest --input " + (f.dir / "bad.dat").string()), 2);
  EXPECT_EQ(run_cli("evaluate --input " + f.ratings + " --algo CF-RT --k 3 --out " + (f.dir / "cli").string()), 0);
  EXPECT_TRUE(std::filesystem::exists(f.dir / "cli" / "report.txt"));
}

TEST(Cli, TrainThenRecommend) {
  Fixture f;
  const std::string model = (f.dir / "model").string();
  ASSERT_EQ(run_cli("train --input " + f.ratings + " --algo HI-RT --k 3 --out " + model), 0);
  EXPECT_EQ(run_cli("recommend --model " + model + " --user 3 --n 4"), 0);
  EXPECT_EQ(run_cli("recommend --model " + (f.dir / "nothing").string() + " --user 3"), 2);
}

}  // namespace
}  // namespace hi
