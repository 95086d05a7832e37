// hi: command-line front end.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hi/baselines.h"
#include "hi/harness.h"
#include "hi/ranking_nn.h"
#include "hi/realtime.h"
#include "hi/serve.h"

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  std::string config;
  std::string input;
  std::string algo;
  std::string out;
  std::string encoding;
  std::optional<uint64_t> seed;
  std::optional<int> k, n, threads;
  std::optional<double> beta, phi, ratio;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_algo) {
  cmd->add_option("--config", f.config, "JSON experiment config");
  cmd->add_option("--input", f.input, "ratings file (overrides config dataset)");
  if (with_algo) cmd->add_option("--algo", f.algo, "CF-RT|CF-MF|CF-NN|CF-DA|CF-DM|HI-RT|HI-NN");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--encoding", f.encoding, "binary|normalized");
  cmd->add_option("--seed", f.seed, "root seed");
  cmd->add_option("--k", f.k, "factor rank");
  cmd->add_option("--n", f.n, "list length");
  cmd->add_option("--beta", f.beta, "weight of negative feedback (realtime)");
  cmd->add_option("--phi", f.phi, "diversity weight (CF-DA)");
  cmd->add_option("--ratio", f.ratio, "share of p2p candidate slots");
  cmd->add_option("--threads", f.threads, "worker threads for factorization");
}

hi::ExperimentConfig make_config(const CommonFlags& f) {
  hi::ExperimentConfig c;
  if (!f.config.empty()) c = hi::load_config(f.config);
  if (!f.input.empty()) c.dataset = f.input;
  if (!f.algo.empty()) c.algo = f.algo;
  if (!f.out.empty()) c.out = f.out;
  if (!f.encoding.empty()) c.encoding = f.encoding;
  if (f.seed) c.seed = *f.seed;
  if (f.k) c.k = f.k;
  if (f.n) c.n = f.n;
  if (f.threads) c.threads = *f.threads;
  if (f.beta) c.beta = f.beta;
  if (f.phi) c.phi = f.phi;
  if (f.ratio) c.ratio = f.ratio;
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw hi::DataError("cannot write " + path.string());
  out << text;
}

std::string interactions_tsv(const std::vector<hi::Interaction>& log) {
  std::ostringstream out;
  for (const auto& e : log)
    out << e.user_id << '\t' << e.item_id << '\t' << e.value << '\t' << (e.positive ? 1 : 0) << '\t'
        << e.timestamp << '\n';
  return out.str();
}

int cmd_ingest(const CommonFlags& f) {
  const hi::ExperimentConfig c = make_config(f);
  if (c.dataset.empty()) throw hi::UsageError("ingest needs --input or a config dataset");
  const auto log = hi::deduplicate(hi::ingest_movielens(c.dataset, hi::resolve_encoding(c)));
  const hi::Dataset data = hi::index_interactions(log);
  long positives = 0;
  for (const auto& e : data.interactions) positives += e.positive;
  std::cout << "interactions=" << data.interactions.size() << "\nusers=" << data.users.size()
            << "\nitems=" << data.items.size() << "\npositives=" << positives << '\n';
  if (!c.out.empty()) {
    fs::create_directories(c.out);
    write_text(fs::path(c.out) / "interactions.tsv", interactions_tsv(data.interactions));
    data.users.save(fs::path(c.out) / "users.idx");
    data.items.save(fs::path(c.out) / "items.idx");
  }
  return 0;
}

int cmd_split(const CommonFlags& f, std::optional<double> split_ratio) {
  hi::ExperimentConfig c = make_config(f);
  if (split_ratio) c.split_ratio = *split_ratio;
  const hi::PreparedData d = hi::prepare_data(c);
  std::cout << "train=" << d.split.train_log.size() << "\ntest=" << d.split.test.size()
            << "\nordering_fallback=" << (d.split.ordering_fallback ? 1 : 0) << '\n';
  if (!c.out.empty()) {
    fs::create_directories(c.out);
    write_text(fs::path(c.out) / "train.tsv", interactions_tsv(d.split.train_log));
    std::ostringstream test;
    for (const auto& ex : d.split.test)
      test << d.dataset.users.raw(ex.user) << '\t' << d.dataset.items.raw(ex.item) << '\t' << ex.value
           << '\t' << (ex.label ? 1 : 0) << '\t' << ex.timestamp << '\n';
    write_text(fs::path(c.out) / "test.tsv", test.str());
  }
  return 0;
}

hi::FactorizeOptions factor_options(const hi::Preset& p, const hi::ExperimentConfig& c) {
  hi::FactorizeOptions fo;
  fo.k = p.k;
  fo.lambda = p.lambda;
  fo.iters = p.iters;
  fo.seed = c.seed;
  fo.threads = c.threads;
  return fo;
}

int cmd_train(const CommonFlags& f) {
  const hi::ExperimentConfig c = make_config(f);
  if (c.out.empty()) throw hi::UsageError("train needs --out");
  const hi::Preset p = hi::resolve_preset(c);
  const hi::PreparedData d = hi::prepare_data(c);
  const fs::path dir(c.out);
  fs::create_directories(dir);
  const auto& train = d.split.train;
  const auto fo = factor_options(p, c);
  const hi::FactorModel cm = hi::factorize(hi::gram_p2p(train), fo);
  hi::save_factor_model(cm, dir / "p2p.hifm");
  std::optional<hi::FactorModel> dm;
  if (p.use_negative && p.pipeline != hi::Pipeline::kRealtime) {
    dm = hi::factorize(hi::cross_n2p(train), fo);
    hi::save_factor_model(*dm, dir / "n2p.hifm");
  }
  if (p.pipeline == hi::Pipeline::kRealtime && p.use_negative) {
    hi::save_factor_model(hi::factorize(hi::stacked_h(train), fo), dir / "stacked.hifm");
  }
  if (p.pipeline == hi::Pipeline::kNeural) {
    const hi::MfFactors mf{&cm, dm ? &*dm : nullptr};
    hi::save_hi_nn(hi::train_ranker(p, d, mf, c.seed), dir / "ranker.hinn");
  }
  hi::ExperimentConfig saved = c;
  saved.out.clear();
  write_text(dir / "config.json", hi::resolved_config_json(saved));
  std::cout << "algo=" << p.name << "\nmodel_dir=" << dir.string() << '\n';
  return 0;
}

hi::RtModel load_rt(const fs::path& dir, const hi::Preset& p) {
  if (p.pipeline == hi::Pipeline::kRealtime && p.use_negative) {
    hi::RtModel m;
    m.factors = hi::load_factor_model(dir / "stacked.hifm");
    m.n = m.factors.cols();
    m.beta = p.beta;
    return m;
  }
  return hi::p2p_rt_model(hi::load_factor_model(dir / "p2p.hifm"));
}

hi::ExperimentConfig load_model_config(const fs::path& dir) {
  if (!fs::exists(dir / "config.json")) throw hi::DataError("no trained model in " + dir.string());
  return hi::load_config(dir / "config.json");
}

int cmd_recommend(const std::string& model_dir, const std::string& user, std::optional<int> n_flag) {
  const fs::path dir(model_dir);
  hi::ExperimentConfig c = load_model_config(dir);
  if (n_flag) c.n = n_flag;
  const hi::Preset p = hi::resolve_preset(c);
  const hi::PreparedData d = hi::prepare_data(c);
  const auto& train = d.split.train;
  const int u = d.dataset.users.find(user);
  if (u < 0) throw hi::DataError("unknown user '" + user + "'");

  hi::RecommendationList list;
  const hi::FactorModel cm = hi::load_factor_model(dir / "p2p.hifm");
  if (p.pipeline == hi::Pipeline::kRealtime) {
    const hi::RtModel model = load_rt(dir, p);
    const auto state = hi::SessionState::from_matrices(train, u);
    if (p.rerank == hi::Rerank::kDiversityMaximized) {
      list = hi::recommend_rt(model, state, p.pool);
      if (!list.items.empty()) list = hi::cf_dm_rerank(list.items, hi::ItemSimilarity(cm), p.n, u);
    } else {
      list = hi::recommend_rt(model, state, p.n);
    }
  } else {
    std::optional<hi::FactorModel> dm;
    if (p.use_negative) dm = hi::load_factor_model(dir / "n2p.hifm");
    const int want = p.pipeline == hi::Pipeline::kBatchMf && p.rerank == hi::Rerank::kNone ? p.n : p.pool;
    list = hi::mixed_candidates(train, cm, dm ? *dm : cm, u, want, dm ? p.ratio_p2p : 1.0);
    if (!dm && train.x().outerIndexPtr()[u + 1] == train.x().outerIndexPtr()[u]) list.items.clear();
    if (p.rerank == hi::Rerank::kDiversityAugmented && !list.items.empty())
      list = hi::cf_da_rerank(list.items, hi::ItemSimilarity(cm), p.phi, p.n, u);
    if (p.pipeline == hi::Pipeline::kNeural) {
      const hi::HiNnModel model = hi::load_hi_nn(dir / "ranker.hinn");
      const hi::MfFactors mf{&cm, dm ? &*dm : nullptr};
      for (auto& s : list.items) s.score = hi::predict(model, mf, train, u, s.item);
      std::stable_sort(list.items.begin(), list.items.end(), [](const auto& a, const auto& b) {
        return hi::ranks_before(a.score, a.item, b.score, b.item);
      });
      if (static_cast<int>(list.items.size()) > p.n) list.items.resize(p.n);
    }
  }
  list.user = u;
  std::cout << hi::format_recommendations({list}, d.dataset);
  if (static_cast<int>(list.items.size()) < p.n)
    hi::log_warning("only " + std::to_string(list.items.size()) + " of " + std::to_string(p.n) +
                    " items available for user " + user);
  return 0;
}

int cmd_evaluate(const CommonFlags& f) {
  const hi::EvalReport r = hi::run_experiment(make_config(f));
  std::cout << hi::format_report(r);
  return 0;
}

int cmd_compare(const CommonFlags& f, const std::vector<std::string>& algos) {
  const auto reports = hi::run_compare(make_config(f), algos);
  std::cout << hi::compare_table(reports);
  return 0;
}

int cmd_simulate(const CommonFlags& f, hi::LoopConfig lc) {
  if (f.seed) lc.seed = *f.seed;
  if (f.k) lc.k = *f.k;
  if (f.n) lc.n = *f.n;
  if (f.ratio) lc.ratio_p2p = *f.ratio;
  if (!f.algo.empty()) {
    const hi::Preset p = hi::preset(f.algo);
    if (!f.ratio) lc.ratio_p2p = p.use_negative ? 0.67 : 1.0;
  }
  const hi::LoopState state = hi::simulate_loop(lc);
  std::cout << hi::format_loop(state);
  if (!f.out.empty()) hi::emit_plot_data(state, f.out);
  return 0;
}

int cmd_serve(const std::string& model_dir, const std::string& host, int port, const std::string& journal) {
  const fs::path dir(model_dir);
  const hi::ExperimentConfig c = load_model_config(dir);
  const hi::Preset p = hi::resolve_preset(c);
  if (p.pipeline != hi::Pipeline::kRealtime) throw hi::UsageError("serve needs a realtime model (CF-RT or HI-RT)");
  const hi::PreparedData d = hi::prepare_data(c);
  hi::RecommendService service(load_rt(dir, p), d.dataset.users, d.dataset.items, d.split.train);
  if (!journal.empty()) service.attach_journal(journal);
  std::cerr << "listening on " << host << ':' << port << '\n';
  if (!hi::serve_http(service, host, port)) throw hi::UsageError("cannot bind " + host + ":" + std::to_string(port));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recommendation with positive and negative feedback inference"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "suppress warnings");

  CommonFlags f;
  auto* ingest = app.add_subcommand("ingest", "parse a ratings file and report counts");
  add_common(ingest, f, false);

  auto* split = app.add_subcommand("split", "temporal train/test split");
  add_common(split, f, false);
  std::optional<double> split_ratio;
  split->add_option("--split-ratio", split_ratio, "fraction of events in train");

  auto* train = app.add_subcommand("train", "train a preset and save its models");
  add_common(train, f, true);

  auto* recommend = app.add_subcommand("recommend", "top-n for one user from a trained model");
  std::string model_dir, user;
  std::optional<int> rec_n;
  recommend->add_option("--model", model_dir, "directory written by train")->required();
  recommend->add_option("--user", user, "raw user id")->required();
  recommend->add_option("--n", rec_n, "list length");

  auto* evaluate = app.add_subcommand("evaluate", "evaluate a preset on the temporal split");
  add_common(evaluate, f, true);

  auto* compare = app.add_subcommand("compare", "evaluate several presets into one table");
  add_common(compare, f, false);
  std::vector<std::string> algos = {"CF-RT", "CF-DM", "HI-RT"};
  compare->add_option("--algos", algos, "presets to compare")->delimiter(',');

  auto* simulate = app.add_subcommand("simulate-loop", "closed feedback loop on synthetic topics");
  add_common(simulate, f, true);
  hi::LoopConfig lc;
  simulate->add_option("--rounds", lc.rounds, "rounds (>= 2)");
  simulate->add_option("--topics", lc.topics.n_topics, "number of topics");
  simulate->add_option("--affinity", lc.topics.affinity, "in-topic positive probability");
  simulate->add_option("--users", lc.topics.n_users, "synthetic users");
  simulate->add_option("--items", lc.topics.n_items, "synthetic items");
  simulate->add_option("--impressions", lc.topics.impressions_per_user, "initial impressions per user");

  auto* serve = app.add_subcommand("serve", "HTTP realtime recommendation");
  std::string host = "127.0.0.1", journal;
  int port = 8080;
  serve->add_option("--model", model_dir, "directory written by train (CF-RT or HI-RT)")->required();
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "port");
  serve->add_option("--journal", journal, "append-only event journal");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  hi::set_quiet(quiet);

  try {
    if (*ingest) return cmd_ingest(f);
    if (*split) return cmd_split(f, split_ratio);
    if (*train) return cmd_train(f);
    if (*recommend) return cmd_recommend(model_dir, user, rec_n);
    if (*evaluate) return cmd_evaluate(f);
    if (*compare) return cmd_compare(f, algos);
    if (*simulate) return cmd_simulate(f, lc);
    if (*serve) return cmd_serve(model_dir, host, port, journal);
  } catch (const hi::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const hi::DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
