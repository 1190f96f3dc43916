// mgnm command-line front end: data preparation, training, evaluation,
// ablation and seed-sweep grids, level-distribution inspection, gradient
// checking, and synthetic corpus generation.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mgnm/checkpoint.hpp"
#include "mgnm/dataio.hpp"
#include "mgnm/evaluator.hpp"
#include "mgnm/gradcheck.hpp"
#include "mgnm/graphconv.hpp"
#include "mgnm/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mgnm;

namespace {

enum class LogLevel { kQuiet = 0, kInfo = 1, kDebug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("MGNM_LOG");
  if (!env) return LogLevel::kInfo;
  const std::string v(env);
  if (v == "quiet" || v == "0") return LogLevel::kQuiet;
  if (v == "debug" || v == "2") return LogLevel::kDebug;
  return LogLevel::kInfo;
}

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::kInfo) std::cerr << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::kDebug) std::cerr << msg << "\n";
}

using Config = std::map<std::string, std::string>;

Config load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config " + path);
  Config cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string s) {
      const std::size_t b = s.find_first_not_of(" \t\r");
      const std::size_t e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw std::runtime_error(path + ":" + std::to_string(lineno) + ": empty key");
    cfg[key] = value;
  }
  return cfg;
}

template <typename T>
void set_from(const Config& cfg, const std::string& key, T& field) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return;
  std::istringstream s(it->second);
  s >> field;
  if (s.fail()) throw std::runtime_error("config key '" + key + "': bad value '" + it->second + "'");
}

model::Hyperparameters hp_from_config(const Config& cfg) {
  model::Hyperparameters hp;
  set_from(cfg, "learning_rate", hp.learning_rate);
  set_from(cfg, "batch_size", hp.batch_size);
  set_from(cfg, "train_negatives", hp.train_negatives);
  set_from(cfg, "embedding_dim", hp.embedding_dim);
  set_from(cfg, "num_interests", hp.num_interests);
  set_from(cfg, "num_layers", hp.num_layers);
  set_from(cfg, "tau", hp.tau);
  set_from(cfg, "theta1", hp.theta1);
  set_from(cfg, "theta2", hp.theta2);
  set_from(cfg, "capacity", hp.capacity);
  set_from(cfg, "epochs", hp.epochs);
  set_from(cfg, "seed", hp.seed);
  set_from(cfg, "leaky_slope", hp.leaky_slope);
  set_from(cfg, "eval_negatives", hp.eval_negatives);
  set_from(cfg, "val_negatives", hp.val_negatives);
  set_from(cfg, "metric_k", hp.metric_k);
  set_from(cfg, "patience", hp.patience);
  set_from(cfg, "threads", hp.threads);
  return hp;
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    seeds.push_back(std::stoull(part));
  }
  if (seeds.empty()) throw std::runtime_error("empty --seed list");
  return seeds;
}

void write_text(const std::string& path, const std::string& body) {
  fs::create_directories(fs::path(path).parent_path().empty() ? "." : fs::path(path).parent_path().string());
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << body;
}

json metrics_json(const eval::MetricsReport& m) {
  return json{{"gauc", m.gauc},       {"ndcg_at_k", m.ndcg_at_k}, {"hit_at_k", m.hit_at_k},
              {"mrr_at_k", m.mrr_at_k}, {"k", m.k},               {"instances", m.instances}};
}

std::string metrics_tsv_row(const eval::MetricsReport& m) {
  std::ostringstream s;
  s << m.gauc << "\t" << m.ndcg_at_k << "\t" << m.hit_at_k << "\t" << m.mrr_at_k;
  return s.str();
}

constexpr const char* kMetricsHeader = "gauc\tndcg_at_k\thit_at_k\tmrr_at_k";

// Shared command state assembled from config file + flag overrides.
struct Common {
  std::string config_path;
  std::string seed_list;
  std::string ablation = "full";
  int threads = -1;
  int k = -1;
  std::string out = ".";
  std::string data;

  Config cfg;
  model::Hyperparameters hp;
  model::Ablation ab = model::Ablation::kFull;
  std::vector<std::uint64_t> seeds;

  void finalize() {
    if (!config_path.empty()) cfg = load_config(config_path);
    hp = hp_from_config(cfg);
    if (cfg.count("ablation") && ablation == "full") ablation = cfg.at("ablation");
    if (data.empty() && cfg.count("data_dir")) data = cfg.at("data_dir");
    if (threads >= 1) hp.threads = threads;
    if (k >= 1) hp.metric_k = k;
    ab = model::ablation_from_string(ablation);
    if (!seed_list.empty())
      seeds = parse_seeds(seed_list);
    else
      seeds = {hp.seed};
    hp.seed = seeds.front();
    hp.validate();
  }

  void attach(CLI::App* app, bool needs_data) {
    app->add_option("--config", config_path, "key=value config file");
    app->add_option("--seed", seed_list, "seed or comma-separated seed list");
    app->add_option("--ablation", ablation, "model variant name");
    app->add_option("--threads", threads, "worker thread cap");
    app->add_option("--k", k, "metric cutoff");
    app->add_option("--out", out, "output directory");
    auto* opt = app->add_option("--data", data, "prepared split directory");
    if (needs_data) opt->check(CLI::ExistingDirectory);
  }
};

data::DatasetSplit load_data(const Common& c) {
  if (c.data.empty()) throw std::runtime_error("no --data directory given");
  log_debug("loading split from " + c.data);
  return data::load_split(c.data);
}

int cmd_synth(Common& c) {
  c.finalize();
  int users = 200, items = 100, interests = 2, seq_len = 10, clusters = 10;
  double noise = 0.1;
  set_from(c.cfg, "synth_users", users);
  set_from(c.cfg, "synth_items", items);
  set_from(c.cfg, "synth_interests", interests);
  set_from(c.cfg, "synth_seq_len", seq_len);
  set_from(c.cfg, "synth_noise", noise);
  set_from(c.cfg, "synth_clusters", clusters);
  data::SyntheticDataset ds = data::generate_synthetic(users, items, interests, seq_len, noise,
                                                       c.hp.seed, clusters);
  fs::create_directories(c.out);
  data::save_split(ds.split, c.out);
  std::ostringstream tsv;
  tsv << "item\tcluster\n";
  for (std::size_t i = 0; i < ds.item_cluster.size(); ++i)
    tsv << i << "\t" << ds.item_cluster[i] << "\n";
  write_text(c.out + "/clusters.tsv", tsv.str());
  json meta;
  meta["users"] = users;
  meta["items"] = items;
  meta["interests_per_user"] = interests;
  meta["seq_len"] = seq_len;
  meta["noise"] = noise;
  meta["clusters"] = clusters;
  meta["seed"] = c.hp.seed;
  meta["train_instances"] = ds.split.train.size();
  meta["validation_instances"] = ds.split.validation.size();
  meta["test_instances"] = ds.split.test.size();
  write_text(c.out + "/clusters.json", meta.dump(2) + "\n");
  log_info("wrote synthetic split to " + c.out);
  return 0;
}

int cmd_prepare(Common& c, const std::string& raw, const std::string& format_name,
                double min_rating) {
  c.finalize();
  const data::FileFormat format =
      format_name == "tsv" ? data::FileFormat::kTsv : data::FileFormat::kCsv;
  std::vector<data::Interaction> rows = data::load_interactions(raw, format);
  log_info("loaded " + std::to_string(rows.size()) + " interactions");
  data::DatasetSplit split = data::filter_and_split(rows, min_rating, data::SplitRatios{},
                                                    c.hp.capacity);
  fs::create_directories(c.out);
  data::save_split(split, c.out);
  log_info("wrote split: " + std::to_string(split.num_users()) + " users, " +
           std::to_string(split.num_items()) + " items");
  return 0;
}

int cmd_train(Common& c) {
  c.finalize();
  data::DatasetSplit split = load_data(c);
  if (c.hp.capacity != split.capacity) {
    log_debug("capacity taken from split: " + std::to_string(split.capacity));
    c.hp.capacity = split.capacity;
  }
  fs::create_directories(c.out);
  std::ofstream log_file(c.out + "/train_log.jsonl");
  train::TrainResult r = train::train(split, c.hp, c.ab, &log_file);
  ckpt::save(r.params, c.out + "/checkpoint.bin");
  json summary;
  summary["final_train_loss"] = r.final_train_loss;
  summary["best_epoch"] = r.best_epoch;
  summary["best_val_ndcg"] = r.best_val_ndcg;
  summary["epochs_run"] = r.log.size();
  summary["ablation"] = model::ablation_name(c.ab);
  summary["seed"] = c.hp.seed;
  write_text(c.out + "/train_summary.json", summary.dump(2) + "\n");
  log_info("final train loss " + std::to_string(r.final_train_loss));
  return 0;
}

int cmd_eval(Common& c, const std::string& checkpoint, bool sum_pool, bool per_user) {
  c.finalize();
  data::DatasetSplit split = load_data(c);
  c.hp.capacity = split.capacity;
  model::ModelParameters params = ckpt::load(checkpoint);
  eval::EvalOptions opt;
  opt.negatives = std::min(c.hp.eval_negatives, split.num_items() - 1);
  opt.seed = c.hp.seed;
  opt.sum_pool_inference = sum_pool;
  opt.collect_per_user = per_user;
  eval::MetricsReport m = eval::evaluate(params, split, split.test, c.hp, c.ab, opt);
  fs::create_directories(c.out);
  write_text(c.out + "/metrics.json", m.to_json() + "\n");
  write_text(c.out + "/metrics.tsv",
             std::string(kMetricsHeader) + "\n" + metrics_tsv_row(m) + "\n");
  if (per_user) write_text(c.out + "/per_user.tsv", m.per_user_tsv());
  log_info("gauc " + std::to_string(m.gauc) + " ndcg@" + std::to_string(m.k) + " " +
           std::to_string(m.ndcg_at_k));
  return 0;
}

eval::MetricsReport train_and_eval(const data::DatasetSplit& split, model::Hyperparameters hp,
                                   model::Ablation ab, bool sum_pool = false) {
  hp.capacity = split.capacity;
  train::TrainResult r = train::train(split, hp, ab);
  eval::EvalOptions opt;
  opt.negatives = std::min(hp.eval_negatives, split.num_items() - 1);
  opt.seed = hp.seed;
  opt.sum_pool_inference = sum_pool;
  return eval::evaluate(r.params, split, split.test, hp, ab, opt);
}

int cmd_ablate(Common& c) {
  c.finalize();
  data::DatasetSplit split = load_data(c);
  std::ostringstream tsv;
  tsv << "ablation\t" << kMetricsHeader << "\n";
  json rows = json::array();
  for (model::Ablation ab : model::all_ablations()) {
    log_info(std::string("ablate: ") + model::ablation_name(ab));
    eval::MetricsReport m = train_and_eval(split, c.hp, ab);
    tsv << model::ablation_name(ab) << "\t" << metrics_tsv_row(m) << "\n";
    json row = metrics_json(m);
    row["ablation"] = model::ablation_name(ab);
    rows.push_back(row);
  }
  fs::create_directories(c.out);
  write_text(c.out + "/ablate.tsv", tsv.str());
  write_text(c.out + "/ablate.json", rows.dump(2) + "\n");
  log_info("wrote ablation grid to " + c.out);
  return 0;
}

int cmd_sweep(Common& c) {
  c.finalize();
  data::DatasetSplit split = load_data(c);
  std::ostringstream tsv;
  tsv << "seed\t" << kMetricsHeader << "\n";
  json rows = json::array();
  std::vector<eval::MetricsReport> reports;
  for (std::uint64_t seed : c.seeds) {
    model::Hyperparameters hp = c.hp;
    hp.seed = seed;
    log_info("sweep: seed " + std::to_string(seed));
    eval::MetricsReport m = train_and_eval(split, hp, c.ab);
    reports.push_back(m);
    tsv << seed << "\t" << metrics_tsv_row(m) << "\n";
    json row = metrics_json(m);
    row["seed"] = seed;
    rows.push_back(row);
  }
  auto stats = [&](auto pick) {
    double mean = 0;
    for (const auto& m : reports) mean += pick(m);
    mean /= static_cast<double>(reports.size());
    double var = 0;
    for (const auto& m : reports) var += (pick(m) - mean) * (pick(m) - mean);
    var /= static_cast<double>(reports.size());
    return std::pair<double, double>(mean, std::sqrt(var));
  };
  const auto [g_m, g_s] = stats([](const eval::MetricsReport& m) { return m.gauc; });
  const auto [n_m, n_s] = stats([](const eval::MetricsReport& m) { return m.ndcg_at_k; });
  const auto [h_m, h_s] = stats([](const eval::MetricsReport& m) { return m.hit_at_k; });
  const auto [r_m, r_s] = stats([](const eval::MetricsReport& m) { return m.mrr_at_k; });
  tsv << "mean\t" << g_m << "\t" << n_m << "\t" << h_m << "\t" << r_m << "\n";
  tsv << "std\t" << g_s << "\t" << n_s << "\t" << h_s << "\t" << r_s << "\n";
  json out;
  out["per_seed"] = rows;
  out["mean"] = {{"gauc", g_m}, {"ndcg_at_k", n_m}, {"hit_at_k", h_m}, {"mrr_at_k", r_m}};
  out["std"] = {{"gauc", g_s}, {"ndcg_at_k", n_s}, {"hit_at_k", h_s}, {"mrr_at_k", r_s}};
  fs::create_directories(c.out);
  write_text(c.out + "/sweep.tsv", tsv.str());
  write_text(c.out + "/sweep.json", out.dump(2) + "\n");
  log_info("wrote seed sweep to " + c.out);
  return 0;
}

int cmd_inspect(Common& c, const std::string& checkpoint, bool pooling_compare) {
  c.finalize();
  data::DatasetSplit split = load_data(c);
  c.hp.capacity = split.capacity;
  model::ModelParameters params = ckpt::load(checkpoint);
  const int num_levels = c.hp.num_layers + 1;
  std::vector<std::int64_t> histogram(static_cast<std::size_t>(num_levels), 0);
  std::map<int, std::vector<std::int64_t>> per_user;
  for (const data::InteractionSequence& seq : split.test) {
    std::vector<Tensor> interests = model::interest_matrices(params, seq, c.hp, c.ab);
    Tensor cand({params.embedding_dim()});
    for (int j = 0; j < params.embedding_dim(); ++j)
      cand[j] = params.at("item_table").at(seq.target_item, j);
    pred::PredictionOutput out = pred::score_candidate(interests, cand);
    const int level = pred::activated_level(out);
    histogram[static_cast<std::size_t>(level)] += 1;
    auto& h = per_user[seq.user_index];
    h.resize(static_cast<std::size_t>(num_levels), 0);
    h[static_cast<std::size_t>(level)] += 1;
  }
  std::ostringstream tsv;
  tsv << "level\tcount\n";
  for (int l = 0; l < num_levels; ++l) tsv << l << "\t" << histogram[static_cast<std::size_t>(l)] << "\n";
  fs::create_directories(c.out);
  write_text(c.out + "/levels.tsv", tsv.str());
  json j;
  j["histogram"] = histogram;
  j["ablation"] = model::ablation_name(c.ab);

  std::ostringstream pu;
  pu << "user";
  for (int l = 0; l < num_levels; ++l) pu << "\tlevel" << l;
  pu << "\n";
  for (const auto& [user, h] : per_user) {
    pu << user;
    for (std::int64_t n : h) pu << "\t" << n;
    pu << "\n";
  }
  write_text(c.out + "/levels_per_user.tsv", pu.str());

  if (pooling_compare) {
    eval::EvalOptions opt;
    opt.negatives = std::min(c.hp.eval_negatives, split.num_items() - 1);
    opt.seed = c.hp.seed;
    eval::MetricsReport max_pool = eval::evaluate(params, split, split.test, c.hp, c.ab, opt);
    opt.sum_pool_inference = true;
    eval::MetricsReport sum_pool = eval::evaluate(params, split, split.test, c.hp, c.ab, opt);
    std::ostringstream cmp;
    cmp << "pooling\t" << kMetricsHeader << "\n";
    cmp << "max\t" << metrics_tsv_row(max_pool) << "\n";
    cmp << "sum\t" << metrics_tsv_row(sum_pool) << "\n";
    write_text(c.out + "/pooling.tsv", cmp.str());
    j["pooling"] = {{"max", metrics_json(max_pool)}, {"sum", metrics_json(sum_pool)}};
  }
  write_text(c.out + "/levels.json", j.dump(2) + "\n");
  log_info("wrote level distribution to " + c.out);
  return 0;
}

// Finite-difference sweep over the op library plus the full per-user loss.
int cmd_gradcheck(Common& c) {
  c.finalize();
  std::vector<GradCheckReport> reports;
  std::mt19937_64 gen(c.hp.seed);
  auto rand_t = [&](std::vector<int> shape, double scale = 1.0) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> dist(-scale, scale);
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = dist(gen);
    return t;
  };
  auto scalarized = [&](const char* name, std::function<Var(Tape&, Var)> op,
                        const Tensor& point, const Tensor& cot) {
    reports.push_back(grad_check(
        name,
        [op, cot](Tape& t, Var x) { return ops::dot(op(t, x), t.constant(cot)); }, point, 1e-4));
  };
  const Tensor v4 = rand_t({4}), c4 = rand_t({4}), m44 = rand_t({4, 4}), c44 = rand_t({4, 4});
  scalarized("sigmoid", [](Tape&, Var x) { return ops::sigmoid(x); }, v4, c4);
  scalarized("tanh", [](Tape&, Var x) { return ops::tanh_op(x); }, v4, c4);
  scalarized("softmax", [](Tape&, Var x) { return ops::softmax(x); }, v4, c4);
  scalarized("squash", [](Tape&, Var x) { return ops::squash(x); }, v4, c4);
  scalarized("leaky_relu", [](Tape&, Var x) { return ops::leaky_relu(x, 0.01); },
             rand_t({4}, 2.0), c4);
  const Tensor b44 = rand_t({4, 4});
  scalarized("matmul",
             [&b44](Tape& t, Var x) { return ops::matmul(x, t.constant(b44)); }, m44, c44);
  reports.push_back(grad_check(
      "bce_with_logits",
      [](Tape& t, Var x) { return ops::bce_with_logits(ops::sum(x), 1.0); }, v4, 1e-4));

  // full per-user loss at the acceptance dimensions
  {
    data::SyntheticDataset ds = data::generate_synthetic(6, 20, 2, 5, 0.1, c.hp.seed);
    model::Hyperparameters hp;
    hp.embedding_dim = 4;
    hp.num_interests = 2;
    hp.num_layers = 2;
    hp.tau = 2;
    hp.capacity = ds.split.capacity;
    hp.train_negatives = 2;
    hp.theta1 = 1e-3;
    hp.theta2 = 1e-3;
    hp.seed = c.hp.seed;
    model::ModelParameters params =
        model::ModelParameters::init(ds.split.num_users(), ds.split.num_items(), hp,
                                     model::Ablation::kFull);
    std::vector<data::InteractionSequence> batch = {ds.split.train[0], ds.split.train[1]};
    train::Gradients grads;
    train::compute_loss(ds.split, batch, params, hp, model::Ablation::kFull, 3, &grads);
    const double h = 1e-5;
    double max_rel = 0;
    for (auto& [name, t] : params.tensors) {
      for (std::int64_t i = 0; i < std::min<std::int64_t>(t.size(), 3); ++i) {
        const double orig = t[i];
        t[i] = orig + h;
        const double up = train::compute_loss(ds.split, batch, params, hp,
                                              model::Ablation::kFull, 3, nullptr)
                              .total;
        t[i] = orig - h;
        const double dn = train::compute_loss(ds.split, batch, params, hp,
                                              model::Ablation::kFull, 3, nullptr)
                              .total;
        t[i] = orig;
        const double numeric = (up - dn) / (2.0 * h);
        const double rel = std::abs(numeric - grads.at(name)[i]) /
                           std::max({std::abs(numeric), std::abs(grads.at(name)[i]), 1e-2});
        max_rel = std::max(max_rel, rel);
      }
    }
    GradCheckReport full;
    full.op_name = "full_loss";
    full.max_rel_error = max_rel;
    full.tolerance = 1e-4;
    full.passed = max_rel <= 1e-4;
    reports.push_back(full);
  }

  bool all_passed = true;
  std::ostringstream tsv;
  tsv << "op\tmax_rel_error\ttolerance\tpassed\n";
  for (const GradCheckReport& r : reports) {
    std::cout << r.op_name << ": max_rel_error " << r.max_rel_error << " "
              << (r.passed ? "OK" : "FAIL") << "\n";
    tsv << r.op_name << "\t" << r.max_rel_error << "\t" << r.tolerance << "\t" << r.passed
        << "\n";
    all_passed = all_passed && r.passed;
  }
  fs::create_directories(c.out);
  write_text(c.out + "/gradcheck.tsv", tsv.str());
  json j = json::array();
  for (const GradCheckReport& r : reports)
    j.push_back({{"op", r.op_name},
                 {"max_rel_error", r.max_rel_error},
                 {"tolerance", r.tolerance},
                 {"passed", r.passed}});
  write_text(c.out + "/gradcheck.json", j.dump(2) + "\n");
  if (!all_passed) throw std::runtime_error("gradient check failed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-grained sequential recommender"};
  app.require_subcommand(1);

  Common c_synth, c_prepare, c_train, c_eval, c_ablate, c_sweep, c_inspect, c_grad;

  auto* synth = app.add_subcommand("synth", "generate a planted-interest synthetic corpus");
  c_synth.attach(synth, false);

  auto* prepare = app.add_subcommand("prepare", "ingest a raw interaction log");
  c_prepare.attach(prepare, false);
  std::string raw_path, format_name = "csv";
  double min_rating = 2.0;
  prepare->add_option("--raw", raw_path, "raw csv/tsv interaction file")
      ->required()
      ->check(CLI::ExistingFile);
  prepare->add_option("--format", format_name, "csv or tsv")
      ->check(CLI::IsMember({"csv", "tsv"}));
  prepare->add_option("--min-rating", min_rating, "keep interactions rated above this");

  auto* train_cmd = app.add_subcommand("train", "train a model on a prepared split");
  c_train.attach(train_cmd, true);

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  c_eval.attach(eval_cmd, true);
  std::string eval_ckpt;
  bool eval_sum_pool = false, eval_per_user = false;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_flag("--sum-pool", eval_sum_pool, "sum-pool fusion at inference");
  eval_cmd->add_flag("--per-user", eval_per_user, "emit the per-user metric table");

  auto* ablate = app.add_subcommand("ablate", "train and evaluate every model variant");
  c_ablate.attach(ablate, true);

  auto* sweep = app.add_subcommand("sweep", "train and evaluate over a seed list");
  c_sweep.attach(sweep, true);

  auto* inspect = app.add_subcommand("inspect", "activated-level distribution of a checkpoint");
  c_inspect.attach(inspect, true);
  std::string inspect_ckpt;
  bool pooling_compare = false;
  inspect->add_option("--checkpoint", inspect_ckpt, "model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  inspect->add_flag("--pooling-compare", pooling_compare, "emit max-vs-sum pooling metrics");

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  c_grad.attach(gradcheck, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(c_synth);
    if (prepare->parsed()) return cmd_prepare(c_prepare, raw_path, format_name, min_rating);
    if (train_cmd->parsed()) return cmd_train(c_train);
    if (eval_cmd->parsed()) return cmd_eval(c_eval, eval_ckpt, eval_sum_pool, eval_per_user);
    if (ablate->parsed()) return cmd_ablate(c_ablate);
    if (sweep->parsed()) return cmd_sweep(c_sweep);
    if (inspect->parsed()) return cmd_inspect(c_inspect, inspect_ckpt, pooling_compare);
    if (gradcheck->parsed()) return cmd_gradcheck(c_grad);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no command\n";
  return 1;
}
