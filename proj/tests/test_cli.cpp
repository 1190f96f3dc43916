#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

// End-to-end checks that drive the installed binary through std::system.

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string("MGNM_LOG=quiet ") + MGNM_CLI_PATH + " " + args;
  const int status = std::system(cmd.c_str());
  return status < 0 ? status : WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("mgnm_cli_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& sub = "") const { return (path / sub).string(); }
};

void write_file(const fs::path& p, const std::string& body) {
  std::ofstream f(p);
  f << body;
}

// One shared tiny pipeline: synth -> train -> eval/inspect downstream.
struct Pipeline {
  TempDir dir;
  std::string data, run_dir, train_cfg;
  Pipeline() {
    write_file(dir.path / "synth.cfg",
               "synth_users=30\nsynth_items=40\nsynth_seq_len=10\nseed=3\n");
    REQUIRE(run("synth --config " + dir.str("synth.cfg") + " --out " + dir.str("data")) == 0);
    data = dir.str("data");
    train_cfg = dir.str("train.cfg");
    write_file(dir.path / "train.cfg",
               "embedding_dim=4\nnum_interests=2\nnum_layers=1\ntau=2\nepochs=2\n"
               "batch_size=8\nlearning_rate=0.01\ntheta1=0\ntheta2=0\n"
               "eval_negatives=20\nval_negatives=20\n");
    REQUIRE(run("train --config " + train_cfg + " --data " + data + " --out " +
                dir.str("run")) == 0);
    run_dir = dir.str("run");
  }
};

Pipeline& pipeline() {
  static Pipeline p;
  return p;
}

}  // namespace

TEST_CASE("synth writes a loadable split and planted-structure metadata") {
  Pipeline& p = pipeline();
  for (const char* f : {"vocab.tsv", "train.bin", "valid.bin", "test.bin", "clusters.tsv",
                        "clusters.json"})
    CHECK(fs::exists(fs::path(p.data) / f));
  json meta = json::parse(slurp(fs::path(p.data) / "clusters.json"));
  CHECK(meta["users"] == 30);
  CHECK(meta["items"] == 40);
  CHECK(meta["train_instances"].get<int>() > 0);

  // regeneration with the same seed is byte-identical
  TempDir again;
  write_file(again.path / "synth.cfg",
             "synth_users=30\nsynth_items=40\nsynth_seq_len=10\nseed=3\n");
  REQUIRE(run("synth --config " + again.str("synth.cfg") + " --out " + again.str("data")) == 0);
  CHECK(slurp(again.path / "data" / "train.bin") == slurp(fs::path(p.data) / "train.bin"));
  CHECK(slurp(again.path / "data" / "vocab.tsv") == slurp(fs::path(p.data) / "vocab.tsv"));
}

TEST_CASE("prepare ingests a raw interaction log") {
  TempDir dir;
  std::ostringstream raw;
  for (int u = 0; u < 6; ++u)
    for (int i = 0; i < 5; ++i)
      raw << "u" << u << ",i" << ((u + i) % 7) << ",5," << (100 * i + u) << "\n";
  write_file(dir.path / "raw.csv", raw.str());
  REQUIRE(run("prepare --raw " + dir.str("raw.csv") + " --out " + dir.str("out")) == 0);
  for (const char* f : {"vocab.tsv", "train.bin", "valid.bin", "test.bin"})
    CHECK(fs::exists(dir.path / "out" / f));

  write_file(dir.path / "bad.csv", "u1,i1,notarating,5\n");
  CHECK(run("prepare --raw " + dir.str("bad.csv") + " --out " + dir.str("bad")) != 0);
}

TEST_CASE("train emits a checkpoint, a jsonl log, and a summary") {
  Pipeline& p = pipeline();
  CHECK(fs::exists(fs::path(p.run_dir) / "checkpoint.bin"));
  CHECK(fs::exists(fs::path(p.run_dir) / "train_summary.json"));
  std::ifstream log(fs::path(p.run_dir) / "train_log.jsonl");
  std::string line;
  int epochs = 0;
  while (std::getline(log, line)) {
    json row = json::parse(line);
    CHECK(row.contains("epoch"));
    CHECK(row.contains("train_loss"));
    CHECK(row.contains("val_ndcg_at_k"));
    ++epochs;
  }
  CHECK(epochs == 2);
  json summary = json::parse(slurp(fs::path(p.run_dir) / "train_summary.json"));
  CHECK(summary["ablation"] == "full");
  CHECK(summary["epochs_run"] == 2);
}

TEST_CASE("eval writes twin metric tables and is repeatable") {
  Pipeline& p = pipeline();
  const std::string base = "eval --config " + p.train_cfg + " --data " + p.data +
                           " --checkpoint " + p.run_dir + "/checkpoint.bin";
  TempDir out;
  REQUIRE(run(base + " --per-user --out " + out.str("a")) == 0);
  json m = json::parse(slurp(out.path / "a" / "metrics.json"));
  CHECK(m["gauc"].get<double>() >= 0.0);
  CHECK(m["gauc"].get<double>() <= 1.0);
  CHECK(m["k"] == 5);
  const std::string tsv = slurp(out.path / "a" / "metrics.tsv");
  CHECK(tsv.find("gauc\tndcg_at_k") != std::string::npos);
  CHECK(fs::exists(out.path / "a" / "per_user.tsv"));

  REQUIRE(run(base + " --per-user --out " + out.str("b")) == 0);
  CHECK(slurp(out.path / "b" / "metrics.json") == slurp(out.path / "a" / "metrics.json"));
}

TEST_CASE("inspect tallies activated levels over the test split") {
  Pipeline& p = pipeline();
  TempDir out;
  REQUIRE(run("inspect --config " + p.train_cfg + " --data " + p.data + " --checkpoint " +
              p.run_dir + "/checkpoint.bin --pooling-compare --out " + out.str()) == 0);
  std::ifstream tsv(out.path / "levels.tsv");
  std::string header;
  std::getline(tsv, header);
  CHECK(header == "level\tcount");
  int level, count, total = 0, rows = 0;
  while (tsv >> level >> count) {
    CHECK(level == rows);
    total += count;
    ++rows;
  }
  CHECK(rows == 2);  // num_layers=1 -> levels 0 and 1
  json meta = json::parse(slurp(fs::path(p.data) / "clusters.json"));
  CHECK(total == meta["test_instances"].get<int>());
  CHECK(fs::exists(out.path / "pooling.tsv"));
  json j = json::parse(slurp(out.path / "levels.json"));
  CHECK(j["pooling"]["max"]["gauc"].get<double>() >= 0.0);
  CHECK(fs::exists(out.path / "levels_per_user.tsv"));
}

TEST_CASE("ablate covers every variant") {
  Pipeline& p = pipeline();
  TempDir out;
  REQUIRE(run("ablate --config " + p.train_cfg + " --data " + p.data + " --out " +
              out.str()) == 0);
  json rows = json::parse(slurp(out.path / "ablate.json"));
  CHECK(rows.size() == 9);
  const std::string tsv = slurp(out.path / "ablate.tsv");
  CHECK(tsv.find("\nfull\t") != std::string::npos);
  CHECK(tsv.find("\nscn_transformer\t") != std::string::npos);
}

TEST_CASE("sweep reports per-seed rows plus mean and std") {
  Pipeline& p = pipeline();
  TempDir out;
  REQUIRE(run("sweep --config " + p.train_cfg + " --data " + p.data + " --seed 1,2 --out " +
              out.str()) == 0);
  json j = json::parse(slurp(out.path / "sweep.json"));
  CHECK(j["per_seed"].size() == 2);
  CHECK(j["mean"].contains("ndcg_at_k"));
  CHECK(j["std"]["hit_at_k"].get<double>() >= 0.0);
  const std::string tsv = slurp(out.path / "sweep.tsv");
  CHECK(tsv.find("\nmean\t") != std::string::npos);
  CHECK(tsv.find("\nstd\t") != std::string::npos);
}

TEST_CASE("gradcheck passes and writes its report") {
  TempDir out;
  REQUIRE(run("gradcheck --seed 11 --out " + out.str() + " > /dev/null") == 0);
  json j = json::parse(slurp(out.path / "gradcheck.json"));
  bool saw_full = false;
  for (const json& row : j) {
    CHECK(row["passed"] == true);
    if (row["op"] == "full_loss") saw_full = true;
  }
  CHECK(saw_full);
}

TEST_CASE("failures exit nonzero with a diagnostic") {
  Pipeline& p = pipeline();
  TempDir dir;
  CHECK(run("") != 0);                                            // no subcommand
  CHECK(run("nosuchcommand") != 0);
  CHECK(run("train --data " + dir.str("missing")) != 0);          // missing data dir
  write_file(dir.path / "bad.cfg", "this line has no equals\n");
  CHECK(run("train --config " + dir.str("bad.cfg") + " --data " + p.data + " --out " +
            dir.str("o")) != 0);
  write_file(dir.path / "bad2.cfg", "embedding_dim=banana\n");
  CHECK(run("train --config " + dir.str("bad2.cfg") + " --data " + p.data + " --out " +
            dir.str("o2")) != 0);
}
