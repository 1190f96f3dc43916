#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mgnm/trainer.hpp"

using namespace mgnm;
using model::Ablation;
using model::Hyperparameters;
using model::ModelParameters;

namespace {

// one user, items [0,1] -> target 2, with exactly one item (3) left over for
// negative sampling
data::DatasetSplit tiny_split(int capacity = 3) {
  data::DatasetSplit s;
  s.user_ids = {"u"};
  s.item_ids = {"a", "b", "c", "d"};
  s.padding_index = 4;
  s.capacity = capacity;
  data::InteractionSequence q;
  q.user_index = 0;
  q.item_indices.assign(capacity, s.padding_index);
  q.item_indices[0] = 0;
  q.item_indices[1] = 1;
  q.valid_length = 2;
  q.target_item = 2;
  s.train = {q};
  s.user_history = {{0, 1, 2}};
  return s;
}

Hyperparameters tiny_hp() {
  Hyperparameters hp;
  hp.embedding_dim = 4;
  hp.num_interests = 1;
  hp.num_layers = 0;
  hp.tau = 2;
  hp.capacity = 3;
  hp.train_negatives = 1;
  hp.batch_size = 4;
  hp.seed = 13;
  return hp;
}

double param_l2(const ModelParameters& p) {
  double s = 0;
  for (const auto& [name, t] : p.tensors)
    for (std::int64_t i = 0; i < t.size(); ++i) s += t[i] * t[i];
  return s;
}

}  // namespace

TEST_CASE("a zero logit with label one contributes ln 2 per level") {
  data::DatasetSplit s = tiny_split();
  Hyperparameters hp = tiny_hp();
  hp.num_layers = 2;
  hp.theta1 = 0.0;
  hp.theta2 = 0.0;
  hp.train_negatives = 1;
  ModelParameters params = ModelParameters::init(1, 4, hp, Ablation::kFull);
  // zero embeddings force every level score to logit 0
  params.at("user_table") = Tensor({1, 4});
  params.at("item_table") = Tensor({5, 4});
  train::LossBreakdown loss =
      train::compute_loss(s, s.train, params, hp, Ablation::kFull, 1, nullptr);
  REQUIRE(loss.per_level.size() == 3);
  // positive and negative both sit at sigmoid(0)=0.5, so each example is ln 2
  for (double x : loss.per_level) CHECK(x == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(loss.l1_adjacency == 0.0);
  CHECK(loss.l2_params == 0.0);
  CHECK(loss.total == doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("loss decomposition identity and nonnegativity") {
  data::SyntheticDataset ds = data::generate_synthetic(20, 40, 2, 8, 0.1, 3);
  Hyperparameters hp = tiny_hp();
  hp.capacity = ds.split.capacity;
  hp.num_layers = 1;
  hp.num_interests = 2;
  hp.theta1 = 1e-4;
  hp.theta2 = 1e-3;
  hp.train_negatives = 2;
  ModelParameters params =
      ModelParameters::init(ds.split.num_users(), ds.split.num_items(), hp, Ablation::kFull);
  std::vector<data::InteractionSequence> batch(ds.split.train.begin(),
                                               ds.split.train.begin() + 6);
  train::LossBreakdown loss =
      train::compute_loss(ds.split, batch, params, hp, Ablation::kFull, 7, nullptr);
  double sum = loss.l1_adjacency + loss.l2_params;
  for (double x : loss.per_level) {
    CHECK(x >= 0.0);
    sum += x;
  }
  CHECK(loss.total == doctest::Approx(sum).epsilon(1e-10));
  CHECK(loss.l1_adjacency > 0.0);
  CHECK(loss.l2_params == doctest::Approx(hp.theta2 * param_l2(params)).epsilon(1e-10));

  // ablations kill the matching term
  train::LossBreakdown no_l1 =
      train::compute_loss(ds.split, batch, params, hp, Ablation::kNoL1, 7, nullptr);
  CHECK(no_l1.l1_adjacency == 0.0);
  Hyperparameters free = hp;
  free.theta1 = 0.0;
  free.theta2 = 0.0;
  train::LossBreakdown bare =
      train::compute_loss(ds.split, batch, params, free, Ablation::kFull, 7, nullptr);
  CHECK(bare.l1_adjacency == 0.0);
  CHECK(bare.l2_params == 0.0);

  CHECK_THROWS(train::compute_loss(ds.split, {}, params, hp, Ablation::kFull, 7, nullptr));
}

TEST_CASE("one-user loss matches a hand-expanded oracle") {
  data::DatasetSplit s = tiny_split();
  Hyperparameters hp = tiny_hp();
  hp.theta1 = 1e-3;
  hp.theta2 = 1e-2;
  const int d = 4;
  ModelParameters params = ModelParameters::init(1, 4, hp, Ablation::kNoBilstm);
  train::LossBreakdown loss =
      train::compute_loss(s, s.train, params, hp, Ablation::kNoBilstm, 99, nullptr);

  // straight-line recomputation in plain doubles
  const Tensor& items = params.at("item_table");
  const Tensor& users = params.at("user_table");
  const Tensor& W1 = params.at("caps_proj_0");
  const Tensor& W2 = params.at("caps_out_0");
  auto sigmoid = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };

  // adjacency over the two valid items and its mean |.|
  double A[2][2], l1 = 0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double dot = 0;
      for (int p = 0; p < d; ++p) dot += items.at(i, p) * items.at(j, p) * users.at(0, p);
      A[i][j] = sigmoid(dot);
      l1 += std::abs(A[i][j]);
    }
  l1 /= 4.0;

  // routing, K=1, tau=2, zero encoder
  double z[2][d];
  for (int i = 0; i < 2; ++i)
    for (int q = 0; q < d; ++q) {
      z[i][q] = 0;
      for (int p = 0; p < d; ++p) z[i][q] += items.at(i, p) * W1.at(p, q);
    }
  Tensor g0 = caps::init_agreement(3, mix_seed(mix_seed(hp.seed, std::uint64_t(0)),
                                               std::uint64_t(0), std::uint64_t(0)));
  double g[2] = {g0[0], g0[1]};
  double o[d] = {0, 0, 0, 0};
  for (int it = 0; it < 2; ++it) {
    const double mx = std::max(g[0], g[1]);
    double c[2] = {std::exp(g[0] - mx), std::exp(g[1] - mx)};
    const double cz = c[0] + c[1];
    c[0] /= cz;
    c[1] /= cz;
    double v[d], r2 = 0;
    for (int q = 0; q < d; ++q) {
      v[q] = c[0] * z[0][q] + c[1] * z[1][q];
      r2 += v[q] * v[q];
    }
    const double factor = r2 > 0 ? std::sqrt(r2) / (1.0 + r2) : 0.0;
    for (int q = 0; q < d; ++q) o[q] = v[q] * factor;
    if (it == 0)
      for (int i = 0; i < 2; ++i) {
        double dz = 0;
        for (int q = 0; q < d; ++q) dz += z[i][q] * o[q];
        g[i] += dz;
      }
  }
  double qv[d];
  for (int q = 0; q < d; ++q) {
    qv[q] = 0;
    for (int p = 0; p < d; ++p) qv[q] += o[p] * W2.at(p, q);
    qv[q] = std::max(0.0, qv[q]);
  }

  // candidates: target 2 (label 1) and the single possible negative, item 3
  auto bce = [&](int item, double label) {
    double score = 0;
    for (int q = 0; q < d; ++q) score += qv[q] * items.at(item, q);
    const double p = sigmoid(score);
    return -(label * std::log(p) + (1.0 - label) * std::log(1.0 - p));
  };
  const double expected_level = 0.5 * (bce(2, 1.0) + bce(3, 0.0));
  REQUIRE(loss.per_level.size() == 1);
  CHECK(loss.per_level[0] == doctest::Approx(expected_level).epsilon(1e-10));
  CHECK(loss.l1_adjacency == doctest::Approx(hp.theta1 * l1).epsilon(1e-10));
  CHECK(loss.l2_params == doctest::Approx(hp.theta2 * param_l2(params)).epsilon(1e-10));
  CHECK(loss.total ==
        doctest::Approx(expected_level + hp.theta1 * l1 + hp.theta2 * param_l2(params))
            .epsilon(1e-10));
}

TEST_CASE("analytic parameter gradients match finite differences") {
  data::SyntheticDataset ds = data::generate_synthetic(8, 20, 2, 5, 0.1, 17);
  Hyperparameters hp;
  hp.embedding_dim = 4;
  hp.num_interests = 2;
  hp.num_layers = 2;
  hp.tau = 2;
  hp.capacity = ds.split.capacity;
  hp.train_negatives = 2;
  hp.theta1 = 1e-3;
  hp.theta2 = 1e-3;
  hp.seed = 21;
  ModelParameters params =
      ModelParameters::init(ds.split.num_users(), ds.split.num_items(), hp, Ablation::kFull);
  std::vector<data::InteractionSequence> batch(ds.split.train.begin(),
                                               ds.split.train.begin() + 3);

  train::Gradients grads;
  train::compute_loss(ds.split, batch, params, hp, Ablation::kFull, 5, &grads);

  const double h = 1e-5;
  double max_rel = 0;
  for (auto& [name, t] : params.tensors) {
    // a few probe coordinates per tensor
    for (std::int64_t i = 0; i < std::min<std::int64_t>(t.size(), 4); ++i) {
      const double orig = t[i];
      t[i] = orig + h;
      const double up =
          train::compute_loss(ds.split, batch, params, hp, Ablation::kFull, 5, nullptr).total;
      t[i] = orig - h;
      const double dn =
          train::compute_loss(ds.split, batch, params, hp, Ablation::kFull, 5, nullptr).total;
      t[i] = orig;
      const double numeric = (up - dn) / (2.0 * h);
      const double analytic = grads.at(name)[i];
      const double rel = std::abs(numeric - analytic) /
                         std::max({std::abs(numeric), std::abs(analytic), 1e-2});
      INFO(name, "[", i, "] analytic ", analytic, " numeric ", numeric);
      CHECK(rel < 1e-4);
      max_rel = std::max(max_rel, rel);
    }
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("adam with a zero gradient is a no-op") {
  Hyperparameters hp = tiny_hp();
  ModelParameters params = ModelParameters::init(2, 4, hp, Ablation::kFull);
  ModelParameters before = params;
  train::Gradients zeros;
  for (const auto& [name, t] : params.tensors) zeros[name] = Tensor(t.shape());
  train::AdamState state;
  train::adam_step(params, zeros, state, 0.1, 4);
  for (const auto& [name, t] : params.tensors) {
    const Tensor& b = before.at(name);
    for (std::int64_t i = 0; i < t.size(); ++i) CHECK(t[i] == b[i]);
  }
  CHECK(state.step == 1);
}

TEST_CASE("adam moves parameters against the gradient") {
  Hyperparameters hp = tiny_hp();
  ModelParameters params = ModelParameters::init(1, 4, hp, Ablation::kFull);
  train::Gradients grads;
  for (const auto& [name, t] : params.tensors) grads[name] = Tensor::full(t.shape(), 1.0);
  const double before = params.at("gcn_weight")[0];
  train::AdamState state;
  train::adam_step(params, grads, state, 0.01, 4);
  CHECK(params.at("gcn_weight")[0] < before);
}

TEST_CASE("the padding embedding row never changes") {
  data::SyntheticDataset ds = data::generate_synthetic(10, 25, 2, 6, 0.1, 29);
  Hyperparameters hp;
  hp.embedding_dim = 4;
  hp.num_interests = 1;
  hp.num_layers = 1;
  hp.tau = 2;
  hp.capacity = ds.split.capacity;
  hp.train_negatives = 2;
  hp.batch_size = 16;
  hp.epochs = 2;
  hp.seed = 31;
  train::TrainResult r = train::train(ds.split, hp, Ablation::kFull);
  const Tensor& items = r.params.at("item_table");
  const int pad = ds.split.padding_index;
  for (int j = 0; j < hp.embedding_dim; ++j) CHECK(items.at(pad, j) == 0.0);
  // and the rest of the table did move
  ModelParameters init =
      ModelParameters::init(ds.split.num_users(), ds.split.num_items(), hp, Ablation::kFull);
  bool moved = false;
  for (int j = 0; j < hp.embedding_dim; ++j)
    if (items.at(0, j) != init.at("item_table").at(0, j)) moved = true;
  CHECK(moved);
}

TEST_CASE("zero epochs returns the initialization") {
  data::SyntheticDataset ds = data::generate_synthetic(6, 15, 1, 5, 0.0, 41);
  Hyperparameters hp;
  hp.embedding_dim = 4;
  hp.num_interests = 1;
  hp.num_layers = 1;
  hp.tau = 2;
  hp.capacity = ds.split.capacity;
  hp.epochs = 0;
  hp.seed = 43;
  train::TrainResult r = train::train(ds.split, hp, Ablation::kFull);
  ModelParameters init =
      ModelParameters::init(ds.split.num_users(), ds.split.num_items(), hp, Ablation::kFull);
  for (const auto& [name, t] : r.params.tensors) {
    const Tensor& b = init.at(name);
    for (std::int64_t i = 0; i < t.size(); ++i) CHECK(t[i] == b[i]);
  }
  CHECK(r.log.empty());
}

TEST_CASE("training is deterministic per seed") {
  data::SyntheticDataset ds = data::generate_synthetic(12, 25, 2, 6, 0.1, 51);
  Hyperparameters hp;
  hp.embedding_dim = 4;
  hp.num_interests = 2;
  hp.num_layers = 1;
  hp.tau = 2;
  hp.capacity = ds.split.capacity;
  hp.train_negatives = 2;
  hp.batch_size = 8;
  hp.epochs = 2;
  hp.seed = 53;
  train::TrainResult a = train::train(ds.split, hp, Ablation::kFull);
  train::TrainResult b = train::train(ds.split, hp, Ablation::kFull);
  CHECK(std::abs(a.final_train_loss - b.final_train_loss) < 1e-6);
  for (const auto& [name, t] : a.params.tensors) {
    const Tensor& other = b.params.at(name);
    for (std::int64_t i = 0; i < t.size(); ++i) CHECK(t[i] == other[i]);
  }
  hp.seed = 54;
  train::TrainResult c = train::train(ds.split, hp, Ablation::kFull);
  CHECK(a.final_train_loss != c.final_train_loss);
}

TEST_CASE("two worker threads reproduce the single-threaded loss") {
  data::SyntheticDataset ds = data::generate_synthetic(10, 25, 2, 6, 0.1, 61);
  Hyperparameters hp;
  hp.embedding_dim = 4;
  hp.num_interests = 2;
  hp.num_layers = 1;
  hp.tau = 2;
  hp.capacity = ds.split.capacity;
  hp.train_negatives = 2;
  hp.seed = 63;
  ModelParameters params =
      ModelParameters::init(ds.split.num_users(), ds.split.num_items(), hp, Ablation::kFull);
  std::vector<data::InteractionSequence> batch(ds.split.train.begin(),
                                               ds.split.train.begin() + 8);
  train::Gradients g1, g2;
  train::LossBreakdown one =
      train::compute_loss(ds.split, batch, params, hp, Ablation::kFull, 9, &g1);
  hp.threads = 2;
  train::LossBreakdown two =
      train::compute_loss(ds.split, batch, params, hp, Ablation::kFull, 9, &g2);
  CHECK(two.total == doctest::Approx(one.total).epsilon(1e-12));
  for (const auto& [name, t] : g1) {
    const Tensor& other = g2.at(name);
    for (std::int64_t i = 0; i < t.size(); ++i)
      CHECK(other[i] == doctest::Approx(t[i]).epsilon(1e-9));
  }
}

TEST_CASE("ablation wiring") {
  CHECK(model::ablation_from_string("no_ugcn") == Ablation::kNoUgcn);
  CHECK(std::string(model::ablation_name(Ablation::kScnTransformer)) == "scn_transformer");
  CHECK(model::all_ablations().size() == 9);
  CHECK_THROWS(model::ablation_from_string("bogus"));

  data::SyntheticDataset ds = data::generate_synthetic(8, 20, 2, 6, 0.1, 71);
  Hyperparameters hp;
  hp.embedding_dim = 4;
  hp.num_interests = 2;
  hp.num_layers = 3;
  hp.tau = 2;
  hp.capacity = ds.split.capacity;
  hp.seed = 73;

  // no_ugcn: every level's interests and scores coincide
  ModelParameters p =
      ModelParameters::init(ds.split.num_users(), ds.split.num_items(), hp, Ablation::kNoUgcn);
  std::vector<Tensor> interests =
      model::interest_matrices(p, ds.split.train[0], hp, Ablation::kNoUgcn);
  REQUIRE(interests.size() == 4);
  for (int l = 1; l < 4; ++l)
    for (std::int64_t i = 0; i < interests[0].size(); ++i)
      CHECK(interests[l][i] == interests[0][i]);

  // scn_sumpool: one interest per level
  ModelParameters ps = ModelParameters::init(ds.split.num_users(), ds.split.num_items(), hp,
                                             Ablation::kScnSumpool);
  std::vector<Tensor> sp =
      model::interest_matrices(ps, ds.split.train[0], hp, Ablation::kScnSumpool);
  for (const Tensor& level : sp) CHECK(level.dim(0) == 1);
  CHECK(!ps.has("caps_proj_0"));
}

TEST_CASE("overfit probe drives the training loss down") {
  data::SyntheticDataset ds = data::generate_synthetic(16, 30, 2, 6, 0.0, 81);
  Hyperparameters hp;
  hp.embedding_dim = 8;
  hp.num_interests = 2;
  hp.num_layers = 1;
  hp.tau = 2;
  hp.capacity = ds.split.capacity;
  hp.train_negatives = 2;
  hp.batch_size = 16;
  hp.epochs = 350;
  hp.patience = 1000;  // no early stop; watch the raw trajectory
  hp.learning_rate = 1e-2;
  // at 0.02-scale initialization the data gradient is fourth-order small, so
  // any weight decay drowns it and Adam walks the model into the dead
  // all-zero-score attractor; the probe runs without regularization
  hp.theta1 = 0.0;
  hp.theta2 = 0.0;
  hp.seed = 83;
  train::TrainResult r = train::train(ds.split, hp, Ablation::kFull);
  REQUIRE(!r.log.empty());
  const double first = r.log.front().train_loss;
  const double last = r.log.back().train_loss;
  CHECK(last < first);
  CHECK(last < 0.5 * first);
  // 5-epoch moving average is non-increasing end to end
  auto avg = [&](std::size_t start) {
    double s = 0;
    for (std::size_t i = start; i < start + 5; ++i) s += r.log[i].train_loss;
    return s / 5.0;
  };
  CHECK(avg(r.log.size() - 5) < avg(0));
}

#include <filesystem>

#include "mgnm/checkpoint.hpp"

TEST_CASE("checkpoints round-trip through the f32 format") {
  Hyperparameters hp = tiny_hp();
  ModelParameters params = ModelParameters::init(3, 7, hp, Ablation::kFull);
  const std::string path =
      (std::filesystem::temp_directory_path() / "mgnm_ckpt_test.bin").string();
  ckpt::save(params, path);
  ModelParameters back = ckpt::load(path);
  REQUIRE(back.tensors.size() == params.tensors.size());
  for (const auto& [name, t] : params.tensors) {
    REQUIRE(back.has(name));
    const Tensor& b = back.at(name);
    REQUIRE(b.shape() == t.shape());
    for (std::int64_t i = 0; i < t.size(); ++i)
      CHECK(b[i] == doctest::Approx(t[i]).epsilon(1e-6));  // f32 payload
  }
  // the magic is checked on load
  {
    std::ofstream f(path, std::ios::binary);
    f << "NOPE";
  }
  CHECK_THROWS(ckpt::load(path));
  std::filesystem::remove(path);
  CHECK_THROWS(ckpt::load(path));
}
