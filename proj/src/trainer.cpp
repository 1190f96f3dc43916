#include "mgnm/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "mgnm/predictor.hpp"
#include "mgnm/rng.hpp"

namespace mgnm::train {

namespace {

struct ChunkResult {
  std::vector<double> per_level;
  double l1_sum = 0.0;
  Gradients grads;
};

Gradients zero_like(const model::ModelParameters& params) {
  Gradients g;
  for (const auto& [name, t] : params.tensors) g[name] = Tensor(t.shape());
  return g;
}

void add_into(Gradients& dst, const Gradients& src) {
  for (auto& [name, t] : dst) {
    const Tensor& s = src.at(name);
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] += s[i];
  }
}

// Loss contribution of one chunk of the batch. Gradients (if requested) are
// harvested per user, then the tape is truncated back to the parameter
// leaves.
ChunkResult run_chunk(const data::DatasetSplit& split,
                      const std::vector<data::InteractionSequence>& batch, std::size_t begin,
                      std::size_t end, const model::ModelParameters& params,
                      const model::Hyperparameters& hp, model::Ablation ablation,
                      std::uint64_t negative_seed, double example_weight, double theta1_eff,
                      bool want_grads) {
  const int num_levels = hp.num_layers + 1;
  ChunkResult res;
  res.per_level.assign(static_cast<std::size_t>(num_levels), 0.0);
  if (want_grads) res.grads = zero_like(params);

  Tape tape(want_grads);
  model::ParamVars P = model::push_params(tape, params);
  const std::size_t mark = tape.num_nodes();

  for (std::size_t b = begin; b < end; ++b) {
    const data::InteractionSequence& seq = batch[b];
    model::UserForward fwd = model::user_forward(tape, P, seq, hp, ablation);

    const std::vector<int>& history = split.user_history[static_cast<std::size_t>(seq.user_index)];
    std::vector<int> candidates{seq.target_item};
    std::vector<int> negs = data::sample_negatives(
        split.num_items(), hp.train_negatives, history,
        mix_seed(negative_seed, static_cast<std::uint64_t>(seq.user_index),
                 static_cast<std::uint64_t>(b)));
    candidates.insert(candidates.end(), negs.begin(), negs.end());

    std::vector<Var> terms;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      Var cand = ops::row(P.at("item_table"), candidates[c]);
      std::vector<Var> scores = pred::level_score_vars(fwd.interests, cand);
      const double label = c == 0 ? 1.0 : 0.0;
      for (int l = 0; l < num_levels; ++l) {
        Var bce = ops::bce_with_logits(scores[static_cast<std::size_t>(l)], label);
        res.per_level[static_cast<std::size_t>(l)] += example_weight * tape.value(bce)[0];
        if (want_grads) terms.push_back(ops::scale(bce, example_weight));
      }
    }
    res.l1_sum += tape.value(fwd.adjacency_l1)[0];
    if (want_grads) {
      if (theta1_eff > 0.0) terms.push_back(ops::scale(fwd.adjacency_l1, theta1_eff));
      Var loss = terms[0];
      for (std::size_t i = 1; i < terms.size(); ++i) loss = ops::add(loss, terms[i]);
      tape.backward(loss);
      for (const auto& [name, var] : P) {
        const Tensor& g = tape.grad(var);
        Tensor& dst = res.grads[name];
        for (std::int64_t i = 0; i < g.size(); ++i) dst[i] += g[i];
      }
    }
    tape.truncate(mark);
  }
  return res;
}

}  // namespace

LossBreakdown compute_loss(const data::DatasetSplit& split,
                           const std::vector<data::InteractionSequence>& batch,
                           const model::ModelParameters& params,
                           const model::Hyperparameters& hp, model::Ablation ablation,
                           std::uint64_t negative_seed, Gradients* grads) {
  if (batch.empty()) throw std::invalid_argument("compute_loss: empty batch");
  const int num_levels = hp.num_layers + 1;
  const double theta1_eff =
      (ablation == model::Ablation::kNoL1 || ablation == model::Ablation::kNoUgcn) ? 0.0
                                                                                   : hp.theta1;
  // theta1 applies to the batch-mean adjacency L1, so each user carries
  // theta1 / batch_size
  const double theta1_per_user = theta1_eff / static_cast<double>(batch.size());
  const double example_weight =
      1.0 / (static_cast<double>(batch.size()) * (1.0 + hp.train_negatives));

  const bool want_grads = grads != nullptr;
  const int threads = std::min<int>(hp.threads, static_cast<int>(batch.size()));
  std::vector<ChunkResult> chunks(static_cast<std::size_t>(threads));
  if (threads <= 1) {
    chunks[0] = run_chunk(split, batch, 0, batch.size(), params, hp, ablation, negative_seed,
                          example_weight, theta1_per_user, want_grads);
  } else {
    std::vector<std::thread> pool;
    const std::size_t per = (batch.size() + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const std::size_t begin = static_cast<std::size_t>(t) * per;
      const std::size_t end = std::min(batch.size(), begin + per);
      pool.emplace_back([&, t, begin, end] {
        chunks[static_cast<std::size_t>(t)] =
            run_chunk(split, batch, begin, end, params, hp, ablation, negative_seed,
                      example_weight, theta1_per_user, want_grads);
      });
    }
    for (std::thread& th : pool) th.join();
  }

  LossBreakdown out;
  out.per_level.assign(static_cast<std::size_t>(num_levels), 0.0);
  double l1_mean = 0.0;
  for (const ChunkResult& c : chunks) {
    for (int l = 0; l < num_levels; ++l)
      out.per_level[static_cast<std::size_t>(l)] += c.per_level[static_cast<std::size_t>(l)];
    l1_mean += c.l1_sum;
  }
  l1_mean /= static_cast<double>(batch.size());
  out.l1_adjacency = theta1_eff * l1_mean;

  if (want_grads) {
    if (grads->empty()) *grads = zero_like(params);
    for (const ChunkResult& c : chunks) add_into(*grads, c.grads);
  }

  // L2 over every trainable tensor, with its gradient applied directly
  double l2 = 0.0;
  for (const auto& [name, t] : params.tensors) {
    for (std::int64_t i = 0; i < t.size(); ++i) l2 += t[i] * t[i];
    if (want_grads && hp.theta2 > 0.0) {
      Tensor& g = grads->at(name);
      for (std::int64_t i = 0; i < t.size(); ++i) g[i] += 2.0 * hp.theta2 * t[i];
    }
  }
  out.l2_params = hp.theta2 * l2;

  out.total = out.l1_adjacency + out.l2_params;
  for (double x : out.per_level) out.total += x;
  if (!std::isfinite(out.total)) throw std::runtime_error("compute_loss: non-finite loss");
  return out;
}

void adam_step(model::ModelParameters& params, const Gradients& grads, AdamState& state,
               double learning_rate, int padding_index) {
  if (state.first_moment.empty()) {
    state.first_moment = zero_like(params);
    state.second_moment = zero_like(params);
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (auto& [name, t] : params.tensors) {
    const Tensor& g = grads.at(name);
    Tensor& m = state.first_moment[name];
    Tensor& v = state.second_moment[name];
    const bool is_items = name == "item_table";
    const int d = t.rank() == 2 ? t.dim(1) : 0;
    for (std::int64_t i = 0; i < t.size(); ++i) {
      if (is_items && i >= static_cast<std::int64_t>(padding_index) * d &&
          i < static_cast<std::int64_t>(padding_index + 1) * d)
        continue;  // frozen padding row
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      t[i] -= learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

TrainResult train(const data::DatasetSplit& split, const model::Hyperparameters& hp,
                  model::Ablation ablation, std::ostream* log_stream) {
  hp.validate();
  if (split.train.empty()) throw std::invalid_argument("train: empty training set");

  TrainResult result;
  result.params = model::ModelParameters::init(split.num_users(), split.num_items(), hp, ablation);
  AdamState adam;

  std::vector<std::size_t> order(split.train.size());
  std::iota(order.begin(), order.end(), 0);

  model::ModelParameters best = result.params;
  int since_best = 0;

  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 shuffle_gen(mix_seed(hp.seed, static_cast<std::uint64_t>(epoch), 0x5u));
    std::shuffle(order.begin(), order.end(), shuffle_gen);
    const std::uint64_t neg_seed = mix_seed(hp.seed, static_cast<std::uint64_t>(epoch), 0x17u);

    double epoch_loss = 0.0;
    std::size_t seen = 0;
    int batch_id = 0;
    for (std::size_t start = 0; start < order.size(); start += hp.batch_size, ++batch_id) {
      const std::size_t end = std::min(order.size(), start + hp.batch_size);
      std::vector<data::InteractionSequence> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) batch.push_back(split.train[order[i]]);
      Gradients grads = zero_like(result.params);
      LossBreakdown loss;
      try {
        loss = compute_loss(split, batch, result.params, hp, ablation, neg_seed, &grads);
      } catch (const std::runtime_error& e) {
        throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) +
                                 " batch " + std::to_string(batch_id) + ": " + e.what());
      }
      adam_step(result.params, grads, adam, hp.learning_rate, split.padding_index);
      epoch_loss += loss.total * static_cast<double>(batch.size());
      seen += batch.size();
    }
    epoch_loss /= static_cast<double>(seen);
    result.final_train_loss = epoch_loss;

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = epoch_loss;
    if (!split.validation.empty()) {
      eval::EvalOptions opt;
      opt.negatives = std::min(hp.val_negatives, split.num_items() - 1);
      opt.seed = mix_seed(hp.seed, 0xE7A1u);
      log.validation =
          eval::evaluate(result.params, split, split.validation, hp, ablation, opt);
      if (result.best_epoch < 0 || log.validation.ndcg_at_k > result.best_val_ndcg) {
        result.best_val_ndcg = log.validation.ndcg_at_k;
        result.best_epoch = epoch;
        best = result.params;
        since_best = 0;
      } else {
        ++since_best;
      }
    }
    log.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();
    if (log_stream) {
      nlohmann::json j;
      j["epoch"] = log.epoch;
      j["train_loss"] = log.train_loss;
      if (!split.validation.empty()) {
        j["val_gauc"] = log.validation.gauc;
        j["val_ndcg_at_k"] = log.validation.ndcg_at_k;
        j["val_hit_at_k"] = log.validation.hit_at_k;
        j["val_mrr_at_k"] = log.validation.mrr_at_k;
      }
      j["wall_ms"] = log.wall_ms;
      (*log_stream) << j.dump() << "\n" << std::flush;
    }
    result.log.push_back(std::move(log));
    if (!split.validation.empty() && since_best >= hp.patience) break;
  }

  if (result.best_epoch >= 0) result.params = std::move(best);
  return result;
}

}  // namespace mgnm::train
