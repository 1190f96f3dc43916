#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "mgnm/dataio.hpp"
#include "mgnm/evaluator.hpp"
#include "mgnm/model.hpp"

// Multi-level loss (binary cross-entropy per level on the logistic-mapped
// scores, plus L1 adjacency and L2 parameter terms) and the Adam training
// loop with early stopping on validation NDCG.

namespace mgnm::train {

struct LossBreakdown {
  std::vector<double> per_level;  // mean BCE per level over batch x candidates
  double l1_adjacency = 0.0;      // theta1-weighted
  double l2_params = 0.0;         // theta2-weighted
  double total = 0.0;
};

using Gradients = std::map<std::string, Tensor>;

// Scores the positive target plus sampled negatives at every level for each
// sequence. When grads is non-null, accumulates d(total)/d(param) into it.
LossBreakdown compute_loss(const data::DatasetSplit& split,
                           const std::vector<data::InteractionSequence>& batch,
                           const model::ModelParameters& params,
                           const model::Hyperparameters& hp, model::Ablation ablation,
                           std::uint64_t negative_seed, Gradients* grads);

struct AdamState {
  Gradients first_moment;
  Gradients second_moment;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One Adam update; the item table's padding row is never touched.
void adam_step(model::ModelParameters& params, const Gradients& grads, AdamState& state,
               double learning_rate, int padding_index);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  eval::MetricsReport validation;
  double wall_ms = 0.0;
};

struct TrainResult {
  model::ModelParameters params;  // best-validation checkpoint (last if no validation)
  std::vector<EpochLog> log;
  int best_epoch = -1;
  double best_val_ndcg = 0.0;
  double final_train_loss = 0.0;
};

// Seeded shuffled mini-batches; negatives resampled fresh every epoch;
// deterministic for a fixed seed and thread count.
TrainResult train(const data::DatasetSplit& split, const model::Hyperparameters& hp,
                  model::Ablation ablation, std::ostream* log_stream = nullptr);

}  // namespace mgnm::train
