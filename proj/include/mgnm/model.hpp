#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "mgnm/dataio.hpp"
#include "mgnm/graphconv.hpp"
#include "mgnm/predictor.hpp"
#include "mgnm/seqcaps.hpp"

// Parameter store and the per-user forward wiring, including the ablation
// variants of the interest extractor.

namespace mgnm::model {

struct Hyperparameters {
  double learning_rate = 1e-3;
  int batch_size = 256;
  int train_negatives = 5;
  int embedding_dim = 16;
  int num_interests = 4;   // K
  int num_layers = 3;      // L
  int tau = 3;
  double theta1 = 1e-6;
  double theta2 = 1e-5;
  int capacity = 20;       // m
  int epochs = 100;
  std::uint64_t seed = 42;
  double leaky_slope = 0.01;
  int eval_negatives = 1000;
  int val_negatives = 100;
  int metric_k = 5;
  int patience = 5;
  int threads = 1;

  void validate() const {
    if (learning_rate <= 0 || batch_size < 1 || train_negatives < 1 || embedding_dim < 2 ||
        num_interests < 1 || num_layers < 0 || tau < 1 || capacity < 1 || epochs < 0 ||
        metric_k < 1 || eval_negatives < 1 || threads < 1)
      throw std::invalid_argument("Hyperparameters: non-positive field");
    if (theta1 < 0 || theta2 < 0) throw std::invalid_argument("Hyperparameters: negative theta");
    if (leaky_slope <= 0 || leaky_slope >= 1)
      throw std::invalid_argument("Hyperparameters: leaky_slope out of (0,1)");
    if (embedding_dim % 2 != 0)
      throw std::invalid_argument("Hyperparameters: embedding_dim must be even");
  }
};

enum class Ablation {
  kFull,
  kNoUgcn,
  kNoL1,
  kNoBilstm,
  kNoMaxpool,
  kScnBilstm,
  kScnSumpool,
  kScnSelfatt,
  kScnTransformer,
};

const char* ablation_name(Ablation a);
Ablation ablation_from_string(const std::string& s);
std::vector<Ablation> all_ablations();

// True when the variant replaces the capsule network with a single-interest
// aggregator per level.
inline bool is_scn_replacement(Ablation a) {
  return a == Ablation::kScnBilstm || a == Ablation::kScnSumpool || a == Ablation::kScnSelfatt;
}

// Named trainable tensors. The item table has one extra row for padding that
// stays exactly zero for the whole life of the model.
struct ModelParameters {
  std::map<std::string, Tensor> tensors;  // ordered; iteration order is the wire order

  Tensor& at(const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw std::out_of_range("no parameter '" + name + "'");
    return it->second;
  }
  const Tensor& at(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw std::out_of_range("no parameter '" + name + "'");
    return it->second;
  }
  bool has(const std::string& name) const { return tensors.count(name) != 0; }

  int num_users() const { return at("user_table").dim(0); }
  int padding_index() const { return at("item_table").dim(0) - 1; }
  int embedding_dim() const { return at("item_table").dim(1); }

  static ModelParameters init(int num_users, int num_items, const Hyperparameters& hp,
                              Ablation ablation);
};

// Parameter leaves for one tape; pushed once, reused across users in a batch.
using ParamVars = std::map<std::string, Var>;
ParamVars push_params(Tape& tape, const ModelParameters& params);

struct UserForward {
  caps::InterestSet interests;
  Var adjacency_l1;  // scalar; constant 0 when the graph is bypassed
};

UserForward user_forward(Tape& tape, const ParamVars& P, const data::InteractionSequence& seq,
                         const Hyperparameters& hp, Ablation ablation);

// Inference helper: interest matrices ([K,d] per level) with no gradient
// recording.
std::vector<Tensor> interest_matrices(const ModelParameters& params,
                                      const data::InteractionSequence& seq,
                                      const Hyperparameters& hp, Ablation ablation);

inline pred::Fusion fusion_for(Ablation a, bool sum_pool_inference = false) {
  if (a == Ablation::kNoMaxpool) return pred::Fusion::kMean;
  if (sum_pool_inference) return pred::Fusion::kSum;
  return pred::Fusion::kMax;
}

}  // namespace mgnm::model
