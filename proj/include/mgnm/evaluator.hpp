#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mgnm/dataio.hpp"
#include "mgnm/model.hpp"

// Ranking metrics under the sampled-negative protocol. Ties are broken
// pessimistically: the positive ranks after every equal-scored negative.

namespace mgnm::eval {

struct RankedInstance {
  int user_index = -1;
  double positive_score = 0.0;
  std::vector<double> negative_scores;
};

struct RankMetrics {
  double ndcg = 0.0;
  double hit = 0.0;
  double mrr = 0.0;
};

RankMetrics rank_metrics(const RankedInstance& instance, int k);

enum class GaucWeighting { kInstanceCount, kUniform };

// Per-user AUC (positive strictly above negative wins, ties count 0.5),
// averaged over users.
double gauc(const std::vector<RankedInstance>& instances,
            GaucWeighting weighting = GaucWeighting::kInstanceCount);

struct PerUserDetail {
  int user = -1;
  int instances = 0;
  double ndcg = 0.0;
  double hit = 0.0;
  double mrr = 0.0;
  double auc = 0.0;
};

struct MetricsReport {
  double gauc = 0.0;
  double ndcg_at_k = 0.0;
  double hit_at_k = 0.0;
  double mrr_at_k = 0.0;
  int k = 0;
  int instances = 0;
  std::vector<PerUserDetail> per_user;

  std::string to_json() const;
  std::string per_user_tsv() const;
};

MetricsReport aggregate(const std::vector<RankedInstance>& instances, int k,
                        GaucWeighting weighting = GaucWeighting::kInstanceCount,
                        bool collect_per_user = false);

struct EvalOptions {
  int negatives = 1000;
  std::uint64_t seed = 0;
  bool sum_pool_inference = false;
  bool collect_per_user = false;
  GaucWeighting weighting = GaucWeighting::kInstanceCount;
};

// Scores every instance with the fused predictor and aggregates all metrics.
MetricsReport evaluate(const model::ModelParameters& params, const data::DatasetSplit& split,
                       const std::vector<data::InteractionSequence>& instances,
                       const model::Hyperparameters& hp, model::Ablation ablation,
                       const EvalOptions& options);

}  // namespace mgnm::eval
