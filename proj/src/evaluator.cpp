#include "mgnm/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mgnm/predictor.hpp"
#include "mgnm/rng.hpp"

namespace mgnm::eval {

RankMetrics rank_metrics(const RankedInstance& instance, int k) {
  if (k < 1) throw std::invalid_argument("rank_metrics: k < 1");
  int rank = 1;
  for (double s : instance.negative_scores)
    if (s >= instance.positive_score) ++rank;
  RankMetrics m;
  if (rank <= k) {
    m.hit = 1.0;
    m.mrr = 1.0 / rank;
    m.ndcg = 1.0 / std::log2(rank + 1.0);
  }
  return m;
}

double gauc(const std::vector<RankedInstance>& instances, GaucWeighting weighting) {
  if (instances.empty()) throw std::invalid_argument("gauc: no instances");
  std::map<int, std::pair<double, std::int64_t>> per_user;  // wins, pairs
  std::map<int, int> counts;
  for (const RankedInstance& inst : instances) {
    if (inst.negative_scores.empty()) throw std::invalid_argument("gauc: instance with no negatives");
    auto& [wins, pairs] = per_user[inst.user_index];
    for (double s : inst.negative_scores) {
      if (inst.positive_score > s)
        wins += 1.0;
      else if (inst.positive_score == s)
        wins += 0.5;
      ++pairs;
    }
    counts[inst.user_index] += 1;
  }
  double num = 0, den = 0;
  for (const auto& [user, wp] : per_user) {
    const double auc = wp.first / static_cast<double>(wp.second);
    const double w = weighting == GaucWeighting::kInstanceCount ? counts[user] : 1.0;
    num += w * auc;
    den += w;
  }
  return den > 0 ? num / den : 0.0;
}

MetricsReport aggregate(const std::vector<RankedInstance>& instances, int k,
                        GaucWeighting weighting, bool collect_per_user) {
  MetricsReport r;
  r.k = k;
  r.instances = static_cast<int>(instances.size());
  if (instances.empty()) return r;
  std::map<int, PerUserDetail> detail;
  std::map<int, std::pair<double, std::int64_t>> auc_acc;
  for (const RankedInstance& inst : instances) {
    RankMetrics m = rank_metrics(inst, k);
    r.ndcg_at_k += m.ndcg;
    r.hit_at_k += m.hit;
    r.mrr_at_k += m.mrr;
    PerUserDetail& d = detail[inst.user_index];
    d.user = inst.user_index;
    d.instances += 1;
    d.ndcg += m.ndcg;
    d.hit += m.hit;
    d.mrr += m.mrr;
    auto& [wins, pairs] = auc_acc[inst.user_index];
    for (double s : inst.negative_scores) {
      if (inst.positive_score > s)
        wins += 1.0;
      else if (inst.positive_score == s)
        wins += 0.5;
      ++pairs;
    }
  }
  r.ndcg_at_k /= r.instances;
  r.hit_at_k /= r.instances;
  r.mrr_at_k /= r.instances;
  r.gauc = gauc(instances, weighting);
  if (collect_per_user) {
    for (auto& [user, d] : detail) {
      d.ndcg /= d.instances;
      d.hit /= d.instances;
      d.mrr /= d.instances;
      const auto& [wins, pairs] = auc_acc[user];
      d.auc = pairs > 0 ? wins / pairs : 0.0;
      r.per_user.push_back(d);
    }
  }
  return r;
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["gauc"] = gauc;
  j["ndcg_at_k"] = ndcg_at_k;
  j["hit_at_k"] = hit_at_k;
  j["mrr_at_k"] = mrr_at_k;
  j["k"] = k;
  j["instances"] = instances;
  if (!per_user.empty()) {
    nlohmann::json arr = nlohmann::json::array();
    for (const PerUserDetail& d : per_user) {
      arr.push_back({{"user", d.user},
                     {"instances", d.instances},
                     {"ndcg", d.ndcg},
                     {"hit", d.hit},
                     {"mrr", d.mrr},
                     {"auc", d.auc}});
    }
    j["per_user"] = arr;
  }
  return j.dump(2);
}

std::string MetricsReport::per_user_tsv() const {
  std::ostringstream out;
  out << "user\tinstances\tndcg\thit\tmrr\tauc\n";
  for (const PerUserDetail& d : per_user)
    out << d.user << "\t" << d.instances << "\t" << d.ndcg << "\t" << d.hit << "\t" << d.mrr
        << "\t" << d.auc << "\n";
  return out.str();
}

MetricsReport evaluate(const model::ModelParameters& params, const data::DatasetSplit& split,
                       const std::vector<data::InteractionSequence>& instances,
                       const model::Hyperparameters& hp, model::Ablation ablation,
                       const EvalOptions& options) {
  if (instances.empty()) throw std::invalid_argument("evaluate: no instances");
  const pred::Fusion fusion = model::fusion_for(ablation, options.sum_pool_inference);
  const Tensor& item_table = params.at("item_table");
  const int d = params.embedding_dim();
  std::vector<RankedInstance> ranked;
  ranked.reserve(instances.size());
  for (std::size_t idx = 0; idx < instances.size(); ++idx) {
    const data::InteractionSequence& seq = instances[idx];
    std::vector<Tensor> interests = model::interest_matrices(params, seq, hp, ablation);
    auto score_item = [&](int item) {
      Tensor cand({d});
      for (int j = 0; j < d; ++j) cand[j] = item_table.at(item, j);
      return pred::score_candidate(interests, cand, fusion).fused_score;
    };
    RankedInstance inst;
    inst.user_index = seq.user_index;
    inst.positive_score = score_item(seq.target_item);
    const std::vector<int>& history = split.user_history[static_cast<std::size_t>(seq.user_index)];
    std::vector<int> negatives = data::sample_negatives(
        split.num_items(), options.negatives, history,
        mix_seed(options.seed, static_cast<std::uint64_t>(seq.user_index),
                 static_cast<std::uint64_t>(idx)));
    inst.negative_scores.reserve(negatives.size());
    for (int neg : negatives) inst.negative_scores.push_back(score_item(neg));
    ranked.push_back(std::move(inst));
  }
  return aggregate(ranked, hp.metric_k, options.weighting, options.collect_per_user);
}

}  // namespace mgnm::eval
