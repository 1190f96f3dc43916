#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mgnm/ops.hpp"
#include "mgnm/seqcaps.hpp"

// Candidate scoring: per level, attention over the K interests picks a
// preference vector, the inner product with the candidate gives the level
// score, and fusion (max-pool by default) gives the final score.

namespace mgnm::pred {

enum class Fusion { kMax, kMean, kSum };

struct PredictionOutput {
  std::vector<double> level_scores;      // one per level
  double fused_score = 0.0;
  Tensor attention_weights;              // [(L+1), K]
  Tensor level_preferences;              // [(L+1), d]
};

// Attention weights for one level given raw interest-candidate logits.
inline void softmax_inplace(std::vector<double>& v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double z = 0;
  for (double& x : v) {
    x = std::exp(x - mx);
    z += x;
  }
  for (double& x : v) x /= z;
}

// Plain-tensor scoring path used at evaluation time. interests: one [K,d]
// matrix per level.
inline PredictionOutput score_candidate(const std::vector<Tensor>& interests,
                                        const Tensor& candidate, Fusion fusion = Fusion::kMax) {
  if (interests.empty()) throw std::invalid_argument("score_candidate: no levels");
  const int L1 = static_cast<int>(interests.size());
  const int K = interests[0].dim(0);
  const int d = interests[0].dim(1);
  PredictionOutput out;
  out.level_scores.resize(static_cast<std::size_t>(L1));
  out.attention_weights = Tensor({L1, K});
  out.level_preferences = Tensor({L1, d});
  for (int l = 0; l < L1; ++l) {
    const Tensor& Q = interests[static_cast<std::size_t>(l)];
    std::vector<double> logits(static_cast<std::size_t>(K), 0.0);
    for (int k = 0; k < K; ++k) {
      double s = 0;
      for (int j = 0; j < d; ++j) s += Q.at(k, j) * candidate[j];
      logits[static_cast<std::size_t>(k)] = s;
    }
    softmax_inplace(logits);
    double score = 0;
    for (int k = 0; k < K; ++k) {
      out.attention_weights.at(l, k) = logits[static_cast<std::size_t>(k)];
      for (int j = 0; j < d; ++j)
        out.level_preferences.at(l, j) += logits[static_cast<std::size_t>(k)] * Q.at(k, j);
    }
    for (int j = 0; j < d; ++j) score += out.level_preferences.at(l, j) * candidate[j];
    if (!std::isfinite(score)) throw std::runtime_error("score_candidate: non-finite score");
    out.level_scores[static_cast<std::size_t>(l)] = score;
  }
  switch (fusion) {
    case Fusion::kMax:
      out.fused_score = *std::max_element(out.level_scores.begin(), out.level_scores.end());
      break;
    case Fusion::kMean: {
      double s = 0;
      for (double x : out.level_scores) s += x;
      out.fused_score = s / L1;
      break;
    }
    case Fusion::kSum: {
      double s = 0;
      for (double x : out.level_scores) s += x;
      out.fused_score = s;
      break;
    }
  }
  return out;
}

inline std::vector<PredictionOutput> score_candidates_batch(const std::vector<Tensor>& interests,
                                                            const Tensor& candidates,
                                                            Fusion fusion = Fusion::kMax) {
  if (candidates.rank() != 2) throw std::invalid_argument("score_candidates_batch: rank");
  const int n = candidates.dim(0), d = candidates.dim(1);
  std::vector<PredictionOutput> outs;
  outs.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Tensor cand({d});
    for (int j = 0; j < d; ++j) cand[j] = candidates.at(i, j);
    outs.push_back(score_candidate(interests, cand, fusion));
  }
  return outs;
}

// Smallest level attaining the max (deterministic tie-break).
inline int activated_level(const PredictionOutput& out) {
  int best = 0;
  for (int l = 1; l < static_cast<int>(out.level_scores.size()); ++l)
    if (out.level_scores[static_cast<std::size_t>(l)] >
        out.level_scores[static_cast<std::size_t>(best)])
      best = l;
  return best;
}

// Differentiable per-level scores for the training loss (Eqs. 12-14); the
// max-pool fusion is inference-only, so no gradient flows through a max.
inline std::vector<Var> level_score_vars(const caps::InterestSet& interests, Var candidate) {
  Tape& t = *candidate.tape;
  std::vector<Var> scores;
  scores.reserve(interests.interests.size());
  for (const auto& level : interests.interests) {
    Var Q = ops::stack_rows(t, level);          // [K,d]
    Var logits = ops::matvec(Q, candidate);     // [K]
    Var attn = ops::softmax(logits);
    Var pref = ops::vecmat(attn, Q);            // [d]
    scores.push_back(ops::dot(pref, candidate));
  }
  return scores;
}

}  // namespace mgnm::pred
