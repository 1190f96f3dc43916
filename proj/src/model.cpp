#include "mgnm/model.hpp"

#include <functional>

#include "mgnm/rng.hpp"

namespace mgnm::model {

namespace {

const std::pair<const char*, Ablation> kAblationNames[] = {
    {"full", Ablation::kFull},
    {"no_ugcn", Ablation::kNoUgcn},
    {"no_l1", Ablation::kNoL1},
    {"no_bilstm", Ablation::kNoBilstm},
    {"no_maxpool", Ablation::kNoMaxpool},
    {"scn_bilstm", Ablation::kScnBilstm},
    {"scn_sumpool", Ablation::kScnSumpool},
    {"scn_selfatt", Ablation::kScnSelfatt},
    {"scn_transformer", Ablation::kScnTransformer},
};

ops::Mask mask_of(const data::InteractionSequence& seq) {
  ops::Mask mask(seq.item_indices.size(), 0);
  for (int i = 0; i < seq.valid_length; ++i) mask[static_cast<std::size_t>(i)] = 1;
  return mask;
}

}  // namespace

const char* ablation_name(Ablation a) {
  for (const auto& [name, ab] : kAblationNames)
    if (ab == a) return name;
  throw std::invalid_argument("unknown ablation");
}

Ablation ablation_from_string(const std::string& s) {
  for (const auto& [name, ab] : kAblationNames)
    if (s == name) return ab;
  throw std::invalid_argument("unknown ablation '" + s + "'");
}

std::vector<Ablation> all_ablations() {
  std::vector<Ablation> out;
  for (const auto& [name, ab] : kAblationNames) out.push_back(ab);
  return out;
}

ModelParameters ModelParameters::init(int num_users, int num_items, const Hyperparameters& hp,
                                      Ablation ablation) {
  hp.validate();
  const int d = hp.embedding_dim;
  const int h = d / 2;
  ModelParameters p;
  auto put = [&](const std::string& name, std::vector<int> shape) {
    p.tensors[name] = truncated_normal_tensor(
        std::move(shape), 0.02, mix_seed(hp.seed, std::hash<std::string>{}(name)));
  };
  put("user_table", {num_users, d});
  put("item_table", {num_items + 1, d});
  // padding row stays zero
  Tensor& items = p.tensors["item_table"];
  for (int j = 0; j < d; ++j) items.at(num_items, j) = 0.0;
  put("gcn_weight", {d, d});
  const int caps = is_scn_replacement(ablation) ? 0 : hp.num_interests;
  for (int k = 0; k < caps; ++k) {
    put("caps_proj_" + std::to_string(k), {d, d});
    put("caps_out_" + std::to_string(k), {d, d});
  }
  for (const char* dir : {"fwd", "bwd"}) {
    put(std::string("lstm_") + dir + "_wx", {d, 4 * h});
    put(std::string("lstm_") + dir + "_wh", {h, 4 * h});
    p.tensors[std::string("lstm_") + dir + "_b"] = Tensor({4 * h});
  }
  if (ablation == Ablation::kScnTransformer)
    for (const char* w : {"attn_wq", "attn_wk", "attn_wv"}) put(w, {d, d});
  return p;
}

ParamVars push_params(Tape& tape, const ModelParameters& params) {
  ParamVars vars;
  for (const auto& [name, tensor] : params.tensors) vars[name] = tape.leaf(tensor);
  return vars;
}

namespace {

std::unique_ptr<caps::SequenceEncoder> make_encoder(const ParamVars& P, Ablation ablation) {
  if (ablation == Ablation::kNoBilstm) return std::make_unique<caps::ZeroEncoder>();
  if (ablation == Ablation::kScnTransformer) {
    auto enc = std::make_unique<caps::AttentionEncoder>();
    enc->wq = P.at("attn_wq");
    enc->wk = P.at("attn_wk");
    enc->wv = P.at("attn_wv");
    return enc;
  }
  auto enc = std::make_unique<caps::BiLstmEncoder>();
  enc->wx_fwd = P.at("lstm_fwd_wx");
  enc->wh_fwd = P.at("lstm_fwd_wh");
  enc->b_fwd = P.at("lstm_fwd_b");
  enc->wx_bwd = P.at("lstm_bwd_wx");
  enc->wh_bwd = P.at("lstm_bwd_wh");
  enc->b_bwd = P.at("lstm_bwd_b");
  return enc;
}

// BiLSTM final state: forward half at the last valid step, backward half at
// the first.
Var bilstm_last_hidden(Var encoded, int valid_length, int dim) {
  const int h = dim / 2;
  Var hf = ops::slice(ops::row(encoded, valid_length - 1), 0, h);
  Var hb = ops::slice(ops::row(encoded, 0), h, h);
  return ops::concat(hf, hb);
}

}  // namespace

UserForward user_forward(Tape& tape, const ParamVars& P, const data::InteractionSequence& seq,
                         const Hyperparameters& hp, Ablation ablation) {
  const ops::Mask mask = mask_of(seq);
  const int d = hp.embedding_dim;
  Var item_embs = ops::gather_rows(P.at("item_table"), seq.item_indices);
  Var user_emb = ops::row(P.at("user_table"), seq.user_index);

  UserForward out;
  std::vector<Var> levels;
  if (ablation == Ablation::kNoUgcn) {
    levels.assign(static_cast<std::size_t>(hp.num_layers) + 1, item_embs);
    out.adjacency_l1 = tape.constant(Tensor::scalar(0.0));
  } else {
    graph::UserGraph g = graph::build_user_graph(item_embs, user_emb, mask);
    levels = graph::multi_level_forward(g, item_embs, mask, P.at("gcn_weight"), hp.num_layers,
                                        hp.leaky_slope);
    out.adjacency_l1 = graph::adjacency_l1(g.adjacency, mask);
  }

  if (is_scn_replacement(ablation)) {
    out.interests.interests.resize(levels.size());
    for (std::size_t l = 0; l < levels.size(); ++l) {
      Var interest{};
      switch (ablation) {
        case Ablation::kScnSumpool: {
          Tensor ones({static_cast<int>(mask.size())});
          for (std::size_t i = 0; i < mask.size(); ++i) ones[static_cast<std::int64_t>(i)] = mask[i] ? 1.0 : 0.0;
          interest = ops::vecmat(tape.constant(ones), levels[l]);
          out.interests.interests[l].push_back(interest);
          break;
        }
        case Ablation::kScnBilstm: {
          auto enc = make_encoder(P, Ablation::kFull);
          Var encoded = enc->encode(levels[l], mask);
          out.interests.interests[l].push_back(bilstm_last_hidden(encoded, seq.valid_length, d));
          break;
        }
        case Ablation::kScnSelfatt: {
          // the level's valid item vectors themselves; the predictor's
          // candidate attention then plays the self-attention role
          for (int i = 0; i < seq.valid_length; ++i)
            out.interests.interests[l].push_back(ops::row(levels[l], i));
          break;
        }
        default:
          throw std::logic_error("unhandled scn replacement");
      }
    }
    return out;
  }

  std::vector<Var> proj, out_proj;
  for (int k = 0; k < hp.num_interests; ++k) {
    proj.push_back(P.at("caps_proj_" + std::to_string(k)));
    out_proj.push_back(P.at("caps_out_" + std::to_string(k)));
  }
  auto enc = make_encoder(P, ablation);
  // Per-pass agreement seed: per user; extract_interests mixes in level and
  // capsule. With the graph bypassed all levels are identical, so a shared
  // level seed keeps their interests (and level scores) identical too.
  if (ablation == Ablation::kNoUgcn) {
    const std::uint64_t seed = mix_seed(hp.seed, static_cast<std::uint64_t>(seq.user_index));
    out.interests.interests.resize(levels.size());
    std::vector<Var> level0{levels[0]};
    caps::InterestSet one = caps::extract_interests(level0, proj, out_proj, *enc, mask, hp.tau, seed);
    for (std::size_t l = 0; l < levels.size(); ++l) out.interests.interests[l] = one.interests[0];
    return out;
  }
  const std::uint64_t seed = mix_seed(hp.seed, static_cast<std::uint64_t>(seq.user_index));
  out.interests = caps::extract_interests(levels, proj, out_proj, *enc, mask, hp.tau, seed);
  return out;
}

std::vector<Tensor> interest_matrices(const ModelParameters& params,
                                      const data::InteractionSequence& seq,
                                      const Hyperparameters& hp, Ablation ablation) {
  Tape tape(false);
  ParamVars P = push_params(tape, params);
  UserForward fwd = user_forward(tape, P, seq, hp, ablation);
  std::vector<Tensor> out;
  out.reserve(fwd.interests.interests.size());
  for (const auto& level : fwd.interests.interests) {
    const int K = static_cast<int>(level.size());
    const int d = static_cast<int>(tape.value(level[0]).size());
    Tensor Q({K, d});
    for (int k = 0; k < K; ++k) {
      const Tensor& q = tape.value(level[static_cast<std::size_t>(k)]);
      for (int j = 0; j < d; ++j) Q.at(k, j) = q[j];
    }
    out.push_back(std::move(Q));
  }
  return out;
}

}  // namespace mgnm::model
