#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mgnm/ops.hpp"
#include "mgnm/rng.hpp"

// Sequential capsule network: per-level, per-capsule dynamic routing with a
// residual sequence encoding injected once, after the first routing pass.

namespace mgnm::caps {

using ops::Mask;

// Agreement initializer: truncated normal(0, 0.02), clipped at +/-2 sigma.
inline Tensor init_agreement(int m, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("init_agreement: m < 1");
  return truncated_normal_tensor({m}, 0.02, seed);
}

struct SequenceEncoder {
  virtual ~SequenceEncoder() = default;
  // z: [m,d]; returns [m,d] with padded rows zero.
  virtual Var encode(Var z, const Mask& mask) const = 0;
};

// Ablation stand-in: contributes nothing through the residual.
struct ZeroEncoder final : SequenceEncoder {
  Var encode(Var z, const Mask& mask) const override {
    Tape& t = *z.tape;
    (void)mask;
    return t.constant(Tensor(t.value(z).shape()));
  }
};

// Bidirectional LSTM over the valid positions; hidden size d/2 per direction,
// halves concatenated so the residual add preserves shape.
struct BiLstmEncoder final : SequenceEncoder {
  // gate layout within the 4h preactivation: [input, forget, cell, output]
  Var wx_fwd, wh_fwd, b_fwd;  // [d,4h], [h,4h], [4h]
  Var wx_bwd, wh_bwd, b_bwd;

  Var encode(Var z, const Mask& mask) const override {
    Tape& t = *z.tape;
    const Tensor& vz = t.value(z);
    const int m = vz.dim(0), d = vz.dim(1);
    if (d % 2 != 0) throw std::invalid_argument("BiLstmEncoder: embedding dim must be even");
    const int h = d / 2;
    std::vector<int> valid;
    for (int i = 0; i < m; ++i)
      if (mask[static_cast<std::size_t>(i)]) valid.push_back(i);

    auto run = [&](bool forward, std::vector<Var>& states) {
      Var hprev = t.constant(Tensor({h}));
      Var cprev = t.constant(Tensor({h}));
      const Var& wx = forward ? wx_fwd : wx_bwd;
      const Var& wh = forward ? wh_fwd : wh_bwd;
      const Var& b = forward ? b_fwd : b_bwd;
      const int n = static_cast<int>(valid.size());
      states.assign(static_cast<std::size_t>(n), Var{});
      for (int s = 0; s < n; ++s) {
        const int pos = forward ? valid[static_cast<std::size_t>(s)]
                                : valid[static_cast<std::size_t>(n - 1 - s)];
        Var x = ops::row(z, pos);
        Var pre = ops::add(ops::add(ops::vecmat(x, wx), ops::vecmat(hprev, wh)), b);
        Var gi = ops::sigmoid(ops::slice(pre, 0, h));
        Var gf = ops::sigmoid(ops::slice(pre, h, h));
        Var gc = ops::tanh_op(ops::slice(pre, 2 * h, h));
        Var go = ops::sigmoid(ops::slice(pre, 3 * h, h));
        Var c = ops::add(ops::mul(gf, cprev), ops::mul(gi, gc));
        Var hout = ops::mul(go, ops::tanh_op(c));
        states[static_cast<std::size_t>(forward ? s : n - 1 - s)] = hout;
        hprev = hout;
        cprev = c;
      }
    };

    std::vector<Var> fwd, bwd;
    run(true, fwd);
    run(false, bwd);

    std::vector<Var> rows(static_cast<std::size_t>(m));
    Var zero_row = t.constant(Tensor({d}));
    std::size_t vi = 0;
    for (int i = 0; i < m; ++i) {
      if (mask[static_cast<std::size_t>(i)]) {
        rows[static_cast<std::size_t>(i)] = ops::concat(fwd[vi], bwd[vi]);
        ++vi;
      } else {
        rows[static_cast<std::size_t>(i)] = zero_row;
      }
    }
    return ops::stack_rows(t, rows);
  }
};

// Single-head self-attention encoder with sinusoidal position signals; used
// by the scn-transformer variant in place of the BiLSTM.
struct AttentionEncoder final : SequenceEncoder {
  Var wq, wk, wv;  // each [d,d]

  static Tensor positional(int m, int d) {
    Tensor p({m, d});
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < d; ++j) {
        const double angle = i / std::pow(10000.0, 2.0 * (j / 2) / d);
        p.at(i, j) = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
      }
    return p;
  }

  Var encode(Var z, const Mask& mask) const override {
    Tape& t = *z.tape;
    const Tensor& vz = t.value(z);
    const int m = vz.dim(0), d = vz.dim(1);
    Var x = ops::add(z, t.constant(positional(m, d)));
    x = ops::mask_rows(x, mask);
    Var q = ops::matmul(x, wq);
    Var k = ops::matmul(x, wk);
    Var v = ops::matmul(x, wv);
    Var scores = ops::scale(ops::matmul(q, ops::transpose(k)), 1.0 / std::sqrt(double(d)));
    std::vector<Var> rows(static_cast<std::size_t>(m));
    Var zero_row = t.constant(Tensor({d}));
    for (int i = 0; i < m; ++i) {
      if (!mask[static_cast<std::size_t>(i)]) {
        rows[static_cast<std::size_t>(i)] = zero_row;
        continue;
      }
      Var attn = ops::softmax(ops::row(scores, i), mask);
      rows[static_cast<std::size_t>(i)] = ops::vecmat(attn, v);
    }
    return ops::stack_rows(t, rows);
  }
};

struct RouteResult {
  Var output;                         // [d], squashed capsule output
  std::vector<Tensor> couplings;      // coupling vector per routing pass
};

// Dynamic routing for one capsule: project, one routing pass, residual
// sequence encoding, then tau-1 further passes.
inline RouteResult route_capsule(Var level_repr, Var projection, const SequenceEncoder& encoder,
                                 const Mask& mask, int tau, const Tensor& agreement_init) {
  if (tau < 1) throw std::invalid_argument("route_capsule: tau < 1");
  Tape& t = *level_repr.tape;
  Var z = ops::mask_rows(ops::matmul(level_repr, projection), mask);
  Var g = t.constant(agreement_init);
  RouteResult res;
  Var out{};
  for (int it = 0; it < tau; ++it) {
    Var c = ops::softmax(g, mask);
    res.couplings.push_back(t.value(c));
    Var v = ops::vecmat(c, z);
    out = ops::squash(v);
    if (it + 1 < tau) g = ops::add(g, ops::matvec(z, out));
    if (it == 0) z = ops::add(z, encoder.encode(z, mask));
  }
  res.output = out;
  return res;
}

// (L+1) x K interest vectors; capsule parameters shared across levels,
// distinct per capsule.
struct InterestSet {
  std::vector<std::vector<Var>> interests;  // [level][capsule] -> [d]
  int levels() const { return static_cast<int>(interests.size()); }
  int capsules() const { return interests.empty() ? 0 : static_cast<int>(interests[0].size()); }
};

inline InterestSet extract_interests(const std::vector<Var>& levels,
                                     const std::vector<Var>& capsule_proj,
                                     const std::vector<Var>& capsule_out_proj,
                                     const SequenceEncoder& encoder, const Mask& mask, int tau,
                                     std::uint64_t seed) {
  const int K = static_cast<int>(capsule_proj.size());
  if (static_cast<int>(capsule_out_proj.size()) != K)
    throw std::invalid_argument("extract_interests: projection count mismatch");
  const int m = static_cast<int>(mask.size());
  InterestSet set;
  set.interests.resize(levels.size());
  for (std::size_t l = 0; l < levels.size(); ++l) {
    set.interests[l].reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
      Tensor g0 = init_agreement(m, mix_seed(seed, l, static_cast<std::uint64_t>(k)));
      RouteResult r = route_capsule(levels[l], capsule_proj[static_cast<std::size_t>(k)],
                                    encoder, mask, tau, g0);
      set.interests[l].push_back(
          ops::relu(ops::vecmat(r.output, capsule_out_proj[static_cast<std::size_t>(k)])));
    }
  }
  return set;
}

}  // namespace mgnm::caps
