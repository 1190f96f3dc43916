#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mgnm/ops.hpp"

// User-aware graph construction and multi-level graph convolution. The
// adjacency entry for items i, j under user u is sigmoid((x_i (.) x_j) . x_u),
// computed once per unordered pair so symmetry is bit-exact. The layer rule is
//   H^(l+1) = LeakyReLU((I + D^-1/2 A D^-1/2) H^(l) W)
// with a single weight matrix W shared across layers.

namespace mgnm::graph {

using ops::Mask;

constexpr double kDegreeFloor = 1e-12;

struct UserGraph {
  Var adjacency;        // [m,m], symmetric, zero on padded rows/cols
  Var degree_inv_sqrt;  // [m], zero on padded positions
  Var propagation;      // [m,m], I + D^-1/2 A D^-1/2 on valid positions
};

// A[i][j] = sigmoid((x_i (.) x_j) . x_u) for valid i,j; padded rows/cols zero.
inline Var adjacency(Var item_embs, Var user_emb, const Mask& mask) {
  Tape& t = *item_embs.tape;
  const Tensor& X = t.value(item_embs);
  const Tensor& u = t.value(user_emb);
  const int m = X.dim(0), d = X.dim(1);
  if (static_cast<int>(mask.size()) != m) throw std::invalid_argument("adjacency: mask length");
  if (u.rank() != 1 || u.dim(0) != d) throw std::invalid_argument("adjacency: user dim");
  int valid = 0;
  for (char c : mask) valid += c ? 1 : 0;
  if (valid == 0) throw std::invalid_argument("adjacency: all positions padded");
  Tensor A({m, m});
  for (int i = 0; i < m; ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    for (int j = i; j < m; ++j) {
      if (!mask[static_cast<std::size_t>(j)]) continue;
      double s = 0;
      const double* xi = X.data() + static_cast<std::size_t>(i) * d;
      const double* xj = X.data() + static_cast<std::size_t>(j) * d;
      for (int p = 0; p < d; ++p) s += xi[p] * xj[p] * u[p];
      const double a = ops::stable_sigmoid(s);
      A.at(i, j) = a;
      A.at(j, i) = a;
    }
  }
  Var o = t.push(std::move(A), ops::rg2(t, item_embs, user_emb), nullptr);
  t.set_backward(o, [item_embs, user_emb, o, mask, m, d](Tape& tp) {
    const Tensor& g = tp.grad(o);
    const Tensor& A2 = tp.value(o);
    const Tensor& X2 = tp.value(item_embs);
    const Tensor& u2 = tp.value(user_emb);
    const bool gx = tp.requires_grad(item_embs);
    const bool gu = tp.requires_grad(user_emb);
    Tensor* dX = gx ? &tp.grad_mut(item_embs) : nullptr;
    Tensor* du = gu ? &tp.grad_mut(user_emb) : nullptr;
    for (int i = 0; i < m; ++i) {
      if (!mask[static_cast<std::size_t>(i)]) continue;
      for (int j = i; j < m; ++j) {
        if (!mask[static_cast<std::size_t>(j)]) continue;
        // one forward entry feeds both (i,j) and (j,i)
        const double gij = (i == j) ? g.at(i, i) : g.at(i, j) + g.at(j, i);
        if (gij == 0.0) continue;
        const double a = A2.at(i, j);
        const double w = gij * a * (1.0 - a);
        const double* xi = X2.data() + static_cast<std::size_t>(i) * d;
        const double* xj = X2.data() + static_cast<std::size_t>(j) * d;
        for (int p = 0; p < d; ++p) {
          if (gx) {
            double* dxi = dX->data() + static_cast<std::size_t>(i) * d;
            double* dxj = dX->data() + static_cast<std::size_t>(j) * d;
            if (i == j) {
              dxi[p] += w * 2.0 * xi[p] * u2[p];
            } else {
              dxi[p] += w * xj[p] * u2[p];
              dxj[p] += w * xi[p] * u2[p];
            }
          }
          if (gu) (*du)[p] += w * xi[p] * xj[p];
        }
      }
    }
  });
  return o;
}

// 1/sqrt(max(deg_i, floor)) on valid rows, zero elsewhere; deg over valid cols.
inline Var degree_inv_sqrt(Var adjacency, const Mask& mask) {
  Tape& t = *adjacency.tape;
  const Tensor& A = t.value(adjacency);
  const int m = A.dim(0);
  Tensor out({m});
  std::vector<double> deg(static_cast<std::size_t>(m), 0.0);
  for (int i = 0; i < m; ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    double s = 0;
    for (int j = 0; j < m; ++j)
      if (mask[static_cast<std::size_t>(j)]) s += A.at(i, j);
    deg[static_cast<std::size_t>(i)] = s;
    out[i] = 1.0 / std::sqrt(std::max(s, kDegreeFloor));
  }
  Var o = t.push(std::move(out), t.requires_grad(adjacency), nullptr);
  t.set_backward(o, [adjacency, o, mask, m, deg](Tape& tp) {
    const Tensor& g = tp.grad(o);
    Tensor& gA = tp.grad_mut(adjacency);
    for (int i = 0; i < m; ++i) {
      if (!mask[static_cast<std::size_t>(i)]) continue;
      const double s = deg[static_cast<std::size_t>(i)];
      if (s <= kDegreeFloor) continue;  // clamped, gradient blocked
      const double d_ddeg = -0.5 * std::pow(s, -1.5) * g[i];
      if (d_ddeg == 0.0) continue;
      for (int j = 0; j < m; ++j)
        if (mask[static_cast<std::size_t>(j)]) gA.at(i, j) += d_ddeg;
    }
  });
  return o;
}

// P = I_valid + diag(s) A diag(s)
inline Var propagation(Var adjacency, Var deg_inv_sqrt, const Mask& mask) {
  Tape& t = *adjacency.tape;
  const Tensor& A = t.value(adjacency);
  const Tensor& s = t.value(deg_inv_sqrt);
  const int m = A.dim(0);
  Tensor P({m, m});
  for (int i = 0; i < m; ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    P.at(i, i) = 1.0;
    for (int j = 0; j < m; ++j) P.at(i, j) += s[i] * A.at(i, j) * s[j];
  }
  Var o = t.push(std::move(P), ops::rg2(t, adjacency, deg_inv_sqrt), nullptr);
  t.set_backward(o, [adjacency, deg_inv_sqrt, o, mask, m](Tape& tp) {
    const Tensor& g = tp.grad(o);
    const Tensor& A2 = tp.value(adjacency);
    const Tensor& s2 = tp.value(deg_inv_sqrt);
    const bool ga = tp.requires_grad(adjacency);
    const bool gs = tp.requires_grad(deg_inv_sqrt);
    Tensor* dA = ga ? &tp.grad_mut(adjacency) : nullptr;
    Tensor* ds = gs ? &tp.grad_mut(deg_inv_sqrt) : nullptr;
    for (int i = 0; i < m; ++i) {
      if (!mask[static_cast<std::size_t>(i)]) continue;
      for (int j = 0; j < m; ++j) {
        const double gij = g.at(i, j);
        if (gij == 0.0) continue;
        if (ga) dA->at(i, j) += gij * s2[i] * s2[j];
        if (gs) {
          (*ds)[i] += gij * A2.at(i, j) * s2[j];
          (*ds)[j] += gij * A2.at(i, j) * s2[i];
        }
      }
    }
  });
  return o;
}

inline UserGraph build_user_graph(Var item_embs, Var user_emb, const Mask& mask) {
  UserGraph g;
  g.adjacency = adjacency(item_embs, user_emb, mask);
  g.degree_inv_sqrt = degree_inv_sqrt(g.adjacency, mask);
  g.propagation = propagation(g.adjacency, g.degree_inv_sqrt, mask);
  return g;
}

// One convolution layer: LeakyReLU(P H W), padded rows forced to zero.
inline Var convolve(const UserGraph& g, Var h_prev, Var shared_weight, double leaky_slope,
                    const Mask& mask) {
  Var agg = ops::matmul(g.propagation, h_prev);
  Var proj = ops::matmul(agg, shared_weight);
  Var act = ops::leaky_relu(proj, leaky_slope);
  return ops::mask_rows(act, mask);
}

// levels[0] = raw embeddings, levels[l+1] = convolve(levels[l]).
inline std::vector<Var> multi_level_forward(const UserGraph& g, Var item_embs, const Mask& mask,
                                            Var shared_weight, int num_layers,
                                            double leaky_slope) {
  std::vector<Var> levels;
  levels.reserve(static_cast<std::size_t>(num_layers) + 1);
  levels.push_back(item_embs);
  for (int l = 0; l < num_layers; ++l)
    levels.push_back(convolve(g, levels.back(), shared_weight, leaky_slope, mask));
  return levels;
}

inline std::vector<Var> multi_level_forward(Var item_embs, Var user_emb, const Mask& mask,
                                            Var shared_weight, int num_layers,
                                            double leaky_slope) {
  if (num_layers < 0) throw std::invalid_argument("multi_level_forward: negative L");
  UserGraph g = build_user_graph(item_embs, user_emb, mask);
  return multi_level_forward(g, item_embs, mask, shared_weight, num_layers, leaky_slope);
}

// Mean |A_ij| over valid ordered pairs (the L1 sparsity term).
inline Var adjacency_l1(Var adjacency, const Mask& mask) {
  Tape& t = *adjacency.tape;
  const Tensor& A = t.value(adjacency);
  const int m = A.dim(0);
  int valid = 0;
  for (char c : mask) valid += c ? 1 : 0;
  const double count = static_cast<double>(valid) * valid;
  double s = 0;
  for (int i = 0; i < m; ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    for (int j = 0; j < m; ++j)
      if (mask[static_cast<std::size_t>(j)]) s += std::abs(A.at(i, j));
  }
  const double mean = count > 0 ? s / count : 0.0;
  Var o = t.push(Tensor::scalar(mean), t.requires_grad(adjacency), nullptr);
  t.set_backward(o, [adjacency, o, mask, m, count](Tape& tp) {
    if (count == 0) return;
    const double g = tp.grad(o)[0] / count;
    const Tensor& A2 = tp.value(adjacency);
    Tensor& gA = tp.grad_mut(adjacency);
    for (int i = 0; i < m; ++i) {
      if (!mask[static_cast<std::size_t>(i)]) continue;
      for (int j = 0; j < m; ++j) {
        if (!mask[static_cast<std::size_t>(j)]) continue;
        const double a = A2.at(i, j);
        gA.at(i, j) += g * (a > 0 ? 1.0 : (a < 0 ? -1.0 : 0.0));
      }
    }
  });
  return o;
}

}  // namespace mgnm::graph
