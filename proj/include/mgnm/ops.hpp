#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mgnm/tape.hpp"
#include "mgnm/tensor.hpp"

// Differentiable ops. Each op computes the forward value eagerly and, when
// gradients are enabled, records a closure that scatters the output gradient
// back to its inputs.

namespace mgnm::ops {

using Mask = std::vector<char>;  // 1 = valid position, 0 = padding

inline double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() +
                                " vs " + b.shape_str());
}

inline bool rg2(Tape& t, Var a, Var b) { return t.requires_grad(a) || t.requires_grad(b); }

inline Var add(Var a, Var b) {
  Tape& t = *a.tape;
  const Tensor &va = t.value(a), &vb = t.value(b);
  check_same_shape(va, vb, "add");
  Tensor out = va;
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] += vb[i];
  Var o = t.push(std::move(out), rg2(t, a, b), nullptr);
  t.set_backward(o, [a, b, o](Tape& tp) {
    const Tensor& g = tp.grad(o);
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
  return o;
}

inline Var sub(Var a, Var b) {
  Tape& t = *a.tape;
  const Tensor &va = t.value(a), &vb = t.value(b);
  check_same_shape(va, vb, "sub");
  Tensor out = va;
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] -= vb[i];
  Var o = t.push(std::move(out), rg2(t, a, b), nullptr);
  t.set_backward(o, [a, b, o](Tape& tp) {
    const Tensor& g = tp.grad(o);
    tp.accumulate(a, g);
    if (tp.requires_grad(b)) {
      Tensor& gb = tp.grad_mut(b);
      for (std::int64_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
  return o;
}

// Hadamard (elementwise) product.
inline Var mul(Var a, Var b) {
  Tape& t = *a.tape;
  const Tensor &va = t.value(a), &vb = t.value(b);
  check_same_shape(va, vb, "hadamard");
  Tensor out = va;
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] *= vb[i];
  Var o = t.push(std::move(out), rg2(t, a, b), nullptr);
  t.set_backward(o, [a, b, o](Tape& tp) {
    const Tensor& g = tp.grad(o);
    if (tp.requires_grad(a)) {
      const Tensor& vb2 = tp.value(b);
      Tensor& ga = tp.grad_mut(a);
      for (std::int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb2[i];
    }
    if (tp.requires_grad(b)) {
      const Tensor& va2 = tp.value(a);
      Tensor& gb = tp.grad_mut(b);
      for (std::int64_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va2[i];
    }
  });
  return o;
}

inline Var scale(Var a, double c) {
  Tape& t = *a.tape;
  Tensor out = t.value(a);
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] *= c;
  Var o = t.push(std::move(out), t.requires_grad(a), nullptr);
  t.set_backward(o, [a, o, c](Tape& tp) {
    const Tensor& g = tp.grad(o);
    Tensor& ga = tp.grad_mut(a);
    for (std::int64_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
  });
  return o;
}

// a[m,k] * b[k,n] -> [m,n]
inline Var matmul(Var a, Var b) {
  Tape& t = *a.tape;
  const Tensor &va = t.value(a), &vb = t.value(b);
  if (va.rank() != 2 || vb.rank() != 2 || va.dim(1) != vb.dim(0))
    throw std::invalid_argument("matmul: incompatible shapes " + va.shape_str() + " x " +
                                vb.shape_str());
  const int m = va.dim(0), k = va.dim(1), n = vb.dim(1);
  Tensor out({m, n});
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      const double aip = va.at(i, p);
      if (aip == 0.0) continue;
      const double* brow = vb.data() + static_cast<std::size_t>(p) * n;
      double* orow = out.data() + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  Var o = t.push(std::move(out), rg2(t, a, b), nullptr);
  t.set_backward(o, [a, b, o, m, k, n](Tape& tp) {
    const Tensor& g = tp.grad(o);
    if (tp.requires_grad(a)) {
      const Tensor& vb2 = tp.value(b);
      Tensor& ga = tp.grad_mut(a);
      for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
          double s = 0;
          const double* grow = g.data() + static_cast<std::size_t>(i) * n;
          const double* brow = vb2.data() + static_cast<std::size_t>(p) * n;
          for (int j = 0; j < n; ++j) s += grow[j] * brow[j];
          ga.at(i, p) += s;
        }
    }
    if (tp.requires_grad(b)) {
      const Tensor& va2 = tp.value(a);
      Tensor& gb = tp.grad_mut(b);
      for (int p = 0; p < k; ++p)
        for (int i = 0; i < m; ++i) {
          const double aip = va2.at(i, p);
          if (aip == 0.0) continue;
          const double* grow = g.data() + static_cast<std::size_t>(i) * n;
          double* brow = gb.data() + static_cast<std::size_t>(p) * n;
          for (int j = 0; j < n; ++j) brow[j] += aip * grow[j];
        }
    }
  });
  return o;
}

// A[m,k] * x[k] -> [m]
inline Var matvec(Var a, Var x) {
  Tape& t = *a.tape;
  const Tensor &va = t.value(a), &vx = t.value(x);
  if (va.rank() != 2 || vx.rank() != 1 || va.dim(1) != vx.dim(0))
    throw std::invalid_argument("matvec: incompatible shapes");
  const int m = va.dim(0), k = va.dim(1);
  Tensor out({m});
  for (int i = 0; i < m; ++i) {
    double s = 0;
    const double* arow = va.data() + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) s += arow[p] * vx[p];
    out[i] = s;
  }
  Var o = t.push(std::move(out), rg2(t, a, x), nullptr);
  t.set_backward(o, [a, x, o, m, k](Tape& tp) {
    const Tensor& g = tp.grad(o);
    if (tp.requires_grad(a)) {
      const Tensor& vx2 = tp.value(x);
      Tensor& ga = tp.grad_mut(a);
      for (int i = 0; i < m; ++i) {
        double* arow = ga.data() + static_cast<std::size_t>(i) * k;
        for (int p = 0; p < k; ++p) arow[p] += g[i] * vx2[p];
      }
    }
    if (tp.requires_grad(x)) {
      const Tensor& va2 = tp.value(a);
      Tensor& gx = tp.grad_mut(x);
      for (int i = 0; i < m; ++i) {
        const double* arow = va2.data() + static_cast<std::size_t>(i) * k;
        for (int p = 0; p < k; ++p) gx[p] += g[i] * arow[p];
      }
    }
  });
  return o;
}

// x[k] * A[k,n] -> [n]
inline Var vecmat(Var x, Var a) {
  Tape& t = *x.tape;
  const Tensor &vx = t.value(x), &va = t.value(a);
  if (va.rank() != 2 || vx.rank() != 1 || va.dim(0) != vx.dim(0))
    throw std::invalid_argument("vecmat: incompatible shapes");
  const int k = va.dim(0), n = va.dim(1);
  Tensor out({n});
  for (int p = 0; p < k; ++p) {
    const double xp = vx[p];
    if (xp == 0.0) continue;
    const double* arow = va.data() + static_cast<std::size_t>(p) * n;
    for (int j = 0; j < n; ++j) out[j] += xp * arow[j];
  }
  Var o = t.push(std::move(out), rg2(t, x, a), nullptr);
  t.set_backward(o, [x, a, o, k, n](Tape& tp) {
    const Tensor& g = tp.grad(o);
    if (tp.requires_grad(x)) {
      const Tensor& va2 = tp.value(a);
      Tensor& gx = tp.grad_mut(x);
      for (int p = 0; p < k; ++p) {
        double s = 0;
        const double* arow = va2.data() + static_cast<std::size_t>(p) * n;
        for (int j = 0; j < n; ++j) s += arow[j] * g[j];
        gx[p] += s;
      }
    }
    if (tp.requires_grad(a)) {
      const Tensor& vx2 = tp.value(x);
      Tensor& ga = tp.grad_mut(a);
      for (int p = 0; p < k; ++p) {
        const double xp = vx2[p];
        if (xp == 0.0) continue;
        double* arow = ga.data() + static_cast<std::size_t>(p) * n;
        for (int j = 0; j < n; ++j) arow[j] += xp * g[j];
      }
    }
  });
  return o;
}

inline Var transpose(Var a) {
  Tape& t = *a.tape;
  const Tensor& va = t.value(a);
  if (va.rank() != 2) throw std::invalid_argument("transpose: rank != 2");
  const int m = va.dim(0), n = va.dim(1);
  Tensor out({n, m});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(j, i) = va.at(i, j);
  Var o = t.push(std::move(out), t.requires_grad(a), nullptr);
  t.set_backward(o, [a, o, m, n](Tape& tp) {
    const Tensor& g = tp.grad(o);
    Tensor& ga = tp.grad_mut(a);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) ga.at(i, j) += g.at(j, i);
  });
  return o;
}

inline Var dot(Var u, Var v) {
  Tape& t = *u.tape;
  const Tensor &vu = t.value(u), &vv = t.value(v);
  check_same_shape(vu, vv, "dot");
  double s = 0;
  for (std::int64_t i = 0; i < vu.size(); ++i) s += vu[i] * vv[i];
  Var o = t.push(Tensor::scalar(s), rg2(t, u, v), nullptr);
  t.set_backward(o, [u, v, o](Tape& tp) {
    const double g = tp.grad(o)[0];
    if (tp.requires_grad(u)) {
      const Tensor& vv2 = tp.value(v);
      Tensor& gu = tp.grad_mut(u);
      for (std::int64_t i = 0; i < vv2.size(); ++i) gu[i] += g * vv2[i];
    }
    if (tp.requires_grad(v)) {
      const Tensor& vu2 = tp.value(u);
      Tensor& gv = tp.grad_mut(v);
      for (std::int64_t i = 0; i < vu2.size(); ++i) gv[i] += g * vu2[i];
    }
  });
  return o;
}

inline Var sigmoid(Var x) {
  Tape& t = *x.tape;
  Tensor out = t.value(x);
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(out[i]);
  Var o = t.push(std::move(out), t.requires_grad(x), nullptr);
  t.set_backward(o, [x, o](Tape& tp) {
    const Tensor& g = tp.grad(o);
    const Tensor& y = tp.value(o);
    Tensor& gx = tp.grad_mut(x);
    for (std::int64_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
  });
  return o;
}

inline Var tanh_op(Var x) {
  Tape& t = *x.tape;
  Tensor out = t.value(x);
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
  Var o = t.push(std::move(out), t.requires_grad(x), nullptr);
  t.set_backward(o, [x, o](Tape& tp) {
    const Tensor& g = tp.grad(o);
    const Tensor& y = tp.value(o);
    Tensor& gx = tp.grad_mut(x);
    for (std::int64_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
  });
  return o;
}

inline Var relu(Var x) {
  Tape& t = *x.tape;
  Tensor out = t.value(x);
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], 0.0);
  Var o = t.push(std::move(out), t.requires_grad(x), nullptr);
  t.set_backward(o, [x, o](Tape& tp) {
    const Tensor& g = tp.grad(o);
    const Tensor& vx = tp.value(x);
    Tensor& gx = tp.grad_mut(x);
    for (std::int64_t i = 0; i < g.size(); ++i)
      if (vx[i] > 0.0) gx[i] += g[i];
  });
  return o;
}

inline Var leaky_relu(Var x, double slope) {
  if (slope <= 0.0 || slope >= 1.0) throw std::invalid_argument("leaky_relu: slope out of (0,1)");
  Tape& t = *x.tape;
  Tensor out = t.value(x);
  for (std::int64_t i = 0; i < out.size(); ++i)
    if (out[i] < 0.0) out[i] *= slope;
  Var o = t.push(std::move(out), t.requires_grad(x), nullptr);
  t.set_backward(o, [x, o, slope](Tape& tp) {
    const Tensor& g = tp.grad(o);
    const Tensor& vx = tp.value(x);
    Tensor& gx = tp.grad_mut(x);
    for (std::int64_t i = 0; i < g.size(); ++i)
      gx[i] += g[i] * (vx[i] >= 0.0 ? 1.0 : slope);
  });
  return o;
}

// Masked softmax over a 1-D tensor; masked entries are exactly 0 in the
// output. Computed with max-subtraction. mask may be empty (= all valid).
inline Var softmax(Var x, const Mask& mask = {}) {
  Tape& t = *x.tape;
  const Tensor& vx = t.value(x);
  const int n = static_cast<int>(vx.size());
  if (!mask.empty() && static_cast<int>(mask.size()) != n)
    throw std::invalid_argument("softmax: mask length mismatch");
  double mx = -std::numeric_limits<double>::infinity();
  int valid = 0;
  for (int i = 0; i < n; ++i)
    if (mask.empty() || mask[i]) {
      mx = std::max(mx, vx[i]);
      ++valid;
    }
  if (valid == 0) throw std::invalid_argument("softmax: all entries masked");
  Tensor out(vx.shape());
  double z = 0;
  for (int i = 0; i < n; ++i)
    if (mask.empty() || mask[i]) {
      out[i] = std::exp(vx[i] - mx);
      z += out[i];
    }
  for (int i = 0; i < n; ++i) out[i] /= z;
  Var o = t.push(std::move(out), t.requires_grad(x), nullptr);
  t.set_backward(o, [x, o](Tape& tp) {
    const Tensor& g = tp.grad(o);
    const Tensor& y = tp.value(o);
    double gy = 0;
    for (std::int64_t i = 0; i < g.size(); ++i) gy += g[i] * y[i];
    Tensor& gx = tp.grad_mut(x);
    for (std::int64_t i = 0; i < g.size(); ++i) gx[i] += y[i] * (g[i] - gy);
  });
  return o;
}

// Capsule nonlinearity: v -> v * ||v|| / (1 + ||v||^2); zero maps to zero.
inline Var squash(Var v) {
  Tape& t = *v.tape;
  const Tensor& vv = t.value(v);
  double r2 = 0;
  for (std::int64_t i = 0; i < vv.size(); ++i) r2 += vv[i] * vv[i];
  const double r = std::sqrt(r2);
  Tensor out(vv.shape());
  const double c = r > 1e-300 ? r / (1.0 + r2) : 0.0;
  for (std::int64_t i = 0; i < vv.size(); ++i) out[i] = c * vv[i];
  Var o = t.push(std::move(out), t.requires_grad(v), nullptr);
  t.set_backward(o, [v, o, r, r2, c](Tape& tp) {
    if (r <= 1e-12) return;  // derivative vanishes at the origin
    const Tensor& g = tp.grad(o);
    const Tensor& vv2 = tp.value(v);
    const double dc_dr = (1.0 - r2) / ((1.0 + r2) * (1.0 + r2));
    double vg = 0;
    for (std::int64_t i = 0; i < g.size(); ++i) vg += vv2[i] * g[i];
    Tensor& gv = tp.grad_mut(v);
    const double beta = dc_dr / r * vg;
    for (std::int64_t i = 0; i < g.size(); ++i) gv[i] += c * g[i] + beta * vv2[i];
  });
  return o;
}

inline Var sum(Var x) {
  Tape& t = *x.tape;
  const Tensor& vx = t.value(x);
  double s = 0;
  for (std::int64_t i = 0; i < vx.size(); ++i) s += vx[i];
  Var o = t.push(Tensor::scalar(s), t.requires_grad(x), nullptr);
  t.set_backward(o, [x, o](Tape& tp) {
    const double g = tp.grad(o)[0];
    Tensor& gx = tp.grad_mut(x);
    for (std::int64_t i = 0; i < gx.size(); ++i) gx[i] += g;
  });
  return o;
}

inline Var sum_sq(Var x) {
  Tape& t = *x.tape;
  const Tensor& vx = t.value(x);
  double s = 0;
  for (std::int64_t i = 0; i < vx.size(); ++i) s += vx[i] * vx[i];
  Var o = t.push(Tensor::scalar(s), t.requires_grad(x), nullptr);
  t.set_backward(o, [x, o](Tape& tp) {
    const double g = tp.grad(o)[0];
    const Tensor& vx2 = tp.value(x);
    Tensor& gx = tp.grad_mut(x);
    for (std::int64_t i = 0; i < gx.size(); ++i) gx[i] += 2.0 * g * vx2[i];
  });
  return o;
}

// Row i of a [m,n] matrix as a length-n vector.
inline Var row(Var x, int i) {
  Tape& t = *x.tape;
  const Tensor& vx = t.value(x);
  const int n = vx.dim(1);
  Tensor out({n});
  const double* src = vx.data() + static_cast<std::size_t>(i) * n;
  for (int j = 0; j < n; ++j) out[j] = src[j];
  Var o = t.push(std::move(out), t.requires_grad(x), nullptr);
  t.set_backward(o, [x, o, i, n](Tape& tp) {
    const Tensor& g = tp.grad(o);
    Tensor& gx = tp.grad_mut(x);
    double* dst = gx.data() + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) dst[j] += g[j];
  });
  return o;
}

// Stack length-n row vectors into a [m,n] matrix.
inline Var stack_rows(Tape& t, const std::vector<Var>& rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: empty");
  const int m = static_cast<int>(rows.size());
  const int n = static_cast<int>(t.value(rows[0]).size());
  Tensor out({m, n});
  bool rg = false;
  for (int i = 0; i < m; ++i) {
    const Tensor& r = t.value(rows[static_cast<std::size_t>(i)]);
    if (static_cast<int>(r.size()) != n) throw std::invalid_argument("stack_rows: ragged rows");
    for (int j = 0; j < n; ++j) out.at(i, j) = r[j];
    rg = rg || t.requires_grad(rows[static_cast<std::size_t>(i)]);
  }
  Var o = t.push(std::move(out), rg, nullptr);
  t.set_backward(o, [rows, o, m, n](Tape& tp) {
    const Tensor& g = tp.grad(o);
    for (int i = 0; i < m; ++i) {
      Var r = rows[static_cast<std::size_t>(i)];
      if (!tp.requires_grad(r)) continue;
      Tensor& gr = tp.grad_mut(r);
      const double* src = g.data() + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) gr[j] += src[j];
    }
  });
  return o;
}

// Embedding lookup: rows of table at the given indices, as a [n,d] matrix.
inline Var gather_rows(Var table, const std::vector<int>& indices) {
  Tape& t = *table.tape;
  const Tensor& vt = t.value(table);
  const int d = vt.dim(1), rows = vt.dim(0);
  const int n = static_cast<int>(indices.size());
  Tensor out({n, d});
  for (int i = 0; i < n; ++i) {
    const int r = indices[static_cast<std::size_t>(i)];
    if (r < 0 || r >= rows) throw std::invalid_argument("gather_rows: index out of range");
    const double* src = vt.data() + static_cast<std::size_t>(r) * d;
    double* dst = out.data() + static_cast<std::size_t>(i) * d;
    for (int j = 0; j < d; ++j) dst[j] = src[j];
  }
  Var o = t.push(std::move(out), t.requires_grad(table), nullptr);
  t.set_backward(o, [table, o, indices, d, n](Tape& tp) {
    const Tensor& g = tp.grad(o);
    Tensor& gt = tp.grad_mut(table);
    for (int i = 0; i < n; ++i) {
      const int r = indices[static_cast<std::size_t>(i)];
      const double* src = g.data() + static_cast<std::size_t>(i) * d;
      double* dst = gt.data() + static_cast<std::size_t>(r) * d;
      for (int j = 0; j < d; ++j) dst[j] += src[j];
    }
  });
  return o;
}

inline Var slice(Var x, int start, int len) {
  Tape& t = *x.tape;
  const Tensor& vx = t.value(x);
  if (start < 0 || start + len > vx.size()) throw std::invalid_argument("slice: out of range");
  Tensor out({len});
  for (int j = 0; j < len; ++j) out[j] = vx[start + j];
  Var o = t.push(std::move(out), t.requires_grad(x), nullptr);
  t.set_backward(o, [x, o, start, len](Tape& tp) {
    const Tensor& g = tp.grad(o);
    Tensor& gx = tp.grad_mut(x);
    for (int j = 0; j < len; ++j) gx[start + j] += g[j];
  });
  return o;
}

inline Var concat(Var a, Var b) {
  Tape& t = *a.tape;
  const Tensor &va = t.value(a), &vb = t.value(b);
  const int p = static_cast<int>(va.size()), q = static_cast<int>(vb.size());
  Tensor out({p + q});
  for (int i = 0; i < p; ++i) out[i] = va[i];
  for (int i = 0; i < q; ++i) out[p + i] = vb[i];
  Var o = t.push(std::move(out), rg2(t, a, b), nullptr);
  t.set_backward(o, [a, b, o, p, q](Tape& tp) {
    const Tensor& g = tp.grad(o);
    if (tp.requires_grad(a)) {
      Tensor& ga = tp.grad_mut(a);
      for (int i = 0; i < p; ++i) ga[i] += g[i];
    }
    if (tp.requires_grad(b)) {
      Tensor& gb = tp.grad_mut(b);
      for (int i = 0; i < q; ++i) gb[i] += g[p + i];
    }
  });
  return o;
}

// Numerically stable binary cross-entropy on a raw score:
// loss = max(x,0) - x*label + log(1 + exp(-|x|)).
inline Var bce_with_logits(Var logit, double label) {
  Tape& t = *logit.tape;
  const double x = t.value(logit)[0];
  const double loss = std::max(x, 0.0) - x * label + std::log1p(std::exp(-std::abs(x)));
  Var o = t.push(Tensor::scalar(loss), t.requires_grad(logit), nullptr);
  t.set_backward(o, [logit, o, x, label](Tape& tp) {
    const double g = tp.grad(o)[0];
    tp.grad_mut(logit)[0] += g * (stable_sigmoid(x) - label);
  });
  return o;
}

// Zeroes rows whose mask entry is 0.
inline Var mask_rows(Var x, const Mask& mask) {
  Tape& t = *x.tape;
  const Tensor& vx = t.value(x);
  const int m = vx.dim(0), n = vx.dim(1);
  if (static_cast<int>(mask.size()) != m) throw std::invalid_argument("mask_rows: mask length");
  Tensor out = vx;
  for (int i = 0; i < m; ++i)
    if (!mask[static_cast<std::size_t>(i)])
      for (int j = 0; j < n; ++j) out.at(i, j) = 0.0;
  Var o = t.push(std::move(out), t.requires_grad(x), nullptr);
  t.set_backward(o, [x, o, mask, m, n](Tape& tp) {
    const Tensor& g = tp.grad(o);
    Tensor& gx = tp.grad_mut(x);
    for (int i = 0; i < m; ++i) {
      if (!mask[static_cast<std::size_t>(i)]) continue;
      const double* src = g.data() + static_cast<std::size_t>(i) * n;
      double* dst = gx.data() + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) dst[j] += src[j];
    }
  });
  return o;
}

}  // namespace mgnm::ops
