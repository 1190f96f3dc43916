#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "mgnm/tape.hpp"
#include "mgnm/tensor.hpp"

// Central finite-difference oracle for the analytic gradients recorded on the
// tape. Meant for 64-bit test mode only.

namespace mgnm {

struct GradCheckReport {
  std::string op_name;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

// Builds a scalar from leaf vars for the given points; must be deterministic.
using ScalarFn = std::function<Var(Tape&, const std::vector<Var>&)>;

inline GradCheckReport grad_check(const std::string& op_name, const ScalarFn& fn,
                                  std::vector<Tensor> points, double tolerance,
                                  double step = 1e-5) {
  // analytic pass
  Tape tape(true);
  std::vector<Var> leaves;
  leaves.reserve(points.size());
  for (const Tensor& p : points) leaves.push_back(tape.leaf(p));
  Var root = fn(tape, leaves);
  if (tape.value(root).size() != 1)
    throw std::invalid_argument("grad_check: fn must produce a scalar");
  tape.backward(root);
  std::vector<Tensor> analytic;
  analytic.reserve(points.size());
  for (Var v : leaves) analytic.push_back(tape.grad(v));

  auto eval = [&](const std::vector<Tensor>& pts) {
    Tape t(false);
    std::vector<Var> ls;
    ls.reserve(pts.size());
    for (const Tensor& p : pts) ls.push_back(t.leaf(p));
    return t.value(fn(t, ls))[0];
  };

  GradCheckReport report;
  report.op_name = op_name;
  report.tolerance = tolerance;
  for (std::size_t k = 0; k < points.size(); ++k) {
    for (std::int64_t i = 0; i < points[k].size(); ++i) {
      const double orig = points[k][i];
      points[k][i] = orig + step;
      const double fp = eval(points);
      points[k][i] = orig - step;
      const double fm = eval(points);
      points[k][i] = orig;
      const double numeric = (fp - fm) / (2.0 * step);
      const double a = analytic[k][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-2});
      report.max_rel_error = std::max(report.max_rel_error, std::abs(a - numeric) / denom);
    }
  }
  report.passed = report.max_rel_error <= tolerance;
  return report;
}

inline GradCheckReport grad_check(const std::string& op_name,
                                  const std::function<Var(Tape&, Var)>& fn, const Tensor& point,
                                  double tolerance, double step = 1e-5) {
  return grad_check(
      op_name,
      [&fn](Tape& t, const std::vector<Var>& vs) { return fn(t, vs[0]); },
      {point}, tolerance, step);
}

}  // namespace mgnm
