#pragma once

#include "slsloc/types.hpp"

namespace slsloc {

/// Convex QP in operator-splitting form:
///   min 0.5 x'Px + q'x   s.t.  l <= Ax <= u
/// Equalities are rows with l == u; +-inf bounds are allowed.
struct QpProblem {
  Mat P;
  Vec q;
  Mat A;
  Vec l;
  Vec u;
};

struct QpOptions {
  double eps_abs = 1e-8;
  double eps_rel = 1e-8;
  int max_iters = 50000;
  double rho = 0.1;           // base penalty; equality rows get rho * 1e3
  double sigma = 1e-6;
  double alpha = 1.6;         // over-relaxation
  int check_interval = 25;
  int rescale_interval = 100; // penalty rescale cadence
  double eps_infeas = 1e-7;
};

enum class QpStatus { optimal, max_iters, infeasible };

struct QpResult {
  Vec x;
  Vec y;  // multipliers for l <= Ax <= u
  QpStatus status = QpStatus::max_iters;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
  double objective = 0.0;
};

QpResult solve_qp(const QpProblem& prob, const QpOptions& opts = {},
                  const Vec* x_warm = nullptr, const Vec* y_warm = nullptr);

// Convenience form with equality constraints and per-variable box bounds.
QpResult solve_qp_box(const Mat& P, const Vec& q, const Mat& Aeq, const Vec& beq, const Vec& lo,
                      const Vec& hi, const QpOptions& opts = {});

}  // namespace slsloc
