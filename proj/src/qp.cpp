#include "slsloc/qp.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace slsloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const Vec& v) { return v.size() > 0 ? v.lpNorm<Eigen::Infinity>() : 0.0; }

}  // namespace

QpResult solve_qp(const QpProblem& prob, const QpOptions& opts, const Vec* x_warm,
                  const Vec* y_warm) {
  const Index n = prob.P.rows();
  const Index m = prob.A.rows();
  if (prob.P.cols() != n || prob.q.size() != n || (m > 0 && prob.A.cols() != n) ||
      prob.l.size() != m || prob.u.size() != m)
    throw std::invalid_argument("solve_qp: inconsistent dimensions");
  for (Index i = 0; i < m; ++i)
    if (prob.l(i) > prob.u(i)) throw std::invalid_argument("solve_qp: l > u");

  QpResult res;
  res.x = x_warm && x_warm->size() == n ? *x_warm : Vec::Zero(n);
  res.y = y_warm && y_warm->size() == m ? *y_warm : Vec::Zero(m);

  if (m == 0) {
    // Unconstrained: one regularized solve.
    res.x = (prob.P + opts.sigma * Mat::Identity(n, n)).ldlt().solve(-prob.q);
    res.status = QpStatus::optimal;
    res.objective = 0.5 * res.x.dot(prob.P * res.x) + prob.q.dot(res.x);
    return res;
  }

  Vec rho_vec(m);
  for (Index i = 0; i < m; ++i)
    rho_vec(i) = (prob.l(i) == prob.u(i)) ? opts.rho * 1e3 : opts.rho;

  auto factorize = [&](const Vec& rho) {
    Mat kkt = prob.P;
    kkt.diagonal().array() += opts.sigma;
    kkt.noalias() += prob.A.transpose() * rho.asDiagonal() * prob.A;
    return Eigen::LDLT<Mat>(kkt);
  };
  Eigen::LDLT<Mat> kkt = factorize(rho_vec);

  Vec z = prob.A * res.x;
  for (Index i = 0; i < m; ++i) z(i) = std::clamp(z(i), prob.l(i), prob.u(i));
  Vec y_prev_check = res.y;

  const auto clamp_z = [&](Vec& v) {
    for (Index i = 0; i < m; ++i) v(i) = std::clamp(v(i), prob.l(i), prob.u(i));
  };

  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    // x-update
    const Vec rhs = opts.sigma * res.x - prob.q +
                    prob.A.transpose() * (rho_vec.cwiseProduct(z) - res.y);
    const Vec x_tilde = kkt.solve(rhs);
    const Vec ax_tilde = prob.A * x_tilde;

    // relaxed z/y updates
    const Vec z_cand = opts.alpha * ax_tilde + (1.0 - opts.alpha) * z;
    Vec z_next = z_cand + res.y.cwiseQuotient(rho_vec);
    clamp_z(z_next);
    res.y += rho_vec.cwiseProduct(z_cand - z_next);
    res.x = opts.alpha * x_tilde + (1.0 - opts.alpha) * res.x;
    z = z_next;
    res.iterations = iter;

    if (iter % opts.check_interval != 0 && iter != opts.max_iters) continue;

    const Vec ax = prob.A * res.x;
    const Vec px = prob.P * res.x;
    const Vec aty = prob.A.transpose() * res.y;
    res.primal_residual = inf_norm(ax - z);
    res.dual_residual = inf_norm(px + prob.q + aty);
    const double eps_prim =
        opts.eps_abs + opts.eps_rel * std::max(inf_norm(ax), inf_norm(z));
    const double eps_dual =
        opts.eps_abs + opts.eps_rel * std::max({inf_norm(px), inf_norm(prob.q), inf_norm(aty)});
    if (res.primal_residual <= eps_prim && res.dual_residual <= eps_dual) {
      res.status = QpStatus::optimal;
      break;
    }

    if (iter % opts.rescale_interval == 0) {
      // Primal infeasibility certificate on the multiplier increment.
      const Vec dy = res.y - y_prev_check;
      y_prev_check = res.y;
      const double dy_norm = inf_norm(dy);
      if (dy_norm > 1e-14) {
        double support = 0.0;
        bool bounded = true;
        for (Index i = 0; i < m; ++i) {
          const double dyp = std::max(dy(i), 0.0), dym = std::min(dy(i), 0.0);
          if ((dyp > opts.eps_infeas * dy_norm && prob.u(i) == kInf) ||
              (dym < -opts.eps_infeas * dy_norm && prob.l(i) == -kInf)) {
            bounded = false;
            break;
          }
          if (prob.u(i) != kInf) support += prob.u(i) * dyp;
          if (prob.l(i) != -kInf) support += prob.l(i) * dym;
        }
        if (bounded && inf_norm(prob.A.transpose() * dy) <= opts.eps_infeas * dy_norm &&
            support <= -opts.eps_infeas * dy_norm) {
          res.status = QpStatus::infeasible;
          break;
        }
      }

      // Penalty rescaling on the residual ratio.
      const double prim_rel = res.primal_residual / std::max(1e-12, std::max(inf_norm(ax), inf_norm(z)));
      const double dual_rel =
          res.dual_residual / std::max(1e-12, std::max({inf_norm(px), inf_norm(prob.q), inf_norm(aty)}));
      const double ratio = std::sqrt(prim_rel / std::max(dual_rel, 1e-16));
      if (ratio > 5.0 || ratio < 0.2) {
        const double scale = std::clamp(ratio, 1e-4, 1e4);
        rho_vec *= scale;
        for (Index i = 0; i < m; ++i) rho_vec(i) = std::clamp(rho_vec(i), 1e-6, 1e8);
        kkt = factorize(rho_vec);
      }
    }
  }

  res.objective = 0.5 * res.x.dot(prob.P * res.x) + prob.q.dot(res.x);
  return res;
}

QpResult solve_qp_box(const Mat& P, const Vec& q, const Mat& Aeq, const Vec& beq, const Vec& lo,
                      const Vec& hi, const QpOptions& opts) {
  const Index n = P.rows();
  const Index me = Aeq.rows();
  QpProblem prob;
  prob.P = P;
  prob.q = q;
  prob.A = Mat::Zero(me + n, n);
  if (me > 0) prob.A.topRows(me) = Aeq;
  prob.A.bottomRows(n) = Mat::Identity(n, n);
  prob.l = Vec::Zero(me + n);
  prob.u = Vec::Zero(me + n);
  prob.l.head(me) = beq;
  prob.u.head(me) = beq;
  prob.l.tail(n) = lo;
  prob.u.tail(n) = hi;
  return solve_qp(prob, opts);
}

}  // namespace slsloc
