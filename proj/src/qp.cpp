#include "lmpinfer/qp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace lmpinfer {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// KKT matrix of the working set:
//   [ G   -E'  -Cw' ] [x]   [rx]
//   [ E    0    0   ] [y] = [re]
//   [ Cw   0    0   ] [u]   [rw]
Eigen::MatrixXd kkt_matrix(const QpProblem& qp, const std::vector<int>& active) {
  const int n = static_cast<int>(qp.G.rows());
  const int me = static_cast<int>(qp.E.rows());
  const int mw = static_cast<int>(active.size());
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + me + mw, n + me + mw);
  K.topLeftCorner(n, n) = qp.G;
  if (me > 0) {
    K.block(0, n, n, me) = -qp.E.transpose();
    K.block(n, 0, me, n) = qp.E;
  }
  for (int k = 0; k < mw; ++k) {
    K.block(0, n + me + k, n, 1) = -qp.C.row(active[k]).transpose();
    K.block(n + me + k, 0, 1, n) = qp.C.row(active[k]);
  }
  return K;
}

}  // namespace

QpResult solve_qp(const QpProblem& qp, int max_iterations, double feas_tol) {
  const int n = static_cast<int>(qp.G.rows());
  const int me = static_cast<int>(qp.E.rows());
  const int mi = static_cast<int>(qp.C.rows());

  QpResult res;
  res.ineq_mult = Eigen::VectorXd::Zero(mi);

  std::vector<int> active;
  Eigen::VectorXd x(n), y(me);
  {
    Eigen::MatrixXd K = kkt_matrix(qp, active);
    Eigen::VectorXd rhs(n + me);
    rhs.head(n) = -qp.g0;
    rhs.tail(me) = qp.e;
    Eigen::VectorXd sol = K.fullPivLu().solve(rhs);
    x = sol.head(n);
    y = sol.tail(me);
  }
  Eigen::VectorXd mu_w;  // multipliers of `active`, same order

  const double g_min = qp.G.diagonal().minCoeff();
  int iter = 0;

  while (true) {
    // Most violated inequality.
    int p = -1;
    double worst = -feas_tol;
    for (int i = 0; i < mi; ++i) {
      const double v = qp.C.row(i).dot(x) - qp.d(i);
      const double scaled = v / (1.0 + std::abs(qp.d(i)));
      if (scaled < worst) {
        worst = scaled;
        p = i;
      }
    }
    if (p < 0) break;

    const Eigen::VectorXd np = qp.C.row(p).transpose();
    double vp = np.dot(x) - qp.d(p);
    double up = 0.0;

    while (true) {
      if (++iter > max_iterations) {
        res.status = QpStatus::kIterationLimit;
        res.iterations = iter;
        return res;
      }

      const int mw = static_cast<int>(active.size());
      Eigen::MatrixXd K = kkt_matrix(qp, active);
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + me + mw);
      rhs.head(n) = np;
      Eigen::VectorXd sol = K.fullPivLu().solve(rhs);
      const Eigen::VectorXd z = sol.head(n);
      const Eigen::VectorXd q = sol.segment(n, me);
      const Eigen::VectorXd r = sol.tail(mw);

      const double npz = np.dot(z);  // equals z'Gz, nonnegative
      const double dep_tol = 1e-12 * (1.0 + np.squaredNorm() / g_min);

      double t2 = kInf;
      if (npz > dep_tol) t2 = -vp / npz;

      double t1 = kInf;
      int blocker = -1;
      for (int k = 0; k < mw; ++k) {
        if (r(k) < -1e-14) {
          const double t = -mu_w(k) / r(k);
          if (t < t1) {
            t1 = t;
            blocker = k;
          }
        }
      }

      if (t1 == kInf && t2 == kInf) {
        res.status = QpStatus::kInfeasible;
        res.iterations = iter;
        return res;
      }

      const double t = std::min(t1, t2);
      x += t * z;
      y += t * q;
      mu_w += t * r;
      up += t;
      vp += t * npz;

      if (t2 <= t1) {
        active.push_back(p);
        mu_w.conservativeResize(mw + 1);
        mu_w(mw) = up;
        break;
      }
      active.erase(active.begin() + blocker);
      Eigen::VectorXd trimmed(mw - 1);
      int j = 0;
      for (int k = 0; k < mw; ++k) {
        if (k != blocker) trimmed(j++) = mu_w(k);
      }
      mu_w = trimmed;
    }
  }

  // Re-solve the final working set directly with one step of iterative
  // refinement; the incremental path accumulates rounding over many steps.
  {
    const int mw = static_cast<int>(active.size());
    Eigen::MatrixXd K = kkt_matrix(qp, active);
    Eigen::VectorXd rhs(n + me + mw);
    rhs.head(n) = -qp.g0;
    rhs.segment(n, me) = qp.e;
    for (int k = 0; k < mw; ++k) rhs(n + me + k) = qp.d(active[k]);
    auto lu = K.fullPivLu();
    Eigen::VectorXd sol = lu.solve(rhs);
    sol += lu.solve(rhs - K * sol);
    x = sol.head(n);
    y = sol.segment(n, me);
    for (int k = 0; k < mw; ++k) {
      res.ineq_mult(active[k]) = std::max(0.0, sol(n + me + k));
    }
  }

  res.status = QpStatus::kOptimal;
  res.x = x;
  res.eq_mult = y;
  res.objective = 0.5 * x.dot(qp.G * x) + qp.g0.dot(x);
  res.iterations = iter;
  return res;
}

}  // namespace lmpinfer
