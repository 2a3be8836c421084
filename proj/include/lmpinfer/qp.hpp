#pragma once

#include <Eigen/Dense>

namespace lmpinfer {

// Strictly convex quadratic program
//
//   min  1/2 x'Gx + g0'x
//   s.t. E x  = e
//        C x >= d
//
// solved by a dual active-set method: start at the equality-constrained
// minimum and add violated inequalities one at a time, dropping working-set
// members whose multipliers would go negative. Each step re-solves the
// working-set KKT system by dense factorization, which is plenty for the
// problem sizes here (tens of variables, a handful of constraints).
//
// G must be positive definite and the rows of E independent.

enum class QpStatus { kOptimal, kInfeasible, kIterationLimit };

struct QpProblem {
  Eigen::MatrixXd G;
  Eigen::VectorXd g0;
  Eigen::MatrixXd E;
  Eigen::VectorXd e;
  Eigen::MatrixXd C;
  Eigen::VectorXd d;
};

struct QpResult {
  QpStatus status = QpStatus::kIterationLimit;
  Eigen::VectorXd x;
  Eigen::VectorXd eq_mult;    // one per row of E
  Eigen::VectorXd ineq_mult;  // one per row of C; >= 0, zero off the active set
  double objective = 0.0;
  int iterations = 0;
};

QpResult solve_qp(const QpProblem& qp, int max_iterations = 500,
                  double feas_tol = 1e-9);

}  // namespace lmpinfer
