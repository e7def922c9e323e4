#pragma once

#include <Eigen/Dense>

#include "femu/banded.hpp"
#include "femu/grid.hpp"

namespace femu {

/// Isotropic total variation: sum over grid cells of the Euclidean norm of
/// the forward-difference pair, zero-padded on the last row/column.
double var1(const Eigen::MatrixXd& grid);

/// Squared-difference total variation: sum of Dh^2 + Dv^2 over all cells.
double var2(const Eigen::MatrixXd& grid);

/// Bidiagonal forward-difference matrix, (n-1) x n, rows (-1, 1).
Eigen::MatrixXd difference_matrix(int n);

/// Column-difference operator jv ((n-d1) x n) and row-difference operator
/// jh (d2*(d1-1) x n, block diagonal copies of difference_matrix(d1)).
/// Either block may have zero rows for 1D grids.
struct DiffOperators {
  Eigen::MatrixXd jv;
  Eigen::MatrixXd jh;
};
DiffOperators diff_operators(GridShape shape);

struct ExpandedResidual {
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
};

/// Stack the data residual/Jacobian with sqrt(2*lambda)-scaled difference
/// rows so that 0.5*||r_exp||^2 = 0.5*||r||^2 + lambda*var2(grid).
ExpandedResidual l2tv_expand(const Eigen::VectorXd& r, const Eigen::MatrixXd& jr,
                             const Eigen::VectorXd& alpha, GridShape shape,
                             double lambda_reg);

/// Value, gradient and banded Hessian of a TV penalty on the grid.
/// The Hessian is supported on diagonals {0, 1, d1-1, d1} of the
/// (row-normalized) grid and their mirrors.
struct PenaltyEval {
  double value = 0.0;
  Eigen::VectorXd grad;
  BandedSymmetric hess;
};

/// Huber total variation: phi(x) = x^2/(2 mu) for |x| <= mu, |x| - mu/2 above,
/// applied to the cell difference norms. Boundary ties go to the quadratic branch.
PenaltyEval huber_tv(const Eigen::VectorXd& alpha, GridShape shape, double mu);

/// Pseudo-Huber total variation: phi(x) = mu*(sqrt(1 + (x/mu)^2) - 1),
/// smooth to all orders.
PenaltyEval pseudo_huber_tv(const Eigen::VectorXd& alpha, GridShape shape, double mu);

}  // namespace femu
