#include "femu/tv_reg.hpp"

#include <cmath>
#include <stdexcept>

namespace femu {

namespace {

// Forward differences with zero padding on the last row / column.
void cell_differences(const Eigen::MatrixXd& a, Eigen::MatrixXd& dh, Eigen::MatrixXd& dv) {
  const int d1 = static_cast<int>(a.rows());
  const int d2 = static_cast<int>(a.cols());
  dh = Eigen::MatrixXd::Zero(d1, d2);
  dv = Eigen::MatrixXd::Zero(d1, d2);
  if (d1 > 1) dh.topRows(d1 - 1) = a.bottomRows(d1 - 1) - a.topRows(d1 - 1);
  if (d2 > 1) dv.leftCols(d2 - 1) = a.rightCols(d2 - 1) - a.leftCols(d2 - 1);
}

// Per-cell first/second derivative factors of phi(||D_ij||). hc/vc enter the
// gradient; c, h2, v2, hv build the Hessian bands.
struct CellFactors {
  Eigen::MatrixXd hc, vc, c, h2, v2, hv;
};

CellFactors huber_factors(const Eigen::MatrixXd& dh, const Eigen::MatrixXd& dv, double mu) {
  const int d1 = static_cast<int>(dh.rows());
  const int d2 = static_cast<int>(dh.cols());
  CellFactors f;
  f.hc = f.vc = f.c = f.h2 = f.v2 = f.hv = Eigen::MatrixXd::Zero(d1, d2);
  for (int j = 0; j < d2; ++j) {
    for (int i = 0; i < d1; ++i) {
      const double h = dh(i, j), v = dv(i, j);
      const double x = std::sqrt(h * h + v * v);
      if (x <= mu) {
        f.hc(i, j) = h / mu;
        f.vc(i, j) = v / mu;
        f.c(i, j) = 1.0 / mu;
      } else {
        const double x3 = x * x * x;
        f.hc(i, j) = h / x;
        f.vc(i, j) = v / x;
        f.h2(i, j) = h * h / x3;
        f.v2(i, j) = v * v / x3;
        f.hv(i, j) = h * v / x3;
      }
    }
  }
  return f;
}

CellFactors pseudo_huber_factors(const Eigen::MatrixXd& dh, const Eigen::MatrixXd& dv, double mu) {
  const int d1 = static_cast<int>(dh.rows());
  const int d2 = static_cast<int>(dh.cols());
  CellFactors f;
  f.hc = f.vc = f.c = f.h2 = f.v2 = f.hv = Eigen::MatrixXd::Zero(d1, d2);
  const double mu2 = mu * mu;
  for (int j = 0; j < d2; ++j) {
    for (int i = 0; i < d1; ++i) {
      const double h = dh(i, j), v = dv(i, j);
      const double s = std::sqrt(1.0 + (h * h + v * v) / mu2);
      const double y = mu * s * s * s;
      f.hc(i, j) = h / (mu * s);
      f.vc(i, j) = v / (mu * s);
      f.c(i, j) = 1.0 / y;
      f.h2(i, j) = h * h / (mu2 * y);
      f.v2(i, j) = v * v / (mu2 * y);
      f.hv(i, j) = h * v / (mu2 * y);
    }
  }
  return f;
}

// Gradient stencil and banded Hessian shared by both penalties. The own-cell
// second-derivative term is corrected on the last row/column, where one of
// the padded differences is structurally absent.
PenaltyEval assemble_penalty(double value, const CellFactors& f, int d1, int d2) {
  const int n = d1 * d2;
  PenaltyEval out;
  out.value = value;
  out.grad = Eigen::VectorXd::Zero(n);

  std::vector<int> offsets{0, 1};
  if (d1 >= 2) {
    offsets.push_back(d1 - 1);
    offsets.push_back(d1);
  }
  out.hess = BandedSymmetric(n, offsets);

  for (int j = 0; j < d2; ++j) {
    for (int i = 0; i < d1; ++i) {
      const int k = j * d1 + i;

      double g = -f.hc(i, j) - f.vc(i, j);
      if (i > 0) g += f.hc(i - 1, j);
      if (j > 0) g += f.vc(i, j - 1);
      out.grad[k] = g;

      double own = 2.0 * f.c(i, j) + f.h2(i, j) - 2.0 * f.hv(i, j) + f.v2(i, j);
      if (i == d1 - 1) own -= f.c(i, j) + f.v2(i, j);
      if (j == d2 - 1) own -= f.c(i, j) + f.h2(i, j);
      double diag = own;
      if (i > 0) diag += f.c(i - 1, j) + f.v2(i - 1, j);
      if (j > 0) diag += f.c(i, j - 1) + f.h2(i, j - 1);
      out.hess.add(k, 0, diag);

      if (i < d1 - 1) {
        out.hess.add(k, 1, -f.c(i, j) + f.hv(i, j) - f.v2(i, j));
      }
      if (j < d2 - 1) {
        out.hess.add(k, d1, -f.c(i, j) + f.hv(i, j) - f.h2(i, j));
      }
      if (d1 >= 2 && i > 0 && j < d2 - 1) {
        out.hess.add(k, d1 - 1, -f.hv(i - 1, j));
      }
    }
  }
  return out;
}

// Row-vector normalization: a column grid is evaluated as its transpose,
// which preserves the parameter order and the value.
GridShape normalize(GridShape shape) {
  if (shape.d2 == 1 && shape.d1 > 1) return GridShape{1, shape.d1};
  return shape;
}

}  // namespace

double var1(const Eigen::MatrixXd& grid) {
  Eigen::MatrixXd dh, dv;
  cell_differences(grid, dh, dv);
  return (dh.array().square() + dv.array().square()).sqrt().sum();
}

double var2(const Eigen::MatrixXd& grid) {
  Eigen::MatrixXd dh, dv;
  cell_differences(grid, dh, dv);
  return dh.squaredNorm() + dv.squaredNorm();
}

Eigen::MatrixXd difference_matrix(int n) {
  if (n < 1) throw std::invalid_argument("difference_matrix: n must be >= 1");
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n - 1, n);
  for (int i = 0; i < n - 1; ++i) {
    d(i, i) = -1.0;
    d(i, i + 1) = 1.0;
  }
  return d;
}

DiffOperators diff_operators(GridShape shape) {
  const int d1 = shape.d1, d2 = shape.d2, n = shape.size();
  if (d1 < 1 || d2 < 1) throw std::invalid_argument("diff_operators: invalid grid shape");
  DiffOperators ops;
  if (d2 > 1) {
    ops.jv = Eigen::MatrixXd::Zero(n - d1, n);
    for (int k = 0; k < n - d1; ++k) {
      ops.jv(k, k) = -1.0;
      ops.jv(k, k + d1) = 1.0;
    }
  } else {
    ops.jv = Eigen::MatrixXd::Zero(0, n);
  }
  if (d1 > 1) {
    ops.jh = Eigen::MatrixXd::Zero(d2 * (d1 - 1), n);
    for (int j = 0; j < d2; ++j) {
      for (int i = 0; i < d1 - 1; ++i) {
        const int row = j * (d1 - 1) + i;
        ops.jh(row, j * d1 + i) = -1.0;
        ops.jh(row, j * d1 + i + 1) = 1.0;
      }
    }
  } else {
    ops.jh = Eigen::MatrixXd::Zero(0, n);
  }
  return ops;
}

ExpandedResidual l2tv_expand(const Eigen::VectorXd& r, const Eigen::MatrixXd& jr,
                             const Eigen::VectorXd& alpha, GridShape shape,
                             double lambda_reg) {
  if (lambda_reg < 0.0) throw std::domain_error("l2tv_expand: lambda_reg must be >= 0");
  const int n = shape.size();
  if (alpha.size() != n) throw std::invalid_argument("Error in grid dimension");
  if (jr.cols() != n || jr.rows() != r.size()) {
    throw std::invalid_argument("l2tv_expand: residual/Jacobian dimensions inconsistent");
  }

  const DiffOperators ops = diff_operators(shape);
  const double s = std::sqrt(2.0 * lambda_reg);
  const auto mv = static_cast<int>(ops.jv.rows());
  const auto mh = static_cast<int>(ops.jh.rows());
  const auto m0 = static_cast<int>(r.size());

  ExpandedResidual out;
  out.r.resize(m0 + mv + mh);
  out.r.head(m0) = r;
  if (mv > 0) out.r.segment(m0, mv) = s * (ops.jv * alpha);
  if (mh > 0) out.r.tail(mh) = s * (ops.jh * alpha);

  out.jac.resize(m0 + mv + mh, n);
  out.jac.topRows(m0) = jr;
  if (mv > 0) out.jac.middleRows(m0, mv) = s * ops.jv;
  if (mh > 0) out.jac.bottomRows(mh) = s * ops.jh;
  return out;
}

PenaltyEval huber_tv(const Eigen::VectorXd& alpha, GridShape shape, double mu) {
  if (mu <= 0.0) throw std::domain_error("huber_tv: mu must be > 0");
  const GridShape ns = normalize(shape);
  if (alpha.size() != ns.size()) throw std::invalid_argument("Error in grid dimension");
  const Eigen::MatrixXd a = Eigen::Map<const Eigen::MatrixXd>(alpha.data(), ns.d1, ns.d2);

  Eigen::MatrixXd dh, dv;
  cell_differences(a, dh, dv);
  double value = 0.0;
  for (int j = 0; j < ns.d2; ++j) {
    for (int i = 0; i < ns.d1; ++i) {
      const double h = dh(i, j), v = dv(i, j);
      const double x = std::sqrt(h * h + v * v);
      value += (x <= mu) ? x * x / (2.0 * mu) : x - mu / 2.0;
    }
  }
  return assemble_penalty(value, huber_factors(dh, dv, mu), ns.d1, ns.d2);
}

PenaltyEval pseudo_huber_tv(const Eigen::VectorXd& alpha, GridShape shape, double mu) {
  if (mu <= 0.0) throw std::domain_error("pseudo_huber_tv: mu must be > 0");
  const GridShape ns = normalize(shape);
  if (alpha.size() != ns.size()) throw std::invalid_argument("Error in grid dimension");
  const Eigen::MatrixXd a = Eigen::Map<const Eigen::MatrixXd>(alpha.data(), ns.d1, ns.d2);

  Eigen::MatrixXd dh, dv;
  cell_differences(a, dh, dv);
  double value = 0.0;
  for (int j = 0; j < ns.d2; ++j) {
    for (int i = 0; i < ns.d1; ++i) {
      const double h = dh(i, j), v = dv(i, j);
      value += mu * (std::sqrt(1.0 + (h * h + v * v) / (mu * mu)) - 1.0);
    }
  }
  return assemble_penalty(value, pseudo_huber_factors(dh, dv, mu), ns.d1, ns.d2);
}

}  // namespace femu
