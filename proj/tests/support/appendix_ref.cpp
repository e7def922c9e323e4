#include "appendix_ref.hpp"

#include <cmath>
#include <stdexcept>

namespace femu_ref {

namespace {

// diff along rows padded with a zero last row / diff along columns padded
// with a zero last column, exactly like the reference grid setup.
void padded_diffs(const Eigen::MatrixXd& a, Eigen::MatrixXd& dh, Eigen::MatrixXd& dv) {
  const int r = static_cast<int>(a.rows()), c = static_cast<int>(a.cols());
  dh = Eigen::MatrixXd::Zero(r, c);
  dv = Eigen::MatrixXd::Zero(r, c);
  if (r > 1) dh.topRows(r - 1) = a.bottomRows(r - 1) - a.topRows(r - 1);
  if (c > 1) dv.leftCols(c - 1) = a.rightCols(c - 1) - a.leftCols(c - 1);
}

Eigen::MatrixXd shift_down(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m.rows(), m.cols());
  if (m.rows() > 1) s.bottomRows(m.rows() - 1) = m.topRows(m.rows() - 1);
  return s;
}

Eigen::MatrixXd shift_right(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m.rows(), m.cols());
  if (m.cols() > 1) s.rightCols(m.cols() - 1) = m.leftCols(m.cols() - 1);
  return s;
}

Eigen::VectorXd flatten(const Eigen::MatrixXd& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

// Scatter the reference code's linear-indexed diagonal writes: the stride
// n+1 walk starting at linear index `start0` (0-based) over an n x n matrix.
void add_stride_diagonal(Eigen::MatrixXd& hess, int start0, const Eigen::VectorXd& vals) {
  const int n = static_cast<int>(hess.rows());
  long idx = start0;
  for (int k = 0; k < vals.size(); ++k, idx += n + 1) {
    if (idx >= static_cast<long>(n) * n) break;
    hess(static_cast<int>(idx % n), static_cast<int>(idx / n)) += vals[k];
  }
}

}  // namespace

DensePenalty htv_ref(const Eigen::VectorXd& a, int r, int c, double mu) {
  if (a.size() != static_cast<long>(r) * c) throw std::invalid_argument("htv_ref: grid dimension");
  if (c == 1) {
    c = r;
    r = 1;
  }
  const Eigen::MatrixXd grid = Eigen::Map<const Eigen::MatrixXd>(a.data(), r, c);
  Eigen::MatrixXd dh, dv;
  padded_diffs(grid, dh, dv);

  const Eigen::MatrixXd x = (dh.array().square() + dv.array().square()).sqrt();
  const Eigen::ArrayXXd quad = (x.array() <= mu).cast<double>();
  const Eigen::ArrayXXd lin = 1.0 - quad;

  DensePenalty out;
  out.value = (quad * x.array().square() / (2.0 * mu) + lin * (x.array() - mu / 2.0)).sum();

  const Eigen::MatrixXd h = (quad * dh.array() / mu).matrix();
  const Eigen::MatrixXd v = (quad * dv.array() / mu).matrix();
  Eigen::MatrixXd hs = Eigen::MatrixXd::Zero(r, c);
  Eigen::MatrixXd vs = Eigen::MatrixXd::Zero(r, c);
  Eigen::MatrixXd h2 = hs, v2 = hs, hv = hs;
  const Eigen::MatrixXd cc = (quad / mu).matrix();
  for (int j = 0; j < c; ++j) {
    for (int i = 0; i < r; ++i) {
      if (x(i, j) > mu) {
        const double x3 = x(i, j) * x(i, j) * x(i, j);
        hs(i, j) = dh(i, j) / x(i, j);
        vs(i, j) = dv(i, j) / x(i, j);
        h2(i, j) = dh(i, j) * dh(i, j) / x3;
        v2(i, j) = dv(i, j) * dv(i, j) / x3;
        hv(i, j) = dh(i, j) * dv(i, j) / x3;
      }
    }
  }

  const Eigen::MatrixXd grad_grid = -h - v - hs - vs + shift_down(h) + shift_down(hs) +
                                    shift_right(v) + shift_right(vs);
  out.grad = flatten(grad_grid);

  const int n = r * c;
  out.hess = Eigen::MatrixXd::Zero(n, n);
  const Eigen::MatrixXd diag_grid = 2.0 * cc + h2 - 2.0 * hv + v2 + shift_down(cc) +
                                    shift_down(v2) + shift_right(cc) + shift_right(h2);
  out.hess.diagonal() = flatten(diag_grid);

  Eigen::MatrixXd tmp2 = -cc + hv - v2;
  tmp2.row(r - 1).setZero();
  add_stride_diagonal(out.hess, n, flatten(tmp2).head(n - 1));

  const Eigen::MatrixXd tmp3 = (-cc + hv - h2).leftCols(c - 1 > 0 ? c - 1 : 0);
  if (tmp3.size() > 0) add_stride_diagonal(out.hess, n * r, flatten(tmp3));

  Eigen::MatrixXd tmp4 = -shift_down(hv);
  tmp4.col(c - 1).setZero();
  add_stride_diagonal(out.hess, n * (r - 1), flatten(tmp4).head(n - (r - 1)));

  const Eigen::MatrixXd upper = out.hess.triangularView<Eigen::StrictlyUpper>();
  out.hess += upper.transpose();
  return out;
}

DensePenalty phtv_ref(const Eigen::VectorXd& a, int r, int c, double mu) {
  if (a.size() != static_cast<long>(r) * c) throw std::invalid_argument("phtv_ref: grid dimension");
  if (c == 1) {
    c = r;
    r = 1;
  }
  const Eigen::MatrixXd grid = Eigen::Map<const Eigen::MatrixXd>(a.data(), r, c);
  Eigen::MatrixXd dh, dv;
  padded_diffs(grid, dh, dv);

  const double mu2 = mu * mu;
  DensePenalty out;
  out.value =
      (mu * ((1.0 + (dh.array().square() + dv.array().square()) / mu2).sqrt() - 1.0)).sum();

  const Eigen::ArrayXXd x = (1.0 + (dh.array().square() + dv.array().square()) / mu2).sqrt();
  const Eigen::MatrixXd h = (dh.array() / (mu * x)).matrix();
  const Eigen::MatrixXd v = (dv.array() / (mu * x)).matrix();
  const Eigen::ArrayXXd y = mu * x * x * x;
  const Eigen::MatrixXd h2 = (dh.array().square() / (mu2 * y)).matrix();
  const Eigen::MatrixXd v2 = (dv.array().square() / (mu2 * y)).matrix();
  const Eigen::MatrixXd hv = ((dh.array() * dv.array()) / (mu2 * y)).matrix();
  const Eigen::MatrixXd cc = (1.0 / y).matrix();

  out.grad = flatten(Eigen::MatrixXd(-h - v + shift_down(h) + shift_right(v)));

  const int n = r * c;
  out.hess = Eigen::MatrixXd::Zero(n, n);
  const Eigen::MatrixXd diag1 = 2.0 * cc + h2 - 2.0 * hv + v2 + shift_down(cc) +
                                shift_down(v2) + shift_right(cc) + shift_right(h2);
  out.hess.diagonal() = flatten(diag1);

  Eigen::MatrixXd diag2 = -cc - v2 + hv;
  diag2.row(r - 1).setZero();
  add_stride_diagonal(out.hess, n, flatten(diag2).head(n - 1));

  const Eigen::MatrixXd diag3 = (-cc - h2 + hv).leftCols(c - 1 > 0 ? c - 1 : 0);
  if (diag3.size() > 0) add_stride_diagonal(out.hess, n * r, flatten(diag3));

  const Eigen::MatrixXd diag4 = -shift_down(hv);
  add_stride_diagonal(out.hess, n * (r - 1), flatten(diag4).head(n - (r - 1)));

  const Eigen::MatrixXd upper = out.hess.triangularView<Eigen::StrictlyUpper>();
  out.hess += upper.transpose();
  return out;
}

L2TvRef l2tv_ref(const Eigen::VectorXd& a, int r, int c) {
  const int n = static_cast<int>(a.size());
  if (n != r * c) throw std::invalid_argument("Error in grid dimension!");
  const Eigen::MatrixXd grid = Eigen::Map<const Eigen::MatrixXd>(a.data(), r, c);

  const Eigen::MatrixXd dh = grid.bottomRows(r - 1 > 0 ? r - 1 : 0) -
                             grid.topRows(r - 1 > 0 ? r - 1 : 0);
  const Eigen::MatrixXd dv = grid.rightCols(c - 1 > 0 ? c - 1 : 0) -
                             grid.leftCols(c - 1 > 0 ? c - 1 : 0);

  Eigen::MatrixXd ddh(0, n), ddv(0, n);
  if (r > 1) {
    ddh = Eigen::MatrixXd::Zero(c * (r - 1), n);
    for (int blk = 0; blk < c; ++blk) {
      for (int i = 0; i < r - 1; ++i) {
        ddh(blk * (r - 1) + i, blk * r + i) = -1.0;
        ddh(blk * (r - 1) + i, blk * r + i + 1) = 1.0;
      }
    }
  }
  if (c > 1) {
    ddv = Eigen::MatrixXd::Zero(n - r, n);
    for (int k = 0; k < n - r; ++k) {
      ddv(k, k) = -1.0;
      ddv(k, k + r) = 1.0;
    }
  }

  L2TvRef out;
  out.res.resize(dv.size() + dh.size());
  out.res << flatten(dv), flatten(dh);
  out.jac.resize(ddv.rows() + ddh.rows(), n);
  out.jac << ddv, ddh;
  return out;
}

}  // namespace femu_ref
