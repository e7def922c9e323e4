#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <stdexcept>
#include <utility>
#include <vector>

namespace femu {

/// Symmetric matrix stored as a small set of upper diagonals.
/// Only the stored offsets can hold nonzeros; everything else is zero.
class BandedSymmetric {
 public:
  BandedSymmetric() = default;

  /// offsets: distinct non-negative diagonal offsets (0 = main diagonal).
  BandedSymmetric(int n, std::vector<int> offsets) : n_(n) {
    std::sort(offsets.begin(), offsets.end());
    offsets.erase(std::unique(offsets.begin(), offsets.end()), offsets.end());
    for (int off : offsets) {
      if (off < 0 || off >= n) continue;
      diags_.emplace_back(off, Eigen::VectorXd::Zero(n - off));
    }
  }

  int size() const { return n_; }

  /// H[k, k+offset] += v (and the mirrored entry implicitly).
  void add(int k, int offset, double v) {
    for (auto& [off, d] : diags_) {
      if (off == offset) {
        d[k] += v;
        return;
      }
    }
    throw std::out_of_range("BandedSymmetric: offset not in band set");
  }

  double coeff(int i, int j) const {
    if (i > j) std::swap(i, j);
    for (const auto& [off, d] : diags_) {
      if (j - i == off) return d[i];
    }
    return 0.0;
  }

  const std::vector<std::pair<int, Eigen::VectorXd>>& diagonals() const { return diags_; }

  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n_, n_);
    add_to(h, 1.0);
    return h;
  }

  /// target += scale * H, writing both triangles.
  void add_to(Eigen::MatrixXd& target, double scale) const {
    for (const auto& [off, d] : diags_) {
      for (int k = 0; k < d.size(); ++k) {
        target(k, k + off) += scale * d[k];
        if (off != 0) target(k + off, k) += scale * d[k];
      }
    }
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n_);
    for (const auto& [off, d] : diags_) {
      for (int k = 0; k < d.size(); ++k) {
        y[k] += d[k] * x[k + off];
        if (off != 0) y[k + off] += d[k] * x[k];
      }
    }
    return y;
  }

 private:
  int n_ = 0;
  std::vector<std::pair<int, Eigen::VectorXd>> diags_;
};

}  // namespace femu
