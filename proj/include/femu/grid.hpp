#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace femu {

/// Rectangular layout of the parameter vector: d1 rows, d2 columns,
/// filled column-major (alpha[(j-1)*d1 + i] sits at row i, column j).
struct GridShape {
  int d1 = 1;
  int d2 = 1;

  int size() const { return d1 * d2; }
};

/// Reshape alpha onto the grid. Throws if length(alpha) != d1*d2.
inline Eigen::MatrixXd grid_map(const Eigen::VectorXd& alpha, GridShape shape) {
  if (shape.d1 < 1 || shape.d2 < 1 || alpha.size() != shape.size()) {
    throw std::invalid_argument("Error in grid dimension");
  }
  return Eigen::Map<const Eigen::MatrixXd>(alpha.data(), shape.d1, shape.d2);
}

}  // namespace femu
