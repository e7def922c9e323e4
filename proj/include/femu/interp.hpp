#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <vector>

namespace femu {

/// Coarse subset of the parameter grid used for interpolation regularization.
/// indices are 0-based positions into the fine parameter vector, strictly
/// increasing; coords are the matching group-center coordinates.
struct CoarseGrid {
  std::vector<int> indices;
  std::vector<Eigen::Vector2d> coords;

  int count() const { return static_cast<int>(indices.size()); }
};

struct Triangulation {
  struct Triangle {
    std::array<int, 3> v;  // indices into the coarse point list, ccw
  };
  std::vector<Triangle> triangles;
  std::vector<double> signed_areas;
};

/// Piecewise-linear 1D basis on the coarse x-coordinates; returns the
/// n x n1 matrix of basis values at the fine points. Fine points outside
/// the coarse span raise a domain error.
Eigen::MatrixXd tent_basis(const CoarseGrid& coarse, std::span<const double> fine_x);

/// Delaunay triangulation (Bowyer-Watson) of the coarse points.
/// Throws on fewer than 3 points or a collinear point set.
Triangulation triangulate(const CoarseGrid& coarse);

/// Triangular element shape function basis: entry (p, k) is the barycentric
/// weight of coarse vertex k at fine point p, taken from the lowest-index
/// triangle containing p. Points outside the hull raise a domain error.
Eigen::MatrixXd shape_matrix(const CoarseGrid& coarse, const Triangulation& tri,
                             std::span<const Eigen::Vector2d> fine);

/// alpha = L * alpha_coarse.
Eigen::VectorXd expand_params(const Eigen::MatrixXd& l, const Eigen::VectorXd& alpha_coarse);

/// Chain rule for the substitution alpha = L * alpha_coarse: J_coarse = J * L.
Eigen::MatrixXd project_jacobian(const Eigen::MatrixXd& jr, const Eigen::MatrixXd& l);

}  // namespace femu
