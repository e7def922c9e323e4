#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <string>
#include <vector>

namespace femu {

/// One named group of substructure stiffness matrices with per-parameter
/// box bounds on the dimensionless updating parameters.
struct SubstructureFamily {
  std::string name;
  std::vector<Eigen::SparseMatrix<double>> matrices;
  Eigen::VectorXd lower_bounds;
  Eigen::VectorXd upper_bounds;

  int parameter_count() const { return static_cast<int>(matrices.size()); }
};

/// K(alpha) = k0 - sum_i alpha_i * K_i over all families, with constant mass m.
struct ParameterizedModel {
  Eigen::MatrixXd k0;
  Eigen::MatrixXd m;
  std::vector<SubstructureFamily> families;
  int dof_count = 0;
  std::vector<int> sensor_dofs;
  std::vector<Eigen::Vector2d> sensor_coords;
  std::vector<Eigen::Vector2d> group_centers;

  // Transverse-displacement DOFs on the node grid (w_grid = {cols, rows},
  // column-major), used for synthetic mode classification.
  std::vector<int> w_dofs;
  std::array<int, 2> w_grid{0, 0};

  int parameter_count() const {
    int n = 0;
    for (const auto& f : families) n += f.parameter_count();
    return n;
  }
};

/// Free-free Euler-Bernoulli beam split into contiguous equal group stripes.
struct BeamSpec {
  double length = 1.05;        // m
  double width = 0.34;         // m
  double height = 0.07;        // m
  double elasticity = 36.6e9;  // Pa
  double density = 2500.0;     // kg/m^3
  int element_count = 13;
  int group_count = 13;
};

/// Free-free thin rectangular plate (4-node non-conforming Kirchhoff bending
/// elements, 3 DOF/node) with a groups_x x groups_y patch grid.
struct PlateSpec {
  double length = 1.05;        // m, x direction
  double width = 0.34;         // m, y direction
  double thickness = 0.07;     // m
  double elasticity = 36.6e9;  // Pa
  double poisson = 0.2;
  double density = 2500.0;     // kg/m^3
  int elements_x = 13;
  int elements_y = 5;
  int groups_x = 13;
  int groups_y = 5;
};

ParameterizedModel build_beam_model(const BeamSpec& spec);
ParameterizedModel build_plate_model(const PlateSpec& spec);

/// K(alpha) = K0 - sum alpha_i K_i; alpha spans all families in order.
Eigen::MatrixXd assemble_stiffness(const ParameterizedModel& model,
                                   const Eigen::VectorXd& alpha);

/// Damage indices (e0 - e) / e0, componentwise.
Eigen::VectorXd damage_indices(const Eigen::VectorXd& e0, const Eigen::VectorXd& e);

}  // namespace femu
