#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <vector>

#include "femu/fe_model.hpp"

namespace femu {

/// Default rigid-body cutoff: (2*pi*1 Hz)^2 in rad^2/s^2.
inline constexpr double kRigidThreshold = 39.47841760435743;

/// Retained eigenpairs of K phi = lambda M phi, ascending, mass-normalized,
/// sign fixed so the largest-magnitude entry of each shape is positive.
struct ModeSet {
  Eigen::VectorXd eigenvalues;  // rad^2/s^2
  Eigen::MatrixXd shapes;       // column k = mode k, d rows
  int rigid_count = 0;

  int count() const { return static_cast<int>(eigenvalues.size()); }
  Eigen::VectorXd frequencies_hz() const {
    return eigenvalues.cwiseMax(0.0).cwiseSqrt() / (2.0 * M_PI);
  }
};

ModeSet solve_modes(const Eigen::MatrixXd& k, const Eigen::MatrixXd& m, int n_modes,
                    double rigid_threshold = kRigidThreshold);

/// Like solve_modes but retains min(max_modes, available) non-rigid modes
/// instead of failing when the model is smaller than the request.
ModeSet solve_modes_up_to(const Eigen::MatrixXd& k, const Eigen::MatrixXd& m, int max_modes,
                          double rigid_threshold = kRigidThreshold);

/// Modal assurance criterion |<a,b>|^2 / (|a|^2 |b|^2), in [0, 1].
double mac(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Modal scale factor <measured, analytical> / |measured|^2.
double msf(const Eigen::VectorXd& measured, const Eigen::VectorXd& analytical);

struct ModePairing {
  struct Pair {
    int measured;
    int analytical;
    double mac_value;
  };
  std::vector<Pair> pairs;            // sorted by measured index
  std::vector<int> unpaired_measured; // measured modes without a partner
};

/// Greedy assignment in descending MAC order; pairs below the threshold are
/// dropped. Columns are modes; both shape sets must share the row (sensor)
/// space. Throws if nothing pairs.
ModePairing pair_modes(const Eigen::MatrixXd& measured_shapes,
                       const Eigen::MatrixXd& analytical_shapes, double threshold);

/// Eigenvalue and eigenvector derivatives w.r.t. the updating parameters.
struct Sensitivities {
  Eigen::MatrixXd dlambda;              // modes.count() x n_params
  std::vector<int> shape_modes;         // mode indices with dshapes entries
  std::vector<Eigen::MatrixXd> dshapes; // each d x n_params
};

/// dlambda_j/dalpha_i = -phi_j' K_i phi_j; dphi_j/dalpha_i is the modal
/// series over the first n_series retained modes (q != j) with coefficients
/// phi_q' K_i phi_j / (lambda_q - lambda_j). shape_modes selects which modes
/// get shape derivatives (empty = all retained).
Sensitivities eigen_sensitivities(const ParameterizedModel& model, const ModeSet& modes,
                                  int n_series, std::span<const int> shape_modes = {});

}  // namespace femu
