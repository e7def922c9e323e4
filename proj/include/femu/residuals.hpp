#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "femu/fe_model.hpp"
#include "femu/modal.hpp"

namespace femu {

/// Measured modal data on the sensor DOFs. shapes has one column per mode;
/// shape_weights matches it entrywise, freq_weights has one entry per mode.
struct MeasuredModal {
  Eigen::VectorXd eigenvalues;   // rad^2/s^2
  Eigen::MatrixXd shapes;        // d_s x m_f
  Eigen::VectorXd freq_weights;  // m_f
  Eigen::MatrixXd shape_weights; // d_s x m_f

  int mode_count() const { return static_cast<int>(eigenvalues.size()); }
  int sensor_count() const { return static_cast<int>(shapes.rows()); }
  void validate() const;

  /// Unit frequency weights, per-mode shape weights 1/sqrt(d_s).
  static MeasuredModal with_default_weights(Eigen::VectorXd eigenvalues,
                                            Eigen::MatrixXd shapes);
};

/// Weighted relative eigenvalue residual over the paired modes, measured order.
Eigen::VectorXd freq_residual(const MeasuredModal& measured,
                              const Eigen::VectorXd& analytical_eigenvalues,
                              const ModePairing& pairing);

/// Weighted MSF-aligned shape residual, stacked mode-major over sensors.
Eigen::VectorXd shape_residual(const MeasuredModal& measured,
                               const Eigen::MatrixXd& analytical_shapes_at_sensors,
                               const ModePairing& pairing);

/// Rows [frequency block; shape block] matching the residual stacking;
/// frequency rows carry the true derivative of the relative eigenvalue
/// residual (leading minus sign).
Eigen::MatrixXd residual_jacobian(const MeasuredModal& measured, const ModePairing& pairing,
                                  const Sensitivities& sens,
                                  const std::vector<int>& sensor_dofs);

struct ObjectiveConfig {
  int n_modes = 30;        // retained analytical modes (pairing + series)
  int n_series = 30;       // modes in the eigenvector derivative series
  double mac_threshold = 0.7;
  double rigid_threshold = kRigidThreshold;
};

struct ResidualEval {
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  double f = 0.0;            // 0.5 * ||r||^2
  Eigen::VectorXd grad;      // jac' r
  Eigen::MatrixXd gn_hess;   // jac' jac
  ModeSet modes;
  ModePairing pairing;
  std::vector<std::string> warnings;
};

/// Assemble K(alpha), solve modes, pair against the measurements and build
/// the full weighted residual, Jacobian, objective value and derivatives.
ResidualEval objective_eval(const ParameterizedModel& model, const Eigen::VectorXd& alpha,
                            const MeasuredModal& measured, const ObjectiveConfig& config);

}  // namespace femu
