#include "femu/residuals.hpp"

#include <cmath>
#include <stdexcept>

namespace femu {

void MeasuredModal::validate() const {
  if ((eigenvalues.array() <= 0.0).any()) {
    throw std::invalid_argument("MeasuredModal: eigenvalues must be positive");
  }
  if (shapes.cols() != mode_count()) {
    throw std::invalid_argument("MeasuredModal: shape column count must match mode count");
  }
  if (freq_weights.size() != mode_count() || (freq_weights.array() <= 0.0).any()) {
    throw std::invalid_argument("MeasuredModal: frequency weights must be positive, one per mode");
  }
  if (shape_weights.rows() != shapes.rows() || shape_weights.cols() != shapes.cols() ||
      (shape_weights.array() <= 0.0).any()) {
    throw std::invalid_argument("MeasuredModal: shape weights must be positive, one per entry");
  }
}

MeasuredModal MeasuredModal::with_default_weights(Eigen::VectorXd eigenvalues,
                                                  Eigen::MatrixXd shapes) {
  MeasuredModal m;
  m.eigenvalues = std::move(eigenvalues);
  m.shapes = std::move(shapes);
  m.freq_weights = Eigen::VectorXd::Ones(m.mode_count());
  const double w = 1.0 / std::sqrt(static_cast<double>(m.shapes.rows()));
  m.shape_weights = Eigen::MatrixXd::Constant(m.shapes.rows(), m.shapes.cols(), w);
  m.validate();
  return m;
}

Eigen::VectorXd freq_residual(const MeasuredModal& measured,
                              const Eigen::VectorXd& analytical_eigenvalues,
                              const ModePairing& pairing) {
  if (pairing.pairs.empty()) throw std::invalid_argument("freq_residual: empty pairing");
  Eigen::VectorXd r(pairing.pairs.size());
  int row = 0;
  for (const auto& p : pairing.pairs) {
    const double lm = measured.eigenvalues[p.measured];
    r[row++] = measured.freq_weights[p.measured] *
               (lm - analytical_eigenvalues[p.analytical]) / lm;
  }
  return r;
}

Eigen::VectorXd shape_residual(const MeasuredModal& measured,
                               const Eigen::MatrixXd& analytical_shapes_at_sensors,
                               const ModePairing& pairing) {
  if (pairing.pairs.empty()) throw std::invalid_argument("shape_residual: empty pairing");
  if (analytical_shapes_at_sensors.rows() != measured.sensor_count()) {
    throw std::invalid_argument("shape_residual: analytical shapes not restricted to sensors");
  }
  const int ds = measured.sensor_count();
  Eigen::VectorXd r(static_cast<int>(pairing.pairs.size()) * ds);
  int block = 0;
  for (const auto& p : pairing.pairs) {
    const Eigen::VectorXd& pm = measured.shapes.col(p.measured);
    const Eigen::VectorXd pa = analytical_shapes_at_sensors.col(p.analytical);
    const double scale = msf(pm, pa);
    r.segment(block * ds, ds) =
        measured.shape_weights.col(p.measured).cwiseProduct(scale * pm - pa);
    ++block;
  }
  return r;
}

Eigen::MatrixXd residual_jacobian(const MeasuredModal& measured, const ModePairing& pairing,
                                  const Sensitivities& sens,
                                  const std::vector<int>& sensor_dofs) {
  const int mf = static_cast<int>(pairing.pairs.size());
  const int ds = static_cast<int>(sensor_dofs.size());
  const int n = static_cast<int>(sens.dlambda.cols());
  if (ds != measured.sensor_count()) {
    throw std::invalid_argument("residual_jacobian: sensor count mismatch");
  }

  auto shape_slot = [&](int mode) {
    for (std::size_t s = 0; s < sens.shape_modes.size(); ++s) {
      if (sens.shape_modes[s] == mode) return static_cast<int>(s);
    }
    throw std::invalid_argument("residual_jacobian: missing shape sensitivity for paired mode");
  };

  Eigen::MatrixXd jac(mf + mf * ds, n);
  int row = 0;
  for (const auto& p : pairing.pairs) {
    const double lm = measured.eigenvalues[p.measured];
    jac.row(row++) = -(measured.freq_weights[p.measured] / lm) *
                     sens.dlambda.row(p.analytical);
  }
  int block = 0;
  for (const auto& p : pairing.pairs) {
    const Eigen::VectorXd& pm = measured.shapes.col(p.measured);
    const double nm2 = pm.squaredNorm();
    const Eigen::MatrixXd& dphi = sens.dshapes[shape_slot(p.analytical)];
    Eigen::MatrixXd dphi_s(ds, n);
    for (int s = 0; s < ds; ++s) dphi_s.row(s) = dphi.row(sensor_dofs[s]);

    const Eigen::RowVectorXd dmsf = (pm.transpose() * dphi_s) / nm2;  // 1 x n
    jac.middleRows(mf + block * ds, ds) =
        measured.shape_weights.col(p.measured).asDiagonal() *
        (pm * dmsf - dphi_s);
    ++block;
  }
  return jac;
}

ResidualEval objective_eval(const ParameterizedModel& model, const Eigen::VectorXd& alpha,
                            const MeasuredModal& measured, const ObjectiveConfig& config) {
  measured.validate();
  const Eigen::MatrixXd k = assemble_stiffness(model, alpha);

  ResidualEval out;
  out.modes = solve_modes_up_to(k, model.m, config.n_modes, config.rigid_threshold);

  const int ds = static_cast<int>(model.sensor_dofs.size());
  Eigen::MatrixXd analytical_s(ds, out.modes.count());
  for (int s = 0; s < ds; ++s) analytical_s.row(s) = out.modes.shapes.row(model.sensor_dofs[s]);

  out.pairing = pair_modes(measured.shapes, analytical_s, config.mac_threshold);
  for (int im : out.pairing.unpaired_measured) {
    out.warnings.push_back("measured mode " + std::to_string(im + 1) +
                           " has no MAC partner and was skipped");
  }

  std::vector<int> paired_modes;
  for (const auto& p : out.pairing.pairs) paired_modes.push_back(p.analytical);
  const int n_series = std::min(config.n_series, out.modes.count());
  const Sensitivities sens = eigen_sensitivities(model, out.modes, n_series, paired_modes);

  const Eigen::VectorXd rf = freq_residual(measured, out.modes.eigenvalues, out.pairing);
  const Eigen::VectorXd rs = shape_residual(measured, analytical_s, out.pairing);
  out.r.resize(rf.size() + rs.size());
  out.r << rf, rs;
  out.jac = residual_jacobian(measured, out.pairing, sens, model.sensor_dofs);

  out.f = 0.5 * out.r.squaredNorm();
  out.grad = out.jac.transpose() * out.r;
  out.gn_hess = out.jac.transpose() * out.jac;
  return out;
}

}  // namespace femu
