#include "femu/modal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace femu {

namespace {

ModeSet solve_modes_impl(const Eigen::MatrixXd& k, const Eigen::MatrixXd& m, int n_modes,
                         double rigid_threshold, bool clamp);

}  // namespace

ModeSet solve_modes(const Eigen::MatrixXd& k, const Eigen::MatrixXd& m, int n_modes,
                    double rigid_threshold) {
  return solve_modes_impl(k, m, n_modes, rigid_threshold, false);
}

ModeSet solve_modes_up_to(const Eigen::MatrixXd& k, const Eigen::MatrixXd& m, int max_modes,
                          double rigid_threshold) {
  return solve_modes_impl(k, m, max_modes, rigid_threshold, true);
}

namespace {

ModeSet solve_modes_impl(const Eigen::MatrixXd& k, const Eigen::MatrixXd& m, int n_modes,
                         double rigid_threshold, bool clamp) {
  const auto d = k.rows();
  if (k.cols() != d || m.rows() != d || m.cols() != d) {
    throw std::invalid_argument("solve_modes: K and M must be square and equally sized");
  }
  const double ks = k.cwiseAbs().maxCoeff();
  if ((k - k.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(ks, 1.0)) {
    throw std::invalid_argument("solve_modes: stiffness matrix is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("solve_modes: mass matrix is not positive definite");
  }

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(
      k, m, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("solve_modes: eigenvalue iteration failed");
  }
  const Eigen::VectorXd& vals = es.eigenvalues();

  int rigid = 0;
  while (rigid < vals.size() && vals[rigid] < rigid_threshold) ++rigid;
  if (clamp) {
    n_modes = std::min<int>(n_modes, static_cast<int>(vals.size()) - rigid);
  }
  if (n_modes < 0 || rigid + n_modes > vals.size()) {
    throw std::out_of_range("solve_modes: n_modes exceeds available non-rigid modes");
  }

  ModeSet out;
  out.rigid_count = rigid;
  out.eigenvalues = vals.segment(rigid, n_modes);
  out.shapes = es.eigenvectors().middleCols(rigid, n_modes);
  for (int j = 0; j < n_modes; ++j) {
    int imax = 0;
    out.shapes.col(j).cwiseAbs().maxCoeff(&imax);
    if (out.shapes(imax, j) < 0.0) out.shapes.col(j) = -out.shapes.col(j);
  }
  return out;
}

}  // namespace

double mac(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw std::invalid_argument("mac: vectors must have equal length");
  const double na = a.squaredNorm(), nb = b.squaredNorm();
  if (na == 0.0 || nb == 0.0) throw std::domain_error("mac: zero mode shape");
  const double ip = a.dot(b);
  return ip * ip / (na * nb);
}

double msf(const Eigen::VectorXd& measured, const Eigen::VectorXd& analytical) {
  if (measured.size() != analytical.size()) {
    throw std::invalid_argument("msf: vectors must have equal length");
  }
  const double nm = measured.squaredNorm();
  if (nm == 0.0) throw std::domain_error("msf: zero measured mode shape");
  return measured.dot(analytical) / nm;
}

ModePairing pair_modes(const Eigen::MatrixXd& measured_shapes,
                       const Eigen::MatrixXd& analytical_shapes, double threshold) {
  if (measured_shapes.rows() != analytical_shapes.rows()) {
    throw std::invalid_argument("pair_modes: shape sets live on different sensor sets");
  }
  const int nm = static_cast<int>(measured_shapes.cols());
  const int na = static_cast<int>(analytical_shapes.cols());

  Eigen::MatrixXd macs(nm, na);
  for (int i = 0; i < nm; ++i) {
    for (int j = 0; j < na; ++j) {
      macs(i, j) = mac(measured_shapes.col(i), analytical_shapes.col(j));
    }
  }

  std::vector<bool> used_m(nm, false), used_a(na, false);
  ModePairing out;
  for (int step = 0; step < std::min(nm, na); ++step) {
    double best = -1.0;
    int bi = -1, bj = -1;
    for (int i = 0; i < nm; ++i) {
      if (used_m[i]) continue;
      for (int j = 0; j < na; ++j) {
        if (used_a[j]) continue;
        if (macs(i, j) > best) {
          best = macs(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    if (bi < 0 || best < threshold) break;
    used_m[bi] = true;
    used_a[bj] = true;
    out.pairs.push_back({bi, bj, best});
  }
  std::sort(out.pairs.begin(), out.pairs.end(),
            [](const auto& a, const auto& b) { return a.measured < b.measured; });
  for (int i = 0; i < nm; ++i) {
    if (!used_m[i]) out.unpaired_measured.push_back(i);
  }
  if (out.pairs.empty()) {
    throw std::runtime_error("pair_modes: no mode pair reaches the MAC threshold");
  }
  return out;
}

Sensitivities eigen_sensitivities(const ParameterizedModel& model, const ModeSet& modes,
                                  int n_series, std::span<const int> shape_modes) {
  const int n_modes = modes.count();
  const int n_params = model.parameter_count();
  if (n_series < 1 || n_series > n_modes) {
    throw std::invalid_argument("eigen_sensitivities: n_series exceeds retained mode count");
  }

  Sensitivities out;
  if (shape_modes.empty()) {
    out.shape_modes.resize(n_modes);
    for (int j = 0; j < n_modes; ++j) out.shape_modes[j] = j;
  } else {
    out.shape_modes.assign(shape_modes.begin(), shape_modes.end());
    for (int j : out.shape_modes) {
      if (j < 0 || j >= n_modes) {
        throw std::out_of_range("eigen_sensitivities: shape mode index out of range");
      }
    }
  }

  // Denominators the truncated series actually uses must be well separated.
  for (int j : out.shape_modes) {
    for (int q = 0; q < n_series; ++q) {
      if (q == j) continue;
      const double lj = modes.eigenvalues[j], lq = modes.eigenvalues[q];
      if (std::abs(lq - lj) <= 1e-8 * std::max({std::abs(lq), std::abs(lj), 1.0})) {
        throw std::runtime_error(
            "eigen_sensitivities: repeated eigenvalues make the mode-shape series invalid");
      }
    }
  }

  const auto d = model.k0.rows();
  out.dlambda.resize(n_modes, n_params);
  out.dshapes.assign(out.shape_modes.size(),
                     Eigen::MatrixXd::Zero(d, n_params));

  const Eigen::MatrixXd& phi = modes.shapes;
  int ip = 0;
  for (const auto& family : model.families) {
    for (const auto& ki : family.matrices) {
      const Eigen::MatrixXd u = ki * phi;  // d x n_modes
      out.dlambda.col(ip) = -(phi.array() * u.array()).colwise().sum().transpose();

      for (std::size_t sj = 0; sj < out.shape_modes.size(); ++sj) {
        const int j = out.shape_modes[sj];
        Eigen::VectorXd coef = Eigen::VectorXd::Zero(n_series);
        for (int q = 0; q < n_series; ++q) {
          if (q == j) continue;
          coef[q] = phi.col(q).dot(u.col(j)) /
                    (modes.eigenvalues[q] - modes.eigenvalues[j]);
        }
        out.dshapes[sj].col(ip) = phi.leftCols(n_series) * coef;
      }
      ++ip;
    }
  }
  return out;
}

}  // namespace femu
