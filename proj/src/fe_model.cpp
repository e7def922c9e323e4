#include "femu/fe_model.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace femu {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

using Triplets = std::vector<Eigen::Triplet<double>>;

void scatter(Triplets& out, const Eigen::MatrixXd& ke, const std::vector<int>& dofs) {
  const int m = static_cast<int>(dofs.size());
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      if (ke(a, b) != 0.0) out.emplace_back(dofs[a], dofs[b], ke(a, b));
    }
  }
}

// --- Euler-Bernoulli beam element (2 nodes, DOFs w, dw/dx) ------------------

Eigen::Matrix4d beam_stiffness(double ei, double le) {
  Eigen::Matrix4d k;
  const double l2 = le * le;
  k << 12, 6 * le, -12, 6 * le,
      6 * le, 4 * l2, -6 * le, 2 * l2,
      -12, -6 * le, 12, -6 * le,
      6 * le, 2 * l2, -6 * le, 4 * l2;
  return (ei / (l2 * le)) * k;
}

Eigen::Matrix4d beam_mass(double rho_a, double le) {
  Eigen::Matrix4d m;
  const double l2 = le * le;
  m << 156, 22 * le, 54, -13 * le,
      22 * le, 4 * l2, 13 * le, -3 * l2,
      54, 13 * le, 156, -22 * le,
      -13 * le, -3 * l2, -22 * le, 4 * l2;
  return (rho_a * le / 420.0) * m;
}

// --- Rectangular non-conforming Kirchhoff plate element ---------------------
// 12-term polynomial basis, nodal DOFs (w, dw/dx, dw/dy), corners ccw from
// (-1,-1). a, b are the element dimensions.

using Vec12 = Eigen::Matrix<double, 12, 1>;
using Mat12 = Eigen::Matrix<double, 12, 12>;

Vec12 plate_p(double x, double y) {
  Vec12 p;
  p << 1, x, y, x * x, x * y, y * y, x * x * x, x * x * y, x * y * y, y * y * y,
      x * x * x * y, x * y * y * y;
  return p;
}

Vec12 plate_px(double x, double y) {
  Vec12 p;
  p << 0, 1, 0, 2 * x, y, 0, 3 * x * x, 2 * x * y, y * y, 0, 3 * x * x * y, y * y * y;
  return p;
}

Vec12 plate_py(double x, double y) {
  Vec12 p;
  p << 0, 0, 1, 0, x, 2 * y, 0, x * x, 2 * x * y, 3 * y * y, x * x * x, 3 * x * y * y;
  return p;
}

Vec12 plate_pxx(double x, double y) {
  Vec12 p;
  p << 0, 0, 0, 2, 0, 0, 6 * x, 2 * y, 0, 0, 6 * x * y, 0;
  return p;
}

Vec12 plate_pyy(double x, double y) {
  Vec12 p;
  p << 0, 0, 0, 0, 0, 2, 0, 0, 2 * x, 6 * y, 0, 6 * x * y;
  return p;
}

Vec12 plate_pxy(double x, double y) {
  Vec12 p;
  p << 0, 0, 0, 0, 1, 0, 0, 2 * x, 2 * y, 0, 3 * x * x, 3 * y * y;
  return p;
}

struct PlateElementMatrices {
  Mat12 k;  // at unit elasticity
  Mat12 m;
};

PlateElementMatrices plate_element(double a, double b, double t, double nu, double rho) {
  const double corners[4][2] = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
  Mat12 c;
  for (int nnode = 0; nnode < 4; ++nnode) {
    const double xi = corners[nnode][0], eta = corners[nnode][1];
    c.row(3 * nnode + 0) = plate_p(xi, eta).transpose();
    c.row(3 * nnode + 1) = (2.0 / a) * plate_px(xi, eta).transpose();
    c.row(3 * nnode + 2) = (2.0 / b) * plate_py(xi, eta).transpose();
  }
  const Mat12 cinv = c.inverse();

  // Bending rigidity at E = 1.
  const double d0 = t * t * t / (12.0 * (1.0 - nu * nu));
  Eigen::Matrix3d db;
  db << 1, nu, 0, nu, 1, 0, 0, 0, (1.0 - nu) / 2.0;
  db *= d0;

  const double gp[4] = {-0.8611363115940526, -0.3399810435848563,
                        0.3399810435848563, 0.8611363115940526};
  const double gw[4] = {0.3478548451374538, 0.6521451548625461,
                        0.6521451548625461, 0.3478548451374538};

  Mat12 kq = Mat12::Zero();
  Mat12 mq = Mat12::Zero();
  for (int ix = 0; ix < 4; ++ix) {
    for (int iy = 0; iy < 4; ++iy) {
      const double xi = gp[ix], eta = gp[iy];
      const double w = gw[ix] * gw[iy] * (a * b / 4.0);
      Eigen::Matrix<double, 3, 12> bm;
      bm.row(0) = (4.0 / (a * a)) * plate_pxx(xi, eta).transpose();
      bm.row(1) = (4.0 / (b * b)) * plate_pyy(xi, eta).transpose();
      bm.row(2) = (8.0 / (a * b)) * plate_pxy(xi, eta).transpose();
      kq += w * bm.transpose() * db * bm;
      const Vec12 p = plate_p(xi, eta);
      mq += (w * rho * t) * (p * p.transpose());
    }
  }

  PlateElementMatrices out;
  out.k = cinv.transpose() * kq * cinv;
  out.m = cinv.transpose() * mq * cinv;
  out.k = 0.5 * (out.k + out.k.transpose()).eval();
  out.m = 0.5 * (out.m + out.m.transpose()).eval();
  return out;
}

}  // namespace

ParameterizedModel build_beam_model(const BeamSpec& spec) {
  require(spec.length > 0, "BeamSpec.length must be positive");
  require(spec.width > 0, "BeamSpec.width must be positive");
  require(spec.height > 0, "BeamSpec.height must be positive");
  require(spec.elasticity > 0, "BeamSpec.elasticity must be positive");
  require(spec.density > 0, "BeamSpec.density must be positive");
  require(spec.element_count > 0, "BeamSpec.element_count must be positive");
  require(spec.group_count > 0, "BeamSpec.group_count must be positive");
  require(spec.element_count % spec.group_count == 0,
          "BeamSpec.element_count must be divisible by group_count");

  const int ne = spec.element_count;
  const int ng = spec.group_count;
  const int epg = ne / ng;
  const int nn = ne + 1;
  const int d = 2 * nn;
  const double le = spec.length / ne;
  const double area = spec.width * spec.height;
  const double inertia = spec.width * spec.height * spec.height * spec.height / 12.0;

  const Eigen::Matrix4d ke = beam_stiffness(spec.elasticity * inertia, le);
  const Eigen::Matrix4d me = beam_mass(spec.density * area, le);

  ParameterizedModel model;
  model.dof_count = d;

  SubstructureFamily family;
  family.name = "bending";
  family.lower_bounds = Eigen::VectorXd::Constant(ng, -1.0);
  family.upper_bounds = Eigen::VectorXd::Constant(ng, 1.0);

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
  for (int g = 0; g < ng; ++g) {
    Triplets kt;
    for (int e = g * epg; e < (g + 1) * epg; ++e) {
      const std::vector<int> dofs{2 * e, 2 * e + 1, 2 * e + 2, 2 * e + 3};
      scatter(kt, ke, dofs);
      for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
          m(dofs[a], dofs[b]) += me(a, b);
        }
      }
    }
    Eigen::SparseMatrix<double> ki(d, d);
    ki.setFromTriplets(kt.begin(), kt.end());
    family.matrices.push_back(std::move(ki));
    model.group_centers.emplace_back(spec.length * (g + 0.5) / ng, 0.0);
  }

  Eigen::MatrixXd k0 = Eigen::MatrixXd::Zero(d, d);
  for (const auto& ki : family.matrices) k0 += Eigen::MatrixXd(ki);
  model.k0 = std::move(k0);
  model.m = std::move(m);
  model.families.push_back(std::move(family));

  for (int node = 0; node < nn; ++node) {
    model.sensor_dofs.push_back(2 * node);
    model.sensor_coords.emplace_back(spec.length * node / ne, 0.0);
    model.w_dofs.push_back(2 * node);
  }
  model.w_grid = {nn, 1};
  return model;
}

ParameterizedModel build_plate_model(const PlateSpec& spec) {
  require(spec.length > 0, "PlateSpec.length must be positive");
  require(spec.width > 0, "PlateSpec.width must be positive");
  require(spec.thickness > 0, "PlateSpec.thickness must be positive");
  require(spec.elasticity > 0, "PlateSpec.elasticity must be positive");
  require(spec.density > 0, "PlateSpec.density must be positive");
  require(spec.poisson >= 0 && spec.poisson < 0.5,
          "PlateSpec.poisson must lie in [0, 0.5)");
  require(spec.elements_x > 0 && spec.elements_y > 0,
          "PlateSpec.elements_x/elements_y must be positive");
  require(spec.groups_x > 0 && spec.groups_y > 0,
          "PlateSpec.groups_x/groups_y must be positive");
  require(spec.elements_x % spec.groups_x == 0,
          "PlateSpec.elements_x must be divisible by groups_x");
  require(spec.elements_y % spec.groups_y == 0,
          "PlateSpec.elements_y must be divisible by groups_y");

  const int nex = spec.elements_x, ney = spec.elements_y;
  const int ngx = spec.groups_x, ngy = spec.groups_y;
  const int epgx = nex / ngx, epgy = ney / ngy;
  const int nny = ney + 1;
  const int nn = (nex + 1) * nny;
  const int d = 3 * nn;
  const double a = spec.length / nex;
  const double b = spec.width / ney;

  const PlateElementMatrices em =
      plate_element(a, b, spec.thickness, spec.poisson, spec.density);
  const Eigen::MatrixXd ke = spec.elasticity * em.k;

  auto node_index = [nny](int ix, int iy) { return ix * nny + iy; };
  auto element_dofs = [&](int ex, int ey) {
    const int nodes[4] = {node_index(ex, ey), node_index(ex + 1, ey),
                          node_index(ex + 1, ey + 1), node_index(ex, ey + 1)};
    std::vector<int> dofs;
    dofs.reserve(12);
    for (int nd : nodes) {
      dofs.push_back(3 * nd);
      dofs.push_back(3 * nd + 1);
      dofs.push_back(3 * nd + 2);
    }
    return dofs;
  };

  ParameterizedModel model;
  model.dof_count = d;

  SubstructureFamily family;
  family.name = "bending";
  family.lower_bounds = Eigen::VectorXd::Constant(ngx * ngy, -1.0);
  family.upper_bounds = Eigen::VectorXd::Constant(ngx * ngy, 1.0);

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
  for (int ex = 0; ex < nex; ++ex) {
    for (int ey = 0; ey < ney; ++ey) {
      const auto dofs = element_dofs(ex, ey);
      for (int p = 0; p < 12; ++p) {
        for (int q = 0; q < 12; ++q) {
          m(dofs[p], dofs[q]) += em.m(p, q);
        }
      }
    }
  }

  // Groups ordered column-major on the (groups_y x groups_x) parameter grid:
  // index jx*ngy + iy, iy running over the width.
  for (int jx = 0; jx < ngx; ++jx) {
    for (int iy = 0; iy < ngy; ++iy) {
      Triplets kt;
      for (int ex = jx * epgx; ex < (jx + 1) * epgx; ++ex) {
        for (int ey = iy * epgy; ey < (iy + 1) * epgy; ++ey) {
          scatter(kt, ke, element_dofs(ex, ey));
        }
      }
      Eigen::SparseMatrix<double> ki(d, d);
      ki.setFromTriplets(kt.begin(), kt.end());
      family.matrices.push_back(std::move(ki));
      model.group_centers.emplace_back(spec.length * (jx + 0.5) / ngx,
                                       spec.width * (iy + 0.5) / ngy);
    }
  }

  Eigen::MatrixXd k0 = Eigen::MatrixXd::Zero(d, d);
  for (const auto& ki : family.matrices) k0 += Eigen::MatrixXd(ki);
  model.k0 = std::move(k0);
  model.m = std::move(m);
  model.families.push_back(std::move(family));

  // One sensor per group at the nearest node; nodes are visited in index
  // order and ties within rounding keep the first (lowest) index.
  for (const auto& center : model.group_centers) {
    int best = -1;
    double best_d2 = 0.0;
    for (int ix = 0; ix <= nex; ++ix) {
      for (int iy = 0; iy <= ney; ++iy) {
        const Eigen::Vector2d pos(spec.length * ix / nex, spec.width * iy / ney);
        const double d2 = (pos - center).squaredNorm();
        if (best < 0 || d2 < best_d2 - 1e-12 * (1.0 + best_d2)) {
          best_d2 = d2;
          best = node_index(ix, iy);
        }
      }
    }
    model.sensor_dofs.push_back(3 * best);
    const int bx = best / nny, by = best % nny;
    model.sensor_coords.emplace_back(spec.length * bx / nex, spec.width * by / ney);
  }

  for (int ix = 0; ix <= nex; ++ix) {
    for (int iy = 0; iy <= ney; ++iy) {
      model.w_dofs.push_back(3 * node_index(ix, iy));
    }
  }
  model.w_grid = {nex + 1, ney + 1};
  return model;
}

Eigen::MatrixXd assemble_stiffness(const ParameterizedModel& model,
                                   const Eigen::VectorXd& alpha) {
  if (alpha.size() != model.parameter_count()) {
    throw std::invalid_argument("assemble_stiffness: alpha length does not match parameter count");
  }
  Eigen::MatrixXd k = model.k0;
  int offset = 0;
  for (const auto& family : model.families) {
    for (const auto& ki : family.matrices) {
      const double ai = alpha[offset++];
      if (ai != 0.0) {
        for (int col = 0; col < ki.outerSize(); ++col) {
          for (Eigen::SparseMatrix<double>::InnerIterator it(ki, col); it; ++it) {
            k(it.row(), it.col()) -= ai * it.value();
          }
        }
      }
    }
  }
  return k;
}

Eigen::VectorXd damage_indices(const Eigen::VectorXd& e0, const Eigen::VectorXd& e) {
  if (e0.size() != e.size()) {
    throw std::invalid_argument("damage_indices: e0 and e must have equal length");
  }
  if ((e0.array() <= 0.0).any()) {
    throw std::domain_error("damage_indices: e0 entries must be strictly positive");
  }
  return (e0 - e).cwiseQuotient(e0);
}

}  // namespace femu
