#include "femu/interp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace femu {

namespace {

double signed_area2(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                    const Eigen::Vector2d& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
}

// d strictly inside the circumcircle of ccw triangle (a, b, c)?
bool in_circumcircle(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                     const Eigen::Vector2d& c, const Eigen::Vector2d& d, double eps) {
  const double ax = a.x() - d.x(), ay = a.y() - d.y();
  const double bx = b.x() - d.x(), by = b.y() - d.y();
  const double cx = c.x() - d.x(), cy = c.y() - d.y();
  const double det = (ax * ax + ay * ay) * (bx * cy - cx * by) -
                     (bx * bx + by * by) * (ax * cy - cx * ay) +
                     (cx * cx + cy * cy) * (ax * by - bx * ay);
  return det > eps;
}

struct Edge {
  int u, v;
  bool operator<(const Edge& o) const {
    return std::tie(u, v) < std::tie(o.u, o.v);
  }
};

Edge make_edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

}  // namespace

Eigen::MatrixXd tent_basis(const CoarseGrid& coarse, std::span<const double> fine_x) {
  const int n1 = coarse.count();
  if (n1 < 2) throw std::invalid_argument("tent_basis: need at least 2 coarse points");
  std::vector<double> cx(n1);
  for (int k = 0; k < n1; ++k) cx[k] = coarse.coords[k].x();
  for (int k = 0; k + 1 < n1; ++k) {
    if (!(cx[k] < cx[k + 1])) {
      throw std::invalid_argument("tent_basis: coarse x-coordinates must be strictly increasing");
    }
  }

  const int n = static_cast<int>(fine_x.size());
  const double span_tol = 1e-12 * (cx.back() - cx.front());
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n1);
  for (int p = 0; p < n; ++p) {
    double x = fine_x[p];
    if (x < cx.front() - span_tol || x > cx.back() + span_tol) {
      std::ostringstream msg;
      msg << "tent_basis: fine point " << p << " at x=" << x
          << " lies outside the coarse span [" << cx.front() << ", " << cx.back() << "]";
      throw std::domain_error(msg.str());
    }
    x = std::clamp(x, cx.front(), cx.back());
    int seg = static_cast<int>(std::upper_bound(cx.begin(), cx.end(), x) - cx.begin()) - 1;
    seg = std::clamp(seg, 0, n1 - 2);
    const double w = (x - cx[seg]) / (cx[seg + 1] - cx[seg]);
    l(p, seg) = 1.0 - w;
    l(p, seg + 1) = w;
  }
  return l;
}

Triangulation triangulate(const CoarseGrid& coarse) {
  const int n1 = coarse.count();
  if (n1 < 3) throw std::invalid_argument("triangulate: need at least 3 coarse points");
  const auto& pts = coarse.coords;

  Eigen::Vector2d lo = pts[0], hi = pts[0];
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double diag = std::max((hi - lo).norm(), 1e-300);

  bool collinear = true;
  for (int i = 2; i < n1 && collinear; ++i) {
    if (std::abs(signed_area2(pts[0], pts[1], pts[i])) > 1e-12 * diag * diag) collinear = false;
  }
  if (collinear) throw std::domain_error("triangulate: coarse points are collinear");

  // Points plus a distant enclosing super-triangle.
  std::vector<Eigen::Vector2d> v(pts.begin(), pts.end());
  const Eigen::Vector2d c = 0.5 * (lo + hi);
  const double big = 16.0 * diag;
  v.push_back(c + Eigen::Vector2d(-big, -big));
  v.push_back(c + Eigen::Vector2d(big, -big));
  v.push_back(c + Eigen::Vector2d(0.0, big));

  const double eps = 1e-9 * diag * diag * diag * diag;

  std::vector<std::array<int, 3>> tris{{n1, n1 + 1, n1 + 2}};
  for (int p = 0; p < n1; ++p) {
    std::vector<std::array<int, 3>> keep;
    std::map<Edge, int> edge_count;
    for (const auto& t : tris) {
      if (in_circumcircle(v[t[0]], v[t[1]], v[t[2]], v[p], eps)) {
        edge_count[make_edge(t[0], t[1])]++;
        edge_count[make_edge(t[1], t[2])]++;
        edge_count[make_edge(t[2], t[0])]++;
      } else {
        keep.push_back(t);
      }
    }
    for (const auto& [e, cnt] : edge_count) {
      if (cnt != 1) continue;
      std::array<int, 3> t{e.u, e.v, p};
      if (signed_area2(v[t[0]], v[t[1]], v[t[2]]) < 0.0) std::swap(t[0], t[1]);
      keep.push_back(t);
    }
    tris = std::move(keep);
  }

  Triangulation out;
  for (auto t : tris) {
    if (t[0] >= n1 || t[1] >= n1 || t[2] >= n1) continue;
    // canonical rotation: smallest vertex first, orientation preserved
    while (!(t[0] < t[1] && t[0] < t[2])) {
      std::rotate(t.begin(), t.begin() + 1, t.end());
    }
    out.triangles.push_back({t});
  }
  if (out.triangles.empty()) {
    throw std::domain_error("triangulate: degenerate point set (no triangles)");
  }
  std::sort(out.triangles.begin(), out.triangles.end(),
            [](const auto& a, const auto& b) { return a.v < b.v; });
  out.signed_areas.reserve(out.triangles.size());
  for (const auto& t : out.triangles) {
    out.signed_areas.push_back(0.5 * signed_area2(pts[t.v[0]], pts[t.v[1]], pts[t.v[2]]));
  }
  return out;
}

Eigen::MatrixXd shape_matrix(const CoarseGrid& coarse, const Triangulation& tri,
                             std::span<const Eigen::Vector2d> fine) {
  const int n1 = coarse.count();
  const int n = static_cast<int>(fine.size());
  const auto& pts = coarse.coords;
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n1);

  for (int p = 0; p < n; ++p) {
    const Eigen::Vector2d& fp = fine[p];

    // Exact coarse-point hits get exact unit rows.
    bool snapped = false;
    for (int k = 0; k < n1; ++k) {
      if (fp.x() == pts[k].x() && fp.y() == pts[k].y()) {
        l(p, k) = 1.0;
        snapped = true;
        break;
      }
    }
    if (snapped) continue;

    bool placed = false;
    for (std::size_t ti = 0; ti < tri.triangles.size() && !placed; ++ti) {
      const auto& t = tri.triangles[ti].v;
      const double two_s = 2.0 * tri.signed_areas[ti];
      double bary[3];
      for (int e = 0; e < 3; ++e) {
        const auto& pj = pts[t[(e + 1) % 3]];
        const auto& pk = pts[t[(e + 2) % 3]];
        const double a = pj.x() * pk.y() - pk.x() * pj.y();
        const double b = pj.y() - pk.y();
        const double cc = pk.x() - pj.x();
        bary[e] = (a + b * fp.x() + cc * fp.y()) / two_s;
      }
      if (bary[0] >= -1e-10 && bary[1] >= -1e-10 && bary[2] >= -1e-10) {
        for (int e = 0; e < 3; ++e) {
          l(p, t[e]) = std::clamp(bary[e], 0.0, 1.0);
        }
        placed = true;
      }
    }
    if (!placed) {
      std::ostringstream msg;
      msg << "shape_matrix: fine point " << p << " at (" << fp.x() << ", " << fp.y()
          << ") lies outside the coarse hull";
      throw std::domain_error(msg.str());
    }
  }
  return l;
}

Eigen::VectorXd expand_params(const Eigen::MatrixXd& l, const Eigen::VectorXd& alpha_coarse) {
  if (l.cols() != alpha_coarse.size()) {
    throw std::invalid_argument("expand_params: dimension mismatch");
  }
  return l * alpha_coarse;
}

Eigen::MatrixXd project_jacobian(const Eigen::MatrixXd& jr, const Eigen::MatrixXd& l) {
  if (jr.cols() != l.rows()) {
    throw std::invalid_argument("project_jacobian: dimension mismatch");
  }
  return jr * l;
}

}  // namespace femu
