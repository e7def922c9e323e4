#include "femu/optimizer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "femu/tv_reg.hpp"

namespace femu {

namespace {

using Sample = ObjectiveSample;

// Maps the optimizer variables to fine-grid parameters and evaluates
// F, its gradient and the model Hessian for the active regime.
class ProblemEvaluator {
 public:
  explicit ProblemEvaluator(const UpdateProblem& p) : p_(p) {
    if (!p.model) throw std::invalid_argument("minimize: problem has no model");
    const int n = p.model->parameter_count();
    if (p.shape.size() != n) {
      throw std::invalid_argument("minimize: grid shape does not match parameter count");
    }
    if (p.lower.size() != n || p.upper.size() != n || p.alpha0.size() != n) {
      throw std::invalid_argument("minimize: bounds/start length does not match parameters");
    }
    if ((p.lower.array() > p.upper.array()).any()) {
      throw std::invalid_argument("minimize: lower bound exceeds upper bound");
    }
    if (p.lambda_reg < 0.0) throw std::domain_error("minimize: lambda_reg must be >= 0");

    if (p.regularizer.kind == RegKind::interpolation) {
      const auto& cg = p.regularizer.coarse;
      if (cg.count() < 2) {
        throw std::invalid_argument("minimize: interpolation regime needs a coarse grid");
      }
      for (int idx : cg.indices) {
        if (idx < 0 || idx >= n) {
          throw std::out_of_range("minimize: coarse index outside the parameter range");
        }
      }
      if (p.shape.d1 == 1 || p.shape.d2 == 1) {
        std::vector<double> fine_x;
        fine_x.reserve(p.model->group_centers.size());
        for (const auto& c : p.model->group_centers) fine_x.push_back(c.x());
        l_ = tent_basis(cg, fine_x);
      } else {
        const Triangulation tri = triangulate(cg);
        l_ = shape_matrix(cg, tri, p.model->group_centers);
      }
      interp_ = true;
    }
  }

  int dim() const { return interp_ ? static_cast<int>(l_.cols()) : p_.shape.size(); }

  Eigen::VectorXd lower() const { return pick(p_.lower); }
  Eigen::VectorXd upper() const { return pick(p_.upper); }
  Eigen::VectorXd start() const { return pick(p_.alpha0); }

  Eigen::VectorXd expand(const Eigen::VectorXd& x) const {
    return interp_ ? Eigen::VectorXd(l_ * x) : x;
  }

  Sample eval(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd alpha = expand(x);
    const ResidualEval re = objective_eval(*p_.model, alpha, p_.measured, p_.objective);

    Sample s;
    s.data_fit = re.f;
    switch (p_.regularizer.kind) {
      case RegKind::none: {
        s.total = re.f;
        s.grad = re.grad;
        s.hess = re.gn_hess;
        break;
      }
      case RegKind::interpolation: {
        const Eigen::MatrixXd jc = project_jacobian(re.jac, l_);
        s.total = re.f;
        s.grad = jc.transpose() * re.r;
        s.hess = jc.transpose() * jc;
        break;
      }
      case RegKind::l2tv: {
        const ExpandedResidual er =
            l2tv_expand(re.r, re.jac, alpha, p_.shape, p_.lambda_reg);
        s.total = 0.5 * er.r.squaredNorm();
        s.grad = er.jac.transpose() * er.r;
        s.hess = er.jac.transpose() * er.jac;
        s.penalty = var2(grid_map(alpha, p_.shape));
        break;
      }
      case RegKind::huber:
      case RegKind::pseudo_huber: {
        const PenaltyEval pe = (p_.regularizer.kind == RegKind::huber)
                                   ? huber_tv(alpha, p_.shape, p_.regularizer.mu)
                                   : pseudo_huber_tv(alpha, p_.shape, p_.regularizer.mu);
        s.total = re.f + p_.lambda_reg * pe.value;
        s.grad = re.grad + p_.lambda_reg * pe.grad;
        s.hess = re.gn_hess;
        pe.hess.add_to(s.hess, p_.lambda_reg);
        s.penalty = pe.value;
        break;
      }
    }
    return s;
  }

  bool interpolated() const { return interp_; }

 private:
  Eigen::VectorXd pick(const Eigen::VectorXd& full) const {
    if (!interp_) return full;
    const auto& idx = p_.regularizer.coarse.indices;
    Eigen::VectorXd out(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) out[k] = full[idx[k]];
    return out;
  }

  const UpdateProblem& p_;
  Eigen::MatrixXd l_;
  bool interp_ = false;
};

// Nearly exact trust-region subproblem via eigendecomposition
// (More-Sorensen secular equation, hard case included).
Eigen::VectorXd tr_subproblem(const Eigen::MatrixXd& b, const Eigen::VectorXd& g,
                              double radius) {
  const int n = static_cast<int>(g.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
  const Eigen::VectorXd lam = es.eigenvalues();
  const Eigen::MatrixXd& q = es.eigenvectors();
  const Eigen::VectorXd gq = q.transpose() * g;

  const double scale =
      std::max({lam.cwiseAbs().maxCoeff(), g.norm() / std::max(radius, 1e-300), 1e-300});
  const double tiny = 1e-14 * scale;

  auto coeffs = [&](double nu) {
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      const double den = lam[i] + nu;
      y[i] = (std::abs(den) > tiny) ? -gq[i] / den : 0.0;
    }
    return y;
  };
  auto step_norm = [&](double nu) { return coeffs(nu).norm(); };

  const double lmin = lam.minCoeff();
  if (lmin > tiny && step_norm(0.0) <= radius) {
    return q * coeffs(0.0);  // interior Newton step
  }

  double nu_lo = std::max(0.0, -lmin) + tiny;
  if (step_norm(nu_lo) <= radius) {
    // Hard case: pad with the most negative curvature direction up to the boundary.
    const Eigen::VectorXd p = q * coeffs(nu_lo);
    const Eigen::VectorXd dir = q.col(0);
    const double bq = 2.0 * p.dot(dir);
    const double cq = p.squaredNorm() - radius * radius;
    const double disc = std::sqrt(std::max(0.0, bq * bq - 4.0 * cq));
    return p + 0.5 * (-bq + disc) * dir;
  }

  double nu_hi = nu_lo + std::max(scale, 1.0);
  for (int it = 0; it < 200 && step_norm(nu_hi) > radius; ++it) nu_hi *= 4.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (nu_lo + nu_hi);
    (step_norm(mid) > radius ? nu_lo : nu_hi) = mid;
  }
  return q * coeffs(nu_hi);
}

Eigen::VectorXd clamp_to_box(const Eigen::VectorXd& x, const Eigen::VectorXd& l,
                             const Eigen::VectorXd& u) {
  return x.cwiseMax(l).cwiseMin(u);
}

Eigen::VectorXd projected_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                   const Eigen::VectorXd& l, const Eigen::VectorXd& u) {
  Eigen::VectorXd gp = g;
  for (int i = 0; i < x.size(); ++i) {
    if (x[i] <= l[i]) gp[i] = std::min(g[i], 0.0);
    if (x[i] >= u[i]) gp[i] = std::max(g[i], 0.0);
  }
  return gp;
}

}  // namespace

const char* to_string(ConvergenceStatus s) {
  switch (s) {
    case ConvergenceStatus::gradient: return "gradient";
    case ConvergenceStatus::step: return "step";
    case ConvergenceStatus::max_iterations: return "max_iterations";
    case ConvergenceStatus::radius_collapse: return "radius_collapse";
    case ConvergenceStatus::failed: return "failed";
  }
  return "unknown";
}

KernelResult minimize_box(const ObjectiveFn& objective, const Eigen::VectorXd& lower,
                          const Eigen::VectorXd& upper, const Eigen::VectorXd& start,
                          const MinimizeOptions& options) {
  const int n = static_cast<int>(start.size());
  if (lower.size() != n || upper.size() != n) {
    throw std::invalid_argument("minimize_box: bounds/start length mismatch");
  }
  if ((lower.array() > upper.array()).any()) {
    throw std::invalid_argument("minimize_box: lower bound exceeds upper bound");
  }

  KernelResult result;
  Eigen::VectorXd x = clamp_to_box(start, lower, upper);
  if ((x - start).cwiseAbs().maxCoeff() > 0.0) {
    result.reason = "infeasible start projected to box; ";
  }

  Sample cur;
  try {
    cur = objective(x);
  } catch (const std::exception& e) {
    result.status = ConvergenceStatus::failed;
    result.reason += std::string("initial evaluation failed: ") + e.what();
    result.x = x;
    return result;
  }
  result.history.push_back(cur.total);

  double radius = options.initial_radius;
  result.status = ConvergenceStatus::max_iterations;
  result.reason += "iteration cap reached";

  int iter = 0;
  while (iter < options.max_iterations) {
    ++iter;
    const Eigen::VectorXd gp = projected_gradient(x, cur.grad, lower, upper);
    if (gp.cwiseAbs().maxCoeff() <= options.gtol) {
      result.status = ConvergenceStatus::gradient;
      result.reason = "projected gradient below gtol";
      break;
    }

    std::vector<int> free;
    free.reserve(n);
    for (int i = 0; i < n; ++i) {
      const bool at_lower = x[i] <= lower[i] && cur.grad[i] >= 0.0;
      const bool at_upper = x[i] >= upper[i] && cur.grad[i] <= 0.0;
      if (!at_lower && !at_upper) free.push_back(i);
    }
    if (free.empty()) {
      result.status = ConvergenceStatus::gradient;
      result.reason = "all variables bound-active at KKT point";
      break;
    }

    const int nf = static_cast<int>(free.size());
    Eigen::MatrixXd bff(nf, nf);
    Eigen::VectorXd gf(nf);
    for (int a = 0; a < nf; ++a) {
      gf[a] = cur.grad[free[a]];
      for (int c = 0; c < nf; ++c) bff(a, c) = cur.hess(free[a], free[c]);
    }

    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    const Eigen::VectorXd pf = tr_subproblem(bff, gf, radius);
    for (int a = 0; a < nf; ++a) p[free[a]] = pf[a];

    const Eigen::VectorXd trial = clamp_to_box(x + p, lower, upper);
    const Eigen::VectorXd step = trial - x;
    const double snorm = step.norm();
    if (snorm == 0.0) {
      radius *= 0.25;
      if (radius < 1e-14) {
        result.status = ConvergenceStatus::radius_collapse;
        result.reason = "trust region collapsed";
        break;
      }
      continue;
    }

    const double pred = -(cur.grad.dot(step) + 0.5 * step.dot(cur.hess * step));
    bool accepted = false;
    double rho = -1.0;
    Sample trial_sample;
    if (pred > 0.0) {
      try {
        trial_sample = objective(trial);
        rho = (cur.total - trial_sample.total) / pred;
        accepted = rho > 1e-4 && trial_sample.total < cur.total;
      } catch (const std::exception&) {
        rho = -1.0;  // evaluation failed inside the box: treat as rejected
      }
    }

    if (accepted) {
      x = trial;
      cur = trial_sample;
      result.history.push_back(cur.total);
      if (snorm <= options.xtol * (1.0 + x.norm())) {
        result.status = ConvergenceStatus::step;
        result.reason = "step below xtol";
        break;
      }
    }

    if (rho < 0.25) {
      radius = std::max(0.25 * snorm, 1e-16);
    } else if (rho > 0.75 && snorm >= 0.8 * radius) {
      radius = std::min(2.5 * radius, 1e3);
    }
    if (radius < 1e-14) {
      result.status = ConvergenceStatus::radius_collapse;
      result.reason = "trust region collapsed";
      break;
    }
  }

  result.iterations = iter;
  result.x = x;
  result.data_fit = cur.data_fit;
  result.penalty = cur.penalty;
  return result;
}

UpdateResult minimize(const UpdateProblem& problem, const MinimizeOptions& options) {
  const ProblemEvaluator ev(problem);
  const KernelResult kr = minimize_box(
      [&ev](const Eigen::VectorXd& x) { return ev.eval(x); }, ev.lower(), ev.upper(),
      ev.start(), options);

  UpdateResult result;
  result.alpha_star = ev.expand(kr.x);
  if (ev.interpolated()) result.alpha_coarse = kr.x;
  result.objective_history = kr.history;
  result.status = kr.status;
  result.reason = kr.reason;
  result.iterations = kr.iterations;
  result.data_fit = kr.data_fit;
  result.penalty = kr.penalty;
  return result;
}

LCurve lcurve_sweep(const UpdateProblem& base, std::span<const double> lambdas,
                    const MinimizeOptions& options) {
  if (base.regularizer.kind == RegKind::none ||
      base.regularizer.kind == RegKind::interpolation) {
    throw std::invalid_argument("lcurve_sweep: sweep needs a penalty regularizer");
  }
  if (lambdas.size() < 4) {
    throw std::invalid_argument("lcurve_sweep: need at least 4 lambda points");
  }

  LCurve curve;
  UpdateProblem prob = base;
  Eigen::VectorXd warm = base.alpha0;
  for (double lambda : lambdas) {
    prob.lambda_reg = lambda;
    prob.alpha0 = warm;
    LCurvePoint pt;
    pt.lambda_reg = lambda;
    try {
      const UpdateResult res = minimize(prob, options);
      pt.ok = res.status != ConvergenceStatus::failed;
      pt.data_fit = res.data_fit;
      pt.penalty = res.penalty;
      if (pt.ok) warm = res.alpha_star;
    } catch (const std::exception&) {
      pt.ok = false;
    }
    curve.points.push_back(pt);
  }
  return curve;
}

namespace {

// Natural cubic spline through (t_i, y_i).
class CubicSpline {
 public:
  CubicSpline(const std::vector<double>& t, const std::vector<double>& y) : t_(t), y_(y) {
    const int n = static_cast<int>(t.size());
    m_.assign(n, 0.0);
    if (n < 3) return;
    std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), d(n, 0.0);
    b[0] = b[n - 1] = 1.0;
    for (int i = 1; i + 1 < n; ++i) {
      const double hl = t[i] - t[i - 1];
      const double hr = t[i + 1] - t[i];
      a[i] = hl;
      b[i] = 2.0 * (hl + hr);
      c[i] = hr;
      d[i] = 6.0 * ((y[i + 1] - y[i]) / hr - (y[i] - y[i - 1]) / hl);
    }
    for (int i = 1; i < n; ++i) {
      const double w = a[i] / b[i - 1];
      b[i] -= w * c[i - 1];
      d[i] -= w * d[i - 1];
    }
    m_[n - 1] = d[n - 1] / b[n - 1];
    for (int i = n - 2; i >= 0; --i) m_[i] = (d[i] - c[i] * m_[i + 1]) / b[i];
  }

  double value(double t) const {
    const auto [i, aa, bb, h] = locate(t);
    return aa * y_[i] + bb * y_[i + 1] +
           ((aa * aa * aa - aa) * m_[i] + (bb * bb * bb - bb) * m_[i + 1]) * h * h / 6.0;
  }
  double d1(double t) const {
    const auto [i, aa, bb, h] = locate(t);
    return (y_[i + 1] - y_[i]) / h - (3.0 * aa * aa - 1.0) / 6.0 * h * m_[i] +
           (3.0 * bb * bb - 1.0) / 6.0 * h * m_[i + 1];
  }
  double d2(double t) const {
    const auto [i, aa, bb, h] = locate(t);
    return aa * m_[i] + bb * m_[i + 1];
  }

 private:
  std::tuple<int, double, double, double> locate(double t) const {
    const int n = static_cast<int>(t_.size());
    int i = static_cast<int>(std::upper_bound(t_.begin(), t_.end(), t) - t_.begin()) - 1;
    i = std::clamp(i, 0, n - 2);
    const double h = t_[i + 1] - t_[i];
    const double bb = (t - t_[i]) / h;
    return {i, 1.0 - bb, bb, h};
  }

  std::vector<double> t_, y_, m_;
};

}  // namespace

CornerResult lcurve_corner(const LCurve& curve, double kappa_min) {
  std::vector<double> x, y, z;
  for (const auto& pt : curve.points) {
    if (!pt.ok || !(pt.data_fit > 0.0) || !(pt.penalty > 0.0)) continue;
    const double xi = std::log10(pt.data_fit);
    const double yi = std::log10(pt.penalty);
    if (!x.empty() && std::hypot(xi - x.back(), yi - y.back()) < 1e-12) continue;
    x.push_back(xi);
    y.push_back(yi);
    z.push_back(std::log10(pt.lambda_reg));
  }
  CornerResult out;
  if (x.size() < 4) return out;

  std::vector<double> t(x.size(), 0.0);
  for (std::size_t i = 1; i < x.size(); ++i) {
    t[i] = t[i - 1] + std::hypot(x[i] - x[i - 1], y[i] - y[i - 1]);
  }
  const CubicSpline sx(t, x), sy(t, y), sz(t, z);

  const int samples_per_segment = 200;
  const int total = samples_per_segment * (static_cast<int>(t.size()) - 1);
  double best_kappa = -1.0, best_t = t.front();
  for (int s = 0; s <= total; ++s) {
    const double tt = t.front() + (t.back() - t.front()) * s / total;
    const double x1 = sx.d1(tt), y1 = sy.d1(tt);
    const double x2 = sx.d2(tt), y2 = sy.d2(tt);
    const double den = std::pow(x1 * x1 + y1 * y1, 1.5);
    if (den <= 0.0) continue;
    const double kappa = std::abs(x1 * y2 - y1 * x2) / den;
    if (kappa > best_kappa) {
      best_kappa = kappa;
      best_t = tt;
    }
  }

  out.curvature = std::max(best_kappa, 0.0);
  if (best_kappa < kappa_min) return out;
  out.found = true;
  out.lambda_star = std::pow(10.0, sz.value(best_t));
  return out;
}

std::vector<double> default_lambda_grid(double lo, double hi, int points_per_decade) {
  if (!(lo > 0.0) || !(hi > lo) || points_per_decade < 1) {
    throw std::invalid_argument("default_lambda_grid: invalid grid parameters");
  }
  std::vector<double> grid;
  const double top = std::log10(hi);
  const double bottom = std::log10(lo);
  const int count = static_cast<int>(std::ceil((top - bottom) * points_per_decade)) + 1;
  for (int k = 0; k < count; ++k) {
    grid.push_back(std::pow(10.0, top - static_cast<double>(k) / points_per_decade));
  }
  return grid;
}

}  // namespace femu
