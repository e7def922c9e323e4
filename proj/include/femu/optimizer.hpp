#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "femu/fe_model.hpp"
#include "femu/grid.hpp"
#include "femu/interp.hpp"
#include "femu/residuals.hpp"

namespace femu {

enum class RegKind { none, l2tv, huber, pseudo_huber, interpolation };

struct Regularizer {
  RegKind kind = RegKind::none;
  double mu = 0.05;   // huber / pseudo_huber threshold
  CoarseGrid coarse;  // interpolation regime
};

/// Bound-constrained updating problem min f(alpha) + lambda*R(alpha),
/// l <= alpha <= u. In the interpolation regime the optimizer variables are
/// the coarse parameters and bounds/start are taken at the coarse indices.
struct UpdateProblem {
  std::shared_ptr<const ParameterizedModel> model;
  MeasuredModal measured;
  Regularizer regularizer;
  double lambda_reg = 0.0;
  GridShape shape;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  Eigen::VectorXd alpha0;
  ObjectiveConfig objective;
};

struct MinimizeOptions {
  double gtol = 1e-8;
  double xtol = 1e-10;
  int max_iterations = 200;
  double initial_radius = 0.1;
};

enum class ConvergenceStatus { gradient, step, max_iterations, radius_collapse, failed };

const char* to_string(ConvergenceStatus s);

/// One objective sample for the trust-region kernel: total value, its
/// gradient, a symmetric model Hessian, and the data-fit/penalty split
/// carried through for reporting.
struct ObjectiveSample {
  double total = 0.0;
  double data_fit = 0.0;
  double penalty = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

using ObjectiveFn = std::function<ObjectiveSample(const Eigen::VectorXd&)>;

struct KernelResult {
  Eigen::VectorXd x;
  std::vector<double> history;  // accepted objective values, non-increasing
  ConvergenceStatus status = ConvergenceStatus::failed;
  std::string reason;
  int iterations = 0;
  double data_fit = 0.0;
  double penalty = 0.0;
};

/// Projected trust-region Newton on a box: gradient-projection active set,
/// a near-exact trust-region solve on the free subspace, steps clipped to
/// the box, ratio-controlled radius. Every accepted iterate is feasible.
KernelResult minimize_box(const ObjectiveFn& objective, const Eigen::VectorXd& lower,
                          const Eigen::VectorXd& upper, const Eigen::VectorXd& start,
                          const MinimizeOptions& options = {});

struct UpdateResult {
  Eigen::VectorXd alpha_star;           // fine-grid parameters
  Eigen::VectorXd alpha_coarse;         // coarse variables, interpolation regime
  std::vector<double> objective_history;
  double data_fit = 0.0;
  double penalty = 0.0;
  ConvergenceStatus status = ConvergenceStatus::failed;
  std::string reason;
  int iterations = 0;
};

/// Projected trust-region Newton iteration with the Gauss-Newton data term
/// and the exact penalty Hessian; l2-TV runs as expanded least squares.
UpdateResult minimize(const UpdateProblem& problem, const MinimizeOptions& options = {});

struct LCurvePoint {
  double lambda_reg = 0.0;
  double data_fit = 0.0;
  double penalty = 0.0;
  bool ok = false;
};

struct LCurve {
  std::vector<LCurvePoint> points;
};

/// One minimize per lambda, warm-started from the previous solution.
/// Grid order is preserved; callers pass descending lambdas.
LCurve lcurve_sweep(const UpdateProblem& base, std::span<const double> lambdas,
                    const MinimizeOptions& options = {});

struct CornerResult {
  bool found = false;
  double lambda_star = 0.0;
  double curvature = 0.0;
};

/// Maximum-curvature point of the parametric cubic spline through the
/// log10-log10 (data_fit, penalty) points; below kappa_min reports no corner.
CornerResult lcurve_corner(const LCurve& curve, double kappa_min = 0.1);

/// Descending log-spaced grid, points_per_decade samples per decade.
std::vector<double> default_lambda_grid(double lo = 1e-6, double hi = 1e-1,
                                        int points_per_decade = 8);

}  // namespace femu
