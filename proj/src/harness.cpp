#include "femu/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "femu/interp.hpp"
#include "femu/tv_reg.hpp"

namespace femu {

namespace {

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (j.contains(key)) return j.at(key).get<T>();
  return fallback;
}

std::vector<int> to_zero_based(const std::vector<int>& one_based, int n,
                               const std::string& what) {
  std::vector<int> out;
  out.reserve(one_based.size());
  for (int v : one_based) {
    if (v < 1 || v > n) {
      throw std::invalid_argument(what + ": index " + std::to_string(v) +
                                  " outside [1, " + std::to_string(n) + "]");
    }
    out.push_back(v - 1);
  }
  if (!std::is_sorted(out.begin(), out.end()) ||
      std::adjacent_find(out.begin(), out.end()) != out.end()) {
    throw std::invalid_argument(what + ": indices must be strictly increasing");
  }
  return out;
}

RegKind reg_kind_from(const std::string& s) {
  if (s == "none") return RegKind::none;
  if (s == "l2tv") return RegKind::l2tv;
  if (s == "huber") return RegKind::huber;
  if (s == "pseudo_huber") return RegKind::pseudo_huber;
  if (s == "interpolation") return RegKind::interpolation;
  throw std::invalid_argument("regularizer.type must be one of none, l2tv, huber, "
                              "pseudo_huber, interpolation");
}

std::string reg_kind_name(RegKind k) {
  switch (k) {
    case RegKind::none: return "none";
    case RegKind::l2tv: return "l2tv";
    case RegKind::huber: return "huber";
    case RegKind::pseudo_huber: return "pseudo_huber";
    case RegKind::interpolation: return "interpolation";
  }
  return "none";
}

}  // namespace

ScenarioConfig parse_config(const json& j) {
  ScenarioConfig c;

  const json jm = get_or(j, "model", json::object());
  const std::string type = get_or<std::string>(jm, "type", "beam");
  if (type == "plate") {
    c.is_plate = true;
    c.plate.length = get_or(jm, "length", c.plate.length);
    c.plate.width = get_or(jm, "width", c.plate.width);
    c.plate.thickness = get_or(jm, "thickness", c.plate.thickness);
    c.plate.elasticity = 1e9 * get_or(jm, "elasticity_gpa", c.plate.elasticity / 1e9);
    c.plate.poisson = get_or(jm, "poisson", c.plate.poisson);
    c.plate.density = get_or(jm, "density", c.plate.density);
    c.plate.elements_x = get_or(jm, "elements_x", c.plate.elements_x);
    c.plate.elements_y = get_or(jm, "elements_y", c.plate.elements_y);
    c.plate.groups_x = get_or(jm, "groups_x", c.plate.groups_x);
    c.plate.groups_y = get_or(jm, "groups_y", c.plate.groups_y);
  } else if (type == "beam") {
    c.is_plate = false;
    c.beam.length = get_or(jm, "length", c.beam.length);
    c.beam.width = get_or(jm, "width", c.beam.width);
    c.beam.height = get_or(jm, "height", c.beam.height);
    c.beam.elasticity = 1e9 * get_or(jm, "elasticity_gpa", c.beam.elasticity / 1e9);
    c.beam.density = get_or(jm, "density", c.beam.density);
    c.beam.element_count = get_or(jm, "elements", c.beam.element_count);
    c.beam.group_count = get_or(jm, "groups", c.beam.group_count);
  } else {
    throw std::invalid_argument("model.type must be \"beam\" or \"plate\"");
  }

  const int n = c.group_count();
  if (j.contains("damage")) {
    const json& jd = j.at("damage");
    if (jd.is_object()) {
      for (const auto& [key, val] : jd.items()) {
        const int g = std::stoi(key);
        if (g < 1 || g > n) {
          throw std::invalid_argument("damage: group " + key + " outside [1, " +
                                      std::to_string(n) + "]");
        }
        c.damage[g - 1] = val.get<double>();
      }
    } else if (jd.is_array()) {
      if (static_cast<int>(jd.size()) != n) {
        throw std::invalid_argument("damage array must list one value per group");
      }
      for (int g = 0; g < n; ++g) {
        const double di = jd.at(g).get<double>();
        if (di != 0.0) c.damage[g] = di;
      }
    }
    for (const auto& [g, di] : c.damage) {
      if (di < 0.0 || di >= 1.0) {
        throw std::invalid_argument("damage indices must lie in [0, 1)");
      }
      (void)g;
    }
  }

  const json jn = get_or(j, "noise", json::object());
  c.noise.frequency_rel_std = get_or(jn, "frequency_rel_std", c.noise.frequency_rel_std);
  c.noise.shape_abs_std = get_or(jn, "shape_abs_std", c.noise.shape_abs_std);
  if (c.noise.frequency_rel_std < 0 || c.noise.shape_abs_std < 0) {
    throw std::invalid_argument("noise levels must be non-negative");
  }

  c.measured_modes = get_or(j, "measured_modes", c.measured_modes);

  const json jr = get_or(j, "regularizer", json::object());
  c.reg_kind = reg_kind_from(get_or<std::string>(jr, "type", "none"));
  c.mu = get_or(jr, "mu", c.mu);
  if (jr.contains("lambda")) {
    if (jr.at("lambda").is_string()) {
      if (jr.at("lambda").get<std::string>() != "lcurve") {
        throw std::invalid_argument("regularizer.lambda must be a number or \"lcurve\"");
      }
      c.lambda_lcurve = true;
    } else {
      c.lambda = jr.at("lambda").get<double>();
      if (c.lambda < 0) throw std::invalid_argument("regularizer.lambda must be >= 0");
    }
  }
  if (jr.contains("coarse_indices")) {
    c.coarse_indices =
        to_zero_based(jr.at("coarse_indices").get<std::vector<int>>(), n, "coarse_indices");
  }

  const json jb = get_or(j, "bounds", json::object());
  c.default_gpa = get_or(jb, "default_gpa", c.default_gpa);
  c.edge_gpa = get_or(jb, "edge_gpa", c.edge_gpa);
  if (jb.contains("edge_groups")) {
    if (jb.at("edge_groups").is_string()) {
      if (jb.at("edge_groups").get<std::string>() != "auto") {
        throw std::invalid_argument("bounds.edge_groups must be \"auto\" or an index list");
      }
      c.edge_auto = true;
    } else {
      c.edge_auto = false;
      c.edge_groups =
          to_zero_based(jb.at("edge_groups").get<std::vector<int>>(), n, "edge_groups");
    }
  }

  const json jl = get_or(j, "lcurve", json::object());
  c.lcurve_min = get_or(jl, "lambda_min", c.lcurve_min);
  c.lcurve_max = get_or(jl, "lambda_max", c.lcurve_max);
  c.lcurve_points_per_decade = get_or(jl, "points_per_decade", c.lcurve_points_per_decade);

  const json js = get_or(j, "solver", json::object());
  c.solver.gtol = get_or(js, "gtol", c.solver.gtol);
  c.solver.xtol = get_or(js, "xtol", c.solver.xtol);
  c.solver.max_iterations = get_or(js, "max_iterations", c.solver.max_iterations);
  c.solver.initial_radius = get_or(js, "initial_radius", c.solver.initial_radius);

  const json jmod = get_or(j, "modal", json::object());
  c.retained_modes = get_or(jmod, "retained_modes", c.retained_modes);
  c.series_modes = get_or(jmod, "series_modes", c.series_modes);
  c.mac_threshold = get_or(jmod, "mac_threshold", c.mac_threshold);

  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  return parse_config(json::parse(read_text_file(path)));
}

json config_to_json(const ScenarioConfig& c) {
  json j;
  json jm;
  if (c.is_plate) {
    jm["type"] = "plate";
    jm["length"] = c.plate.length;
    jm["width"] = c.plate.width;
    jm["thickness"] = c.plate.thickness;
    jm["elasticity_gpa"] = c.plate.elasticity / 1e9;
    jm["poisson"] = c.plate.poisson;
    jm["density"] = c.plate.density;
    jm["elements_x"] = c.plate.elements_x;
    jm["elements_y"] = c.plate.elements_y;
    jm["groups_x"] = c.plate.groups_x;
    jm["groups_y"] = c.plate.groups_y;
  } else {
    jm["type"] = "beam";
    jm["length"] = c.beam.length;
    jm["width"] = c.beam.width;
    jm["height"] = c.beam.height;
    jm["elasticity_gpa"] = c.beam.elasticity / 1e9;
    jm["density"] = c.beam.density;
    jm["elements"] = c.beam.element_count;
    jm["groups"] = c.beam.group_count;
  }
  j["model"] = jm;

  json jd = json::object();
  for (const auto& [g, di] : c.damage) jd[std::to_string(g + 1)] = di;
  j["damage"] = jd;

  j["noise"] = {{"frequency_rel_std", c.noise.frequency_rel_std},
                {"shape_abs_std", c.noise.shape_abs_std}};
  j["measured_modes"] = c.measured_modes;

  json jr;
  jr["type"] = reg_kind_name(c.reg_kind);
  jr["mu"] = c.mu;
  if (c.lambda_lcurve) {
    jr["lambda"] = "lcurve";
  } else {
    jr["lambda"] = c.lambda;
  }
  if (!c.coarse_indices.empty()) {
    std::vector<int> one_based;
    for (int v : c.coarse_indices) one_based.push_back(v + 1);
    jr["coarse_indices"] = one_based;
  }
  j["regularizer"] = jr;

  json jb;
  jb["default_gpa"] = c.default_gpa;
  jb["edge_gpa"] = c.edge_gpa;
  if (c.edge_auto) {
    jb["edge_groups"] = "auto";
  } else {
    std::vector<int> one_based;
    for (int v : c.edge_groups) one_based.push_back(v + 1);
    jb["edge_groups"] = one_based;
  }
  j["bounds"] = jb;

  j["lcurve"] = {{"lambda_min", c.lcurve_min},
                 {"lambda_max", c.lcurve_max},
                 {"points_per_decade", c.lcurve_points_per_decade}};
  j["solver"] = {{"gtol", c.solver.gtol},
                 {"xtol", c.solver.xtol},
                 {"max_iterations", c.solver.max_iterations},
                 {"initial_radius", c.solver.initial_radius}};
  j["modal"] = {{"retained_modes", c.retained_modes},
                {"series_modes", c.series_modes},
                {"mac_threshold", c.mac_threshold}};
  j["seed"] = c.seed;
  return j;
}

std::shared_ptr<const ParameterizedModel> build_model(const ScenarioConfig& c) {
  if (c.is_plate) {
    return std::make_shared<const ParameterizedModel>(build_plate_model(c.plate));
  }
  return std::make_shared<const ParameterizedModel>(build_beam_model(c.beam));
}

GridShape config_shape(const ScenarioConfig& c) {
  if (c.is_plate) return GridShape{c.plate.groups_y, c.plate.groups_x};
  return GridShape{1, c.beam.group_count};
}

Eigen::VectorXd true_alpha(const ScenarioConfig& c) {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(c.group_count());
  for (const auto& [g, di] : c.damage) a[g] = di;
  return a;
}

void config_bounds(const ScenarioConfig& c, Eigen::VectorXd& lower, Eigen::VectorXd& upper) {
  const int n = c.group_count();
  const double e0 = c.elasticity();
  auto alpha_bounds = [e0](const std::array<double, 2>& gpa) {
    const double e_lo = 1e9 * gpa[0], e_hi = 1e9 * gpa[1];
    if (!(e_lo > 0) || !(e_hi >= e_lo)) {
      throw std::invalid_argument("bounds: GPa ranges must be positive and ordered");
    }
    return std::pair<double, double>{(e0 - e_hi) / e0, (e0 - e_lo) / e0};
  };

  const auto [dlo, dhi] = alpha_bounds(c.default_gpa);
  lower = Eigen::VectorXd::Constant(n, dlo);
  upper = Eigen::VectorXd::Constant(n, dhi);

  std::vector<int> edges = c.edge_groups;
  if (c.edge_auto) {
    edges.clear();
    if (c.is_plate) {
      const int ngy = c.plate.groups_y, ngx = c.plate.groups_x;
      for (int iy = 0; iy < ngy; ++iy) {
        edges.push_back(iy);                    // first stripe, jx = 0
        edges.push_back((ngx - 1) * ngy + iy);  // last stripe
      }
    } else {
      edges.push_back(0);
      edges.push_back(c.beam.group_count - 1);
    }
  }
  const auto [elo, ehi] = alpha_bounds(c.edge_gpa);
  for (int g : edges) {
    lower[g] = elo;
    upper[g] = ehi;
  }
}

namespace {

bool is_bending_mode(const ParameterizedModel& model, const Eigen::VectorXd& phi) {
  const int cols = model.w_grid[0], rows = model.w_grid[1];
  if (rows <= 1) return true;
  double sym = 0.0, asym = 0.0;
  for (int cidx = 0; cidx < cols; ++cidx) {
    for (int r = 0; r < rows; ++r) {
      const double v = phi[model.w_dofs[cidx * rows + r]];
      const double vf = phi[model.w_dofs[cidx * rows + (rows - 1 - r)]];
      sym += (v + vf) * (v + vf);
      asym += (v - vf) * (v - vf);
    }
  }
  return asym < sym;
}

}  // namespace

SynthResult synth_measurements(const ParameterizedModel& model, const Eigen::VectorXd& alpha,
                               const NoiseSpec& noise, std::uint64_t seed, int n_measured,
                               int n_scan, double rigid_threshold) {
  if (n_measured < 1) throw std::invalid_argument("synth_measurements: need >= 1 mode");
  const Eigen::MatrixXd k = assemble_stiffness(model, alpha);
  const ModeSet modes = solve_modes_up_to(k, model.m, n_scan, rigid_threshold);

  std::vector<int> chosen;
  for (int q = 0; q < modes.count() && static_cast<int>(chosen.size()) < n_measured; ++q) {
    if (is_bending_mode(model, modes.shapes.col(q))) chosen.push_back(q);
  }
  if (static_cast<int>(chosen.size()) < n_measured) {
    throw std::runtime_error("synth_measurements: fewer bending modes than requested");
  }

  const int ds = static_cast<int>(model.sensor_dofs.size());
  Eigen::VectorXd lambda_mea(n_measured);
  Eigen::VectorXd freq_std_hz(n_measured);
  Eigen::MatrixXd shapes(ds, n_measured);

  GaussianSampler g(seed);
  for (int j = 0; j < n_measured; ++j) {
    const int q = chosen[j];
    const double factor = 1.0 + noise.frequency_rel_std * g.normal();
    lambda_mea[j] = modes.eigenvalues[q] * factor * factor;
    freq_std_hz[j] =
        noise.frequency_rel_std * std::sqrt(std::max(lambda_mea[j], 0.0)) / (2.0 * M_PI);

    Eigen::VectorXd phi_s(ds);
    for (int s = 0; s < ds; ++s) phi_s[s] = modes.shapes(model.sensor_dofs[s], q);
    const double amp = phi_s.cwiseAbs().maxCoeff();
    for (int s = 0; s < ds; ++s) phi_s[s] += noise.shape_abs_std * amp * g.normal();
    shapes.col(j) = phi_s;
  }

  SynthResult out;
  out.measured = MeasuredModal::with_default_weights(std::move(lambda_mea), std::move(shapes));
  out.freq_std_hz = std::move(freq_std_hz);
  out.source_modes = std::move(chosen);
  return out;
}

UpdateProblem make_problem(const ScenarioConfig& c,
                           std::shared_ptr<const ParameterizedModel> model,
                           MeasuredModal measured) {
  UpdateProblem p;
  p.model = std::move(model);
  p.measured = std::move(measured);
  p.shape = config_shape(c);
  p.regularizer.kind = c.reg_kind;
  p.regularizer.mu = c.mu;
  if (c.reg_kind == RegKind::interpolation) {
    if (c.coarse_indices.size() < 2) {
      throw std::invalid_argument("interpolation regularizer needs coarse_indices");
    }
    p.regularizer.coarse.indices = c.coarse_indices;
    for (int idx : c.coarse_indices) {
      p.regularizer.coarse.coords.push_back(p.model->group_centers[idx]);
    }
  }
  p.lambda_reg = c.lambda_lcurve ? 0.0 : c.lambda;
  config_bounds(c, p.lower, p.upper);
  p.alpha0 = Eigen::VectorXd::Zero(c.group_count());
  p.objective.n_modes = c.retained_modes;
  p.objective.n_series = c.series_modes;
  p.objective.mac_threshold = c.mac_threshold;
  return p;
}

namespace {

double knee_lambda(const LCurve& curve) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  int usable = 0;
  for (const auto& p : curve.points) {
    if (!p.ok || !(p.data_fit > 0) || !(p.penalty > 0)) continue;
    ++usable;
    xmin = std::min(xmin, std::log10(p.data_fit));
    xmax = std::max(xmax, std::log10(p.data_fit));
    ymin = std::min(ymin, std::log10(p.penalty));
    ymax = std::max(ymax, std::log10(p.penalty));
  }
  if (usable == 0) throw std::runtime_error("l-curve sweep produced no usable points");
  const double xr = std::max(xmax - xmin, 1e-12), yr = std::max(ymax - ymin, 1e-12);
  double best = 1e300, best_lambda = curve.points.front().lambda_reg;
  for (const auto& p : curve.points) {
    if (!p.ok || !(p.data_fit > 0) || !(p.penalty > 0)) continue;
    const double xh = (std::log10(p.data_fit) - xmin) / xr;
    const double yh = (std::log10(p.penalty) - ymin) / yr;
    const double d2 = xh * xh + yh * yh;
    if (d2 < best) {
      best = d2;
      best_lambda = p.lambda_reg;
    }
  }
  return best_lambda;
}

Eigen::VectorXd paired_frequencies(const ResidualEval& re, int n_measured) {
  Eigen::VectorXd f = Eigen::VectorXd::Constant(n_measured,
                                                std::numeric_limits<double>::quiet_NaN());
  for (const auto& p : re.pairing.pairs) {
    f[p.measured] = std::sqrt(std::max(re.modes.eigenvalues[p.analytical], 0.0)) / (2.0 * M_PI);
  }
  return f;
}

}  // namespace

RunReport run_scenario(const ScenarioConfig& c, const MeasuredModal* external_measured) {
  const auto t0 = std::chrono::steady_clock::now();

  RunReport rep;
  rep.config_echo = config_to_json(c);

  const auto model = build_model(c);
  rep.group_centers = model->group_centers;
  rep.true_damage = true_alpha(c);

  MeasuredModal measured;
  if (external_measured) {
    measured = *external_measured;
    rep.warnings.push_back("measurements supplied externally; noise/seed settings unused");
  } else {
    measured = synth_measurements(*model, rep.true_damage, c.noise, c.seed,
                                  c.measured_modes, c.retained_modes).measured;
  }

  UpdateProblem problem = make_problem(c, model, measured);

  const bool penalty_regime = c.reg_kind == RegKind::l2tv || c.reg_kind == RegKind::huber ||
                              c.reg_kind == RegKind::pseudo_huber;
  if (penalty_regime && c.lambda_lcurve) {
    const std::vector<double> grid =
        default_lambda_grid(c.lcurve_min, c.lcurve_max, c.lcurve_points_per_decade);
    rep.lcurve = lcurve_sweep(problem, grid, c.solver);
    const CornerResult corner = lcurve_corner(rep.lcurve);
    rep.lcurve_curvature = corner.curvature;
    if (corner.found) {
      problem.lambda_reg = corner.lambda_star;
      rep.lambda_rule = "lcurve_corner";
    } else {
      problem.lambda_reg = knee_lambda(rep.lcurve);
      rep.lambda_rule = "lcurve_knee";
      rep.warnings.push_back("no L-curve corner above the curvature threshold; "
                             "picked the normalized knee point");
    }
  } else if (penalty_regime) {
    problem.lambda_reg = c.lambda;
    rep.lambda_rule = "fixed";
  } else {
    problem.lambda_reg = 0.0;
    rep.lambda_rule = "none";
    if (c.lambda_lcurve) {
      rep.warnings.push_back("lambda=\"lcurve\" ignored for this regularizer");
    }
  }
  rep.lambda_used = problem.lambda_reg;

  const UpdateResult res = minimize(problem, c.solver);
  rep.recovered_damage = res.alpha_star;
  rep.alpha_coarse = res.alpha_coarse;
  rep.data_fit = res.data_fit;
  rep.penalty = res.penalty;
  rep.status = res.status;
  rep.reason = res.reason;
  rep.iterations = res.iterations;
  rep.objective_history = res.objective_history;

  rep.measured_hz = measured.eigenvalues.cwiseMax(0.0).cwiseSqrt() / (2.0 * M_PI);
  try {
    const ResidualEval re0 = objective_eval(*model, Eigen::VectorXd::Zero(rep.true_damage.size()),
                                            measured, problem.objective);
    rep.initial_hz = paired_frequencies(re0, measured.mode_count());
    const ResidualEval res_eval =
        objective_eval(*model, res.alpha_star, measured, problem.objective);
    rep.updated_hz = paired_frequencies(res_eval, measured.mode_count());
    for (const auto& w : res_eval.warnings) rep.warnings.push_back(w);
  } catch (const std::exception& e) {
    rep.warnings.push_back(std::string("frequency table unavailable: ") + e.what());
  }

  rep.elapsed_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - t0).count();
  return rep;
}

json RunReport::to_json() const {
  auto vec = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  json j;
  j["config"] = config_echo;
  j["true_damage"] = vec(true_damage);
  j["recovered_damage"] = vec(recovered_damage);
  if (alpha_coarse.size() > 0) j["alpha_coarse"] = vec(alpha_coarse);
  json centers = json::array();
  for (const auto& cpt : group_centers) centers.push_back({cpt.x(), cpt.y()});
  j["group_centers"] = centers;
  j["data_fit"] = data_fit;
  j["penalty"] = penalty;
  j["lambda_used"] = lambda_used;
  j["lambda_rule"] = lambda_rule;
  if (!lcurve.points.empty()) {
    json pts = json::array();
    for (const auto& p : lcurve.points) {
      pts.push_back({{"lambda", p.lambda_reg},
                     {"data_fit", p.data_fit},
                     {"penalty", p.penalty},
                     {"ok", p.ok}});
    }
    j["lcurve"] = pts;
    j["lcurve_max_curvature"] = lcurve_curvature;
  }
  j["frequencies_hz"] = {{"measured", vec(measured_hz)},
                         {"initial", vec(initial_hz)},
                         {"updated", vec(updated_hz)}};
  j["convergence"] = {{"status", to_string(status)},
                      {"reason", reason},
                      {"iterations", iterations},
                      {"objective_history", objective_history}};
  j["warnings"] = warnings;
  j["elapsed_ms"] = elapsed_ms;
  return j;
}

// --- derivative checks -------------------------------------------------------

namespace {

struct CheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  double threshold = 0.0;
  bool pass = false;
  int skipped = 0;
};

json to_json(const std::vector<CheckEntry>& checks, const Eigen::VectorXd& alpha) {
  json arr = json::array();
  bool all = true;
  for (const auto& e : checks) {
    arr.push_back({{"name", e.name},
                   {"max_rel_error", e.max_rel_error},
                   {"threshold", e.threshold},
                   {"pass", e.pass},
                   {"skipped", e.skipped}});
    all = all && e.pass;
  }
  json out;
  out["alpha"] = std::vector<double>(alpha.data(), alpha.data() + alpha.size());
  out["checks"] = arr;
  out["all_pass"] = all;
  return out;
}

double rel_scale(double ref) { return std::max(1.0, ref); }

// Cells of the row-normalized grid adjacent to parameter k, as flat indices.
std::vector<int> touching_cells(int k, int d1, int d2) {
  if (d2 == 1) std::swap(d1, d2);  // same normalization as the penalties
  const int i = k % d1, jj = k / d1;
  std::vector<int> cells{jj * d1 + i};
  if (i > 0) cells.push_back(jj * d1 + i - 1);
  if (jj > 0) cells.push_back((jj - 1) * d1 + i);
  return cells;
}

Eigen::VectorXd cell_norms(const Eigen::VectorXd& alpha, GridShape shape) {
  int d1 = shape.d1, d2 = shape.d2;
  if (d2 == 1) std::swap(d1, d2);
  const Eigen::MatrixXd a = Eigen::Map<const Eigen::MatrixXd>(alpha.data(), d1, d2);
  Eigen::VectorXd x(d1 * d2);
  for (int j = 0; j < d2; ++j) {
    for (int i = 0; i < d1; ++i) {
      const double dh = (i < d1 - 1) ? a(i + 1, j) - a(i, j) : 0.0;
      const double dv = (j < d2 - 1) ? a(i, j + 1) - a(i, j) : 0.0;
      x[j * d1 + i] = std::hypot(dh, dv);
    }
  }
  return x;
}

}  // namespace

json check_derivatives(const ScenarioConfig& c) {
  const auto model = build_model(c);
  const GridShape shape = config_shape(c);
  const int n = model->parameter_count();

  Eigen::VectorXd lower, upper;
  config_bounds(c, lower, upper);

  GaussianSampler g(c.seed);
  Eigen::VectorXd alpha(n);
  for (int i = 0; i < n; ++i) {
    const double lo = std::max(lower[i], -0.1);
    const double hi = std::min(upper[i], 0.5);
    alpha[i] = lo + g.uniform() * (hi - lo);
  }

  const SynthResult synth = synth_measurements(*model, true_alpha(c), c.noise, c.seed,
                                               c.measured_modes, c.retained_modes);
  ObjectiveConfig oc;
  oc.n_modes = c.retained_modes;
  oc.n_series = c.series_modes;
  oc.mac_threshold = c.mac_threshold;

  std::vector<CheckEntry> checks;

  // Residual Jacobian vs central FD of the stacked residual.
  {
    CheckEntry e{"residual_jacobian", 0.0, 1e-5, false, 0};
    const ResidualEval re = objective_eval(*model, alpha, synth.measured, oc);
    const double h = 1e-5;
    Eigen::MatrixXd jfd(re.r.size(), n);
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd ap = alpha, am = alpha;
      ap[i] += h;
      am[i] -= h;
      jfd.col(i) = (objective_eval(*model, ap, synth.measured, oc).r -
                    objective_eval(*model, am, synth.measured, oc).r) / (2.0 * h);
    }
    e.max_rel_error = (re.jac - jfd).cwiseAbs().maxCoeff() /
                      rel_scale(jfd.cwiseAbs().maxCoeff());
    e.pass = e.max_rel_error <= e.threshold;
    checks.push_back(e);
  }

  // Penalty gradients / Hessians vs FD; Huber entries near branch kinks skip.
  const Eigen::VectorXd norms = cell_norms(alpha, shape);
  auto kinked = [&](int k) {
    for (int cell : touching_cells(k, shape.d1, shape.d2)) {
      if (std::abs(norms[cell] - c.mu) <= 1e-3) return true;
    }
    return false;
  };

  for (const bool huber : {true, false}) {
    auto pen = [&](const Eigen::VectorXd& a) {
      return huber ? huber_tv(a, shape, c.mu) : pseudo_huber_tv(a, shape, c.mu);
    };
    const PenaltyEval pe = pen(alpha);
    const std::string base = huber ? "huber" : "pseudo_huber";

    CheckEntry eg{base + "_gradient", 0.0, 1e-6, false, 0};
    {
      const double h = 1e-7;
      Eigen::VectorXd gfd(n);
      for (int i = 0; i < n; ++i) {
        Eigen::VectorXd ap = alpha, am = alpha;
        ap[i] += h;
        am[i] -= h;
        gfd[i] = (pen(ap).value - pen(am).value) / (2.0 * h);
      }
      const double scale = rel_scale(gfd.cwiseAbs().maxCoeff());
      for (int i = 0; i < n; ++i) {
        if (huber && kinked(i)) {
          ++eg.skipped;
          continue;
        }
        eg.max_rel_error = std::max(eg.max_rel_error, std::abs(pe.grad[i] - gfd[i]) / scale);
      }
      eg.pass = eg.max_rel_error <= eg.threshold;
      checks.push_back(eg);
    }

    CheckEntry eh{base + "_hessian", 0.0, 1e-5, false, 0};
    {
      const double h = 1e-6;
      const Eigen::MatrixXd dense = pe.hess.dense();
      Eigen::MatrixXd hfd(n, n);
      for (int i = 0; i < n; ++i) {
        Eigen::VectorXd ap = alpha, am = alpha;
        ap[i] += h;
        am[i] -= h;
        hfd.col(i) = (pen(ap).grad - pen(am).grad) / (2.0 * h);
      }
      hfd = 0.5 * (hfd + hfd.transpose()).eval();
      const double scale = rel_scale(hfd.cwiseAbs().maxCoeff());
      for (int i = 0; i < n; ++i) {
        for (int jcol = 0; jcol < n; ++jcol) {
          if (huber && (kinked(i) || kinked(jcol))) {
            ++eh.skipped;
            continue;
          }
          eh.max_rel_error =
              std::max(eh.max_rel_error, std::abs(dense(i, jcol) - hfd(i, jcol)) / scale);
        }
      }
      eh.pass = eh.max_rel_error <= eh.threshold;
      checks.push_back(eh);
    }
  }

  // Projected Jacobian of the composed map beta -> r(L beta).
  {
    CheckEntry e{"projected_jacobian", 0.0, 1e-6, false, 0};
    std::vector<int> coarse_idx = c.coarse_indices;
    if (coarse_idx.empty()) {
      // default: every other grid line in each direction
      const int d1 = shape.d1, d2 = shape.d2;
      for (int j = 0; j < d2; j += 2) {
        for (int i = 0; i < d1; i += 2) coarse_idx.push_back(j * d1 + i);
      }
      std::sort(coarse_idx.begin(), coarse_idx.end());
    }
    CoarseGrid cg;
    cg.indices = coarse_idx;
    for (int idx : coarse_idx) cg.coords.push_back(model->group_centers[idx]);

    Eigen::MatrixXd l;
    if (shape.d1 == 1 || shape.d2 == 1) {
      std::vector<double> fx;
      for (const auto& ctr : model->group_centers) fx.push_back(ctr.x());
      l = tent_basis(cg, fx);
    } else {
      l = shape_matrix(cg, triangulate(cg), model->group_centers);
    }

    Eigen::VectorXd beta(cg.count());
    for (int k = 0; k < cg.count(); ++k) beta[k] = alpha[cg.indices[k]];

    const ResidualEval re = objective_eval(*model, l * beta, synth.measured, oc);
    const Eigen::MatrixXd jc = project_jacobian(re.jac, l);

    const double h = 1e-5;
    Eigen::MatrixXd jfd(re.r.size(), cg.count());
    for (int i = 0; i < cg.count(); ++i) {
      Eigen::VectorXd bp = beta, bm = beta;
      bp[i] += h;
      bm[i] -= h;
      jfd.col(i) = (objective_eval(*model, l * bp, synth.measured, oc).r -
                    objective_eval(*model, l * bm, synth.measured, oc).r) / (2.0 * h);
    }
    e.max_rel_error = (jc - jfd).cwiseAbs().maxCoeff() /
                      rel_scale(jfd.cwiseAbs().maxCoeff());
    e.pass = e.max_rel_error <= e.threshold;
    checks.push_back(e);
  }

  // Objective gradient at the exact noise-free optimum.
  {
    CheckEntry e{"stationary_at_truth", 0.0, 1e-10, false, 0};
    const NoiseSpec quiet{0.0, 0.0};
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
    const SynthResult clean =
        synth_measurements(*model, zero, quiet, c.seed, c.measured_modes, c.retained_modes);
    const ResidualEval re = objective_eval(*model, zero, clean.measured, oc);
    e.max_rel_error = re.grad.cwiseAbs().maxCoeff();
    e.pass = e.max_rel_error <= e.threshold;
    checks.push_back(e);
  }

  return to_json(checks, alpha);
}

// --- measured-modal files ----------------------------------------------------

json measured_to_json(const MeasuredModal& m, const Eigen::VectorXd& freq_std_hz,
                      const std::vector<Eigen::Vector2d>& sensors) {
  json j;
  std::vector<double> f;
  for (int k = 0; k < m.mode_count(); ++k) {
    f.push_back(std::sqrt(std::max(m.eigenvalues[k], 0.0)) / (2.0 * M_PI));
  }
  j["frequencies_hz"] = f;
  j["frequency_std_hz"] = std::vector<double>(freq_std_hz.data(),
                                              freq_std_hz.data() + freq_std_hz.size());
  json rows = json::array();
  for (int s = 0; s < m.sensor_count(); ++s) {
    json row = json::array();
    for (int k = 0; k < m.mode_count(); ++k) row.push_back(m.shapes(s, k));
    rows.push_back(row);
  }
  j["shapes"] = rows;
  json sj = json::array();
  for (const auto& p : sensors) sj.push_back({p.x(), p.y()});
  j["sensors"] = sj;
  return j;
}

MeasuredModal measured_from_json(const json& j) {
  const auto f = j.at("frequencies_hz").get<std::vector<double>>();
  const auto rows = j.at("shapes");
  const int mf = static_cast<int>(f.size());
  const int ds = static_cast<int>(rows.size());
  Eigen::VectorXd lambda(mf);
  for (int k = 0; k < mf; ++k) {
    const double w = 2.0 * M_PI * f[k];
    lambda[k] = w * w;
  }
  Eigen::MatrixXd shapes(ds, mf);
  for (int s = 0; s < ds; ++s) {
    const auto row = rows.at(s).get<std::vector<double>>();
    if (static_cast<int>(row.size()) != mf) {
      throw std::invalid_argument("measured file: shape row length != mode count");
    }
    for (int k = 0; k < mf; ++k) shapes(s, k) = row[k];
  }
  return MeasuredModal::with_default_weights(std::move(lambda), std::move(shapes));
}

std::string measured_to_csv(const MeasuredModal& m, const Eigen::VectorXd& freq_std_hz,
                            const std::vector<Eigen::Vector2d>& sensors) {
  std::ostringstream os;
  os << "# frequencies_hz:";
  for (int k = 0; k < m.mode_count(); ++k) {
    os << (k ? "," : " ") << fmt_g17(std::sqrt(std::max(m.eigenvalues[k], 0.0)) / (2.0 * M_PI));
  }
  os << "\n# frequency_std_hz:";
  for (int k = 0; k < freq_std_hz.size(); ++k) {
    os << (k ? "," : " ") << fmt_g17(freq_std_hz[k]);
  }
  os << "\nx,y";
  for (int k = 0; k < m.mode_count(); ++k) os << ",mode_" << (k + 1);
  os << "\n";
  for (int s = 0; s < m.sensor_count(); ++s) {
    const Eigen::Vector2d p = (s < static_cast<int>(sensors.size()))
                                  ? sensors[s]
                                  : Eigen::Vector2d::Zero().eval();
    os << fmt_g17(p.x()) << "," << fmt_g17(p.y());
    for (int k = 0; k < m.mode_count(); ++k) os << "," << fmt_g17(m.shapes(s, k));
    os << "\n";
  }
  return os.str();
}

namespace {

std::vector<double> split_doubles(const std::string& line) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  return out;
}

}  // namespace

MeasuredModal measured_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::vector<double> freqs;
  std::vector<std::vector<double>> shape_rows;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.rfind("# frequencies_hz:", 0) == 0) {
      freqs = split_doubles(line.substr(std::string("# frequencies_hz:").size()));
      continue;
    }
    if (line.rfind("#", 0) == 0) continue;
    if (!header_seen) {  // column header row
      header_seen = true;
      continue;
    }
    const auto vals = split_doubles(line);
    if (vals.size() < 3) continue;
    shape_rows.emplace_back(vals.begin() + 2, vals.end());
  }
  if (freqs.empty() || shape_rows.empty()) {
    throw std::invalid_argument("measured CSV: missing frequencies or shape rows");
  }
  const int mf = static_cast<int>(freqs.size());
  const int ds = static_cast<int>(shape_rows.size());
  Eigen::VectorXd lambda(mf);
  for (int k = 0; k < mf; ++k) {
    const double w = 2.0 * M_PI * freqs[k];
    lambda[k] = w * w;
  }
  Eigen::MatrixXd shapes(ds, mf);
  for (int s = 0; s < ds; ++s) {
    if (static_cast<int>(shape_rows[s].size()) != mf) {
      throw std::invalid_argument("measured CSV: shape row length != mode count");
    }
    for (int k = 0; k < mf; ++k) shapes(s, k) = shape_rows[s][k];
  }
  return MeasuredModal::with_default_weights(std::move(lambda), std::move(shapes));
}

std::string plot_csv(const RunReport& report) {
  std::ostringstream os;
  os << "group,x_center,damage_index\n";
  for (int gi = 0; gi < report.recovered_damage.size(); ++gi) {
    const double x = (gi < static_cast<int>(report.group_centers.size()))
                         ? report.group_centers[gi].x()
                         : 0.0;
    os << (gi + 1) << "," << fmt_g17(x) << "," << fmt_g17(report.recovered_damage[gi]) << "\n";
  }
  return os.str();
}

std::string lcurve_csv(const LCurve& curve) {
  std::ostringstream os;
  os << "lambda,data_fit,penalty,ok\n";
  for (const auto& p : curve.points) {
    os << fmt_g17(p.lambda_reg) << "," << fmt_g17(p.data_fit) << "," << fmt_g17(p.penalty)
       << "," << (p.ok ? 1 : 0) << "\n";
  }
  return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace femu
