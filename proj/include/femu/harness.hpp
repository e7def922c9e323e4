#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "femu/fe_model.hpp"
#include "femu/optimizer.hpp"
#include "femu/residuals.hpp"

namespace femu {

using json = nlohmann::ordered_json;

/// Portable seeded Gaussian source (Box-Muller on top of mt19937_64);
/// identical seeds give identical streams on every platform.
class GaussianSampler {
 public:
  explicit GaussianSampler(std::uint64_t seed) : rng_(seed) {}

  double uniform() {  // [0, 1)
    return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 rng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct NoiseSpec {
  double frequency_rel_std = 5e-4;  // relative, multiplicative on frequency
  double shape_abs_std = 0.01;      // fraction of each mode's max sensor amplitude
};

/// Everything needed to run one synthetic updating experiment.
struct ScenarioConfig {
  bool is_plate = false;
  BeamSpec beam;
  PlateSpec plate;

  std::map<int, double> damage;  // 0-based group -> damage index
  NoiseSpec noise;
  int measured_modes = 3;

  RegKind reg_kind = RegKind::none;
  double mu = 0.05;
  bool lambda_lcurve = false;
  double lambda = 0.0;
  std::vector<int> coarse_indices;  // 0-based

  std::array<double, 2> default_gpa{1.0, 40.0};
  std::array<double, 2> edge_gpa{35.9, 37.2};
  bool edge_auto = true;
  std::vector<int> edge_groups;  // 0-based, used when !edge_auto

  double lcurve_min = 1e-6;
  double lcurve_max = 1e-1;
  int lcurve_points_per_decade = 8;

  MinimizeOptions solver;
  int retained_modes = 30;
  int series_modes = 30;
  double mac_threshold = 0.7;

  std::uint64_t seed = 1;

  double elasticity() const { return is_plate ? plate.elasticity : beam.elasticity; }
  int group_count() const {
    return is_plate ? plate.groups_x * plate.groups_y : beam.group_count;
  }
};

ScenarioConfig parse_config(const json& j);
ScenarioConfig load_config(const std::string& path);
json config_to_json(const ScenarioConfig& c);

std::shared_ptr<const ParameterizedModel> build_model(const ScenarioConfig& c);
GridShape config_shape(const ScenarioConfig& c);
Eigen::VectorXd true_alpha(const ScenarioConfig& c);

/// GPa box constraints mapped to alpha bounds via DI = (E0 - E)/E0.
void config_bounds(const ScenarioConfig& c, Eigen::VectorXd& lower, Eigen::VectorXd& upper);

struct SynthResult {
  MeasuredModal measured;
  Eigen::VectorXd freq_std_hz;
  std::vector<int> source_modes;  // retained-mode indices that were "measured"
};

/// Solve the damaged model, keep the first bending modes, perturb frequencies
/// multiplicatively and sensor shape entries additively with seeded Gaussians.
SynthResult synth_measurements(const ParameterizedModel& model, const Eigen::VectorXd& alpha,
                               const NoiseSpec& noise, std::uint64_t seed, int n_measured,
                               int n_scan = 30, double rigid_threshold = kRigidThreshold);

UpdateProblem make_problem(const ScenarioConfig& c,
                           std::shared_ptr<const ParameterizedModel> model,
                           MeasuredModal measured);

struct RunReport {
  json config_echo;
  Eigen::VectorXd true_damage;
  Eigen::VectorXd recovered_damage;
  Eigen::VectorXd alpha_coarse;
  std::vector<Eigen::Vector2d> group_centers;
  double data_fit = 0.0;
  double penalty = 0.0;
  double lambda_used = 0.0;
  std::string lambda_rule = "fixed";
  LCurve lcurve;
  double lcurve_curvature = 0.0;
  Eigen::VectorXd measured_hz, initial_hz, updated_hz;
  ConvergenceStatus status = ConvergenceStatus::failed;
  std::string reason;
  int iterations = 0;
  std::vector<double> objective_history;
  std::vector<std::string> warnings;
  double elapsed_ms = 0.0;

  json to_json() const;
};

/// Build the model, synthesize (or accept) measurements, select lambda,
/// minimize, and assemble the report. external_measured overrides synthesis.
RunReport run_scenario(const ScenarioConfig& c,
                       const MeasuredModal* external_measured = nullptr);

/// Finite-difference validation report for the residual Jacobian, the TV
/// penalty derivatives and the interpolation-projected Jacobian.
json check_derivatives(const ScenarioConfig& c);

// --- measured-modal files ----------------------------------------------------

json measured_to_json(const MeasuredModal& m, const Eigen::VectorXd& freq_std_hz,
                      const std::vector<Eigen::Vector2d>& sensors);
MeasuredModal measured_from_json(const json& j);
std::string measured_to_csv(const MeasuredModal& m, const Eigen::VectorXd& freq_std_hz,
                            const std::vector<Eigen::Vector2d>& sensors);
MeasuredModal measured_from_csv(const std::string& text);

/// Plot data: one line per group (1-based index, x center, damage index).
std::string plot_csv(const RunReport& report);

std::string lcurve_csv(const LCurve& curve);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace femu
