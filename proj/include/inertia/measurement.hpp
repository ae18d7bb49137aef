#pragma once

#include <Eigen/Core>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "inertia/core_dynamics.hpp"

namespace inertia {

/// Guard against division by vanishing denominators in the tier formulas.
inline constexpr double kDenomGuard = 1e-12;

/// Everything measured about one optimizer step, expressed in parameter
/// space. env_gradient is the environmental feedback direction: aligned
/// with delta_theta means the environment confirms the update.
struct StepObservation {
  Eigen::VectorXd delta_theta;
  Eigen::VectorXd env_gradient;
  double loss = 0.0;
  double abs_path_norm = 0.0;   // ||sum |dtheta||| over the disorder window
  double net_path_norm = 0.0;   // ||sum dtheta|| over the same window
  double state_noise_proxy = 0.0;  // loss coefficient of variation
};

struct VelocityEstimate {
  int tier = 2;
  RuleDensity value;
  double dR = 0.0;
  double dS_R = 0.0;
  double dS_ext = 0.0;
  double L_R = 1.0;
  double L_S = 1.0;
};

/// Warmup-derived constants: the symbolic granularity ||D|| converting
/// loss-scaled external gain into parameter-update units, and the baseline
/// velocity the brake treats as neutral.
struct CalibrationConstants {
  double granularity = 1.0;
  RuleDensity v_base{0.5};
  int window_steps = 0;
};

struct CalibrationConfig {
  int window_steps = 0;  // 0 means use every provided observation
  double v_base = 0.5;
};

double rule_displacement(const StepObservation& obs);
double external_gain(const StepObservation& obs);
double disorder_rule(const StepObservation& obs);

VelocityEstimate velocity_tier1(double loss, const CalibrationConstants& cal);
VelocityEstimate velocity_tier2(double dR, double dS_R, double dS_ext,
                                double loss, const CalibrationConstants& cal);
VelocityEstimate velocity_tier3(double dR, double dS_R, double dS_ext,
                                double loss, double L_R, double L_S,
                                const CalibrationConstants& cal);

/// ||D|| = mean(dS_ext / loss) / mean(dR) over the warmup window.
/// Throws std::runtime_error when either mean is degenerate.
CalibrationConstants calibrate(std::span<const StepObservation> warmup,
                               const CalibrationConfig& config = {});

struct MeterConfig {
  int disorder_window = 10;
  double ema_alpha = 0.3;       // velocity and magnitude smoothing
  double direction_alpha = 0.2; // angular rate of the direction blends
  int tier = 3;
};

/// Owns the sliding windows and smoothing state behind per-step velocity
/// measurement. One meter per training loop; the pure tier formulas above
/// stay reentrant.
class VelocityMeter {
 public:
  explicit VelocityMeter(MeterConfig config = {});

  /// Fold one step into the windows and return the full observation.
  StepObservation observe(const Eigen::VectorXd& delta_theta,
                          const Eigen::VectorXd& env_gradient, double loss);

  /// Velocity for an observation under the given constants. Also advances
  /// the EMA, so call once per step.
  VelocityEstimate estimate(const StepObservation& obs,
                            const CalibrationConstants& cal);

  double smoothed_velocity() const { return ema_velocity_; }
  bool has_smoothed_velocity() const { return ema_initialized_; }

  /// Low-pass update / feedback vectors for the coherence gate: a unit
  /// direction blended at a fixed angular rate (so braked steps still steer
  /// it) scaled by the smoothed magnitude.
  Eigen::VectorXd smoothed_update() const {
    return update_dir_ * update_mag_;
  }
  Eigen::VectorXd smoothed_feedback() const {
    return feedback_dir_ * feedback_mag_;
  }

  /// Seed the velocity EMA (typically with v_base right after calibration).
  void reset_smoothing(double v0);

  double rule_disorder() const;
  double state_disorder() const;

 private:
  MeterConfig config_;
  std::deque<Eigen::VectorXd> window_;
  std::deque<double> loss_window_;
  Eigen::VectorXd update_dir_;
  Eigen::VectorXd feedback_dir_;
  double update_mag_ = 0.0;
  double feedback_mag_ = 0.0;
  double ema_velocity_ = 0.0;
  bool ema_initialized_ = false;
};

}  // namespace inertia
