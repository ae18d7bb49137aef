#include "inertia/measurement.hpp"

#include <cmath>
#include <stdexcept>

namespace inertia {

double rule_displacement(const StepObservation& obs) {
  return obs.delta_theta.norm();
}

double external_gain(const StepObservation& obs) {
  const double dnorm = obs.delta_theta.norm();
  if (dnorm < kDenomGuard) return 0.0;  // no displacement, no ripple
  const double proj = obs.env_gradient.dot(obs.delta_theta) / dnorm;
  return std::max(0.0, proj);
}

double disorder_rule(const StepObservation& obs) {
  return obs.abs_path_norm / std::max(obs.net_path_norm, kDenomGuard);
}

VelocityEstimate velocity_tier1(double loss, const CalibrationConstants& cal) {
  if (!(loss > 0.0)) throw std::invalid_argument("velocity_tier1: loss <= 0");
  const double v = 1.0 / (1.0 + 1.0 / (loss * cal.granularity));
  VelocityEstimate est;
  est.tier = 1;
  est.value = RuleDensity::saturating(v);
  return est;
}

namespace {

VelocityEstimate ripple_velocity(double dR, double dS_R, double dS_ext,
                                 double loss, double L_R, double L_S,
                                 const CalibrationConstants& cal) {
  if (!(loss > 0.0)) throw std::invalid_argument("velocity tier: loss <= 0");
  if (L_R < 1.0 || L_S < 1.0) {
    throw std::invalid_argument("velocity tier: disorder coefficients < 1");
  }
  VelocityEstimate est;
  est.dR = dR;
  est.dS_R = dS_R;
  est.dS_ext = dS_ext;
  est.L_R = L_R;
  est.L_S = L_S;
  const double denom = dS_R * L_R + dS_ext / (loss * L_S * cal.granularity);
  if (denom < kDenomGuard) {
    est.value = RuleDensity::saturating(1.0);  // total stall
    return est;
  }
  est.value = RuleDensity::saturating(dR * L_R / denom);
  return est;
}

}  // namespace

VelocityEstimate velocity_tier2(double dR, double dS_R, double dS_ext,
                                double loss, const CalibrationConstants& cal) {
  VelocityEstimate est = ripple_velocity(dR, dS_R, dS_ext, loss, 1.0, 1.0, cal);
  est.tier = 2;
  return est;
}

VelocityEstimate velocity_tier3(double dR, double dS_R, double dS_ext,
                                double loss, double L_R, double L_S,
                                const CalibrationConstants& cal) {
  VelocityEstimate est =
      ripple_velocity(dR, dS_R, dS_ext, loss, L_R, L_S, cal);
  est.tier = 3;
  return est;
}

CalibrationConstants calibrate(std::span<const StepObservation> warmup,
                               const CalibrationConfig& config) {
  int window = config.window_steps > 0
                   ? std::min<int>(config.window_steps,
                                   static_cast<int>(warmup.size()))
                   : static_cast<int>(warmup.size());
  if (window < 1) {
    throw std::runtime_error("calibrate: empty warmup window");
  }
  double gain_sum = 0.0;
  double dr_sum = 0.0;
  for (int i = 0; i < window; ++i) {
    const StepObservation& obs = warmup[warmup.size() - window + i];
    if (!(obs.loss > 0.0)) {
      throw std::runtime_error("calibrate: nonpositive loss in warmup");
    }
    gain_sum += external_gain(obs) / obs.loss;
    dr_sum += rule_displacement(obs);
  }
  const double mean_gain = gain_sum / window;
  const double mean_dr = dr_sum / window;
  if (mean_dr < kDenomGuard || mean_gain < kDenomGuard) {
    throw std::runtime_error(
        "calibrate: degenerate warmup (vanishing displacement or gain)");
  }
  CalibrationConstants cal;
  cal.granularity = mean_gain / mean_dr;
  cal.v_base = RuleDensity(config.v_base);
  cal.window_steps = window;
  return cal;
}

VelocityMeter::VelocityMeter(MeterConfig config) : config_(config) {
  if (config_.disorder_window < 1) {
    throw std::invalid_argument("VelocityMeter: disorder_window < 1");
  }
  if (!(config_.ema_alpha > 0.0) || config_.ema_alpha > 1.0) {
    throw std::invalid_argument("VelocityMeter: ema_alpha outside (0, 1]");
  }
  if (config_.tier < 1 || config_.tier > 3) {
    throw std::invalid_argument("VelocityMeter: tier must be 1, 2 or 3");
  }
}

StepObservation VelocityMeter::observe(const Eigen::VectorXd& delta_theta,
                                       const Eigen::VectorXd& env_gradient,
                                       double loss) {
  window_.push_back(delta_theta);
  if (static_cast<int>(window_.size()) > config_.disorder_window) {
    window_.pop_front();
  }
  loss_window_.push_back(loss);
  if (static_cast<int>(loss_window_.size()) > config_.disorder_window) {
    loss_window_.pop_front();
  }

  // Directions blend at an angular rate scaled by how large the step is
  // against the running magnitude: routine steps rotate gently, an outsized
  // collision snaps the direction within a step, and the magnitude EMA
  // renormalizes quickly so a braked phase cannot latch the direction.
  auto blend = [this](Eigen::VectorXd& dir, double& mag,
                      const Eigen::VectorXd& v) {
    const double n = v.norm();
    const double prev_mag = mag;
    mag = config_.ema_alpha * n + (1.0 - config_.ema_alpha) * mag;
    if (n < kDenomGuard) return;
    if (dir.size() == 0) {
      dir = v / n;
      return;
    }
    double rate = config_.direction_alpha;
    if (prev_mag > kDenomGuard) {
      rate = std::min(1.0, rate * (n / prev_mag));
    }
    dir = rate * (v / n) + (1.0 - rate) * dir;
    const double dn = dir.norm();
    if (dn > kDenomGuard) dir /= dn;
  };
  if (update_dir_.size() == 0) {
    update_mag_ = delta_theta.norm();
    feedback_mag_ = env_gradient.norm();
    const double un = update_mag_, fn = feedback_mag_;
    if (un > kDenomGuard) update_dir_ = delta_theta / un;
    if (fn > kDenomGuard) feedback_dir_ = env_gradient / fn;
    if (update_dir_.size() == 0) update_dir_ = Eigen::VectorXd::Zero(delta_theta.size());
    if (feedback_dir_.size() == 0) feedback_dir_ = Eigen::VectorXd::Zero(env_gradient.size());
  } else {
    blend(update_dir_, update_mag_, delta_theta);
    blend(feedback_dir_, feedback_mag_, env_gradient);
  }

  Eigen::VectorXd abs_sum = Eigen::VectorXd::Zero(delta_theta.size());
  Eigen::VectorXd net_sum = Eigen::VectorXd::Zero(delta_theta.size());
  for (const auto& dt : window_) {
    abs_sum += dt.cwiseAbs();
    net_sum += dt;
  }

  StepObservation obs;
  obs.delta_theta = delta_theta;
  obs.env_gradient = env_gradient;
  obs.loss = loss;
  obs.abs_path_norm = abs_sum.norm();
  obs.net_path_norm = net_sum.norm();
  obs.state_noise_proxy = state_disorder() - 1.0;
  return obs;
}

double VelocityMeter::rule_disorder() const {
  if (window_.empty()) return 1.0;
  Eigen::VectorXd abs_sum = Eigen::VectorXd::Zero(window_.front().size());
  Eigen::VectorXd net_sum = abs_sum;
  for (const auto& dt : window_) {
    abs_sum += dt.cwiseAbs();
    net_sum += dt;
  }
  return std::max(1.0, abs_sum.norm() / std::max(net_sum.norm(), kDenomGuard));
}

double VelocityMeter::state_disorder() const {
  // L_S = 1 + coefficient of variation of the windowed losses.
  if (loss_window_.size() < 2) return 1.0;
  double mean = 0.0;
  for (double l : loss_window_) mean += l;
  mean /= static_cast<double>(loss_window_.size());
  if (mean < kDenomGuard) return 1.0;
  double var = 0.0;
  for (double l : loss_window_) var += (l - mean) * (l - mean);
  var /= static_cast<double>(loss_window_.size());
  return 1.0 + std::sqrt(var) / mean;
}

VelocityEstimate VelocityMeter::estimate(const StepObservation& obs,
                                         const CalibrationConstants& cal) {
  VelocityEstimate est;
  switch (config_.tier) {
    case 1:
      est = velocity_tier1(obs.loss, cal);
      break;
    case 2:
      est = velocity_tier2(rule_displacement(obs), rule_displacement(obs),
                           external_gain(obs), obs.loss, cal);
      break;
    default:
      est = velocity_tier3(rule_displacement(obs), rule_displacement(obs),
                           external_gain(obs), obs.loss,
                           std::max(1.0, disorder_rule(obs)), state_disorder(),
                           cal);
      break;
  }
  const double v = est.value.value();
  if (!ema_initialized_) {
    ema_velocity_ = v;
    ema_initialized_ = true;
  } else {
    ema_velocity_ =
        config_.ema_alpha * v + (1.0 - config_.ema_alpha) * ema_velocity_;
  }
  return est;
}

void VelocityMeter::reset_smoothing(double v0) {
  ema_velocity_ = v0;
  ema_initialized_ = true;
}

}  // namespace inertia
