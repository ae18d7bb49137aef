#include "inertia/regulator.hpp"

#include <cmath>
#include <stdexcept>

namespace inertia {

double relativistic_brake(double eta_base, RuleDensity v, RuleDensity v_base) {
  if (!(eta_base > 0.0)) {
    throw std::invalid_argument("relativistic_brake: eta_base must be > 0");
  }
  const double vv = v.value();
  const double vb = v_base.value();
  return eta_base * std::sqrt((1.0 - vv) * (1.0 + vv)) /
         std::sqrt((1.0 - vb) * (1.0 + vb));
}

CoherenceScore coherence_score(const Eigen::VectorXd& update_vec,
                               const Eigen::VectorXd& feedback_vec,
                               const AnchorState& anchor, double floor) {
  CoherenceScore score;
  const double un = update_vec.norm();
  const double fn = feedback_vec.norm();
  if (un < kDenomGuard || fn < kDenomGuard) {
    score.value = floor;  // no directional evidence
    score.parts = {0.0, 0.0, 0.0};
    return score;
  }
  score.parts.c_sr = update_vec.dot(anchor.update_dir) / un;
  score.parts.c_sext = feedback_vec.dot(anchor.feedback_dir) / fn;
  const double r_curr = fn / un;
  const double k_ratio = std::min(r_curr, anchor.efficiency_ratio) /
                         std::max(r_curr, anchor.efficiency_ratio);
  score.parts.c_phi = std::sin(M_PI_2 * k_ratio);
  const double raw = score.parts.c_sr * score.parts.c_sext * score.parts.c_phi;
  score.value = std::min(1.0, std::max(floor, raw));
  return score;
}

double compose_lr(double eta_sched, double eta_wrapper, double w) {
  if (!(eta_sched > 0.0)) {
    throw std::invalid_argument("compose_lr: eta_sched must be > 0");
  }
  if (eta_wrapper < 0.0 || w < 0.0 || w > 1.0) {
    throw std::invalid_argument("compose_lr: invalid wrapper lr or weight");
  }
  if (w == 0.0) return eta_sched;
  if (eta_wrapper == 0.0) return 0.0;  // full freeze propagates
  if (w == 1.0) return eta_wrapper;
  return std::pow(eta_sched, 1.0 - w) * std::pow(eta_wrapper, w);
}

Regulator::Regulator(RegulatorConfig config, CalibrationConstants cal)
    : config_(config), cal_(cal) {
  if (!(config_.base_lr > 0.0)) {
    throw std::invalid_argument("Regulator: base_lr must be > 0");
  }
  if (config_.coupling_weight < 0.0 || config_.coupling_weight > 1.0) {
    throw std::invalid_argument("Regulator: coupling_weight outside [0, 1]");
  }
  if (!(config_.freeze_decay > 0.0) || config_.freeze_decay > 1.0) {
    throw std::invalid_argument("Regulator: freeze_decay outside (0, 1]");
  }
  inertia_envelope_ = cal_.v_base.value();
}

void Regulator::tick_unfreeze() {
  inertia_envelope_ *= config_.freeze_decay;
}

bool Regulator::anchor_active(long epoch) const {
  if (!anchor_.has_value()) return false;
  if (config_.anchor_ttl_epochs <= 0) return true;
  return epoch - last_capture_epoch_ <= config_.anchor_ttl_epochs;
}

bool Regulator::should_capture(double v_smoothed, long epoch) const {
  if (!config_.enable_anchor) return false;
  if (v_smoothed < config_.anchor_band_lo ||
      v_smoothed > config_.anchor_band_hi) {
    return false;
  }
  if (epoch <= last_capture_epoch_) return false;  // at most once per epoch
  const int w = config_.loss_window;
  if (static_cast<int>(loss_history_.size()) < 2 * w) return false;
  double recent = 0.0, earlier = 0.0;
  for (int i = 0; i < w; ++i) {
    recent += loss_history_[loss_history_.size() - 1 - i];
    earlier += loss_history_[loss_history_.size() - 1 - w - i];
  }
  return recent < earlier;  // loss improved over the last window
}

LrDecision Regulator::step(const VelocityEstimate& estimate, double v_smoothed,
                           const StepSignals& signals, double loss,
                           long step_index, long epoch, double eta_sched) {
  loss_history_.push_back(loss);
  if (static_cast<int>(loss_history_.size()) > 2 * config_.loss_window) {
    loss_history_.pop_front();
  }

  // Decaying inertia envelope: raised by genuine measurements, decayed every
  // tick so a stalled system cannot stay frozen forever. Degenerate stall
  // estimates (no displacement) never pump it.
  tick_unfreeze();
  if (estimate.dR > kDenomGuard || estimate.tier == 1) {
    inertia_envelope_ = std::max(inertia_envelope_, v_smoothed);
  }
  const double v_brake = std::min(v_smoothed, inertia_envelope_);

  LrDecision decision;
  decision.eta_sched = eta_sched;
  decision.eta_eff = relativistic_brake(
      config_.base_lr, RuleDensity::saturating(v_brake), cal_.v_base);

  CoherenceScore score;
  if (anchor_active(epoch)) {
    score = coherence_score(signals.smoothed_update, signals.smoothed_feedback,
                            *anchor_, config_.coherence_floor);
  }
  decision.coherence = score.value;
  decision.eta_final = decision.eta_eff * decision.coherence;
  decision.eta_wrapper = decision.eta_final;
  decision.eta_composed =
      config_.mode == RegulatorMode::Nested
          ? compose_lr(eta_sched, decision.eta_wrapper, config_.coupling_weight)
          : decision.eta_final;
  decision.braked = decision.eta_final < 0.5 * eta_sched;

  if (should_capture(v_smoothed, epoch)) {
    const double un = signals.smoothed_update.norm();
    const double fn = signals.smoothed_feedback.norm();
    if (un > kDenomGuard && fn > kDenomGuard) {
      AnchorState a;
      a.update_dir = signals.smoothed_update / un;
      a.feedback_dir = signals.smoothed_feedback / fn;
      a.efficiency_ratio = fn / un;
      a.captured_at_step = step_index;
      a.capture_velocity = RuleDensity::saturating(v_smoothed);
      anchor_ = std::move(a);
      last_capture_epoch_ = epoch;
    }
  }
  return decision;
}

}  // namespace inertia
