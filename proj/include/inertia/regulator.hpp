#pragma once

#include <Eigen/Core>
#include <deque>
#include <optional>

#include "inertia/core_dynamics.hpp"
#include "inertia/measurement.hpp"

namespace inertia {

/// Reference captured during a high-efficiency learning phase: unit update
/// and feedback directions plus their norm ratio. Later steps are gated by
/// their alignment with this anchor.
struct AnchorState {
  Eigen::VectorXd update_dir;    // unit internal displacement direction
  Eigen::VectorXd feedback_dir;  // unit external gain direction
  double efficiency_ratio = 1.0;  // ||feedback|| / ||update|| at capture
  long captured_at_step = 0;
  RuleDensity capture_velocity;
};

struct CoherenceParts {
  double c_sr = 1.0;
  double c_sext = 1.0;
  double c_phi = 1.0;
};

struct CoherenceScore {
  double value = 1.0;
  CoherenceParts parts;
};

/// One learning-rate decision. eta_final = eta_eff * coherence and
/// eta_composed = eta_sched^(1-w) * eta_wrapper^w hold by construction.
struct LrDecision {
  double eta_sched = 0.0;
  double eta_wrapper = 0.0;
  double eta_eff = 0.0;
  double coherence = 1.0;
  double eta_final = 0.0;
  double eta_composed = 0.0;
  bool braked = false;
};

enum class RegulatorMode { Off, Standalone, Nested };

struct RegulatorConfig {
  double base_lr = 0.05;
  double coupling_weight = 0.2;   // w in the geometric coupling
  double freeze_decay = 0.99;     // per-step decay of the inertia envelope
  double coherence_floor = 0.05;  // minimal plasticity under dissonance
  double anchor_band_lo = 0.4;    // capture window around equipartition
  double anchor_band_hi = 0.6;
  int loss_window = 10;           // improvement test window for capture
  long anchor_ttl_epochs = 3;     // gate only against a recent anchor; <=0 = forever
  bool enable_anchor = true;      // false: velocity brake only, no gating
  RegulatorMode mode = RegulatorMode::Standalone;
};

/// eta_base * sqrt(1 - v^2) / sqrt(1 - v_base^2). Identity at v == v_base,
/// vanishes as v approaches the horizon.
double relativistic_brake(double eta_base, RuleDensity v, RuleDensity v_base);

/// Phase coherence against a stored anchor: product of the two directional
/// cosines and the efficiency-ratio consistency term, clamped to
/// [floor, 1]. Zero-length current vectors score the floor.
CoherenceScore coherence_score(const Eigen::VectorXd& update_vec,
                               const Eigen::VectorXd& feedback_vec,
                               const AnchorState& anchor,
                               double floor = 0.05);

/// Weighted geometric mean of the schedule path and the wrapper path.
double compose_lr(double eta_sched, double eta_wrapper, double w);

/// Directional evidence for one step. The coherence gate and anchor capture
/// run on the low-pass vectors; per-batch directions are too isotropic in
/// high dimension to gate on directly. A structural collision still lands
/// within a step because its outsized gradient swings the smoothed vector
/// immediately.
struct StepSignals {
  const Eigen::VectorXd& raw_update;
  const Eigen::VectorXd& raw_feedback;
  const Eigen::VectorXd& smoothed_update;
  const Eigen::VectorXd& smoothed_feedback;
};

/// Single-owner mutable regulator: relativistic brake plus coherence gate,
/// anchored capture policy, and the decaying inertia envelope that releases
/// a frozen system back toward plasticity.
class Regulator {
 public:
  Regulator(RegulatorConfig config, CalibrationConstants cal);

  /// Consume one step's measurement and produce the decision that governs
  /// the next applied update.
  LrDecision step(const VelocityEstimate& estimate, double v_smoothed,
                  const StepSignals& signals, double loss, long step_index,
                  long epoch, double eta_sched);

  /// Decay the inertia envelope by one tick. step() already applies this;
  /// exposed for driving the release behaviour directly.
  void tick_unfreeze();

  double inertia_envelope() const { return inertia_envelope_; }
  const std::optional<AnchorState>& anchor() const { return anchor_; }
  const RegulatorConfig& config() const { return config_; }
  const CalibrationConstants& calibration() const { return cal_; }

 private:
  bool should_capture(double v_smoothed, long epoch) const;
  bool anchor_active(long epoch) const;

  RegulatorConfig config_;
  CalibrationConstants cal_;
  std::optional<AnchorState> anchor_;
  double inertia_envelope_ = 0.0;
  std::deque<double> loss_history_;
  long last_capture_epoch_ = -1;
};

}  // namespace inertia
