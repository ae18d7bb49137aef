#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "inertia/measurement.hpp"
#include "inertia/mlp.hpp"
#include "inertia/regulator.hpp"
#include "inertia/schedule.hpp"
#include "inertia/synthetic.hpp"

namespace inertia {

enum class Phase { Warmup, Clean, Noise, TaskA, TaskB };
const char* to_string(Phase phase);

/// One optimizer step's telemetry row. The eta_* columns are the decision
/// produced from this step's measurement (it governs the next applied
/// update); loss and the velocity columns are this step's measurements.
struct TelemetryRecord {
  long step = 0;
  long epoch = 0;
  double loss = 0.0;
  double dR = 0.0;
  double dS_R = 0.0;
  double dS_ext = 0.0;
  double L_R = 1.0;
  double L_S = 1.0;
  double v_raw = 0.0;
  double v_smoothed = 0.0;
  double eta_sched = 0.0;
  double eta_wrapper = 0.0;
  double eta_final = 0.0;
  double eta_composed = 0.0;
  double coherence = 1.0;
  bool braked = false;
  Phase phase_tag = Phase::Warmup;
};

/// Column order of the telemetry CSV; matches TelemetryRecord declaration.
extern const char* const kTelemetryHeader;

enum class EnvProbeMode { Observation, Regulation };

struct TrainConfig {
  MlpConfig model;
  TaskConfig task;
  ScheduleConfig schedule;
  RegulatorMode mode = RegulatorMode::Off;
  int tier = 3;
  EnvProbeMode probe = EnvProbeMode::Regulation;
  int epochs = 40;
  int batch_size = 32;
  int warmup_epochs = 1;
  int disorder_window = 10;
  double ema_alpha = 0.3;
  double coupling_weight = 0.2;
  double freeze_decay = 0.99;
  double coherence_floor = 0.05;
  double direction_alpha = 0.2;
  bool anchor_gating = true;
  long anchor_ttl_epochs = 3;
  std::uint64_t run_seed = 0;  // shuffling / label-noise streams
  std::optional<ScheduleConfig> standalone_floor;  // optional terminal bound
  std::optional<CalibrationConstants> fixed_calibration;
};

/// Label source for an epoch: the dataset's clean labels, its task labels
/// (noisy when the task carries noise), or fresh uniform noise.
enum class LabelSource { Clean, Task, Uniform };

/// Per-epoch phase control: which dataset to draw from, how to tag it, and
/// which labels to train against.
struct EpochPlan {
  Phase phase = Phase::Clean;
  const Dataset* data = nullptr;
  LabelSource labels = LabelSource::Task;
};

using EpochPlanner = std::function<EpochPlan(long epoch)>;

struct EpochStats {
  Phase phase = Phase::Clean;
  double mean_loss = 0.0;
  double mean_v_raw = 0.0;
  double mean_eta_final = 0.0;
};

struct TrainResult {
  std::vector<TelemetryRecord> telemetry;
  std::vector<EpochStats> epochs;
  bool diverged = false;
  bool calibrated = false;
  CalibrationConstants calibration;
  double final_train_loss = 0.0;
};

/// Desk-scale SGD loop instrumented with the velocity meter and, when the
/// mode asks for it, the inertia regulator. The first warmup epoch runs on
/// the schedule alone and feeds the granularity calibration. Deterministic
/// given the config seeds. Returns early with diverged=true when the loss
/// stops being finite.
class Trainer {
 public:
  Trainer(const TrainConfig& config, const SyntheticTask& task);

  /// Run with the default planner: warmup, then Clean or Noise depending on
  /// the task's noise fraction (noise applied at dataset level).
  TrainResult run();

  /// Run with an explicit per-epoch plan (shock and task-switch protocols).
  TrainResult run(const EpochPlanner& planner);

  const Mlp& model() const { return model_; }

  /// Evaluate mean loss of the current model on a dataset.
  double evaluate(const Dataset& data) const;

  /// Invoked after every completed epoch (metrics snapshots mid-run).
  void set_epoch_callback(std::function<void(long, const Mlp&)> cb) {
    hooks_.on_epoch_end = std::move(cb);
  }

  /// Early-stop predicate on (epoch, epoch mean loss).
  void set_stop_condition(std::function<bool(long, double)> cond) {
    hooks_.stop_after_epoch = std::move(cond);
  }

 private:
  struct Hooks {
    std::function<void(long, const Mlp&)> on_epoch_end;
    std::function<bool(long, double)> stop_after_epoch;
  };

  TrainConfig config_;
  const SyntheticTask& task_;
  Mlp model_;
  Hooks hooks_;
};

/// ---- Experiment protocols -------------------------------------------------

struct NoiseSweepConfig {
  TrainConfig base;                  // schedule/model/task template, mode Off
  std::vector<double> noise_levels;  // label-noise fractions, post-warmup
  double threshold_factor = 0.6;     // converged when loss <= factor*ln(K)
  int epoch_cap = 200;               // post-warmup epochs before censoring
};

struct SweepRun {
  double noise = 0.0;
  std::uint64_t seed = 0;
  int epochs_to_threshold = 0;  // post-warmup epochs consumed
  double mean_velocity = 0.0;   // mean v_raw over post-warmup steps
  bool censored = false;
  bool diverged = false;
};

std::vector<SweepRun> run_noise_sweep(const NoiseSweepConfig& config,
                                      std::uint64_t seed);

struct ShockConfig {
  TrainConfig base;
  int shock_start = 20;  // first shocked epoch (post-warmup index space)
};

struct ShockReport {
  double brake_ratio = 1.0;     // mean eta_final clean / noise (shock phase)
  double clean_mean_loss = 0.0;
  double noise_mean_loss = 0.0;
  double clean_mean_velocity = 0.0;
  double noise_mean_velocity = 0.0;
  double dual_track_separation = 0.0;  // noise - clean mean loss
  bool velocity_spikes_on_noise = false;
  TrainResult result;
};

ShockReport run_noise_shock(const ShockConfig& config);

struct TaskSwitchConfig {
  TrainConfig base;        // task field ignored; tasks built from subsets
  std::vector<int> classes_a;
  std::vector<int> classes_b;
  int switch_epoch = 20;   // first epoch on the new task
};

struct TaskSwitchReport {
  double pre_transition_loss_a = 0.0;
  double old_task_final_loss = 0.0;
  double retention_deficit = 0.0;
  double full_task_final_loss = 0.0;
  double braking_ratio = 1.0;  // eta_final before / first step after switch
  TrainResult result;
};

TaskSwitchReport run_task_switch(const TaskSwitchConfig& config);

}  // namespace inertia
