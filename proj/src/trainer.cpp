#include "inertia/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <limits>
#include <stdexcept>

#include "inertia/micro_sim.hpp"  // mix_seed

namespace inertia {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

const char* const kTelemetryHeader =
    "step,epoch,loss,dR,dS_R,dS_ext,L_R,L_S,v_raw,v_smoothed,eta_sched,"
    "eta_wrapper,eta_final,eta_composed,coherence,braked,phase_tag";

const char* to_string(Phase phase) {
  switch (phase) {
    case Phase::Warmup: return "warmup";
    case Phase::Clean: return "clean";
    case Phase::Noise: return "noise";
    case Phase::TaskA: return "task_a";
    case Phase::TaskB: return "task_b";
  }
  return "?";
}

namespace {

LrDecision passthrough(double eta_sched) {
  LrDecision d;
  d.eta_sched = eta_sched;
  d.eta_wrapper = eta_sched;
  d.eta_eff = eta_sched;
  d.coherence = 1.0;
  d.eta_final = eta_sched;
  d.eta_composed = eta_sched;
  d.braked = false;
  return d;
}

}  // namespace

Trainer::Trainer(const TrainConfig& config, const SyntheticTask& task)
    : config_(config), task_(task), model_(config.model) {
  if (config_.epochs < 1 || config_.batch_size < 1) {
    throw std::invalid_argument("Trainer: bad epochs or batch size");
  }
  if (config_.warmup_epochs < 1 && !config_.fixed_calibration) {
    throw std::invalid_argument(
        "Trainer: calibration needs at least one warmup epoch");
  }
}

double Trainer::evaluate(const Dataset& data) const {
  return model_.loss(data.X, data.y);
}

TrainResult Trainer::run() {
  const bool noisy = config_.task.noise_fraction > 0.0;
  const Dataset* train = &task_.train();
  EpochPlanner planner = [this, noisy, train](long epoch) {
    EpochPlan plan;
    plan.data = train;
    if (epoch < config_.warmup_epochs && !config_.fixed_calibration) {
      plan.phase = Phase::Warmup;
      plan.labels = LabelSource::Clean;
    } else {
      plan.phase = noisy ? Phase::Noise : Phase::Clean;
      plan.labels = LabelSource::Task;
    }
    return plan;
  };
  return run(planner);
}

TrainResult Trainer::run(const EpochPlanner& planner) {
  TrainResult result;
  VelocityMeter meter({.disorder_window = config_.disorder_window,
                       .ema_alpha = config_.ema_alpha,
                       .direction_alpha = config_.direction_alpha,
                       .tier = config_.tier});
  std::vector<StepObservation> warmup_obs;
  std::optional<CalibrationConstants> cal = config_.fixed_calibration;
  std::optional<Regulator> regulator;
  LrDecision pending = passthrough(schedule_lr(config_.schedule, 0));

  RegulatorConfig reg_cfg;
  reg_cfg.base_lr = config_.schedule.eta0;
  reg_cfg.coupling_weight = config_.coupling_weight;
  reg_cfg.freeze_decay = config_.freeze_decay;
  reg_cfg.coherence_floor = config_.coherence_floor;
  reg_cfg.loss_window = config_.disorder_window;
  reg_cfg.enable_anchor = config_.anchor_gating;
  reg_cfg.anchor_ttl_epochs = config_.anchor_ttl_epochs;
  reg_cfg.mode = config_.mode;
  if (cal && config_.mode != RegulatorMode::Off) {
    regulator.emplace(reg_cfg, *cal);
    meter.reset_smoothing(cal->v_base.value());
  }

  std::mt19937_64 shuffle_rng(mix_seed(config_.run_seed, 0xBA7C4));
  std::mt19937_64 relabel_rng(mix_seed(config_.run_seed, 0x17AB));
  std::mt19937_64 probe_rng(mix_seed(config_.run_seed, 0x0B5E));
  std::uniform_int_distribution<int> any_label(0, config_.task.n_classes - 1);

  VectorXd grad(model_.param_count());
  VectorXd probe_grad(model_.param_count());
  long step_idx = 0;

  for (long epoch = 0; epoch < config_.epochs; ++epoch) {
    EpochPlan plan = planner(epoch);
    if (plan.data == nullptr) {
      throw std::invalid_argument("Trainer: planner returned no dataset");
    }
    const Dataset& data = *plan.data;
    const long n = data.X.cols();

    VectorXi labels;
    switch (plan.labels) {
      case LabelSource::Clean:
        labels = data.y_clean.size() == n ? data.y_clean : data.y;
        break;
      case LabelSource::Task:
        labels = data.y;
        break;
      case LabelSource::Uniform:
        labels.resize(n);
        for (long i = 0; i < n; ++i) labels[i] = any_label(relabel_rng);
        break;
    }

    std::vector<long> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    const long batch = std::min<long>(config_.batch_size, n);
    const long n_batches = std::max<long>(1, n / batch);
    const bool in_warmup = plan.phase == Phase::Warmup;

    double loss_acc = 0.0, v_acc = 0.0, eta_acc = 0.0;
    long rows = 0;

    for (long bi = 0; bi < n_batches; ++bi) {
      MatrixXd Xb(data.X.rows(), batch);
      VectorXi yb(batch);
      for (long j = 0; j < batch; ++j) {
        const long idx = order[bi * batch + j];
        Xb.col(j) = data.X.col(idx);
        yb[j] = labels[idx];
      }

      const double eta_sched = schedule_lr(config_.schedule, epoch);
      double applied = eta_sched;
      if (!in_warmup && config_.mode != RegulatorMode::Off && regulator) {
        applied = config_.mode == RegulatorMode::Nested ? pending.eta_composed
                                                        : pending.eta_final;
        if (config_.mode == RegulatorMode::Standalone &&
            config_.standalone_floor) {
          applied =
              std::max(applied, schedule_lr(*config_.standalone_floor, epoch));
        }
      }

      const double loss = model_.loss_and_gradient(Xb, yb, grad);
      if (!std::isfinite(loss)) {
        result.diverged = true;
        break;
      }
      VectorXd delta = -applied * grad;
      model_.params() += delta;

      // Environmental feedback direction: negative gradient after the
      // update, on the same batch (regulation) or a held-out batch
      // (observation).
      if (config_.probe == EnvProbeMode::Regulation) {
        model_.loss_and_gradient(Xb, yb, probe_grad);
      } else {
        const Dataset& ev = task_.eval();
        const long m = std::min<long>(batch, ev.X.cols());
        MatrixXd Xp(ev.X.rows(), m);
        VectorXi yp(m);
        std::uniform_int_distribution<long> pick(0, ev.X.cols() - 1);
        for (long j = 0; j < m; ++j) {
          const long idx = pick(probe_rng);
          Xp.col(j) = ev.X.col(idx);
          yp[j] = ev.y[idx];
        }
        model_.loss_and_gradient(Xp, yp, probe_grad);
      }
      StepObservation obs = meter.observe(delta, -probe_grad, loss);

      TelemetryRecord row;
      row.step = step_idx;
      row.epoch = epoch;
      row.loss = loss;
      row.phase_tag = plan.phase;

      if (cal) {
        VelocityEstimate est = meter.estimate(obs, *cal);
        row.dR = est.dR;
        row.dS_R = est.dS_R;
        row.dS_ext = est.dS_ext;
        row.L_R = est.L_R;
        row.L_S = est.L_S;
        row.v_raw = est.value.value();
        row.v_smoothed = meter.smoothed_velocity();
        if (regulator) {
          StepSignals signals{delta, obs.env_gradient, meter.smoothed_update(),
                              meter.smoothed_feedback()};
          pending = regulator->step(est, meter.smoothed_velocity(), signals,
                                    loss, step_idx, epoch, eta_sched);
          row.eta_sched = pending.eta_sched;
          row.eta_wrapper = pending.eta_wrapper;
          row.eta_final = pending.eta_final;
          row.eta_composed = pending.eta_composed;
          row.coherence = pending.coherence;
          row.braked = pending.braked;
        } else {
          const LrDecision d = passthrough(eta_sched);
          row.eta_sched = d.eta_sched;
          row.eta_wrapper = d.eta_wrapper;
          row.eta_final = d.eta_final;
          row.eta_composed = d.eta_composed;
          row.coherence = d.coherence;
          row.braked = d.braked;
        }
      } else {
        warmup_obs.push_back(obs);
        const LrDecision d = passthrough(eta_sched);
        row.eta_sched = d.eta_sched;
        row.eta_wrapper = d.eta_wrapper;
        row.eta_final = d.eta_final;
        row.eta_composed = d.eta_composed;
        row.coherence = d.coherence;
        row.braked = d.braked;
      }

      result.telemetry.push_back(row);
      loss_acc += loss;
      v_acc += row.v_raw;
      eta_acc += row.eta_final;
      ++rows;
      ++step_idx;
    }

    if (result.diverged) break;

    EpochStats stats;
    stats.phase = plan.phase;
    stats.mean_loss = loss_acc / std::max<long>(1, rows);
    stats.mean_v_raw = v_acc / std::max<long>(1, rows);
    stats.mean_eta_final = eta_acc / std::max<long>(1, rows);
    result.epochs.push_back(stats);
    result.final_train_loss = stats.mean_loss;

    // Calibrate at the end of the warmup window and arm the regulator.
    if (!cal && epoch == config_.warmup_epochs - 1) {
      cal = calibrate(warmup_obs);
      meter.reset_smoothing(cal->v_base.value());
      if (config_.mode != RegulatorMode::Off) {
        regulator.emplace(reg_cfg, *cal);
        LrDecision neutral;
        neutral.eta_sched = schedule_lr(config_.schedule, epoch + 1);
        neutral.eta_eff = reg_cfg.base_lr;
        neutral.coherence = 1.0;
        neutral.eta_final = neutral.eta_eff;
        neutral.eta_wrapper = neutral.eta_final;
        neutral.eta_composed =
            config_.mode == RegulatorMode::Nested
                ? compose_lr(neutral.eta_sched, neutral.eta_wrapper,
                             reg_cfg.coupling_weight)
                : neutral.eta_final;
        pending = neutral;
      }
    }

    if (hooks_.on_epoch_end) hooks_.on_epoch_end(epoch, model_);
    if (hooks_.stop_after_epoch &&
        hooks_.stop_after_epoch(epoch, result.epochs.back().mean_loss)) {
      break;
    }
  }

  if (cal) {
    result.calibrated = true;
    result.calibration = *cal;
  }
  return result;
}

std::vector<SweepRun> run_noise_sweep(const NoiseSweepConfig& config,
                                      std::uint64_t seed) {
  std::vector<SweepRun> runs;
  const double threshold =
      config.threshold_factor * std::log(config.base.task.n_classes);
  for (std::size_t li = 0; li < config.noise_levels.size(); ++li) {
    TrainConfig cfg = config.base;
    cfg.task.noise_fraction = config.noise_levels[li];
    cfg.task.seed = mix_seed(seed, 1000);
    cfg.model.seed = mix_seed(seed, 2000);
    cfg.run_seed = mix_seed(seed, 3000);
    cfg.epochs = cfg.warmup_epochs + config.epoch_cap;

    SyntheticTask task(cfg.task);
    Trainer trainer(cfg, task);

    long stop_epoch = -1;
    trainer.set_stop_condition(
        [&](long epoch, double mean_loss) {
          if (epoch >= cfg.warmup_epochs && mean_loss <= threshold) {
            stop_epoch = epoch;
            return true;
          }
          return false;
        });
    TrainResult res = trainer.run();

    SweepRun run;
    run.noise = config.noise_levels[li];
    run.seed = cfg.run_seed;
    run.diverged = res.diverged;
    run.censored = stop_epoch < 0;
    run.epochs_to_threshold =
        run.censored ? config.epoch_cap
                     : static_cast<int>(stop_epoch - cfg.warmup_epochs + 1);
    double v_sum = 0.0;
    long v_count = 0;
    for (const auto& row : res.telemetry) {
      if (row.phase_tag == Phase::Warmup) continue;
      v_sum += row.v_raw;
      ++v_count;
    }
    run.mean_velocity = v_count > 0 ? v_sum / v_count : 0.0;
    runs.push_back(run);
  }
  return runs;
}

ShockReport run_noise_shock(const ShockConfig& config) {
  TrainConfig cfg = config.base;
  cfg.task.noise_fraction = 0.0;
  SyntheticTask task(cfg.task);
  Trainer trainer(cfg, task);

  const Dataset* train = &task.train();
  const int warmup = cfg.warmup_epochs;
  const int start = config.shock_start;
  EpochPlanner planner = [train, warmup, start](long epoch) {
    EpochPlan plan;
    plan.data = train;
    if (epoch < warmup) {
      plan.phase = Phase::Warmup;
      plan.labels = LabelSource::Clean;
    } else if (epoch < start) {
      plan.phase = Phase::Clean;
      plan.labels = LabelSource::Task;
    } else if ((epoch - start) % 2 == 0) {
      plan.phase = Phase::Noise;
      plan.labels = LabelSource::Uniform;
    } else {
      plan.phase = Phase::Clean;
      plan.labels = LabelSource::Task;
    }
    return plan;
  };

  ShockReport report;
  report.result = trainer.run(planner);

  double eta_clean = 0.0, eta_noise = 0.0, loss_clean = 0.0, loss_noise = 0.0,
         v_clean = 0.0, v_noise = 0.0;
  long n_clean = 0, n_noise = 0;
  for (long e = start; e < static_cast<long>(report.result.epochs.size());
       ++e) {
    const EpochStats& s = report.result.epochs[e];
    if (s.phase == Phase::Noise) {
      eta_noise += s.mean_eta_final;
      loss_noise += s.mean_loss;
      v_noise += s.mean_v_raw;
      ++n_noise;
    } else if (s.phase == Phase::Clean) {
      eta_clean += s.mean_eta_final;
      loss_clean += s.mean_loss;
      v_clean += s.mean_v_raw;
      ++n_clean;
    }
  }
  if (n_clean > 0 && n_noise > 0) {
    report.brake_ratio =
        (eta_clean / n_clean) / std::max(eta_noise / n_noise, 1e-300);
    report.clean_mean_loss = loss_clean / n_clean;
    report.noise_mean_loss = loss_noise / n_noise;
    report.clean_mean_velocity = v_clean / n_clean;
    report.noise_mean_velocity = v_noise / n_noise;
    report.dual_track_separation =
        report.noise_mean_loss - report.clean_mean_loss;
  }

  // Every noise epoch must ride above the clean epoch right before it.
  report.velocity_spikes_on_noise = n_noise > 0;
  for (long e = start; e < static_cast<long>(report.result.epochs.size());
       ++e) {
    if (report.result.epochs[e].phase != Phase::Noise || e == 0) continue;
    if (report.result.epochs[e].mean_v_raw <=
        report.result.epochs[e - 1].mean_v_raw) {
      report.velocity_spikes_on_noise = false;
    }
  }
  return report;
}

TaskSwitchReport run_task_switch(const TaskSwitchConfig& config) {
  if (config.classes_a.empty() || config.classes_b.empty()) {
    throw std::invalid_argument("run_task_switch: empty class subsets");
  }
  for (int a : config.classes_a) {
    for (int b : config.classes_b) {
      if (a == b) {
        throw std::invalid_argument(
            "run_task_switch: class subsets must be disjoint");
      }
    }
  }
  TrainConfig cfg = config.base;
  cfg.task.noise_fraction = 0.0;

  TaskConfig task_a_cfg = cfg.task;
  task_a_cfg.class_subset = config.classes_a;
  TaskConfig task_b_cfg = cfg.task;
  task_b_cfg.class_subset = config.classes_b;
  task_b_cfg.seed = mix_seed(cfg.task.seed, 0xB);
  SyntheticTask task_a(task_a_cfg);
  SyntheticTask task_b(task_b_cfg);

  cfg.task = task_a_cfg;
  Trainer trainer(cfg, task_a);

  const Dataset* da = &task_a.train();
  const Dataset* db = &task_b.train();
  const int warmup = cfg.warmup_epochs;
  const int sw = config.switch_epoch;
  if (sw <= warmup) {
    throw std::invalid_argument(
        "run_task_switch: switch must come after warmup");
  }
  EpochPlanner planner = [da, db, warmup, sw](long epoch) {
    EpochPlan plan;
    if (epoch < warmup) {
      plan.phase = Phase::Warmup;
      plan.data = da;
      plan.labels = LabelSource::Clean;
    } else if (epoch < sw) {
      plan.phase = Phase::TaskA;
      plan.data = da;
      plan.labels = LabelSource::Task;
    } else {
      plan.phase = Phase::TaskB;
      plan.data = db;
      plan.labels = LabelSource::Task;
    }
    return plan;
  };

  TaskSwitchReport report;
  trainer.set_epoch_callback([&](long epoch, const Mlp& model) {
    if (epoch == sw - 1) {
      report.pre_transition_loss_a = model.loss(task_a.eval().X,
                                                task_a.eval().y);
    }
  });
  report.result = trainer.run(planner);

  report.old_task_final_loss = trainer.evaluate(task_a.eval());
  report.retention_deficit =
      report.old_task_final_loss - report.pre_transition_loss_a;
  Dataset full = concat(task_a.eval(), task_b.eval());
  report.full_task_final_loss = trainer.evaluate(full);

  double eta_before = 0.0, eta_after = 0.0;
  for (const auto& row : report.result.telemetry) {
    if (row.epoch == sw - 1) eta_before = row.eta_final;  // last step wins
    if (row.epoch == sw && eta_after == 0.0) eta_after = row.eta_final;
  }
  report.braking_ratio = eta_after > 0.0 ? eta_before / eta_after
                                         : std::numeric_limits<double>::infinity();
  return report;
}

}  // namespace inertia
