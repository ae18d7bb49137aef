#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace inertia {

enum class ScheduleKind { Constant, Exponential, Step, Cosine };

struct ScheduleConfig {
  ScheduleKind kind = ScheduleKind::Constant;
  double eta0 = 0.05;
  double gamma = 0.95;     // exponential / step decay factor
  int step_size = 10;      // epochs between step decays
  double eta_min = 0.0;    // cosine floor
  int total_epochs = 100;  // cosine horizon T
};

inline double schedule_lr(const ScheduleConfig& cfg, long epoch) {
  switch (cfg.kind) {
    case ScheduleKind::Constant:
      return cfg.eta0;
    case ScheduleKind::Exponential:
      return cfg.eta0 * std::pow(cfg.gamma, static_cast<double>(epoch));
    case ScheduleKind::Step:
      return cfg.eta0 * std::pow(cfg.gamma, static_cast<double>(
                                                epoch / cfg.step_size));
    case ScheduleKind::Cosine: {
      const double t = std::min<double>(static_cast<double>(epoch),
                                        cfg.total_epochs);
      return cfg.eta_min + 0.5 * (cfg.eta0 - cfg.eta_min) *
                               (1.0 + std::cos(M_PI * t / cfg.total_epochs));
    }
  }
  return cfg.eta0;
}

inline ScheduleKind schedule_kind_from_string(const std::string& name) {
  if (name == "constant") return ScheduleKind::Constant;
  if (name == "exponential") return ScheduleKind::Exponential;
  if (name == "step") return ScheduleKind::Step;
  if (name == "cosine") return ScheduleKind::Cosine;
  throw std::invalid_argument("unknown scheduler kind: " + name);
}

inline std::string to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::Constant: return "constant";
    case ScheduleKind::Exponential: return "exponential";
    case ScheduleKind::Step: return "step";
    case ScheduleKind::Cosine: return "cosine";
  }
  return "?";
}

}  // namespace inertia
