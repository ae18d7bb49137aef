#pragma once

#include <cstdint>
#include <vector>

#include "inertia/core_dynamics.hpp"

namespace inertia {

/// Configuration of one adiabatic-collision run. The facet slant angle is
/// asin(rho) plus optional per-collision Gaussian jitter; unit_action is the
/// action of a full vertical collision in the reference system.
struct CollisionConfig {
  RuleDensity rho;
  long n_events_target = 10000;
  double unit_action = 1.0;
  std::uint64_t rng_seed = 0;
  double facet_jitter = 0.0;
  double controller_gain = 0.01;
  long collision_budget_factor = 64;  // max collisions per requested event
};

struct SimResult {
  long registered_events = 0;
  double total_work = 0.0;
  double work_ratio = 1.0;  // total_work / (n_events_target * unit_action)
  double mean_event_energy = 0.0;
};

/// Drive a stream of collisions against the slanted facet. Each collision
/// injects action l; the facet absorbs l*sin(theta) and the normal component
/// accumulates toward the registration threshold. A multiplicative tempo
/// controller holds one registration per collision, and the final injection
/// is cut short the instant the last event registers. Throws
/// std::runtime_error when the collision budget is exhausted.
SimResult run_collision_sim(const CollisionConfig& config);

struct SweepPoint {
  double rho = 0.0;
  double work_ratio = 1.0;
  long registered_events = 0;
  double total_work = 0.0;
  std::uint64_t seed = 0;
};

/// One run per density with deterministic per-point seeds derived from the
/// base config seed. Output order follows the input order.
std::vector<SweepPoint> sweep_rho(const std::vector<RuleDensity>& rhos,
                                  const CollisionConfig& base);

/// splitmix64 step; used to derive independent per-run seeds.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt);

}  // namespace inertia
