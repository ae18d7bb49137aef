#include "inertia/micro_sim.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace inertia {

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

SimResult run_collision_sim(const CollisionConfig& config) {
  if (config.n_events_target < 1 || !(config.unit_action > 0.0)) {
    throw std::invalid_argument("run_collision_sim: invalid config");
  }
  const double base_angle = std::asin(config.rho.value());
  const double u = config.unit_action;
  const long target = config.n_events_target;
  const long budget = config.collision_budget_factor * target + 1024;

  std::mt19937_64 rng(config.rng_seed);
  std::normal_distribution<double> jitter(0.0, 1.0);

  double l = u;  // starting packet size: the reference full-vertical action
  double acc = 0.0;
  double total_work = 0.0;
  long registered = 0;

  for (long collision = 0; collision < budget && registered < target;
       ++collision) {
    double angle = base_angle;
    if (config.facet_jitter > 0.0) {
      angle += config.facet_jitter * jitter(rng);
      angle = std::clamp(angle, 0.0, M_PI_2);
    }
    const double cos_a = std::cos(angle);

    double inject = l;
    double normal = inject * cos_a;
    const long would_register =
        static_cast<long>(std::floor((acc + normal) / u));
    if (registered + would_register >= target && cos_a > 0.0) {
      // The experiment stops the instant the last event registers; only the
      // action needed to close the final threshold is injected.
      const double needed =
          (static_cast<double>(target - registered)) * u - acc;
      if (needed < normal) {
        inject = needed / cos_a;
        normal = needed;
      }
    }

    total_work += inject;
    acc += normal;
    long clicks = 0;
    while (acc >= u && registered < target) {
      acc -= u;
      ++registered;
      ++clicks;
    }
    if (acc > -1e-9 && acc < 0.0) acc = 0.0;

    // Multiplicative tempo feedback: hold one registration per collision.
    if (clicks == 0) {
      l *= 1.0 + config.controller_gain;
    } else if (clicks > 1) {
      l *= 1.0 - config.controller_gain;
    }
  }

  if (registered < target) {
    throw std::runtime_error(
        "run_collision_sim: tempo controller failed to settle within the "
        "collision budget");
  }

  SimResult result;
  result.registered_events = registered;
  result.total_work = total_work;
  result.work_ratio = total_work / (static_cast<double>(target) * u);
  result.mean_event_energy = total_work / static_cast<double>(target);
  return result;
}

std::vector<SweepPoint> sweep_rho(const std::vector<RuleDensity>& rhos,
                                  const CollisionConfig& base) {
  std::vector<SweepPoint> points;
  points.reserve(rhos.size());
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    CollisionConfig cfg = base;
    cfg.rho = rhos[i];
    cfg.rng_seed = mix_seed(base.rng_seed, i);
    SimResult res = run_collision_sim(cfg);
    points.push_back({rhos[i].value(), res.work_ratio, res.registered_events,
                      res.total_work, cfg.rng_seed});
  }
  return points;
}

}  // namespace inertia
