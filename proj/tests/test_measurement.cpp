#include <Eigen/Core>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "inertia/measurement.hpp"

using namespace inertia;
using Eigen::VectorXd;

namespace {

StepObservation make_obs(VectorXd dtheta, VectorXd env, double loss) {
  StepObservation obs;
  obs.delta_theta = std::move(dtheta);
  obs.env_gradient = std::move(env);
  obs.loss = loss;
  return obs;
}

CalibrationConstants unit_cal(double granularity = 1.0) {
  CalibrationConstants cal;
  cal.granularity = granularity;
  cal.v_base = RuleDensity(0.5);
  cal.window_steps = 1;
  return cal;
}

}  // namespace

TEST_CASE("rule displacement") {
  CHECK(rule_displacement(make_obs(VectorXd::Zero(4), VectorXd::Zero(4), 1)) ==
        0.0);
  VectorXd v(2);
  v << 3.0, 4.0;
  CHECK(rule_displacement(make_obs(v, VectorXd::Zero(2), 1)) ==
        doctest::Approx(5.0).epsilon(1e-15));

  // 100-dim vector against an extended-precision norm oracle.
  std::mt19937_64 rng(42);
  std::normal_distribution<double> nd(0.0, 2.0);
  VectorXd big(100);
  long double acc = 0.0L;
  for (int i = 0; i < 100; ++i) {
    big[i] = nd(rng);
    acc += static_cast<long double>(big[i]) * static_cast<long double>(big[i]);
  }
  const double oracle = static_cast<double>(sqrtl(acc));
  CHECK(rule_displacement(make_obs(big, VectorXd::Zero(100), 1)) ==
        doctest::Approx(oracle).epsilon(1e-14));
}

TEST_CASE("external gain projection") {
  VectorXd u(2);
  u << 1.0, 0.0;
  CHECK(external_gain(make_obs(u, u, 1)) == doctest::Approx(1.0));

  VectorXd ortho(2);
  ortho << 0.0, 1.0;
  CHECK(external_gain(make_obs(u, ortho, 1)) == doctest::Approx(0.0));

  // Antiparallel feedback is floored at zero.
  CHECK(external_gain(make_obs(u, VectorXd(-u), 1)) == 0.0);

  // Zero displacement: no ripple at all.
  CHECK(external_gain(make_obs(VectorXd::Zero(2), u, 1)) == 0.0);
}

TEST_CASE("antialigned feedback drives tier-2 velocity to saturation") {
  // Sweep the feedback angle from aligned to antialigned; the measured
  // velocity must rise monotonically and hit the clamp when the projection
  // floors out.
  auto cal = unit_cal();
  VectorXd dtheta(2);
  dtheta << 1.0, 0.0;
  double prev = -1.0;
  for (double angle : {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, M_PI}) {
    VectorXd env(2);
    env << std::cos(angle), std::sin(angle);
    auto obs = make_obs(dtheta, env, 1.0);
    auto est = velocity_tier2(rule_displacement(obs), rule_displacement(obs),
                              external_gain(obs), obs.loss, cal);
    CHECK(est.value.value() >= prev);
    prev = est.value.value();
  }
  CHECK(prev == 1.0 - kVelocityEpsilon);
}

TEST_CASE("rule disorder ratio") {
  VectorXd step(2);
  step << 0.6, 0.8;

  StepObservation one;
  one.abs_path_norm = step.cwiseAbs().norm();
  one.net_path_norm = step.norm();
  CHECK(disorder_rule(one) == doctest::Approx(1.0));

  // Perfect oscillation: a step and its negation.
  StepObservation osc;
  osc.abs_path_norm = 2.0;
  osc.net_path_norm = 0.0;
  CHECK(disorder_rule(osc) == doctest::Approx(2.0 / kDenomGuard));

  // Hand-evaluated: (1,0) then (0,1) gives abs path (1,1) and net (1,1).
  StepObservation diag;
  diag.abs_path_norm = std::sqrt(2.0);
  diag.net_path_norm = std::sqrt(2.0);
  CHECK(disorder_rule(diag) == doctest::Approx(1.0));
}

TEST_CASE("tier 1 velocity") {
  auto cal = unit_cal();
  CHECK(velocity_tier1(1.0, cal).value.value() == doctest::Approx(0.5));
  CHECK(velocity_tier1(2.0, cal).value.value() ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  // loss -> infinity drives v -> 1, held at the saturation clamp.
  CHECK(velocity_tier1(1e12, cal).value.value() == 1.0 - kVelocityEpsilon);
  // Tier-1 estimates carry no displacement components.
  auto est = velocity_tier1(3.0, cal);
  CHECK(est.tier == 1);
  CHECK(est.dR == 0.0);
  CHECK(est.dS_R == 0.0);
  CHECK(est.dS_ext == 0.0);

  double prev = 0.0;
  for (double loss : {0.1, 0.5, 1.0, 5.0, 50.0}) {
    const double v = velocity_tier1(loss, cal).value.value();
    CHECK(v > prev);
    prev = v;
  }
  CHECK_THROWS(velocity_tier1(0.0, cal));
}

TEST_CASE("tier 2 velocity") {
  auto cal = unit_cal();
  // Equipartition: gain balances internal shift exactly.
  CHECK(velocity_tier2(1.0, 1.0, 1.0, 1.0, cal).value.value() ==
        doctest::Approx(0.5));
  // Vanishing external gain saturates to the clamp.
  CHECK(velocity_tier2(1.0, 1.0, 0.0, 1.0, cal).value.value() ==
        1.0 - kVelocityEpsilon);
  CHECK(velocity_tier2(1.0, 1.0, 3.0, 1.0, cal).value.value() ==
        doctest::Approx(0.25));
  // Total stall: empty denominator clamps instead of dividing by zero.
  CHECK(velocity_tier2(0.0, 0.0, 0.0, 1.0, cal).value.value() ==
        1.0 - kVelocityEpsilon);

  double prev = 2.0;
  for (double gain : {0.0, 0.5, 1.0, 2.0, 8.0}) {
    const double v = velocity_tier2(1.0, 1.0, gain, 1.0, cal).value.value();
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("tier 3 velocity") {
  auto cal = unit_cal();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(0.01, 5.0);
  for (int i = 0; i < 200; ++i) {
    const double dR = dist(rng), dSext = dist(rng), loss = dist(rng);
    auto t2 = velocity_tier2(dR, dR, dSext, loss, cal);
    auto t3 = velocity_tier3(dR, dR, dSext, loss, 1.0, 1.0, cal);
    CHECK(t3.value.value() == t2.value.value());  // bitwise reduction
  }

  // Increasing state disorder dilutes the gain, raising velocity.
  double prev = 0.0;
  for (double ls : {1.0, 2.0, 4.0, 8.0}) {
    const double v =
        velocity_tier3(1.0, 1.0, 2.0, 1.0, 1.0, ls, cal).value.value();
    CHECK(v > prev);
    prev = v;
  }

  // Rule disorder dominates both dR and dS_R, so the gain term washes out.
  CHECK(velocity_tier3(1.0, 1.0, 2.0, 1.0, 1e9, 1.0, cal).value.value() ==
        doctest::Approx(1.0 - kVelocityEpsilon).epsilon(1e-6));
  CHECK_THROWS(velocity_tier3(1.0, 1.0, 1.0, 1.0, 0.5, 1.0, cal));
}

TEST_CASE("velocity clamp containment") {
  auto cal = unit_cal();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> dist(0.0, 10.0);
  std::uniform_real_distribution<double> ldist(1.0, 3.0);
  for (int i = 0; i < 2000; ++i) {
    auto est = velocity_tier3(dist(rng), dist(rng), dist(rng), 0.01 + dist(rng),
                              ldist(rng), ldist(rng), cal);
    CHECK(est.value.value() >= 0.0);
    CHECK(est.value.value() <= 1.0 - kVelocityEpsilon);
  }
}

TEST_CASE("calibration") {
  // Avg(dS_ext/L) == Avg(dR) -> ||D|| = 1.
  std::vector<StepObservation> stream;
  VectorXd d(2);
  d << 1.0, 0.0;
  for (int i = 0; i < 10; ++i) stream.push_back(make_obs(d, d, 1.0));
  auto cal = calibrate(stream);
  CHECK(cal.granularity == doctest::Approx(1.0));
  CHECK(cal.v_base.value() == 0.5);

  // Avg(dS_ext/L) = 2, Avg(dR) = 0.5 -> ||D|| = 4.
  std::vector<StepObservation> stream2;
  VectorXd half = 0.5 * d;
  for (int i = 0; i < 8; ++i) {
    auto obs = make_obs(half, 4.0 * d, 2.0);  // gain 4, loss 2 -> ratio 2
    stream2.push_back(obs);
  }
  auto cal2 = calibrate(stream2);
  CHECK(cal2.granularity == doctest::Approx(4.0));

  // Degenerate streams fail loudly.
  std::vector<StepObservation> zeros(4,
                                     make_obs(VectorXd::Zero(2), d, 1.0));
  CHECK_THROWS(calibrate(zeros));
  std::vector<StepObservation> nogain(
      4, make_obs(d, VectorXd(-d), 1.0));  // antialigned -> floored gain
  CHECK_THROWS(calibrate(nogain));
}

TEST_CASE("calibration equipartition fixed point") {
  // Synthetic warmup with varying magnitudes but constant gain/displacement
  // ratio: tier-2 velocity at the window means must be exactly 0.5.
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> mag(0.5, 2.0);
  std::vector<StepObservation> stream;
  for (int i = 0; i < 50; ++i) {
    const double m = mag(rng);
    VectorXd d(3);
    d << m, 0.0, 0.0;
    stream.push_back(make_obs(d, 3.0 * d, 1.5));
  }
  auto cal = calibrate(stream);
  double mean_dr = 0.0, mean_gain = 0.0, mean_loss = 0.0;
  for (const auto& obs : stream) {
    mean_dr += rule_displacement(obs);
    mean_gain += external_gain(obs);
    mean_loss += obs.loss;
  }
  mean_dr /= stream.size();
  mean_gain /= stream.size();
  mean_loss /= stream.size();
  auto est =
      velocity_tier2(mean_dr, mean_dr, mean_gain, mean_loss, cal);
  CHECK(est.value.value() == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("velocity meter windows and smoothing") {
  VelocityMeter meter({.disorder_window = 10, .ema_alpha = 0.3, .tier = 3});
  auto cal = unit_cal();

  VectorXd a(2), b(2);
  a << 1.0, 0.0;
  b << 0.0, 1.0;

  auto obs1 = meter.observe(a, a, 1.0);
  CHECK(disorder_rule(obs1) == doctest::Approx(1.0));
  auto est1 = meter.estimate(obs1, cal);
  CHECK(meter.smoothed_velocity() == doctest::Approx(est1.value.value()));

  auto obs2 = meter.observe(b, b, 1.0);
  CHECK(obs2.abs_path_norm == doctest::Approx(std::sqrt(2.0)));
  CHECK(obs2.net_path_norm == doctest::Approx(std::sqrt(2.0)));
  auto est2 = meter.estimate(obs2, cal);
  const double expect =
      0.3 * est2.value.value() + 0.7 * est1.value.value();
  CHECK(meter.smoothed_velocity() == doctest::Approx(expect));

  // Oscillating updates inflate the rule disorder coefficient.
  VelocityMeter osc({.disorder_window = 4, .ema_alpha = 0.3, .tier = 3});
  osc.observe(a, a, 1.0);
  auto obs_osc = osc.observe(VectorXd(-a), a, 1.0);
  CHECK(disorder_rule(obs_osc) > 1e6);

  // Steady loss keeps state disorder at 1; jittery loss raises it.
  VelocityMeter steady({.disorder_window = 5, .ema_alpha = 0.3, .tier = 3});
  for (int i = 0; i < 5; ++i) steady.observe(a, a, 2.0);
  CHECK(steady.state_disorder() == doctest::Approx(1.0));
  VelocityMeter jitter({.disorder_window = 5, .ema_alpha = 0.3, .tier = 3});
  for (int i = 0; i < 5; ++i) jitter.observe(a, a, (i % 2 == 0) ? 1.0 : 3.0);
  CHECK(jitter.state_disorder() > 1.2);
}
