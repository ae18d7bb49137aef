#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "inertia/core_dynamics.hpp"

using namespace inertia;

namespace {
const WorkParams kUnitParams{1.0, 1.0 / M_LN2};  // rest_work == 1
}

TEST_CASE("rule density construction") {
  CHECK(RuleDensity(0.0).value() == 0.0);
  CHECK(RuleDensity(0.9999999).value() == doctest::Approx(0.9999999));
  CHECK_THROWS_AS(RuleDensity(1.0), std::domain_error);
  CHECK_THROWS_AS(RuleDensity(-0.1), std::domain_error);
  CHECK_THROWS_AS(RuleDensity(std::nan("")), std::domain_error);

  CHECK(RuleDensity::saturating(1.7).value() == 1.0 - kVelocityEpsilon);
  CHECK(RuleDensity::saturating(-3.0).value() == 0.0);
  CHECK(RuleDensity::saturating(0.25).value() == 0.25);
  CHECK_THROWS_AS(RuleDensity::saturating(std::nan("")), std::domain_error);
}

TEST_CASE("lorentz factor closed forms") {
  CHECK(lorentz_factor(RuleDensity(0.0)) == 1.0);
  CHECK(lorentz_factor(RuleDensity(0.8)) ==
        doctest::Approx(1.0 / 0.6).epsilon(1e-14));
  // 1/sqrt(1 - 0.9801) evaluated with a 40-digit oracle.
  CHECK(lorentz_factor(RuleDensity(0.99)) ==
        doctest::Approx(7.088812050083359).epsilon(1e-14));
  CHECK(lorentz_factor(RuleDensity(0.9)) ==
        doctest::Approx(2.2941573387056176).epsilon(1e-14));
}

TEST_CASE("work law") {
  WorkParams landauer{1.0, 1.0};
  CHECK(work(RuleDensity(0.0), landauer) ==
        doctest::Approx(0.6931471805599453).epsilon(1e-15));
  CHECK(work(RuleDensity(0.6), landauer) ==
        doctest::Approx(0.8664339756999316).epsilon(1e-14));
  // Asymptote: the cost diverges monotonically as rho -> 1.
  CHECK(work(RuleDensity(0.9999), landauer) >
        10.0 * work(RuleDensity(0.9), landauer));
}

TEST_CASE("fisher approximation") {
  CHECK(fisher_approx_work(RuleDensity(0.0), kUnitParams, 2) ==
        doctest::Approx(kUnitParams.rest_work));
  CHECK(fisher_approx_work(RuleDensity(0.1), kUnitParams, 4) ==
        doctest::Approx(1.0050375).epsilon(1e-12));
  // Order-4 truncation error vs the exact factor at rho = 0.1.
  const double exact = work(RuleDensity(0.1), kUnitParams);
  const double approx = fisher_approx_work(RuleDensity(0.1), kUnitParams, 4);
  CHECK(std::abs(approx - exact) < 1e-5 * kUnitParams.rest_work);
  CHECK_THROWS_AS(fisher_approx_work(RuleDensity(0.1), kUnitParams, 3),
                  std::invalid_argument);
}

TEST_CASE("action decomposition") {
  auto a = decompose_action(1.0, RuleDensity(0.0));
  CHECK(a.rule_component == 0.0);
  CHECK(a.state_component == 1.0);

  auto b = decompose_action(5.0, RuleDensity(0.6));
  CHECK(b.rule_component == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(b.state_component == doctest::Approx(4.0).epsilon(1e-14));

  // 2*sqrt(1 - 0.99^2) from the 40-digit oracle.
  auto c = decompose_action(2.0, RuleDensity(0.99));
  CHECK(c.state_component ==
        doctest::Approx(0.2821347195933177).epsilon(1e-13));

  CHECK_THROWS_AS(decompose_action(-1.0, RuleDensity(0.5)),
                  std::invalid_argument);
}

TEST_CASE("decompose round-trip property") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> rho_dist(0.0, 0.999999);
  std::uniform_real_distribution<double> tot_dist(0.0, 1e6);
  for (int i = 0; i < 2000; ++i) {
    const double total = tot_dist(rng);
    auto act = decompose_action(total, RuleDensity(rho_dist(rng)));
    const double back = std::hypot(act.rule_component, act.state_component);
    CHECK(back == doctest::Approx(total).epsilon(1e-12));
  }
}

TEST_CASE("logical action invariant enforcement") {
  CHECK_NOTHROW(LogicalAction(5.0, 3.0, 4.0));
  CHECK_THROWS_AS(LogicalAction(5.0, 3.0, 3.0), std::invalid_argument);
  CHECK_THROWS_AS(LogicalAction(1.0, 2.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(LogicalAction(1.0, -0.5, 0.5), std::invalid_argument);
}

TEST_CASE("interpretability criterion") {
  auto crit = interpretability_criterion(CriterionInputs(1, 1, 1, 1));
  CHECK(crit.ds_squared == 0.0);
  CHECK(crit.regime == Regime::Critical);

  auto pos = interpretability_criterion(CriterionInputs(1, 2, 1, 1));
  CHECK(pos.ds_squared == doctest::Approx(3.0));
  CHECK(pos.regime == Regime::Interpretable);

  auto neg = interpretability_criterion(CriterionInputs(1, 1, 2, 1));
  CHECK(neg.ds_squared == doctest::Approx(-3.0));
  CHECK(neg.regime == Regime::Uninterpretable);

  CHECK_THROWS_AS(CriterionInputs(0.0, 1, 1, 1), std::invalid_argument);
}

TEST_CASE("criterion antisymmetry under axis swap") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(0.01, 10.0);
  for (int i = 0; i < 500; ++i) {
    const double rho_max = dist(rng), dS = dist(rng), dR = dist(rng),
                 D = dist(rng);
    auto fwd = interpretability_criterion(CriterionInputs(rho_max, dS, dR, D));
    // Swap the expressive and reconfiguration magnitudes.
    auto swp = interpretability_criterion(
        CriterionInputs(dR * D, 1.0, 1.0, rho_max * dS));
    CHECK(fwd.ds_squared == doctest::Approx(-swp.ds_squared).epsilon(1e-9));
  }
}

TEST_CASE("monotone divergence of work") {
  WorkParams landauer{1.0, 1.0};
  double prev = 0.0;
  for (double rho : {0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 0.9999}) {
    const double w = work(RuleDensity(rho), landauer);
    CHECK(w > prev);
    prev = w;
  }
  CHECK(work(RuleDensity(1.0 - 1e-6), landauer) > 100.0 * landauer.rest_work);
}

TEST_CASE("taylor dominance ordering") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(1e-6, 0.999999);
  for (int i = 0; i < 2000; ++i) {
    RuleDensity rho(dist(rng));
    const double w0 = kUnitParams.rest_work;
    const double f2 = fisher_approx_work(rho, kUnitParams, 2);
    const double f4 = fisher_approx_work(rho, kUnitParams, 4);
    const double wx = work(rho, kUnitParams);
    CHECK(w0 <= f2);
    CHECK(f2 <= f4);
    CHECK(f4 <= wx * (1.0 + 1e-15));
  }
}

TEST_CASE("low velocity agreement") {
  for (double rho = 0.01; rho <= 0.3; rho += 0.01) {
    const double wx = work(RuleDensity(rho), kUnitParams);
    const double f4 = fisher_approx_work(RuleDensity(rho), kUnitParams, 4);
    CHECK(std::abs(f4 - wx) / wx < 1e-3);
  }
}

TEST_CASE("effective mass") {
  WorkParams unit{1.0, 1.0 / M_LN2};
  CHECK(effective_mass(RuleDensity(0.0), unit, 1.0) == doctest::Approx(1.0));
  CHECK(effective_mass(RuleDensity(0.8), unit, 1.0) ==
        doctest::Approx(1.0 / 0.6).epsilon(1e-14));
  // mu(0.9)/mu(0) == gamma(0.9), oracle value.
  const double ratio = effective_mass(RuleDensity(0.9), unit) /
                       effective_mass(RuleDensity(0.0), unit);
  CHECK(ratio == doctest::Approx(2.2941573387056176).epsilon(1e-13));
  CHECK_THROWS_AS(effective_mass(RuleDensity(0.1), unit, 0.0),
                  std::invalid_argument);
}
