#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace inertia {

/// Saturation clamp applied to velocities that would otherwise reach the
/// horizon at 1. Measured velocities may numerically exceed 1; clamping
/// keeps the Lorentz factor finite so the brake can still drive eta -> 0.
inline constexpr double kVelocityEpsilon = 1e-6;

/// Fraction of a system's total logical action consumed by internal
/// rule-maintenance. Identified with the systemic velocity v, so the value
/// lives in [0, 1) with 1 acting as a horizon.
class RuleDensity {
 public:
  RuleDensity() = default;

  explicit RuleDensity(double value) : value_(value) {
    if (!std::isfinite(value) || value < 0.0 || value >= 1.0) {
      throw std::domain_error("RuleDensity must lie in [0, 1), got " +
                              std::to_string(value));
    }
  }

  /// Clamping constructor for measurement paths: values >= 1 map to
  /// 1 - kVelocityEpsilon, negative values to 0. NaN still throws.
  static RuleDensity saturating(double value) {
    if (std::isnan(value)) {
      throw std::domain_error("RuleDensity::saturating: NaN velocity");
    }
    if (value < 0.0) value = 0.0;
    const double cap = 1.0 - kVelocityEpsilon;
    if (value > cap) value = cap;
    RuleDensity r;
    r.value_ = value;
    return r;
  }

  double value() const { return value_; }

 private:
  double value_ = 0.0;
};

/// One atomic transition's action budget split across the rule and state
/// axes. total^2 == rule_component^2 + state_component^2 by construction.
struct LogicalAction {
  double total = 0.0;
  double rule_component = 0.0;
  double state_component = 0.0;

  LogicalAction(double total_in, double rule_in, double state_in)
      : total(total_in), rule_component(rule_in), state_component(state_in) {
    if (total < 0.0 || rule_component < 0.0 || state_component < 0.0) {
      throw std::invalid_argument("LogicalAction components must be >= 0");
    }
    if (rule_component > total * (1.0 + 1e-12) ||
        state_component > total * (1.0 + 1e-12)) {
      throw std::invalid_argument(
          "LogicalAction components cannot exceed the total");
    }
    const double sq = rule_component * rule_component +
                      state_component * state_component;
    const double tq = total * total;
    const double scale = std::max(tq, 1e-300);
    if (std::abs(sq - tq) > 1e-12 * scale) {
      throw std::invalid_argument(
          "LogicalAction: total^2 != rule^2 + state^2");
    }
  }
};

/// Baseline erasure-work parameters: n bits at temperature kT. rest_work is
/// the Landauer floor n*kT*ln2, the rest inertia of the substrate.
struct WorkParams {
  double n_bits = 1.0;
  double kT = 1.0;
  double rest_work = 0.0;

  WorkParams(double n_bits_in, double kT_in) : n_bits(n_bits_in), kT(kT_in) {
    if (!(n_bits > 0.0) || !(kT > 0.0)) {
      throw std::invalid_argument("WorkParams: n_bits and kT must be > 0");
    }
    rest_work = n_bits * kT * M_LN2;
  }
};

/// gamma(rho) = 1/sqrt(1 - rho^2). Strictly increasing, >= 1.
inline double lorentz_factor(RuleDensity rho) {
  const double r = rho.value();
  return 1.0 / std::sqrt((1.0 - r) * (1.0 + r));
}

/// Work required to hold the observable state-change tempo at rule density
/// rho: rest_work * gamma(rho). Diverges as rho -> 1.
inline double work(RuleDensity rho, const WorkParams& params) {
  return params.rest_work * lorentz_factor(rho);
}

/// Low-velocity Taylor truncation of the work law. Order 2 keeps the
/// quadratic curvature term (the Fisher-information regime); order 4 adds
/// the next correction.
inline double fisher_approx_work(RuleDensity rho, const WorkParams& params,
                                 int order) {
  if (order != 2 && order != 4) {
    throw std::invalid_argument("fisher_approx_work: order must be 2 or 4");
  }
  const double r2 = rho.value() * rho.value();
  double factor = 1.0 + 0.5 * r2;
  if (order == 4) factor += 0.375 * r2 * r2;
  return params.rest_work * factor;
}

/// Split a total action budget into its rule and state components at the
/// given density: l_R = l*rho, l_S = l*sqrt(1 - rho^2).
inline LogicalAction decompose_action(double total, RuleDensity rho) {
  if (!(total >= 0.0)) {
    throw std::invalid_argument("decompose_action: total must be >= 0");
  }
  const double r = rho.value();
  return LogicalAction(total, total * r,
                       total * std::sqrt((1.0 - r) * (1.0 + r)));
}

/// Inputs to the local interpretability criterion.
struct CriterionInputs {
  double rho_max = 1.0;     // invariant velocity ceiling
  double dS = 0.0;          // spatiotemporal state differential
  double dR = 0.0;          // rule differential
  double granularity = 1.0; // symbolic granularity ||D||

  CriterionInputs(double rho_max_in, double dS_in, double dR_in,
                  double granularity_in)
      : rho_max(rho_max_in), dS(dS_in), dR(dR_in),
        granularity(granularity_in) {
    if (!std::isfinite(rho_max) || !std::isfinite(dS) || !std::isfinite(dR) ||
        !std::isfinite(granularity)) {
      throw std::invalid_argument("CriterionInputs: all fields must be finite");
    }
    if (!(rho_max > 0.0) || !(granularity > 0.0) || dS < 0.0 || dR < 0.0) {
      throw std::invalid_argument("CriterionInputs: sign constraints violated");
    }
  }
};

enum class Regime { Interpretable, Critical, Uninterpretable };

struct CriterionResult {
  double ds_squared = 0.0;
  Regime regime = Regime::Critical;
};

/// Residual logical bandwidth after rule-maintenance costs:
/// ds^2 = rho_max^2 dS^2 - dR^2 ||D||^2. Positive means expressive capacity
/// exceeds reconfiguration demand; negative means structural change outpaces
/// dissipation. |ds^2| <= tolerance is reported as Critical.
inline CriterionResult interpretability_criterion(const CriterionInputs& in,
                                                  double tolerance = 1e-9) {
  const double expr = in.rho_max * in.dS;
  const double reconf = in.dR * in.granularity;
  const double ds2 = expr * expr - reconf * reconf;
  Regime regime = Regime::Critical;
  if (ds2 > tolerance) {
    regime = Regime::Interpretable;
  } else if (ds2 < -tolerance) {
    regime = Regime::Uninterpretable;
  }
  return {ds2, regime};
}

/// Effective mass mu(rho) from the mass-energy identification
/// W(rho) = mu(rho) c^2. c^2 defaults to 1.
inline double effective_mass(RuleDensity rho, const WorkParams& params,
                             double c_squared = 1.0) {
  if (!(c_squared > 0.0)) {
    throw std::invalid_argument("effective_mass: c_squared must be > 0");
  }
  return work(rho, params) / c_squared;
}

}  // namespace inertia
