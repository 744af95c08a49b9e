#include "dprmdi/usd_attack.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <sstream>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "dprmdi/lp.hpp"

namespace dprmdi {

AttackScenario AttackScenario::standard(double mu, double nu, int max_photon_number) {
  return {mu, nu, usd_success_probability(mu, nu) * mu / 2.0, max_photon_number};
}

void AttackScenario::validate() const {
  if (!(mu >= 0.0 && nu >= 0.0)) throw std::domain_error("intensities must be >= 0");
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::domain_error("eta must be in [0, 1]");
  if (max_photon_number < 1) throw std::domain_error("max_photon_number must be >= 1");
}

bool AttackScenario::in_analysed_regime() const { return mu > nu && nu > mu * mu / 2.0; }

double usd_success_probability(double mu, double nu) {
  if (!(mu >= 0.0 && nu >= 0.0)) throw std::domain_error("intensities must be >= 0");
  const double d = std::sqrt(mu) - std::sqrt(nu);
  return -std::expm1(-d * d / 4.0);
}

double normal_gain(double eta, double intensity) { return -std::expm1(-eta * intensity); }

namespace {

// e^{-x} x^i / i! for i = 1..count.
Eigen::VectorXd poisson_from_one(double x, int count) {
  Eigen::VectorXd p(count);
  double term = std::exp(-x);
  for (int i = 1; i <= count; ++i) {
    term *= x / i;
    p[i - 1] = term;
  }
  return p;
}

// sum_{i > cutoff} e^{-x} x^i / i!, summed upward to avoid cancellation.
double poisson_tail(double x, int cutoff) {
  double term = std::exp(-x);
  for (int i = 1; i <= cutoff; ++i) term *= x / i;
  double sum = 0.0;
  for (int i = cutoff + 1; i < cutoff + 400; ++i) {
    term *= x / i;
    sum += term;
    if (term < 1e-18 * sum || term == 0.0) break;
  }
  return sum;
}

double relative_residual(double achieved, double target) {
  const double diff = std::abs(achieved - target);
  return target > 0.0 ? diff / target : diff;
}

}  // namespace

double attacked_gain(double q, double intensity, const Eigen::VectorXd& forwarding) {
  return q * poisson_from_one(intensity, static_cast<int>(forwarding.size())).dot(forwarding);
}

PolicyResult find_policy(const AttackScenario& scenario) {
  scenario.validate();
  const int k = scenario.max_photon_number;
  const double q = usd_success_probability(scenario.mu, scenario.nu);
  const Eigen::VectorXd coef_signal = q * poisson_from_one(scenario.mu, k);
  const Eigen::VectorXd coef_decoy = q * poisson_from_one(scenario.nu, k);
  const double tail_signal = q * poisson_tail(scenario.mu, k);
  const double tail_decoy = q * poisson_tail(scenario.nu, k);
  const double target_signal = normal_gain(scenario.eta, scenario.mu);
  const double target_decoy = normal_gain(scenario.eta, scenario.nu);

  // Z^mu_1..k, Z^nu_1..k, then the two above-cutoff slacks.
  const int n = 2 * k + 2;
  Eigen::VectorXd lower = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd upper = Eigen::VectorXd::Ones(n);
  upper[2 * k] = tail_signal;
  upper[2 * k + 1] = tail_decoy;
  Eigen::VectorXd row_signal = Eigen::VectorXd::Zero(n);
  row_signal.head(k) = coef_signal;
  row_signal[2 * k] = 1.0;
  Eigen::VectorXd row_decoy = Eigen::VectorXd::Zero(n);
  row_decoy.segment(k, k) = coef_decoy;
  row_decoy[2 * k + 1] = 1.0;
  Eigen::VectorXd objective = Eigen::VectorXd::Zero(n);
  objective[0] = 1.0;

  for (double tol : kMatchTolerances) {
    LinearProgram lp(lower, upper);
    auto add_band = [&](const Eigen::VectorXd& row, double target) {
      if (target == 0.0) {
        lp.add_constraint(row, Relation::Equal, 0.0);
      } else {
        lp.add_range(row, target * (1.0 - tol), target * (1.0 + tol));
      }
    };
    add_band(row_signal, target_signal);
    add_band(row_decoy, target_decoy);
    lp.set_objective(objective, Sense::Minimize);
    const LpSolution sol = solve(lp);
    if (sol.status != LpStatus::Optimal) continue;

    PolicyResult out;
    out.policy.signal = sol.values.head(k);
    out.policy.decoy = sol.values.segment(k, k);
    out.z1_signal_min = sol.values[0];
    out.tolerance = tol;
    out.signal_tail_slack = sol.values[2 * k];
    out.decoy_tail_slack = sol.values[2 * k + 1];
    out.signal_residual = relative_residual(row_signal.dot(sol.values), target_signal);
    out.decoy_residual = relative_residual(row_decoy.dot(sol.values), target_decoy);
    return out;
  }

  const double tol = kMatchTolerances[std::size(kMatchTolerances) - 1];
  const double reach_signal = coef_signal.sum() + tail_signal;
  const double reach_decoy = coef_decoy.sum() + tail_decoy;
  if (reach_signal < target_signal * (1.0 - tol)) {
    throw AttackInfeasible(
        "signal gain", fmt::format("signal gain {:.6g} unreachable: Eve can produce at most {:.6g}",
                                   target_signal, reach_signal));
  }
  if (reach_decoy < target_decoy * (1.0 - tol)) {
    throw AttackInfeasible(
        "decoy gain", fmt::format("decoy gain {:.6g} unreachable: Eve can produce at most {:.6g}",
                                  target_decoy, reach_decoy));
  }
  throw AttackInfeasible("signal gain", "gain constraints cannot be met simultaneously");
}

double attacked_key_rate_upper(const AttackScenario& scenario, const ForwardingPolicy& policy) {
  const double q = usd_success_probability(scenario.mu, scenario.nu);
  const double z1 = policy.signal.size() > 0 ? policy.signal[0] : 0.0;
  const double single = q * z1 * std::exp(-scenario.mu) * scenario.mu;
  return single * single;
}

HonestEstimate estimated_key_rate_lower(const AttackScenario& scenario) {
  scenario.validate();
  const double mu = scenario.mu;
  const double nu = scenario.nu;
  const double denom = mu * nu - nu * nu;
  if (mu == nu || denom == 0.0) {
    throw std::domain_error("decoy estimate is singular when mu == nu (or nu == 0)");
  }
  const double qm = normal_gain(scenario.eta, mu);
  const double qn = normal_gain(scenario.eta, nu);
  const double em = std::exp(mu);
  const double en = std::exp(nu);
  const double ratio = nu * nu / (mu * mu);
  const double pre = mu / denom;

  // Independent sources: Q_{a,b} = Q_a Q_b.
  HonestEstimate out;
  out.y1_signal = pre * (qn * qm * en - qm * qm * em * ratio);
  out.y1_decoy = pre * (qn * qn * en - qm * qn * em * ratio);
  out.y11 = pre * (out.y1_decoy * en - out.y1_signal * em * ratio);

  // Same elimination as explicit solves of the two-term systems
  //   x e^x-weighted gain = x Y^1 + x^2/2 Y^2 for x in {nu, mu}.
  Eigen::Matrix2d m;
  m << nu, nu * nu / 2.0, mu, mu * mu / 2.0;
  const auto lu = m.fullPivLu();
  const double y1_signal = lu.solve(Eigen::Vector2d(qn * qm * en, qm * qm * em))[0];
  const double y1_decoy = lu.solve(Eigen::Vector2d(qn * qn * en, qm * qn * em))[0];
  out.y11_linear = lu.solve(Eigen::Vector2d(y1_decoy * en, y1_signal * em))[0];

  const double single = std::exp(-mu) * mu;
  out.rate_lower = std::max(0.0, out.y11) * single * single;
  return out;
}

ForwardingPolicy closed_form_policy(const AttackScenario& scenario) {
  const int k = std::max(2, scenario.max_photon_number);
  ForwardingPolicy p{Eigen::VectorXd::Zero(k), Eigen::VectorXd::Zero(k)};
  p.signal[1] = 1.0;
  p.decoy[0] = scenario.mu * scenario.mu / (2.0 * scenario.nu);
  return p;
}

AttackReport attack_demo(const AttackScenario& scenario) {
  scenario.validate();
  AttackReport r;
  r.scenario = scenario;
  r.q_opt = usd_success_probability(scenario.mu, scenario.nu);
  if (!scenario.in_analysed_regime()) {
    r.notes.push_back("scenario lies outside mu > nu > mu^2/2");
  }
  try {
    r.policy = find_policy(scenario);
    r.feasible = true;
    r.rate_upper = attacked_key_rate_upper(scenario, r.policy->policy);
    if (r.policy->tolerance > kMatchTolerances[0]) {
      r.notes.push_back(fmt::format("gain matching needed the widened tolerance {:g}",
                                    r.policy->tolerance));
    }
  } catch (const AttackInfeasible& e) {
    r.notes.push_back(fmt::format("no forwarding policy ({}): {}", e.constraint(), e.what()));
  }
  try {
    r.honest = estimated_key_rate_lower(scenario);
    r.rate_lower = r.honest->rate_lower;
  } catch (const std::domain_error& e) {
    r.notes.push_back(fmt::format("honest estimate unavailable: {}", e.what()));
  }
  r.success = r.feasible && r.honest && r.rate_lower > r.rate_upper;

  if (scenario.nu > 0.0) {
    const ForwardingPolicy cf = closed_form_policy(scenario);
    const double ts = normal_gain(scenario.eta, scenario.mu);
    const double td = normal_gain(scenario.eta, scenario.nu);
    const double as = attacked_gain(r.q_opt, scenario.mu, cf.signal);
    const double ad = attacked_gain(r.q_opt, scenario.nu, cf.decoy);
    r.closed_form_signal_residual = relative_residual(as, ts);
    r.closed_form_decoy_residual = relative_residual(ad, td);
    const double loose = kMatchTolerances[std::size(kMatchTolerances) - 1];
    if (r.closed_form_signal_residual > loose || r.closed_form_decoy_residual > loose) {
      r.notes.push_back(fmt::format(
          "closed-form policy (Z2_signal = 1, Z1_decoy = mu^2/(2 nu)) does not reproduce the "
          "honest gains: signal attacked/normal = {:.6g}, decoy attacked/normal = {:.6g} "
          "(mu/nu = {:.6g}); the LP policy above is used instead",
          ts > 0 ? as / ts : 0.0, td > 0 ? ad / td : 0.0, scenario.mu / scenario.nu));
    }
  }
  return r;
}

std::string format_report(const AttackReport& r) {
  std::ostringstream os;
  const auto& s = r.scenario;
  os << "USD attack on a source without phase randomization\n";
  os << fmt::format("  mu = {:.17g}\n  nu = {:.17g}\n  eta = {:.17g}\n  photon cutoff = {}\n", s.mu,
                    s.nu, s.eta, s.max_photon_number);
  os << fmt::format("  q_opt = {:.17g}\n", r.q_opt);
  os << fmt::format("  policy feasible = {}\n", r.feasible ? "true" : "false");
  if (r.policy) {
    const auto& p = *r.policy;
    os << fmt::format("  Z1_signal_min = {:.17g}\n", p.z1_signal_min);
    os << fmt::format("  matching tolerance = {:g}\n", p.tolerance);
    os << fmt::format("  signal gain residual = {:.6e}\n  decoy gain residual = {:.6e}\n",
                      p.signal_residual, p.decoy_residual);
    os << "  Z_signal =";
    for (double z : p.policy.signal) os << fmt::format(" {:.6g}", z);
    os << "\n  Z_decoy =";
    for (double z : p.policy.decoy) os << fmt::format(" {:.6g}", z);
    os << "\n";
  }
  if (r.honest) {
    os << fmt::format("  Y1_signal_lo = {:.17g}\n  Y1_decoy_lo = {:.17g}\n", r.honest->y1_signal,
                      r.honest->y1_decoy);
    os << fmt::format("  Y11_lo = {:.17g}\n  Y11_lo (linear solve) = {:.17g}\n", r.honest->y11,
                      r.honest->y11_linear);
  }
  os << fmt::format("  R_lower = {:.17g}\n  R_upper = {:.17g}\n", r.rate_lower, r.rate_upper);
  os << fmt::format("  closed-form residuals: signal = {:.6e}, decoy = {:.6e}\n",
                    r.closed_form_signal_residual, r.closed_form_decoy_residual);
  os << fmt::format("  success = {}\n", r.success ? "true" : "false");
  for (const auto& n : r.notes) os << "  note: " << n << "\n";
  return os.str();
}

}  // namespace dprmdi
