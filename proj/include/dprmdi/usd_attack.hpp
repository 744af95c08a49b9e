#pragma once

// Unambiguous-state-discrimination attack on a source whose phase is not
// randomized at all.  Eve tells signal from decoy pulses with probability
// q_opt, then forwards photons with setting- and photon-number-dependent
// probabilities Z chosen so the observed gains look like an honest lossy
// channel.  If she can do that without ever forwarding single photons from
// signal pulses, the single-photon gain the honest parties estimate is
// entirely fictitious.
//
// This module uses the lossless-detector, dark-count-free channel of the
// attack analysis: Q_x = 1 - exp(-eta x).  It deliberately does not reuse the
// dark-count and misalignment model in channel.hpp.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dprmdi {

struct AttackScenario {
  double mu = 0.1;
  double nu = 0.02;
  double eta = 0.0;
  int max_photon_number = 10;

  /// eta = q_opt mu / 2, the operating point of the attack analysis.
  static AttackScenario standard(double mu, double nu, int max_photon_number = 10);
  void validate() const;
  /// mu > nu > mu^2 / 2, the regime the attack analysis assumes.
  bool in_analysed_regime() const;
};

/// Forwarding probabilities indexed by photon number - 1.
struct ForwardingPolicy {
  Eigen::VectorXd signal;
  Eigen::VectorXd decoy;
};

/// q_opt = 1 - exp(-|sqrt(mu) - sqrt(nu)|^2 / 4).
double usd_success_probability(double mu, double nu);

/// Gain Eve produces for one setting: sum_i q Z_i e^{-x} x^i / i! (i >= 1).
double attacked_gain(double q, double intensity, const Eigen::VectorXd& forwarding);

/// Honest-channel gain 1 - e^{-eta x}.
double normal_gain(double eta, double intensity);

/// Relative gain-matching tolerances tried in order.
inline constexpr double kMatchTolerances[] = {1e-6, 1e-4, 1e-2};

struct PolicyResult {
  ForwardingPolicy policy;
  double z1_signal_min = 0.0;
  double tolerance = 0.0;             ///< relative tolerance that made the LP feasible
  double signal_residual = 0.0;       ///< |attacked - normal| / normal (absolute if normal = 0)
  double decoy_residual = 0.0;
  double signal_tail_slack = 0.0;     ///< gain attributed to photon numbers above the cutoff
  double decoy_tail_slack = 0.0;
};

class AttackInfeasible : public std::runtime_error {
 public:
  AttackInfeasible(const std::string& constraint, const std::string& detail)
      : std::runtime_error(detail), constraint_(constraint) {}
  /// "signal gain" or "decoy gain".
  const std::string& constraint() const { return constraint_; }

 private:
  std::string constraint_;
};

/// Minimizes Z_1 on signal pulses subject to both gains matching the honest
/// channel.  Throws AttackInfeasible when no tolerance level admits a policy.
PolicyResult find_policy(const AttackScenario& scenario);

/// R^u = (q Z_1 e^{-mu} mu)^2: the single-photon gain that actually reaches
/// the measurement under the attack.
double attacked_key_rate_upper(const AttackScenario& scenario, const ForwardingPolicy& policy);

struct HonestEstimate {
  double y1_signal = 0.0;        ///< lower bound on Y^1_mu
  double y1_decoy = 0.0;         ///< lower bound on Y^1_nu
  double y11 = 0.0;              ///< closed-form two-step estimate of Y_{1,1}
  double y11_linear = 0.0;       ///< same estimate from explicit 2x2 solves
  double rate_lower = 0.0;       ///< R^l = Y_{1,1} (e^{-mu} mu)^2
};

/// The honest parties' two-step decoy estimate with no errors.  Throws
/// std::domain_error when mu == nu (the estimator is singular).
HonestEstimate estimated_key_rate_lower(const AttackScenario& scenario);

/// The closed-form policy of the attack analysis: Z_2 = 1 on signal pulses,
/// Z_1 = mu^2 / (2 nu) on decoy pulses, zero elsewhere.
ForwardingPolicy closed_form_policy(const AttackScenario& scenario);

struct AttackReport {
  AttackScenario scenario;
  double q_opt = 0.0;
  bool feasible = false;
  std::optional<PolicyResult> policy;
  std::optional<HonestEstimate> honest;
  double rate_upper = 0.0;
  double rate_lower = 0.0;
  bool success = false;          ///< R^l > R^u
  double closed_form_signal_residual = 0.0;
  double closed_form_decoy_residual = 0.0;
  std::vector<std::string> notes;
};

AttackReport attack_demo(const AttackScenario& scenario);

/// Human-readable multi-line report.
std::string format_report(const AttackReport& report);

}  // namespace dprmdi
