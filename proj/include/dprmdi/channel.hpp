#pragma once

// Symmetric-link simulation model: what an experiment would observe for each
// pair of intensity settings, given fiber loss, detector dark counts and
// misalignment.

#include <string>
#include <vector>

#include <Eigen/Core>

namespace dprmdi {

struct ChannelParams {
  double distance_km = 0.0;
  double fiber_loss_db_per_km = 0.2;
  double other_loss = 0.045;     ///< transmittance excluding fiber, in (0, 1]
  double misalignment = 0.033;   ///< e_d
  double dark_count = 1.7e-6;    ///< Y_0
  double ec_efficiency = 1.16;   ///< f >= 1

  void validate() const;
};

/// eta = 10^{-alpha L / 10} * eta_1.
double transmittance(const ChannelParams& params);

/// Signal, one decoy and the vacuum, in that order.
struct IntensitySettings {
  double signal = 0.5;
  double decoy = 0.1;

  void validate() const;
  /// {signal, decoy, 0}.
  std::vector<double> as_vector() const { return {signal, decoy, 0.0}; }
};

/// Setting labels used by files: "signal", "decoy", "vacuum" for the standard
/// three-setting layout; additional decoys are "decoy2", "decoy3", ...
std::string setting_name(int index, int num_settings);
/// Inverse of setting_name; throws std::invalid_argument on an unknown label.
int setting_index(const std::string& name, int num_settings);

/// Gains and error rates for every (Alice setting, Bob setting) pair.
/// Setting 0 is always the signal; the last one is conventionally the vacuum.
class ObservedStats {
 public:
  ObservedStats(std::vector<double> alice_intensities, std::vector<double> bob_intensities);

  int num_settings() const { return static_cast<int>(alice_.size()); }
  const std::vector<double>& alice_intensities() const { return alice_; }
  const std::vector<double>& bob_intensities() const { return bob_; }

  double gain(int a, int b) const { return gain_(a, b); }
  double error_rate(int a, int b) const { return error_(a, b); }
  /// Q * E, the quantity the error-product estimation works with.
  double error_product(int a, int b) const { return gain_(a, b) * error_(a, b); }
  /// True when the raw model error rate was pulled back into [0, 1/2].
  bool clamped(int a, int b) const { return clamped_(a, b) != 0; }

  /// Validates Q in [0,1] and E in [0,1/2].
  void set(int a, int b, double gain, double error_rate, bool clamped = false);

  const Eigen::MatrixXd& gains() const { return gain_; }
  const Eigen::MatrixXd& error_rates() const { return error_; }

 private:
  std::vector<double> alice_;
  std::vector<double> bob_;
  Eigen::MatrixXd gain_;
  Eigen::MatrixXd error_;
  Eigen::MatrixXi clamped_;
};

/// Q = (Y0 + 1 - e^{-eta m})(Y0 + 1 - e^{-eta n}),
/// EQ = Y0 (Y0 + 2 - e^{-eta m} - e^{-eta n}) / 2 + e_d (1 - e^{-eta m})(1 - e^{-eta n}).
/// Error rates above 1/2 (only the dark-count dominated vacuum pairs) are
/// clamped to 1/2 and flagged; Q = 0 gives E = 1/2, also flagged.
ObservedStats simulate_stats(const ChannelParams& params, const IntensitySettings& alice,
                             const IntensitySettings& bob);

/// Same model over arbitrary intensity lists.
ObservedStats simulate_stats(const ChannelParams& params, const std::vector<double>& alice,
                             const std::vector<double>& bob);

}  // namespace dprmdi
