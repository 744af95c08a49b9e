#include "dprmdi/channel.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace dprmdi {

void ChannelParams::validate() const {
  if (!(distance_km >= 0.0)) throw std::domain_error("distance_km must be >= 0");
  if (!(fiber_loss_db_per_km >= 0.0)) throw std::domain_error("fiber_loss_db_per_km must be >= 0");
  if (!(other_loss > 0.0 && other_loss <= 1.0)) throw std::domain_error("other_loss must be in (0, 1]");
  if (!(misalignment >= 0.0 && misalignment <= 0.5)) {
    throw std::domain_error("misalignment must be in [0, 0.5]");
  }
  if (!(dark_count >= 0.0 && dark_count < 1.0)) throw std::domain_error("dark_count must be in [0, 1)");
  if (!(ec_efficiency >= 1.0)) throw std::domain_error("ec_efficiency must be >= 1");
}

double transmittance(const ChannelParams& params) {
  params.validate();
  return std::pow(10.0, -params.fiber_loss_db_per_km * params.distance_km / 10.0) *
         params.other_loss;
}

void IntensitySettings::validate() const {
  if (!(decoy >= 0.0 && signal > decoy)) {
    throw std::domain_error(
        fmt::format("intensities need signal > decoy >= 0 (got {}, {})", signal, decoy));
  }
}

std::string setting_name(int index, int num_settings) {
  if (index < 0 || index >= num_settings) throw std::out_of_range("setting index");
  if (index == 0) return "signal";
  if (index == num_settings - 1) return "vacuum";
  if (index == 1) return "decoy";
  return fmt::format("decoy{}", index);
}

int setting_index(const std::string& name, int num_settings) {
  for (int i = 0; i < num_settings; ++i) {
    if (setting_name(i, num_settings) == name) return i;
  }
  throw std::invalid_argument(fmt::format("unknown setting '{}'", name));
}

ObservedStats::ObservedStats(std::vector<double> alice_intensities,
                             std::vector<double> bob_intensities)
    : alice_(std::move(alice_intensities)), bob_(std::move(bob_intensities)) {
  if (alice_.size() != bob_.size() || alice_.size() < 2) {
    throw std::invalid_argument("need matching setting lists with at least two settings");
  }
  const auto n = static_cast<Eigen::Index>(alice_.size());
  gain_ = Eigen::MatrixXd::Zero(n, n);
  error_ = Eigen::MatrixXd::Zero(n, n);
  clamped_ = Eigen::MatrixXi::Zero(n, n);
}

void ObservedStats::set(int a, int b, double gain, double error_rate, bool clamped) {
  if (!(gain >= 0.0 && gain <= 1.0)) {
    throw std::domain_error(fmt::format("gain {} outside [0, 1]", gain));
  }
  if (!(error_rate >= 0.0 && error_rate <= 0.5)) {
    throw std::domain_error(fmt::format("error rate {} outside [0, 1/2]", error_rate));
  }
  gain_(a, b) = gain;
  error_(a, b) = error_rate;
  clamped_(a, b) = clamped ? 1 : 0;
}

ObservedStats simulate_stats(const ChannelParams& params, const std::vector<double>& alice,
                             const std::vector<double>& bob) {
  const double eta = transmittance(params);
  const double y0 = params.dark_count;
  const double ed = params.misalignment;
  ObservedStats stats(alice, bob);
  for (int a = 0; a < stats.num_settings(); ++a) {
    for (int b = 0; b < stats.num_settings(); ++b) {
      // 1 - e^{-eta m}, without cancellation at small eta m.
      const double da = -std::expm1(-eta * alice[a]);
      const double db = -std::expm1(-eta * bob[b]);
      const double gain = (y0 + da) * (y0 + db);
      const double eq = y0 * (y0 + da + db) / 2.0 + ed * da * db;
      double e = gain > 0.0 ? eq / gain : 0.5;
      const bool clamp = gain == 0.0 || e > 0.5;
      e = std::min(e, 0.5);
      stats.set(a, b, gain, e, clamp);
    }
  }
  return stats;
}

ObservedStats simulate_stats(const ChannelParams& params, const IntensitySettings& alice,
                             const IntensitySettings& bob) {
  alice.validate();
  bob.validate();
  return simulate_stats(params, alice.as_vector(), bob.as_vector());
}

}  // namespace dprmdi
