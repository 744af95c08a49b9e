#pragma once

// Experiment configuration: INI file with flat key = value sections.  Every
// key is optional; missing keys keep the defaults below.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dprmdi/channel.hpp"
#include "dprmdi/decoy_estimator.hpp"
#include "dprmdi/fock_coherent.hpp"
#include "dprmdi/key_rate.hpp"

namespace dprmdi {

struct Range {
  double start = 0.0;
  double stop = 0.0;
  double step = 1.0;

  void validate(const char* what) const;
  /// start, start + step, ... up to stop (inclusive, with a 1e-9 step slack).
  std::vector<double> values() const;
};

struct NoiseSweep {
  double distance_km = 0.0;
  Range e11b{0.0, 0.15, 0.0025};
  /// Also drive the misalignment e_d with the injected level, so the
  /// observed error rate moves with it.
  bool couple_misalignment = true;
};

struct AttackSettings {
  double mu = 0.1;
  double nu = 0.02;
  int cutoff = 10;
  std::optional<double> eta;  ///< default q_opt mu / 2
};

struct EstimateSettings {
  std::string stats_csv;
  double signal = 0.5;
  double decoy = 0.1;
};

struct ExperimentConfig {
  ChannelParams channel;
  std::vector<PhaseCount> phases{PhaseCount::discrete(9),  PhaseCount::discrete(10),
                                 PhaseCount::discrete(11), PhaseCount::discrete(12),
                                 PhaseCount::discrete(14), PhaseCount::continuous()};
  Range distance{0.0, 150.0, 5.0};
  NoiseSweep noise;
  IntensityGrid grid;
  EstimationConfig estimation;
  SeriesPolicy series;
  std::string output = "output.csv";
  AttackSettings attack;
  EstimateSettings estimate;

  void validate() const;
};

/// Reads an INI file.  Throws std::runtime_error naming the file on parse
/// errors, unknown sections or keys, and bad values.
ExperimentConfig load_config(const std::filesystem::path& path);

/// "9, 10, inf" -> phase counts.
std::vector<PhaseCount> parse_phase_list(const std::string& text);

}  // namespace dprmdi
