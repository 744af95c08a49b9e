#pragma once

// Subcommand bodies shared by the command-line tool and the tests.  Each
// sweep returns its rows sorted by (num_phases, x) with the continuous limit
// last, so output never depends on thread scheduling.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dprmdi/config.hpp"
#include "dprmdi/usd_attack.hpp"

namespace dprmdi {

struct KeyRateRow {
  PhaseCount phases = PhaseCount::continuous();
  double distance_km = 0.0;
  double mu_opt = 0.0;
  double nu_opt = 0.0;
  double key_rate = 0.0;
  double raw_rate = 0.0;
  double y11_lo = 0.0;
  double e11b_hi = 0.0;
  double f11 = 0.0;
  double delta = 0.0;
  double phase_error = 0.0;
};

struct NoiseRow {
  PhaseCount phases = PhaseCount::continuous();
  double e11b = 0.0;
  double key_rate = 0.0;
  double raw_rate = 0.0;
};

std::vector<KeyRateRow> keyrate_sweep(const ExperimentConfig& config, int threads = 1);
std::vector<NoiseRow> noise_sweep(const ExperimentConfig& config, int threads = 1);

void write_keyrate_csv(std::ostream& os, const std::vector<KeyRateRow>& rows);
void write_noise_csv(std::ostream& os, const std::vector<NoiseRow>& rows);

/// First sign change of raw_rate from positive to non-positive along e11b,
/// linearly interpolated.  Empty when the rate never turns off (or is never
/// positive).
std::optional<double> noise_threshold(const std::vector<NoiseRow>& rows, const PhaseCount& phases);

/// Largest distance with a positive key rate; empty when there is none.
std::optional<double> max_positive_distance(const std::vector<KeyRateRow>& rows,
                                            const PhaseCount& phases);

/// Stats CSV: header alice_setting,bob_setting,gain,error_rate; settings are
/// "signal", "decoy", "vacuum" or their indices 0, 1, 2.
void write_stats_csv(std::ostream& os, const ObservedStats& stats);
ObservedStats read_stats_csv(std::istream& is, const IntensitySettings& intensities);

/// Bounds report CSV: num_phases,quantity,first,second,lo,hi.
void write_bounds_csv(std::ostream& os, const PhaseCount& phases, const YieldBounds& bounds);

/// Key-value record of an attack run.
void write_attack_record(std::ostream& os, const AttackReport& report);

AttackScenario attack_scenario(const AttackSettings& settings);

// File-writing wrappers used by the CLI.  They throw std::runtime_error
// naming the path when it cannot be written.
void cmd_keyrate_sweep(const ExperimentConfig& config, const std::filesystem::path& out, int threads);
void cmd_noise_sweep(const ExperimentConfig& config, const std::filesystem::path& out, int threads);
/// Writes the report to `out` and the record to `out` + ".csv".  Returns the
/// process exit code: 0 when a forwarding policy exists, 2 otherwise.
int cmd_attack_demo(const ExperimentConfig& config, const std::filesystem::path& out);
/// Returns the diagnostics produced by the estimator.
std::vector<std::string> cmd_estimate(const ExperimentConfig& config,
                                      const std::filesystem::path& out);

}  // namespace dprmdi
