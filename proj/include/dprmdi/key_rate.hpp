#pragma once

#include <optional>
#include <vector>

#include "dprmdi/channel.hpp"
#include "dprmdi/decoy_estimator.hpp"
#include "dprmdi/fock_coherent.hpp"

namespace dprmdi {

/// H(p) in bits, H(0) = H(1) = 0.
double binary_entropy(double p);

/// Basis-dependence bias min(1/2, (1 - F) / (2 Y)); 1/2 (vacuous) when Y <= 0.
double delta_bias(double fidelity, double yield);

/// Upper bound on the phase error from the bit error and the bias:
/// min(1/2, e + 4 D (1-D)(1-2e) + 4 (1-2D) sqrt(D (1-D) e (1-e))).
double phase_error_upper(double bit_error, double delta);

struct KeyRateInputs {
  double q_rect = 0.0;        ///< signal-signal gain
  double e_rect = 0.0;        ///< signal-signal error rate
  double p1 = 0.0;            ///< P_1 at the signal intensity
  double y11_lo = 0.0;
  double e11b_hi = 0.5;
  double f11 = 1.0;           ///< class-1 X/Y fidelity bound
  double ec_efficiency = 1.16;

  void validate() const;
};

struct KeyRateReport {
  double rate = 0.0;          ///< max(0, raw_rate)
  double raw_rate = 0.0;      ///< pa_term - ec_term
  double ec_term = 0.0;
  double pa_term = 0.0;
  double delta = 0.0;
  double phase_error = 0.5;
  bool delta_vacuous = false;
};

/// Error-correction cost minus the privacy-amplification credit of the
/// (1,1) class.  Every other class contributes at least zero and is dropped.
KeyRateReport key_rate(const KeyRateInputs& in);

/// Full simulation pipeline at one operating point.
struct PipelineResult {
  KeyRateInputs inputs;
  KeyRateReport report;
  double epsilon = 0.0;       ///< deviation bound signal vs decoy
  std::vector<std::string> diagnostics;
};

struct PipelineOptions {
  EstimationConfig estimation;
  SeriesPolicy series;
  /// Replaces the estimated e_{1,1}^b upper bound (noise-level sweeps).
  std::optional<double> e11b_override;
};

PipelineResult evaluate_key_rate(const ChannelParams& params, const PhaseCount& phases,
                                 const IntensitySettings& intensities,
                                 const PipelineOptions& options = {});

/// Geometric search grid: mu_points values in [mu_min, mu_max] and, for each
/// mu, nu_points values in [nu_min, mu).
struct IntensityGrid {
  int mu_points = 40;
  int nu_points = 40;
  double mu_min = 0.01;
  double mu_max = 1.0;
  double nu_min = 0.001;

  void validate() const;
  std::vector<IntensitySettings> points() const;
};

struct OptimizedRate {
  IntensitySettings intensities;
  PipelineResult result;
  bool all_zero = false;      ///< no grid point gave a positive rate
};

/// Exhaustive grid search for the largest rate; ties go to the
/// lexicographically smallest (mu, nu).  `threads` = 0 uses every core.
OptimizedRate optimize_intensities(const ChannelParams& params, const PhaseCount& phases,
                                   const IntensityGrid& grid, const PipelineOptions& options = {},
                                   int threads = 1);

}  // namespace dprmdi
