#pragma once

// Two-stage decoy-state estimation for sources with discrete phase
// randomization.  Yields of the approximated photon-number classes are no
// longer identical across intensity settings; they may differ by at most the
// deviation bound eps = sqrt(1 - F^2), and every constraint linking two
// settings is widened accordingly.
//
// Stage 1 fixes Bob's setting b and bounds Y_i^{mu,b} (or W_i^{mu,b}, the
// error-weighted counterpart) from the gains observed over Alice's settings.
// Stage 2 combines the stage-1 intervals over all b to bound Y_{i,j}^{mu,mu}.
//
// Only the K lowest classes are kept as LP variables.  The rest enter through
// one tail variable per setting: the signal tail t lies in [0, T_mu] and the
// tail at a weaker setting a is at most r_a t with
// r_a = e^{mu - a} (a / mu)^K, which dominates P_j^a / P_j^mu for every j >= K.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dprmdi/channel.hpp"
#include "dprmdi/fock_coherent.hpp"
#include "dprmdi/lp.hpp"

namespace dprmdi {

struct EstimationConfig {
  int truncation_K = 3;
  int num_decoys_M = 2;
  /// Replaces every computed deviation bound; testing hook.
  std::optional<double> epsilon_override;
  /// Number of epsilon doublings tried before an interval is declared vacuous.
  int max_widenings = 3;

  void validate() const;
};

struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  bool contains(double x, double slack = 0.0) const { return x >= lo - slack && x <= hi + slack; }
  double width() const { return hi - lo; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

enum class EstimationTarget { Gain, ErrorProduct };

/// Row-major grid of intervals, [outer][inner].
class IntervalGrid {
 public:
  IntervalGrid() = default;
  IntervalGrid(int rows, int cols) : rows_(rows), cols_(cols), cells_(rows * cols) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  Interval& operator()(int r, int c) { return cells_.at(r * cols_ + c); }
  const Interval& operator()(int r, int c) const { return cells_.at(r * cols_ + c); }
  friend bool operator==(const IntervalGrid&, const IntervalGrid&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Interval> cells_;
};

/// Stage-1 output: intervals[b][i] for Y_i^{mu,b} (or W_i^{mu,b}).
struct Stage1Bounds {
  EstimationTarget target = EstimationTarget::Gain;
  IntervalGrid intervals;
  std::vector<std::string> diagnostics;
};

/// Stage-2 output: intervals[i][j] for Y_{i,j}^{mu,mu} (or Y_{i,j} e_{i,j}).
struct Stage2Bounds {
  EstimationTarget target = EstimationTarget::Gain;
  IntervalGrid intervals;
  std::vector<std::string> diagnostics;
};

/// Which classes to estimate.  The key rate only needs class 1; diagnostics
/// want all of them.  Cells that are not estimated are left at [0, 1].
struct ClassSelection {
  std::optional<int> only;

  static ClassSelection all() { return {}; }
  static ClassSelection single(int i) { return {i}; }
  bool includes(int i) const { return !only || *only == i; }
};

struct YieldBounds {
  Stage1Bounds gain_stage1;
  Stage1Bounds error_stage1;
  Stage2Bounds gain;     ///< Y_{i,j}^{mu,mu}
  Stage2Bounds error;    ///< Y_{i,j}^{mu,mu} e_{i,j}^{mu,mu}
  double e11_upper = 1.0;
  bool e11_vacuous = true;

  std::vector<std::string> diagnostics() const;
};

/// Per-setting sources sharing one phase count; setting 0 is the signal.
std::vector<SourceConfig> make_sources(const PhaseCount& phases,
                                       const std::vector<double>& intensities);

/// eps = sqrt(1 - F_{mu nu}^2); exactly 0 in the continuous limit.
double compute_epsilon(const SourceConfig& signal, const SourceConfig& decoy,
                       const SeriesPolicy& policy = {});

Stage1Bounds estimate_stage1(const ObservedStats& stats, std::span<const SourceConfig> sources,
                             const EstimationConfig& est, EstimationTarget target,
                             ClassSelection selection = ClassSelection::all(),
                             const SeriesPolicy& policy = {});

Stage2Bounds estimate_stage2(const Stage1Bounds& stage1, std::span<const SourceConfig> sources,
                             const EstimationConfig& est, EstimationTarget target,
                             ClassSelection selection = ClassSelection::all(),
                             const SeriesPolicy& policy = {});

/// Both targets, both stages, plus the derived e_{1,1}^b upper bound.
/// With a single-class selection, stage 2 only fills the diagonal cell.
YieldBounds estimate_yield_bounds(const ObservedStats& stats,
                                  std::span<const SourceConfig> sources,
                                  const EstimationConfig& est = {},
                                  ClassSelection selection = ClassSelection::all(),
                                  const SeriesPolicy& policy = {});

/// min(1, (Y e)_{1,1}^{hi} / Y_{1,1}^{lo}); 1 (vacuous) when Y_{1,1}^{lo} = 0.
double error_rate_upper(const YieldBounds& bounds);

}  // namespace dprmdi
