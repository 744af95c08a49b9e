#pragma once

// Coherent-state and photon-number-class mathematics for a source whose
// global phase is drawn from N equally spaced values (or uniformly, in the
// continuous limit).  Everything is parameterized by the mean photon number
// mu of the full pulse; amplitudes never appear.

#include <optional>
#include <string>

#include <Eigen/Core>

namespace dprmdi {

/// Number of discrete phase values, or the continuous (uniform) limit.
class PhaseCount {
 public:
  static PhaseCount discrete(int n);
  static PhaseCount continuous() { return PhaseCount{}; }
  /// Accepts a positive integer or "inf".
  static PhaseCount parse(const std::string& text);

  bool is_continuous() const { return !count_.has_value(); }
  /// Requires !is_continuous().
  int count() const;
  /// "inf" for the continuous limit.
  std::string to_string() const;

  friend bool operator==(const PhaseCount&, const PhaseCount&) = default;
  /// Orders discrete counts ascending with the continuous limit last.
  friend bool operator<(const PhaseCount& a, const PhaseCount& b);

 private:
  PhaseCount() = default;
  std::optional<int> count_;
};

class SourceConfig {
 public:
  SourceConfig(PhaseCount phases, double intensity);
  static SourceConfig discrete(int n, double intensity) {
    return {PhaseCount::discrete(n), intensity};
  }
  static SourceConfig continuous(double intensity) {
    return {PhaseCount::continuous(), intensity};
  }

  const PhaseCount& phases() const { return phases_; }
  bool is_continuous() const { return phases_.is_continuous(); }
  double intensity() const { return intensity_; }
  SourceConfig with_intensity(double intensity) const { return {phases_, intensity}; }

 private:
  PhaseCount phases_;
  double intensity_;
};

/// Truncation rule shared by every infinite series in this module.
struct SeriesPolicy {
  double relative_term_cutoff = 1e-16;
  int max_terms = 200;

  void validate() const;
};

/// P_j: probability that the phase-randomized pulse is found in the
/// approximated j-photon class, i.e. photon numbers congruent to j mod N.
/// For the continuous limit this is the Poisson mass at j.
double class_probability(const SourceConfig& cfg, int j, const SeriesPolicy& policy = {});

/// The first `count` class probabilities.
Eigen::VectorXd class_probabilities(const SourceConfig& cfg, int count,
                                    const SeriesPolicy& policy = {});

/// Lower bound on the fidelity between the two-party X-basis and Y-basis
/// source states restricted to class j.  Clamped to [0, 1]; exactly 1 in the
/// continuous limit.
double fidelity_bound_xy(const SourceConfig& cfg, int j, const SeriesPolicy& policy = {});

/// Leading-order expansion of the class-1 bound in mu^N:
/// 1 - 2 (1 - 2^{-N/2} cos(N pi / 4)) mu^N / (N+1)!.
double first_order_fidelity(const SourceConfig& cfg);

/// F_{mu nu}: fidelity between the class-j states at two intensities with the
/// same phase count.  1 in the continuous limit.
double fidelity_between_intensities(const SourceConfig& a, const SourceConfig& b,
                                    const SeriesPolicy& policy = {});

/// sqrt(1 - F^2): largest yield difference compatible with fidelity F.
double deviation_bound(double fidelity);

struct ExactFidelity {
  double value;            ///< two-party fidelity (single-party value squared)
  double gram_condition;   ///< condition number of the 4x4 Gram matrix
  int gram_rank;           ///< numerical rank of the span
};

/// Validation oracle, not used on the key-rate path.
///
/// Computes the exact fidelity that fidelity_bound_xy lower-bounds.  The four
/// logical states are represented only through their pairwise overlaps,
/// evaluated from closed-form coherent-state inner products, so no Fock-space
/// truncation is involved.  The single-party fidelity between the two
/// equal-weight rank-2 mixtures is the trace norm of the X/Y cross block of
/// the Gram matrix; the two-party value is its square.
ExactFidelity exact_fidelity_oracle(const SourceConfig& cfg, int j);

}  // namespace dprmdi
