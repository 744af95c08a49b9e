#include "dprmdi/decoy_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace dprmdi {

void EstimationConfig::validate() const {
  if (truncation_K < 2) throw std::domain_error("truncation_K must be >= 2");
  if (num_decoys_M < 1) throw std::domain_error("num_decoys_M must be >= 1");
  if (epsilon_override && !(*epsilon_override >= 0.0)) {
    throw std::domain_error("epsilon_override must be >= 0");
  }
  if (max_widenings < 0) throw std::domain_error("max_widenings must be >= 0");
}

std::vector<std::string> YieldBounds::diagnostics() const {
  std::vector<std::string> all;
  for (const auto* d : {&gain_stage1.diagnostics, &error_stage1.diagnostics, &gain.diagnostics,
                        &error.diagnostics}) {
    all.insert(all.end(), d->begin(), d->end());
  }
  return all;
}

std::vector<SourceConfig> make_sources(const PhaseCount& phases,
                                       const std::vector<double>& intensities) {
  std::vector<SourceConfig> out;
  out.reserve(intensities.size());
  for (double mu : intensities) out.emplace_back(phases, mu);
  return out;
}

double compute_epsilon(const SourceConfig& signal, const SourceConfig& decoy,
                       const SeriesPolicy& policy) {
  if (signal.is_continuous() && decoy.is_continuous()) return 0.0;
  return deviation_bound(fidelity_between_intensities(signal, decoy, policy));
}

namespace {

const char* target_name(EstimationTarget t) {
  return t == EstimationTarget::Gain ? "gain" : "error-product";
}

// Everything the band LPs need about the sources, computed once.
struct SourceTables {
  int classes = 0;                 // K, or N when N < K
  Eigen::MatrixXd prob;            // prob(a, i) = P_i at setting a
  Eigen::VectorXd tail;            // 1 - sum_{i<K} P_i at setting a
  Eigen::VectorXd tail_ratio;      // r_a, +inf when no coupling applies
  Eigen::VectorXd epsilon;         // deviation bound against the signal setting

  SourceTables(std::span<const SourceConfig> sources, const EstimationConfig& est,
               const SeriesPolicy& policy) {
    est.validate();
    const int settings = static_cast<int>(sources.size());
    if (settings != est.num_decoys_M + 1) {
      throw std::invalid_argument(fmt::format("{} settings given, num_decoys_M = {} expects {}",
                                              settings, est.num_decoys_M, est.num_decoys_M + 1));
    }
    const auto& phases = sources[0].phases();
    for (const auto& s : sources) {
      if (!(s.phases() == phases)) throw std::invalid_argument("settings use different phase counts");
    }
    classes = phases.is_continuous() ? est.truncation_K
                                     : std::min(est.truncation_K, phases.count());
    const double mu = sources[0].intensity();
    prob.resize(settings, classes);
    tail.resize(settings);
    tail_ratio.resize(settings);
    epsilon.resize(settings);
    for (int a = 0; a < settings; ++a) {
      prob.row(a) = class_probabilities(sources[a], classes, policy).transpose();
      tail[a] = std::max(0.0, 1.0 - prob.row(a).sum());
      const double x = sources[a].intensity();
      if (a == 0) {
        tail_ratio[a] = 1.0;
      } else if (x == 0.0) {
        tail_ratio[a] = 0.0;
      } else if (x < mu) {
        tail_ratio[a] = std::exp(mu - x + est.truncation_K * std::log(x / mu));
      } else {
        tail_ratio[a] = std::numeric_limits<double>::infinity();
      }
      epsilon[a] = a == 0 ? 0.0
                   : est.epsilon_override ? *est.epsilon_override
                                          : compute_epsilon(sources[0], sources[a], policy);
    }
  }

  int settings() const { return static_cast<int>(prob.rows()); }
};

// Bounds on one variable of
//   row a:  band_lo[a] <= sum_i P(a,i) y_i + tail_a <= band_hi[a]
// with tail_0 = t in [0, T_0], tail_a in [0, T_a], tail_a <= r_a t,
// 0 <= y_i <= 1.  Rows a > 0 are widened by their epsilon.
class BandProgram {
 public:
  BandProgram(const SourceTables& tables, std::vector<Interval> bands, double widen_floor)
      : tables_(tables), bands_(std::move(bands)), widen_floor_(widen_floor) {}

  struct Result {
    Interval interval;
    bool feasible = false;
    int widenings = 0;
  };

  Result bound(int variable, int max_widenings) const {
    for (int k = 0; k <= max_widenings; ++k) {
      const LinearProgram base = build(k);
      LinearProgram lp = base;
      Eigen::VectorXd c = Eigen::VectorXd::Zero(base.num_vars());
      c[variable] = 1.0;
      lp.set_objective(c, Sense::Minimize);
      const LpSolution lo = solve(lp);
      if (lo.status != LpStatus::Optimal) continue;
      lp.set_objective(c, Sense::Maximize);
      const LpSolution hi = solve(lp);
      if (hi.status != LpStatus::Optimal) continue;
      const double a = std::clamp(lo.objective_value * scale_, 0.0, 1.0);
      const double b = std::clamp(hi.objective_value * scale_, 0.0, 1.0);
      return {{std::min(a, b), std::max(a, b)}, true, k};
    }
    return {{0.0, 1.0}, false, max_widenings};
  }

 private:
  LinearProgram build(int widening) const {
    const int settings = tables_.settings();
    const int classes = tables_.classes;
    const int n = classes + settings;  // y_0..y_{K-1}, tail_0..tail_{S-1}

    // Work in units of the data so tolerances are relative to the gains.
    scale_ = 0.0;
    for (const auto& b : bands_) scale_ = std::max({scale_, std::abs(b.lo), std::abs(b.hi)});
    if (!(scale_ > 0.0)) scale_ = 1.0;

    Eigen::VectorXd lower = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd upper(n);
    upper.head(classes).setConstant(1.0 / scale_);
    for (int a = 0; a < settings; ++a) upper[classes + a] = tables_.tail[a] / scale_;
    LinearProgram lp(lower, upper);

    const double factor = std::ldexp(1.0, widening);
    for (int a = 0; a < settings; ++a) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
      row.head(classes) = tables_.prob.row(a).transpose();
      row[classes + a] = 1.0;
      double eps = tables_.epsilon[a];
      if (a > 0 && widening > 0) eps = factor * std::max(eps, widen_floor_);
      const double lo = (bands_[a].lo - eps) / scale_;
      const double hi = (bands_[a].hi + eps) / scale_;
      if (lo == hi) {
        lp.add_constraint(row, Relation::Equal, lo);
      } else {
        lp.add_range(row, lo, hi);
      }
    }
    for (int a = 1; a < settings; ++a) {
      if (!std::isfinite(tables_.tail_ratio[a]) || tables_.tail[a] == 0.0) continue;
      Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
      row[classes + a] = 1.0;
      row[classes] = -tables_.tail_ratio[a];
      lp.add_constraint(row, Relation::LessEqual, 0.0);
    }
    return lp;
  }

  const SourceTables& tables_;
  std::vector<Interval> bands_;
  double widen_floor_;
  mutable double scale_ = 1.0;
};

double observed(const ObservedStats& stats, EstimationTarget target, int a, int b) {
  return target == EstimationTarget::Gain ? stats.gain(a, b) : stats.error_product(a, b);
}

void check_stats(const ObservedStats& stats, std::span<const SourceConfig> sources) {
  if (stats.num_settings() != static_cast<int>(sources.size())) {
    throw std::invalid_argument(fmt::format("statistics cover {} settings, sources give {}",
                                            stats.num_settings(), sources.size()));
  }
  for (int a = 0; a < stats.num_settings(); ++a) {
    if (stats.alice_intensities()[a] != sources[a].intensity() ||
        stats.bob_intensities()[a] != sources[a].intensity()) {
      throw std::invalid_argument(
          fmt::format("setting {} intensity does not match the source configuration", a));
    }
  }
}

// Relative widening applied when a zero epsilon has to be doubled.
constexpr double kRelativeWidenFloor = 1e-6;

}  // namespace

Stage1Bounds estimate_stage1(const ObservedStats& stats, std::span<const SourceConfig> sources,
                             const EstimationConfig& est, EstimationTarget target,
                             ClassSelection selection, const SeriesPolicy& policy) {
  check_stats(stats, sources);
  const SourceTables tables(sources, est, policy);
  const int settings = tables.settings();
  Stage1Bounds out{target, IntervalGrid(settings, est.truncation_K), {}};

  for (int b = 0; b < settings; ++b) {
    std::vector<Interval> bands(settings);
    double magnitude = 0.0;
    for (int a = 0; a < settings; ++a) {
      const double o = observed(stats, target, a, b);
      bands[a] = {o, o};
      magnitude = std::max(magnitude, o);
    }
    const BandProgram program(tables, bands, kRelativeWidenFloor * magnitude);
    for (int i = 0; i < tables.classes; ++i) {
      if (!selection.includes(i)) continue;
      const auto r = program.bound(i, est.max_widenings);
      out.intervals(b, i) = r.interval;
      if (!r.feasible) {
        out.diagnostics.push_back(fmt::format(
            "stage 1 {} bob={} class {}: infeasible after {} widenings, interval set to [0,1]",
            target_name(target), setting_name(b, settings), i, est.max_widenings));
      } else if (r.widenings > 0) {
        out.diagnostics.push_back(fmt::format("stage 1 {} bob={} class {}: epsilon doubled {}x",
                                              target_name(target), setting_name(b, settings), i,
                                              r.widenings));
      }
    }
  }
  return out;
}

Stage2Bounds estimate_stage2(const Stage1Bounds& stage1, std::span<const SourceConfig> sources,
                             const EstimationConfig& est, EstimationTarget target,
                             ClassSelection selection, const SeriesPolicy& policy) {
  const SourceTables tables(sources, est, policy);
  const int settings = tables.settings();
  if (stage1.intervals.rows() != settings) {
    throw std::invalid_argument("stage-1 bounds do not match the number of settings");
  }
  Stage2Bounds out{target, IntervalGrid(est.truncation_K, est.truncation_K), {}};

  for (int i = 0; i < tables.classes; ++i) {
    if (!selection.includes(i)) continue;
    std::vector<Interval> bands(settings);
    double magnitude = 0.0;
    for (int b = 0; b < settings; ++b) {
      bands[b] = stage1.intervals(b, i);
      magnitude = std::max(magnitude, bands[b].hi);
    }
    const BandProgram program(tables, bands, kRelativeWidenFloor * magnitude);
    for (int j = 0; j < tables.classes; ++j) {
      if (selection.only && j != *selection.only) continue;
      const auto r = program.bound(j, est.max_widenings);
      out.intervals(i, j) = r.interval;
      if (!r.feasible) {
        out.diagnostics.push_back(
            fmt::format("stage 2 {} class ({},{}): infeasible after {} widenings, interval set to [0,1]",
                        target_name(target), i, j, est.max_widenings));
      } else if (r.widenings > 0) {
        out.diagnostics.push_back(fmt::format("stage 2 {} class ({},{}): epsilon doubled {}x",
                                              target_name(target), i, j, r.widenings));
      }
    }
  }
  return out;
}

double error_rate_upper(const YieldBounds& bounds) {
  if (bounds.gain.intervals.rows() < 2) return 1.0;
  const double y_lo = bounds.gain.intervals(1, 1).lo;
  const double w_hi = bounds.error.intervals(1, 1).hi;
  if (w_hi <= 0.0) return 0.0;
  if (!(y_lo > 0.0)) return 1.0;
  return std::min(1.0, w_hi / y_lo);
}

YieldBounds estimate_yield_bounds(const ObservedStats& stats,
                                  std::span<const SourceConfig> sources,
                                  const EstimationConfig& est, ClassSelection selection,
                                  const SeriesPolicy& policy) {
  YieldBounds out;
  out.gain_stage1 = estimate_stage1(stats, sources, est, EstimationTarget::Gain, selection, policy);
  out.error_stage1 =
      estimate_stage1(stats, sources, est, EstimationTarget::ErrorProduct, selection, policy);
  out.gain = estimate_stage2(out.gain_stage1, sources, est, EstimationTarget::Gain, selection, policy);
  out.error = estimate_stage2(out.error_stage1, sources, est, EstimationTarget::ErrorProduct,
                              selection, policy);
  out.e11_upper = error_rate_upper(out);
  out.e11_vacuous = !(out.gain.intervals(1, 1).lo > 0.0) && out.error.intervals(1, 1).hi > 0.0;
  return out;
}

}  // namespace dprmdi
