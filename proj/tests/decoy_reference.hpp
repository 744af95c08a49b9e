#pragma once

// Decoy-state bounds coded from scratch: class probabilities by brute-force
// Poisson sums, every extreme point found by vertex enumeration.  Same
// program as the estimator (K classes, one tail per setting, tail_a <=
// r_a tail_0), nothing shared with it except the LinearProgram container.

#include <algorithm>
#include <cmath>
#include <vector>

#include "dprmdi/channel.hpp"
#include "oracles.hpp"

namespace oracle {

struct Band {
  double lo;
  double hi;
};

struct DecoyProgram {
  int phases = 0;  // <= 0 continuous
  std::vector<double> intensities;  // signal first
  int k = 3;
  std::vector<double> epsilon;  // per setting, 0 for the signal

  int classes() const { return phases > 0 ? std::min(k, phases) : k; }

  double prob(int a, int i) const { return class_prob(phases, intensities[a], i); }

  double tail(int a) const {
    double s = 0.0;
    for (int i = 0; i < classes(); ++i) s += prob(a, i);
    return std::max(0.0, 1.0 - s);
  }

  /// Extremes of y_0..y_{K-1} subject to the band rows.  Returns the
  /// enumeration result with min/max per variable.
  VertexResult bounds(const std::vector<Band>& bands) const {
    const int s = static_cast<int>(intensities.size());
    const int c = classes();
    const int n = c + s;
    // Rescale so the data is O(1); the enumeration tolerances are absolute
    // near zero and the gains can be 1e-9.
    double scale = 0.0;
    for (const auto& b : bands) scale = std::max({scale, std::abs(b.lo), std::abs(b.hi)});
    if (!(scale > 0.0)) scale = 1.0;
    Eigen::VectorXd lower = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd upper(n);
    for (int i = 0; i < c; ++i) upper[i] = 1.0 / scale;
    for (int a = 0; a < s; ++a) upper[c + a] = tail(a) / scale;
    dprmdi::LinearProgram lp(lower, upper);
    for (int a = 0; a < s; ++a) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
      for (int i = 0; i < c; ++i) row[i] = prob(a, i);
      row[c + a] = 1.0;
      const double lo = (bands[a].lo - epsilon[a]) / scale;
      const double hi = (bands[a].hi + epsilon[a]) / scale;
      if (lo == hi) {
        lp.add_constraint(row, dprmdi::Relation::Equal, lo);
      } else {
        lp.add_constraint(row, dprmdi::Relation::GreaterEqual, lo);
        lp.add_constraint(row, dprmdi::Relation::LessEqual, hi);
      }
    }
    const double mu = intensities[0];
    for (int a = 1; a < s; ++a) {
      const double x = intensities[a];
      if (!(x < mu) || tail(a) == 0.0) continue;
      Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
      row[c + a] = 1.0;
      row[c] = -(x == 0.0 ? 0.0 : std::exp(mu - x) * std::pow(x / mu, k));
      lp.add_constraint(row, dprmdi::Relation::LessEqual, 0.0);
    }
    lp.set_objective(Eigen::VectorXd::Zero(n), dprmdi::Sense::Minimize);
    VertexResult r = enumerate_vertices(lp);
    r.min_value *= scale;
    r.max_value *= scale;
    return r;
  }
};

struct DecoyReference {
  // stage1[b][i], stage2[i][j]
  std::vector<std::vector<Band>> stage1;
  std::vector<std::vector<Band>> stage2;
  bool feasible = true;
};

/// target: observed(a, b) values (gain or gain * error).
inline DecoyReference reference_bounds(const DecoyProgram& prog,
                                       const std::vector<std::vector<double>>& observed) {
  const int s = static_cast<int>(prog.intensities.size());
  const int c = prog.classes();
  DecoyReference out;
  out.stage1.assign(s, std::vector<Band>(c));
  for (int b = 0; b < s; ++b) {
    std::vector<Band> bands(s);
    for (int a = 0; a < s; ++a) bands[a] = {observed[a][b], observed[a][b]};
    const auto r = prog.bounds(bands);
    if (!r.feasible) {
      out.feasible = false;
      return out;
    }
    for (int i = 0; i < c; ++i) {
      out.stage1[b][i] = {std::clamp(r.min_value[i], 0.0, 1.0), std::clamp(r.max_value[i], 0.0, 1.0)};
    }
  }
  out.stage2.assign(c, std::vector<Band>(c));
  for (int i = 0; i < c; ++i) {
    std::vector<Band> bands(s);
    for (int b = 0; b < s; ++b) bands[b] = out.stage1[b][i];
    const auto r = prog.bounds(bands);
    if (!r.feasible) {
      out.feasible = false;
      return out;
    }
    for (int j = 0; j < c; ++j) {
      out.stage2[i][j] = {std::clamp(r.min_value[j], 0.0, 1.0), std::clamp(r.max_value[j], 0.0, 1.0)};
    }
  }
  return out;
}

inline std::vector<std::vector<double>> observed_matrix(const dprmdi::ObservedStats& stats,
                                                        bool error_product) {
  const int s = stats.num_settings();
  std::vector<std::vector<double>> m(s, std::vector<double>(s));
  for (int a = 0; a < s; ++a) {
    for (int b = 0; b < s; ++b) m[a][b] = error_product ? stats.error_product(a, b) : stats.gain(a, b);
  }
  return m;
}

}  // namespace oracle
