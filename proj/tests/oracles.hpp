#pragma once

// Reference computations for the tests.  Nothing here calls into the solver
// or the estimator; the point is to get the same numbers a different way.

#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "dprmdi/channel.hpp"
#include "dprmdi/lp.hpp"

namespace oracle {

inline double poisson(double mu, int n) {
  if (mu == 0.0) return n == 0 ? 1.0 : 0.0;
  return std::exp(-mu + n * std::log(mu) - std::lgamma(n + 1.0));
}

/// Class probability by brute-force summation of the Poisson terms.
inline double class_prob(int phases, double mu, int j) {
  if (phases <= 0) return poisson(mu, j);  // continuous limit
  double s = 0.0;
  for (int n = j; n < 400; n += phases) s += poisson(mu, n);
  return s;
}

/// Fidelity bound for class j by summing the complex phase factors
/// directly: |sum_l 2^{-n/2} e^{i n pi/4} mu^n/n!| over the class with
/// normalization by the class weight.
inline double fidelity_bound(int phases, double mu, int j) {
  double num_re = 0.0;
  double den = 0.0;
  for (int n = j; n < 400; n += phases) {
    const double w = poisson(mu, n);
    const std::complex<double> ph = std::polar(std::pow(2.0, -n / 2.0), n * M_PI / 4.0);
    num_re += w * (ph.real() + ph.imag());
    den += w;
  }
  const double r = num_re / den;
  return std::min(1.0, r * r);
}

/// Overlap of the normalized class-j states at two intensities, from the
/// Poisson weights: sum_n sqrt(p_n(mu) p_n(nu)) / sqrt(P_j(mu) P_j(nu)).
inline double class_overlap(int phases, double mu, double nu, int j) {
  double s = 0.0;
  for (int n = j; n < 400; n += phases) s += std::sqrt(poisson(mu, n) * poisson(nu, n));
  return s / std::sqrt(class_prob(phases, mu, j) * class_prob(phases, nu, j));
}

inline double entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -(p * std::log(p) + (1.0 - p) * std::log1p(-p)) / std::log(2.0);
}

/// Single-party X/Y fidelity for class j from explicit two-mode Fock
/// vectors: reference pulse sqrt(mu/2), signal pulse s sqrt(mu/2) with
/// s in {1, -1} (X) or {i, -i} (Y), restricted to total photon number
/// congruent to j mod N.  Returns the two-party value (square).
inline double fock_fidelity(int phases, double mu, int j, int nmax = 48) {
  using cd = std::complex<double>;
  std::vector<std::pair<int, int>> index;
  for (int m = 0; m <= nmax; ++m) {
    for (int k = 0; m + k <= nmax; ++k) {
      if ((m + k) % phases == j % phases) index.emplace_back(m, k);
    }
  }
  const double amp = std::sqrt(mu / 2.0);
  auto state = [&](cd s) {
    Eigen::VectorXcd v(static_cast<Eigen::Index>(index.size()));
    for (std::size_t r = 0; r < index.size(); ++r) {
      const auto [m, k] = index[r];
      const cd a = std::pow(cd(amp, 0.0), m) * std::pow(s * amp, k);
      v[static_cast<Eigen::Index>(r)] = a / std::sqrt(std::tgamma(m + 1.0) * std::tgamma(k + 1.0));
    }
    return Eigen::VectorXcd(v / v.norm());
  };
  Eigen::MatrixXcd x(static_cast<Eigen::Index>(index.size()), 2);
  Eigen::MatrixXcd y(static_cast<Eigen::Index>(index.size()), 2);
  x.col(0) = state(cd(1, 0));
  x.col(1) = state(cd(-1, 0));
  y.col(0) = state(cd(0, 1));
  y.col(1) = state(cd(0, -1));
  const Eigen::MatrixXcd cross = 0.5 * x.adjoint() * y;
  const double f = Eigen::JacobiSVD<Eigen::MatrixXcd>(cross).singularValues().sum();
  return f * f;
}

struct VertexResult {
  bool feasible = false;
  Eigen::VectorXd min_value;  // per variable
  Eigen::VectorXd max_value;
  double objective_min = std::numeric_limits<double>::infinity();
  double objective_max = -std::numeric_limits<double>::infinity();
};

/// Enumerates every intersection of n hyperplanes drawn from the constraint
/// rows and the variable bounds, keeps the feasible ones and records the
/// extremes of each coordinate and of the objective.  Bounds must be finite
/// and the data roughly O(1); the slack is absolute below 1.
inline VertexResult enumerate_vertices(const dprmdi::LinearProgram& lp, double rel_tol = 1e-9) {
  const int n = lp.num_vars();
  struct Plane {
    Eigen::VectorXd a;
    double b;
  };
  std::vector<Plane> planes;
  std::vector<Plane> forced;
  // Equalities are active at every vertex, so an independent subset of them
  // can always be part of the defining set.  Dependent ones are left to the
  // feasibility check.
  for (const auto& c : lp.constraints()) {
    if (c.relation != dprmdi::Relation::Equal) {
      planes.push_back({c.coeffs, c.rhs});
      continue;
    }
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(forced.size()) + 1, n);
    for (std::size_t r = 0; r < forced.size(); ++r) rows.row(static_cast<Eigen::Index>(r)) = forced[r].a.transpose();
    rows.row(rows.rows() - 1) = c.coeffs.transpose();
    if (Eigen::FullPivLU<Eigen::MatrixXd>(rows).rank() == rows.rows()) forced.push_back({c.coeffs, c.rhs});
  }
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Unit(n, i);
    planes.push_back({e, lp.lower()[i]});
    planes.push_back({e, lp.upper()[i]});
  }

  auto feasible = [&](const Eigen::VectorXd& x) {
    for (int i = 0; i < n; ++i) {
      const double slack = rel_tol * std::max(1.0, std::abs(lp.upper()[i]));
      if (x[i] < lp.lower()[i] - slack || x[i] > lp.upper()[i] + slack) return false;
    }
    for (const auto& c : lp.constraints()) {
      const double v = c.coeffs.dot(x);
      const double scale = std::max({std::abs(c.rhs), c.coeffs.cwiseAbs().dot(x.cwiseAbs()), 1.0});
      const double slack = rel_tol * scale;
      switch (c.relation) {
        case dprmdi::Relation::Equal:
          if (std::abs(v - c.rhs) > slack) return false;
          break;
        case dprmdi::Relation::LessEqual:
          if (v > c.rhs + slack) return false;
          break;
        case dprmdi::Relation::GreaterEqual:
          if (v < c.rhs - slack) return false;
          break;
      }
    }
    return true;
  };

  VertexResult out;
  out.min_value = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  out.max_value = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
  const int need = n - static_cast<int>(forced.size());
  if (need < 0) return out;

  std::vector<int> pick(static_cast<std::size_t>(need));
  for (int i = 0; i < need; ++i) pick[i] = i;
  const int total = static_cast<int>(planes.size());
  while (true) {
    Eigen::MatrixXd a(n, n);
    Eigen::VectorXd b(n);
    int r = 0;
    for (const auto& f : forced) {
      a.row(r) = f.a.transpose();
      b[r++] = f.b;
    }
    for (int k : pick) {
      a.row(r) = planes[k].a.transpose();
      b[r++] = planes[k].b;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (lu.rank() == n) {
      const Eigen::VectorXd x = lu.solve(b);
      if (x.allFinite() && feasible(x)) {
        out.feasible = true;
        out.min_value = out.min_value.cwiseMin(x);
        out.max_value = out.max_value.cwiseMax(x);
        const double obj = lp.objective().dot(x);
        out.objective_min = std::min(out.objective_min, obj);
        out.objective_max = std::max(out.objective_max, obj);
      }
    }
    // next combination
    int i = need - 1;
    while (i >= 0 && pick[i] == total - need + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int k = i + 1; k < need; ++k) pick[k] = pick[k - 1] + 1;
  }
  return out;
}

/// Per-photon-number yields of the simulation model, one side:
/// y_n = Y0 + 1 - (1 - eta)^n.  d_n = 1 - (1 - eta)^n.
inline double side_yield(double y0, double eta, int n) { return y0 + 1.0 - std::pow(1.0 - eta, n); }
inline double side_detect(double eta, int n) { return 1.0 - std::pow(1.0 - eta, n); }

/// True (i, j) yield and yield-error product for classes of an N-phase
/// source at intensity mu, averaging the photon-number yields over each class
/// (phases <= 0 means photon numbers themselves).
struct TrueYields {
  double y11 = 0.0;
  double w11 = 0.0;
};

inline TrueYields true_yields(const dprmdi::ChannelParams& p, int phases, double mu, int i, int j) {
  const double eta = dprmdi::transmittance(p);
  const double y0 = p.dark_count;
  auto members = [&](int c) {
    std::vector<int> ns;
    if (phases <= 0) {
      ns.push_back(c);
    } else {
      for (int n = c; n < 300; n += phases) ns.push_back(n);
    }
    return ns;
  };
  double wi = 0.0, wj = 0.0, y = 0.0, w = 0.0;
  for (int n : members(i)) wi += poisson(mu, n);
  for (int m : members(j)) wj += poisson(mu, m);
  for (int n : members(i)) {
    for (int m : members(j)) {
      const double pw = poisson(mu, n) * poisson(mu, m) / (wi * wj);
      if (pw == 0.0) continue;
      const double dn = side_detect(eta, n);
      const double dm = side_detect(eta, m);
      y += pw * side_yield(y0, eta, n) * side_yield(y0, eta, m);
      w += pw * (y0 * (y0 + dn + dm) / 2.0 + p.misalignment * dn * dm);
    }
  }
  return {y, w};
}

}  // namespace oracle
