#include "dprmdi/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/LU>
#include <fmt/format.h>

namespace dprmdi {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal:
      return "OPTIMAL";
    case LpStatus::Infeasible:
      return "INFEASIBLE";
    case LpStatus::Unbounded:
      return "UNBOUNDED";
  }
  return "?";
}

LinearProgram::LinearProgram(Eigen::VectorXd lower, Eigen::VectorXd upper)
    : lower_(std::move(lower)), upper_(std::move(upper)), objective_(Eigen::VectorXd::Zero(lower_.size())) {
  if (lower_.size() != upper_.size()) {
    throw std::invalid_argument("lower and upper bound vectors differ in length");
  }
  if (lower_.size() == 0) throw std::invalid_argument("linear program without variables");
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    if (!std::isfinite(lower_[i])) {
      throw std::invalid_argument(fmt::format("lower bound of x{} must be finite", i));
    }
    if (std::isnan(upper_[i]) || upper_[i] < lower_[i]) {
      throw std::invalid_argument(fmt::format("bounds of x{} are inconsistent ([{}, {}])", i,
                                              lower_[i], upper_[i]));
    }
  }
}

void LinearProgram::check_vector(const Eigen::VectorXd& v, const char* what) const {
  if (v.size() != lower_.size()) {
    throw std::invalid_argument(
        fmt::format("{} has length {}, expected {}", what, v.size(), lower_.size()));
  }
  if (!v.allFinite()) throw std::invalid_argument(fmt::format("{} has non-finite entries", what));
}

LinearProgram& LinearProgram::add_constraint(Eigen::VectorXd coeffs, Relation relation,
                                             double rhs) {
  check_vector(coeffs, "constraint row");
  if (!std::isfinite(rhs)) throw std::invalid_argument("constraint right-hand side is not finite");
  constraints_.push_back({std::move(coeffs), relation, rhs});
  return *this;
}

LinearProgram& LinearProgram::add_range(const Eigen::VectorXd& coeffs, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument(fmt::format("empty range [{}, {}]", lo, hi));
  add_constraint(coeffs, Relation::GreaterEqual, lo);
  return add_constraint(coeffs, Relation::LessEqual, hi);
}

LinearProgram& LinearProgram::set_objective(Eigen::VectorXd coeffs, Sense sense) {
  check_vector(coeffs, "objective");
  objective_ = std::move(coeffs);
  sense_ = sense;
  return *this;
}

double max_constraint_violation(const LinearProgram& lp, const Eigen::VectorXd& x) {
  double worst = 0.0;
  for (const auto& c : lp.constraints()) {
    const double lhs = c.coeffs.dot(x);
    double v = 0.0;
    switch (c.relation) {
      case Relation::Equal:
        v = std::abs(lhs - c.rhs);
        break;
      case Relation::LessEqual:
        v = std::max(0.0, lhs - c.rhs);
        break;
      case Relation::GreaterEqual:
        v = std::max(0.0, c.rhs - lhs);
        break;
    }
    worst = std::max(worst, v);
  }
  return worst;
}

namespace {

enum class VarState { Basic, AtLower, AtUpper };

// Standard form A x = b, l <= x <= u over structural, slack and artificial
// columns, with rows equilibrated to unit max-norm.
class BoundedSimplex {
 public:
  BoundedSimplex(const LinearProgram& lp, const SolverTolerances& tol) : tol_(tol) {
    n_struct_ = lp.num_vars();
    std::vector<Eigen::VectorXd> rows;
    std::vector<double> rhs;
    std::vector<int> slack_sign;
    for (const auto& c : lp.constraints()) {
      const double scale = c.coeffs.cwiseAbs().maxCoeff();
      if (scale == 0.0) {
        // Constant row: either trivially satisfied or the program is infeasible.
        const bool ok = (c.relation == Relation::Equal && std::abs(c.rhs) <= tol.feasibility) ||
                        (c.relation == Relation::LessEqual && c.rhs >= -tol.feasibility) ||
                        (c.relation == Relation::GreaterEqual && c.rhs <= tol.feasibility);
        if (!ok) trivially_infeasible_ = true;
        continue;
      }
      rows.push_back(c.coeffs / scale);
      rhs.push_back(c.rhs / scale);
      slack_sign.push_back(c.relation == Relation::LessEqual     ? 1
                           : c.relation == Relation::GreaterEqual ? -1
                                                                  : 0);
    }
    m_ = static_cast<int>(rows.size());
    int n_slack = 0;
    for (int s : slack_sign) n_slack += s != 0 ? 1 : 0;
    first_artificial_ = n_struct_ + n_slack;
    n_ = first_artificial_ + m_;

    a_ = Eigen::MatrixXd::Zero(m_, n_);
    b_ = Eigen::VectorXd(m_);
    lower_ = Eigen::VectorXd::Zero(n_);
    upper_ = Eigen::VectorXd::Constant(n_, kInf);
    lower_.head(n_struct_) = lp.lower();
    upper_.head(n_struct_) = lp.upper();
    int slack = n_struct_;
    for (int r = 0; r < m_; ++r) {
      a_.row(r).head(n_struct_) = rows[r].transpose();
      b_[r] = rhs[r];
      if (slack_sign[r] != 0) a_(r, slack++) = slack_sign[r];
    }

    state_.assign(n_, VarState::AtLower);
    // Artificial columns absorb the initial residual with a nonnegative value.
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n_);
    x.head(n_struct_) = lower_.head(n_struct_);
    const Eigen::VectorXd residual = b_ - a_.leftCols(first_artificial_) * x.head(first_artificial_);
    basis_.resize(m_);
    for (int r = 0; r < m_; ++r) {
      const int col = first_artificial_ + r;
      a_(r, col) = residual[r] < 0.0 ? -1.0 : 1.0;
      basis_[r] = col;
      state_[col] = VarState::Basic;
    }
    rhs_scale_ = std::max(1.0, b_.size() ? b_.cwiseAbs().maxCoeff() : 0.0);
  }

  LpSolution run(const LinearProgram& lp) {
    LpSolution out;
    if (trivially_infeasible_) return out;
    if (m_ == 0) return solve_box(lp);

    Eigen::VectorXd phase1_cost = Eigen::VectorXd::Zero(n_);
    phase1_cost.tail(m_).setOnes();
    if (iterate(phase1_cost, out.iterations) == Outcome::Unbounded) {
      throw std::logic_error("phase I of the simplex cannot be unbounded");
    }
    const Eigen::VectorXd x1 = primal();
    if (x1.tail(m_).sum() > tol_.feasibility * rhs_scale_) {
      out.status = LpStatus::Infeasible;
      out.values = x1.head(n_struct_);
      return out;
    }
    // Artificials are pinned at zero for the second phase.
    for (int col = first_artificial_; col < n_; ++col) upper_[col] = 0.0;

    Eigen::VectorXd cost = Eigen::VectorXd::Zero(n_);
    cost.head(n_struct_) = lp.sense() == Sense::Minimize ? lp.objective() : Eigen::VectorXd(-lp.objective());
    if (iterate(cost, out.iterations) == Outcome::Unbounded) {
      out.status = LpStatus::Unbounded;
      out.objective_value = lp.sense() == Sense::Minimize ? -kInf : kInf;
      return out;
    }
    Eigen::VectorXd x = primal().head(n_struct_);
    x = x.cwiseMax(lp.lower()).cwiseMin(lp.upper());
    out.status = LpStatus::Optimal;
    out.values = x;
    out.objective_value = lp.objective().dot(x);
    return out;
  }

 private:
  enum class Outcome { Optimal, Unbounded };

  // No rows: every variable sits independently at its better bound.
  static LpSolution solve_box(const LinearProgram& lp) {
    LpSolution out;
    const double sign = lp.sense() == Sense::Minimize ? 1.0 : -1.0;
    out.values = lp.lower();
    for (int j = 0; j < lp.num_vars(); ++j) {
      if (sign * lp.objective()[j] < 0.0) {
        if (!std::isfinite(lp.upper()[j])) {
          out.status = LpStatus::Unbounded;
          out.objective_value = sign > 0 ? -kInf : kInf;
          return out;
        }
        out.values[j] = lp.upper()[j];
      }
    }
    out.status = LpStatus::Optimal;
    out.objective_value = lp.objective().dot(out.values);
    return out;
  }

  double nonbasic_value(int j) const {
    return state_[j] == VarState::AtUpper ? upper_[j] : lower_[j];
  }

  void factorize() {
    Eigen::MatrixXd basis_matrix(m_, m_);
    for (int r = 0; r < m_; ++r) basis_matrix.col(r) = a_.col(basis_[r]);
    lu_.compute(basis_matrix);
  }

  Eigen::VectorXd basic_values() const {
    Eigen::VectorXd rhs = b_;
    for (int j = 0; j < n_; ++j) {
      if (state_[j] != VarState::Basic) rhs -= a_.col(j) * nonbasic_value(j);
    }
    return lu_.solve(rhs);
  }

  Eigen::VectorXd primal() {
    factorize();
    Eigen::VectorXd x(n_);
    for (int j = 0; j < n_; ++j) {
      if (state_[j] != VarState::Basic) x[j] = nonbasic_value(j);
    }
    const Eigen::VectorXd xb = basic_values();
    for (int r = 0; r < m_; ++r) x[basis_[r]] = xb[r];
    return x;
  }

  Outcome iterate(const Eigen::VectorXd& cost, int& iterations) {
    const double dual_tol = tol_.optimality * std::max(1.0, cost.cwiseAbs().maxCoeff());
    while (true) {
      if (iterations >= tol_.max_iterations) {
        throw std::runtime_error(
            fmt::format("simplex exceeded {} iterations", tol_.max_iterations));
      }
      factorize();
      const Eigen::VectorXd xb = basic_values();
      Eigen::VectorXd cb(m_);
      for (int r = 0; r < m_; ++r) cb[r] = cost[basis_[r]];
      const Eigen::VectorXd y = lu_.transpose().solve(cb);

      // Bland: lowest-index improving column.
      int entering = -1;
      double direction = 0.0;
      for (int j = 0; j < n_; ++j) {
        if (state_[j] == VarState::Basic || lower_[j] == upper_[j]) continue;
        const double reduced = cost[j] - y.dot(a_.col(j));
        if (state_[j] == VarState::AtLower && reduced < -dual_tol) {
          entering = j;
          direction = 1.0;
          break;
        }
        if (state_[j] == VarState::AtUpper && reduced > dual_tol) {
          entering = j;
          direction = -1.0;
          break;
        }
      }
      if (entering < 0) return Outcome::Optimal;
      ++iterations;

      const Eigen::VectorXd w = lu_.solve(a_.col(entering));
      double step = upper_[entering] - lower_[entering];
      int leaving_row = -1;
      bool leaving_to_lower = true;
      std::vector<double> limits(m_, kInf);
      for (int r = 0; r < m_; ++r) {
        const double delta = direction * w[r];
        const int var = basis_[r];
        if (delta > tol_.pivot && std::isfinite(lower_[var])) {
          limits[r] = std::max(0.0, (xb[r] - lower_[var]) / delta);
        } else if (delta < -tol_.pivot && std::isfinite(upper_[var])) {
          limits[r] = std::max(0.0, (upper_[var] - xb[r]) / -delta);
        }
      }
      double best = kInf;
      for (double l : limits) best = std::min(best, l);
      if (best < step) {
        const double tie = best + 1e-12 * std::max(1.0, best);
        for (int r = 0; r < m_; ++r) {
          if (limits[r] <= tie && (leaving_row < 0 || basis_[r] < basis_[leaving_row])) {
            leaving_row = r;
          }
        }
        step = best;
        leaving_to_lower = direction * w[leaving_row] > 0.0;
      }
      if (!std::isfinite(step)) return Outcome::Unbounded;

      if (leaving_row < 0) {
        state_[entering] = state_[entering] == VarState::AtLower ? VarState::AtUpper : VarState::AtLower;
        continue;
      }
      const int leaving = basis_[leaving_row];
      state_[leaving] = leaving_to_lower ? VarState::AtLower : VarState::AtUpper;
      state_[entering] = VarState::Basic;
      basis_[leaving_row] = entering;
    }
  }

  SolverTolerances tol_;
  int n_struct_ = 0;
  int m_ = 0;
  int n_ = 0;
  int first_artificial_ = 0;
  bool trivially_infeasible_ = false;
  double rhs_scale_ = 1.0;
  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
  std::vector<VarState> state_;
  std::vector<int> basis_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

}  // namespace

LpSolution solve(const LinearProgram& lp, const SolverTolerances& tol) {
  BoundedSimplex simplex(lp, tol);
  return simplex.run(lp);
}

}  // namespace dprmdi
