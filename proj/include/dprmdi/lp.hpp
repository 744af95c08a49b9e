#pragma once

// Small dense linear programs with bounded variables.  Problem sizes in this
// library stay below a few dozen variables, so the solver favours exactness
// and determinism over speed.

#include <string>
#include <vector>

#include <Eigen/Core>

namespace dprmdi {

enum class Relation { Equal, LessEqual, GreaterEqual };
enum class Sense { Minimize, Maximize };
enum class LpStatus { Optimal, Infeasible, Unbounded };

std::string to_string(LpStatus status);

struct LinearConstraint {
  Eigen::VectorXd coeffs;
  Relation relation;
  double rhs;
};

/// lower <= x <= upper, constraints, linear objective.
///
/// Lower bounds must be finite; upper bounds may be +infinity.  Every vector
/// is checked for length and finiteness when it is added, so a constructed
/// program is always well formed.
class LinearProgram {
 public:
  LinearProgram(Eigen::VectorXd lower, Eigen::VectorXd upper);

  int num_vars() const { return static_cast<int>(lower_.size()); }

  LinearProgram& add_constraint(Eigen::VectorXd coeffs, Relation relation, double rhs);
  /// lo <= coeffs . x <= hi, stored as two inequalities.
  LinearProgram& add_range(const Eigen::VectorXd& coeffs, double lo, double hi);
  LinearProgram& set_objective(Eigen::VectorXd coeffs, Sense sense);

  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }
  const std::vector<LinearConstraint>& constraints() const { return constraints_; }
  const Eigen::VectorXd& objective() const { return objective_; }
  Sense sense() const { return sense_; }

 private:
  void check_vector(const Eigen::VectorXd& v, const char* what) const;

  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
  std::vector<LinearConstraint> constraints_;
  Eigen::VectorXd objective_;
  Sense sense_ = Sense::Minimize;
};

struct SolverTolerances {
  double feasibility = 1e-9;  ///< primal infeasibility accepted on equilibrated rows
  double pivot = 1e-11;       ///< smallest usable pivot magnitude
  double optimality = 1e-12;  ///< reduced-cost threshold
  int max_iterations = 10000;
};

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  double objective_value = 0.0;
  Eigen::VectorXd values;
  int iterations = 0;
};

/// Bounded-variable primal simplex, two phases, Bland's rule for both the
/// entering and the leaving variable.  The basis is refactorized from scratch
/// at every iteration.  Infeasible and unbounded programs are reported through
/// the status, never thrown.
LpSolution solve(const LinearProgram& lp, const SolverTolerances& tol = {});

/// Largest violation of any constraint by `x`, measured on the raw rows.
double max_constraint_violation(const LinearProgram& lp, const Eigen::VectorXd& x);

}  // namespace dprmdi
