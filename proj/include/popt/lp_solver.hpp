#pragma once

// Dense-basis revised simplex for problems of the form
//
//   max  c^T x   s.t.  a_r^T x (<= | =) b_r,  x >= 0,  some x_v fixed.
//
// Rows are stored sparsely; the basis inverse is dense (the auction LPs have
// few rows and very many columns). Phase 1 uses artificial variables, and
// Bland's rule takes over after a run of degenerate pivots.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace popt::lp {

enum class Relation { LessEqual, Equal };

struct Term {
  std::size_t var;
  double coef;
};

struct Row {
  std::vector<Term> terms;
  Relation relation = Relation::LessEqual;
  double rhs = 0.0;
};

class LinearProgram {
 public:
  LinearProgram() = default;
  explicit LinearProgram(std::size_t num_vars) : objective_(num_vars, 0.0) {}

  std::size_t num_vars() const { return objective_.size(); }
  std::size_t num_rows() const { return rows_.size(); }

  void set_objective(std::size_t var, double coef) { objective_.at(var) = coef; }
  const std::vector<double>& objective() const { return objective_; }

  std::size_t add_row(std::vector<Term> terms, Relation relation, double rhs);
  const std::vector<Row>& rows() const { return rows_; }
  const Row& row(std::size_t r) const { return rows_.at(r); }

  /// Pins `var` to `value`. Fixed variables are substituted out before solving.
  void fix(std::size_t var, double value);
  std::optional<double> fixing(std::size_t var) const;
  bool has_fixings() const { return !fixings_.empty(); }

  /// Throws InvalidConfig when the problem violates the well-formedness rules.
  void validate() const;

  /// Plain-text dump, one row per line: `<relation> <rhs> : x<var>=<coef> ...`.
  std::string dump() const;

 private:
  std::vector<double> objective_;
  std::vector<Row> rows_;
  std::vector<std::optional<double>> fixings_;
};

enum class Status { Optimal, Infeasible, Unbounded };

const char* to_string(Status status);

struct Solution {
  Status status = Status::Infeasible;
  std::vector<double> primal;  // one per variable, fixed variables included
  std::vector<double> duals;   // one per row; >= 0 on <= rows
  double objective_value = 0.0;
  // Basic variables. Structural variables keep their index; the slack of row r
  // is reported as num_vars + r.
  std::vector<std::size_t> basis;
  std::size_t iterations = 0;

  bool optimal() const { return status == Status::Optimal; }
};

struct Tolerances {
  double feasibility = 1e-9;
  double duality = 1e-7;
  double pivot = 1e-10;
  double optimality = 1e-9;
};

struct SimplexOptions {
  Tolerances tol;
  std::size_t bland_after = 50;     // consecutive degenerate pivots
  std::size_t refactor_every = 64;  // pivots between basis reinversions
  std::size_t max_iterations = 0;   // 0 picks a size-dependent cap
};

class SimplexSolver {
 public:
  explicit SimplexSolver(SimplexOptions options = {}) : options_(options) {}

  /// Infeasible/Unbounded are reported through the status. Throws
  /// NumericalFailure when the iteration cap is hit or the basis degenerates.
  Solution solve(const LinearProgram& lp) const;

  const SimplexOptions& options() const { return options_; }

 private:
  SimplexOptions options_;
};

inline Solution solve(const LinearProgram& lp, const SimplexOptions& options = {}) {
  return SimplexSolver(options).solve(lp);
}

/// Row activity a_r^T x for every row.
std::vector<double> row_activities(const LinearProgram& lp, const std::vector<double>& x);

/// Largest violation of rows, fixings and non-negativity.
double primal_residual(const LinearProgram& lp, const std::vector<double>& x);

/// Largest violation of dual feasibility (reduced costs <= 0, <= duals >= 0).
double dual_residual(const LinearProgram& lp, const std::vector<double>& duals);

/// b^T y plus the constant contributed by fixed variables.
double dual_objective(const LinearProgram& lp, const std::vector<double>& duals);

/// c_v - sum_r y_r a_rv for every variable.
std::vector<double> reduced_costs(const LinearProgram& lp, const std::vector<double>& duals);

/// max over |dual_r * slack_r| on <= rows and |reduced_cost_v * x_v| on free
/// variables.
double complementary_slackness_residual(const LinearProgram& lp, const Solution& sol);

}  // namespace popt::lp
