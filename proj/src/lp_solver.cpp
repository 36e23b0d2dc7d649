#include "popt/lp_solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "popt/errors.hpp"

namespace popt::lp {

std::size_t LinearProgram::add_row(std::vector<Term> terms, Relation relation, double rhs) {
  for (const Term& t : terms) {
    if (t.var >= num_vars()) throw InvalidConfig("row references unknown variable");
  }
  rows_.push_back(Row{std::move(terms), relation, rhs});
  return rows_.size() - 1;
}

void LinearProgram::fix(std::size_t var, double value) {
  if (var >= num_vars()) throw InvalidConfig("fixing references unknown variable");
  if (!std::isfinite(value)) throw InvalidConfig("fixing value is not finite");
  if (fixings_.empty()) fixings_.resize(num_vars());
  fixings_[var] = value;
}

std::optional<double> LinearProgram::fixing(std::size_t var) const {
  if (fixings_.empty()) return std::nullopt;
  return fixings_.at(var);
}

void LinearProgram::validate() const {
  for (double c : objective_) {
    if (!std::isfinite(c)) throw InvalidConfig("objective coefficient is not finite");
  }
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const Row& row = rows_[r];
    if (!std::isfinite(row.rhs)) throw InvalidConfig("rhs of row " + std::to_string(r) + " is not finite");
    bool all_zero = true;
    for (const Term& t : row.terms) {
      if (!std::isfinite(t.coef)) throw InvalidConfig("coefficient in row " + std::to_string(r) + " is not finite");
      if (t.coef != 0.0) all_zero = false;
    }
    if (all_zero && row.relation == Relation::LessEqual && row.rhs < 0.0) {
      throw InvalidConfig("row " + std::to_string(r) + " is 0 <= negative");
    }
  }
  if (!fixings_.empty()) {
    for (const auto& f : fixings_) {
      if (f && !std::isfinite(*f)) throw InvalidConfig("fixing is not finite");
    }
  }
}

std::string LinearProgram::dump() const {
  std::ostringstream out;
  out.precision(17);
  out << "max :";
  for (std::size_t v = 0; v < objective_.size(); ++v) {
    if (objective_[v] != 0.0) out << " x" << v << "=" << objective_[v];
  }
  out << "\n";
  for (const Row& row : rows_) {
    out << (row.relation == Relation::LessEqual ? "<=" : "=") << " " << row.rhs << " :";
    for (const Term& t : row.terms) out << " x" << t.var << "=" << t.coef;
    out << "\n";
  }
  for (std::size_t v = 0; v < fixings_.size(); ++v) {
    if (fixings_[v]) out << "fix " << *fixings_[v] << " : x" << v << "\n";
  }
  return out.str();
}

const char* to_string(Status status) {
  switch (status) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
  }
  return "unknown";
}

namespace {

enum class ColumnKind : unsigned char { Structural, Slack, Artificial };

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class RevisedSimplex {
 public:
  RevisedSimplex(const LinearProgram& lp, const SimplexOptions& options)
      : lp_(lp), opt_(options) {
    build();
  }

  Solution run();

 private:
  enum class PhaseResult { Optimal, Unbounded };

  void build();
  void refactor();
  PhaseResult iterate(const std::vector<double>& cost);
  void pivot(std::size_t leave_row, std::size_t enter_col, const Vector& alpha);
  void drive_out_artificials();
  double column_dot(std::size_t col, const Vector& y) const;
  Vector ftran(std::size_t col) const;

  const LinearProgram& lp_;
  SimplexOptions opt_;

  std::size_t m_ = 0;
  std::vector<std::size_t> free_vars_;  // structural column -> original variable
  double objective_constant_ = 0.0;
  std::vector<double> b_;
  std::vector<double> row_sign_;

  // Column storage, CSC.
  std::vector<std::size_t> col_start_;
  std::vector<std::size_t> col_row_;
  std::vector<double> col_val_;
  std::vector<ColumnKind> kind_;
  std::vector<std::size_t> kind_row_;  // row of a slack/artificial column
  std::vector<double> cost_;           // phase-2 costs
  std::vector<std::size_t> slack_of_row_;

  std::vector<std::size_t> basis_;
  std::vector<char> is_basic_;
  std::vector<char> barred_;
  Matrix binv_;
  Vector xb_;
  std::size_t pivots_since_refactor_ = 0;
  std::size_t iterations_ = 0;
  std::size_t max_iterations_ = 0;
};

void RevisedSimplex::build() {
  const std::size_t n = lp_.num_vars();
  m_ = lp_.num_rows();

  std::vector<std::size_t> col_of_var(n, std::numeric_limits<std::size_t>::max());
  std::vector<double> fixed_value(n, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    if (auto f = lp_.fixing(v)) {
      fixed_value[v] = *f;
      objective_constant_ += lp_.objective()[v] * *f;
    } else {
      col_of_var[v] = free_vars_.size();
      free_vars_.push_back(v);
    }
  }

  b_.assign(m_, 0.0);
  row_sign_.assign(m_, 1.0);
  const std::size_t n_struct = free_vars_.size();
  std::vector<std::vector<std::pair<std::size_t, double>>> cols(n_struct);
  for (std::size_t r = 0; r < m_; ++r) {
    const Row& row = lp_.row(r);
    double rhs = row.rhs;
    for (const Term& t : row.terms) {
      if (col_of_var[t.var] == std::numeric_limits<std::size_t>::max()) rhs -= t.coef * fixed_value[t.var];
    }
    row_sign_[r] = rhs < 0.0 ? -1.0 : 1.0;
    b_[r] = row_sign_[r] * rhs;
    for (const Term& t : row.terms) {
      const std::size_t c = col_of_var[t.var];
      if (c != std::numeric_limits<std::size_t>::max() && t.coef != 0.0) {
        cols[c].emplace_back(r, row_sign_[r] * t.coef);
      }
    }
  }

  col_start_.push_back(0);
  auto push_column = [&](ColumnKind kind, std::size_t krow, double cost) {
    kind_.push_back(kind);
    kind_row_.push_back(krow);
    cost_.push_back(cost);
    col_start_.push_back(col_row_.size());
  };
  for (std::size_t c = 0; c < n_struct; ++c) {
    for (auto [r, v] : cols[c]) {
      col_row_.push_back(r);
      col_val_.push_back(v);
    }
    push_column(ColumnKind::Structural, 0, lp_.objective()[free_vars_[c]]);
  }

  basis_.assign(m_, 0);
  slack_of_row_.assign(m_, std::numeric_limits<std::size_t>::max());
  for (std::size_t r = 0; r < m_; ++r) {
    if (lp_.row(r).relation == Relation::LessEqual) {
      col_row_.push_back(r);
      col_val_.push_back(row_sign_[r]);
      slack_of_row_[r] = kind_.size();
      push_column(ColumnKind::Slack, r, 0.0);
    }
  }
  for (std::size_t r = 0; r < m_; ++r) {
    const bool slack_basic = lp_.row(r).relation == Relation::LessEqual && row_sign_[r] > 0.0;
    if (slack_basic) {
      basis_[r] = slack_of_row_[r];
    } else {
      col_row_.push_back(r);
      col_val_.push_back(1.0);
      basis_[r] = kind_.size();
      push_column(ColumnKind::Artificial, r, 0.0);
    }
  }

  const std::size_t ncols = kind_.size();
  is_basic_.assign(ncols, 0);
  barred_.assign(ncols, 0);
  for (std::size_t c : basis_) is_basic_[c] = 1;
  max_iterations_ = opt_.max_iterations ? opt_.max_iterations : 20 * (m_ + ncols) + 10000;

  binv_ = Matrix::Identity(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(m_));
  xb_ = Vector::Map(b_.data(), static_cast<Eigen::Index>(m_));
}

double RevisedSimplex::column_dot(std::size_t col, const Vector& y) const {
  double s = 0.0;
  for (std::size_t p = col_start_[col]; p < col_start_[col + 1]; ++p) s += col_val_[p] * y[static_cast<Eigen::Index>(col_row_[p])];
  return s;
}

Vector RevisedSimplex::ftran(std::size_t col) const {
  Vector alpha = Vector::Zero(static_cast<Eigen::Index>(m_));
  for (std::size_t p = col_start_[col]; p < col_start_[col + 1]; ++p) {
    alpha.noalias() += col_val_[p] * binv_.col(static_cast<Eigen::Index>(col_row_[p]));
  }
  return alpha;
}

void RevisedSimplex::refactor() {
  const auto m = static_cast<Eigen::Index>(m_);
  Matrix basis_matrix = Matrix::Zero(m, m);
  for (std::size_t i = 0; i < m_; ++i) {
    const std::size_t col = basis_[i];
    for (std::size_t p = col_start_[col]; p < col_start_[col + 1]; ++p) {
      basis_matrix(static_cast<Eigen::Index>(col_row_[p]), static_cast<Eigen::Index>(i)) += col_val_[p];
    }
  }
  Eigen::PartialPivLU<Matrix> lu(basis_matrix);
  if (!(lu.rcond() > 1e-14)) throw NumericalFailure("simplex basis became singular");
  binv_ = lu.inverse();
  xb_ = binv_ * Vector::Map(b_.data(), m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (xb_[i] < 0.0 && xb_[i] > -opt_.tol.feasibility) xb_[i] = 0.0;
  }
  pivots_since_refactor_ = 0;
}

void RevisedSimplex::pivot(std::size_t leave_row, std::size_t enter_col, const Vector& alpha) {
  const auto r = static_cast<Eigen::Index>(leave_row);
  const double theta = std::max(0.0, xb_[r] / alpha[r]);
  xb_.noalias() -= theta * alpha;
  xb_[r] = theta;
  for (Eigen::Index i = 0; i < xb_.size(); ++i) {
    if (xb_[i] < 0.0 && xb_[i] > -opt_.tol.feasibility) xb_[i] = 0.0;
  }

  binv_.row(r) /= alpha[r];
  for (Eigen::Index i = 0; i < binv_.rows(); ++i) {
    if (i != r && alpha[i] != 0.0) binv_.row(i) -= alpha[i] * binv_.row(r);
  }

  is_basic_[basis_[leave_row]] = 0;
  basis_[leave_row] = enter_col;
  is_basic_[enter_col] = 1;
  if (++pivots_since_refactor_ >= opt_.refactor_every) refactor();
}

RevisedSimplex::PhaseResult RevisedSimplex::iterate(const std::vector<double>& cost) {
  const std::size_t ncols = kind_.size();
  const auto m = static_cast<Eigen::Index>(m_);
  std::size_t degenerate_run = 0;
  bool bland = false;
  Vector cb(m);

  for (;;) {
    if (++iterations_ > max_iterations_) {
      throw NumericalFailure("simplex exceeded " + std::to_string(max_iterations_) + " iterations");
    }
    for (Eigen::Index i = 0; i < m; ++i) cb[i] = cost[basis_[static_cast<std::size_t>(i)]];
    const Vector y = binv_.transpose() * cb;

    std::size_t enter = ncols;
    double best = opt_.tol.optimality;
    for (std::size_t j = 0; j < ncols; ++j) {
      if (is_basic_[j] || barred_[j]) continue;
      const double d = cost[j] - column_dot(j, y);
      if (d > best) {
        enter = j;
        if (bland) break;
        best = d;
      }
    }
    if (enter == ncols) return PhaseResult::Optimal;

    const Vector alpha = ftran(enter);
    Eigen::Index leave = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (alpha[i] <= opt_.tol.pivot) continue;
      const double ratio = std::max(0.0, xb_[i]) / alpha[i];
      if (leave < 0 || ratio < best_ratio - 1e-12 * (1.0 + best_ratio)) {
        leave = i;
        best_ratio = ratio;
      } else if (ratio <= best_ratio + 1e-12 * (1.0 + best_ratio)) {
        const auto li = static_cast<std::size_t>(leave);
        const auto ii = static_cast<std::size_t>(i);
        const bool take = bland ? basis_[ii] < basis_[li] : alpha[i] > alpha[leave];
        if (take) {
          leave = i;
          best_ratio = std::min(best_ratio, ratio);
        }
      }
    }
    if (leave < 0) return PhaseResult::Unbounded;

    if (best_ratio <= 1e-12) {
      if (++degenerate_run >= opt_.bland_after) bland = true;
    } else {
      degenerate_run = 0;
      bland = false;
    }
    pivot(static_cast<std::size_t>(leave), enter, alpha);
  }
}

void RevisedSimplex::drive_out_artificials() {
  const std::size_t ncols = kind_.size();
  for (std::size_t r = 0; r < m_; ++r) {
    if (kind_[basis_[r]] != ColumnKind::Artificial) continue;
    const Vector rho = binv_.row(static_cast<Eigen::Index>(r)).transpose();
    std::size_t best_col = ncols;
    double best_abs = 1e-9;
    for (std::size_t j = 0; j < ncols; ++j) {
      if (is_basic_[j] || kind_[j] == ColumnKind::Artificial) continue;
      const double v = std::abs(column_dot(j, rho));
      if (v > best_abs) {
        best_abs = v;
        best_col = j;
      }
    }
    // No candidate means the row is redundant; the artificial stays basic at zero.
    if (best_col != ncols) pivot(r, best_col, ftran(best_col));
  }
  for (std::size_t j = 0; j < ncols; ++j) {
    if (kind_[j] == ColumnKind::Artificial) barred_[j] = 1;
  }
}

Solution RevisedSimplex::run() {
  Solution sol;
  const std::size_t n = lp_.num_vars();
  const std::size_t ncols = kind_.size();

  bool has_artificial = false;
  for (ColumnKind k : kind_) has_artificial |= k == ColumnKind::Artificial;

  if (has_artificial) {
    std::vector<double> phase1(ncols, 0.0);
    for (std::size_t j = 0; j < ncols; ++j) {
      if (kind_[j] == ColumnKind::Artificial) phase1[j] = -1.0;
    }
    iterate(phase1);
    refactor();
    double infeasibility = 0.0;
    double bmax = 0.0;
    for (double v : b_) bmax = std::max(bmax, std::abs(v));
    for (std::size_t i = 0; i < m_; ++i) {
      if (kind_[basis_[i]] == ColumnKind::Artificial) infeasibility += std::max(0.0, xb_[static_cast<Eigen::Index>(i)]);
    }
    if (infeasibility > opt_.tol.feasibility * (1.0 + bmax)) {
      sol.status = Status::Infeasible;
      sol.iterations = iterations_;
      return sol;
    }
    drive_out_artificials();
  }

  if (iterate(cost_) == PhaseResult::Unbounded) {
    sol.status = Status::Unbounded;
    sol.iterations = iterations_;
    return sol;
  }
  refactor();

  sol.status = Status::Optimal;
  sol.iterations = iterations_;
  sol.primal.assign(n, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    if (auto f = lp_.fixing(v)) sol.primal[v] = *f;
  }
  for (std::size_t i = 0; i < m_; ++i) {
    const std::size_t col = basis_[i];
    const double value = std::max(0.0, xb_[static_cast<Eigen::Index>(i)]);
    switch (kind_[col]) {
      case ColumnKind::Structural:
        sol.primal[free_vars_[col]] = value;
        sol.basis.push_back(free_vars_[col]);
        break;
      case ColumnKind::Slack:
        sol.basis.push_back(n + kind_row_[col]);
        break;
      case ColumnKind::Artificial:
        break;
    }
  }
  std::sort(sol.basis.begin(), sol.basis.end());

  const auto m = static_cast<Eigen::Index>(m_);
  Vector cb(m);
  for (Eigen::Index i = 0; i < m; ++i) cb[i] = cost_[basis_[static_cast<std::size_t>(i)]];
  const Vector y = binv_.transpose() * cb;
  sol.duals.assign(m_, 0.0);
  for (std::size_t r = 0; r < m_; ++r) {
    double d = row_sign_[r] * y[static_cast<Eigen::Index>(r)];
    if (lp_.row(r).relation == Relation::LessEqual && d < 0.0 && d > -opt_.tol.duality) d = 0.0;
    sol.duals[r] = d;
  }

  double obj = 0.0;
  for (std::size_t v = 0; v < n; ++v) obj += lp_.objective()[v] * sol.primal[v];
  sol.objective_value = obj;
  return sol;
}

}  // namespace

Solution SimplexSolver::solve(const LinearProgram& lp) const {
  lp.validate();
  if (lp.num_rows() == 0) {
    Solution sol;
    sol.primal.assign(lp.num_vars(), 0.0);
    for (std::size_t v = 0; v < lp.num_vars(); ++v) {
      if (auto f = lp.fixing(v)) {
        sol.primal[v] = *f;
      } else if (lp.objective()[v] > 0.0) {
        sol.status = Status::Unbounded;
        return sol;
      }
    }
    sol.status = Status::Optimal;
    for (std::size_t v = 0; v < lp.num_vars(); ++v) sol.objective_value += lp.objective()[v] * sol.primal[v];
    return sol;
  }
  return RevisedSimplex(lp, options_).run();
}

std::vector<double> row_activities(const LinearProgram& lp, const std::vector<double>& x) {
  std::vector<double> act(lp.num_rows(), 0.0);
  for (std::size_t r = 0; r < lp.num_rows(); ++r) {
    for (const Term& t : lp.row(r).terms) act[r] += t.coef * x.at(t.var);
  }
  return act;
}

double primal_residual(const LinearProgram& lp, const std::vector<double>& x) {
  double worst = 0.0;
  const auto act = row_activities(lp, x);
  for (std::size_t r = 0; r < lp.num_rows(); ++r) {
    const Row& row = lp.row(r);
    const double viol = row.relation == Relation::Equal ? std::abs(act[r] - row.rhs) : act[r] - row.rhs;
    worst = std::max(worst, viol);
  }
  for (std::size_t v = 0; v < lp.num_vars(); ++v) {
    if (auto f = lp.fixing(v)) {
      worst = std::max(worst, std::abs(x[v] - *f));
    } else {
      worst = std::max(worst, -x[v]);
    }
  }
  return worst;
}

std::vector<double> reduced_costs(const LinearProgram& lp, const std::vector<double>& duals) {
  std::vector<double> rc = lp.objective();
  for (std::size_t r = 0; r < lp.num_rows(); ++r) {
    for (const Term& t : lp.row(r).terms) rc[t.var] -= duals.at(r) * t.coef;
  }
  return rc;
}

double dual_residual(const LinearProgram& lp, const std::vector<double>& duals) {
  double worst = 0.0;
  const auto rc = reduced_costs(lp, duals);
  for (std::size_t v = 0; v < lp.num_vars(); ++v) {
    if (!lp.fixing(v)) worst = std::max(worst, rc[v]);
  }
  for (std::size_t r = 0; r < lp.num_rows(); ++r) {
    if (lp.row(r).relation == Relation::LessEqual) worst = std::max(worst, -duals[r]);
  }
  return worst;
}

double dual_objective(const LinearProgram& lp, const std::vector<double>& duals) {
  double obj = 0.0;
  for (std::size_t r = 0; r < lp.num_rows(); ++r) {
    double rhs = lp.row(r).rhs;
    for (const Term& t : lp.row(r).terms) {
      if (auto f = lp.fixing(t.var)) rhs -= t.coef * *f;
    }
    obj += rhs * duals.at(r);
  }
  for (std::size_t v = 0; v < lp.num_vars(); ++v) {
    if (auto f = lp.fixing(v)) obj += lp.objective()[v] * *f;
  }
  return obj;
}

double complementary_slackness_residual(const LinearProgram& lp, const Solution& sol) {
  double worst = 0.0;
  const auto act = row_activities(lp, sol.primal);
  for (std::size_t r = 0; r < lp.num_rows(); ++r) {
    if (lp.row(r).relation != Relation::LessEqual) continue;
    worst = std::max(worst, std::abs(sol.duals.at(r) * (lp.row(r).rhs - act[r])));
  }
  const auto rc = reduced_costs(lp, sol.duals);
  for (std::size_t v = 0; v < lp.num_vars(); ++v) {
    if (!lp.fixing(v)) worst = std::max(worst, std::abs(rc[v] * sol.primal[v]));
  }
  return worst;
}

}  // namespace popt::lp
