#pragma once

// Solver-agnostic mixed-integer linear model.
//
// Variables carry a name, bounds and a kind. Rows are lb <= a.x <= ub.
// Objective contributions are registered under a named group so that a
// solved model can report its cost breakdown.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "steelflex/errors.hpp"

namespace steelflex {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct VarId {
  int index = -1;
  bool valid() const { return index >= 0; }
};

enum class VarKind { continuous, binary };

struct Variable {
  std::string name;
  double lb = 0.0;
  double ub = kInf;
  VarKind kind = VarKind::continuous;
};

struct Term {
  int var = -1;
  double coef = 0.0;
};

/// Affine expression sum_i coef_i x_i + constant.
class LinExpr {
 public:
  LinExpr() = default;
  LinExpr(double constant) : constant_(constant) {}  // NOLINT: implicit by intent
  LinExpr(VarId v, double coef = 1.0) { add(v, coef); }  // NOLINT

  LinExpr& add(VarId v, double coef = 1.0) {
    if (!v.valid()) fail(ErrorKind::invalid_argument, "LinExpr: invalid variable");
    if (coef != 0.0) terms_.push_back({v.index, coef});
    return *this;
  }
  LinExpr& add(const LinExpr& other, double scale = 1.0) {
    for (const Term& t : other.terms_)
      if (t.coef * scale != 0.0) terms_.push_back({t.var, t.coef * scale});
    constant_ += other.constant_ * scale;
    return *this;
  }
  LinExpr& operator+=(const LinExpr& other) { return add(other, 1.0); }
  LinExpr& operator-=(const LinExpr& other) { return add(other, -1.0); }
  LinExpr& operator+=(double c) {
    constant_ += c;
    return *this;
  }
  LinExpr& operator*=(double s) {
    for (Term& t : terms_) t.coef *= s;
    constant_ *= s;
    return *this;
  }

  const std::vector<Term>& terms() const { return terms_; }
  double constant() const { return constant_; }

  double evaluate(const std::vector<double>& x) const {
    double v = constant_;
    for (const Term& t : terms_) v += t.coef * x.at(static_cast<std::size_t>(t.var));
    return v;
  }

  /// Merges duplicate variables and drops zero coefficients.
  LinExpr compacted() const {
    std::map<int, double> acc;
    for (const Term& t : terms_) acc[t.var] += t.coef;
    LinExpr out(constant_);
    for (const auto& [var, coef] : acc)
      if (coef != 0.0) out.terms_.push_back({var, coef});
    return out;
  }

 private:
  std::vector<Term> terms_;
  double constant_ = 0.0;
};

inline LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
inline LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
inline LinExpr operator*(double s, LinExpr a) { return a *= s; }

struct Constraint {
  std::string name;
  std::vector<Term> terms;
  double lb = -kInf;
  double ub = kInf;
};

class MilpModel {
 public:
  explicit MilpModel(std::string label = "model") : label_(std::move(label)) {}

  const std::string& label() const { return label_; }

  VarId add_var(std::string name, double lb, double ub, VarKind kind = VarKind::continuous) {
    if (kind == VarKind::binary) {
      lb = std::max(lb, 0.0);
      ub = std::min(ub, 1.0);
    }
    if (std::isnan(lb) || std::isnan(ub) || lb > ub)
      fail(ErrorKind::invalid_argument, fmt::format("variable {}: bounds [{}, {}] are invalid", name, lb, ub));
    vars_.push_back({std::move(name), lb, ub, kind});
    return VarId{static_cast<int>(vars_.size()) - 1};
  }

  VarId add_binary(std::string name) { return add_var(std::move(name), 0.0, 1.0, VarKind::binary); }

  /// lb <= expr <= ub. The constant of expr is moved to the bounds.
  void add_range(std::string name, const LinExpr& expr, double lb, double ub) {
    const LinExpr e = expr.compacted();
    Constraint c;
    c.name = std::move(name);
    c.terms = e.terms();
    c.lb = lb - e.constant();
    c.ub = ub - e.constant();
    rows_.push_back(std::move(c));
  }
  void add_eq(std::string name, const LinExpr& expr, double rhs) { add_range(std::move(name), expr, rhs, rhs); }
  void add_le(std::string name, const LinExpr& expr, double rhs) { add_range(std::move(name), expr, -kInf, rhs); }
  void add_ge(std::string name, const LinExpr& expr, double rhs) { add_range(std::move(name), expr, rhs, kInf); }

  void add_objective(const std::string& group, const LinExpr& expr) {
    auto it = std::find_if(groups_.begin(), groups_.end(), [&](const auto& g) { return g.first == group; });
    if (it == groups_.end()) {
      groups_.emplace_back(group, expr);
    } else {
      it->second += expr;
    }
  }

  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return rows_; }
  const std::vector<std::pair<std::string, LinExpr>>& objective_groups() const { return groups_; }
  std::size_t num_vars() const { return vars_.size(); }
  std::size_t num_rows() const { return rows_.size(); }
  std::size_t num_binaries() const {
    return static_cast<std::size_t>(
        std::count_if(vars_.begin(), vars_.end(), [](const Variable& v) { return v.kind == VarKind::binary; }));
  }

  /// Dense objective coefficients and constant (all groups summed).
  std::pair<std::vector<double>, double> objective_vector() const {
    std::vector<double> c(vars_.size(), 0.0);
    double constant = 0.0;
    for (const auto& [name, expr] : groups_) {
      for (const Term& t : expr.terms()) c[static_cast<std::size_t>(t.var)] += t.coef;
      constant += expr.constant();
    }
    return {c, constant};
  }

  double evaluate_objective(const std::vector<double>& x) const {
    double v = 0.0;
    for (const auto& [name, expr] : groups_) v += expr.evaluate(x);
    return v;
  }

  std::map<std::string, double> evaluate_groups(const std::vector<double>& x) const {
    std::map<std::string, double> out;
    for (const auto& [name, expr] : groups_) out[name] = expr.evaluate(x);
    return out;
  }

  /// Maximum violation of rows and bounds at x; integrality checked for binaries.
  double max_violation(const std::vector<double>& x) const {
    double worst = 0.0;
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      worst = std::max({worst, vars_[i].lb - x[i], x[i] - vars_[i].ub});
      if (vars_[i].kind == VarKind::binary) worst = std::max(worst, std::abs(x[i] - std::round(x[i])));
    }
    for (const Constraint& r : rows_) {
      double a = 0.0;
      for (const Term& t : r.terms) a += t.coef * x[static_cast<std::size_t>(t.var)];
      worst = std::max({worst, r.lb - a, a - r.ub});
    }
    return worst;
  }

  /// Structural checks: every row references declared variables with finite
  /// coefficients, and every row has a finite side.
  void validate() const {
    for (const Constraint& r : rows_) {
      if (!(std::isfinite(r.lb) || std::isfinite(r.ub)))
        fail(ErrorKind::invalid_argument, "row " + r.name + " is free");
      for (const Term& t : r.terms) {
        if (t.var < 0 || static_cast<std::size_t>(t.var) >= vars_.size())
          fail(ErrorKind::invalid_argument, "row " + r.name + " references an undeclared variable");
        if (!std::isfinite(t.coef)) fail(ErrorKind::invalid_argument, "row " + r.name + " has a non-finite coefficient");
      }
    }
    for (const auto& [name, expr] : groups_)
      for (const Term& t : expr.terms())
        if (t.var < 0 || static_cast<std::size_t>(t.var) >= vars_.size() || !std::isfinite(t.coef))
          fail(ErrorKind::invalid_argument, "objective group " + name + " is malformed");
  }

 private:
  std::string label_;
  std::vector<Variable> vars_;
  std::vector<Constraint> rows_;
  std::vector<std::pair<std::string, LinExpr>> groups_;
};

/// Writes the model in LP text format. Ranged rows with distinct finite sides
/// are written as two rows suffixed "_lo" and "_hi". Numbers use 17
/// significant digits, so the dump round-trips exactly.
inline void write_lp(std::ostream& out, const MilpModel& model) {
  const auto& vars = model.variables();
  auto num = [](double v) { return fmt::format("{:.17g}", v); };
  auto write_terms = [&](const std::vector<Term>& terms) {
    std::string line;
    bool first = true;
    for (const Term& t : terms) {
      if (t.coef == 0.0) continue;
      const double mag = std::abs(t.coef);
      line += first ? (t.coef < 0 ? "- " : "") : (t.coef < 0 ? " - " : " + ");
      line += num(mag) + " " + vars[static_cast<std::size_t>(t.var)].name;
      first = false;
    }
    return first ? std::string("0 ") + vars.front().name : line;
  };

  const auto [cost, constant] = model.objective_vector();
  std::vector<Term> obj;
  for (std::size_t i = 0; i < cost.size(); ++i)
    if (cost[i] != 0.0) obj.push_back({static_cast<int>(i), cost[i]});
  out << "\\ " << model.label() << "\n";
  out << "Minimize\n obj: " << write_terms(obj);
  if (constant != 0.0) out << (constant < 0 ? " - " : " + ") << num(std::abs(constant));
  out << "\nSubject To\n";
  for (const Constraint& r : model.constraints()) {
    const std::string lhs = write_terms(r.terms);
    if (r.lb == r.ub) {
      out << " " << r.name << ": " << lhs << " = " << num(r.ub) << "\n";
    } else if (std::isfinite(r.lb) && std::isfinite(r.ub)) {
      out << " " << r.name << "_lo: " << lhs << " >= " << num(r.lb) << "\n";
      out << " " << r.name << "_hi: " << lhs << " <= " << num(r.ub) << "\n";
    } else if (std::isfinite(r.lb)) {
      out << " " << r.name << ": " << lhs << " >= " << num(r.lb) << "\n";
    } else {
      out << " " << r.name << ": " << lhs << " <= " << num(r.ub) << "\n";
    }
  }
  out << "Bounds\n";
  for (const Variable& v : vars) {
    if (v.kind == VarKind::binary) continue;
    if (!std::isfinite(v.lb) && !std::isfinite(v.ub)) {
      out << " " << v.name << " free\n";
    } else if (!std::isfinite(v.ub)) {
      out << " " << v.name << " >= " << num(v.lb) << "\n";
    } else if (!std::isfinite(v.lb)) {
      out << " -inf <= " << v.name << " <= " << num(v.ub) << "\n";
    } else {
      out << " " << num(v.lb) << " <= " << v.name << " <= " << num(v.ub) << "\n";
    }
  }
  if (model.num_binaries() > 0) {
    out << "Binaries\n";
    for (const Variable& v : vars)
      if (v.kind == VarKind::binary) out << " " << v.name << "\n";
  }
  out << "End\n";
}

// --- solving -----------------------------------------------------------------

enum class SolveStatus { optimal, feasible_gap, infeasible, unbounded, error };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::feasible_gap: return "feasible_gap";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::error: return "error";
  }
  return "?";
}

struct SolveOptions {
  double mip_rel_gap = 1e-4;
  double time_limit_s = 120.0;
  int random_seed = 0;
};

struct SolveResult {
  SolveStatus status = SolveStatus::error;
  std::string status_text;
  double objective = 0.0;
  double mip_gap = 0.0;
  std::vector<double> values;

  bool has_solution() const { return status == SolveStatus::optimal || status == SolveStatus::feasible_gap; }
};

/// One backend instance per concurrent solve.
class SolverBackend {
 public:
  virtual ~SolverBackend() = default;
  virtual std::string name() const = 0;
  virtual SolveResult solve(const MilpModel& model, const SolveOptions& options) = 0;
};

}  // namespace steelflex
