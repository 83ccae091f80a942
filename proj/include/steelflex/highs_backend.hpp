#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Highs.h>

#include "steelflex/milp.hpp"

namespace steelflex {

/// HiGHS-backed MILP solver. Single-threaded with a fixed seed so repeated
/// solves of the same model return the same point.
class HighsBackend final : public SolverBackend {
 public:
  std::string name() const override { return std::string("highs-") + highsVersion(); }

  SolveResult solve(const MilpModel& model, const SolveOptions& options) override {
    model.validate();
    Highs highs;
    highs.setOptionValue("output_flag", false);
    highs.setOptionValue("threads", 1);
    highs.setOptionValue("random_seed", options.random_seed);
    highs.setOptionValue("mip_rel_gap", options.mip_rel_gap);
    highs.setOptionValue("mip_abs_gap", 1e-9);
    highs.setOptionValue("time_limit", options.time_limit_s);
    highs.setOptionValue("mip_feasibility_tolerance", 1e-9);
    highs.setOptionValue("primal_feasibility_tolerance", 1e-9);

    HighsLp lp;
    const auto& vars = model.variables();
    const auto& rows = model.constraints();
    lp.num_col_ = static_cast<HighsInt>(vars.size());
    lp.num_row_ = static_cast<HighsInt>(rows.size());
    auto [cost, constant] = model.objective_vector();
    lp.col_cost_ = std::move(cost);
    lp.offset_ = constant;
    lp.sense_ = ObjSense::kMinimize;
    bool has_integer = false;
    lp.integrality_.resize(vars.size(), HighsVarType::kContinuous);
    for (std::size_t i = 0; i < vars.size(); ++i) {
      lp.col_lower_.push_back(vars[i].lb);
      lp.col_upper_.push_back(vars[i].ub);
      if (vars[i].kind == VarKind::binary) {
        lp.integrality_[i] = HighsVarType::kInteger;
        has_integer = true;
      }
    }
    if (!has_integer) lp.integrality_.clear();
    // Column-wise copy of the row list.
    std::vector<HighsInt> count(vars.size() + 1, 0);
    for (const Constraint& r : rows)
      for (const Term& t : r.terms) ++count[static_cast<std::size_t>(t.var) + 1];
    for (std::size_t j = 0; j < vars.size(); ++j) count[j + 1] += count[j];
    lp.a_matrix_.format_ = MatrixFormat::kColwise;
    lp.a_matrix_.num_col_ = lp.num_col_;
    lp.a_matrix_.num_row_ = lp.num_row_;
    lp.a_matrix_.start_ = count;
    lp.a_matrix_.index_.resize(static_cast<std::size_t>(count.back()));
    lp.a_matrix_.value_.resize(static_cast<std::size_t>(count.back()));
    std::vector<HighsInt> next(count.begin(), count.end() - 1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      lp.row_lower_.push_back(rows[i].lb);
      lp.row_upper_.push_back(rows[i].ub);
      for (const Term& t : rows[i].terms) {
        const auto pos = static_cast<std::size_t>(next[static_cast<std::size_t>(t.var)]++);
        lp.a_matrix_.index_[pos] = static_cast<HighsInt>(i);
        lp.a_matrix_.value_[pos] = t.coef;
      }
    }

    SolveResult result;
    if (highs.passModel(std::move(lp)) == HighsStatus::kError) {
      result.status = SolveStatus::error;
      result.status_text = "model rejected by HiGHS";
      return result;
    }
    if (highs.run() == HighsStatus::kError) {
      result.status = SolveStatus::error;
      result.status_text = highs.modelStatusToString(highs.getModelStatus());
      return result;
    }
    const HighsModelStatus status = highs.getModelStatus();
    const HighsInfo& info = highs.getInfo();
    result.status_text = highs.modelStatusToString(status);
    const bool has_point = info.primal_solution_status == kSolutionStatusFeasible;
    switch (status) {
      case HighsModelStatus::kOptimal:
        result.status = SolveStatus::optimal;
        break;
      case HighsModelStatus::kInfeasible:
      case HighsModelStatus::kUnboundedOrInfeasible:
        result.status = SolveStatus::infeasible;
        break;
      case HighsModelStatus::kUnbounded:
        result.status = SolveStatus::unbounded;
        break;
      case HighsModelStatus::kTimeLimit:
      case HighsModelStatus::kIterationLimit:
      case HighsModelStatus::kSolutionLimit:
        result.status = has_point ? SolveStatus::feasible_gap : SolveStatus::error;
        break;
      default:
        result.status = SolveStatus::error;
        break;
    }
    if (result.has_solution()) {
      result.values = highs.getSolution().col_value;
      for (std::size_t i = 0; i < vars.size(); ++i)
        if (vars[i].kind == VarKind::binary) result.values[i] = std::round(result.values[i]);
      result.objective = info.objective_function_value;
      result.mip_gap = has_integer ? info.mip_gap : 0.0;
    }
    return result;
  }
};

}  // namespace steelflex
