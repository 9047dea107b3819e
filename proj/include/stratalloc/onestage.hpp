#pragma once

#include <vector>

#include "stratalloc/bethel.hpp"
#include "stratalloc/types.hpp"

namespace stratalloc {

struct OneStageOptions {
  Count minnumstrat = 2;
  BethelOptions bethel;
  bool sensitivity = true;
};

// Change of the total continuous sample size when the bound of each
// constraint is relaxed by 10%, one constraint at a time. Constraints with
// slack at the base solution report exactly 0.
std::vector<double> sensitivity_10pct(const ExpandedConstraintMatrix& m, const BethelSolution& base,
                                      const BethelOptions& opts = {});
std::vector<double> sensitivity_10pct(const std::vector<StratumInfo>& strata,
                                      const std::vector<PrecisionConstraint>& constraints,
                                      const OneStageOptions& opts = {});

// One-stage multivariate multi-domain allocation with proportional and
// uniform allocations of the same total and the planned/expected CV report.
AllocationResult beat_1st(const std::vector<StratumInfo>& strata,
                          const std::vector<PrecisionConstraint>& constraints,
                          const OneStageOptions& opts = {});

// Fills result.cv from a solved matrix; sensitivities are left at 0 unless given.
void fill_cv_report(AllocationResult& result, const ExpandedConstraintMatrix& m, const BethelSolution& sol,
                    const std::vector<StratumInfo>& strata, const std::vector<double>* sensitivity);

}  // namespace stratalloc
