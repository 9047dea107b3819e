#pragma once

#include <vector>

#include "stratalloc/csv.hpp"
#include "stratalloc/twostage.hpp"
#include "stratalloc/types.hpp"

namespace stratalloc {

// STRATUM, ALLOC, PROP, EQUAL.
Table alloc_table(const AllocationResult& r);
// The strata file with the allocation appended as column SOLUZ.
Table file_strata_table(const std::vector<StratumInfo>& strata, const AllocationResult& r);
// DOM, DOMVALUE, VAR, PLANNED_CV, ACTUAL_CV, SENS_10PCT.
Table sensitivity_table(const AllocationResult& r);
// DOM, DOMVALUE, VAR, PLANNED_CV, ACTUAL_CV.
Table expected_cv_table(const AllocationResult& r);
// iter, PSU_SR, PSU_NSR, PSU_Total, SSU.
Table iterations_table(const AllocationResult& r);
// ITER, STRATUM, VAR, DEFT (long format).
Table deft_trace_table(const AllocationResult& r);
// MINIMUM, PSU, SSU.
Table min_ssu_table(const std::vector<MinSsuPoint>& points);

}  // namespace stratalloc
