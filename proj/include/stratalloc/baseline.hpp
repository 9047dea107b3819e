#pragma once

#include <span>
#include <string>
#include <vector>

#include "stratalloc/types.hpp"

namespace stratalloc {

// Integerizes non-negative quotas to sum exactly `total`: floors first, then
// hands the remaining units to the largest fractional parts (lowest index wins
// ties).
std::vector<Count> largest_remainder(std::span<const double> quotas, Count total);

// n/L per stratum. Throws InfeasibleError when n < L.
std::vector<Count> alloc_uniform(Count n, const std::vector<StratumInfo>& strata);

// n * N_h / N per stratum.
std::vector<Count> alloc_proportional(Count n, const std::vector<StratumInfo>& strata);

// n proportional to N_h * S_hj. All-zero stdevs fall back to proportional and
// append a warning when `warnings` is given.
std::vector<Count> alloc_neyman(Count n, const std::vector<StratumInfo>& strata, std::size_t variable,
                                std::vector<std::string>* warnings = nullptr);

// Budget-constrained optimum: (C - c0) * (N_h S_h / sqrt(c_h)) / sum(N_h S_h sqrt(c_h)).
// The integer total is the rounded sum of the quotas.
std::vector<Count> alloc_neyman_cost(double budget, double fixed_cost, const std::vector<StratumInfo>& strata,
                                     std::size_t variable, std::vector<std::string>* warnings = nullptr);

}  // namespace stratalloc
