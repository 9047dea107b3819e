#pragma once

#include <string>
#include <vector>

#include "stratalloc/types.hpp"
#include "stratalloc/validate.hpp"

namespace stratalloc {

// Linearized CV constraints of a multi-domain, multivariate allocation.
//
// For constraint q = (domain d, variable j) with bound delta and stratum terms
//   A_hq = (N_h / N_d)^2 S_hj^2 / mean_dj^2      (h in d, 0 otherwise),
// CV <= delta is equivalent to sum_h A_hq / n_h <= delta^2 + sum_h A_hq / N_h.
// Dividing by the right-hand side gives the normalized form sum_h a_hq / n_h <= 1.
struct ExpandedConstraintMatrix {
  struct Constraint {
    std::size_t domain_type = 0;
    std::string category;
    std::size_t variable = 0;
    double bound = 0.0;  // planned CV
    double fpc = 0.0;    // sum_h A_hq / N_h
  };

  std::size_t num_strata = 0;
  std::vector<Constraint> constraints;
  std::vector<double> raw;    // A_hq, row-major [h * Q + q]
  std::vector<double> cost;   // c_h
  std::vector<double> lower;  // min(minnumstrat, N_h); N_h for take-all (CENS) strata
  std::vector<double> upper;  // N_h

  std::size_t num_constraints() const { return constraints.size(); }
  double raw_at(std::size_t h, std::size_t q) const { return raw[h * constraints.size() + q]; }
  // Normalized coefficient a_hq.
  double at(std::size_t h, std::size_t q) const;
  // Replaces the CV bound of constraint q (used for sensitivity re-solves).
  void set_bound(std::size_t q, double bound) { constraints[q].bound = bound; }
};

// Throws InvalidArgument("CV undefined for zero mean ...") when a domain mean
// is zero, and anything resolve_domains throws.
ExpandedConstraintMatrix build_constraints(const std::vector<StratumInfo>& strata,
                                           const std::vector<PrecisionConstraint>& constraints,
                                           Count minnumstrat);

struct BethelOptions {
  double epsilon = 1e-11;
  int max_iters = 200;
};

struct BethelSolution {
  std::vector<double> n_cont;
  std::vector<Count> n_int;
  std::vector<double> multipliers;  // normalized; sum to 1
  std::vector<bool> take_all;       // continuous allocation reached N_h
  bool converged = false;
  int iters = 0;
  std::vector<std::string> warnings;
};

// Minimizes sum_h c_h n_h subject to the normalized constraints and
// lower_h <= n_h <= upper_h.
//
// Fixed point on normalized multipliers alpha (Bethel/Chromy): for a given
// alpha, n_h = clamp(sqrt(t * sum_q alpha_q a_hq / c_h)) with the scale t
// solved exactly so that sum_q alpha_q g_q = 1, where g_q = sum_h a_hq / n_h;
// then alpha_q <- alpha_q g_q^2 / sum(alpha g^2). The final continuous point
// is rescaled until every g_q <= 1, so the ceiling is always feasible.
BethelSolution bethel_solve(const ExpandedConstraintMatrix& m, const BethelOptions& opts = {});

// g_q for an allocation (continuous or integer); g_q <= 1 iff CV_q <= bound.
std::vector<double> constraint_loads(const ExpandedConstraintMatrix& m, const std::vector<double>& n);

// CV per resolved domain target and variable, [target][variable].
std::vector<std::vector<double>> expected_cv(const std::vector<Count>& n, const std::vector<StratumInfo>& strata,
                                             const std::vector<PrecisionConstraint>& constraints);
std::vector<std::vector<double>> expected_cv(const std::vector<double>& n, const std::vector<StratumInfo>& strata,
                                             const std::vector<PrecisionConstraint>& constraints);

// CV of one domain mean (sum over the given member strata).
double domain_cv(const std::vector<double>& n, const std::vector<StratumInfo>& strata,
                 const std::vector<std::size_t>& members, std::size_t variable);

}  // namespace stratalloc
