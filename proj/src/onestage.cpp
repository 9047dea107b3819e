#include "stratalloc/onestage.hpp"

#include "stratalloc/baseline.hpp"
#include "stratalloc/csv.hpp"
#include "stratalloc/numeric.hpp"

namespace stratalloc {

namespace {

double total(const std::vector<double>& v) {
  KahanSum s;
  for (double x : v) s.add(x);
  return s.value();
}

}  // namespace

std::vector<double> sensitivity_10pct(const ExpandedConstraintMatrix& m, const BethelSolution& base,
                                      const BethelOptions& opts) {
  const auto loads = constraint_loads(m, base.n_cont);
  const double base_total = total(base.n_cont);
  std::vector<double> out(m.num_constraints(), 0.0);
  for (std::size_t q = 0; q < m.num_constraints(); ++q) {
    if (loads[q] < 1.0 - 1e-9) continue;
    ExpandedConstraintMatrix relaxed = m;
    relaxed.set_bound(q, m.constraints[q].bound * 1.1);
    out[q] = total(bethel_solve(relaxed, opts).n_cont) - base_total;
  }
  return out;
}

std::vector<double> sensitivity_10pct(const std::vector<StratumInfo>& strata,
                                      const std::vector<PrecisionConstraint>& constraints,
                                      const OneStageOptions& opts) {
  const auto m = build_constraints(strata, constraints, opts.minnumstrat);
  return sensitivity_10pct(m, bethel_solve(m, opts.bethel), opts.bethel);
}

void fill_cv_report(AllocationResult& result, const ExpandedConstraintMatrix& m, const BethelSolution& sol,
                    const std::vector<StratumInfo>& strata, const std::vector<double>* sensitivity) {
  std::vector<double> n(sol.n_int.begin(), sol.n_int.end());
  result.cv.clear();
  for (std::size_t q = 0; q < m.num_constraints(); ++q) {
    const auto& c = m.constraints[q];
    std::vector<std::size_t> members;
    for (std::size_t h = 0; h < m.num_strata; ++h) {
      if (strata[h].domains[c.domain_type] == c.category) members.push_back(h);
    }
    ConstraintReport r;
    r.domain_type = c.domain_type;
    r.category = c.category;
    r.variable = c.variable;
    r.planned = c.bound;
    r.expected = domain_cv(n, strata, members, c.variable);
    r.sensitivity = sensitivity ? (*sensitivity)[q] : 0.0;
    r.multiplier = sol.multipliers.empty() ? 0.0 : sol.multipliers[q];
    result.cv.push_back(r);
  }
}

AllocationResult beat_1st(const std::vector<StratumInfo>& strata,
                          const std::vector<PrecisionConstraint>& constraints, const OneStageOptions& opts) {
  const auto m = build_constraints(strata, constraints, opts.minnumstrat);
  const auto sol = bethel_solve(m, opts.bethel);

  AllocationResult r;
  for (const auto& s : strata) r.strata.push_back(s.id);
  r.n = sol.n_int;
  r.n_cont = sol.n_cont;
  r.take_all = sol.take_all;
  r.converged = sol.converged;
  r.warnings = sol.warnings;
  const Count n_total = r.total_ssu();
  r.prop = alloc_proportional(n_total, strata);
  r.equal = alloc_uniform(n_total, strata);
  r.iterations.push_back({0, 0, 0, 0, n_total});

  std::vector<double> sens;
  if (opts.sensitivity) sens = sensitivity_10pct(m, sol, opts.bethel);
  fill_cv_report(r, m, sol, strata, opts.sensitivity ? &sens : nullptr);

  r.params = {{"stages", "1"},
              {"minnumstrat", format_count(opts.minnumstrat)},
              {"epsilon", format_number(opts.bethel.epsilon)},
              {"max_iters", format_count(opts.bethel.max_iters)},
              {"bethel_iters", format_count(sol.iters)}};
  return r;
}

}  // namespace stratalloc
