#include "stratalloc/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stratalloc/error.hpp"
#include "stratalloc/numeric.hpp"

namespace stratalloc {

std::vector<Count> largest_remainder(std::span<const double> quotas, Count total) {
  std::vector<Count> out(quotas.size(), 0);
  std::vector<double> frac(quotas.size(), 0.0);
  Count assigned = 0;
  for (std::size_t h = 0; h < quotas.size(); ++h) {
    const double q = std::max(0.0, quotas[h]);
    const double fl = std::floor(q);
    out[h] = static_cast<Count>(fl);
    frac[h] = q - fl;
    assigned += out[h];
  }
  std::vector<std::size_t> order(quotas.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&frac](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  Count remaining = total - assigned;
  for (std::size_t i = 0; remaining > 0 && !order.empty(); ++i, --remaining) out[order[i % order.size()]] += 1;
  // Overshoot only happens through floating point noise on quotas summing above total.
  for (std::size_t i = order.size(); remaining < 0 && i-- > 0;) {
    const std::size_t h = order[i];
    if (out[h] > 0) {
      out[h] -= 1;
      ++remaining;
    }
  }
  return out;
}

namespace {

void require_feasible(Count n, std::size_t L) {
  if (L == 0) throw InvalidArgument("no strata");
  if (n < static_cast<Count>(L)) {
    throw InfeasibleError("sample size " + std::to_string(n) + " is smaller than the number of strata " +
                          std::to_string(L));
  }
}

std::vector<Count> allocate_by_weight(Count n, const std::vector<double>& w) {
  KahanSum total;
  for (double v : w) total.add(v);
  std::vector<double> quotas(w.size());
  for (std::size_t h = 0; h < w.size(); ++h) quotas[h] = static_cast<double>(n) * w[h] / total.value();
  return largest_remainder(quotas, n);
}

}  // namespace

std::vector<Count> alloc_uniform(Count n, const std::vector<StratumInfo>& strata) {
  require_feasible(n, strata.size());
  return allocate_by_weight(n, std::vector<double>(strata.size(), 1.0));
}

std::vector<Count> alloc_proportional(Count n, const std::vector<StratumInfo>& strata) {
  require_feasible(n, strata.size());
  std::vector<double> w;
  for (const auto& s : strata) w.push_back(s.N);
  return allocate_by_weight(n, w);
}

std::vector<Count> alloc_neyman(Count n, const std::vector<StratumInfo>& strata, std::size_t variable,
                                std::vector<std::string>* warnings) {
  require_feasible(n, strata.size());
  std::vector<double> w;
  bool any = false;
  for (const auto& s : strata) {
    if (variable >= s.stdevs.size()) throw InvalidArgument("variable index out of range");
    w.push_back(s.N * s.stdevs[variable]);
    any = any || s.stdevs[variable] > 0.0;
  }
  if (!any) {
    if (warnings) warnings->push_back("all stdevs are zero for variable " + std::to_string(variable + 1) +
                                      "; using proportional allocation");
    return alloc_proportional(n, strata);
  }
  return allocate_by_weight(n, w);
}

std::vector<Count> alloc_neyman_cost(double budget, double fixed_cost, const std::vector<StratumInfo>& strata,
                                     std::size_t variable, std::vector<std::string>* warnings) {
  if (!(budget > fixed_cost)) {
    throw InfeasibleError("budget must exceed the fixed cost (C = " + std::to_string(budget) +
                          ", c0 = " + std::to_string(fixed_cost) + ")");
  }
  if (strata.empty()) throw InvalidArgument("no strata");
  KahanSum denom;
  bool any = false;
  for (const auto& s : strata) {
    if (!(s.cost > 0.0)) throw InvalidArgument("stratum '" + s.id + "' has non-positive cost");
    if (variable >= s.stdevs.size()) throw InvalidArgument("variable index out of range");
    denom.add(s.N * s.stdevs[variable] * std::sqrt(s.cost));
    any = any || s.stdevs[variable] > 0.0;
  }
  std::vector<double> quotas;
  if (!any) {
    // Proportional shares of the units the budget buys at the average cost.
    if (warnings) warnings->push_back("all stdevs are zero for variable " + std::to_string(variable + 1) +
                                      "; using proportional shares");
    KahanSum nc;
    for (const auto& s : strata) nc.add(s.N * s.cost);
    for (const auto& s : strata) quotas.push_back((budget - fixed_cost) * s.N / nc.value());
  } else {
    for (const auto& s : strata) {
      quotas.push_back((budget - fixed_cost) * (s.N * s.stdevs[variable] / std::sqrt(s.cost)) / denom.value());
    }
  }
  KahanSum sum;
  for (double q : quotas) sum.add(q);
  return largest_remainder(quotas, static_cast<Count>(std::llround(sum.value())));
}

}  // namespace stratalloc
