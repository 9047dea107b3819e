#include "stratalloc/bethel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stratalloc/error.hpp"
#include "stratalloc/numeric.hpp"

namespace stratalloc {

double ExpandedConstraintMatrix::at(std::size_t h, std::size_t q) const {
  const auto& c = constraints[q];
  return raw_at(h, q) / (c.bound * c.bound + c.fpc);
}

ExpandedConstraintMatrix build_constraints(const std::vector<StratumInfo>& strata,
                                           const std::vector<PrecisionConstraint>& constraints,
                                           Count minnumstrat) {
  if (minnumstrat < 1) throw InvalidArgument("minnumstrat must be >= 1");
  const auto targets = resolve_domains(strata, constraints);
  const std::size_t H = strata.size();
  const std::size_t J = strata.front().means.size();

  ExpandedConstraintMatrix m;
  m.num_strata = H;
  for (const auto& s : strata) {
    if (s.means.size() != J || s.stdevs.size() != J) {
      throw InvalidArgument("stratum '" + s.id + "' has inconsistent number of variables");
    }
    m.cost.push_back(s.cost);
    m.upper.push_back(s.N);
    m.lower.push_back(s.cens ? s.N : std::min(static_cast<double>(minnumstrat), s.N));
  }

  struct Column {
    std::vector<double> a;
  };
  std::vector<Column> cols;
  for (const auto& t : targets) {
    if (t.cv.size() != J) throw InvalidArgument("constraint arity does not match the number of variables");
    KahanSum nd;
    for (std::size_t h : t.strata) nd.add(strata[h].N);
    for (std::size_t j = 0; j < J; ++j) {
      KahanSum total;
      for (std::size_t h : t.strata) total.add(strata[h].N * strata[h].means[j]);
      const double mean = total.value() / nd.value();
      if (mean == 0.0) {
        throw InvalidArgument("CV undefined for zero mean (domain '" + t.category + "', variable " +
                              std::to_string(j + 1) + ")");
      }
      Column col{std::vector<double>(H, 0.0)};
      KahanSum fpc;
      for (std::size_t h : t.strata) {
        const double w = strata[h].N / nd.value();
        const double sd = strata[h].stdevs[j];
        col.a[h] = w * w * sd * sd / (mean * mean);
        fpc.add(col.a[h] / strata[h].N);
      }
      m.constraints.push_back({t.domain_type, t.category, j, t.cv[j], fpc.value()});
      cols.push_back(std::move(col));
    }
  }
  const std::size_t Q = cols.size();
  m.raw.assign(H * Q, 0.0);
  for (std::size_t q = 0; q < Q; ++q) {
    for (std::size_t h = 0; h < H; ++h) m.raw[h * Q + q] = cols[q].a[h];
  }
  return m;
}

namespace {

class Solver {
 public:
  explicit Solver(const ExpandedConstraintMatrix& m) : m_(m), H_(m.num_strata), Q_(m.num_constraints()) {
    a_.resize(H_ * Q_);
    for (std::size_t h = 0; h < H_; ++h) {
      for (std::size_t q = 0; q < Q_; ++q) a_[h * Q_ + q] = m.at(h, q);
    }
  }

  std::vector<double> weights(const std::vector<double>& alpha) const {
    std::vector<double> s(H_, 0.0);
    for (std::size_t h = 0; h < H_; ++h) {
      KahanSum acc;
      for (std::size_t q = 0; q < Q_; ++q) acc.add(alpha[q] * a_[h * Q_ + q]);
      s[h] = acc.value();
    }
    return s;
  }

  std::vector<double> allocation(double t, const std::vector<double>& s) const {
    std::vector<double> n(H_);
    for (std::size_t h = 0; h < H_; ++h) n[h] = alloc_one(h, t, s[h]);
    return n;
  }

  std::vector<double> loads(const std::vector<double>& n) const {
    std::vector<double> g(Q_, 0.0);
    for (std::size_t q = 0; q < Q_; ++q) {
      KahanSum acc;
      for (std::size_t h = 0; h < H_; ++h) acc.add(a_[h * Q_ + q] / n[h]);
      g[q] = acc.value();
    }
    return g;
  }

  // Scale t >= 0 with sum_h s_h / n_h(t) = 1, or 0 when the lower bounds
  // already satisfy the aggregated constraint.
  double solve_scale(const std::vector<double>& s) const {
    if (aggregate(0.0, s) <= 1.0) return 0.0;
    std::vector<double> bp;
    for (std::size_t h = 0; h < H_; ++h) {
      if (s[h] <= 0.0) continue;
      bp.push_back(m_.lower[h] * m_.lower[h] * m_.cost[h] / s[h]);
      bp.push_back(m_.upper[h] * m_.upper[h] * m_.cost[h] / s[h]);
    }
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
    if (aggregate(bp.back(), s) > 1.0) return bp.back();
    // Largest breakpoint with aggregate > 1; bp[0] qualifies since every
    // stratum sits at its lower bound there.
    std::size_t lo = 0, hi = bp.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (aggregate(bp[mid], s) > 1.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const double t_mid = std::sqrt(bp[lo] * bp[hi]);
    KahanSum A, B;
    for (std::size_t h = 0; h < H_; ++h) {
      if (s[h] <= 0.0) continue;
      const double free_n = std::sqrt(t_mid * s[h] / m_.cost[h]);
      if (free_n <= m_.lower[h]) {
        B.add(s[h] / m_.lower[h]);
      } else if (free_n >= m_.upper[h]) {
        B.add(s[h] / m_.upper[h]);
      } else {
        A.add(std::sqrt(s[h] * m_.cost[h]));
      }
    }
    const double denom = 1.0 - B.value();
    if (!(denom > 0.0) || A.value() <= 0.0) return bp[hi];
    const double t = (A.value() / denom) * (A.value() / denom);
    return std::clamp(t, bp[lo], bp[hi]);
  }

  // Smallest t >= t0 at which every constraint holds.
  double feasible_scale(double t0, const std::vector<double>& s) const {
    auto max_load = [&](double t) {
      const auto g = loads(allocation(t, s));
      return g.empty() ? 0.0 : *std::max_element(g.begin(), g.end());
    };
    if (max_load(t0) <= 1.0) return t0;
    double t_hi = 0.0;
    for (std::size_t h = 0; h < H_; ++h) {
      if (s[h] > 0.0) t_hi = std::max(t_hi, m_.upper[h] * m_.upper[h] * m_.cost[h] / s[h]);
    }
    t_hi *= 2.0;
    if (max_load(t_hi) > 1.0) return t_hi;
    double t_lo = t0;
    if (t_lo <= 0.0) {
      t_lo = std::numeric_limits<double>::max();
      for (std::size_t h = 0; h < H_; ++h) {
        if (s[h] > 0.0) t_lo = std::min(t_lo, m_.lower[h] * m_.lower[h] * m_.cost[h] / s[h]);
      }
      t_lo *= 0.5;
    }
    for (int i = 0; i < 200 && t_hi > t_lo * (1.0 + 1e-15); ++i) {
      const double mid = std::sqrt(t_lo * t_hi);
      if (max_load(mid) <= 1.0) {
        t_hi = mid;
      } else {
        t_lo = mid;
      }
    }
    return t_hi;
  }

  std::size_t num_constraints() const { return Q_; }

 private:
  double alloc_one(std::size_t h, double t, double s) const {
    if (s <= 0.0) return m_.lower[h];
    return std::clamp(std::sqrt(t * s / m_.cost[h]), m_.lower[h], m_.upper[h]);
  }

  double aggregate(double t, const std::vector<double>& s) const {
    KahanSum acc;
    for (std::size_t h = 0; h < H_; ++h) {
      if (s[h] > 0.0) acc.add(s[h] / alloc_one(h, t, s[h]));
    }
    return acc.value();
  }

  const ExpandedConstraintMatrix& m_;
  std::size_t H_;
  std::size_t Q_;
  std::vector<double> a_;
};

}  // namespace

BethelSolution bethel_solve(const ExpandedConstraintMatrix& m, const BethelOptions& opts) {
  const std::size_t H = m.num_strata;
  const std::size_t Q = m.num_constraints();
  Solver solver(m);
  BethelSolution sol;
  sol.multipliers.assign(Q, Q ? 1.0 / static_cast<double>(Q) : 0.0);

  if (Q == 0) {
    sol.n_cont = m.lower;
    sol.converged = true;
  } else {
    std::vector<double>& alpha = sol.multipliers;
    for (int it = 1; it <= opts.max_iters; ++it) {
      sol.iters = it;
      const auto s = solver.weights(alpha);
      const double t = solver.solve_scale(s);
      const auto g = solver.loads(solver.allocation(t, s));
      if (t == 0.0 && *std::max_element(g.begin(), g.end()) <= 1.0) {
        sol.converged = true;  // lower bounds are optimal
        break;
      }
      KahanSum norm;
      for (std::size_t q = 0; q < Q; ++q) norm.add(alpha[q] * g[q] * g[q]);
      if (!(norm.value() > 0.0)) {
        sol.converged = true;
        break;
      }
      double diff = 0.0;
      for (std::size_t q = 0; q < Q; ++q) {
        const double next = alpha[q] * g[q] * g[q] / norm.value();
        diff = std::max(diff, std::fabs(next - alpha[q]));
        alpha[q] = next;
      }
      if (diff < opts.epsilon) {
        sol.converged = true;
        break;
      }
    }
    if (!sol.converged) {
      sol.warnings.push_back("Bethel multipliers did not converge after " + std::to_string(opts.max_iters) +
                             " iterations; allocation rescaled to feasibility");
    }
    // A tiny floor keeps every constraint represented for the feasibility rescale.
    std::vector<double> floored = alpha;
    for (double& v : floored) v += 1e-15;
    const auto s = solver.weights(floored);
    const double t = solver.feasible_scale(solver.solve_scale(s), s);
    sol.n_cont = solver.allocation(t, s);
  }

  sol.n_int.resize(H);
  sol.take_all.resize(H);
  for (std::size_t h = 0; h < H; ++h) {
    const double c = std::clamp(std::ceil(sol.n_cont[h]), std::ceil(m.lower[h]), m.upper[h]);
    sol.n_int[h] = static_cast<Count>(c);
    sol.take_all[h] = sol.n_cont[h] >= m.upper[h] * (1.0 - 1e-12);
  }
  return sol;
}

std::vector<double> constraint_loads(const ExpandedConstraintMatrix& m, const std::vector<double>& n) {
  std::vector<double> g(m.num_constraints(), 0.0);
  for (std::size_t q = 0; q < m.num_constraints(); ++q) {
    KahanSum acc;
    for (std::size_t h = 0; h < m.num_strata; ++h) acc.add(m.at(h, q) / n[h]);
    g[q] = acc.value();
  }
  return g;
}

double domain_cv(const std::vector<double>& n, const std::vector<StratumInfo>& strata,
                 const std::vector<std::size_t>& members, std::size_t variable) {
  KahanSum nd, total, var;
  for (std::size_t h : members) {
    nd.add(strata[h].N);
    total.add(strata[h].N * strata[h].means[variable]);
  }
  for (std::size_t h : members) {
    const double w = strata[h].N / nd.value();
    const double sd = strata[h].stdevs[variable];
    var.add(w * w * sd * sd * (1.0 / n[h] - 1.0 / strata[h].N));
  }
  const double mean = total.value() / nd.value();
  const double v = std::max(0.0, var.value());
  if (v == 0.0) return 0.0;
  if (mean == 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(v) / std::fabs(mean);
}

std::vector<std::vector<double>> expected_cv(const std::vector<double>& n, const std::vector<StratumInfo>& strata,
                                             const std::vector<PrecisionConstraint>& constraints) {
  const auto targets = resolve_domains(strata, constraints);
  const std::size_t J = strata.front().means.size();
  std::vector<std::vector<double>> out;
  for (const auto& t : targets) {
    std::vector<double> row(J);
    for (std::size_t j = 0; j < J; ++j) row[j] = domain_cv(n, strata, t.strata, j);
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<std::vector<double>> expected_cv(const std::vector<Count>& n, const std::vector<StratumInfo>& strata,
                                             const std::vector<PrecisionConstraint>& constraints) {
  std::vector<double> nd(n.begin(), n.end());
  return expected_cv(nd, strata, constraints);
}

}  // namespace stratalloc
