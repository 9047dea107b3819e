#include "stratalloc/twostage.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <thread>

#include "stratalloc/baseline.hpp"
#include "stratalloc/csv.hpp"
#include "stratalloc/error.hpp"
#include "stratalloc/io.hpp"
#include "stratalloc/numeric.hpp"
#include "stratalloc/onestage.hpp"

namespace stratalloc {

double compute_threshold(double minimum, double delta, double f) {
  if (!(f > 0.0)) throw InvalidArgument("sampling fraction must be positive to compute the threshold");
  return minimum * delta / f;
}

SrNsrSplit split_sr_nsr(const std::vector<PsuRecord>& psus, double lambda) {
  SrNsrSplit out;
  for (std::size_t i = 0; i < psus.size(); ++i) {
    if (lambda > 0.0 && psus[i].mos > lambda) {
      out.sr.push_back(i);
    } else {
      out.nsr.push_back(i);
    }
  }
  return out;
}

double deff_simple(double rho, double b) { return 1.0 + rho * (b - 1.0); }

double deff_extended(double N_sr, double N_nsr, double n_sr, double n_nsr, double rho_sr, double rho_nsr,
                     double b_sr, double b_nsr) {
  if (n_sr < 0.0 || n_nsr < 0.0) throw InvalidArgument("sample sizes must be non-negative");
  const bool has_sr = N_sr > 0.0 && n_sr > 0.0;
  const bool has_nsr = N_nsr > 0.0 && n_nsr > 0.0;
  if (!has_sr && !has_nsr) throw InvalidArgument("deff undefined: both SR and NSR parts are empty");
  const double d_sr = deff_simple(rho_sr, b_sr);
  const double d_nsr = deff_simple(rho_nsr, b_nsr);
  if (!has_sr) return d_nsr;
  if (!has_nsr) return d_sr;
  const double w_sr = N_sr * N_sr / n_sr;
  const double w_nsr = N_nsr * N_nsr / n_nsr;
  return d_nsr + (w_sr / (w_sr + w_nsr)) * (d_sr - d_nsr);
}

Deviance deviance_decomposition(const std::vector<double>& y, const std::vector<std::string>& cluster) {
  if (y.size() != cluster.size()) throw InvalidArgument("values and cluster labels differ in length");
  KahanSum sum;
  for (double v : y) sum.add(v);
  const double mean = y.empty() ? 0.0 : sum.value() / static_cast<double>(y.size());

  struct Acc {
    KahanSum sum;
    std::size_t n = 0;
  };
  std::map<std::string, Acc> groups;
  for (std::size_t i = 0; i < y.size(); ++i) {
    auto& g = groups[cluster[i]];
    g.sum.add(y[i]);
    ++g.n;
  }
  std::map<std::string, double> means;
  for (const auto& [k, g] : groups) means[k] = g.sum.value() / static_cast<double>(g.n);

  Deviance d;
  KahanSum within, between, total;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = y[i] - means[cluster[i]];
    within.add(e * e);
    const double t = y[i] - mean;
    total.add(t * t);
  }
  for (const auto& [k, g] : groups) {
    const double e = means[k] - mean;
    between.add(static_cast<double>(g.n) * e * e);
  }
  d.within = within.value();
  d.between = between.value();
  d.total = total.value();
  return d;
}

double rho_from_population(const std::vector<double>& y, const std::vector<std::string>& cluster,
                           std::vector<std::string>* warnings) {
  const auto d = deviance_decomposition(y, cluster);
  if (!(d.total > 0.0)) {
    if (warnings) warnings->push_back("zero global deviance; rho set to 0");
    return 0.0;
  }
  return std::clamp(1.0 - d.within / d.total, 0.0, 1.0);
}

double rho_from_sample(double deff, double b) {
  if (!(b > 1.0)) throw InvalidArgument("rho from sample requires b > 1");
  return (deff - 1.0) / (b - 1.0);
}

std::vector<double> effst_compute(const std::vector<double>& var_est, const std::vector<double>& var_ht) {
  if (var_est.size() != var_ht.size()) throw InvalidArgument("variance vectors differ in length");
  std::vector<double> out(var_est.size());
  for (std::size_t j = 0; j < var_est.size(); ++j) {
    if (!(var_ht[j] > 0.0)) throw InvalidArgument("HT variance must be positive (variable " + std::to_string(j + 1) + ")");
    out[j] = var_est[j] / var_ht[j];
  }
  return out;
}

namespace {

std::map<std::string, std::vector<double>> mos_by_stratum(const std::vector<PsuRecord>& psus) {
  std::map<std::string, std::vector<double>> out;
  for (const auto& p : psus) out[p.stratum_id].push_back(p.mos);
  return out;
}

std::vector<StratumInfo> inflate(const std::vector<StratumInfo>& strata, const std::vector<std::vector<double>>& deft,
                                 const std::vector<std::vector<double>>& effst) {
  auto out = strata;
  for (std::size_t h = 0; h < out.size(); ++h) {
    for (std::size_t j = 0; j < out[h].stdevs.size(); ++j) {
      out[h].stdevs[j] *= deft[h][j] * std::sqrt(effst[h][j]);
    }
  }
  return out;
}

std::vector<std::vector<double>> factor_matrix(const std::vector<StratumInfo>& strata,
                                               const std::optional<std::vector<StratumFactors>>& f,
                                               const char* what) {
  const std::size_t J = strata.front().means.size();
  std::vector<std::vector<double>> out(strata.size(), std::vector<double>(J, 1.0));
  if (!f) return out;
  const auto aligned = align_factors(strata, *f, what);
  for (std::size_t h = 0; h < strata.size(); ++h) {
    if (aligned[h].values.size() != J) throw SchemaError(std::string(what) + " table arity does not match the number of variables");
    out[h] = aligned[h].values;
  }
  return out;
}

struct Iterate {
  std::vector<std::vector<double>> deft;  // used by the Bethel solve
  ExpandedConstraintMatrix matrix;
  BethelSolution solution;
  std::vector<StratumInfo> inflated;
  StageDesign design;
  Count ssu = 0;
};

Count sum_counts(const std::vector<Count>& v) {
  Count t = 0;
  for (Count x : v) t += x;
  return t;
}

}  // namespace

StageDesign stage_design(const TwoStageInputs& in, const std::vector<DesignParams>& design, const RhoTable& rho,
                         const std::vector<Count>& n, Count min_psu_strat) {
  const auto by_stratum = mos_by_stratum(in.psus);
  const std::size_t H = in.strata.size();
  const std::size_t J = in.strata.front().means.size();
  StageDesign d;
  d.threshold.resize(H);
  d.psu_sr.resize(H);
  d.psu_nsr.resize(H);
  d.ssu_sr.resize(H);
  d.ssu_nsr.resize(H);
  d.deft.assign(H, std::vector<double>(J, 1.0));
  for (std::size_t h = 0; h < H; ++h) {
    const auto& s = in.strata[h];
    const auto it = by_stratum.find(s.id);
    if (it == by_stratum.end()) throw ReferenceError("stratum '" + s.id + "' has no PSUs");
    const double nh = static_cast<double>(n[h]);
    const double f = nh / s.N;
    const double delta = design[h].delta;
    const double lambda = compute_threshold(static_cast<double>(design[h].minimum), delta, f);
    KahanSum N_sr, N_nsr;
    Count sr = 0, available = 0;
    for (double mos : it->second) {
      if (mos > lambda) {
        N_sr.add(mos);
        ++sr;
      } else {
        N_nsr.add(mos);
        ++available;
      }
    }
    double n_sr = available == 0 ? nh : std::min(nh, f * N_sr.value());
    double n_nsr = nh - n_sr;
    if (n_nsr < 1e-9) {
      n_nsr = 0.0;
      n_sr = nh;
    }
    Count nsr = 0;
    if (n_nsr > 0.0) {
      const double per_psu = static_cast<double>(design[h].minimum) * delta;
      const Count needed = static_cast<Count>(std::ceil(n_nsr / per_psu - 1e-9));
      nsr = std::min(available, std::max(min_psu_strat, needed));
    }
    d.threshold[h] = lambda;
    d.psu_sr[h] = sr;
    d.psu_nsr[h] = nsr;
    d.ssu_sr[h] = n_sr;
    d.ssu_nsr[h] = n_nsr;
    const double b_sr = delta;
    const double b_nsr = nsr > 0 ? std::max(1.0, n_nsr / static_cast<double>(nsr)) : 1.0;
    for (std::size_t j = 0; j < J; ++j) {
      const double deff = deff_extended(sr > 0 ? N_sr.value() : 0.0, nsr > 0 ? N_nsr.value() : 0.0, n_sr, n_nsr,
                                        rho[h].rho_sr[j], rho[h].rho_nsr[j], b_sr, b_nsr);
      d.deft[h][j] = std::sqrt(std::max(deff, 0.0));
    }
  }
  return d;
}

AllocationResult beat_2st(const TwoStageInputs& in, const TwoStageOptions& opts) {
  if (in.strata.empty()) throw InvalidArgument("no strata");
  if (opts.min_psu_strat < 1) throw InvalidArgument("minPSUstrat must be >= 1");
  if (!(opts.stop.max_ssu_diff > 0.0) || !(opts.stop.max_deft_diff > 0.0) || opts.stop.max_iters < 1) {
    throw InvalidArgument("stop rule values must be positive");
  }
  const auto design = align_design(in.strata, in.design);
  const auto rho = align_rho(in.strata, in.rho);
  const auto effst = factor_matrix(in.strata, in.effst, "effst");
  const auto deft_start = factor_matrix(in.strata, in.deft_start, "deft");

  auto solve = [&](const std::vector<std::vector<double>>& deft) {
    Iterate it;
    it.deft = deft;
    it.inflated = inflate(in.strata, deft, effst);
    it.matrix = build_constraints(it.inflated, in.constraints, opts.minnumstrat);
    it.solution = bethel_solve(it.matrix, opts.bethel);
    it.design = stage_design(in, design, rho, it.solution.n_int, opts.min_psu_strat);
    it.ssu = sum_counts(it.solution.n_int);
    return it;
  };

  AllocationResult r;
  std::vector<Iterate> history;
  history.push_back(solve(deft_start));
  r.iterations.push_back({0, 0, 0, 0, history.back().ssu});
  r.deft_trace.push_back(deft_start);

  bool converged = false;
  std::size_t chosen = 0;
  for (int k = 1;; ++k) {
    const Iterate& prev = history.back();
    Iterate next = solve(prev.design.deft);
    double deft_diff = 0.0;
    for (std::size_t h = 0; h < next.deft.size(); ++h) {
      for (std::size_t j = 0; j < next.deft[h].size(); ++j) {
        deft_diff = std::max(deft_diff, std::fabs(next.deft[h][j] - prev.deft[h][j]));
      }
    }
    const double ssu_diff = std::fabs(static_cast<double>(next.ssu - prev.ssu));
    const Count sr = sum_counts(next.design.psu_sr);
    const Count nsr = sum_counts(next.design.psu_nsr);
    r.iterations.push_back({k, sr, nsr, sr + nsr, next.ssu});
    r.deft_trace.push_back(next.deft);
    history.push_back(std::move(next));
    chosen = history.size() - 1;

    if (ssu_diff < opts.stop.max_ssu_diff || deft_diff < opts.stop.max_deft_diff) {
      converged = true;
      break;
    }
    if (history.size() >= 3 && history[chosen].solution.n_int == history[chosen - 2].solution.n_int) {
      if (history[chosen - 1].ssu < history[chosen].ssu) chosen -= 1;
      converged = true;
      r.warnings.push_back("allocation oscillates with period 2; returning the smaller iterate (iteration " +
                           std::to_string(chosen) + ")");
      break;
    }
    if (k >= opts.stop.max_iters) {
      r.warnings.push_back("two-stage iteration stopped at the maximum of " + std::to_string(opts.stop.max_iters) +
                           " iterations");
      break;
    }
  }

  const Iterate& fin = history[chosen];
  double under = 0.0;
  for (std::size_t h = 0; h < fin.deft.size(); ++h) {
    for (std::size_t j = 0; j < fin.deft[h].size(); ++j) under = std::max(under, fin.design.deft[h][j] - fin.deft[h][j]);
  }
  if (under >= opts.stop.max_deft_diff) {
    r.warnings.push_back("the returned allocation implies deft up to " + format_number(under) +
                         " above the values it was solved with; expected CVs may exceed the bounds");
  }
  for (const auto& s : in.strata) r.strata.push_back(s.id);
  r.n = fin.solution.n_int;
  r.n_cont = fin.solution.n_cont;
  r.take_all = fin.solution.take_all;
  r.psu_sr = fin.design.psu_sr;
  r.psu_nsr = fin.design.psu_nsr;
  r.ssu_sr = fin.design.ssu_sr;
  r.ssu_nsr = fin.design.ssu_nsr;
  r.threshold = fin.design.threshold;
  r.converged = converged && fin.solution.converged;
  for (const auto& w : fin.solution.warnings) r.warnings.push_back(w);
  const Count n_total = r.total_ssu();
  r.prop = alloc_proportional(n_total, in.strata);
  r.equal = alloc_uniform(n_total, in.strata);

  std::vector<double> sens;
  if (opts.sensitivity) sens = sensitivity_10pct(fin.matrix, fin.solution, opts.bethel);
  fill_cv_report(r, fin.matrix, fin.solution, fin.inflated, opts.sensitivity ? &sens : nullptr);

  r.params = {{"stages", "2"},
              {"minnumstrat", format_count(opts.minnumstrat)},
              {"minPSUstrat", format_count(opts.min_psu_strat)},
              {"max_ssu_diff", format_number(opts.stop.max_ssu_diff)},
              {"max_deft_diff", format_number(opts.stop.max_deft_diff)},
              {"max_iters", format_count(opts.stop.max_iters)},
              {"epsilon", format_number(opts.bethel.epsilon)},
              {"bethel_max_iters", format_count(opts.bethel.max_iters)},
              {"deft_start", in.deft_start ? "file" : "1"},
              {"effst", in.effst ? "file" : "1"},
              {"final_iteration", format_count(static_cast<Count>(chosen))}};
  return r;
}

std::vector<MinSsuPoint> sensitivity_min_SSU(const TwoStageInputs& in, Count min, Count max, int n_points,
                                             const TwoStageOptions& opts, int jobs) {
  if (min < 1 || max < min) throw InvalidArgument("sensitivity grid needs 1 <= min <= max");
  if (n_points < 1) throw InvalidArgument("n_points must be >= 1");
  std::vector<Count> grid;
  if (min == max || n_points == 1) {
    grid.push_back(min);
  } else {
    for (int i = 0; i < n_points; ++i) {
      const double v = static_cast<double>(min) +
                       static_cast<double>(i) * static_cast<double>(max - min) / static_cast<double>(n_points - 1);
      grid.push_back(static_cast<Count>(std::llround(v)));
    }
  }
  std::vector<MinSsuPoint> out(grid.size());
  std::vector<std::exception_ptr> errors(grid.size());
  TwoStageOptions o = opts;
  o.sensitivity = false;
  auto run = [&](std::size_t i) {
    try {
      TwoStageInputs local = in;
      for (auto& d : local.design) d.minimum = grid[i];
      const auto r = beat_2st(local, o);
      out[i] = {grid[i], r.total_psu(), r.total_ssu()};
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, grid.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < grid.size();) run(i);
    });
  }
  for (std::size_t i; (i = next++) < grid.size();) run(i);
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace stratalloc
