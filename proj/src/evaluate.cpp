#include "stratalloc/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <thread>

#include "stratalloc/error.hpp"
#include "stratalloc/numeric.hpp"
#include "stratalloc/rng.hpp"

namespace stratalloc {

double estimate_mean(const std::vector<SelectedSsu>& sample, const std::vector<double>& y,
                     const std::vector<bool>& in_domain, double N_d) {
  KahanSum total;
  bool any = false;
  for (const auto& s : sample) {
    if (!in_domain[s.row]) continue;
    total.add(y[s.row] * s.weight);
    any = true;
  }
  if (!any) return std::numeric_limits<double>::quiet_NaN();
  return total.value() / N_d;
}

namespace {

struct DomainDef {
  std::size_t type;
  std::string category;
  double N = 0.0;
};

}  // namespace

EvalReport eval_2stage(const Frame& frame, const std::vector<StratumInfo>& strata, const EvalDesign& design,
                       std::uint64_t seed, const EvalOptions& opts) {
  if (opts.nsampl < 2) throw InvalidArgument("nsampl must be >= 2");
  if (!opts.redraw_psu && design.fixed_sample.empty()) {
    throw InvalidArgument("a PSU sample is required when PSUs are not redrawn");
  }
  const std::size_t J = frame.target_names.size();
  std::map<std::string, std::size_t> stratum_index;
  for (std::size_t h = 0; h < strata.size(); ++h) stratum_index[strata[h].id] = h;

  // Domain categories in order of domain type, then first appearance.
  std::vector<DomainDef> domains;
  std::map<std::pair<std::size_t, std::string>, std::size_t> domain_index;
  const std::size_t types = strata.empty() ? 0 : strata.front().domains.size();
  for (std::size_t t = 0; t < types; ++t) {
    for (const auto& s : strata) {
      const auto key = std::make_pair(t, s.domains[t]);
      if (!domain_index.count(key)) {
        domain_index[key] = domains.size();
        domains.push_back({t, s.domains[t], 0.0});
      }
    }
  }
  // Row -> domains it belongs to; frame units define the domain sizes.
  std::vector<std::vector<bool>> member(domains.size(), std::vector<bool>(frame.size(), false));
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const auto it = stratum_index.find(frame.stratum_id[i]);
    if (it == stratum_index.end()) {
      throw ReferenceError("unknown stratum '" + frame.stratum_id[i] + "' in the frame");
    }
    for (std::size_t t = 0; t < types; ++t) {
      const std::size_t d = domain_index.at({t, strata[it->second].domains[t]});
      member[d][i] = true;
      domains[d].N += 1.0;
    }
  }

  const auto rows = index_rows(frame.psu_id);
  const std::size_t R = static_cast<std::size_t>(opts.nsampl);
  std::vector<std::vector<double>> est(R, std::vector<double>(domains.size() * J));
  std::vector<double> weight_totals(R);
  std::vector<std::vector<std::string>> warnings(R);
  std::vector<std::exception_ptr> errors(R);

  auto replicate = [&](std::size_t r) {
    try {
      std::vector<SelectedPsu> psus;
      if (opts.redraw_psu) {
        psus = select_PSU(design.plan, design.psus, design.design, opts.min_psu_strat,
                          derive_seed(seed, "replicate-psu", static_cast<std::uint64_t>(r))).sample;
      } else {
        psus = design.fixed_sample;
      }
      const auto ssus = select_SSU(rows, psus, derive_seed(seed, "replicate-ssu", static_cast<std::uint64_t>(r)),
                                   r == 0 ? &warnings[r] : nullptr);
      KahanSum wt;
      for (const auto& s : ssus) wt.add(s.weight);
      weight_totals[r] = wt.value();
      for (std::size_t d = 0; d < domains.size(); ++d) {
        for (std::size_t j = 0; j < J; ++j) est[r][d * J + j] = estimate_mean(ssus, frame.y[j], member[d], domains[d].N);
      }
    } catch (...) {
      errors[r] = std::current_exception();
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(opts.jobs, 1)), 1, R);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t r; (r = next++) < R;) replicate(r);
    });
  }
  for (std::size_t r; (r = next++) < R;) replicate(r);
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  EvalReport report;
  report.nsampl = opts.nsampl;
  report.variables = frame.target_names;
  report.weight_totals = weight_totals;
  for (const auto& w : warnings) report.warnings.insert(report.warnings.end(), w.begin(), w.end());
  for (std::size_t d = 0; d < domains.size(); ++d) {
    EvalRow row;
    row.domain_type = domains[d].type;
    row.category = domains[d].category;
    for (std::size_t j = 0; j < J; ++j) {
      KahanSum sum, truth;
      std::size_t valid = 0;
      for (std::size_t r = 0; r < R; ++r) {
        const double v = est[r][d * J + j];
        if (std::isnan(v)) continue;
        sum.add(v);
        ++valid;
      }
      for (std::size_t i = 0; i < frame.size(); ++i) {
        if (member[d][i]) truth.add(frame.y[j][i]);
      }
      if (j == 0) row.dropped = static_cast<int>(R - valid);
      const double mean = valid ? sum.value() / static_cast<double>(valid) : std::numeric_limits<double>::quiet_NaN();
      KahanSum dev;
      for (std::size_t r = 0; r < R; ++r) {
        const double v = est[r][d * J + j];
        if (!std::isnan(v)) dev.add((v - mean) * (v - mean));
      }
      const double sd = valid >= 2 ? std::sqrt(dev.value() / static_cast<double>(valid - 1))
                                   : std::numeric_limits<double>::quiet_NaN();
      double cv = std::numeric_limits<double>::quiet_NaN();
      if (valid >= 2) cv = sd == 0.0 ? 0.0 : sd / std::fabs(mean);
      row.mean.push_back(mean);
      row.sd.push_back(sd);
      row.cv.push_back(cv);
      row.truth.push_back(truth.value() / domains[d].N);
    }
    if (row.dropped > 0) {
      report.warnings.push_back("domain '" + row.category + "': " + std::to_string(row.dropped) +
                                " replicates without sampled units were dropped");
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

Table coeff_var_to_table(const EvalReport& r) {
  std::vector<std::string> header;
  for (std::size_t j = 0; j < r.variables.size(); ++j) header.push_back("CV" + std::to_string(j + 1));
  header.emplace_back("dom");
  header.emplace_back("DOM_TYPE");
  Table t(header);
  for (const auto& row : r.rows) {
    std::vector<std::string> cells;
    for (double cv : row.cv) cells.push_back(format_number(cv));
    cells.push_back(row.category);
    cells.push_back(domain_type_name(row.domain_type));
    t.add_row(std::move(cells));
  }
  return t;
}

}  // namespace stratalloc
