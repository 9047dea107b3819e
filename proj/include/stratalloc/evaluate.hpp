#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stratalloc/csv.hpp"
#include "stratalloc/frame.hpp"
#include "stratalloc/selection.hpp"
#include "stratalloc/types.hpp"

namespace stratalloc {

// Horvitz-Thompson mean sum(y_k d_k) / N_d over the sampled units of a
// domain. Returns NaN when no sampled unit falls in the domain.
double estimate_mean(const std::vector<SelectedSsu>& sample, const std::vector<double>& y,
                     const std::vector<bool>& in_domain, double N_d);

struct EvalOptions {
  int nsampl = 500;
  bool redraw_psu = true;
  int jobs = 1;
  Count min_psu_strat = 2;
};

struct EvalRow {
  std::size_t domain_type = 0;
  std::string category;
  std::vector<double> cv;       // per variable
  std::vector<double> mean;     // mean of replicate estimates
  std::vector<double> sd;       // sd of replicate estimates
  std::vector<double> truth;    // frame domain mean
  int dropped = 0;              // replicates without a sampled unit in the domain
};

struct EvalReport {
  int nsampl = 0;
  std::vector<std::string> variables;
  std::vector<EvalRow> rows;
  std::vector<double> weight_totals;  // whole-sample weight total per replicate
  std::vector<std::string> warnings;
};

struct EvalDesign {
  StagePlan plan;
  std::vector<PsuRecord> psus;
  std::vector<DesignParams> design;
  std::vector<SelectedPsu> fixed_sample;  // used when redraw_psu is off
};

// Repeated two-stage selection from the frame. Replicate r draws PSUs from
// derive_seed(seed, "replicate-psu", r) and SSUs from
// derive_seed(seed, "replicate-ssu", r), so results do not depend on jobs.
// Domains are the categories of every domain type in `strata`.
// Throws InvalidArgument when nsampl < 2.
EvalReport eval_2stage(const Frame& frame, const std::vector<StratumInfo>& strata, const EvalDesign& design,
                       std::uint64_t seed, const EvalOptions& opts = {});

// Columns CV1..CVJ, dom, DOM_TYPE.
Table coeff_var_to_table(const EvalReport& r);

}  // namespace stratalloc
