#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stratalloc/csv.hpp"
#include "stratalloc/rng.hpp"
#include "stratalloc/types.hpp"

namespace stratalloc {

// Per-stratum PSU/SSU plan of a two-stage allocation (the alloc2.csv rows).
struct StagePlan {
  std::vector<std::string> strata;
  std::vector<Count> psu_sr;
  std::vector<Count> psu_nsr;
  std::vector<Count> ssu;
  std::vector<double> ssu_sr;
  std::vector<double> ssu_nsr;
  std::vector<double> threshold;

  std::size_t index_of(const std::string& stratum) const;
};

StagePlan plan_from_result(const AllocationResult& r);
StagePlan plan_from_table(const Table& t);
Table plan_to_table(const StagePlan& p);

struct SubStratum {
  std::string stratum_id;
  std::string sub_id;  // "<stratum>-<k>"
  std::vector<std::string> psu_ids;
  std::vector<double> mos;
  double size_total = 0.0;
  Count n_psu_to_select = 0;
  bool is_sr = false;
};

// PSUs above lambda become singleton SR sub-strata. The others, in decreasing
// mos order (ties by id), are grouped greedily: a group closes as soon as its
// mos total reaches N_nsr * m / n_psu_nsr and yields m selections; the last
// group takes the remaining selections. psus must belong to one stratum.
std::vector<SubStratum> build_substrata(const std::string& stratum_id, const std::vector<PsuRecord>& psus,
                                        double lambda, Count n_psu_nsr, Count m);

// m * M / sum(M).
std::vector<double> inclusion_probabilities(const std::vector<double>& mos, Count m);

// Sampford's rejection sampler: one draw proportional to M and m - 1 draws
// proportional to M / (1 - pi), accepted when all distinct. Returns the
// selected positions in increasing order. Throws InvalidArgument when
// m >= size or some pi >= 1, ConvergenceError after max_attempts rejections.
std::vector<std::size_t> sampford_select(const std::vector<double>& mos, Count m, Rng& rng,
                                         std::uint64_t max_attempts = 10'000'000);

struct UniversePsu {
  std::string psu_id;
  std::string stratum_id;
  std::string sub_id;
  double mos = 0.0;
  bool sr = false;
  double pik = 0.0;
};

struct SelectedPsu {
  std::string psu_id;
  std::string stratum_id;
  std::string sub_id;
  double mos = 0.0;
  bool sr = false;
  double pik = 1.0;
  double weight_1st = 1.0;
  double weight_2st = 1.0;
  double weight = 1.0;
  Count ssu_to_select = 0;
};

struct PsuStatsRow {
  std::string stratum_id;
  Count psu = 0;
  Count psu_sr = 0;
  Count psu_nsr = 0;
  Count ssu = 0;
};

struct PsuSelection {
  std::vector<UniversePsu> universe;
  std::vector<SelectedPsu> sample;
  std::vector<PsuStatsRow> stats;  // one row per stratum, then "Total"
  std::vector<std::string> warnings;
};

// Selects PSUs per stratum: SR PSUs with certainty, one Sampford sample per
// NSR sub-stratum (PSUs whose pi would reach 1 are promoted to SR). SSUs per
// selected PSU are proportional to M / pi (self-weighting), integerized by
// largest remainder over the stratum, floored at the design minimum and
// capped at M / delta. `m` is the number of PSUs selected per sub-stratum.
PsuSelection select_PSU(const StagePlan& plan, const std::vector<PsuRecord>& psus,
                        const std::vector<DesignParams>& design, Count m, std::uint64_t seed);

Table universe_to_table(const std::vector<UniversePsu>& u);
Table sample_psu_to_table(const std::vector<SelectedPsu>& s);
Table psu_stats_to_table(const std::vector<PsuStatsRow>& s);
std::vector<SelectedPsu> sample_psu_from_table(const Table& t);

// Frame rows grouped by PSU label, in file order.
using PsuRowIndex = std::map<std::string, std::vector<std::size_t>>;
PsuRowIndex index_rows(const std::vector<std::string>& psu_labels);

struct SelectedSsu {
  std::size_t row = 0;  // frame row
  std::string psu_id;
  std::string stratum_id;
  double pi_I = 1.0;
  double pi_II = 1.0;
  double prob = 1.0;
  double weight = 1.0;
};

// Systematic selection inside each selected PSU: step M/n, random start in
// [0, step), units floor(u + i * step). pi_II = n / M, weight = 1/(pi_I pi_II).
// n is clamped to M with a warning. Throws ReferenceError for a PSU absent
// from the frame.
std::vector<SelectedSsu> select_SSU(const PsuRowIndex& frame, const std::vector<SelectedPsu>& sample,
                                    std::uint64_t seed, std::vector<std::string>* warnings = nullptr);

// Frame rows of the selected SSUs with PROB_1ST, PROB_2ST, PROB_FINAL, WEIGHT.
Table sample_ssu_to_table(const Table& frame, const std::vector<SelectedSsu>& ssus);

}  // namespace stratalloc
