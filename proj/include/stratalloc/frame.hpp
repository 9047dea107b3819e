#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stratalloc/csv.hpp"
#include "stratalloc/types.hpp"

namespace stratalloc {

// Column names of a unit-level sampling frame.
struct FrameColumns {
  std::string id_psu = "PSU_ID";
  std::string id_ssu = "UNIT_ID";
  std::string strata_var = "STRATUM";
  std::vector<std::string> target_vars;
  std::vector<std::string> binary_vars;  // subset of target_vars restricted to {0, 1}
  std::string deff_var;                  // grouping for rho; empty means strata_var
  std::string domain_var;                // optional second domain type
  std::string weight_var;                // optional prior-survey weight
};

struct Frame {
  std::vector<std::string> unit_id;
  std::vector<std::string> psu_id;
  std::vector<std::string> stratum_id;
  std::vector<std::string> deff_group;
  std::vector<std::string> domain;     // empty when no domain_var
  std::vector<std::string> target_names;
  std::vector<bool> binary;            // per target
  std::vector<std::vector<double>> y;  // [target][unit]
  std::vector<double> weight;          // empty when no weight_var

  std::size_t size() const { return unit_id.size(); }
};

// Throws SchemaError for missing columns, ParseError for non-numeric targets
// or weights, InvalidArgument for a binary target outside {0, 1} or a
// non-positive weight.
Frame frame_from_table(const Table& t, const FrameColumns& cols);

struct StratumMoments {
  std::string stratum_id;
  double N = 0.0;  // unit count, or weight total for survey moments
  double mean = 0.0;
  double stdev = 0.0;
};

// Population moments per stratum in sorted stratum order, variance with
// divisor N; a binary target uses S^2 = p (1 - p).
std::vector<StratumMoments> stratum_stats_register(const Frame& f, std::size_t target);

// Weighted estimates: mean sum(w y) / sum(w), variance sum(w (y - mean)^2) / sum(w)
// (p (1 - p) for a binary target). Unit weights give the register moments.
// Throws InvalidArgument when a stratum has zero weight total.
std::vector<StratumMoments> stratum_stats_survey(const Frame& f, std::size_t target);

struct PrepareOptions {
  double delta = 1.0;
  Count minimum = 50;
  std::optional<double> deff_sugg;
};

struct PreparedInputs {
  std::vector<StratumInfo> strata;
  RhoTable rho;
  std::vector<StratumFactors> deff;  // documentation table (deff_sugg or 1)
  EffstTable effst;
  std::vector<PsuRecord> psus;
  std::vector<DesignParams> design;
  std::vector<std::string> warnings;
};

// Builds the strata, rho, deff, effst, PSU and design inputs from a frame.
// DOM1 is the national domain "1"; DOM2 is domain_var when given, and must be
// constant within each stratum.
PreparedInputs prepare_inputs_scenario1(const Frame& f, const PrepareOptions& opts = {});

struct SynthStratum {
  std::string id;
  std::string domain;
  int n_psu = 10;
  int psu_size_min = 50;
  int psu_size_max = 150;
};

// Quantitative: y = mean + stratum_sd z_h + psu_sd z_psu + unit_sd e.
// Binary: Bernoulli(clamp(mean + stratum_sd z_h + psu_sd z_psu)).
struct SynthTarget {
  std::string name;
  bool binary = false;
  double mean = 0.0;
  double stratum_sd = 0.0;
  double psu_sd = 0.0;
  double unit_sd = 1.0;
};

struct SynthSpec {
  std::vector<SynthStratum> strata;
  std::vector<SynthTarget> targets;
  std::uint64_t seed = 1;
};

// Columns UNIT_ID, PSU_ID, STRATUM, REGION and one per target. Each stratum
// draws from its own stream derived from the seed and the stratum id.
Table synth_frame(const SynthSpec& spec);

}  // namespace stratalloc
