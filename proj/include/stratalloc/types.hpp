#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace stratalloc {

using Count = long long;

// One design stratum. means/stdevs are indexed by target variable; domains
// by domain type (column DOM1 is type 0).
struct StratumInfo {
  std::string id;
  double N = 0.0;
  std::vector<double> means;
  std::vector<double> stdevs;
  double cost = 1.0;
  bool cens = false;
  std::vector<std::string> domains;

  bool operator==(const StratumInfo&) const = default;
};

// Upper CV bounds for one row of the errors file. `domain` is either a domain
// type name (DOM1, DOM2, ...) applying to each of its categories, or a single
// category label.
struct PrecisionConstraint {
  std::string domain;
  std::vector<double> cv;

  bool operator==(const PrecisionConstraint&) const = default;
};

struct PsuRecord {
  std::string psu_id;
  std::string stratum_id;
  double mos = 0.0;

  bool operator==(const PsuRecord&) const = default;
};

struct DesignParams {
  std::string stratum_id;
  double delta = 1.0;
  Count minimum = 1;

  bool operator==(const DesignParams&) const = default;
};

// Intraclass correlations per stratum; rho_sr is 1 by definition.
struct RhoRow {
  std::string stratum_id;
  std::vector<double> rho_sr;
  std::vector<double> rho_nsr;

  bool operator==(const RhoRow&) const = default;
};

// Per-stratum, per-variable multiplicative factor (deft or effst).
struct StratumFactors {
  std::string stratum_id;
  std::vector<double> values;

  bool operator==(const StratumFactors&) const = default;
};

using RhoTable = std::vector<RhoRow>;
using DeftTable = std::vector<StratumFactors>;
using EffstTable = std::vector<StratumFactors>;

inline std::string domain_type_name(std::size_t type) { return "DOM" + std::to_string(type + 1); }

// One row of the two-stage iteration trace.
struct IterationRow {
  int iter = 0;
  Count psu_sr = 0;
  Count psu_nsr = 0;
  Count psu_total = 0;
  Count ssu = 0;

  bool operator==(const IterationRow&) const = default;
};

// Planned vs expected CV for one (domain category, variable) constraint.
struct ConstraintReport {
  std::size_t domain_type = 0;
  std::string category;
  std::size_t variable = 0;
  double planned = 0.0;
  double expected = 0.0;
  double sensitivity = 0.0;  // change of total sample size for a 10% relaxation
  double multiplier = 0.0;
};

struct AllocationResult {
  std::vector<std::string> strata;
  std::vector<Count> n;        // integer SSUs per stratum
  std::vector<double> n_cont;  // continuous Bethel solution
  std::vector<bool> take_all;
  std::vector<Count> prop;
  std::vector<Count> equal;

  // Two-stage fields; empty for a one-stage allocation.
  std::vector<Count> psu_sr;
  std::vector<Count> psu_nsr;
  std::vector<double> ssu_sr;
  std::vector<double> ssu_nsr;
  std::vector<double> threshold;
  std::vector<IterationRow> iterations;
  std::vector<std::vector<std::vector<double>>> deft_trace;  // [iter][stratum][variable]

  std::vector<ConstraintReport> cv;
  bool converged = true;
  std::vector<std::string> warnings;
  std::vector<std::pair<std::string, std::string>> params;

  Count total_ssu() const;
  Count total_psu() const;
};

}  // namespace stratalloc
