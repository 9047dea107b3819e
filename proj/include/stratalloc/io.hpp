#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stratalloc/csv.hpp"
#include "stratalloc/types.hpp"

namespace stratalloc {

// Table <-> record conversions for the interchange schemas. The *_from_table
// functions validate per-record invariants and throw SchemaError/ParseError.

std::vector<StratumInfo> strata_from_table(const Table& t);
Table strata_to_table(const std::vector<StratumInfo>& strata);

std::vector<PrecisionConstraint> constraints_from_table(const Table& t);
Table constraints_to_table(const std::vector<PrecisionConstraint>& c);

std::vector<PsuRecord> psus_from_table(const Table& t);
Table psus_to_table(const std::vector<PsuRecord>& psus);

std::vector<DesignParams> design_from_table(const Table& t);
Table design_to_table(const std::vector<DesignParams>& des);

RhoTable rho_from_table(const Table& t);
Table rho_to_table(const RhoTable& rho);

// prefix is "DEFT" or "EFFST" (or "DEFF" for the documentation table).
std::vector<StratumFactors> factors_from_table(const Table& t, const std::string& prefix);
Table factors_to_table(const std::vector<StratumFactors>& f, const std::string& prefix);

// Number of consecutive numbered columns PREFIX1, PREFIX2, ... in a header.
std::size_t count_numbered(const Table& t, const std::string& prefix);

struct InputPaths {
  std::string strata;
  std::string errors;
  std::optional<std::string> psu;
  std::optional<std::string> des;
  std::optional<std::string> rho;
  std::optional<std::string> deft;
  std::optional<std::string> effst;
};

struct InputSet {
  std::vector<StratumInfo> strata;
  std::vector<PrecisionConstraint> constraints;
  std::vector<PsuRecord> psus;
  std::vector<DesignParams> design;
  RhoTable rho;
  std::optional<DeftTable> deft;
  std::optional<EffstTable> effst;

  std::size_t num_vars() const { return strata.empty() ? 0 : strata.front().means.size(); }
};

// Loads every given file and resolves cross references: arity of constraints,
// rho/deft/effst against J, and every stratum id in psu/des/rho/deft/effst
// against the strata file.
InputSet load_inputs(const InputPaths& paths);
void cross_validate(const InputSet& in);

// Per-stratum design/rho/factor lookups aligned with the strata order.
std::vector<DesignParams> align_design(const std::vector<StratumInfo>& strata,
                                       const std::vector<DesignParams>& design);
RhoTable align_rho(const std::vector<StratumInfo>& strata, const RhoTable& rho);
std::vector<StratumFactors> align_factors(const std::vector<StratumInfo>& strata,
                                          const std::vector<StratumFactors>& f, const char* what);

}  // namespace stratalloc
