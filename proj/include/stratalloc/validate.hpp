#pragma once

#include <string>
#include <vector>

#include "stratalloc/types.hpp"

namespace stratalloc {

// One domain category with the CV bounds that apply to it and the indices of
// the strata it aggregates.
struct DomainTarget {
  std::size_t domain_type = 0;
  std::string category;
  std::vector<double> cv;
  std::vector<std::size_t> strata;
};

// Expands constraint rows into domain categories. A row whose DOM label names
// a domain type (DOM1, DOM2, ...) yields one target per category of that type;
// any other label must be the category of exactly one domain type.
// Throws InvalidArgument on unknown or ambiguous labels and on empty stratum
// domain labels.
std::vector<DomainTarget> resolve_domains(const std::vector<StratumInfo>& strata,
                                          const std::vector<PrecisionConstraint>& constraints);

void validate_domains(const std::vector<StratumInfo>& strata,
                      const std::vector<PrecisionConstraint>& constraints);

struct StratumDiscrepancy {
  std::string stratum_id;
  double n_strata = 0.0;  // N from the strata file
  double n_psu = 0.0;     // sum of PSU measures of size
  double difference() const { return n_psu - n_strata; }
};

struct CheckReport {
  std::vector<StratumDiscrepancy> rows;
  std::vector<StratumInfo> corrected;
};

// Compares stratum sizes against the PSU frame and replaces N with the PSU
// total. Every stratum needs at least one PSU and one design row.
CheckReport check_input(const std::vector<StratumInfo>& strata, const std::vector<DesignParams>& design,
                        const std::vector<PsuRecord>& psus);

}  // namespace stratalloc
