#include "stratalloc/report.hpp"

#include "stratalloc/io.hpp"

namespace stratalloc {

Table alloc_table(const AllocationResult& r) {
  Table t({"STRATUM", "ALLOC", "PROP", "EQUAL"});
  for (std::size_t h = 0; h < r.strata.size(); ++h) {
    t.add_row({r.strata[h], format_count(r.n[h]), format_count(r.prop[h]), format_count(r.equal[h])});
  }
  return t;
}

Table file_strata_table(const std::vector<StratumInfo>& strata, const AllocationResult& r) {
  Table t = strata_to_table(strata);
  std::vector<std::string> col;
  for (Count n : r.n) col.push_back(format_count(n));
  t.add_column("SOLUZ", std::move(col));
  return t;
}

Table sensitivity_table(const AllocationResult& r) {
  Table t({"DOM", "DOMVALUE", "VAR", "PLANNED_CV", "ACTUAL_CV", "SENS_10PCT"});
  for (const auto& c : r.cv) {
    t.add_row({domain_type_name(c.domain_type), c.category, "V" + std::to_string(c.variable + 1),
               format_number(c.planned), format_number(c.expected), format_number(c.sensitivity)});
  }
  return t;
}

Table expected_cv_table(const AllocationResult& r) {
  Table t({"DOM", "DOMVALUE", "VAR", "PLANNED_CV", "ACTUAL_CV"});
  for (const auto& c : r.cv) {
    t.add_row({domain_type_name(c.domain_type), c.category, "V" + std::to_string(c.variable + 1),
               format_number(c.planned), format_number(c.expected)});
  }
  return t;
}

Table iterations_table(const AllocationResult& r) {
  Table t({"iter", "PSU_SR", "PSU_NSR", "PSU_Total", "SSU"});
  for (const auto& it : r.iterations) {
    t.add_row({format_count(it.iter), format_count(it.psu_sr), format_count(it.psu_nsr), format_count(it.psu_total),
               format_count(it.ssu)});
  }
  return t;
}

Table deft_trace_table(const AllocationResult& r) {
  Table t({"ITER", "STRATUM", "VAR", "DEFT"});
  for (std::size_t k = 0; k < r.deft_trace.size(); ++k) {
    for (std::size_t h = 0; h < r.deft_trace[k].size(); ++h) {
      for (std::size_t j = 0; j < r.deft_trace[k][h].size(); ++j) {
        t.add_row({format_count(static_cast<Count>(k)), r.strata[h], "V" + std::to_string(j + 1),
                   format_number(r.deft_trace[k][h][j])});
      }
    }
  }
  return t;
}

Table min_ssu_table(const std::vector<MinSsuPoint>& points) {
  Table t({"MINIMUM", "PSU", "SSU"});
  for (const auto& p : points) t.add_row({format_count(p.minimum), format_count(p.psu_total), format_count(p.ssu_total)});
  return t;
}

}  // namespace stratalloc
