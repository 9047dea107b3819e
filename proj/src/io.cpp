#include "stratalloc/io.hpp"

#include <cctype>
#include <map>
#include <set>

#include "stratalloc/error.hpp"

namespace stratalloc {

namespace {

std::string numbered(const std::string& prefix, std::size_t i) { return prefix + std::to_string(i + 1); }

double positive(const Table& t, std::size_t row, std::size_t col) {
  const double v = t.number(row, col);
  if (!(v > 0.0)) {
    throw SchemaError("value " + t.cell(row, col) + " at row " + std::to_string(row + 1) + ", column " +
                      t.header()[col] + " must be > 0 in " + t.source());
  }
  return v;
}

double non_negative(const Table& t, std::size_t row, std::size_t col) {
  const double v = t.number(row, col);
  if (!(v >= 0.0)) {
    throw SchemaError("value " + t.cell(row, col) + " at row " + std::to_string(row + 1) + ", column " +
                      t.header()[col] + " must be >= 0 in " + t.source());
  }
  return v;
}

void check_unique(const std::vector<std::string>& ids, const std::string& what, const std::string& source) {
  std::set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) throw SchemaError("duplicate " + what + " '" + id + "' in " + source);
  }
}

template <class Row>
std::map<std::string, const Row*> index_by_stratum(const std::vector<Row>& rows) {
  std::map<std::string, const Row*> out;
  for (const auto& r : rows) out[r.stratum_id] = &r;
  return out;
}

}  // namespace

std::size_t count_numbered(const Table& t, const std::string& prefix) {
  std::size_t j = 0;
  while (t.has(numbered(prefix, j))) ++j;
  return j;
}

std::vector<StratumInfo> strata_from_table(const Table& t) {
  const std::size_t c_id = t.require("STRATUM");
  const std::size_t c_n = t.require("N");
  const std::size_t jm = count_numbered(t, "M");
  const std::size_t js = count_numbered(t, "S");
  if (jm == 0) t.require("M1");
  if (js == 0) t.require("S1");
  if (jm != js) {
    throw SchemaError("mean/stdev arity mismatch: " + std::to_string(jm) + " means vs " +
                      std::to_string(js) + " stdevs in " + t.source());
  }
  const std::size_t ndom = count_numbered(t, "DOM");
  if (ndom == 0) t.require("DOM1");
  const auto c_cost = t.find("COST");
  const auto c_cens = t.find("CENS");

  std::vector<std::size_t> cm(jm), cs(jm), cd(ndom);
  for (std::size_t j = 0; j < jm; ++j) {
    cm[j] = t.require(numbered("M", j));
    cs[j] = t.require(numbered("S", j));
  }
  for (std::size_t k = 0; k < ndom; ++k) cd[k] = t.require(numbered("DOM", k));

  std::vector<StratumInfo> out;
  out.reserve(t.num_rows());
  for (std::size_t r = 0; r < t.num_rows(); ++r) {
    StratumInfo s;
    s.id = t.cell(r, c_id);
    const Count n = t.count(r, c_n);
    if (n <= 0) throw SchemaError("stratum '" + s.id + "' has N <= 0 in " + t.source());
    s.N = static_cast<double>(n);
    for (std::size_t j = 0; j < jm; ++j) {
      s.means.push_back(t.number(r, cm[j]));
      s.stdevs.push_back(non_negative(t, r, cs[j]));
    }
    if (c_cost) s.cost = positive(t, r, *c_cost);
    if (c_cens) {
      const Count flag = t.count(r, *c_cens);
      if (flag != 0 && flag != 1) throw SchemaError("CENS must be 0 or 1 for stratum '" + s.id + "'");
      s.cens = flag == 1;
    }
    for (std::size_t k = 0; k < ndom; ++k) s.domains.push_back(t.cell(r, cd[k]));
    out.push_back(std::move(s));
  }
  std::vector<std::string> ids;
  for (const auto& s : out) ids.push_back(s.id);
  check_unique(ids, "stratum", t.source());
  return out;
}

Table strata_to_table(const std::vector<StratumInfo>& strata) {
  const std::size_t J = strata.empty() ? 0 : strata.front().means.size();
  const std::size_t K = strata.empty() ? 1 : strata.front().domains.size();
  std::vector<std::string> header{"STRATUM", "N"};
  for (std::size_t j = 0; j < J; ++j) header.push_back(numbered("M", j));
  for (std::size_t j = 0; j < J; ++j) header.push_back(numbered("S", j));
  header.push_back("COST");
  header.push_back("CENS");
  for (std::size_t k = 0; k < K; ++k) header.push_back(numbered("DOM", k));
  Table t(std::move(header));
  for (const auto& s : strata) {
    std::vector<std::string> row{s.id, format_number(s.N)};
    for (double m : s.means) row.push_back(format_number(m));
    for (double sd : s.stdevs) row.push_back(format_number(sd));
    row.push_back(format_number(s.cost));
    row.push_back(s.cens ? "1" : "0");
    for (const auto& d : s.domains) row.push_back(d);
    t.add_row(std::move(row));
  }
  return t;
}

std::vector<PrecisionConstraint> constraints_from_table(const Table& t) {
  const std::size_t c_dom = t.require("DOM");
  const std::size_t J = count_numbered(t, "CV");
  if (J == 0) t.require("CV1");
  std::vector<PrecisionConstraint> out;
  for (std::size_t r = 0; r < t.num_rows(); ++r) {
    PrecisionConstraint c;
    c.domain = t.cell(r, c_dom);
    for (std::size_t j = 0; j < J; ++j) c.cv.push_back(positive(t, r, t.require(numbered("CV", j))));
    out.push_back(std::move(c));
  }
  std::vector<std::string> ids;
  for (const auto& c : out) ids.push_back(c.domain);
  check_unique(ids, "constraint domain", t.source());
  return out;
}

Table constraints_to_table(const std::vector<PrecisionConstraint>& cons) {
  const std::size_t J = cons.empty() ? 0 : cons.front().cv.size();
  std::vector<std::string> header{"DOM"};
  for (std::size_t j = 0; j < J; ++j) header.push_back(numbered("CV", j));
  Table t(std::move(header));
  for (const auto& c : cons) {
    std::vector<std::string> row{c.domain};
    for (double v : c.cv) row.push_back(format_number(v));
    t.add_row(std::move(row));
  }
  return t;
}

std::vector<PsuRecord> psus_from_table(const Table& t) {
  const std::size_t c_id = t.require("PSU_ID");
  const std::size_t c_st = t.require("STRATUM");
  const std::size_t c_mos = t.require("PSU_MOS");
  std::vector<PsuRecord> out;
  std::vector<std::string> ids;
  for (std::size_t r = 0; r < t.num_rows(); ++r) {
    PsuRecord p{t.cell(r, c_id), t.cell(r, c_st), positive(t, r, c_mos)};
    ids.push_back(p.psu_id);
    out.push_back(std::move(p));
  }
  check_unique(ids, "PSU_ID", t.source());
  return out;
}

Table psus_to_table(const std::vector<PsuRecord>& psus) {
  Table t({"PSU_ID", "STRATUM", "PSU_MOS"});
  for (const auto& p : psus) t.add_row({p.psu_id, p.stratum_id, format_number(p.mos)});
  return t;
}

std::vector<DesignParams> design_from_table(const Table& t) {
  const std::size_t c_st = t.require("STRATUM");
  const std::size_t c_delta = t.require("DELTA");
  const std::size_t c_min = t.require("MINIMUM");
  std::vector<DesignParams> out;
  std::vector<std::string> ids;
  for (std::size_t r = 0; r < t.num_rows(); ++r) {
    DesignParams d;
    d.stratum_id = t.cell(r, c_st);
    d.delta = t.number(r, c_delta);
    d.minimum = t.count(r, c_min);
    if (!(d.delta >= 1.0)) throw SchemaError("DELTA must be >= 1 for stratum '" + d.stratum_id + "'");
    if (d.minimum < 1) throw SchemaError("MINIMUM must be >= 1 for stratum '" + d.stratum_id + "'");
    ids.push_back(d.stratum_id);
    out.push_back(std::move(d));
  }
  check_unique(ids, "stratum", t.source());
  return out;
}

Table design_to_table(const std::vector<DesignParams>& des) {
  Table t({"STRATUM", "DELTA", "MINIMUM"});
  for (const auto& d : des) t.add_row({d.stratum_id, format_number(d.delta), format_count(d.minimum)});
  return t;
}

RhoTable rho_from_table(const Table& t) {
  const std::size_t c_st = t.require("STRATUM");
  const std::size_t ja = count_numbered(t, "RHO_AR");
  const std::size_t jn = count_numbered(t, "RHO_NAR");
  if (jn == 0) t.require("RHO_NAR1");
  if (ja != 0 && ja != jn) throw SchemaError("RHO_AR/RHO_NAR arity mismatch in " + t.source());
  RhoTable out;
  std::vector<std::string> ids;
  for (std::size_t r = 0; r < t.num_rows(); ++r) {
    RhoRow row;
    row.stratum_id = t.cell(r, c_st);
    for (std::size_t j = 0; j < jn; ++j) {
      row.rho_nsr.push_back(t.number(r, t.require(numbered("RHO_NAR", j))));
      const double sr = ja ? t.number(r, t.require(numbered("RHO_AR", j))) : 1.0;
      if (sr != 1.0) {
        throw SchemaError("RHO_AR" + std::to_string(j + 1) + " must be 1 (stratum '" + row.stratum_id + "')");
      }
      row.rho_sr.push_back(sr);
      if (row.rho_nsr.back() > 1.0) {
        throw SchemaError("RHO_NAR" + std::to_string(j + 1) + " > 1 for stratum '" + row.stratum_id + "'");
      }
    }
    ids.push_back(row.stratum_id);
    out.push_back(std::move(row));
  }
  check_unique(ids, "stratum", t.source());
  return out;
}

Table rho_to_table(const RhoTable& rho) {
  const std::size_t J = rho.empty() ? 0 : rho.front().rho_nsr.size();
  std::vector<std::string> header{"STRATUM"};
  for (std::size_t j = 0; j < J; ++j) {
    header.push_back(numbered("RHO_AR", j));
    header.push_back(numbered("RHO_NAR", j));
  }
  Table t(std::move(header));
  for (const auto& r : rho) {
    std::vector<std::string> row{r.stratum_id};
    for (std::size_t j = 0; j < J; ++j) {
      row.push_back(format_number(r.rho_sr[j]));
      row.push_back(format_number(r.rho_nsr[j]));
    }
    t.add_row(std::move(row));
  }
  return t;
}

std::vector<StratumFactors> factors_from_table(const Table& t, const std::string& prefix) {
  const std::size_t c_st = t.require("STRATUM");
  const std::size_t J = count_numbered(t, prefix);
  if (J == 0) t.require(prefix + "1");
  std::vector<StratumFactors> out;
  std::vector<std::string> ids;
  for (std::size_t r = 0; r < t.num_rows(); ++r) {
    StratumFactors f;
    f.stratum_id = t.cell(r, c_st);
    for (std::size_t j = 0; j < J; ++j) f.values.push_back(positive(t, r, t.require(numbered(prefix, j))));
    ids.push_back(f.stratum_id);
    out.push_back(std::move(f));
  }
  check_unique(ids, "stratum", t.source());
  return out;
}

Table factors_to_table(const std::vector<StratumFactors>& f, const std::string& prefix) {
  const std::size_t J = f.empty() ? 0 : f.front().values.size();
  std::vector<std::string> header{"STRATUM"};
  for (std::size_t j = 0; j < J; ++j) header.push_back(numbered(prefix, j));
  Table t(std::move(header));
  for (const auto& r : f) {
    std::vector<std::string> row{r.stratum_id};
    for (double v : r.values) row.push_back(format_number(v));
    t.add_row(std::move(row));
  }
  return t;
}

void cross_validate(const InputSet& in) {
  const std::size_t J = in.num_vars();
  std::set<std::string> ids;
  for (const auto& s : in.strata) ids.insert(s.id);

  for (const auto& c : in.constraints) {
    if (c.cv.size() != J) {
      throw SchemaError("constraint row '" + c.domain + "' has " + std::to_string(c.cv.size()) +
                        " CVs, strata define " + std::to_string(J) + " variables");
    }
  }
  auto check_ref = [&ids](const std::string& stratum, const char* file) {
    if (!ids.count(stratum)) {
      throw ReferenceError(std::string("unknown stratum '") + stratum + "' in " + file + " file");
    }
  };
  for (const auto& p : in.psus) check_ref(p.stratum_id, "PSU");
  for (const auto& d : in.design) check_ref(d.stratum_id, "design");
  for (const auto& r : in.rho) {
    check_ref(r.stratum_id, "rho");
    if (r.rho_nsr.size() != J) throw SchemaError("rho file arity does not match the number of variables");
  }
  auto check_factors = [&](const std::optional<std::vector<StratumFactors>>& f, const char* file) {
    if (!f) return;
    for (const auto& r : *f) {
      check_ref(r.stratum_id, file);
      if (r.values.size() != J) {
        throw SchemaError(std::string(file) + " file arity does not match the number of variables");
      }
    }
  };
  check_factors(in.deft, "deft");
  check_factors(in.effst, "effst");
}

InputSet load_inputs(const InputPaths& paths) {
  InputSet in;
  in.strata = strata_from_table(read_csv(paths.strata));
  in.constraints = constraints_from_table(read_csv(paths.errors));
  if (paths.psu) in.psus = psus_from_table(read_csv(*paths.psu));
  if (paths.des) in.design = design_from_table(read_csv(*paths.des));
  if (paths.rho) in.rho = rho_from_table(read_csv(*paths.rho));
  if (paths.deft) in.deft = factors_from_table(read_csv(*paths.deft), "DEFT");
  if (paths.effst) in.effst = factors_from_table(read_csv(*paths.effst), "EFFST");
  cross_validate(in);
  return in;
}

std::vector<DesignParams> align_design(const std::vector<StratumInfo>& strata,
                                       const std::vector<DesignParams>& design) {
  const auto idx = index_by_stratum(design);
  std::vector<DesignParams> out;
  for (const auto& s : strata) {
    auto it = idx.find(s.id);
    if (it == idx.end()) throw ReferenceError("stratum '" + s.id + "' missing from design file");
    out.push_back(*it->second);
  }
  return out;
}

RhoTable align_rho(const std::vector<StratumInfo>& strata, const RhoTable& rho) {
  const auto idx = index_by_stratum(rho);
  RhoTable out;
  for (const auto& s : strata) {
    auto it = idx.find(s.id);
    if (it == idx.end()) throw ReferenceError("stratum '" + s.id + "' missing from rho file");
    out.push_back(*it->second);
  }
  return out;
}

std::vector<StratumFactors> align_factors(const std::vector<StratumInfo>& strata,
                                          const std::vector<StratumFactors>& f, const char* what) {
  const auto idx = index_by_stratum(f);
  std::vector<StratumFactors> out;
  for (const auto& s : strata) {
    auto it = idx.find(s.id);
    if (it == idx.end()) throw ReferenceError("stratum '" + s.id + "' missing from " + what + " file");
    out.push_back(*it->second);
  }
  return out;
}

Count AllocationResult::total_ssu() const {
  Count t = 0;
  for (Count v : n) t += v;
  return t;
}

Count AllocationResult::total_psu() const {
  Count t = 0;
  for (Count v : psu_sr) t += v;
  for (Count v : psu_nsr) t += v;
  return t;
}

}  // namespace stratalloc
