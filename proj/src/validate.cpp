#include "stratalloc/validate.hpp"

#include <map>
#include <set>

#include "stratalloc/error.hpp"
#include "stratalloc/numeric.hpp"

namespace stratalloc {

namespace {

// Categories in order of first appearance, with their member strata.
std::vector<std::pair<std::string, std::vector<std::size_t>>> categories_of(
    const std::vector<StratumInfo>& strata, std::size_t type) {
  std::vector<std::pair<std::string, std::vector<std::size_t>>> cats;
  std::map<std::string, std::size_t> pos;
  for (std::size_t h = 0; h < strata.size(); ++h) {
    const std::string& label = strata[h].domains[type];
    auto [it, inserted] = pos.try_emplace(label, cats.size());
    if (inserted) cats.push_back({label, {}});
    cats[it->second].second.push_back(h);
  }
  return cats;
}

}  // namespace

std::vector<DomainTarget> resolve_domains(const std::vector<StratumInfo>& strata,
                                          const std::vector<PrecisionConstraint>& constraints) {
  if (strata.empty()) throw InvalidArgument("no strata");
  const std::size_t K = strata.front().domains.size();
  if (K == 0) throw InvalidArgument("strata define no domain type (DOM1 required)");
  for (const auto& s : strata) {
    if (s.domains.size() != K) throw InvalidArgument("stratum '" + s.id + "' has a different number of domain labels");
    for (std::size_t k = 0; k < K; ++k) {
      if (s.domains[k].empty()) {
        throw InvalidArgument("stratum '" + s.id + "' has an empty " + domain_type_name(k) + " label");
      }
    }
  }

  std::vector<std::vector<std::pair<std::string, std::vector<std::size_t>>>> cats(K);
  for (std::size_t k = 0; k < K; ++k) cats[k] = categories_of(strata, k);

  std::vector<DomainTarget> out;
  for (const auto& c : constraints) {
    bool is_type = false;
    for (std::size_t k = 0; k < K; ++k) {
      if (c.domain == domain_type_name(k)) {
        is_type = true;
        for (const auto& [label, members] : cats[k]) out.push_back({k, label, c.cv, members});
      }
    }
    if (is_type) continue;
    std::vector<DomainTarget> matches;
    for (std::size_t k = 0; k < K; ++k) {
      for (const auto& [label, members] : cats[k]) {
        if (label == c.domain) matches.push_back({k, label, c.cv, members});
      }
    }
    if (matches.empty()) {
      throw InvalidArgument("constraint domain '" + c.domain + "' matches no domain type and no stratum category");
    }
    if (matches.size() > 1) {
      throw InvalidArgument("constraint domain '" + c.domain + "' is a category of several domain types");
    }
    out.push_back(std::move(matches.front()));
  }
  return out;
}

void validate_domains(const std::vector<StratumInfo>& strata,
                      const std::vector<PrecisionConstraint>& constraints) {
  (void)resolve_domains(strata, constraints);
}

CheckReport check_input(const std::vector<StratumInfo>& strata, const std::vector<DesignParams>& design,
                        const std::vector<PsuRecord>& psus) {
  std::set<std::string> strata_ids;
  for (const auto& s : strata) strata_ids.insert(s.id);
  std::map<std::string, KahanSum> mos;
  for (const auto& p : psus) {
    if (!strata_ids.count(p.stratum_id)) {
      throw ReferenceError("PSU '" + p.psu_id + "' refers to unknown stratum '" + p.stratum_id + "'");
    }
    mos[p.stratum_id].add(p.mos);
  }
  std::set<std::string> design_ids;
  for (const auto& d : design) design_ids.insert(d.stratum_id);

  CheckReport report;
  for (const auto& s : strata) {
    auto it = mos.find(s.id);
    if (it == mos.end()) throw ReferenceError("stratum '" + s.id + "' has no PSUs in the PSU file");
    if (!design_ids.count(s.id)) throw ReferenceError("stratum '" + s.id + "' missing from design file");
    report.rows.push_back({s.id, s.N, it->second.value()});
    StratumInfo fixed = s;
    fixed.N = it->second.value();
    report.corrected.push_back(std::move(fixed));
  }
  return report;
}

}  // namespace stratalloc
