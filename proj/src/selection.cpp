#include "stratalloc/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "stratalloc/baseline.hpp"
#include "stratalloc/error.hpp"
#include "stratalloc/numeric.hpp"

namespace stratalloc {

std::size_t StagePlan::index_of(const std::string& stratum) const {
  for (std::size_t h = 0; h < strata.size(); ++h) {
    if (strata[h] == stratum) return h;
  }
  throw ReferenceError("unknown stratum '" + stratum + "' in allocation plan");
}

StagePlan plan_from_result(const AllocationResult& r) {
  if (r.psu_sr.size() != r.strata.size()) throw InvalidArgument("allocation result carries no PSU counts");
  StagePlan p;
  p.strata = r.strata;
  p.psu_sr = r.psu_sr;
  p.psu_nsr = r.psu_nsr;
  p.ssu = r.n;
  p.ssu_sr = r.ssu_sr;
  p.ssu_nsr = r.ssu_nsr;
  p.threshold = r.threshold;
  return p;
}

StagePlan plan_from_table(const Table& t) {
  const std::size_t c_id = t.require("STRATUM");
  const std::size_t c_sr = t.require("PSU_SR");
  const std::size_t c_nsr = t.require("PSU_NSR");
  const std::size_t c_ssu = t.require("SSU");
  const std::size_t c_thr = t.require("THRESHOLD");
  const auto c_ssu_sr = t.find("SSU_SR");
  const auto c_ssu_nsr = t.find("SSU_NSR");
  StagePlan p;
  for (std::size_t i = 0; i < t.num_rows(); ++i) {
    p.strata.push_back(t.cell(i, c_id));
    p.psu_sr.push_back(t.count(i, c_sr));
    p.psu_nsr.push_back(t.count(i, c_nsr));
    p.ssu.push_back(t.count(i, c_ssu));
    p.threshold.push_back(t.number(i, c_thr));
    p.ssu_sr.push_back(c_ssu_sr ? t.number(i, *c_ssu_sr) : 0.0);
    p.ssu_nsr.push_back(c_ssu_nsr ? t.number(i, *c_ssu_nsr) : 0.0);
  }
  return p;
}

Table plan_to_table(const StagePlan& p) {
  Table t({"STRATUM", "PSU_SR", "PSU_NSR", "PSU_TOTAL", "SSU", "SSU_SR", "SSU_NSR", "THRESHOLD"});
  for (std::size_t h = 0; h < p.strata.size(); ++h) {
    t.add_row({p.strata[h], format_count(p.psu_sr[h]), format_count(p.psu_nsr[h]),
               format_count(p.psu_sr[h] + p.psu_nsr[h]), format_count(p.ssu[h]), format_number(p.ssu_sr[h]),
               format_number(p.ssu_nsr[h]), format_number(p.threshold[h])});
  }
  return t;
}

namespace {

std::vector<PsuRecord> sorted_by_size(std::vector<PsuRecord> psus) {
  std::stable_sort(psus.begin(), psus.end(), [](const PsuRecord& a, const PsuRecord& b) {
    if (a.mos != b.mos) return a.mos > b.mos;
    return a.psu_id < b.psu_id;
  });
  return psus;
}

std::size_t pick(const std::vector<double>& cumulative, double u) {
  const double target = u * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

std::vector<double> cumulate(const std::vector<double>& w) {
  std::vector<double> c(w.size());
  KahanSum s;
  for (std::size_t i = 0; i < w.size(); ++i) {
    s.add(w[i]);
    c[i] = s.value();
  }
  return c;
}

}  // namespace

std::vector<SubStratum> build_substrata(const std::string& stratum_id, const std::vector<PsuRecord>& psus,
                                        double lambda, Count n_psu_nsr, Count m) {
  if (m < 1) throw InvalidArgument("PSUs per sub-stratum must be >= 1");
  const auto sorted = sorted_by_size(psus);
  std::vector<SubStratum> out;
  std::vector<const PsuRecord*> nsr;
  int k = 0;
  for (const auto& p : sorted) {
    if (lambda > 0.0 && p.mos > lambda) {
      SubStratum s;
      s.stratum_id = stratum_id;
      s.sub_id = stratum_id + "-" + std::to_string(++k);
      s.psu_ids = {p.psu_id};
      s.mos = {p.mos};
      s.size_total = p.mos;
      s.n_psu_to_select = 1;
      s.is_sr = true;
      out.push_back(std::move(s));
    } else {
      nsr.push_back(&p);
    }
  }
  if (nsr.empty()) return out;

  KahanSum n_nsr;
  for (const auto* p : nsr) n_nsr.add(p->mos);
  const Count to_select = std::max<Count>(n_psu_nsr, 0);
  const double target = to_select > 0 ? n_nsr.value() * static_cast<double>(m) / static_cast<double>(to_select) : 0.0;

  Count remaining = to_select;
  SubStratum current;
  KahanSum running;
  auto open = [&] {
    current = SubStratum{};
    current.stratum_id = stratum_id;
    current.sub_id = stratum_id + "-" + std::to_string(++k);
    running = KahanSum{};
  };
  open();
  for (std::size_t i = 0; i < nsr.size(); ++i) {
    current.psu_ids.push_back(nsr[i]->psu_id);
    current.mos.push_back(nsr[i]->mos);
    running.add(nsr[i]->mos);
    const bool more_left = i + 1 < nsr.size();
    if (more_left && remaining > m && running.value() >= target &&
        static_cast<Count>(current.psu_ids.size()) >= m) {
      current.size_total = running.value();
      current.n_psu_to_select = m;
      remaining -= m;
      out.push_back(std::move(current));
      open();
    }
  }
  current.size_total = running.value();
  current.n_psu_to_select = remaining;
  out.push_back(std::move(current));
  return out;
}

std::vector<double> inclusion_probabilities(const std::vector<double>& mos, Count m) {
  KahanSum total;
  for (double v : mos) total.add(v);
  std::vector<double> pi(mos.size());
  for (std::size_t i = 0; i < mos.size(); ++i) pi[i] = static_cast<double>(m) * mos[i] / total.value();
  return pi;
}

std::vector<std::size_t> sampford_select(const std::vector<double>& mos, Count m, Rng& rng,
                                         std::uint64_t max_attempts) {
  if (m < 1) throw InvalidArgument("Sampford sample size must be >= 1");
  if (static_cast<std::size_t>(m) >= mos.size()) {
    throw InvalidArgument("Sampford sample size " + std::to_string(m) + " must be smaller than the number of units " +
                          std::to_string(mos.size()));
  }
  const auto pi = inclusion_probabilities(mos, m);
  std::vector<double> w(mos.size());
  for (std::size_t i = 0; i < mos.size(); ++i) {
    if (!(mos[i] > 0.0)) throw InvalidArgument("Sampford sizes must be positive");
    if (pi[i] >= 1.0) throw InvalidArgument("Sampford inclusion probability reaches 1; promote the unit first");
    w[i] = pi[i] / (1.0 - pi[i]);
  }
  const auto first = cumulate(mos);
  const auto rest = cumulate(w);
  std::vector<std::size_t> draw(static_cast<std::size_t>(m));
  for (std::uint64_t attempt = 0; attempt < max_attempts; ++attempt) {
    draw[0] = pick(first, rng.uniform());
    bool distinct = true;
    for (std::size_t i = 1; i < draw.size() && distinct; ++i) {
      draw[i] = pick(rest, rng.uniform());
      for (std::size_t j = 0; j < i; ++j) {
        if (draw[j] == draw[i]) {
          distinct = false;
          break;
        }
      }
    }
    if (distinct) {
      std::sort(draw.begin(), draw.end());
      return draw;
    }
  }
  throw ConvergenceError("Sampford rejection sampling exceeded " + std::to_string(max_attempts) + " attempts");
}

PsuSelection select_PSU(const StagePlan& plan, const std::vector<PsuRecord>& psus,
                        const std::vector<DesignParams>& design, Count m, std::uint64_t seed) {
  std::map<std::string, std::vector<PsuRecord>> by_stratum;
  for (const auto& p : psus) by_stratum[p.stratum_id].push_back(p);
  std::map<std::string, const DesignParams*> des;
  for (const auto& d : design) des[d.stratum_id] = &d;

  PsuSelection out;
  PsuStatsRow total_row{"Total", 0, 0, 0, 0};
  for (std::size_t h = 0; h < plan.strata.size(); ++h) {
    const std::string& id = plan.strata[h];
    const auto it = by_stratum.find(id);
    if (it == by_stratum.end()) throw ReferenceError("stratum '" + id + "' has no PSUs");
    const auto dit = des.find(id);
    if (dit == des.end()) throw ReferenceError("stratum '" + id + "' has no design parameters");
    const DesignParams& d = *dit->second;
    if (plan.psu_sr[h] + plan.psu_nsr[h] > 0 && plan.ssu[h] <= 0) {
      throw InvalidArgument("stratum '" + id + "' requires PSUs but has no allocated SSUs");
    }

    std::vector<SelectedPsu> chosen;
    const auto subs = build_substrata(id, it->second, plan.threshold[h], plan.psu_nsr[h], m);
    for (const auto& sub : subs) {
      if (sub.is_sr) {
        out.universe.push_back({sub.psu_ids[0], id, sub.sub_id, sub.mos[0], true, 1.0});
        chosen.push_back({sub.psu_ids[0], id, sub.sub_id, sub.mos[0], true, 1.0});
        continue;
      }
      std::vector<std::size_t> pool(sub.psu_ids.size());
      std::iota(pool.begin(), pool.end(), 0);
      Count k = sub.n_psu_to_select;
      if (k > static_cast<Count>(pool.size())) {
        out.warnings.push_back("sub-stratum " + sub.sub_id + " has " + std::to_string(pool.size()) +
                               " PSUs for " + std::to_string(k) + " selections; all PSUs taken");
        k = static_cast<Count>(pool.size());
      }
      // Units whose probability would reach 1 are taken with certainty.
      while (k > 0 && !pool.empty()) {
        if (k >= static_cast<Count>(pool.size())) {
          for (std::size_t i : pool) {
            out.universe.push_back({sub.psu_ids[i], id, sub.sub_id, sub.mos[i], true, 1.0});
            chosen.push_back({sub.psu_ids[i], id, sub.sub_id, sub.mos[i], true, 1.0});
          }
          pool.clear();
          k = 0;
          break;
        }
        KahanSum size;
        for (std::size_t i : pool) size.add(sub.mos[i]);
        const std::size_t top = pool.front();
        if (static_cast<double>(k) * sub.mos[top] / size.value() < 1.0) break;
        out.universe.push_back({sub.psu_ids[top], id, sub.sub_id, sub.mos[top], true, 1.0});
        chosen.push_back({sub.psu_ids[top], id, sub.sub_id, sub.mos[top], true, 1.0});
        pool.erase(pool.begin());
        --k;
      }
      if (pool.empty()) continue;
      std::vector<double> mos;
      for (std::size_t i : pool) mos.push_back(sub.mos[i]);
      const auto pi = k > 0 ? inclusion_probabilities(mos, k) : std::vector<double>(mos.size(), 0.0);
      std::vector<bool> picked(pool.size(), false);
      if (k > 0) {
        Rng rng(derive_seed(seed, "psu", sub.sub_id));
        for (std::size_t s : sampford_select(mos, k, rng)) picked[s] = true;
      }
      for (std::size_t i = 0; i < pool.size(); ++i) {
        const std::size_t u = pool[i];
        out.universe.push_back({sub.psu_ids[u], id, sub.sub_id, sub.mos[u], false, pi[i]});
        if (picked[i]) chosen.push_back({sub.psu_ids[u], id, sub.sub_id, sub.mos[u], false, pi[i]});
      }
    }

    std::vector<double> quotas;
    KahanSum raw_total;
    for (const auto& c : chosen) {
      quotas.push_back(c.mos / c.pik);
      raw_total.add(quotas.back());
    }
    const double target = static_cast<double>(plan.ssu[h]) / d.delta;
    for (double& q : quotas) q *= target / raw_total.value();
    const auto ints = largest_remainder(quotas, std::llround(target));

    PsuStatsRow row{id, 0, 0, 0, 0};
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      auto& c = chosen[i];
      const Count cap = std::max<Count>(1, static_cast<Count>(std::floor(c.mos / d.delta + 1e-9)));
      c.ssu_to_select = std::min(cap, std::max<Count>(d.minimum, ints[i]));
      c.weight_1st = 1.0 / c.pik;
      c.weight_2st = (c.mos / d.delta) / static_cast<double>(c.ssu_to_select);
      c.weight = c.weight_1st * c.weight_2st;
      ++row.psu;
      ++(c.sr ? row.psu_sr : row.psu_nsr);
      row.ssu += c.ssu_to_select;
      out.sample.push_back(c);
    }
    total_row.psu += row.psu;
    total_row.psu_sr += row.psu_sr;
    total_row.psu_nsr += row.psu_nsr;
    total_row.ssu += row.ssu;
    out.stats.push_back(row);
  }
  out.stats.push_back(total_row);
  return out;
}

Table universe_to_table(const std::vector<UniversePsu>& u) {
  Table t({"PSU_ID", "STRATUM", "stratum", "PSU_MOS", "SR", "nSR", "Pik"});
  for (const auto& r : u) {
    t.add_row({r.psu_id, r.stratum_id, r.sub_id, format_number(r.mos), r.sr ? "1" : "0", r.sr ? "0" : "1",
               format_number(r.pik)});
  }
  return t;
}

Table sample_psu_to_table(const std::vector<SelectedPsu>& s) {
  Table t({"PSU_ID", "STRATUM", "stratum", "SR", "nSR", "PSU_final_sample_unit", "Pik", "weight_1st", "weight_2st",
           "weight"});
  for (const auto& r : s) {
    t.add_row({r.psu_id, r.stratum_id, r.sub_id, r.sr ? "1" : "0", r.sr ? "0" : "1", format_count(r.ssu_to_select),
               format_number(r.pik), format_number(r.weight_1st), format_number(r.weight_2st),
               format_number(r.weight)});
  }
  return t;
}

Table psu_stats_to_table(const std::vector<PsuStatsRow>& s) {
  Table t({"STRATUM", "PSU", "PSU_SR", "PSU_NSR", "SSU"});
  for (const auto& r : s) {
    t.add_row({r.stratum_id, format_count(r.psu), format_count(r.psu_sr), format_count(r.psu_nsr),
               format_count(r.ssu)});
  }
  return t;
}

std::vector<SelectedPsu> sample_psu_from_table(const Table& t) {
  const std::size_t c_id = t.require("PSU_ID");
  const std::size_t c_st = t.require("STRATUM");
  const std::size_t c_sub = t.require("stratum");
  const std::size_t c_sr = t.require("SR");
  const std::size_t c_n = t.require("PSU_final_sample_unit");
  const std::size_t c_pik = t.require("Pik");
  const std::size_t c_w1 = t.require("weight_1st");
  const std::size_t c_w2 = t.require("weight_2st");
  const std::size_t c_w = t.require("weight");
  std::vector<SelectedPsu> out;
  for (std::size_t i = 0; i < t.num_rows(); ++i) {
    SelectedPsu p;
    p.psu_id = t.cell(i, c_id);
    p.stratum_id = t.cell(i, c_st);
    p.sub_id = t.cell(i, c_sub);
    p.sr = t.count(i, c_sr) == 1;
    p.ssu_to_select = t.count(i, c_n);
    p.pik = t.number(i, c_pik);
    if (!(p.pik > 0.0 && p.pik <= 1.0)) {
      throw ParseError(t.source() + ": row " + std::to_string(i + 1) + ": Pik must lie in (0, 1]");
    }
    p.weight_1st = t.number(i, c_w1);
    p.weight_2st = t.number(i, c_w2);
    p.weight = t.number(i, c_w);
    out.push_back(std::move(p));
  }
  return out;
}

PsuRowIndex index_rows(const std::vector<std::string>& psu_labels) {
  PsuRowIndex idx;
  for (std::size_t i = 0; i < psu_labels.size(); ++i) idx[psu_labels[i]].push_back(i);
  return idx;
}

std::vector<SelectedSsu> select_SSU(const PsuRowIndex& frame, const std::vector<SelectedPsu>& sample,
                                    std::uint64_t seed, std::vector<std::string>* warnings) {
  std::vector<SelectedSsu> out;
  for (const auto& p : sample) {
    const auto it = frame.find(p.psu_id);
    if (it == frame.end()) throw ReferenceError("PSU '" + p.psu_id + "' in the sample is absent from the frame");
    const auto& rows = it->second;
    const Count M = static_cast<Count>(rows.size());
    Count n = p.ssu_to_select;
    if (n > M) {
      if (warnings) {
        warnings->push_back("PSU '" + p.psu_id + "': " + std::to_string(n) + " SSUs requested but only " +
                            std::to_string(M) + " in the frame; clamped");
      }
      n = M;
    }
    if (n <= 0) continue;
    Rng rng(derive_seed(seed, "ssu", p.psu_id));
    const double step = static_cast<double>(M) / static_cast<double>(n);
    const double start = rng.uniform() * step;
    const double pi_II = static_cast<double>(n) / static_cast<double>(M);
    for (Count i = 0; i < n; ++i) {
      const auto pos = std::min<Count>(M - 1, static_cast<Count>(std::floor(start + static_cast<double>(i) * step)));
      SelectedSsu s;
      s.row = rows[static_cast<std::size_t>(pos)];
      s.psu_id = p.psu_id;
      s.stratum_id = p.stratum_id;
      s.pi_I = p.pik;
      s.pi_II = pi_II;
      s.prob = p.pik * pi_II;
      s.weight = (1.0 / p.pik) * (1.0 / pi_II);
      out.push_back(std::move(s));
    }
  }
  return out;
}

Table sample_ssu_to_table(const Table& frame, const std::vector<SelectedSsu>& ssus) {
  auto header = frame.header();
  for (const char* c : {"PROB_1ST", "PROB_2ST", "PROB_FINAL", "WEIGHT"}) header.emplace_back(c);
  Table t(header);
  for (const auto& s : ssus) {
    auto row = frame.rows()[s.row];
    row.push_back(format_number(s.pi_I));
    row.push_back(format_number(s.pi_II));
    row.push_back(format_number(s.prob));
    row.push_back(format_number(s.weight));
    t.add_row(std::move(row));
  }
  return t;
}

}  // namespace stratalloc
