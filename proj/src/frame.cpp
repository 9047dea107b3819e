#include "stratalloc/frame.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "stratalloc/error.hpp"
#include "stratalloc/numeric.hpp"
#include "stratalloc/rng.hpp"
#include "stratalloc/twostage.hpp"

namespace stratalloc {

Frame frame_from_table(const Table& t, const FrameColumns& cols) {
  if (cols.target_vars.empty()) throw InvalidArgument("no target variables given");
  const std::size_t c_psu = t.require(cols.id_psu);
  const std::size_t c_ssu = t.require(cols.id_ssu);
  const std::size_t c_str = t.require(cols.strata_var);
  const std::size_t c_deff = t.require(cols.deff_var.empty() ? cols.strata_var : cols.deff_var);
  std::optional<std::size_t> c_dom;
  if (!cols.domain_var.empty()) c_dom = t.require(cols.domain_var);
  std::optional<std::size_t> c_w;
  if (!cols.weight_var.empty()) c_w = t.require(cols.weight_var);
  const std::set<std::string> binary(cols.binary_vars.begin(), cols.binary_vars.end());
  for (const auto& b : binary) {
    if (std::find(cols.target_vars.begin(), cols.target_vars.end(), b) == cols.target_vars.end()) {
      throw InvalidArgument("binary variable '" + b + "' is not a target variable");
    }
  }

  Frame f;
  std::vector<std::size_t> c_y;
  for (const auto& v : cols.target_vars) {
    c_y.push_back(t.require(v));
    f.target_names.push_back(v);
    f.binary.push_back(binary.count(v) > 0);
  }
  f.y.assign(c_y.size(), {});
  for (std::size_t i = 0; i < t.num_rows(); ++i) {
    f.unit_id.push_back(t.cell(i, c_ssu));
    f.psu_id.push_back(t.cell(i, c_psu));
    f.stratum_id.push_back(t.cell(i, c_str));
    f.deff_group.push_back(t.cell(i, c_deff));
    if (c_dom) f.domain.push_back(t.cell(i, *c_dom));
    for (std::size_t j = 0; j < c_y.size(); ++j) {
      const double v = t.number(i, c_y[j]);
      if (f.binary[j] && v != 0.0 && v != 1.0) {
        throw InvalidArgument(t.source() + ": row " + std::to_string(i + 1) + ": binary variable '" +
                              f.target_names[j] + "' has value " + t.cell(i, c_y[j]));
      }
      f.y[j].push_back(v);
    }
    if (c_w) {
      const double w = t.number(i, *c_w);
      if (!(w > 0.0)) {
        throw InvalidArgument(t.source() + ": row " + std::to_string(i + 1) + ": weight must be positive");
      }
      f.weight.push_back(w);
    }
  }
  return f;
}

namespace {

std::map<std::string, std::vector<std::size_t>> rows_by(const std::vector<std::string>& labels) {
  std::map<std::string, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < labels.size(); ++i) out[labels[i]].push_back(i);
  return out;
}

StratumMoments moments(const std::string& id, const std::vector<std::size_t>& rows, const std::vector<double>& y,
                       const std::vector<double>* w, bool binary) {
  KahanSum total, weight;
  for (std::size_t i : rows) {
    const double wi = w ? (*w)[i] : 1.0;
    total.add(wi * y[i]);
    weight.add(wi);
  }
  if (!(weight.value() > 0.0)) throw InvalidArgument("stratum '" + id + "' has zero weight total");
  StratumMoments m;
  m.stratum_id = id;
  m.N = weight.value();
  m.mean = total.value() / weight.value();
  double var;
  if (binary) {
    var = m.mean * (1.0 - m.mean);
  } else {
    KahanSum dev;
    for (std::size_t i : rows) {
      const double e = y[i] - m.mean;
      dev.add((w ? (*w)[i] : 1.0) * e * e);
    }
    var = dev.value() / weight.value();
  }
  m.stdev = std::sqrt(std::max(var, 0.0));
  return m;
}

}  // namespace

std::vector<StratumMoments> stratum_stats_register(const Frame& f, std::size_t target) {
  std::vector<StratumMoments> out;
  for (const auto& [id, rows] : rows_by(f.stratum_id)) out.push_back(moments(id, rows, f.y.at(target), nullptr, f.binary[target]));
  return out;
}

std::vector<StratumMoments> stratum_stats_survey(const Frame& f, std::size_t target) {
  if (f.weight.empty()) throw InvalidArgument("frame carries no weights");
  std::vector<StratumMoments> out;
  for (const auto& [id, rows] : rows_by(f.stratum_id)) {
    out.push_back(moments(id, rows, f.y.at(target), &f.weight, f.binary[target]));
  }
  return out;
}

PreparedInputs prepare_inputs_scenario1(const Frame& f, const PrepareOptions& opts) {
  if (f.size() == 0) throw InvalidArgument("frame is empty");
  if (!(opts.delta >= 1.0)) throw InvalidArgument("delta must be >= 1");
  if (opts.minimum < 1) throw InvalidArgument("minimum must be >= 1");
  const std::size_t J = f.target_names.size();
  PreparedInputs out;

  const auto strata_rows = rows_by(f.stratum_id);
  std::vector<std::vector<StratumMoments>> stats;
  for (std::size_t j = 0; j < J; ++j) stats.push_back(stratum_stats_register(f, j));
  std::size_t h = 0;
  for (const auto& [id, rows] : strata_rows) {
    StratumInfo s;
    s.id = id;
    s.N = static_cast<double>(rows.size());
    for (std::size_t j = 0; j < J; ++j) {
      s.means.push_back(stats[j][h].mean);
      s.stdevs.push_back(stats[j][h].stdev);
    }
    s.domains.push_back("1");
    if (!f.domain.empty()) {
      const std::string& d = f.domain[rows.front()];
      for (std::size_t i : rows) {
        if (f.domain[i] != d) throw InvalidArgument("domain variable is not constant within stratum '" + id + "'");
      }
      s.domains.push_back(d);
    }
    if (rows.size() == 1) out.warnings.push_back("stratum '" + id + "' has only one unit");
    out.strata.push_back(std::move(s));
    ++h;
  }

  // Intraclass correlation per deff group, copied to every stratum of the group.
  std::map<std::string, std::vector<double>> rho_by_group;
  for (const auto& [group, rows] : rows_by(f.deff_group)) {
    std::vector<std::string> labels;
    std::set<std::string> distinct;
    for (std::size_t i : rows) {
      labels.push_back(f.psu_id[i]);
      distinct.insert(f.psu_id[i]);
    }
    std::vector<double> rho(J, 0.0);
    if (distinct.size() < 2) {
      out.warnings.push_back("deff group '" + group + "' has fewer than two PSUs; rho set to 0");
    } else {
      for (std::size_t j = 0; j < J; ++j) {
        std::vector<double> y;
        for (std::size_t i : rows) y.push_back(f.y[j][i]);
        std::vector<std::string> w;
        rho[j] = rho_from_population(y, labels, &w);
        for (const auto& msg : w) {
          out.warnings.push_back("deff group '" + group + "', " + f.target_names[j] + ": " + msg);
        }
      }
    }
    rho_by_group[group] = rho;
  }
  for (const auto& [id, rows] : strata_rows) {
    const std::string& group = f.deff_group[rows.front()];
    for (std::size_t i : rows) {
      if (f.deff_group[i] != group) {
        throw InvalidArgument("deff variable is not constant within stratum '" + id + "'");
      }
    }
    out.rho.push_back({id, std::vector<double>(J, 1.0), rho_by_group[group]});
    out.deff.push_back({id, std::vector<double>(J, opts.deff_sugg.value_or(1.0))});
    out.effst.push_back({id, std::vector<double>(J, 1.0)});
    out.design.push_back({id, opts.delta, opts.minimum});
  }

  std::map<std::string, std::pair<std::string, double>> psu;
  for (std::size_t i = 0; i < f.size(); ++i) {
    auto [it, inserted] = psu.try_emplace(f.psu_id[i], f.stratum_id[i], 0.0);
    if (!inserted && it->second.first != f.stratum_id[i]) {
      throw InvalidArgument("PSU '" + f.psu_id[i] + "' spans strata '" + it->second.first + "' and '" +
                            f.stratum_id[i] + "'");
    }
    it->second.second += 1.0;
  }
  for (const auto& [id, v] : psu) out.psus.push_back({id, v.first, v.second});
  return out;
}

Table synth_frame(const SynthSpec& spec) {
  std::vector<std::string> header{"UNIT_ID", "PSU_ID", "STRATUM", "REGION"};
  for (const auto& t : spec.targets) header.push_back(t.name);
  Table out(header);
  long long unit = 0;
  long long psu = 0;
  char buf[32];
  for (const auto& s : spec.strata) {
    if (s.n_psu < 1 || s.psu_size_min < 1 || s.psu_size_max < s.psu_size_min) {
      throw InvalidArgument("synthetic stratum '" + s.id + "' needs positive PSU counts and sizes");
    }
    Rng rng(derive_seed(spec.seed, "synth", s.id));
    std::vector<double> stratum_level;
    for (const auto& t : spec.targets) stratum_level.push_back(t.mean + t.stratum_sd * rng.normal());
    for (int p = 0; p < s.n_psu; ++p) {
      std::snprintf(buf, sizeof buf, "P%05lld", ++psu);
      const std::string psu_id = buf;
      const auto span = static_cast<std::uint64_t>(s.psu_size_max - s.psu_size_min + 1);
      const auto size = s.psu_size_min + static_cast<int>(rng.below(span));
      std::vector<double> psu_level;
      for (std::size_t j = 0; j < spec.targets.size(); ++j) {
        psu_level.push_back(stratum_level[j] + spec.targets[j].psu_sd * rng.normal());
      }
      for (int u = 0; u < size; ++u) {
        std::snprintf(buf, sizeof buf, "U%07lld", ++unit);
        std::vector<std::string> row{buf, psu_id, s.id, s.domain};
        for (std::size_t j = 0; j < spec.targets.size(); ++j) {
          const auto& t = spec.targets[j];
          if (t.binary) {
            const double p_unit = std::clamp(psu_level[j], 0.0, 1.0);
            row.push_back(rng.uniform() < p_unit ? "1" : "0");
          } else {
            row.push_back(format_number(psu_level[j] + t.unit_sd * rng.normal()));
          }
        }
        out.add_row(std::move(row));
      }
    }
  }
  return out;
}

}  // namespace stratalloc
