// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../support/oracle.hpp"
#include "../support/pipeline.hpp"
#include "../support/tempdir.hpp"
#include "stratalloc/baseline.hpp"
#include "stratalloc/cli.hpp"
#include "stratalloc/csv.hpp"
#include "stratalloc/onestage.hpp"
#include "stratalloc/selection.hpp"
#include "stratalloc/twostage.hpp"

using namespace stratalloc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// Random two-stage instance: 1-4 strata of 3-30 PSUs.
TwoStageInputs random_two_stage(std::mt19937_64& g) {
  std::uniform_int_distribution<int> dl(1, 4), dp(3, 30), dmin(5, 60), dj(1, 3);
  std::uniform_real_distribution<double> mos(20, 2000), mu(1, 20), rel(0.2, 1.5), rho(0, 0.3), cv(0.02, 0.15);
  std::bernoulli_distribution coin(0.5);
  TwoStageInputs in;
  const int L = dl(g), J = dj(g);
  const bool second = L >= 2 && coin(g);
  for (int h = 0; h < L; ++h) {
    StratumInfo s;
    s.id = "H" + std::to_string(h + 1);
    for (int j = 0; j < J; ++j) {
      s.means.push_back(mu(g));
      s.stdevs.push_back(s.means.back() * rel(g));
    }
    s.domains = {"1"};
    if (second) s.domains.push_back(h % 2 ? "odd" : "even");
    const int P = dp(g);
    for (int p = 0; p < P; ++p) {
      const double m = std::round(mos(g));
      in.psus.push_back({s.id + "-" + std::to_string(p), s.id, m});
      s.N += m;
    }
    in.strata.push_back(s);
    in.design.push_back({s.id, 1.0, dmin(g)});
    RhoRow r{s.id, std::vector<double>(static_cast<std::size_t>(J), 1.0), {}};
    for (int j = 0; j < J; ++j) r.rho_nsr.push_back(rho(g));
    in.rho.push_back(r);
  }
  std::vector<double> c1;
  for (int j = 0; j < J; ++j) c1.push_back(cv(g));
  in.constraints.push_back({"DOM1", c1});
  if (second) {
    std::vector<double> c2;
    for (double v : c1) c2.push_back(2 * v);
    in.constraints.push_back({"DOM2", c2});
  }
  return in;
}

Outcome criterion1() {
  Timer t;
  std::mt19937_64 g(20240601);
  int ok = 0, strict = 0;
  double worst_gap = 0;
  for (int i = 0; i < 100; ++i) {
    const auto in = oracle::random_instance(g, 3, 2, 30);
    const auto r = beat_1st(in.strata, in.constraints);
    std::vector<double> n(r.n.begin(), r.n.end());
    std::vector<Count> lo;
    double cost = 0, step = 0, max_c = 0;
    for (std::size_t h = 0; h < in.strata.size(); ++h) {
      lo.push_back(std::min<Count>(2, static_cast<Count>(in.strata[h].N)));
      cost += in.strata[h].cost * n[h];
      step += in.strata[h].cost;
      max_c = std::max(max_c, in.strata[h].cost);
    }
    const double best = oracle::grid_optimum(in.strata, in.targets, lo);
    const bool feasible = oracle::feasible(in.strata, in.targets, n, 1e-9);
    if (feasible && cost >= best - 1e-9 && cost <= best + step + 1e-9) ++ok;
    if (cost <= best + max_c + 1e-9) ++strict;
    worst_gap = std::max(worst_gap, cost - best);
  }
  const double secs = t.seconds();
  return {ok == 100 && secs < 60.0,
          fmt("%.0f/100 instances feasible and within one cost step of the exhaustive optimum", ok) +
              fmt(" (%.0f within the largest single-stratum cost; worst gap %.0f; ", strict, worst_gap) +
              fmt("%.2f s)", secs)};
}

Outcome criterion2() {
  std::mt19937_64 g(77);
  int instances = 0, violations = 0;
  double worst = -1;
  for (int i = 0; i < 400; ++i) {
    const auto in = oracle::random_instance(g, 6, 3, 2000);
    const auto r = beat_1st(in.strata, in.constraints);
    std::vector<double> n(r.n.begin(), r.n.end());
    ++instances;
    bool bad = false;
    for (const auto& c : r.cv) {
      worst = std::max(worst, c.expected - c.planned);
      bad = bad || c.expected > c.planned + 1e-9;
    }
    bad = bad || !oracle::feasible(in.strata, in.targets, n, 1e-9);
    violations += bad;
  }
  for (int i = 0; i < 150; ++i) {
    const auto in = random_two_stage(g);
    const auto r = beat_2st(in);
    ++instances;
    bool bad = false;
    for (const auto& c : r.cv) {
      worst = std::max(worst, c.expected - c.planned);
      bad = bad || c.expected > c.planned + 1e-9;
    }
    violations += bad;
  }
  return {violations == 0 && instances >= 500,
          fmt("%.0f allocations (400 one-stage, 150 two-stage), %.0f violations, max expected - planned %.3g",
              instances, violations, worst)};
}

Outcome criterion3() {
  const double d = deff_simple(0.04875369, 50);
  const double r = rho_from_sample(3.388931, 50);
  return {std::fabs(d - 3.388931) <= 5e-6 && std::fabs(r - 0.04875369) <= 1e-8,
          fmt("deff_simple(0.04875369, 50) = %.7f; rho_from_sample(3.388931, 50) = %.9f", d, r)};
}

Outcome criterion4() {
  std::mt19937_64 g(4);
  std::uniform_int_distribution<int> dn(10, 5000), dl(2, 8);
  std::uniform_real_distribution<double> ds(0.5, 20);
  int checks = 0, failures = 0;
  auto expect = [&](bool c) {
    ++checks;
    failures += !c;
  };
  for (int rep = 0; rep < 200; ++rep) {
    const int L = dl(g);
    const double S = ds(g);
    const double common = dn(g);
    std::vector<StratumInfo> eqvar, eqsize;
    for (int h = 0; h < L; ++h) {
      StratumInfo a;
      a.id = "A" + std::to_string(h);
      a.N = dn(g);
      a.means = {10};
      a.stdevs = {S};
      a.domains = {"1"};
      eqvar.push_back(a);
      StratumInfo b = a;
      b.N = common;
      b.stdevs = {ds(g)};
      eqsize.push_back(b);
    }
    const Count n = 5 * L + rep;
    expect(alloc_neyman(n, eqvar, 0) == alloc_proportional(n, eqvar));
    expect(alloc_proportional(n, eqsize) == alloc_uniform(n, eqsize));
  }
  for (int rep = 0; rep < 50; ++rep) {
    auto in = random_two_stage(g);
    for (auto& r : in.rho) std::fill(r.rho_nsr.begin(), r.rho_nsr.end(), 0.0);
    expect(beat_2st(in).n == beat_1st(in.strata, in.constraints).n);
  }
  std::uniform_real_distribution<double> u(0, 1), b(1, 100);
  for (int rep = 0; rep < 200; ++rep) {
    const double rho = u(g), bn = b(g);
    expect(deff_extended(0, 1000 * b(g), 0, 10 * b(g), 1, rho, 1, bn) == deff_simple(rho, bn));
  }
  return {failures == 0, fmt("%.0f/%.0f exact identities hold (Neyman=prop, prop=uniform, 2-stage=1-stage, "
                             "extended=simple)",
                             checks - failures, checks)};
}

Outcome criterion5() {
  Timer t;
  const std::vector<double> mos{1, 2, 2};
  const auto pi = inclusion_probabilities(mos, 2);
  const double pi_sum = std::accumulate(pi.begin(), pi.end(), 0.0);
  std::vector<int> hits(3, 0);
  Rng rng(derive_seed(5, "acceptance", "sampford"));
  const int R = 100000;
  for (int r = 0; r < R; ++r) {
    for (auto i : sampford_select(mos, 2, rng)) ++hits[i];
  }
  bool ok = std::fabs(pi_sum - 2.0) <= 1e-9;
  double worst_z = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double se = std::sqrt(pi[i] * (1 - pi[i]) / R);
    const double z = std::fabs(hits[i] / static_cast<double>(R) - pi[i]) / se;
    worst_z = std::max(worst_z, z);
    ok = ok && z <= 3.0;
  }
  const double secs = t.seconds();
  return {ok && secs < 30.0,
          fmt("frequencies %.4f %.4f %.4f", hits[0] / double(R), hits[1] / double(R), hits[2] / double(R)) +
              fmt(" vs 0.4 0.8 0.8; max |z| %.2f; sum pi %.12f; %.2f s", worst_z, pi_sum, secs)};
}

const pipeline::Fixture& synthetic() {
  static const pipeline::Fixture f =
      pipeline::build(pipeline::default_spec(7), {{"DOM1", {0.03, 0.03, 0.02}}, {"DOM2", {0.06, 0.06, 0.04}}});
  return f;
}

Outcome criterion6() {
  const auto& f = synthetic();
  const auto index = index_rows(f.frame.psu_id);
  const double N = static_cast<double>(f.frame.size());
  int sr_bad = 0, psu_bad = 0, sr_seen = 0;
  double total_mean = 0, worst_rel = 0;
  const int R = 500;
  for (int r = 0; r < R; ++r) {
    const auto sel = select_PSU(f.design.plan, f.design.psus, f.design.design, 2,
                                derive_seed(606, "acceptance-psu", static_cast<std::uint64_t>(r)));
    for (const auto& p : sel.sample) {
      if (p.sr) {
        ++sr_seen;
        sr_bad += p.pik != 1.0 || p.weight_1st != 1.0;
      }
    }
    const auto ssu = select_SSU(index, sel.sample, derive_seed(606, "acceptance-ssu", static_cast<std::uint64_t>(r)));
    std::map<std::string, double> acc;
    double total = 0;
    for (const auto& s : ssu) {
      acc[s.psu_id] += s.weight * s.pi_I;
      total += s.weight;
    }
    for (const auto& p : sel.sample) {
      const double M = static_cast<double>(index.at(p.psu_id).size());
      const double rel = std::fabs(acc[p.psu_id] - M) / M;
      worst_rel = std::max(worst_rel, rel);
      psu_bad += rel > 1e-9;
    }
    total_mean += total / R;
  }
  const double dev = std::fabs(total_mean - N) / N;
  return {sr_bad == 0 && psu_bad == 0 && sr_seen > 0 && dev <= 0.01,
          fmt("%.0f SR PSUs with weight 1 (%.0f bad); max relative error of sum d_k pi_I vs M %.2g; ", sr_seen,
              sr_bad, worst_rel) +
              fmt("mean total weight %.1f vs N = %.0f (%.3f%%)", total_mean, N, 100 * dev)};
}

Outcome criterion7() {
  std::mt19937_64 g(7007);
  std::uniform_int_distribution<int> np(2, 15), smin(1, 40);
  std::uniform_real_distribution<double> sd(0, 5), noise(0, 3);
  int bad = 0, groups = 0;
  double worst = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const int lo = smin(g);
    SynthSpec spec{{{"H1", "R1", np(g), lo, lo + smin(g)}, {"H2", "R2", np(g), lo, lo + 2 * smin(g)}},
                   {{"Y", false, 10, 1, sd(g), noise(g)}, {"B", true, 0.4, 0.05, 0.2 * sd(g) / 5, 0}},
                   static_cast<std::uint64_t>(rep + 1)};
    FrameColumns c;
    c.target_vars = {"Y", "B"};
    c.binary_vars = {"B"};
    const auto f = frame_from_table(synth_frame(spec), c);
    std::map<std::string, std::pair<std::vector<std::size_t>, int>> by;
    for (std::size_t i = 0; i < f.size(); ++i) by[f.stratum_id[i]].first.push_back(i);
    for (std::size_t j = 0; j < 2; ++j) {
      for (const auto& [id, rows] : by) {
        std::vector<double> y;
        std::vector<std::string> cl;
        for (auto i : rows.first) {
          y.push_back(f.y[j][i]);
          cl.push_back(f.psu_id[i]);
        }
        const auto d = deviance_decomposition(y, cl);
        ++groups;
        if (d.total > 0) {
          const double rel = std::fabs(d.within + d.between - d.total) / d.total;
          worst = std::max(worst, rel);
          const double r = rho_from_population(y, cl);
          bad += rel > 1e-9 || r < 0 || r > 1;
        }
      }
    }
  }
  return {bad == 0, fmt("100 frames, %.0f stratum/variable decompositions, max relative error %.2g, %.0f failures",
                        groups, worst, bad)};
}

Outcome criterion8() {
  std::mt19937_64 g(888);
  const StopRule stop;
  int runs = 0, first_bad = 0, stop_bad = 0, capped = 0, osc = 0;
  for (int i = 0; i < 200; ++i) {
    const auto in = random_two_stage(g);
    const auto r = beat_2st(in);
    ++runs;
    const auto& first = r.iterations.front();
    first_bad += first.iter != 0 || first.psu_sr != 0 || first.psu_nsr != 0 || first.psu_total != 0;
    const std::size_t last = r.iterations.size() - 1;
    double deft_diff = 0;
    for (std::size_t h = 0; h < r.deft_trace[last].size(); ++h) {
      for (std::size_t j = 0; j < r.deft_trace[last][h].size(); ++j) {
        deft_diff = std::max(deft_diff, std::fabs(r.deft_trace[last][h][j] - r.deft_trace[last - 1][h][j]));
      }
    }
    const double ssu_diff = std::fabs(static_cast<double>(r.iterations[last].ssu - r.iterations[last - 1].ssu));
    const bool oscillation = std::any_of(r.warnings.begin(), r.warnings.end(), [](const std::string& w) {
      return w.find("oscillates") != std::string::npos;
    });
    const bool at_cap = static_cast<int>(last) >= stop.max_iters;
    capped += at_cap;
    osc += oscillation;
    stop_bad += !(ssu_diff < stop.max_ssu_diff || deft_diff < stop.max_deft_diff || at_cap || oscillation) ||
                static_cast<int>(last) > stop.max_iters;
  }
  return {first_bad == 0 && stop_bad == 0,
          fmt("%.0f runs terminated; first trace row zero PSUs in all but %.0f; stop rule violated %.0f times", runs,
              first_bad, stop_bad) +
              fmt(" (%.0f by period-2 guard, %.0f at the iteration cap)", osc, capped)};
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "stratalloc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) std::cerr << "command failed (" << code << "): " << args[1] << "\n" << err.str();
  return code;
}

const std::vector<std::vector<double>> kPlanned{{0.03, 0.03, 0.02}, {0.06, 0.06, 0.04}};

// prepare -> allocate -> select-psu -> select-ssu -> evaluate in `dir`.
bool run_pipeline(const std::string& dir) {
  const auto f = [&](const std::string& name) { return (fs::path(dir) / name).string(); };
  const std::vector<std::string> frame_flags{"--frame", f("frame.csv"), "--target-vars", "Y1,Y2,Y3",
                                             "--binary-vars", "Y1,Y2", "--domain-var", "REGION"};
  {
    std::ofstream e(f("errors.csv"));
    e << "DOM,CV1,CV2,CV3\nDOM1,0.03,0.03,0.02\nDOM2,0.06,0.06,0.04\n";
  }
  auto with = [](std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  return cli({"synth", "--out", dir, "--strata", "6", "--psus", "10", "--psu-size-min", "200", "--psu-size-max",
              "1500", "--seed", "2024"}) == 0 &&
         cli(with({"prepare", "--out", dir, "--minimum", "50"}, frame_flags)) == 0 &&
         cli({"allocate", "--out", dir, "--stages", "2", "--strata", f("strata.csv"), "--errors", f("errors.csv"),
              "--psu", f("psu.csv"), "--des", f("des.csv"), "--rho", f("rho.csv"), "--effst", f("effst.csv")}) == 0 &&
         cli({"select-psu", "--out", dir, "--alloc2", f("alloc2.csv"), "--psu", f("psu.csv"), "--des", f("des.csv"),
              "--seed", "11"}) == 0 &&
         cli({"select-ssu", "--out", dir, "--frame", f("frame.csv"), "--sample-psu", f("sample_PSU.csv"), "--seed",
              "12"}) == 0 &&
         cli(with({"evaluate", "--out", dir, "--jobs", "4", "--strata", f("strata.csv"), "--alloc2", f("alloc2.csv"),
                   "--psu", f("psu.csv"), "--des", f("des.csv"), "--nsampl", "500", "--seed", "13"},
                  frame_flags)) == 0;
}

TempDir& first_run_dir() {
  static TempDir d;
  return d;
}

Outcome criterion9() {
  Timer t;
  const std::string dir = first_run_dir().str();
  if (!run_pipeline(dir)) return {false, "pipeline command failed"};
  const auto frame = read_csv(first_run_dir().file("frame.csv"));
  const auto psus = read_csv(first_run_dir().file("psu.csv"));
  const auto cv = read_csv(first_run_dir().file("coeff_var.csv"));
  const auto stats = read_csv(first_run_dir().file("PSU_stats.csv"));
  int rows = 0, bad = 0;
  double worst = 0;
  for (std::size_t i = 0; i < cv.num_rows(); ++i) {
    const std::size_t type = cv.cell(i, cv.require("DOM_TYPE")) == "DOM1" ? 0 : 1;
    for (std::size_t j = 0; j < 3; ++j) {
      const double v = cv.number(i, cv.require("CV" + std::to_string(j + 1)));
      const double ratio = v / kPlanned[type][j];
      worst = std::max(worst, ratio);
      ++rows;
      bad += !(ratio <= 1.25);
    }
  }
  const double secs = t.seconds();
  const auto& total = stats.rows().back();
  return {bad == 0 && rows == 4 * 3 && secs < 300.0,
          fmt("%.0f units, %.0f PSUs; ", frame.num_rows(), psus.num_rows()) + "sample " + total[1] + " PSUs / " +
              total[4] + " SSUs; " +
              fmt("%.0f empirical CVs, max CV/planned %.3f (limit 1.25); %.1f s", rows, worst, secs)};
}

Outcome criterion10() {
  TempDir second;
  if (!run_pipeline(second.str())) return {false, "pipeline command failed"};
  int files = 0, differ = 0;
  std::string first_diff;
  for (const auto& e : fs::directory_iterator(first_run_dir().str())) {
    if (e.path().extension() != ".csv") continue;
    ++files;
    if (slurp(e.path().string()) != slurp(second.file(e.path().filename().string()))) {
      ++differ;
      if (first_diff.empty()) first_diff = e.path().filename().string();
    }
  }
  return {differ == 0 && files >= 15, fmt("%.0f CSV files compared, %.0f differ", files, differ) +
                                           (first_diff.empty() ? "" : " (first: " + first_diff + ")")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"Bethel oracle equivalence", criterion1},   {"constraint compliance", criterion2},
      {"deff arithmetic anchor", criterion3},      {"degeneracy identities", criterion4},
      {"Sampford correctness", criterion5},        {"weight identities", criterion6},
      {"rho decomposition", criterion7},           {"two-stage termination", criterion8},
      {"end-to-end compliance", criterion9},       {"determinism", criterion10}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << "criterion " << (i + 1) << " [" << (o.pass ? "PASS" : "FAIL") << "] " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
