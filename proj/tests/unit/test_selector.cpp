#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "stratalloc/error.hpp"
#include "stratalloc/selection.hpp"

using namespace stratalloc;

namespace {

std::vector<PsuRecord> psus(const std::string& stratum, const std::vector<double>& mos) {
  std::vector<PsuRecord> out;
  for (std::size_t i = 0; i < mos.size(); ++i) out.push_back({stratum + "p" + std::to_string(i), stratum, mos[i]});
  return out;
}

StagePlan one_stratum_plan(const std::string& id, Count sr, Count nsr, Count ssu, double lambda) {
  StagePlan p;
  p.strata = {id};
  p.psu_sr = {sr};
  p.psu_nsr = {nsr};
  p.ssu = {ssu};
  p.ssu_sr = {0};
  p.ssu_nsr = {static_cast<double>(ssu)};
  p.threshold = {lambda};
  return p;
}

}  // namespace

TEST_CASE("sub-strata examples") {
  const auto p = psus("A", {10, 40, 20, 30});
  const auto subs = build_substrata("A", p, 45.0, 4, 2);
  REQUIRE(subs.size() == 2);
  CHECK(subs[0].mos == std::vector<double>{40, 30});
  CHECK(subs[1].mos == std::vector<double>{20, 10});
  CHECK(subs[0].sub_id == "A-1");
  CHECK(subs[1].sub_id == "A-2");
  CHECK(subs[0].n_psu_to_select == 2);
  CHECK(subs[1].n_psu_to_select == 2);
  CHECK(subs[0].size_total == 70);

  const auto all_sr = build_substrata("A", p, 5.0, 4, 2);
  REQUIRE(all_sr.size() == 4);
  for (const auto& s : all_sr) {
    CHECK(s.is_sr);
    CHECK(s.psu_ids.size() == 1);
    CHECK(s.n_psu_to_select == 1);
  }

  const auto single = build_substrata("B", psus("B", {12}), 100.0, 1, 1);
  REQUIRE(single.size() == 1);
  CHECK_FALSE(single[0].is_sr);
  CHECK(single[0].psu_ids.size() == 1);
}

TEST_CASE("property: every NSR PSU lands in exactly one sub-stratum") {
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> size(10, 500);
  std::uniform_int_distribution<int> count(1, 40), mm(1, 3);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> mos(static_cast<std::size_t>(count(g)));
    for (double& v : mos) v = std::round(size(g));
    const double lambda = size(g);
    const Count m = mm(g);
    std::size_t n_nsr = 0;
    for (double v : mos) n_nsr += v <= lambda;
    const Count to_select = std::max<Count>(m, static_cast<Count>(n_nsr) / 2);
    const auto p = psus("S", mos);
    const auto subs = build_substrata("S", p, lambda, to_select, m);
    std::multiset<std::string> seen;
    Count selections = 0;
    for (const auto& s : subs) {
      for (const auto& id : s.psu_ids) seen.insert(id);
      if (s.is_sr) {
        CHECK(s.mos[0] > lambda);
      } else {
        selections += s.n_psu_to_select;
        for (double v : s.mos) CHECK(v <= lambda);
        CHECK(std::is_sorted(s.mos.rbegin(), s.mos.rend()));
      }
    }
    CHECK(seen.size() == mos.size());
    for (const auto& x : p) CHECK(seen.count(x.psu_id) == 1);
    if (n_nsr > 0) CHECK(selections == to_select);
  }
}

TEST_CASE("inclusion probabilities sum to the sample size") {
  const auto pi = inclusion_probabilities({1, 2, 2}, 2);
  CHECK(pi[0] == doctest::Approx(0.4));
  CHECK(pi[1] == doctest::Approx(0.8));
  std::mt19937_64 g(8);
  std::uniform_real_distribution<double> size(1, 100);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> mos(12);
    for (double& v : mos) v = size(g);
    const auto p = inclusion_probabilities(mos, 3);
    CHECK(std::fabs(std::accumulate(p.begin(), p.end(), 0.0) - 3.0) <= 1e-9);
  }
}

TEST_CASE("Sampford: single draw is proportional to size") {
  const std::vector<double> mos{1, 3, 6};
  std::vector<int> hits(3, 0);
  Rng rng(11);
  const int R = 60000;
  for (int r = 0; r < R; ++r) {
    const auto s = sampford_select(mos, 1, rng);
    REQUIRE(s.size() == 1);
    ++hits[s[0]];
  }
  for (std::size_t i = 0; i < 3; ++i) {
    const double p = mos[i] / 10.0;
    CHECK(std::fabs(hits[i] / static_cast<double>(R) - p) <= 3 * std::sqrt(p * (1 - p) / R));
  }
}

TEST_CASE("Sampford: equal sizes give uniform frequencies") {
  const std::vector<double> mos(6, 5.0);
  std::vector<int> hits(6, 0);
  Rng rng(12);
  const int R = 30000;
  for (int r = 0; r < R; ++r) {
    const auto s = sampford_select(mos, 2, rng);
    REQUIRE(s.size() == 2);
    CHECK(s[0] < s[1]);
    for (auto i : s) ++hits[i];
  }
  const double p = 2.0 / 6.0;
  for (int h : hits) CHECK(std::fabs(h / static_cast<double>(R) - p) <= 3 * std::sqrt(p * (1 - p) / R));
}

TEST_CASE("Sampford: sizes {1,2,2} with m = 2") {
  const std::vector<double> mos{1, 2, 2};
  const auto pi = inclusion_probabilities(mos, 2);
  std::vector<int> hits(3, 0);
  Rng rng(13);
  const int R = 100000;
  for (int r = 0; r < R; ++r) {
    for (auto i : sampford_select(mos, 2, rng)) ++hits[i];
  }
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::fabs(hits[i] / static_cast<double>(R) - pi[i]) <= 3 * std::sqrt(pi[i] * (1 - pi[i]) / R));
  }
}

TEST_CASE("Sampford argument checks") {
  Rng rng(1);
  CHECK_THROWS_AS(sampford_select({1, 2}, 2, rng), InvalidArgument);
  CHECK_THROWS_AS(sampford_select({1, 10, 1}, 2, rng), InvalidArgument);
}

TEST_CASE("fully SR stratum keeps its whole allocation") {
  const auto p = psus("1000", {900, 800});
  const auto plan = one_stratum_plan("1000", 2, 0, 286, 100.0);
  const auto sel = select_PSU(plan, p, {{"1000", 1.0, 50}}, 2, 42);
  REQUIRE(sel.sample.size() == 2);
  Count total = 0;
  for (const auto& s : sel.sample) {
    CHECK(s.sr);
    CHECK(s.pik == 1.0);
    CHECK(s.weight_1st == 1.0);
    total += s.ssu_to_select;
  }
  CHECK(total == 286);
  REQUIRE(sel.stats.size() == 2);
  CHECK(sel.stats[0].psu == 2);
  CHECK(sel.stats[0].psu_sr == 2);
  CHECK(sel.stats[0].psu_nsr == 0);
  CHECK(sel.stats[0].ssu == 286);
  CHECK(sel.stats[1].stratum_id == "Total");
}

TEST_CASE("per-PSU minimum floors small shares") {
  const auto p = psus("A", {400, 400, 400, 400});
  const auto plan = one_stratum_plan("A", 0, 2, 60, 1e9);
  const auto sel = select_PSU(plan, p, {{"A", 1.0, 50}}, 2, 5);
  REQUIRE(sel.sample.size() == 2);
  for (const auto& s : sel.sample) {
    CHECK(s.ssu_to_select == 50);
    CHECK(s.pik == doctest::Approx(0.5));
  }
  CHECK(sel.stats.back().ssu == 100);
}

TEST_CASE("zero SSUs with PSUs required is an error") {
  const auto p = psus("A", {400, 400});
  CHECK_THROWS_AS(select_PSU(one_stratum_plan("A", 0, 2, 0, 1e9), p, {{"A", 1.0, 5}}, 2, 5), InvalidArgument);
}

TEST_CASE("property: selection respects SR flags, probabilities and totals") {
  std::mt19937_64 g(21);
  std::uniform_real_distribution<double> size(100, 2000);
  std::uniform_int_distribution<int> count(4, 30);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> mos(static_cast<std::size_t>(count(g)));
    for (double& v : mos) v = std::round(size(g));
    const auto p = psus("S", mos);
    const double lambda = size(g) * 1.2;
    Count sr = 0;
    for (double v : mos) sr += v > lambda;
    const Count nsr_avail = static_cast<Count>(mos.size()) - sr;
    const Count nsr = nsr_avail >= 2 ? std::min<Count>(nsr_avail, 2 + rep % 4) : nsr_avail;
    const Count ssu = 20 * (sr + nsr) + rep;
    const auto sel = select_PSU(one_stratum_plan("S", sr, nsr, ssu, lambda), p, {{"S", 1.0, 10}}, 2,
                                static_cast<std::uint64_t>(rep));
    Count total = 0;
    std::map<std::string, double> pi_sum;
    std::map<std::string, Count> per_sub;
    for (const auto& u : sel.universe) {
      if (u.sr) {
        CHECK(u.pik == 1.0);
      } else {
        pi_sum[u.sub_id] += u.pik;
        CHECK(u.pik < 1.0);
      }
    }
    for (const auto& s : sel.sample) {
      if (s.sr) CHECK(s.weight_1st == 1.0);
      CHECK(s.weight_1st == doctest::Approx(1.0 / s.pik));
      CHECK(s.ssu_to_select >= 10);
      CHECK(s.weight == doctest::Approx(s.weight_1st * s.weight_2st));
      total += s.ssu_to_select;
      if (!s.sr) ++per_sub[s.sub_id];
    }
    for (const auto& [sub, sum] : pi_sum) CHECK(std::fabs(sum - std::round(sum)) <= 1e-9);
    for (const auto& [sub, k] : per_sub) CHECK(static_cast<double>(k) == doctest::Approx(std::round(pi_sum[sub])));
    CHECK(total >= ssu);
    CHECK(sel.stats.back().ssu == total);
  }
}

TEST_CASE("select_PSU is reproducible and seed dependent") {
  std::vector<double> mos;
  for (int i = 0; i < 40; ++i) mos.push_back(100 + 37 * (i % 11));
  const auto p = psus("S", mos);
  const auto plan = one_stratum_plan("S", 0, 8, 400, 1e9);
  const std::vector<DesignParams> d{{"S", 1.0, 10}};
  auto ids = [](const PsuSelection& s) {
    std::vector<std::string> out;
    for (const auto& x : s.sample) out.push_back(x.psu_id);
    return out;
  };
  CHECK(ids(select_PSU(plan, p, d, 2, 77)) == ids(select_PSU(plan, p, d, 2, 77)));
  bool differs = false;
  for (std::uint64_t s = 1; s < 10 && !differs; ++s) differs = ids(select_PSU(plan, p, d, 2, s)) != ids(select_PSU(plan, p, d, 2, 77));
  CHECK(differs);
}

TEST_CASE("systematic SSU selection examples") {
  std::vector<std::string> labels(10, "P1");
  labels.insert(labels.end(), 4, "P2");
  const auto index = index_rows(labels);
  SelectedPsu a;
  a.psu_id = "P1";
  a.stratum_id = "A";
  a.pik = 0.5;
  a.ssu_to_select = 5;
  SelectedPsu b;
  b.psu_id = "P2";
  b.stratum_id = "A";
  b.pik = 1.0;
  b.sr = true;
  b.ssu_to_select = 4;
  const auto ssu = select_SSU(index, {a, b}, 9);
  std::vector<std::size_t> rows_a;
  for (const auto& s : ssu) {
    if (s.psu_id == "P1") {
      rows_a.push_back(s.row);
      CHECK(s.pi_II == 0.5);
      CHECK(s.weight == 4.0);
    } else {
      CHECK(s.weight == 1.0);
    }
  }
  REQUIRE(rows_a.size() == 5);
  for (std::size_t i = 1; i < rows_a.size(); ++i) CHECK(rows_a[i] - rows_a[i - 1] == 2);
  CHECK(ssu.size() == 9);

  SelectedPsu missing = a;
  missing.psu_id = "nope";
  CHECK_THROWS_AS(select_SSU(index, {missing}, 1), ReferenceError);

  std::vector<std::string> warnings;
  SelectedPsu big = b;
  big.ssu_to_select = 9;
  CHECK(select_SSU(index, {big}, 1, &warnings).size() == 4);
  CHECK(warnings.size() == 1);
}

TEST_CASE("property: systematic weights add up to the PSU size") {
  std::mt19937_64 g(31);
  std::uniform_int_distribution<int> size(1, 300);
  std::uniform_real_distribution<double> pik(0.05, 1.0);
  std::vector<std::string> labels;
  std::vector<SelectedPsu> sample;
  for (int p = 0; p < 100; ++p) {
    const int M = size(g);
    labels.insert(labels.end(), static_cast<std::size_t>(M), "P" + std::to_string(p));
    SelectedPsu s;
    s.psu_id = "P" + std::to_string(p);
    s.pik = pik(g);
    s.ssu_to_select = std::uniform_int_distribution<int>(1, M)(g);
    sample.push_back(s);
  }
  const auto index = index_rows(labels);
  const auto ssu = select_SSU(index, sample, 4);
  std::map<std::string, double> weight_pi;
  std::map<std::string, std::set<std::size_t>> rows;
  for (const auto& s : ssu) {
    CHECK(s.weight == doctest::Approx(1.0 / (s.pi_I * s.pi_II)).epsilon(1e-15));
    CHECK(s.prob == doctest::Approx(s.pi_I * s.pi_II).epsilon(1e-15));
    weight_pi[s.psu_id] += s.weight * s.pi_I;
    rows[s.psu_id].insert(s.row);
  }
  for (const auto& p : sample) {
    const double M = static_cast<double>(index.at(p.psu_id).size());
    CHECK(std::fabs(weight_pi[p.psu_id] - M) <= 1e-9 * M);
    CHECK(rows[p.psu_id].size() == static_cast<std::size_t>(p.ssu_to_select));
  }
  bool same = true;
  const auto again = select_SSU(index, sample, 4);
  for (std::size_t i = 0; i < ssu.size(); ++i) same = same && again[i].row == ssu[i].row;
  CHECK(same);
}

TEST_CASE("plan and sample tables round-trip") {
  StagePlan p = one_stratum_plan("A", 1, 4, 200, 812.5);
  p.ssu_sr = {40};
  p.ssu_nsr = {160};
  const auto back = plan_from_table(plan_to_table(p));
  CHECK(back.strata == p.strata);
  CHECK(back.psu_sr == p.psu_sr);
  CHECK(back.psu_nsr == p.psu_nsr);
  CHECK(back.ssu == p.ssu);
  CHECK(back.threshold == p.threshold);

  const auto sel = select_PSU(p, psus("A", {1000, 500, 400, 300, 200, 100}), {{"A", 1.0, 10}}, 2, 3);
  const auto rt = sample_psu_from_table(sample_psu_to_table(sel.sample));
  REQUIRE(rt.size() == sel.sample.size());
  for (std::size_t i = 0; i < rt.size(); ++i) {
    CHECK(rt[i].psu_id == sel.sample[i].psu_id);
    CHECK(rt[i].sr == sel.sample[i].sr);
    CHECK(rt[i].pik == sel.sample[i].pik);
    CHECK(rt[i].ssu_to_select == sel.sample[i].ssu_to_select);
  }
}
