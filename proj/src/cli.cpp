#include "stratalloc/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "stratalloc/csv.hpp"
#include "stratalloc/error.hpp"
#include "stratalloc/evaluate.hpp"
#include "stratalloc/frame.hpp"
#include "stratalloc/io.hpp"
#include "stratalloc/onestage.hpp"
#include "stratalloc/plots.hpp"
#include "stratalloc/report.hpp"
#include "stratalloc/selection.hpp"
#include "stratalloc/twostage.hpp"
#include "stratalloc/validate.hpp"

namespace stratalloc {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Context {
  std::string out_dir;
  bool plots = false;
  int jobs = 1;
  std::vector<std::string> outputs;
  std::vector<std::string> warnings;

  std::string path(const std::string& name) const { return (fs::path(out_dir) / name).string(); }
  void write(const std::string& name, const Table& t) {
    write_csv(path(name), t);
    outputs.push_back(name);
  }
  void plot(const std::string& stem, const Table& data, const std::string& svg) {
    write_plot(out_dir, stem, data, svg);
    outputs.push_back(stem + ".csv");
    outputs.push_back(stem + ".svg");
  }
  void warn(const std::vector<std::string>& w) { warnings.insert(warnings.end(), w.begin(), w.end()); }
};

struct FrameFlags {
  std::string frame;
  std::string id_psu = "PSU_ID";
  std::string id_ssu = "UNIT_ID";
  std::string strata_var = "STRATUM";
  std::vector<std::string> target_vars;
  std::vector<std::string> binary_vars;
  std::string deff_var;
  std::string domain_var;

  void add(CLI::App* app, bool targets_required) {
    app->add_option("--frame", frame, "Unit-level frame CSV")->required();
    app->add_option("--id-psu", id_psu, "PSU identifier column")->capture_default_str();
    app->add_option("--id-ssu", id_ssu, "SSU identifier column")->capture_default_str();
    app->add_option("--strata-var", strata_var, "Stratum column")->capture_default_str();
    auto* t = app->add_option("--target-vars", target_vars, "Target variable columns")->delimiter(',');
    if (targets_required) t->required();
    app->add_option("--binary-vars", binary_vars, "Targets restricted to {0,1}")->delimiter(',');
    app->add_option("--deff-var", deff_var, "Grouping column for rho (default: strata var)");
    app->add_option("--domain-var", domain_var, "Column giving the second domain type");
  }
  FrameColumns columns() const {
    return {id_psu, id_ssu, strata_var, target_vars, binary_vars, deff_var, domain_var, ""};
  }
};

struct AllocFlags {
  InputPaths paths;
  std::string psu, des, rho, deft, effst;
  Count minnumstrat = 2;
  Count min_psu_strat = 2;
  double max_ssu_diff = 5.0;
  double max_deft_diff = 0.06;
  int max_iters = 20;
  double epsilon = 1e-11;
  int bethel_max_iters = 200;
  bool no_sensitivity = false;

  void add(CLI::App* app) {
    app->add_option("--strata", paths.strata, "Strata CSV")->required();
    app->add_option("--errors", paths.errors, "Precision constraints CSV")->required();
    app->add_option("--psu", psu, "PSU CSV");
    app->add_option("--des", des, "Design parameters CSV");
    app->add_option("--rho", rho, "Intraclass correlation CSV");
    app->add_option("--deft", deft, "Starting deft CSV");
    app->add_option("--effst", effst, "Estimator effect CSV");
    app->add_option("--minnumstrat", minnumstrat, "Minimum SSUs per stratum")->capture_default_str();
    app->add_option("--min-psu-strat", min_psu_strat, "Minimum NSR PSUs per stratum")->capture_default_str();
    app->add_option("--max-ssu-diff", max_ssu_diff, "Stop when SSU totals differ by less")->capture_default_str();
    app->add_option("--max-deft-diff", max_deft_diff, "Stop when deft changes by less")->capture_default_str();
    app->add_option("--max-iters", max_iters, "Maximum two-stage iterations")->capture_default_str();
    app->add_option("--epsilon", epsilon, "Multiplier convergence tolerance")->capture_default_str();
    app->add_option("--bethel-max-iters", bethel_max_iters, "Maximum multiplier iterations")->capture_default_str();
  }

  InputPaths resolved() const {
    InputPaths p = paths;
    auto opt = [](const std::string& s) { return s.empty() ? std::optional<std::string>{} : std::optional<std::string>{s}; };
    p.psu = opt(psu);
    p.des = opt(des);
    p.rho = opt(rho);
    p.deft = opt(deft);
    p.effst = opt(effst);
    return p;
  }
  void require_two_stage() const {
    if (psu.empty() || des.empty() || rho.empty()) {
      throw UsageError("two-stage allocation requires --psu, --des and --rho");
    }
  }
  OneStageOptions one_stage() const { return {minnumstrat, {epsilon, bethel_max_iters}, !no_sensitivity}; }
  TwoStageOptions two_stage() const {
    return {minnumstrat, min_psu_strat, {max_ssu_diff, max_deft_diff, max_iters}, {epsilon, bethel_max_iters},
            !no_sensitivity};
  }
};

TwoStageInputs two_stage_inputs(const InputSet& in) {
  return {in.strata, in.constraints, in.design, in.psus, in.rho, in.deft, in.effst};
}

void write_allocation(Context& ctx, const InputSet& in, const AllocationResult& r, bool two_stage) {
  ctx.write("alloc.csv", alloc_table(r));
  ctx.write("file_strata.csv", file_strata_table(in.strata, r));
  ctx.write("sensitivity.csv", sensitivity_table(r));
  ctx.write("expected_cv.csv", expected_cv_table(r));
  ctx.write("iterations.csv", iterations_table(r));
  if (two_stage) {
    const auto plan = plan_from_result(r);
    ctx.write("alloc2.csv", plan_to_table(plan));
    ctx.write("deft_trace.csv", deft_trace_table(r));
    if (ctx.plots) {
      Series psu{"PSU", {}}, ssu{"SSU", {}};
      for (std::size_t h = 0; h < plan.strata.size(); ++h) {
        psu.values.push_back(static_cast<double>(plan.psu_sr[h] + plan.psu_nsr[h]));
        ssu.values.push_back(static_cast<double>(plan.ssu[h]));
      }
      ctx.plot("plot_allocation", plan_to_table(plan), svg_bar_chart("SSUs and PSUs per stratum", plan.strata, {ssu, psu}));
    }
  } else if (ctx.plots) {
    Series alloc{"ALLOC", {}}, prop{"PROP", {}}, equal{"EQUAL", {}};
    for (std::size_t h = 0; h < r.strata.size(); ++h) {
      alloc.values.push_back(static_cast<double>(r.n[h]));
      prop.values.push_back(static_cast<double>(r.prop[h]));
      equal.values.push_back(static_cast<double>(r.equal[h]));
    }
    ctx.plot("plot_allocation", alloc_table(r), svg_bar_chart("Sample size per stratum", r.strata, {alloc, prop, equal}));
  }
}

void weight_plot(Context& ctx, const std::vector<double>& weights, const std::string& title) {
  ctx.plot("plot_weights", histogram_table(weights, 20), [&] {
    const auto t = histogram_table(weights, 20);
    std::vector<std::string> labels;
    Series s{"units", {}};
    for (const auto& row : t.rows()) {
      labels.push_back(row[0]);
      s.values.push_back(*parse_double(row[2]));
    }
    return svg_bar_chart(title, labels, {s});
  }());
}

json option_values(const CLI::App* app) {
  json j = json::object();
  for (const CLI::Option* opt : app->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      j[name] = res.size() == 1 ? json(res.front()) : json(res);
    } else if (!opt->get_default_str().empty()) {
      j[name] = opt->get_default_str();
    } else {
      j[name] = nullptr;
    }
  }
  return j;
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optimal allocation and selection for one- and two-stage stratified samples", "stratalloc"};
  app.set_config("--config", "", "TOML/INI configuration file; command-line flags win");
  app.require_subcommand(1);
  app.fallthrough();
  std::string out_dir;
  int jobs = 1;
  bool plots = false;
  app.add_option("--out", out_dir, "Output directory (default: $STRATALLOC_OUT_DIR or .)");
  app.add_option("--jobs", jobs, "Worker threads for replicates and grids")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_flag("--plots", plots, "Write plot data (CSV) and SVG renderings");

  auto* prepare = app.add_subcommand("prepare", "Build allocation inputs from a unit-level frame");
  FrameFlags prep_frame;
  prep_frame.add(prepare, true);
  double prep_delta = 1.0;
  Count prep_minimum = 50;
  std::optional<double> deff_sugg;
  prepare->add_option("--delta", prep_delta, "Average SSU dimension")->capture_default_str();
  prepare->add_option("--minimum", prep_minimum, "Minimum SSUs per selected PSU")->capture_default_str();
  prepare->add_option("--deff-sugg", deff_sugg, "Suggested deff written to deff.csv (documentation only)");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic unit-level frame");
  int sy_strata = 6, sy_psus = 10, sy_min = 500, sy_max = 1200, sy_regions = 3;
  double sy_psu_sd = 0.05;
  std::uint64_t sy_seed = 0;
  synth->add_option("--strata", sy_strata, "Number of strata")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--psus", sy_psus, "PSUs per stratum")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--psu-size-min", sy_min, "Smallest PSU")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--psu-size-max", sy_max, "Largest PSU")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--regions", sy_regions, "Number of regions")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--psu-sd", sy_psu_sd, "PSU random-effect sd of the binary targets")->capture_default_str();
  synth->add_option("--seed", sy_seed, "Random seed")->required();

  auto* check = app.add_subcommand("check", "Compare stratum sizes with the PSU frame");
  std::string chk_strata, chk_psu, chk_des;
  check->add_option("--strata", chk_strata, "Strata CSV")->required();
  check->add_option("--psu", chk_psu, "PSU CSV")->required();
  check->add_option("--des", chk_des, "Design parameters CSV")->required();

  auto* allocate = app.add_subcommand("allocate", "Compute the optimal allocation");
  AllocFlags alloc;
  int stages = 1;
  alloc.add(allocate);
  allocate->add_option("--stages", stages, "1 or 2")->check(CLI::IsMember({1, 2}))->capture_default_str();
  allocate->add_flag("--no-sensitivity", alloc.no_sensitivity, "Skip the 10% sensitivity re-solves");

  auto* select_psu = app.add_subcommand("select-psu", "Select PSUs for a two-stage allocation");
  std::string sp_alloc2, sp_psu, sp_des;
  Count sp_min_psu = 2;
  std::uint64_t sp_seed = 0;
  select_psu->add_option("--alloc2", sp_alloc2, "alloc2.csv from allocate --stages 2")->required();
  select_psu->add_option("--psu", sp_psu, "PSU CSV")->required();
  select_psu->add_option("--des", sp_des, "Design parameters CSV")->required();
  select_psu->add_option("--min-psu-strat", sp_min_psu, "PSUs selected per NSR sub-stratum")->capture_default_str();
  select_psu->add_option("--seed", sp_seed, "Random seed")->required();

  auto* select_ssu = app.add_subcommand("select-ssu", "Select SSUs inside the selected PSUs");
  std::string ss_frame, ss_id_psu = "PSU_ID", ss_sample;
  std::uint64_t ss_seed = 0;
  select_ssu->add_option("--frame", ss_frame, "Unit-level frame CSV")->required();
  select_ssu->add_option("--id-psu", ss_id_psu, "PSU identifier column")->capture_default_str();
  select_ssu->add_option("--sample-psu", ss_sample, "sample_PSU.csv from select-psu")->required();
  select_ssu->add_option("--seed", ss_seed, "Random seed")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Monte Carlo CVs of the two-stage design");
  FrameFlags ev_frame;
  ev_frame.add(evaluate, true);
  std::string ev_strata, ev_alloc2, ev_psu, ev_des, ev_sample;
  int nsampl = 500;
  bool redraw = true;
  Count ev_min_psu = 2;
  std::uint64_t ev_seed = 0;
  evaluate->add_option("--strata", ev_strata, "Strata CSV (domain memberships)")->required();
  evaluate->add_option("--alloc2", ev_alloc2, "alloc2.csv from allocate --stages 2")->required();
  evaluate->add_option("--psu", ev_psu, "PSU CSV")->required();
  evaluate->add_option("--des", ev_des, "Design parameters CSV")->required();
  evaluate->add_option("--sample-psu", ev_sample, "Fixed PSU sample (with --no-redraw-psu)");
  evaluate->add_option("--nsampl", nsampl, "Number of replicate samples")->capture_default_str();
  evaluate->add_flag("--redraw-psu,!--no-redraw-psu", redraw, "Reselect PSUs in every replicate")->capture_default_str();
  evaluate->add_option("--min-psu-strat", ev_min_psu, "PSUs selected per NSR sub-stratum")->capture_default_str();
  evaluate->add_option("--seed", ev_seed, "Random seed")->required();

  auto* sensitivity = app.add_subcommand("sensitivity", "PSU/SSU totals over a grid of per-PSU minimums");
  AllocFlags sens;
  sens.add(sensitivity);
  Count grid_min = 0, grid_max = 0;
  int n_points = 10;
  sensitivity->add_option("--min", grid_min, "Smallest minimum")->required();
  sensitivity->add_option("--max", grid_max, "Largest minimum")->required();
  sensitivity->add_option("--n-points", n_points, "Grid points")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  Context ctx;
  if (!out_dir.empty()) {
    ctx.out_dir = out_dir;
  } else if (const char* env = std::getenv("STRATALLOC_OUT_DIR"); env && *env) {
    ctx.out_dir = env;
  } else {
    ctx.out_dir = ".";
  }
  ctx.plots = plots;
  ctx.jobs = jobs;

  CLI::App* sub = app.get_subcommands().front();
  json manifest;
  manifest["tool"] = "stratalloc";
  manifest["version"] = "0.1.0";
  manifest["subcommand"] = sub->get_name();
  manifest["global"] = {{"out", ctx.out_dir}, {"jobs", jobs}, {"plots", plots}};
  manifest["parameters"] = option_values(sub);

  try {
    if (sub == allocate && stages == 2) alloc.require_two_stage();
    if (sub == sensitivity) sens.require_two_stage();
    if (sub == evaluate && !redraw && ev_sample.empty()) throw UsageError("--no-redraw-psu requires --sample-psu");
    fs::create_directories(ctx.out_dir);

    if (sub == synth) {
      SynthSpec spec;
      spec.seed = sy_seed;
      for (int h = 0; h < sy_strata; ++h) {
        spec.strata.push_back({"S" + std::to_string(h + 1), "R" + std::to_string(h % sy_regions + 1), sy_psus, sy_min, sy_max});
      }
      spec.targets = {{"Y1", true, 0.3, 0.05, sy_psu_sd, 0.0},
                      {"Y2", true, 0.6, 0.05, sy_psu_sd, 0.0},
                      {"Y3", false, 50.0, 5.0, 4.0 * sy_psu_sd * 50.0, 15.0}};
      const Table t = synth_frame(spec);
      ctx.write("frame.csv", t);
      manifest["seed"] = sy_seed;
      out << "generated " << t.num_rows() << " units\n";
    } else if (sub == prepare) {
      const Frame f = frame_from_table(read_csv(prep_frame.frame), prep_frame.columns());
      PrepareOptions po{prep_delta, prep_minimum, deff_sugg};
      const auto p = prepare_inputs_scenario1(f, po);
      ctx.warn(p.warnings);
      ctx.write("strata.csv", strata_to_table(p.strata));
      ctx.write("rho.csv", rho_to_table(p.rho));
      ctx.write("deff.csv", factors_to_table(p.deff, "DEFF"));
      ctx.write("effst.csv", factors_to_table(p.effst, "EFFST"));
      ctx.write("psu.csv", psus_to_table(p.psus));
      ctx.write("des.csv", design_to_table(p.design));
      out << "prepared inputs for " << p.strata.size() << " strata and " << p.psus.size() << " PSUs\n";
    } else if (sub == check) {
      const auto strata = strata_from_table(read_csv(chk_strata));
      const auto psus = psus_from_table(read_csv(chk_psu));
      const auto des = design_from_table(read_csv(chk_des));
      const auto rep = check_input(strata, des, psus);
      Table t({"STRATUM", "N_STRATA", "N_PSU", "DIFFERENCE"});
      int differing = 0;
      for (const auto& r : rep.rows) {
        t.add_row({r.stratum_id, format_number(r.n_strata), format_number(r.n_psu), format_number(r.difference())});
        if (r.difference() != 0.0) ++differing;
      }
      ctx.write("check_report.csv", t);
      ctx.write("strata_checked.csv", strata_to_table(rep.corrected));
      out << differing << " of " << rep.rows.size() << " strata differ from the PSU totals\n";
    } else if (sub == allocate) {
      const auto in = load_inputs(alloc.resolved());
      const auto r = stages == 1 ? beat_1st(in.strata, in.constraints, alloc.one_stage())
                                 : beat_2st(two_stage_inputs(in), alloc.two_stage());
      ctx.warn(r.warnings);
      write_allocation(ctx, in, r, stages == 2);
      manifest["result"] = {{"ssu_total", r.total_ssu()}, {"psu_total", r.total_psu()}, {"converged", r.converged}};
      for (const auto& [k, v] : r.params) manifest["result"]["params"][k] = v;
      out << "total SSUs " << r.total_ssu();
      if (stages == 2) out << ", total PSUs " << r.total_psu() << ", iterations " << r.iterations.size();
      out << "\n";
    } else if (sub == select_psu) {
      const auto plan = plan_from_table(read_csv(sp_alloc2));
      const auto psus = psus_from_table(read_csv(sp_psu));
      const auto des = design_from_table(read_csv(sp_des));
      const auto sel = select_PSU(plan, psus, des, sp_min_psu, sp_seed);
      ctx.warn(sel.warnings);
      ctx.write("universe_PSU.csv", universe_to_table(sel.universe));
      ctx.write("sample_PSU.csv", sample_psu_to_table(sel.sample));
      ctx.write("PSU_stats.csv", psu_stats_to_table(sel.stats));
      manifest["seed"] = sp_seed;
      out << "selected " << sel.stats.back().psu << " PSUs with " << sel.stats.back().ssu << " SSUs\n";
    } else if (sub == select_ssu) {
      const Table frame = read_csv(ss_frame);
      const std::size_t c_psu = frame.require(ss_id_psu);
      std::vector<std::string> labels;
      for (std::size_t i = 0; i < frame.num_rows(); ++i) labels.push_back(frame.cell(i, c_psu));
      const auto sample = sample_psu_from_table(read_csv(ss_sample));
      std::vector<std::string> w;
      const auto ssus = select_SSU(index_rows(labels), sample, ss_seed, &w);
      ctx.warn(w);
      ctx.write("sample_SSU.csv", sample_ssu_to_table(frame, ssus));
      if (ctx.plots) {
        std::vector<double> weights;
        for (const auto& s : ssus) weights.push_back(s.weight);
        weight_plot(ctx, weights, "Distribution of design weights");
      }
      manifest["seed"] = ss_seed;
      out << "selected " << ssus.size() << " SSUs\n";
    } else if (sub == evaluate) {
      const Frame f = frame_from_table(read_csv(ev_frame.frame), ev_frame.columns());
      const auto strata = strata_from_table(read_csv(ev_strata));
      EvalDesign d;
      d.plan = plan_from_table(read_csv(ev_alloc2));
      d.psus = psus_from_table(read_csv(ev_psu));
      d.design = design_from_table(read_csv(ev_des));
      if (!ev_sample.empty()) d.fixed_sample = sample_psu_from_table(read_csv(ev_sample));
      const auto rep = eval_2stage(f, strata, d, ev_seed, {nsampl, redraw, jobs, ev_min_psu});
      ctx.warn(rep.warnings);
      ctx.write("coeff_var.csv", coeff_var_to_table(rep));
      Table detail({"DOM_TYPE", "dom", "VAR", "TRUE_MEAN", "MEAN_EST", "SD_EST", "CV", "DROPPED"});
      for (const auto& row : rep.rows) {
        for (std::size_t j = 0; j < rep.variables.size(); ++j) {
          detail.add_row({domain_type_name(row.domain_type), row.category, rep.variables[j],
                          format_number(row.truth[j]), format_number(row.mean[j]), format_number(row.sd[j]),
                          format_number(row.cv[j]), format_count(row.dropped)});
        }
      }
      ctx.write("eval_detail.csv", detail);
      if (ctx.plots) weight_plot(ctx, rep.weight_totals, "Total design weight per replicate");
      manifest["seed"] = ev_seed;
      out << "evaluated " << rep.nsampl << " replicate samples\n";
    } else if (sub == sensitivity) {
      const auto in = load_inputs(sens.resolved());
      const auto pts = sensitivity_min_SSU(two_stage_inputs(in), grid_min, grid_max, n_points, sens.two_stage(), jobs);
      const Table t = min_ssu_table(pts);
      ctx.write("sensitivity_min_SSU.csv", t);
      if (ctx.plots) {
        std::vector<double> x;
        Series psu{"PSU", {}}, ssu{"SSU", {}};
        for (const auto& p : pts) {
          x.push_back(static_cast<double>(p.minimum));
          psu.values.push_back(static_cast<double>(p.psu_total));
          ssu.values.push_back(static_cast<double>(p.ssu_total));
        }
        ctx.plot("plot_sensitivity", t, svg_line_chart("PSUs and SSUs by minimum SSUs per PSU", x, {ssu, psu}));
      }
      out << "computed " << pts.size() << " grid points\n";
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << to_string(e.kind()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  for (const auto& w : ctx.warnings) err << "warning: " << w << "\n";
  manifest["outputs"] = ctx.outputs;
  manifest["warnings"] = ctx.warnings;
  manifest["created"] = timestamp();
  std::ofstream mf(ctx.path("run_manifest.json"), std::ios::binary);
  mf << manifest.dump(2) << "\n";
  return 0;
}

}  // namespace stratalloc
