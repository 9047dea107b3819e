#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "stratalloc/baseline.hpp"
#include "stratalloc/cli.hpp"
#include "stratalloc/error.hpp"
#include "stratalloc/io.hpp"
#include "stratalloc/onestage.hpp"
#include "stratalloc/selection.hpp"
#include "stratalloc/twostage.hpp"

namespace py = pybind11;
using namespace stratalloc;

namespace {

py::dict result_dict(const AllocationResult& r) {
  py::dict d;
  d["strata"] = r.strata;
  d["n"] = r.n;
  d["n_cont"] = r.n_cont;
  d["take_all"] = r.take_all;
  d["prop"] = r.prop;
  d["equal"] = r.equal;
  d["psu_sr"] = r.psu_sr;
  d["psu_nsr"] = r.psu_nsr;
  d["threshold"] = r.threshold;
  py::list iterations;
  for (const auto& it : r.iterations) {
    iterations.append(py::make_tuple(it.iter, it.psu_sr, it.psu_nsr, it.psu_total, it.ssu));
  }
  d["iterations"] = iterations;
  py::list cv;
  for (const auto& c : r.cv) {
    py::dict row;
    row["domain"] = domain_type_name(c.domain_type);
    row["category"] = c.category;
    row["variable"] = c.variable + 1;
    row["planned"] = c.planned;
    row["expected"] = c.expected;
    row["sensitivity"] = c.sensitivity;
    cv.append(row);
  }
  d["cv"] = cv;
  d["converged"] = r.converged;
  d["warnings"] = r.warnings;
  d["total_ssu"] = r.total_ssu();
  d["total_psu"] = r.total_psu();
  return d;
}

InputSet load(const std::string& strata, const std::string& errors, const std::string& psu = "",
              const std::string& des = "", const std::string& rho = "") {
  InputPaths p;
  p.strata = strata;
  p.errors = errors;
  if (!psu.empty()) p.psu = psu;
  if (!des.empty()) p.des = des;
  if (!rho.empty()) p.rho = rho;
  return load_inputs(p);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Optimal allocation and selection for one- and two-stage stratified samples";

  py::register_exception<Error>(m, "StratallocError", PyExc_RuntimeError);

  py::class_<StratumInfo>(m, "Stratum")
      .def(py::init<>())
      .def(py::init([](std::string id, double N, std::vector<double> means, std::vector<double> stdevs, double cost,
                       bool cens, std::vector<std::string> domains) {
             return StratumInfo{std::move(id), N, std::move(means), std::move(stdevs), cost, cens, std::move(domains)};
           }),
           py::arg("id"), py::arg("N"), py::arg("means"), py::arg("stdevs"), py::arg("cost") = 1.0,
           py::arg("cens") = false, py::arg("domains") = std::vector<std::string>{"1"})
      .def_readwrite("id", &StratumInfo::id)
      .def_readwrite("N", &StratumInfo::N)
      .def_readwrite("means", &StratumInfo::means)
      .def_readwrite("stdevs", &StratumInfo::stdevs)
      .def_readwrite("cost", &StratumInfo::cost)
      .def_readwrite("cens", &StratumInfo::cens)
      .def_readwrite("domains", &StratumInfo::domains);

  py::class_<PrecisionConstraint>(m, "Constraint")
      .def(py::init([](std::string domain, std::vector<double> cv) {
             return PrecisionConstraint{std::move(domain), std::move(cv)};
           }),
           py::arg("domain"), py::arg("cv"))
      .def_readwrite("domain", &PrecisionConstraint::domain)
      .def_readwrite("cv", &PrecisionConstraint::cv);

  m.def("deff_simple", &deff_simple, py::arg("rho"), py::arg("b"));
  m.def("deff_extended", &deff_extended, py::arg("N_sr"), py::arg("N_nsr"), py::arg("n_sr"), py::arg("n_nsr"),
        py::arg("rho_sr"), py::arg("rho_nsr"), py::arg("b_sr"), py::arg("b_nsr"));
  m.def("rho_from_sample", &rho_from_sample, py::arg("deff"), py::arg("b"));
  m.def(
      "rho_from_population",
      [](const std::vector<double>& y, const std::vector<std::string>& cluster) {
        return rho_from_population(y, cluster);
      },
      py::arg("y"), py::arg("cluster"));
  m.def("compute_threshold", &compute_threshold, py::arg("minimum"), py::arg("delta"), py::arg("f"));
  m.def("effst_compute", &effst_compute, py::arg("var_est"), py::arg("var_ht"));

  m.def("alloc_uniform", &alloc_uniform, py::arg("n"), py::arg("strata"));
  m.def("alloc_proportional", &alloc_proportional, py::arg("n"), py::arg("strata"));
  m.def(
      "alloc_neyman", [](Count n, const std::vector<StratumInfo>& s, std::size_t j) { return alloc_neyman(n, s, j); },
      py::arg("n"), py::arg("strata"), py::arg("variable") = 0);
  m.def(
      "sampford_select",
      [](const std::vector<double>& mos, Count k, std::uint64_t seed) {
        Rng rng(seed);
        return sampford_select(mos, k, rng);
      },
      py::arg("mos"), py::arg("m"), py::arg("seed"));
  m.def("inclusion_probabilities", &inclusion_probabilities, py::arg("mos"), py::arg("m"));

  m.def(
      "beat_1st",
      [](const std::vector<StratumInfo>& s, const std::vector<PrecisionConstraint>& c, Count minnumstrat) {
        OneStageOptions o;
        o.minnumstrat = minnumstrat;
        return result_dict(beat_1st(s, c, o));
      },
      py::arg("strata"), py::arg("constraints"), py::arg("minnumstrat") = 2);
  m.def(
      "beat_1st_files",
      [](const std::string& strata, const std::string& errors, Count minnumstrat) {
        const auto in = load(strata, errors);
        OneStageOptions o;
        o.minnumstrat = minnumstrat;
        return result_dict(beat_1st(in.strata, in.constraints, o));
      },
      py::arg("strata"), py::arg("errors"), py::arg("minnumstrat") = 2);
  m.def(
      "beat_2st_files",
      [](const std::string& strata, const std::string& errors, const std::string& psu, const std::string& des,
         const std::string& rho, Count minnumstrat, Count min_psu_strat) {
        const auto in = load(strata, errors, psu, des, rho);
        TwoStageInputs t{in.strata, in.constraints, in.design, in.psus, in.rho, in.deft, in.effst};
        TwoStageOptions o;
        o.minnumstrat = minnumstrat;
        o.min_psu_strat = min_psu_strat;
        return result_dict(beat_2st(t, o));
      },
      py::arg("strata"), py::arg("errors"), py::arg("psu"), py::arg("des"), py::arg("rho"),
      py::arg("minnumstrat") = 2, py::arg("min_psu_strat") = 2);

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "stratalloc");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line front end; returns (exit_code, stdout, stderr).");
}
