#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stratalloc/bethel.hpp"
#include "stratalloc/types.hpp"

namespace stratalloc {

struct StopRule {
  double max_ssu_diff = 5.0;
  double max_deft_diff = 0.06;
  int max_iters = 20;
};

// lambda = minimum * delta / f. Throws InvalidArgument when f <= 0.
double compute_threshold(double minimum, double delta, double f);

// Indices of the self-representing (mos > lambda) and remaining PSUs.
// lambda <= 0 means the threshold is not known yet: every PSU is NSR.
struct SrNsrSplit {
  std::vector<std::size_t> sr;
  std::vector<std::size_t> nsr;
};
SrNsrSplit split_sr_nsr(const std::vector<PsuRecord>& psus, double lambda);

// 1 + rho (b - 1).
double deff_simple(double rho, double b);

// SR/NSR mixture of cluster effects weighted by N^2 / n and normalized so the
// weights sum to 1. A part with no population or no sample drops out, so
// N_sr = 0 gives deff_simple(rho_nsr, b_nsr) exactly.
double deff_extended(double N_sr, double N_nsr, double n_sr, double n_nsr, double rho_sr, double rho_nsr,
                     double b_sr, double b_nsr);

struct Deviance {
  double within = 0.0;
  double between = 0.0;
  double total = 0.0;
};

// Deviance decomposition of y by cluster label.
Deviance deviance_decomposition(const std::vector<double>& y, const std::vector<std::string>& cluster);

// 1 - D_within / D_total; 0 with a warning when D_total is 0.
double rho_from_population(const std::vector<double>& y, const std::vector<std::string>& cluster,
                           std::vector<std::string>* warnings = nullptr);

// (deff - 1) / (b - 1). Throws InvalidArgument when b <= 1.
double rho_from_sample(double deff, double b);

// var_est / var_ht per variable. Throws InvalidArgument on a zero HT variance.
std::vector<double> effst_compute(const std::vector<double>& var_est, const std::vector<double>& var_ht);

struct TwoStageOptions {
  Count minnumstrat = 2;
  Count min_psu_strat = 2;
  StopRule stop;
  BethelOptions bethel;
  bool sensitivity = true;
};

struct TwoStageInputs {
  std::vector<StratumInfo> strata;
  std::vector<PrecisionConstraint> constraints;
  std::vector<DesignParams> design;
  std::vector<PsuRecord> psus;
  RhoTable rho;
  std::optional<DeftTable> deft_start;
  std::optional<EffstTable> effst;
};

// Per-stratum PSU structure implied by an SSU allocation.
struct StageDesign {
  std::vector<double> threshold;
  std::vector<Count> psu_sr;
  std::vector<Count> psu_nsr;
  std::vector<double> ssu_sr;
  std::vector<double> ssu_nsr;
  std::vector<std::vector<double>> deft;  // [stratum][variable]
};

// Threshold, SR/NSR split, PSU counts and design effects for allocation n.
// design and rho must be aligned with in.strata.
StageDesign stage_design(const TwoStageInputs& in, const std::vector<DesignParams>& design, const RhoTable& rho,
                         const std::vector<Count>& n, Count min_psu_strat);

AllocationResult beat_2st(const TwoStageInputs& in, const TwoStageOptions& opts = {});

struct MinSsuPoint {
  Count minimum = 0;
  Count psu_total = 0;
  Count ssu_total = 0;
};

// beat_2st over an evenly spaced grid of per-PSU minimums (same value in every
// stratum). Grid points are independent and run on up to `jobs` threads.
std::vector<MinSsuPoint> sensitivity_min_SSU(const TwoStageInputs& in, Count min, Count max, int n_points = 10,
                                             const TwoStageOptions& opts = {}, int jobs = 1);

}  // namespace stratalloc
