#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kroncov/estimator.hpp"
#include "kroncov/factors.hpp"
#include "kroncov/glm.hpp"
#include "kroncov/simulator.hpp"
#include "kroncov/tensor.hpp"

namespace kroncov {

// --- Trial tensor container (binary) ---------------------------------------
// Layout: magic "KCT1", then p, q, r, n as uint32 little-endian, then
// p*q*r*n float64 little-endian values in storage order (channel fastest,
// then time, epoch, sample).
void write_kct(const std::string& path, const TrialTensor& t);
TrialTensor read_kct(const std::string& path);

// --- Factor files (text) ----------------------------------------------------
// Line 1: "KCF1 <kind> <dim>" with kind one of toeplitz, diagonal, dense,
// identity; then whitespace-separated values: dim for toeplitz/diagonal,
// dim*dim row-major for dense, none for identity.
struct FactorFile {
  std::string kind;
  int dim = 0;
  Eigen::VectorXd values;
};

FactorFile read_factor_file(const std::string& path);
void write_factor_file(const std::string& path, const FactorFile& f);

// Typed loaders; every loader verifies positive definiteness so that bad
// inputs fail as contract errors, not mid-iteration.
Eigen::MatrixXd load_spatial(const std::string& path);
TemporalFactor load_temporal(const std::string& path);
EpochFactor load_epoch(const std::string& path);

void write_spatial(const std::string& path, const Eigen::MatrixXd& gamma);
void write_temporal(const std::string& path, const TemporalFactor& psi);
void write_epoch(const std::string& path, const EpochFactor& delta);

// --- Fit directory -----------------------------------------------------------
// gamma.kcf + psi.kcf + delta.kcf + fit.json (assumptions, dims, config,
// convergence record, log-likelihood trace, stationarity residual).
struct LoadedFit {
  FactorSet factors;
  AssumptionSet assumptions;
  FitConfig config;
  int n = 0;
  bool converged = false;
  int outer_iters = 0;
  long em_iters_total = 0;
  double g_residual = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> loglik_trace;
};

void save_fit(const std::string& dir, const FitResult& result,
              const AssumptionSet& assumptions, const FitConfig& config, int n);
LoadedFit load_fit(const std::string& dir);

// --- Study config and report -------------------------------------------------
// Config JSON: dims {p,q,r,n}, replicates, seed, truth {gamma,psi,delta
// file paths, relative to the config}, assumption_sets (codes), optional
// fit overrides.
StudyConfig load_study_config(const std::string& path);

// Writes study_report.json and study_report.csv. The JSON carries a
// "reference" block with the published values the study design mirrors.
void write_study_report(const std::string& dir, const StudyReport& report);
std::string study_report_csv(const StudyReport& report);

// --- Validation report ---------------------------------------------------------
struct ValidationReport {
  std::string mode;  // "random" or "consecutive"
  int folds = 4;
  int repeats = 1;
  std::uint64_t seed = 0;
  std::vector<std::vector<int>> subsets;  // 0-based epoch indices
  std::vector<double> values;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation
};

void write_validation_report(const std::string& path, const ValidationReport& rep);

// --- GLM artifacts ---------------------------------------------------------------
// Regressor CSV: header "epoch,value,interpolated", epoch 1-based.
void write_regressor_csv(const std::string& path, const RegressorSeries& series);
RegressorSeries read_regressor_csv(const std::string& path);

// Plain numeric CSV of confounders, one row per epoch; a non-numeric
// first line is treated as a header and skipped.
Eigen::MatrixXd read_confounders_csv(const std::string& path);

struct VoxelTest {
  int voxel = 0;  // 1-based
  FTestResult test;
  bool significant = false;
};

// Voxel CSV: header "voxel,f,df1,df2,p,significant".
void write_voxel_csv(const std::string& path, const std::vector<VoxelTest>& tests);
void write_voxel_summary(const std::string& path, const std::vector<VoxelTest>& tests,
                         double alpha);

// Spectrum CSV: header "freq_hz,power".
void write_spectrum_csv(const std::string& path, const Spectrum& s);

}  // namespace kroncov
