#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kroncov/estimator.hpp"
#include "kroncov/factors.hpp"
#include "kroncov/tensor.hpp"

namespace kroncov {

// Draws n iid samples from the three-factor model: each epoch is
// sqrt(delta_d) * L_gamma E L_psi^T with E a p x q standard normal matrix.
// The epoch factor must be identity or diagonal. Streams keyed by
// (seed, stream) are independent; a fixed key reproduces the data exactly.
TrialTensor sample_dataset(const FactorSet& truth, int n, std::uint64_t seed,
                           std::uint64_t stream = 0);

// Removes the average evoked response: subtracts the mean over all epochs
// and samples from each (channel, time) cell. Idempotent. Requires at
// least two epoch observations (n*r >= 2).
TrialTensor subtract_average_response(const TrialTensor& t);

struct StudyConfig {
  FactorSet truth;
  int n = 1;
  int replicates = 1;
  std::vector<AssumptionSet> sets;
  std::uint64_t seed = 0;
  FitConfig fit;
};

struct StudyRow {
  std::string code;
  int ok = 0;
  int failed = 0;
  double mean_mse = 0.0;
  double pct_of_baseline = 0.0;  // 100 * mean_mse / mean_mse of the UTD row
  double mean_mse_gamma = 0.0;
  double mean_mse_psi = 0.0;
  double mean_mse_delta = 0.0;
  std::vector<double> mses;  // per successful replicate, replicate order
  std::vector<std::string> errors;
};

struct StudyReport {
  int p = 0, q = 0, r = 0, n = 0;
  int replicates = 0;
  std::uint64_t seed = 0;
  std::vector<StudyRow> rows;  // one per assumption set, config order
};

// Simulation study: for each replicate draws one dataset from the truth
// (stream = replicate index) and fits every assumption set, recording the
// relative squared error of the assembled covariance and of the normalized
// factors. Replicates run in parallel; results are identical for any
// thread count. A failed fit is recorded on its row, not propagated.
StudyReport run_study(const StudyConfig& cfg, int threads = 1);

}  // namespace kroncov
