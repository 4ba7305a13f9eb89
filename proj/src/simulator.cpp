#include "kroncov/simulator.hpp"

#include <cmath>
#include <sstream>

#include "kroncov/errors.hpp"
#include "kroncov/evaluation.hpp"
#include "kroncov/parallel.hpp"
#include "kroncov/rng.hpp"
#include "kroncov/structured.hpp"

namespace kroncov {

TrialTensor sample_dataset(const FactorSet& truth, int n, std::uint64_t seed,
                           std::uint64_t stream) {
  if (n < 1) throw input_error("sample_dataset: sample count must be positive");
  if (truth.delta.kind == EpochFactor::Kind::Dense)
    throw input_error("sample_dataset: epoch factor must be identity or diagonal");
  const int p = truth.p(), q = truth.q(), r = truth.r();
  if (truth.delta.diag.minCoeff() <= 0.0)
    throw input_error("sample_dataset: epoch factor must be positive");
  Eigen::LLT<Eigen::MatrixXd> gamma_llt(truth.gamma);
  if (gamma_llt.info() != Eigen::Success)
    throw input_error("sample_dataset: gamma is not positive definite");
  Eigen::LLT<Eigen::MatrixXd> psi_llt(truth.psi.mat);
  if (psi_llt.info() != Eigen::Success)
    throw input_error("sample_dataset: psi is not positive definite");
  const Eigen::MatrixXd lg = gamma_llt.matrixL();
  const Eigen::MatrixXd lp = psi_llt.matrixL();

  TrialTensor t = TrialTensor::zeros(p, q, r, n);
  Philox rng(seed, stream);
  Eigen::MatrixXd e(p, q);
  for (int k = 0; k < n; ++k)
    for (int d = 0; d < r; ++d) {
      // Column-major fill: channel index varies fastest, like the storage.
      for (int j = 0; j < q; ++j)
        for (int i = 0; i < p; ++i) e(i, j) = rng.next_gaussian();
      const double scale = std::sqrt(truth.delta.diag(d));
      const Eigen::MatrixXd x = scale * (lg * e * lp.transpose());
      for (int j = 0; j < q; ++j)
        for (int i = 0; i < p; ++i) t.value(k, d, i, j) = x(i, j);
    }
  return t;
}

TrialTensor subtract_average_response(const TrialTensor& t) {
  t.validate();
  if (static_cast<long long>(t.n) * t.r < 2)
    throw input_error(
        "subtract_average_response: need at least two epoch observations");
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(t.p, t.q);
  for (int k = 0; k < t.n; ++k)
    for (int d = 0; d < t.r; ++d) mean += t.epoch(k, d);
  mean /= static_cast<double>(t.n) * t.r;
  TrialTensor out = t;
  for (int k = 0; k < t.n; ++k)
    for (int d = 0; d < t.r; ++d)
      for (int j = 0; j < t.q; ++j)
        for (int i = 0; i < t.p; ++i) out.value(k, d, i, j) -= mean(i, j);
  return out;
}

StudyReport run_study(const StudyConfig& cfg, int threads) {
  if (cfg.replicates < 1)
    throw input_error("run_study: replicate count must be positive");
  if (cfg.sets.empty())
    throw input_error("run_study: no assumption sets requested");
  const int p = cfg.truth.p(), q = cfg.truth.q(), r = cfg.truth.r();
  for (const AssumptionSet& a : cfg.sets)
    if (!assumptions_admissible(p, q, r, cfg.n, a)) {
      std::ostringstream msg;
      msg << "run_study: sample size inadmissible for " << a.code() << " at p="
          << p << " q=" << q << " r=" << r << " n=" << cfg.n;
      throw input_error(msg.str());
    }

  const FactorSet truth = normalize(cfg.truth);

  struct CellResult {
    bool ok = false;
    double mse = 0.0;
    ComponentMse components;
    std::string error;
  };
  const std::size_t n_sets = cfg.sets.size();
  std::vector<std::vector<CellResult>> cells(
      cfg.replicates, std::vector<CellResult>(n_sets));

  parallel_for(static_cast<std::size_t>(cfg.replicates), threads,
               [&](std::size_t rep) {
                 const TrialTensor data =
                     sample_dataset(truth, cfg.n, cfg.seed, rep);
                 for (std::size_t s = 0; s < n_sets; ++s) {
                   CellResult& cell = cells[rep][s];
                   try {
                     const FitResult res = fit(data, cfg.sets[s], cfg.fit);
                     cell.mse = mse_total(res.factors, truth);
                     cell.components = mse_components(res.factors, truth);
                     cell.ok = true;
                   } catch (const std::exception& e) {
                     std::ostringstream msg;
                     msg << "replicate " << rep << ": " << e.what();
                     cell.error = msg.str();
                   }
                 }
               });

  StudyReport report;
  report.p = p;
  report.q = q;
  report.r = r;
  report.n = cfg.n;
  report.replicates = cfg.replicates;
  report.seed = cfg.seed;
  report.rows.resize(n_sets);
  for (std::size_t s = 0; s < n_sets; ++s) {
    StudyRow& row = report.rows[s];
    row.code = cfg.sets[s].code();
    for (int rep = 0; rep < cfg.replicates; ++rep) {
      const CellResult& cell = cells[rep][s];
      if (!cell.ok) {
        ++row.failed;
        row.errors.push_back(cell.error);
        continue;
      }
      ++row.ok;
      row.mses.push_back(cell.mse);
      row.mean_mse += cell.mse;
      row.mean_mse_gamma += cell.components.gamma;
      row.mean_mse_psi += cell.components.psi;
      row.mean_mse_delta += cell.components.delta;
    }
    if (row.ok > 0) {
      row.mean_mse /= row.ok;
      row.mean_mse_gamma /= row.ok;
      row.mean_mse_psi /= row.ok;
      row.mean_mse_delta /= row.ok;
    }
  }

  // Percent-of-baseline column; the baseline row is UTD when present,
  // otherwise the first row.
  std::size_t base = 0;
  for (std::size_t s = 0; s < n_sets; ++s)
    if (report.rows[s].code == "UTD") {
      base = s;
      break;
    }
  const double base_mse = report.rows[base].mean_mse;
  for (StudyRow& row : report.rows)
    row.pct_of_baseline = base_mse > 0.0 ? 100.0 * row.mean_mse / base_mse : 0.0;
  return report;
}

}  // namespace kroncov
