// Acceptance gate. Each criterion below is exercised end to end and prints
// exactly one line:  "criterion N: PASS (...)" or "criterion N: FAIL (...)".
// Run with a criterion number (1-9) to check one, or no arguments for all.
// The process exits nonzero if any requested criterion fails.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "kroncov/estimator.hpp"
#include "kroncov/evaluation.hpp"
#include "kroncov/glm.hpp"
#include "kroncov/io.hpp"
#include "kroncov/parallel.hpp"
#include "kroncov/simulator.hpp"
#include "kroncov/structured.hpp"
#include "kroncov/tensor.hpp"
#include "oracles.hpp"

using namespace kroncov;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string config_dir() { return KRONCOV_CONFIG_DIR; }

const StudyRow& row_of(const StudyReport& rep, const std::string& code) {
  for (const StudyRow& row : rep.rows)
    if (row.code == code) return row;
  throw std::runtime_error("study report has no row for " + code);
}

double rel_diff(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
  const double base = std::max(want.norm(), 1e-300);
  return (got - want).norm() / base;
}

double rel_diff(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

bool nondecreasing_with_slack(const std::vector<double>& v, double rel_slack) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double slack = rel_slack * std::max(1.0, std::abs(v[i - 1]));
    if (v[i] < v[i - 1] - slack) return false;
  }
  return true;
}

TrialTensor random_tensor(int p, int q, int r, int n, std::uint64_t seed) {
  TrialTensor t = TrialTensor::zeros(p, q, r, n);
  Philox g(seed);
  for (double& v : t.values) v = g.next_gaussian();
  return t;
}

// --- criterion 1: assumption-set ordering on the shipped study --------------

bool criterion_1(std::ostringstream& out) {
  const StudyConfig cfg = load_study_config(config_dir() + "/study.json");
  const auto start = std::chrono::steady_clock::now();
  const StudyReport rep = run_study(cfg, /*threads=*/1);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();

  for (const char* code : {"UTD", "UPD", "UUD", "UTI", "UUI"}) {
    const StudyRow& row = row_of(rep, code);
    if (row.ok != cfg.replicates || row.failed != 0) {
      out << code << " had " << row.failed << " failed replicates";
      return false;
    }
  }
  const double utd = row_of(rep, "UTD").mean_mse;
  const double upd = row_of(rep, "UPD").mean_mse;
  const double uud = row_of(rep, "UUD").mean_mse;
  const double uti = row_of(rep, "UTI").mean_mse;
  const double uui = row_of(rep, "UUI").mean_mse;

  out << "mean MSE UTD " << utd << " <= UPD " << upd << " <= UUD " << uud
      << " < UTI " << uti << " <= UUI " << uui << ", UTI/UTD " << uti / utd
      << "x, " << secs << " s single-threaded";
  return utd <= upd && upd <= uud && uud < uti && uti <= uui &&
         uti >= 3.0 * utd && secs < 300.0;
}

// --- criterion 2: more epochs, smaller error ---------------------------------

bool criterion_2(std::ostringstream& out) {
  Philox g(402);
  const Eigen::MatrixXd gamma = oracle::random_pd(4, g);
  const ToeplitzFactor psi = oracle::random_pd_toeplitz(8, g);

  const auto mean_mse_at = [&](int r) {
    FactorSet truth;
    truth.gamma = gamma;
    truth.psi = TemporalFactor::toeplitz(psi);
    truth.delta = EpochFactor::diagonal(oracle::smooth_diagonal(r));
    double acc = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
      const TrialTensor t = sample_dataset(truth, 1, 500, rep);
      acc += mse_total(fit(t, AssumptionSet::from_code("UTD")).factors, truth);
    }
    return acc / 20.0;
  };

  const double at100 = mean_mse_at(100);
  const double at400 = mean_mse_at(400);
  out << "UTD mean MSE " << at400 << " at r=400 vs " << at100 << " at r=100";
  return at400 < at100;
}

// --- criterion 3: ascent and stationarity on random instances ----------------

bool criterion_3(std::ostringstream& out) {
  Philox dims(403);
  FitConfig cfg;
  cfg.max_outer_iters = 3000;
  cfg.outer_tol = 1e-12;
  cfg.factor_tol = 1e-9;
  cfg.em_max_iters = 800;
  cfg.em_tol = 1e-10;

  double worst_gamma = 0.0, worst_delta = 0.0, worst_g = 0.0;
  const AssumptionSet utd = AssumptionSet::from_code("UTD");
  for (int inst = 0; inst < 50; ++inst) {
    // Draw instances with an identification margin (n_tilde >= 2q, npq >= r)
    // so the temporal optimum is an interior stationary point.  At the bare
    // admissibility limit the constrained optimum can sit on the boundary of
    // the positive-definite cone, where the stationarity residual need not
    // vanish for any algorithm.
    int p, q, r, n;
    do {
      p = 1 + static_cast<int>(dims.next_u32() % 4);
      q = 1 + static_cast<int>(dims.next_u32() % 8);
      r = 1 + static_cast<int>(dims.next_u32() % 16);
      n = 1 + static_cast<int>(dims.next_u32() % 2);
    } while (!assumptions_admissible(p, q, r, n, utd) ||
             n * p * r < 2 * q || n * p * q < r);
    // A roomier circulant extension keeps the optimum away from the boundary
    // of the embeddable set; with the minimal order the exact Toeplitz
    // optimum of a noisy small sample is frequently not embeddable at all,
    // in which case the stationarity condition cannot be met.
    cfg.embedding_l = 4 * q + 1;

    Philox g(4030 + inst);
    const FactorSet truth = oracle::random_truth(p, q, r, g);
    const TrialTensor t = sample_dataset(truth, n, 40300, inst);
    const FitResult res = fit(t, utd, cfg);

    if (!res.converged) {
      out << "instance " << inst << " (" << p << "," << q << "," << r << ",n=" << n
          << "): did not converge within budget";
      return false;
    }
    if (!nondecreasing_with_slack(res.loglik_trace, 1e-8)) {
      out << "instance " << inst << " (" << p << "," << q << "," << r << ",n=" << n
          << "): log-likelihood decreased";
      return false;
    }
    worst_gamma = std::max(worst_gamma, gamma_residual(t, res.factors));
    worst_delta = std::max(
        worst_delta, delta_residual(t, res.factors, DeltaAssumption::Diagonal));
    worst_g = std::max(worst_g, res.g_residual / (1e-4 * n * p * r));
  }
  out << "50 instances: max residuals gamma " << worst_gamma << ", delta "
      << worst_delta << " (bound 1e-6); G-residual at " << worst_g
      << " of the 1e-4*n_tilde bound";
  return worst_gamma < 1e-6 && worst_delta < 1e-6 && worst_g < 1.0;
}

// --- criterion 4: dense-oracle equivalence ------------------------------------

bool criterion_4(std::ostringstream& out) {
  Philox g(404);
  double worst = 0.0;
  for (int p = 1; p <= 3; ++p)
    for (int q = 1; q <= 3; ++q)
      for (int r = 1; r <= 3; ++r) {
        const int n = 2;
        const TrialTensor t =
            random_tensor(p, q, r, n, 4040 + 100 * p + 10 * q + r);

        FactorSet f;
        f.gamma = oracle::random_pd(p, g);
        f.psi = TemporalFactor::dense(oracle::random_pd(q, g));
        f.delta = EpochFactor::dense(oracle::random_pd(r, g));
        const Eigen::MatrixXd wg =
            oracle::kron(f.delta.dense(), f.psi.mat).inverse();
        const Eigen::MatrixXd wd =
            oracle::kron(f.psi.mat, f.gamma).inverse();

        // Likelihood-equation updates against materialized weights.
        Eigen::MatrixXd gamma_want = Eigen::MatrixXd::Zero(p, p);
        Eigen::MatrixXd delta_want = Eigen::MatrixXd::Zero(r, r);
        for (int k = 0; k < n; ++k) {
          const Eigen::MatrixXd x = unfold(t, k, UnfoldKind::X).mat;
          const Eigen::MatrixXd z = unfold(t, k, UnfoldKind::Z).mat;
          gamma_want.noalias() += x * wg * x.transpose();
          delta_want.noalias() += z * wd * z.transpose();
        }
        gamma_want /= static_cast<double>(n) * q * r;
        delta_want /= static_cast<double>(n) * p * q;
        worst = std::max(worst, rel_diff(update_gamma(t, f.psi, f.delta),
                                         gamma_want));
        const EpochFactor dd =
            update_delta(t, f.gamma, f.psi, DeltaAssumption::Unrestricted);
        worst = std::max(worst, rel_diff(dd.dense(), delta_want));
        const EpochFactor ddiag =
            update_delta(t, f.gamma, f.psi, DeltaAssumption::Diagonal);
        worst = std::max(
            worst,
            rel_diff(ddiag.dense(),
                     Eigen::MatrixXd(delta_want.diagonal().asDiagonal())));

        // Log-likelihood against the dense Gaussian density.
        double ll_want = 0.0;
        const Eigen::MatrixXd sigma = oracle::covariance(f);
        for (int k = 0; k < n; ++k)
          ll_want += oracle::log_density(oracle::vec_sample(t, k), sigma);
        worst = std::max(worst, rel_diff(log_likelihood(t, f), ll_want));

        // Accuracy metrics against materialized covariances.
        const FactorSet truth = oracle::random_truth(p, q, r, g);
        const Eigen::MatrixXd st = oracle::covariance(truth);
        const double mse_want =
            (sigma - st).squaredNorm() / st.squaredNorm();
        worst = std::max(worst, rel_diff(mse_total(f, truth), mse_want));

        const int m = (r + 1) / 2;
        std::vector<int> subset(m);
        for (int i = 0; i < m; ++i) subset[i] = i;
        const FactorSet sub = oracle::random_truth(p, q, m, g);
        FactorSet restricted = truth;
        restricted.delta = truth.delta.restricted(subset);
        const Eigen::MatrixXd sa = oracle::covariance(sub);
        const Eigen::MatrixXd sb = oracle::covariance(restricted);
        const double val_want = (sa - sb).squaredNorm() / sb.squaredNorm();
        worst = std::max(
            worst, rel_diff(validation_measure(sub, truth, subset), val_want));
      }

  // The closed-form circulant estimate must beat every local competitor.
  double margin = 0.0;
  for (int rep = 0; rep < 3; ++rep) {
    const Eigen::MatrixXd s = oracle::random_pd(8, g);
    const CirculantExtension c = circulant_mle(s);
    const double base = oracle::gaussian_objective(oracle::circulant_dense(c.first_col), s);
    const auto probe = [&](const Eigen::VectorXd& cand) {
      const double obj =
          oracle::gaussian_objective(oracle::circulant_dense(cand), s);
      margin = std::max(margin, base - obj);
    };
    for (int axis = 0; axis <= 4; ++axis)  // free coordinates of order 8
      for (const double step : {0.2, 0.05, 0.01})
        for (const double sign : {1.0, -1.0}) {
          Eigen::VectorXd cand = c.first_col;
          cand(axis) += sign * step;
          if (axis >= 1 && axis <= 3) cand(8 - axis) += sign * step;
          probe(cand);
        }
    for (int dir = 0; dir < 40; ++dir) {
      Eigen::VectorXd delta(8);
      for (int m = 0; m <= 4; ++m) delta(m) = g.next_gaussian();
      for (int m = 1; m <= 3; ++m) delta(8 - m) = delta(m);
      delta /= delta.norm();
      for (const double scale : {0.1, 0.02}) probe(c.first_col + scale * delta);
    }
  }
  out << "worst oracle deviation " << worst
      << " (bound 1e-9); best grid-search improvement " << margin
      << " (bound 1e-10)";
  return worst <= 1e-9 && margin <= 1e-10;
}

// --- criterion 5: EM recovery at q=2 ------------------------------------------

bool criterion_5(std::ostringstream& out) {
  FactorSet truth = FactorSet::identity(1, 2, 100);
  Eigen::VectorXd row(2);
  row << 1.0, 0.5;
  truth.psi = TemporalFactor::toeplitz(row);
  const TrialTensor t = sample_dataset(truth, 100, 424242);  // n_tilde = 1e4

  FitConfig cfg;
  cfg.em_max_iters = 500;
  cfg.em_tol = 1e-12;
  const PsiUpdate pu =
      update_psi(t, Eigen::MatrixXd::Identity(1, 1), EpochFactor::identity(100),
                 PsiAssumption::Toeplitz, cfg, nullptr);

  const double e0 = std::abs(pu.psi.first_row(0) - 1.0);
  const double e1 = std::abs(pu.psi.first_row(1) - 0.5);
  const bool monotone = nondecreasing_with_slack(pu.em_objective, 1e-10);
  out << "psi_hat (" << pu.psi.first_row(0) << ", " << pu.psi.first_row(1)
      << ") vs (1, 0.5), " << pu.em_iters << " EM iterations, objective "
      << (monotone ? "nondecreasing" : "DECREASED");
  return e0 <= 0.05 && e1 <= 0.025 && monotone;
}

// --- criterion 6: sampler covariance ------------------------------------------

bool criterion_6(std::ostringstream& out) {
  Philox g(406);
  const FactorSet truth = oracle::random_truth(2, 3, 2, g);
  const int draws = 100000;
  const TrialTensor t = sample_dataset(truth, draws, 990001);

  Eigen::MatrixXd emp = Eigen::MatrixXd::Zero(12, 12);
  for (int k = 0; k < draws; ++k) {
    const Eigen::VectorXd x = oracle::vec_sample(t, k);
    emp.noalias() += x * x.transpose();
  }
  emp /= static_cast<double>(draws);
  const Eigen::MatrixXd sigma = oracle::covariance(truth);
  const double err = (emp - sigma).norm() / sigma.norm();
  out << "empirical covariance off by " << err << " relative Frobenius (bound 0.03)";
  return err < 0.03;
}

// --- criterion 7: subsample validation on model-true data ----------------------

bool criterion_7(std::ostringstream& out) {
  FactorSet truth;
  truth.gamma = load_spatial(config_dir() + "/surrogate_gamma.kcf");
  truth.psi = load_temporal(config_dir() + "/surrogate_psi.kcf");
  truth.delta = load_epoch(config_dir() + "/surrogate_delta.kcf");
  const TrialTensor t = sample_dataset(truth, 1, 777001);

  const AssumptionSet utd = AssumptionSet::from_code("UTD");
  const FitResult full = fit(t, utd);

  double worst = 0.0;
  int count = 0;
  const auto run_splits = [&](const std::vector<std::vector<int>>& subsets) {
    for (const auto& subset : subsets) {
      const TrialTensor sub = restrict_epochs(t, subset);
      const FitResult sf = fit(sub, utd);
      worst = std::max(worst,
                       validation_measure(sf.factors, full.factors, subset));
      ++count;
    }
  };
  run_splits(split_epochs(t.r, SplitMode::Consecutive));
  run_splits(split_epochs(t.r, SplitMode::Random, 4, 10, 2026));

  out << count << " split values, max " << worst << " (bound 0.1)";
  return count == 44 && worst < 0.1;
}

// --- criterion 8: GLM null calibration -----------------------------------------

bool criterion_8(std::ostringstream& out) {
  const int r = 256, voxels = 1000, runs = 200;
  Philox dg(801);
  RegressorSeries interest;
  interest.values.resize(r);
  for (int e = 0; e < r; ++e)
    interest.values(e) = 2.0 + std::sin(0.15 * e) + 0.3 * dg.next_gaussian();
  interest.interpolated.assign(r, 0);
  const Eigen::MatrixXd conf = oracle::random_matrix(r, 5, dg);
  const Design design = build_design(interest, {0, 1, 2}, conf);

  const auto p_values_for_run = [&](int run) {
    Philox g(802, static_cast<std::uint64_t>(run));
    std::vector<double> p(voxels);
    Eigen::VectorXd y(r);
    for (int v = 0; v < voxels; ++v) {
      for (int e = 0; e < r; ++e) y(e) = g.next_gaussian();
      p[v] = partial_f_test(y, design).p_value;
    }
    return p;
  };

  // Every voxel is null, so the false discovery proportion of a run is 1
  // whenever anything is rejected.
  std::vector<double> fdp(runs);
  parallel_for(runs, 4, [&](std::size_t run) {
    const std::vector<double> p = p_values_for_run(static_cast<int>(run));
    const std::vector<bool> rejected = bh_fdr(p, 0.01);
    const bool any =
        std::any_of(rejected.begin(), rejected.end(), [](bool b) { return b; });
    fdp[run] = any ? 1.0 : 0.0;
  });
  const double mean_fdp =
      std::accumulate(fdp.begin(), fdp.end(), 0.0) / runs;
  const bool ks_ok = oracle::ks_uniform_ok(p_values_for_run(0), 0.01);

  out << "KS uniformity " << (ks_ok ? "passed" : "FAILED") << " at alpha 0.01; "
      << "mean FDP " << mean_fdp << " over " << runs << " runs (bound 0.02)";
  return ks_ok && mean_fdp <= 0.02;
}

// --- criterion 9: published values ride along as reference constants ------------

bool criterion_9(std::ostringstream& out) {
  // Independently re-typed from the published tables; must match the
  // constants embedded in every study report exactly.
  const std::vector<std::string> codes = {"UTD", "UPD", "UUD", "UTI",
                                          "UUI", "UTU", "UUU"};
  const std::vector<double> meg_mse = {1.3e-4, 1.5e-4, 1.8e-4, 1.1e-3,
                                       1.2e-3, 1.72e-2, 1.74e-2};
  const std::vector<double> meg_pct = {100, 115, 139, 846, 924, 1324, 1339};
  const std::vector<double> eeg_mse = {2e-4, 4e-4, 6.8e-4, 1.4e-2,
                                       1.5e-2, 3.7e-2, 3.9e-2};
  const std::vector<double> eeg_pct = {100, 200, 340, 7000, 7500, 18500, 19500};
  const std::vector<double> meg_consec = {0.020, 0.003, 0.013, 0.005};
  const std::vector<double> eeg_consec = {0.054, 0.020, 0.011, 0.044};

  Philox g(409);
  StudyConfig cfg;
  cfg.truth = oracle::random_truth(2, 2, 4, g);
  cfg.n = 4;
  cfg.replicates = 1;
  cfg.seed = 1;
  cfg.sets = {AssumptionSet::from_code("UTD")};
  const StudyReport rep = run_study(cfg, 1);

  const fs::path dir =
      fs::temp_directory_path() / ("kroncov_acc9_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  write_study_report(dir.string(), rep);
  std::ifstream is(dir / "study_report.json");
  const json j = json::parse(is);

  int mismatches = 0;
  const auto expect = [&](const json& got, double want) {
    if (!(got.is_number() && got.get<double>() == want)) ++mismatches;
  };
  const json& ref = j.at("reference");
  for (std::size_t i = 0; i < codes.size(); ++i) {
    expect(ref.at("meg").at("mean_mse").at(codes[i]), meg_mse[i]);
    expect(ref.at("meg").at("pct_of_utd").at(codes[i]), meg_pct[i]);
    expect(ref.at("eeg").at("mean_mse").at(codes[i]), eeg_mse[i]);
    expect(ref.at("eeg").at("pct_of_utd").at(codes[i]), eeg_pct[i]);
  }
  expect(ref.at("meg").at("dims").at("p"), 148);
  expect(ref.at("meg").at("dims").at("q"), 200);
  expect(ref.at("meg").at("dims").at("r"), 509);
  expect(ref.at("eeg").at("dims").at("p"), 59);
  expect(ref.at("eeg").at("dims").at("q"), 256);
  expect(ref.at("eeg").at("dims").at("r"), 577);
  expect(ref.at("meg").at("validation").at("random_mean"), 0.0136);
  expect(ref.at("meg").at("validation").at("random_sd"), 0.015);
  expect(ref.at("eeg").at("validation_subject_s").at("random_mean"), 0.0016);
  expect(ref.at("eeg").at("validation_subject_s").at("random_sd"), 0.0012);
  for (std::size_t i = 0; i < 4; ++i) {
    expect(ref.at("meg").at("validation").at("consecutive").at(i), meg_consec[i]);
    expect(ref.at("eeg").at("validation_subject_s").at("consecutive").at(i),
           eeg_consec[i]);
  }
  expect(ref.at("spearman_alpha_vs_delta").at("subject_s"), 0.218);
  expect(ref.at("spearman_alpha_vs_delta").at("subject_l"), 0.316);

  const std::string csv = study_report_csv(rep);
  const bool header_ok = csv.rfind("set,mean_mse,pct_of_utd,", 0) == 0;

  out << (mismatches == 0 ? "all" : "NOT all")
      << " published reference constants embedded in study reports"
      << (header_ok ? "; CSV carries pct_of_utd" : "; CSV HEADER WRONG");
  return mismatches == 0 && header_ok;
}

bool run_criterion(int c, std::ostringstream& out) {
  switch (c) {
    case 1: return criterion_1(out);
    case 2: return criterion_2(out);
    case 3: return criterion_3(out);
    case 4: return criterion_4(out);
    case 5: return criterion_5(out);
    case 6: return criterion_6(out);
    case 7: return criterion_7(out);
    case 8: return criterion_8(out);
    case 9: return criterion_9(out);
    default: throw std::runtime_error("no such criterion");
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  if (argc > 1) {
    for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
  } else {
    for (int c = 1; c <= 9; ++c) which.push_back(c);
  }

  int failures = 0;
  for (const int c : which) {
    std::ostringstream detail;
    bool ok = false;
    try {
      ok = run_criterion(c, detail);
    } catch (const std::exception& e) {
      detail << "exception: " << e.what();
      ok = false;
    }
    std::cout << "criterion " << c << ": " << (ok ? "PASS" : "FAIL") << " ("
              << detail.str() << ")" << std::endl;
    if (!ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
