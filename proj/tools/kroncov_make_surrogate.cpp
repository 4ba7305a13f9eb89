// Regenerates the surrogate truth factors and the desk-scale study config
// shipped under configs/. The truth is a *fitted* factor set, produced the
// same way the published analyses obtained theirs: draw data from a
// generator whose temporal covariance is a damped 10 Hz cosine (an
// alpha-like oscillation), whose epoch scales vary smoothly with a 5:1
// spread, and whose spatial factor is a random PD matrix; then fit the
// structured model and keep the normalized estimates. Every draw is keyed
// to fixed seeds, so rerunning this tool reproduces the files bit for bit.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <string>

#include "kroncov/estimator.hpp"
#include "kroncov/factors.hpp"
#include "kroncov/io.hpp"
#include "kroncov/rng.hpp"
#include "kroncov/simulator.hpp"
#include "kroncov/structured.hpp"

using namespace kroncov;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kP = 8, kQ = 16, kR = 64;
constexpr std::uint64_t kGeneratorSeed = 20260825;  // pilot dataset
constexpr std::uint64_t kStudySeed = 7;             // replicate streams
constexpr int kPilotSamples = 8;
constexpr int kReplicates = 20;

Eigen::MatrixXd random_spd(int n, Philox& g) {
  Eigen::MatrixXd a(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) a(i, j) = g.next_gaussian();
  Eigen::MatrixXd m = a * a.transpose() / n + 0.4 * Eigen::MatrixXd::Identity(n, n);
  return m / m(0, 0);
}

FactorSet generator_truth() {
  Philox g(9001);
  FactorSet truth;
  truth.gamma = random_spd(kP, g);

  // Damped 10 Hz cosine autocovariance at an 80 Hz sampling rate: two full
  // oscillation cycles over the 16-sample epoch, decay constant 10 samples.
  const double fs = 80.0, f0 = 10.0, tau = 10.0;
  Eigen::VectorXd row(kQ);
  for (int j = 0; j < kQ; ++j)
    row(j) = std::exp(-j / tau) * std::cos(2.0 * M_PI * f0 * j / fs);
  truth.psi = TemporalFactor::toeplitz(row);
  if (!pd_check(truth.psi.mat).pd)
    throw std::runtime_error("generator temporal factor is not positive definite");

  // Smooth epoch profile with a 5:1 spread between the strongest and the
  // weakest epoch. Starting the profile at its minimum keeps the first
  // epoch (the normalization anchor) distinct from the profile mean, so
  // fits that wrongly assume identity epochs show their temporal-factor
  // scale bias in the per-component report columns.
  Eigen::VectorXd diag(kR);
  for (int d = 0; d < kR; ++d)
    diag(d) = 3.0 - 2.0 * std::cos(2.0 * M_PI * d / kR);
  truth.delta = EpochFactor::diagonal(diag);
  return truth;
}

int sign_changes(const Eigen::VectorXd& v) {
  int changes = 0;
  for (int i = 1; i < v.size(); ++i)
    if (v(i - 1) * v(i) < 0.0) ++changes;
  return changes;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path out_dir = argc > 1 ? argv[1] : "configs";
  try {
    fs::create_directories(out_dir);

    const FactorSet gen = generator_truth();
    const TrialTensor pilot = sample_dataset(gen, kPilotSamples, kGeneratorSeed);

    FitConfig cfg;
    cfg.max_outer_iters = 500;
    cfg.outer_tol = 1e-9;
    cfg.em_max_iters = 200;
    cfg.em_tol = 1e-8;
    const FitResult res = fit(pilot, AssumptionSet::from_code("UTD"), cfg);
    if (!res.converged)
      throw std::runtime_error("pilot fit did not converge; raise the budgets");

    // The study design requires an oscillatory temporal factor and a clearly
    // non-flat epoch profile; refuse to ship anything weaker.
    const double ratio = res.factors.delta.diag.maxCoeff() /
                         res.factors.delta.diag.minCoeff();
    if (ratio < 4.0)
      throw std::runtime_error("fitted epoch spread fell below 4:1");
    if (sign_changes(res.factors.psi.first_row) < 2)
      throw std::runtime_error("fitted temporal factor is not oscillatory");

    write_spatial((out_dir / "surrogate_gamma.kcf").string(), res.factors.gamma);
    write_temporal((out_dir / "surrogate_psi.kcf").string(), res.factors.psi);
    write_epoch((out_dir / "surrogate_delta.kcf").string(), res.factors.delta);

    json study;
    study["dims"] = {{"p", kP}, {"q", kQ}, {"r", kR}, {"n", 1}};
    study["replicates"] = kReplicates;
    study["seed"] = kStudySeed;
    study["truth"] = {{"gamma", "surrogate_gamma.kcf"},
                      {"psi", "surrogate_psi.kcf"},
                      {"delta", "surrogate_delta.kcf"}};
    study["assumption_sets"] = {"UTD", "UPD", "UUD", "UTI", "UUI", "UTU", "UUU"};
    {
      std::ofstream os(out_dir / "study.json");
      if (!os) throw std::runtime_error("cannot write study.json");
      os << study.dump(2) << "\n";
    }

    std::cout << "surrogate truth written to " << out_dir.string() << "\n"
              << "  pilot fit: " << res.outer_iters << " outer iterations, loglik "
              << res.loglik_trace.back() << "\n"
              << "  epoch spread " << ratio << ":1, temporal sign changes "
              << sign_changes(res.factors.psi.first_row) << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "kroncov_make_surrogate: " << e.what() << "\n";
    return 1;
  }
}
