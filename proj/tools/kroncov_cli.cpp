// Command-line front end: simulate, study, fit, evaluate, validate,
// regress, spectrum. Exit codes: 0 success, 2 bad input or contract
// violation, 3 numerical failure during estimation.
//
// Epoch and channel indices in flags and emitted files are 1-based; the
// library API underneath is 0-based.

#include <CLI11.hpp>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kroncov/errors.hpp"
#include "kroncov/estimator.hpp"
#include "kroncov/evaluation.hpp"
#include "kroncov/glm.hpp"
#include "kroncov/io.hpp"
#include "kroncov/parallel.hpp"
#include "kroncov/simulator.hpp"
#include "kroncov/structured.hpp"
#include "kroncov/tensor.hpp"

using namespace kroncov;

namespace {

struct SeedOpt {
  std::uint64_t value = 0;
  bool given = false;
};

void add_seed_flag(CLI::App* cmd, SeedOpt& seed) {
  cmd->add_option_function<std::uint64_t>(
         "--seed",
         [&seed](const std::uint64_t& v) {
           seed.value = v;
           seed.given = true;
         },
         "RNG seed (required for commands that generate randomness)");
}

std::vector<int> parse_index_list(const std::string& text, const char* what) {
  std::vector<int> out;
  std::istringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
      out.push_back(v);
    } catch (const std::exception&) {
      throw input_error(std::string(what) + ": cannot parse index '" + token + "'");
    }
  }
  if (out.empty()) throw input_error(std::string(what) + ": empty list");
  return out;
}

std::vector<int> to_zero_based(const std::vector<int>& one_based, const char* what) {
  std::vector<int> out;
  out.reserve(one_based.size());
  for (int v : one_based) {
    if (v < 1) throw input_error(std::string(what) + ": indices are 1-based");
    out.push_back(v - 1);
  }
  return out;
}

FitConfig add_fit_config_flags(CLI::App* cmd, FitConfig defaults,
                               FitConfig* target) {
  *target = defaults;
  cmd->add_option("--max-outer", target->max_outer_iters,
                  "Maximum outer flip-flop iterations");
  cmd->add_option("--outer-tol", target->outer_tol,
                  "Relative log-likelihood change tolerance");
  cmd->add_option("--em-max-iters", target->em_max_iters,
                  "Maximum EM iterations per temporal update");
  cmd->add_option("--em-tol", target->em_tol,
                  "Relative first-row change tolerance for the EM loop");
  cmd->add_option("--embedding-l", target->embedding_l,
                  "Circulant embedding order (0 = minimal 2q-1)");
  cmd->add_option("--factor-tol", target->factor_tol,
                  "Optional extra stop rule on relative factor change (0 = off)");
  return defaults;
}

AssumptionSet parse_assumptions(const std::string& psi, const std::string& delta) {
  AssumptionSet a;
  if (psi == "toeplitz")
    a.psi = PsiAssumption::Toeplitz;
  else if (psi == "persymmetric")
    a.psi = PsiAssumption::Persymmetric;
  else if (psi == "unrestricted")
    a.psi = PsiAssumption::Unrestricted;
  else
    throw input_error("--psi must be toeplitz, persymmetric, or unrestricted");
  if (delta == "diagonal")
    a.delta = DeltaAssumption::Diagonal;
  else if (delta == "identity")
    a.delta = DeltaAssumption::Identity;
  else if (delta == "unrestricted")
    a.delta = DeltaAssumption::Unrestricted;
  else
    throw input_error("--delta must be diagonal, identity, or unrestricted");
  return a;
}

int run_simulate(const std::string& gamma_path, const std::string& psi_path,
                 const std::string& delta_path, int n, const SeedOpt& seed,
                 const std::string& out, bool subtract_average) {
  if (!seed.given) throw input_error("simulate: --seed is required");
  if (n < 1) throw input_error("simulate: --n must be positive");
  FactorSet truth;
  truth.gamma = load_spatial(gamma_path);
  truth.psi = load_temporal(psi_path);
  truth.delta = load_epoch(delta_path);
  TrialTensor t = sample_dataset(truth, n, seed.value);
  if (subtract_average) t = subtract_average_response(t);
  write_kct(out, t);
  std::cout << "simulate: wrote " << out << " with p=" << t.p << " q=" << t.q
            << " r=" << t.r << " n=" << t.n << "\n";
  return 0;
}

int run_study(const std::string& config_path, const std::string& out_dir,
              int threads) {
  if (threads < 1) throw input_error("study: --threads must be positive");
  const StudyConfig cfg = load_study_config(config_path);
  const StudyReport report = run_study(cfg, threads);
  write_study_report(out_dir, report);
  std::cout << study_report_csv(report);
  std::cout << "study: wrote " << out_dir << "/study_report.json\n";
  return 0;
}

int run_fit(const std::string& data_path, const std::string& psi_mode,
            const std::string& delta_mode, const FitConfig& cfg,
            const std::string& out_dir, bool subtract_average) {
  const AssumptionSet a = parse_assumptions(psi_mode, delta_mode);
  TrialTensor t = read_kct(data_path);
  if (subtract_average) t = subtract_average_response(t);
  if (!assumptions_admissible(t.p, t.q, t.r, t.n, a)) {
    std::ostringstream msg;
    msg << "fit: sample size inadmissible for " << a.code() << ": need n >= "
        << sample_size_requirement(t.p, t.q, t.r) << " for the temporal/spatial"
        << " bounds at p=" << t.p << " q=" << t.q << " r=" << t.r
        << ", got n=" << t.n;
    throw input_error(msg.str());
  }
  const FitResult res = fit(t, a, cfg);
  save_fit(out_dir, res, a, cfg, t.n);
  std::cout << "fit(" << a.code() << "): " << (res.converged ? "converged" : "stopped")
            << " after " << res.outer_iters << " outer iterations, loglik "
            << (res.loglik_trace.empty() ? 0.0 : res.loglik_trace.back());
  if (std::isfinite(res.g_residual))
    std::cout << ", g_residual " << res.g_residual;
  std::cout << "\n";
  return 0;
}

int run_evaluate(const std::string& fit_dir, const std::string& gamma_path,
                 const std::string& psi_path, const std::string& delta_path,
                 const std::string& out_json) {
  const LoadedFit lf = load_fit(fit_dir);
  FactorSet truth;
  truth.gamma = load_spatial(gamma_path);
  truth.psi = load_temporal(psi_path);
  truth.delta = load_epoch(delta_path);
  const FactorSet truth_n = normalize(truth);
  const FactorSet est_n = normalize(lf.factors);
  const double total = mse_total(est_n, truth_n);
  const ComponentMse comp = mse_components(est_n, truth_n);
  std::cout << "mse_total " << total << "\nmse_gamma " << comp.gamma
            << "\nmse_psi " << comp.psi << "\nmse_delta " << comp.delta << "\n";
  if (!out_json.empty()) {
    std::ostringstream body;
    body << "{\n  \"mse_total\": " << total << ",\n  \"mse_gamma\": " << comp.gamma
         << ",\n  \"mse_psi\": " << comp.psi
         << ",\n  \"mse_delta\": " << comp.delta << "\n}\n";
    std::ofstream os(out_json);
    if (!os) throw input_error("cannot open '" + out_json + "' for writing");
    os << body.str();
  }
  return 0;
}

int run_validate(const std::string& data_path, const std::string& fit_dir,
                 const std::string& mode_text, int folds, int repeats,
                 const SeedOpt& seed, const std::string& out_path, int threads) {
  if (threads < 1) throw input_error("validate: --threads must be positive");
  SplitMode mode;
  if (mode_text == "random")
    mode = SplitMode::Random;
  else if (mode_text == "consecutive")
    mode = SplitMode::Consecutive;
  else
    throw input_error("validate: --mode must be random or consecutive");
  if (mode == SplitMode::Random && !seed.given)
    throw input_error("validate: --seed is required for random mode");

  const TrialTensor t = read_kct(data_path);
  const LoadedFit lf = load_fit(fit_dir);
  if (lf.factors.p() != t.p || lf.factors.q() != t.q || lf.factors.r() != t.r)
    throw input_error("validate: fit dimensions do not match the data");

  const auto subsets = split_epochs(t.r, mode, folds, repeats, seed.value);
  for (const auto& subset : subsets)
    if (!assumptions_admissible(t.p, t.q, static_cast<int>(subset.size()), t.n,
                                lf.assumptions)) {
      std::ostringstream msg;
      msg << "validate: subset of " << subset.size()
          << " epochs is inadmissible for " << lf.assumptions.code();
      throw input_error(msg.str());
    }

  std::vector<double> values(subsets.size());
  parallel_for(subsets.size(), threads, [&](std::size_t i) {
    const TrialTensor sub = restrict_epochs(t, subsets[i]);
    const FitResult sub_fit = fit(sub, lf.assumptions, lf.config);
    values[i] = validation_measure(sub_fit.factors, lf.factors, subsets[i]);
  });

  ValidationReport rep;
  rep.mode = mode_text;
  rep.folds = folds;
  rep.repeats = mode == SplitMode::Random ? repeats : 1;
  rep.seed = seed.value;
  rep.subsets.reserve(subsets.size());
  for (const auto& subset : subsets) {
    std::vector<int> one_based(subset.size());
    for (std::size_t i = 0; i < subset.size(); ++i) one_based[i] = subset[i] + 1;
    rep.subsets.push_back(std::move(one_based));
  }
  rep.values = values;
  rep.mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  double ss = 0.0;
  for (double v : values) ss += (v - rep.mean) * (v - rep.mean);
  rep.sd = values.size() > 1 ? std::sqrt(ss / (values.size() - 1)) : 0.0;
  write_validation_report(out_path, rep);
  std::cout << "validate(" << mode_text << "): mean " << rep.mean << " sd "
            << rep.sd << " over " << values.size() << " subsets\n";
  return 0;
}

int run_regress(const std::string& fit_dir, const std::string& removed_text,
                const std::string& data_path, const std::string& band_text,
                double fs, const std::string& channels_text,
                const std::string& out_regressor, const std::string& bold_path,
                const std::string& confounders_path, const std::string& shifts_text,
                double fdr_alpha, const std::string& out_voxels,
                const std::string& out_summary, int threads) {
  if (threads < 1) throw input_error("regress: --threads must be positive");
  const bool from_fit = !fit_dir.empty();
  const bool from_data = !data_path.empty();
  if (from_fit == from_data)
    throw input_error(
        "regress: exactly one regressor source required (--fit for the epoch-"
        "variance regressor, --data for the band-power regressor)");

  RegressorSeries interest;
  if (from_fit) {
    const LoadedFit lf = load_fit(fit_dir);
    if (lf.factors.delta.kind == EpochFactor::Kind::Dense)
      throw input_error("regress: fitted epoch factor must be diagonal");
    std::vector<int> removed;
    if (!removed_text.empty())
      removed = to_zero_based(parse_index_list(removed_text, "--removed"),
                              "--removed");
    interest = delta_regressor(lf.factors.delta, removed);
  } else {
    if (band_text.empty() || !(fs > 0.0) || channels_text.empty())
      throw input_error("regress: --data requires --band, --fs, and --channels");
    const TrialTensor t = read_kct(data_path);
    std::istringstream bs(band_text);
    double f_lo = 0.0, f_hi = 0.0;
    char comma = 0;
    if (!(bs >> f_lo >> comma >> f_hi) || comma != ',')
      throw input_error("regress: --band must be lo,hi in Hz");
    const std::vector<int> channels =
        to_zero_based(parse_index_list(channels_text, "--channels"), "--channels");
    interest = alpha_regressor(t, channels, f_lo, f_hi, fs);
  }

  if (out_regressor.empty())
    throw input_error("regress: --out-regressor is required");
  write_regressor_csv(out_regressor, interest);
  std::cout << "regress: wrote " << out_regressor << " (" << interest.values.size()
            << " epochs)\n";

  if (bold_path.empty()) return 0;
  if (out_voxels.empty())
    throw input_error("regress: --out-voxels is required with --bold");

  const TrialTensor bold = read_kct(bold_path);
  if (bold.q != 1 || bold.n != 1)
    throw input_error("regress: BOLD container must have q=1 and n=1");
  if (bold.r != static_cast<int>(interest.values.size()))
    throw input_error("regress: BOLD epoch count does not match the regressor");

  Eigen::MatrixXd confounders(0, 0);
  if (!confounders_path.empty()) {
    confounders = read_confounders_csv(confounders_path);
    if (confounders.rows() != bold.r)
      throw input_error("regress: confounder rows must match epoch count");
  }
  std::vector<int> shifts;
  if (shifts_text.empty())
    shifts.push_back(0);
  else
    shifts = parse_index_list(shifts_text, "--shifts");  // lags may be negative

  const Design design = build_design(interest, shifts, confounders);
  std::vector<VoxelTest> tests(bold.p);
  parallel_for(static_cast<std::size_t>(bold.p), threads, [&](std::size_t v) {
    Eigen::VectorXd y(bold.r);
    for (int d = 0; d < bold.r; ++d)
      y(d) = bold.value(0, d, static_cast<int>(v), 0);
    tests[v].voxel = static_cast<int>(v) + 1;
    tests[v].test = partial_f_test(y, design);
  });
  std::vector<double> pvals(tests.size());
  for (std::size_t i = 0; i < tests.size(); ++i) pvals[i] = tests[i].test.p_value;
  const std::vector<bool> reject = bh_fdr(pvals, fdr_alpha);
  int rejected = 0;
  for (std::size_t i = 0; i < tests.size(); ++i) {
    tests[i].significant = reject[i];
    rejected += reject[i] ? 1 : 0;
  }
  write_voxel_csv(out_voxels, tests);
  if (!out_summary.empty()) write_voxel_summary(out_summary, tests, fdr_alpha);
  std::cout << "regress: " << rejected << "/" << tests.size()
            << " voxels significant at FDR " << fdr_alpha << "\n";
  return 0;
}

int run_spectrum(const std::string& fit_dir, double fs, const std::string& out) {
  if (!(fs > 0.0)) throw input_error("spectrum: --fs must be positive");
  const LoadedFit lf = load_fit(fit_dir);
  if (lf.factors.psi.kind != TemporalFactor::Kind::Toeplitz)
    throw input_error("spectrum: fit must have a Toeplitz temporal factor");
  const Spectrum s =
      spectrum_from_psi(ToeplitzFactor(lf.factors.psi.first_row), fs);
  write_spectrum_csv(out, s);
  std::cout << "spectrum: wrote " << out << " (" << s.freq_hz.size() << " bins)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Three-factor (space x time x epoch) Kronecker covariance tools"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand(
      "simulate", "Draw samples from a three-factor covariance model");
  std::string sim_gamma, sim_psi, sim_delta, sim_out;
  int sim_n = 1;
  bool sim_subtract = false;
  SeedOpt sim_seed;
  simulate->add_option("--gamma", sim_gamma, "Spatial factor file")->required();
  simulate->add_option("--psi", sim_psi, "Temporal factor file")->required();
  simulate->add_option("--delta", sim_delta, "Epoch factor file")->required();
  simulate->add_option("--n", sim_n, "Number of independent samples")->required();
  simulate->add_option("--out", sim_out, "Output data file")->required();
  simulate->add_flag("--subtract-average", sim_subtract,
                     "Remove the average response before writing");
  add_seed_flag(simulate, sim_seed);

  // study
  auto* study = app.add_subcommand(
      "study", "Simulation study over assumption sets (config-driven)");
  std::string study_config, study_out;
  int study_threads = 1;
  study->add_option("--config", study_config, "Study config JSON")->required();
  study->add_option("--out", study_out, "Output directory")->required();
  study->add_option("--threads", study_threads, "Worker threads (default 1)");

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Maximum-likelihood factor estimation");
  std::string fit_data, fit_psi = "toeplitz", fit_delta = "diagonal", fit_out;
  bool fit_subtract = false;
  FitConfig fit_cfg;
  fit_cmd->add_option("--data", fit_data, "Input data file")->required();
  fit_cmd->add_option("--psi", fit_psi,
                      "Temporal assumption: toeplitz|persymmetric|unrestricted");
  fit_cmd->add_option("--delta", fit_delta,
                      "Epoch assumption: diagonal|identity|unrestricted");
  fit_cmd->add_option("--out", fit_out, "Output fit directory")->required();
  fit_cmd->add_flag("--subtract-average", fit_subtract,
                    "Remove the average response before fitting");
  add_fit_config_flags(fit_cmd, FitConfig{}, &fit_cfg);

  // evaluate
  auto* evaluate = app.add_subcommand(
      "evaluate", "Relative squared error of a fit against known factors");
  std::string eval_fit, eval_gamma, eval_psi, eval_delta, eval_out;
  evaluate->add_option("--fit", eval_fit, "Fit directory")->required();
  evaluate->add_option("--truth-gamma", eval_gamma, "True spatial factor")->required();
  evaluate->add_option("--truth-psi", eval_psi, "True temporal factor")->required();
  evaluate->add_option("--truth-delta", eval_delta, "True epoch factor")->required();
  evaluate->add_option("--out", eval_out, "Optional JSON output path");

  // validate
  auto* validate = app.add_subcommand(
      "validate", "Held-out epoch-subset agreement with a full fit");
  std::string val_data, val_fit, val_mode = "random", val_out;
  int val_folds = 4, val_repeats = 10, val_threads = 1;
  SeedOpt val_seed;
  validate->add_option("--data", val_data, "Input data file")->required();
  validate->add_option("--fit", val_fit, "Full-fit directory")->required();
  validate->add_option("--mode", val_mode, "random|consecutive");
  validate->add_option("--folds", val_folds, "Subsets per split (default 4)");
  validate->add_option("--repeats", val_repeats,
                       "Random-mode repetitions (default 10)");
  validate->add_option("--out", val_out, "Report JSON path")->required();
  validate->add_option("--threads", val_threads, "Worker threads (default 1)");
  add_seed_flag(validate, val_seed);

  // regress
  auto* regress = app.add_subcommand(
      "regress", "Epoch regressors and per-voxel partial F-tests");
  std::string reg_fit, reg_removed, reg_data, reg_band, reg_channels;
  std::string reg_out_regressor, reg_bold, reg_confounders, reg_shifts;
  std::string reg_out_voxels, reg_out_summary;
  double reg_fs = 0.0, reg_fdr = 0.01;
  int reg_threads = 1;
  regress->add_option("--fit", reg_fit, "Fit directory (epoch-variance regressor)");
  regress->add_option("--removed", reg_removed,
                      "1-based epochs to interpolate, comma-separated");
  regress->add_option("--data", reg_data, "Data file (band-power regressor)");
  regress->add_option("--band", reg_band, "Band lo,hi in Hz");
  regress->add_option("--fs", reg_fs, "Sampling rate in Hz");
  regress->add_option("--channels", reg_channels,
                      "1-based channels for the band power, comma-separated");
  regress->add_option("--out-regressor", reg_out_regressor, "Regressor CSV path")
      ->required();
  regress->add_option("--bold", reg_bold, "BOLD data file (p=voxels, q=1, n=1)");
  regress->add_option("--confounders", reg_confounders, "Confounder CSV");
  regress->add_option("--shifts", reg_shifts,
                      "Epoch lags of the interest regressor (default 0)");
  regress->add_option("--fdr", reg_fdr, "BH-FDR level (default 0.01)");
  regress->add_option("--out-voxels", reg_out_voxels, "Per-voxel CSV path");
  regress->add_option("--out-summary", reg_out_summary, "Summary JSON path");
  regress->add_option("--threads", reg_threads, "Worker threads (default 1)");

  // spectrum
  auto* spectrum = app.add_subcommand(
      "spectrum", "Power spectrum implied by a fitted Toeplitz temporal factor");
  std::string spec_fit, spec_out;
  double spec_fs = 0.0;
  spectrum->add_option("--fit", spec_fit, "Fit directory")->required();
  spectrum->add_option("--fs", spec_fs, "Sampling rate in Hz")->required();
  spectrum->add_option("--out", spec_out, "Spectrum CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (simulate->parsed())
      return run_simulate(sim_gamma, sim_psi, sim_delta, sim_n, sim_seed, sim_out,
                          sim_subtract);
    if (study->parsed()) return run_study(study_config, study_out, study_threads);
    if (fit_cmd->parsed())
      return run_fit(fit_data, fit_psi, fit_delta, fit_cfg, fit_out, fit_subtract);
    if (evaluate->parsed())
      return run_evaluate(eval_fit, eval_gamma, eval_psi, eval_delta, eval_out);
    if (validate->parsed())
      return run_validate(val_data, val_fit, val_mode, val_folds, val_repeats,
                          val_seed, val_out, val_threads);
    if (regress->parsed())
      return run_regress(reg_fit, reg_removed, reg_data, reg_band, reg_fs,
                         reg_channels, reg_out_regressor, reg_bold,
                         reg_confounders, reg_shifts, reg_fdr, reg_out_voxels,
                         reg_out_summary, reg_threads);
    if (spectrum->parsed()) return run_spectrum(spec_fit, spec_fs, spec_out);
  } catch (const input_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const numeric_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
