// dpt: command-line driver for recursive Bayesian data-pattern tomography.
//
//   dpt bank generate --config cfg.json --out dir
//   dpt run --config cfg.json [--seed S] [--out dir] [--continue-past-stop]
//           [--strict-paper-sigma] [--abs-deviation-shearing] [--hs-variance]
//   dpt baseline --config cfg.json [--seed S] [--out dir]
//   dpt report <run.json | dir>
//
// Exit codes: 0 success, 1 validation error, 2 I/O error, 3 numerical failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "dpt/errors.hpp"
#include "dpt/experiment.hpp"
#include "dpt/pattern_bank.hpp"
#include "dpt/report.hpp"
#include "dpt/run_config.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool continue_past_stop = false;
  bool strict_paper_sigma = false;
  bool abs_deviation = false;
  bool hs_metric = false;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool run_flags) {
  cmd->add_option("--config", opts.config_path, "run configuration (JSON)");
  cmd->add_option("--seed", opts.seed, "override the master seed");
  cmd->add_option("--out", opts.out, "output directory");
  if (run_flags) {
    cmd->add_flag("--continue-past-stop", opts.continue_past_stop, "keep selecting after the stopping rule fires");
    cmd->add_flag("--strict-paper-sigma", opts.strict_paper_sigma,
                  "use the (NF)(N(1-F)+1) variance numerator with a 1e-12 floor");
    cmd->add_flag("--abs-deviation-shearing", opts.abs_deviation,
                  "pick the constraint with the largest |x0| when shearing");
    cmd->add_flag("--hs-variance", opts.hs_metric, "measure posterior spread in the Hilbert-Schmidt metric");
  }
}

dpt::RunConfig resolve_config(const CommonOptions& opts) {
  dpt::RunConfig config = opts.config_path.empty() ? dpt::RunConfig{} : dpt::load_run_config(opts.config_path);
  if (opts.seed) {
    config.seed = *opts.seed;
    config.bank_seed.reset();
    config.signal_seed.reset();
  }
  if (opts.out) config.output_dir = *opts.out;
  if (opts.continue_past_stop) config.continue_past_stop = true;
  if (opts.strict_paper_sigma) config.sigma = dpt::SigmaConvention::strict_paper;
  if (opts.hs_metric) config.variance_metric = dpt::VarianceMetric::hilbert_schmidt;
  if (opts.abs_deviation) config.shearing.rule = dpt::DeviationRule::absolute_x0;
  config.validate();
  return config;
}

void write_json(const nlohmann::json& doc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw dpt::IoError("cannot open for writing: " + path.string());
  out << doc.dump(2) << "\n";
  if (!out) throw dpt::IoError("failed writing: " + path.string());
}

int cmd_bank_generate(const CommonOptions& opts) {
  const auto config = resolve_config(opts);
  const auto lattice = dpt::build_probe_lattice(config.lattice.side_count, config.lattice.spacing,
                                                config.lattice.center);
  const auto bank = dpt::simulate_probe_bank(lattice, lattice.amplitudes, config.probe_copies,
                                             config.effective_bank_seed());
  std::filesystem::create_directories(config.output_dir);
  dpt::save_bank(bank, config.output_dir / "bank.json");
  dpt::export_bank_csv(bank, config.output_dir / "bank.csv");
  std::cout << "wrote " << (config.output_dir / "bank.json").string() << " (" << bank.settings() << " settings x "
            << bank.probes() << " probes, N_p=" << bank.copies << ")\n";
  return 0;
}

int cmd_run(const CommonOptions& opts) {
  const auto config = resolve_config(opts);
  const auto result = dpt::run_reconstruction(config);
  dpt::export_report(result.trace, result.report, config, config.output_dir);
  const auto& r = result.report;
  std::cout << "status=" << dpt::to_string(r.status) << " settings_used=" << r.settings_used
            << " first_stop_step=" << r.first_stop_step << " fidelity=" << r.fidelity
            << " min_eig=" << r.min_eigenvalue << "\n"
            << "wrote " << config.output_dir.string() << "/{run.json,trace.csv,trajectory.csv,frequencies.csv,"
            << "eigenvalues.csv}\n";
  return 0;
}

int cmd_baseline(const CommonOptions& opts) {
  const auto config = resolve_config(opts);
  const auto lattice = dpt::build_probe_lattice(config.lattice.side_count, config.lattice.spacing,
                                                config.lattice.center);
  const auto bank = config.bank_path ? dpt::load_bank(*config.bank_path)
                                     : dpt::simulate_probe_bank(lattice, lattice.amplitudes, config.probe_copies,
                                                                config.effective_bank_seed());
  if (bank.probes() != lattice.size()) throw dpt::DimensionError("bank and lattice disagree on probe count");
  dpt::SignalMeter meter(config.signal, config.signal_copies, config.effective_signal_seed());
  Eigen::VectorXd F(static_cast<Eigen::Index>(bank.settings()));
  for (std::size_t k = 0; k < bank.settings(); ++k) {
    F[static_cast<Eigen::Index>(k)] = meter.measure(k, bank.setting_amplitudes);
  }
  const auto baseline = dpt::lsq_baseline(bank, F);
  const auto est = dpt::assemble_estimator(baseline.coefficients, lattice, config.fock_cutoff);
  const double fid = dpt::fidelity(est.rho, config.signal);
  const double min_eig = dpt::min_eigenvalue(est.rho);

  std::filesystem::create_directories(config.output_dir);
  nlohmann::json doc{{"config", dpt::to_json(config)},
                     {"rank", baseline.rank},
                     {"rank_deficient", baseline.rank_deficient},
                     {"fidelity", fid},
                     {"min_eigenvalue", min_eig},
                     {"coefficients", std::vector<double>(baseline.coefficients.data(),
                                                          baseline.coefficients.data() +
                                                              baseline.coefficients.size())}};
  write_json(doc, config.output_dir / "baseline.json");
  std::cout << "baseline fidelity=" << fid << " min_eig=" << min_eig << " rank=" << baseline.rank
            << (baseline.rank_deficient ? " (rank deficient, regularized solution)" : "") << "\n";
  return 0;
}

int cmd_report(const std::string& target) {
  std::filesystem::path path(target);
  if (std::filesystem::is_directory(path)) path /= "run.json";
  std::cout << dpt::summarize_run(dpt::load_run(path));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recursive Bayesian data-pattern tomography simulator"};
  app.require_subcommand(1);

  CommonOptions bank_opts, run_opts, baseline_opts;
  auto* bank = app.add_subcommand("bank", "probe-pattern bank utilities");
  bank->require_subcommand(1);
  auto* generate = bank->add_subcommand("generate", "simulate a probe-pattern bank");
  add_common(generate, bank_opts, false);

  auto* run = app.add_subcommand("run", "adaptive reconstruction run");
  add_common(run, run_opts, true);

  auto* baseline = app.add_subcommand("baseline", "least-squares fit over all settings");
  add_common(baseline, baseline_opts, false);

  std::string report_target;
  auto* report = app.add_subcommand("report", "summarize a run.json");
  report->add_option("run", report_target, "run.json or output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*generate) return cmd_bank_generate(bank_opts);
    if (*run) return cmd_run(run_opts);
    if (*baseline) return cmd_baseline(baseline_opts);
    if (*report) return cmd_report(report_target);
  } catch (const dpt::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 2;
  } catch (const dpt::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const dpt::Error& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
