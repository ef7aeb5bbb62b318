#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "vcmm/errors.hpp"

using namespace vcmm;
using namespace vcmm::cli;

namespace {

void add_fit_flags(CLI::App* cmd, FitOptions& opt, std::string& margins, std::string& copulas) {
  cmd->add_option("--data", opt.data, "data CSV with a header row")->required();
  cmd->add_option("--init", opt.init, "kmeans or file:PATH (1-based labels)");
  cmd->add_option("--seeds", opt.seeds, "number of k-means starts");
  cmd->add_option("--seed", opt.seed, "first k-means seed");
  cmd->add_option("--tol", opt.config.tol, "relative log-likelihood tolerance");
  cmd->add_option("--max-iter", opt.config.max_iter, "maximum ECM iterations");
  cmd->add_option("--trunc", opt.config.ecm_truncation, "vine truncation during ECM (0 = full)");
  cmd->add_option("--final-trunc", opt.config.final_truncation, "vine truncation of the final model (0 = full)");
  cmd->add_option("--margins", margins, "comma separated margin families");
  cmd->add_option("--copulas", copulas, "comma separated copula families");
  cmd->add_option("--labels", opt.labels, "label column name or file:PATH");
  cmd->add_option("--out", opt.out, "output directory");
}

void apply_lists(FitConfig& config, const std::string& margins, const std::string& copulas) {
  if (!margins.empty()) config.margins = parse_margin_list(margins);
  if (!copulas.empty()) config.copulas = parse_copula_list(copulas);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vcmm: clustering with vine copula mixture models"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "generate data from a built-in scenario");
  simulate->add_option("scenario", sim.scenario, "s1, s2 or gauss")->required();
  simulate->add_option("--n", sim.n, "observations per cluster");
  simulate->add_option("--seed", sim.seed, "random seed");
  simulate->add_option("--out", sim.out, "output directory");

  FitOptions fit;
  std::string fit_margins, fit_copulas;
  auto* fitc = app.add_subcommand("fit", "fit a vine copula mixture");
  add_fit_flags(fitc, fit, fit_margins, fit_copulas);
  fitc->add_option("--k", fit.k, "number of components");

  FitOptions sweep;
  std::string sweep_margins, sweep_copulas;
  auto* sweepc = app.add_subcommand("sweep", "fit a range of k and compare BIC");
  add_fit_flags(sweepc, sweep, sweep_margins, sweep_copulas);
  sweepc->add_option("--k-min", sweep.k_min, "smallest number of components")->required();
  sweepc->add_option("--k-max", sweep.k_max, "largest number of components")->required();

  EvaluateOptions ev;
  auto* evaluate = app.add_subcommand("evaluate", "score data under a saved model");
  evaluate->add_option("--model", ev.model, "model.json written by fit")->required();
  evaluate->add_option("--data", ev.data, "data CSV with a header row")->required();
  evaluate->add_option("--labels", ev.labels, "label column name or file:PATH");

  ReplicateOptions rep;
  std::string rep_margins, rep_copulas;
  auto* replicate = app.add_subcommand("replicate", "repeat simulate + fit on a scenario");
  replicate->add_option("scenario", rep.scenario, "s1, s2 or gauss")->required();
  replicate->add_option("--n", rep.n, "observations per cluster");
  replicate->add_option("--reps", rep.reps, "number of replications");
  replicate->add_option("--seed", rep.seed, "seed of the first replication");
  replicate->add_option("--tol", rep.config.tol, "relative log-likelihood tolerance");
  replicate->add_option("--max-iter", rep.config.max_iter, "maximum ECM iterations");
  replicate->add_option("--margins", rep_margins, "comma separated margin families");
  replicate->add_option("--copulas", rep_copulas, "comma separated copula families");
  replicate->add_option("--out", rep.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*simulate) {
      cmd_simulate(sim);
    } else if (*fitc) {
      apply_lists(fit.config, fit_margins, fit_copulas);
      cmd_fit(fit);
    } else if (*sweepc) {
      apply_lists(sweep.config, sweep_margins, sweep_copulas);
      cmd_sweep(sweep);
    } else if (*evaluate) {
      cmd_evaluate(ev);
    } else if (*replicate) {
      apply_lists(rep.config, rep_margins, rep_copulas);
      cmd_replicate(rep);
    }
  } catch (const IngestionError& e) {
    std::cerr << "ingestion error: " << e.what() << '\n';
    return kIngestion;
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return kIngestion;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const InitializationError& e) {
    std::cerr << "initialization error: " << e.what() << '\n';
    return kConvergence;
  } catch (const EmptyComponentError& e) {
    std::cerr << "convergence error: " << e.what() << '\n';
    return kConvergence;
  } catch (const ConvergenceError& e) {
    std::cerr << "convergence error: " << e.what() << '\n';
    return kConvergence;
  } catch (const SelectionError& e) {
    std::cerr << "convergence error: " << e.what() << '\n';
    return kConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOk;
}
