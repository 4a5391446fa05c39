#include "alrreg/cli.hpp"
#include "alrreg/errors.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace alrreg;
using namespace alrreg::cli;

void add_prior_flags(CLI::App* cmd, PriorOverrides& p) {
  cmd->add_option("--prior-a", p.a, "coefficient prior mean (all coefficients)");
  cmd->add_option("--prior-b2", p.b2, "coefficient prior variance (all coefficients)");
  cmd->add_option("--prior-a-intercept", p.a_intercept, "prior mean for intercepts");
  cmd->add_option("--prior-b2-intercept", p.b2_intercept, "prior variance for intercepts");
  cmd->add_option("--prior-a-slope", p.a_slope, "prior mean for slopes");
  cmd->add_option("--prior-b2-slope", p.b2_slope, "prior variance for slopes");
  cmd->add_option("--prior-c", p.c, "inverse-gamma shape for error variances");
  cmd->add_option("--prior-d", p.d, "inverse-gamma scale for error variances");
}

void add_chain_flags(CLI::App* cmd, ChainConfig& c) {
  cmd->add_option("--iterations", c.iterations, "total sweeps per chain")->capture_default_str();
  cmd->add_option("--burn-in", c.burn_in, "discarded sweeps")->capture_default_str();
  cmd->add_option("--thin", c.thin, "keep every thin-th sweep")->capture_default_str();
  cmd->add_option("--chains", c.n_chains, "independent chains")->capture_default_str();
  cmd->add_option("--seed", c.seed, "base seed; chain k uses seed + k")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian regression for compositional responses via the additive log-ratio"};
  app.require_subcommand(1);

  TransformOptions topt;
  auto* transform = app.add_subcommand("transform", "write ALR coordinates of a composition table");
  transform->add_option("--data", topt.input, "input CSV")->required();
  transform->add_option("--components", topt.components, "component columns, reference last")
      ->delimiter(',')
      ->required();
  transform->add_option("--output", topt.output, "output CSV")->required();

  RunConfig fcfg;
  std::string fmodel = "both";
  auto* fit = app.add_subcommand("fit", "fit one or both error structures");
  fit->add_option("--data", fcfg.data_path, "input CSV")->required();
  fit->add_option("--model", fmodel, "uncorrelated, correlated or both")->capture_default_str();
  fit->add_option("--components", fcfg.components, "component columns, reference last")->delimiter(',');
  fit->add_option("--covariates", fcfg.covariates, "covariate columns")->delimiter(',');
  fit->add_option("--level", fcfg.level, "credible interval level")->capture_default_str();
  fit->add_option("--psrf-threshold", fcfg.psrf_threshold, "convergence threshold")->capture_default_str();
  fit->add_option("--out-dir", fcfg.out_dir, "output directory")->capture_default_str();
  add_chain_flags(fit, fcfg.chain);
  add_prior_flags(fit, fcfg.priors);

  SimulateOptions sopt;
  std::string smodel = "both";
  auto* sim = app.add_subcommand("simulate", "repeated-sampling study from a scenario file");
  sim->add_option("--scenario", sopt.scenario_path, "scenario JSON")->required();
  sim->add_option("--model", smodel, "uncorrelated, correlated or both")->capture_default_str();
  sim->add_option("--out-dir", sopt.out_dir, "output directory")->capture_default_str();
  sim->add_option("--threads", sopt.threads, "worker threads, 0 = hardware")->capture_default_str();
  add_chain_flags(sim, sopt.chain);
  add_prior_flags(sim, sopt.priors);

  RunConfig scfg;
  std::string sweep_path, sens_model = "both";
  auto* sens = app.add_subcommand("sensitivity", "refit under one-at-a-time prior substitutions");
  sens->add_option("--data", scfg.data_path, "input CSV")->required();
  sens->add_option("--sweep", sweep_path, "sweep JSON")->required();
  sens->add_option("--model", sens_model, "uncorrelated, correlated or both")->capture_default_str();
  sens->add_option("--components", scfg.components, "component columns, reference last")->delimiter(',');
  sens->add_option("--covariates", scfg.covariates, "covariate columns")->delimiter(',');
  sens->add_option("--level", scfg.level, "credible interval level")->capture_default_str();
  sens->add_option("--out-dir", scfg.out_dir, "output directory")->capture_default_str();
  add_chain_flags(sens, scfg.chain);
  add_prior_flags(sens, scfg.priors);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*transform) return cmd_transform(topt, std::cerr);
    if (*fit) {
      fcfg.models = parse_models(fmodel);
      return cmd_fit(fcfg, std::cerr);
    }
    if (*sim) {
      sopt.models = parse_models(smodel);
      return cmd_simulate(sopt, std::cerr);
    }
    if (*sens) {
      scfg.models = parse_models(sens_model);
      return cmd_sensitivity(scfg, sweep_path, std::cerr);
    }
  } catch (const alrreg::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
