#pragma once

// Command implementations behind the `alrreg` executable. Each command
// returns a process exit status:
//   0 success, 1 usage/config error, 2 data error, 3 convergence failure.

#include "alrreg/criteria.hpp"
#include "alrreg/diagnostics.hpp"
#include "alrreg/model.hpp"
#include "alrreg/sampler.hpp"
#include "alrreg/simplex.hpp"

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace alrreg::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kConvergence = 3 };

/// Global or per-block hyperparameter overrides. Unset entries fall back to
/// N(0, 1000) for coefficients and IG(0.1, 100) for variances.
struct PriorOverrides {
  std::optional<double> a, b2;
  std::optional<double> a_intercept, b2_intercept;
  std::optional<double> a_slope, b2_slope;
  std::optional<double> c, d;

  PriorSpec build(Eigen::Index p, Eigen::Index g) const;
};

struct RunConfig {
  std::string data_path;
  std::vector<std::string> components = {"attack", "block", "serve", "errors"};
  std::vector<std::string> covariates = {"z1", "z2", "z3", "z4"};
  std::vector<ErrorStructure> models = {ErrorStructure::Uncorrelated, ErrorStructure::Correlated};
  PriorOverrides priors;
  ChainConfig chain = default_chain();
  double level = 0.90;
  double psrf_threshold = 1.1;
  std::string out_dir = ".";

  static ChainConfig default_chain();
};

/// Parses "uncorrelated", "correlated" or "both".
std::vector<ErrorStructure> parse_models(const std::string& name);

struct LoadedData {
  CompositionDataset compositions;
  RegressionDataset regression;
  std::vector<std::string> labels;
};

/// Reads component and covariate columns from a CSV file. The last listed
/// component is the ALR reference part.
LoadedData load_data(const std::string& path, const std::vector<std::string>& components,
                     const std::vector<std::string>& covariates);

struct ModelFit {
  ErrorStructure structure;
  std::vector<ChainOutput> chains;
  std::vector<PosteriorSummary> summary;
  CriteriaReport criteria;
};

/// Runs all chains for one model and computes the summary and criteria.
ModelFit fit_model(const RegressionDataset& data, const PriorSpec& priors, ErrorStructure s,
                   const ChainConfig& chain, double level);

void write_summary_csv(std::ostream& os, const std::vector<PosteriorSummary>& summary);
std::vector<PosteriorSummary> read_summary_csv(std::istream& in);

/// iteration,chain,<parameters...>; iteration is the sweep index of each
/// kept draw.
void write_draws_csv(std::ostream& os, const std::vector<ChainOutput>& chains,
                     const ChainConfig& chain);

struct TransformOptions {
  std::string input;
  std::vector<std::string> components;
  std::string output;
};

int cmd_transform(const TransformOptions& opt, std::ostream& log);

/// Writes summary_<model>.csv, criteria_<model>.json, draws_<model>.csv and
/// metadata_<model>.json into out_dir.
int cmd_fit(const RunConfig& cfg, std::ostream& log);

struct SimulateOptions {
  std::string scenario_path;
  ChainConfig chain = desk_chain();
  std::vector<ErrorStructure> models = {ErrorStructure::Uncorrelated, ErrorStructure::Correlated};
  PriorOverrides priors;  // unset c/d default to IG(0.1, 0.01) here
  std::string out_dir = ".";
  std::size_t threads = 0;

  static ChainConfig desk_chain();
};

/// Writes study.csv and study.json into out_dir.
int cmd_simulate(const SimulateOptions& opt, std::ostream& log);

/// Sweep file: {"substitutions": [{"hyperparameter": "b2", "block": "all",
/// "value": 100}, ...]}. hyperparameter is a, b2, c or d; block is all,
/// intercept or slope for a/b2 and all for c/d. Writes
/// sensitivity_<model>.csv into out_dir.
int cmd_sensitivity(const RunConfig& cfg, const std::string& sweep_path, std::ostream& log);

struct Substitution {
  std::string hyperparameter;
  std::string block = "all";
  double value = 0.0;

  std::string label() const;
  /// Throws Error(InvalidConfig) for unknown names or blocks.
  void apply(PriorOverrides& overrides) const;
};

std::vector<Substitution> parse_sweep(const std::string& json_text);

}  // namespace alrreg::cli
