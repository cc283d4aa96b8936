#pragma once

// Monte Carlo driver: simulate -> fit -> studentize per replicate and
// design, then aggregate into CSV/JSON result files.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sqmle/config.hpp"
#include "sqmle/levy_samplers.hpp"
#include "sqmle/model.hpp"
#include "sqmle/sqlik.hpp"
#include "sqmle/stable_core.hpp"

namespace sqmle {

struct ExperimentConfig {
  ModelSpec model;  // theta_true is the simulation truth theta_0
  NoiseSpec noise;
  std::vector<Design> designs;
  std::size_t replicates = 200;
  std::uint64_t base_seed = 1;
  double beta_fit = 1.0;
  KernelOptions kernel;
  OptimizerConfig optimizer;
  double level = 0.95;
  double x0 = 0.0;
  int workers = 1;
  bool record_timing = false;
  double failure_threshold = 0.1;

  static ExperimentConfig from_config(const Config& cfg);
  /// Throws UsageError or DomainError.
  void validate() const;
  const Theta& theta0() const { return *model.theta_true; }
};

struct ReplicateRecord {
  std::size_t rep = 0;
  std::size_t design = 0;
  Theta theta_hat;
  std::vector<double> z;   // flat (alpha, gamma)
  std::vector<int> cover;  // 1 when the interval contains theta_0
  bool converged = false;
  double seconds = 0.0;
  std::string error;
};

struct ExperimentResult {
  /// Sorted by (design, rep).
  std::vector<ReplicateRecord> records;
  std::size_t failures = 0;
  double failure_fraction = 0.0;
};

/// Runs every replicate. `order` permutes the execution order of the
/// replicate ids (default 0..L-1); results do not depend on it.
ExperimentResult run_replicates(const ExperimentConfig& cfg,
                                const std::optional<std::vector<std::size_t>>& order = std::nullopt);

/// Column names of replicates.csv for the given parameter dimensions.
std::vector<std::string> replicate_columns(int p_alpha, int p_gamma);
void write_replicates_csv(const ExperimentResult& res, int p_alpha, int p_gamma, std::ostream& os);

/// Per-design aggregation of a replicates.csv stream as JSON text with
/// sorted keys. Non-converged rows are excluded and counted. When
/// theta_ref is given, median absolute errors are included. Throws
/// UsageError on malformed or empty input.
std::string summarize(std::istream& replicates_csv, const std::optional<std::vector<double>>& theta_ref = std::nullopt);

void write_histograms_csv(const ExperimentResult& res, int p_alpha, int p_gamma, std::ostream& os);
void write_boxplot_csv(const ExperimentResult& res, int p_alpha, int p_gamma, std::ostream& os);

/// Runs the experiment and writes replicates.csv, summary.json,
/// histograms.csv and boxplot.csv into out_dir. Throws McFailure (after
/// writing) when the failed fraction exceeds the threshold.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Linear-interpolation sample quantile (type 7) of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double q);

}  // namespace sqmle
