#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "maller/dataset.hpp"

namespace maller {

inline constexpr const char* kLibraryVersion = "0.1.0";

enum class ExperimentKind {
  klein_rase,
  torus_gradient,
  sphere_spectrum,
  interval_spectrum,
  csv_regression,
};

ExperimentKind experiment_from_string(const std::string& name);
std::string to_string(ExperimentKind kind);

/// Resolved experiment configuration. Values mirror the config-file keys; the
/// CLI can override any of them with --set key=value.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::klein_rase;
  int n = 1500;
  int n_test = 10;
  int replications = 20;
  double snrdb = 5.0;
  double sigma_x = 0.0;
  double h_pca = 0.015;
  double grid_lo = 0.0;   // 0 = rule default
  double grid_hi = 0.0;   // 0 = rule default
  int grid_count = 21;
  int block_size = 200;
  std::uint64_t seed = 42;
  int workers = 0;        // 0 = MALLER_WORKERS env, then hardware
  std::string output = "report.json";

  // spectrum experiments
  int sphere_d = 2;
  double h = 0.0;         // 0 = experiment default
  int spectrum_k = 0;     // 0 = experiment default

  // csv_regression
  std::string train_path;
  std::string test_path;
  std::string response;   // name or index; empty = last column
  std::string predictions_path = "predictions.csv";
  int d_override = 0;     // 0 = estimate
  bool normalize = true;
};

/// Flat key = value file with # comments.
ExperimentConfig load_config(const std::string& path);
void apply_override(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value);

struct ReplicationResult {
  int replication = 0;
  double value = 0.0;        // RASE or the experiment's primary metric
  double seconds = 0.0;
  int d_hat = 0;
  std::map<std::string, double> extra;
  bool failed = false;
  std::string error;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<ReplicationResult> replications;
  double mean = 0.0;
  double stddev = 0.0;
  int failures = 0;
  std::map<std::string, double> summary;  // experiment-specific aggregates
  std::string version = kLibraryVersion;

  /// Stable-key-order JSON. Timing fields live under "seconds" keys so
  /// deterministic comparisons can drop them.
  std::string to_json() const;
};

/// Run one experiment; per-replication failures are recorded and excluded,
/// more than 20% failing aborts. Writes the JSON report and any CSV side
/// outputs to the configured paths.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// Entry point behind the `maller` binary. Subcommands: run, fit, spectrum,
/// dim. Returns 0 on success, 1 on usage errors, 2 on runtime failure.
int cli_main(int argc, const char* const* argv);

}  // namespace maller
